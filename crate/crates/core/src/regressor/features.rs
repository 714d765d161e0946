//! Fixed per-detection features from the gated slices and the 2D box.

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::ripsim::{GatedFrame, FULL_SCALE};
use crate::scene::{Box2D, ClassName};

pub const FEATURE_LEN: usize = 24;
/// Number of leading entries derived from slice intensities.
pub const INTENSITY_LEN: usize = 18;
/// Offset of the normalized slice-ratio triple.
pub const RATIO_OFFSET: usize = 15;
/// Minimum summed slice mean, intensity units, for the ratio triple.
pub const SIGNAL_THRESHOLD: f64 = 3.0;

/// Which feature groups a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    #[default]
    Full,
    /// Intensity statistics and ratios zeroed.
    GeometryOnly,
}

/// Layout:
/// `[0, 15)` per slice: mean, std, top/middle/bottom band means (÷ full scale);
/// `[15, 18)` slice-ratio triple; `[18, 22)` u/W, v/H, w_u/W, h_v/H;
/// `[22, 24)` one-hot (Car, Pedestrian).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_LEN],
    pub signal_present: bool,
}

impl FeatureVector {
    pub fn masked(&self, set: FeatureSet) -> Self {
        let mut out = *self;
        if set == FeatureSet::GeometryOnly {
            out.values[..INTENSITY_LEN].fill(0.0);
        }
        out
    }

    pub fn ratios(&self) -> [f64; 3] {
        [
            self.values[RATIO_OFFSET],
            self.values[RATIO_OFFSET + 1],
            self.values[RATIO_OFFSET + 2],
        ]
    }
}

/// Pixel index range whose centers lie in [a, b), clipped to [0, n).
fn pixel_span(a: f64, b: f64, n: u32) -> (u32, u32) {
    let clip = |x: f64| (x - 0.5).ceil().clamp(0.0, n as f64) as u32;
    let lo = clip(a);
    (lo, clip(b).max(lo))
}

pub fn extract_features(frame: &GatedFrame, p: &Box2D, cam: &CameraModel) -> FeatureVector {
    let mut values = [0.0; FEATURE_LEN];
    let (u0, v0, u1, v1) = p.bounds();
    let (pu0, pu1) = pixel_span(u0, u1, frame.width);
    let (pv0, pv1) = pixel_span(v0, v1, frame.height);
    if pu1 <= pu0 || pv1 <= pv0 {
        return FeatureVector {
            values,
            signal_present: false,
        };
    }
    let rows = (pv1 - pv0) as usize;
    let cols = (pu1 - pu0) as f64;
    let mut means = [0.0; 3];
    for s in 0..3 {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut bands = [0.0; 3];
        let mut band_rows = [0usize; 3];
        for (i, v) in (pv0..pv1).enumerate() {
            let band = i * 3 / rows;
            let mut row_sum = 0.0;
            for u in pu0..pu1 {
                let x = frame.get(s, u, v) as f64;
                row_sum += x;
                sum_sq += x * x;
            }
            sum += row_sum;
            bands[band] += row_sum;
            band_rows[band] += 1;
        }
        let n = rows as f64 * cols;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        means[s] = mean;
        let base = s * 5;
        values[base] = mean / FULL_SCALE;
        values[base + 1] = var.sqrt() / FULL_SCALE;
        for b in 0..3 {
            let m = if band_rows[b] > 0 {
                bands[b] / (band_rows[b] as f64 * cols)
            } else {
                mean
            };
            values[base + 2 + b] = m / FULL_SCALE;
        }
    }
    let total: f64 = means.iter().sum();
    let signal_present = total > SIGNAL_THRESHOLD;
    if signal_present {
        for s in 0..3 {
            values[RATIO_OFFSET + s] = means[s] / total;
        }
    }
    values[18] = p.u / cam.width as f64;
    values[19] = p.v / cam.height as f64;
    values[20] = p.w_u / cam.width as f64;
    values[21] = p.h_v / cam.height as f64;
    values[22] = (p.class == ClassName::Car) as u8 as f64;
    values[23] = (p.class == ClassName::Pedestrian) as u8 as f64;
    FeatureVector {
        values,
        signal_present,
    }
}
