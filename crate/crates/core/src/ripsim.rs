//! Gated image formation.
//!
//! A gate integrates the returned laser pulse over a time window. With
//! rectangular gate and pulse the range-intensity profile (RIP) is a trapezoid
//! in range, scaled by an atmospheric term. Measurements add Poisson shot
//! noise and Gaussian read-out noise on top of `albedo * C(r)`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, PixelPoint};
use crate::error::{Error, Result};
use crate::scene::SceneDescription;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Range below which the inverse-square falloff is held constant, meters.
pub const R_EPS: f64 = 0.5;

/// Full scale of the 10-bit sensor.
pub const FULL_SCALE: f64 = 1023.0;

/// Timing and amplitude of one gate/pulse pair. Times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub delay: f64,
    pub gate_duration: f64,
    pub pulse_duration: f64,
    pub gate_amplitude: f64,
    pub pulse_amplitude: f64,
    #[serde(default)]
    pub attenuation_gamma: f64,
    #[serde(default)]
    pub inverse_square: bool,
}

impl GateConfig {
    /// Builds a gate from range-equivalent lengths (meters of one-way range)
    /// and the plateau intensity it should reach.
    pub fn from_ranges(delay_m: f64, gate_m: f64, pulse_m: f64, plateau: f64) -> Self {
        let to_s = 2.0 / SPEED_OF_LIGHT;
        let t_g = gate_m * to_s;
        let t_p = pulse_m * to_s;
        Self {
            delay: delay_m * to_s,
            gate_duration: t_g,
            pulse_duration: t_p,
            gate_amplitude: plateau / t_g.min(t_p),
            pulse_amplitude: 1.0,
            attenuation_gamma: 0.0,
            inverse_square: false,
        }
    }

    /// Same gate with two-way exponential extinction and 1/r² falloff.
    pub fn foggy(mut self, gamma: f64) -> Self {
        self.attenuation_gamma = gamma;
        self.inverse_square = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gate_duration > 0.0
            && self.pulse_duration > 0.0
            && self.delay >= 0.0
            && self.attenuation_gamma >= 0.0
            && self.gate_amplitude >= 0.0
            && self.pulse_amplitude >= 0.0
            && [self.delay, self.gate_duration, self.pulse_duration, self.gate_amplitude, self.pulse_amplitude]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::config("gate", format!("invalid gate parameters {self:?}")))
        }
    }

    /// Plateau value `A * min(t_g, t_p)` of the unattenuated profile.
    pub fn plateau(&self) -> f64 {
        self.gate_amplitude * self.pulse_amplitude * self.gate_duration.min(self.pulse_duration)
    }

    /// Range interval outside of which the profile is exactly zero.
    pub fn support(&self) -> (f64, f64) {
        let half_c = 0.5 * SPEED_OF_LIGHT;
        (
            (self.delay - self.pulse_duration) * half_c,
            (self.delay + self.gate_duration) * half_c,
        )
    }

    /// Range breakpoints of the trapezoid, sorted.
    pub fn breakpoints(&self) -> [f64; 4] {
        let half_c = 0.5 * SPEED_OF_LIGHT;
        let mut b = [
            (self.delay - self.pulse_duration) * half_c,
            (self.delay + self.gate_duration - self.pulse_duration) * half_c,
            self.delay * half_c,
            (self.delay + self.gate_duration) * half_c,
        ];
        b.sort_by(f64::total_cmp);
        b
    }

    /// Atmospheric factor β(r).
    pub fn attenuation(&self, r: f64) -> f64 {
        let ext = (-2.0 * self.attenuation_gamma * r).exp();
        if self.inverse_square {
            let rr = r.max(R_EPS);
            ext / (rr * rr)
        } else {
            ext
        }
    }

    /// Unchecked closed-form profile; `r` must be non-negative.
    #[inline]
    pub(crate) fn rip_unchecked(&self, r: f64) -> f64 {
        let arrival = 2.0 * r / SPEED_OF_LIGHT;
        let open = self.delay;
        let close = self.delay + self.gate_duration;
        let overlap = (close.min(arrival + self.pulse_duration) - open.max(arrival)).max(0.0);
        if overlap == 0.0 {
            return 0.0;
        }
        self.gate_amplitude * self.pulse_amplitude * overlap * self.attenuation(r)
    }
}

/// Closed-form range-intensity profile C(r) of a rectangular gate and pulse.
pub fn rip_value(gate: &GateConfig, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::NegativeRange(r));
    }
    Ok(gate.rip_unchecked(r))
}

/// Default three-slice configuration.
///
/// Gate 1 is a triangle peaking at 0 m and closing at 40 m, gate 2 a triangle
/// over [-12, 102] m peaking at 45 m, gate 3 a trapezoid rising over [40, 45] m
/// and flat to 110 m. At every range in [0, 100] m two profiles are non-zero
/// and at least one of them has a slope, which keeps the normalized ratio
/// vector injective there.
pub fn default_gates() -> [GateConfig; 3] {
    const PLATEAU: f64 = 800.0;
    [
        GateConfig::from_ranges(0.0, 40.0, 40.0, PLATEAU),
        GateConfig::from_ranges(45.0, 57.0, 57.0, PLATEAU),
        GateConfig::from_ranges(45.0, 70.0, 5.0, PLATEAU),
    ]
}

pub fn load_gates(path: &Path) -> Result<[GateConfig; 3]> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let gates: [GateConfig; 3] = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    for g in &gates {
        g.validate()?;
    }
    Ok(gates)
}

/// Sampled profile of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct RipTable {
    pub gate: GateConfig,
    pub r_min: f64,
    pub r_max: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl RipTable {
    pub fn new(gate: GateConfig, r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        if !(r_min >= 0.0 && r_max > r_min && step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "table range [{r_min}, {r_max}] step {step}"
            )));
        }
        let n = ((r_max - r_min) / step + 1e-9).floor() as usize + 1;
        let values = (0..n)
            .map(|i| gate.rip_unchecked(r_min + i as f64 * step))
            .collect();
        Ok(Self {
            gate,
            r_min,
            r_max,
            step,
            values,
        })
    }

    pub fn range_at(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.step
    }
}

/// Three tabulated profiles plus their normalized ratio vectors, used to invert
/// slice intensities into range.
#[derive(Debug, Clone)]
pub struct GateTables {
    pub tables: [RipTable; 3],
    /// Minimum slice sum for an inversion.
    pub tau_sum: f64,
    /// Distance slack within which a second far-away minimum is ambiguous.
    pub ambiguity_tol: f64,
    ratios: Vec<Option<[f64; 3]>>,
}

impl GateTables {
    pub fn new(gates: &[GateConfig; 3], r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        let tables = [
            RipTable::new(gates[0], r_min, r_max, step)?,
            RipTable::new(gates[1], r_min, r_max, step)?,
            RipTable::new(gates[2], r_min, r_max, step)?,
        ];
        let ratios = (0..tables[0].values.len())
            .map(|i| {
                let c = [tables[0].values[i], tables[1].values[i], tables[2].values[i]];
                normalize(c)
            })
            .collect();
        Ok(Self {
            tables,
            tau_sum: 1e-9,
            ambiguity_tol: 1e-9,
            ratios,
        })
    }

    /// Range whose normalized profile ratios are closest to the measurement.
    pub fn depth_from_ratios(&self, z: [f64; 3]) -> Result<f64> {
        let sum: f64 = z.iter().sum();
        if !(sum > self.tau_sum) {
            return Err(Error::InsufficientSignal {
                sum,
                threshold: self.tau_sum,
            });
        }
        let m = [z[0] / sum, z[1] / sum, z[2] / sum];
        let dist = |c: &[f64; 3]| {
            ((m[0] - c[0]).powi(2) + (m[1] - c[1]).powi(2) + (m[2] - c[2]).powi(2)).sqrt()
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.ratios.iter().enumerate() {
            if let Some(c) = c {
                let d = dist(c);
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
        }
        let (bi, bd) = best.ok_or(Error::InsufficientSignal {
            sum: 0.0,
            threshold: self.tau_sum,
        })?;
        let table = &self.tables[0];
        let r_best = table.range_at(bi);
        for (i, c) in self.ratios.iter().enumerate() {
            if let Some(c) = c {
                let r = table.range_at(i);
                if (r - r_best).abs() > 0.5 && dist(c) <= bd + self.ambiguity_tol {
                    return Err(Error::AmbiguousRange {
                        first: r_best,
                        second: r,
                    });
                }
            }
        }
        Ok(r_best)
    }
}

fn normalize(c: [f64; 3]) -> Option<[f64; 3]> {
    let s = c[0] + c[1] + c[2];
    (s > 0.0).then(|| [c[0] / s, c[1] / s, c[2] / s])
}

/// Sensor noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Gaussian read-out noise, intensity units.
    pub read_noise_sigma: f64,
    /// Photo-electrons per intensity unit.
    pub photon_scale: f64,
    pub enable_clipping: bool,
    pub full_scale: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            read_noise_sigma: 2.0,
            photon_scale: 2.0,
            enable_clipping: true,
            full_scale: FULL_SCALE,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.read_noise_sigma >= 0.0) {
            return Err(Error::config("noise.read_noise_sigma", "must be >= 0"));
        }
        if !(self.photon_scale > 0.0) {
            return Err(Error::config("noise.photon_scale", "must be > 0"));
        }
        if !(self.full_scale > 0.0) {
            return Err(Error::config("noise.full_scale", "must be > 0"));
        }
        Ok(())
    }

    /// Adds shot and read noise to a noiseless signal.
    pub fn sample<R: Rng + ?Sized>(&self, signal: f64, rng: &mut R) -> f64 {
        let lambda = signal * self.photon_scale;
        let shot = if lambda > 0.0 {
            // Poisson::new only fails for non-positive or non-finite rates.
            Poisson::new(lambda).map_or(0.0, |p| p.sample(rng)) / self.photon_scale
        } else {
            0.0
        };
        let read = if self.read_noise_sigma > 0.0 {
            Normal::new(0.0, self.read_noise_sigma).map_or(0.0, |n| n.sample(rng))
        } else {
            0.0
        };
        let z = shot + read;
        if self.enable_clipping {
            z.clamp(0.0, self.full_scale).round_ties_even()
        } else {
            z
        }
    }
}

/// One noisy measurement of a lambertian reflector at range `r`.
pub fn measure_pixel<R: Rng + ?Sized>(
    albedo: f64,
    r: f64,
    gate: &GateConfig,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&albedo) {
        return Err(Error::InvalidAlbedo(albedo));
    }
    let c = rip_value(gate, r)?;
    Ok(noise.sample(albedo * c, rng))
}

/// Three simultaneous gated slices, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedFrame {
    pub width: u32,
    pub height: u32,
    pub slices: [Vec<f32>; 3],
    pub seed: u64,
    pub gates: [GateConfig; 3],
    /// True when values are clipped 10-bit integers.
    pub quantized: bool,
}

impl GatedFrame {
    pub fn filled(width: u32, height: u32, values: [f32; 3], gates: [GateConfig; 3]) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            slices: values.map(|v| vec![v; n]),
            seed: 0,
            gates,
            quantized: false,
        }
    }

    #[inline]
    pub fn get(&self, slice: usize, u: u32, v: u32) -> f32 {
        self.slices[slice][v as usize * self.width as usize + u as usize]
    }

    #[inline]
    pub fn set(&mut self, slice: usize, u: u32, v: u32, value: f32) {
        let w = self.width as usize;
        self.slices[slice][v as usize * w + u as usize] = value;
    }

    /// Slice values clipped and rounded to 10-bit integers.
    pub fn quantized_slice(&self, slice: usize) -> Vec<u16> {
        self.slices[slice]
            .iter()
            .map(|&v| (v as f64).clamp(0.0, FULL_SCALE).round_ties_even() as u16)
            .collect()
    }
}

/// Per-pixel surface seen by the camera.
#[derive(Debug, Clone, Copy)]
struct Surface {
    depth: f64,
    range: f64,
    albedo: f64,
}

fn surface_map(scene: &SceneDescription, cam: &CameraModel) -> Result<Vec<Option<Surface>>> {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut map: Vec<Option<Surface>> = vec![None; w * h];
    let center = |i: usize| i as f64 + 0.5;

    if let Some(bg) = scene.background {
        if let Some(range) = bg.range {
            for v in 0..h {
                for u in 0..w {
                    let px = PixelPoint::new(center(u), center(v));
                    let depth = range / cam.range_factor(px);
                    map[v * w + u] = Some(Surface {
                        depth,
                        range,
                        albedo: bg.albedo,
                    });
                }
            }
        }
    }

    if let Some(ground) = scene.ground {
        for v in 0..h {
            let dv = center(v) - cam.c_v;
            if dv <= 0.0 {
                continue;
            }
            let depth = ground.height * cam.f_v / dv;
            for u in 0..w {
                let px = PixelPoint::new(center(u), center(v));
                let slot = &mut map[v * w + u];
                if slot.map_or(true, |s| depth < s.depth) {
                    *slot = Some(Surface {
                        depth,
                        range: depth * cam.range_factor(px),
                        albedo: ground.albedo,
                    });
                }
            }
        }
    }

    for obj in &scene.objects {
        let b = &obj.bbox;
        if !(b.center.z > 0.0) {
            return Err(Error::NonPositiveDepth(b.center.z));
        }
        let (x0, x1, y0, y1) = b.billboard();
        let z = b.center.z;
        let u0 = cam.f_u * x0 / z + cam.c_u;
        let u1 = cam.f_u * x1 / z + cam.c_u;
        let v0 = cam.f_v * y0 / z + cam.c_v;
        let v1 = cam.f_v * y1 / z + cam.c_v;
        // Pixels whose centers fall inside [u0, u1) x [v0, v1).
        let first = |a: f64| (a - 0.5).ceil().max(0.0) as usize;
        let last = |b: f64, n: usize| ((b - 0.5).ceil().max(0.0) as usize).min(n);
        let (pu0, pu1) = (first(u0), last(u1, w));
        let (pv0, pv1) = (first(v0), last(v1, h));
        for v in pv0..pv1 {
            for u in pu0..pu1 {
                let slot = &mut map[v * w + u];
                if slot.map_or(true, |s| z < s.depth) {
                    let px = PixelPoint::new(center(u), center(v));
                    *slot = Some(Surface {
                        depth: z,
                        range: z * cam.range_factor(px),
                        albedo: obj.albedo,
                    });
                }
            }
        }
    }
    Ok(map)
}

/// Per-row RNG substream for one slice of one frame.
pub fn row_rng(seed: u64, slice: usize, row: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((slice as u64) << 32) | row as u64);
    rng
}

/// Renders the three slices of a scene.
///
/// Every pixel sees its nearest surface; all slices share that depth map.
/// With `noise = None` the frame holds the noiseless expected intensities.
pub fn render_frame(
    scene: &SceneDescription,
    gates: &[GateConfig; 3],
    cam: &CameraModel,
    noise: Option<&NoiseConfig>,
    seed: u64,
) -> Result<GatedFrame> {
    for g in gates {
        g.validate()?;
    }
    if let Some(n) = noise {
        n.validate()?;
    }
    let map = surface_map(scene, cam)?;
    let w = cam.width as usize;
    let slices = [0usize, 1, 2].map(|s| {
        let gate = &gates[s];
        let mut out = vec![0f32; map.len()];
        out.par_chunks_mut(w)
            .zip(map.par_chunks(w))
            .enumerate()
            .for_each(|(row, (dst, src))| {
                let mut rng = noise.map(|_| row_rng(seed, s, row as u32));
                for (o, surf) in dst.iter_mut().zip(src) {
                    let signal = surf.map_or(0.0, |sf| sf.albedo * gate.rip_unchecked(sf.range));
                    let value = match (noise, rng.as_mut()) {
                        (Some(n), Some(r)) => n.sample(signal, r),
                        _ => signal,
                    };
                    *o = value as f32;
                }
            });
        out
    });
    Ok(GatedFrame {
        width: cam.width,
        height: cam.height,
        slices,
        seed,
        gates: *gates,
        quantized: noise.is_some_and(|n| n.enable_clipping),
    })
}
