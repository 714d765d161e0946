//! Frustum-segment box coding.
//!
//! A 3D box is described relative to its 2D detection: the projected location
//! as an offset from the 2D box center in box units, depth as an offset from
//! the triangulated anchor in units of the frustum segment length, dimensions
//! relative to class means, and the observation angle as a (sin, cos) pair.
//!
//! The segment is the depth interval spanned by heights μ_h ± k·σ_h seen at
//! the 2D box's pixel height; it widens linearly with distance, so a fixed
//! code error costs proportionally more meters far away.

use serde::{Deserialize, Serialize};

use crate::camera::{observation_angle_to_yaw, yaw_to_observation_angle, CameraModel, PixelPoint};
use crate::error::{Error, Result};
use crate::scene::{Box2D, Box3D, ObjectClass};

/// Minimum projected height before triangulation is refused, pixels.
pub const EPS_PX: f64 = 1e-3;
/// Floor on the frustum segment length, meters.
pub const D_MIN: f64 = 0.25;
/// Decoded depths at or below this are rejected, meters.
pub const Z_FLOOR: f64 = 0.5;
/// Default segment extent in standard deviations.
pub const DEFAULT_K: f64 = 2.0;

/// The eight regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrustumCode {
    pub du: f64,
    pub dv: f64,
    pub dz: f64,
    pub dh: f64,
    pub dw: f64,
    pub dl: f64,
    pub sin_t: f64,
    pub cos_t: f64,
}

impl FrustumCode {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.du, self.dv, self.dz, self.dh, self.dw, self.dl, self.sin_t, self.cos_t,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            du: a[0],
            dv: a[1],
            dz: a[2],
            dh: a[3],
            dw: a[4],
            dl: a[5],
            sin_t: a[6],
            cos_t: a[7],
        }
    }

    pub fn from_slice(s: &[f64]) -> Result<Self> {
        let a: [f64; 8] = s.try_into().map_err(|_| Error::ShapeMismatch {
            expected: 8,
            actual: s.len(),
        })?;
        Ok(Self::from_array(a))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Observation angle of the (sin, cos) pair.
    pub fn angle(&self) -> f64 {
        self.sin_t.atan2(self.cos_t)
    }
}

/// Depth interval for a 2D box under the class height prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrustumSegment {
    pub z_near: f64,
    pub z_far: f64,
    /// Segment length, floored at [`D_MIN`].
    pub d: f64,
    /// Triangulated depth of a mean-height object.
    pub z_anchor: f64,
}

/// Pinhole depth of an object of height `h` imaged `h_v` pixels tall.
pub fn triangulate_depth(h_v: f64, h: f64, cam: &CameraModel) -> Result<f64> {
    if !(h_v > EPS_PX) {
        return Err(Error::DegenerateBox(h_v));
    }
    if !(h > 0.0) {
        return Err(Error::NonPositiveDimension(h));
    }
    Ok(h * cam.f_v / h_v)
}

pub fn frustum_segment(p: &Box2D, stats: &ObjectClass, k: f64, cam: &CameraModel) -> Result<FrustumSegment> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("segment scale k = {k}")));
    }
    stats.validate()?;
    let mu = stats.dim_mean[0];
    let lo = mu - k * stats.dim_sigma;
    if !(lo > 0.0) {
        return Err(Error::InvalidStats(format!(
            "mu_h - k*sigma_h = {lo} is not positive"
        )));
    }
    let z_near = triangulate_depth(p.h_v, lo, cam)?;
    let z_far = triangulate_depth(p.h_v, mu + k * stats.dim_sigma, cam)?;
    Ok(FrustumSegment {
        z_near,
        z_far,
        d: (z_far - z_near).max(D_MIN),
        z_anchor: triangulate_depth(p.h_v, mu, cam)?,
    })
}

/// Encodes a ground-truth box against its 2D box. The depth anchor uses the
/// box's own height.
pub fn encode(b: &Box3D, p: &Box2D, stats: &ObjectClass, k: f64, cam: &CameraModel) -> Result<FrustumCode> {
    if b.class != p.class || b.class != stats.name {
        return Err(Error::InvalidArgument(format!(
            "class mismatch: box {}, 2D box {}, stats {}",
            b.class, p.class, stats.name
        )));
    }
    if !(p.w_u > 0.0) {
        return Err(Error::DegenerateBox(p.w_u));
    }
    let seg = frustum_segment(p, stats, k, cam)?;
    let proj = cam.project(b.center)?;
    let anchor = triangulate_depth(p.h_v, b.h, cam)?;
    let theta = yaw_to_observation_angle(b.yaw, b.center)?;
    let [mh, mw, ml] = stats.dim_mean;
    let (sin_t, cos_t) = theta.sin_cos();
    Ok(FrustumCode {
        du: (proj.u - p.u) / p.w_u,
        dv: (proj.v - p.v) / p.h_v,
        dz: (b.center.z - anchor) / seg.d,
        dh: (b.h - mh) / mh,
        dw: (b.w - mw) / mw,
        dl: (b.l - ml) / ml,
        sin_t,
        cos_t,
    })
}

/// Decodes a (predicted) code. The depth anchor uses the decoded height.
pub fn decode(q: &FrustumCode, p: &Box2D, stats: &ObjectClass, k: f64, cam: &CameraModel) -> Result<Box3D> {
    let [mh, mw, ml] = stats.dim_mean;
    for f in [q.dh, q.dw, q.dl] {
        if !(1.0 + f > 0.0) {
            return Err(Error::NonPositiveDimension(1.0 + f));
        }
    }
    let (h, w, l) = (mh * (1.0 + q.dh), mw * (1.0 + q.dw), ml * (1.0 + q.dl));
    let seg = frustum_segment(p, stats, k, cam)?;
    let z = q.dz * seg.d + triangulate_depth(p.h_v, h, cam)?;
    if !(z > Z_FLOOR) {
        return Err(Error::NonPositiveDepth(z));
    }
    let px = PixelPoint::new(p.u + q.du * p.w_u, p.v + q.dv * p.h_v);
    let center = cam.backproject(px, z)?;
    let norm = q.sin_t.hypot(q.cos_t);
    let theta = if norm > 0.0 {
        (q.sin_t / norm).atan2(q.cos_t / norm)
    } else {
        0.0
    };
    let yaw = observation_angle_to_yaw(theta, center)?;
    Ok(Box3D {
        class: p.class,
        center,
        h,
        w,
        l,
        yaw,
        score: p.score,
    })
}
