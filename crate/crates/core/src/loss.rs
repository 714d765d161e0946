//! Composite 3D box regression loss.
//!
//! `total = alpha * loc + dim + beta * ori`, where `loc` and `dim` sum
//! SmoothL1 over the location and dimension residuals and `ori` is the squared
//! distance between the predicted (sin, cos) pair and the target angle's.

use serde::{Deserialize, Serialize};

use crate::codec::FrustumCode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Location weight.
    pub alpha: f64,
    /// Orientation weight.
    pub beta: f64,
    pub smooth_l1_delta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            smooth_l1_delta: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.alpha >= 0.0 && self.beta >= 0.0 && self.smooth_l1_delta > 0.0 {
            Ok(())
        } else {
            Err(Error::config("loss", format!("invalid weights {self:?}")))
        }
    }
}

/// Ground-truth targets; orientation is carried as an angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeTarget {
    pub du: f64,
    pub dv: f64,
    pub dz: f64,
    pub dh: f64,
    pub dw: f64,
    pub dl: f64,
    pub theta: f64,
}

impl From<&FrustumCode> for CodeTarget {
    fn from(q: &FrustumCode) -> Self {
        Self {
            du: q.du,
            dv: q.dv,
            dz: q.dz,
            dh: q.dh,
            dw: q.dw,
            dl: q.dl,
            theta: q.angle(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub loc: f64,
    pub dim: f64,
    pub ori: f64,
    /// d total / d prediction, in `FrustumCode::to_array` order.
    pub gradient: [f64; 8],
}

pub fn smooth_l1(x: f64, delta: f64) -> f64 {
    if x.abs() < delta {
        0.5 * x * x / delta
    } else {
        x.abs() - 0.5 * delta
    }
}

pub fn smooth_l1_grad(x: f64, delta: f64) -> f64 {
    if x.abs() < delta {
        x / delta
    } else {
        x.signum()
    }
}

pub fn loss_3d(q: &FrustumCode, target: &CodeTarget, w: &LossWeights) -> LossBreakdown {
    let delta = w.smooth_l1_delta;
    let loc_res = [q.du - target.du, q.dv - target.dv, q.dz - target.dz];
    let dim_res = [q.dh - target.dh, q.dw - target.dw, q.dl - target.dl];
    let loc: f64 = loc_res.iter().map(|&r| smooth_l1(r, delta)).sum();
    let dim: f64 = dim_res.iter().map(|&r| smooth_l1(r, delta)).sum();
    let (st, ct) = target.theta.sin_cos();
    let es = q.sin_t - st;
    let ec = q.cos_t - ct;
    let ori = es * es + ec * ec;

    let mut gradient = [0.0; 8];
    for i in 0..3 {
        gradient[i] = w.alpha * smooth_l1_grad(loc_res[i], delta);
        gradient[i + 3] = smooth_l1_grad(dim_res[i], delta);
    }
    gradient[6] = w.beta * 2.0 * es;
    gradient[7] = w.beta * 2.0 * ec;

    LossBreakdown {
        total: w.alpha * loc + dim + w.beta * ori,
        loc,
        dim,
        ori,
        gradient,
    }
}
