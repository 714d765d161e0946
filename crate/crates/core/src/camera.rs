//! Pinhole camera model.
//!
//! Camera frame is x right, y down, z forward along the optical axis. Depth
//! always means the camera-frame z coordinate, not Euclidean range.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub f_u: f64,
    pub f_v: f64,
    pub c_u: f64,
    pub c_v: f64,
    pub width: u32,
    pub height: u32,
}

/// Continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

/// A point in the camera frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CamPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

impl CamPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance from the optical center.
    pub fn range(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl Default for CameraModel {
    /// 1280x720 sensor, 23 mm lens on a 10 µm pitch: 2300 px focal length.
    fn default() -> Self {
        Self {
            f_u: 2300.0,
            f_v: 2300.0,
            c_u: 640.0,
            c_v: 360.0,
            width: 1280,
            height: 720,
        }
    }
}

impl CameraModel {
    pub fn new(f_u: f64, f_v: f64, c_u: f64, c_v: f64, width: u32, height: u32) -> Result<Self> {
        let cam = Self {
            f_u,
            f_v,
            c_u,
            c_v,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Same field of view at a different resolution.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {factor}")));
        }
        Self::new(
            self.f_u * factor,
            self.f_v * factor,
            self.c_u * factor,
            self.c_v * factor,
            (self.width as f64 * factor).round() as u32,
            (self.height as f64 * factor).round() as u32,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.f_u, self.f_v, self.c_u, self.c_v]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("calibration", "non-finite intrinsics"));
        }
        if self.f_u <= 0.0 || self.f_v <= 0.0 {
            return Err(Error::config("calibration.f_u/f_v", "focal lengths must be positive"));
        }
        if self.c_u < 0.0 || self.c_u >= self.width as f64 {
            return Err(Error::config("calibration.c_u", "principal point outside image"));
        }
        if self.c_v < 0.0 || self.c_v >= self.height as f64 {
            return Err(Error::config("calibration.c_v", "principal point outside image"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cam: CameraModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cam.validate()?;
        Ok(cam)
    }

    pub fn project(&self, p: CamPoint) -> Result<PixelPoint> {
        if !(p.z > 0.0) {
            return Err(Error::NonPositiveDepth(p.z));
        }
        Ok(PixelPoint {
            u: self.f_u * p.x / p.z + self.c_u,
            v: self.f_v * p.y / p.z + self.c_v,
        })
    }

    pub fn backproject(&self, px: PixelPoint, z: f64) -> Result<CamPoint> {
        if !(z > 0.0) {
            return Err(Error::NonPositiveDepth(z));
        }
        Ok(CamPoint {
            x: (px.u - self.c_u) * z / self.f_u,
            y: (px.v - self.c_v) * z / self.f_v,
            z,
        })
    }

    /// Ratio of Euclidean range to axis depth along the ray through `px`.
    pub fn range_factor(&self, px: PixelPoint) -> f64 {
        let a = (px.u - self.c_u) / self.f_u;
        let b = (px.v - self.c_v) / self.f_v;
        (1.0 + a * a + b * b).sqrt()
    }

    pub fn contains(&self, px: PixelPoint) -> bool {
        px.u >= 0.0 && px.v >= 0.0 && px.u < self.width as f64 && px.v < self.height as f64
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_to_pi(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = angle - two_pi * ((angle + PI) / two_pi).floor();
    if a <= -PI {
        a += two_pi;
    }
    if a > PI {
        a -= two_pi;
    }
    a
}

/// Converts an observation angle to global yaw about the camera y axis.
pub fn observation_angle_to_yaw(theta_obs: f64, p: CamPoint) -> Result<f64> {
    if !(p.z > 0.0) {
        return Err(Error::NonPositiveDepth(p.z));
    }
    Ok(wrap_to_pi(theta_obs + p.x.atan2(p.z)))
}

/// Inverse of [`observation_angle_to_yaw`].
pub fn yaw_to_observation_angle(yaw: f64, p: CamPoint) -> Result<f64> {
    if !(p.z > 0.0) {
        return Err(Error::NonPositiveDepth(p.z));
    }
    Ok(wrap_to_pi(yaw - p.x.atan2(p.z)))
}
