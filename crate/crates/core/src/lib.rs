//! Gated-imaging 3D perception toolkit.
//!
//! - [`ripsim`]: range-intensity profiles, Poisson–Gaussian sensor noise and
//!   three-slice gated frame rendering.
//! - [`scene`]: synthetic scenes, ground-truth boxes and oracle 2D boxes.
//! - [`codec`]: frustum-segment encoding of 3D boxes relative to 2D boxes.
//! - [`loss`]: SmoothL1 + orientation regression loss with analytic gradient.
//! - [`regressor`]: a small MLP head trained on gated crop statistics.
//! - [`eval`]: 2D/BEV/3D IoU and distance-binned AP over 40 recall positions.
//! - [`dataset`] and [`pipeline`]: on-disk layout and the simulate → train →
//!   predict → evaluate commands.

pub mod camera;
pub mod codec;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod loss;
pub mod pgm;
pub mod pipeline;
pub mod regressor;
pub mod ripsim;
pub mod scene;

pub use error::{Error, Result};
