//! Regression head mapping gated crop features and 2D box geometry to a
//! [`FrustumCode`].

mod features;
mod mlp;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use features::{
    extract_features, FeatureSet, FeatureVector, FEATURE_LEN, INTENSITY_LEN, RATIO_OFFSET, SIGNAL_THRESHOLD,
};
pub use mlp::{ForwardCache, MlpParams};
pub use train::{evaluate_loss, history_csv, train, EpochMetrics, LossTerms, Sample, TrainConfig, TrainOutcome, LAYER_SIZES};

use crate::camera::CameraModel;
use crate::codec::{decode, FrustumCode};
use crate::error::{Error, Result};
use crate::ripsim::GatedFrame;
use crate::scene::{Box2D, Box3D, ClassStats};

/// Trained network plus the feature groups it was trained on.
///
/// On disk: `{"layer_sizes": [...], "weights": [[...], ...], "biases": [[...], ...],
/// "feature_set": "full"}` with each weight array row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    #[serde(flatten)]
    pub params: MlpParams,
    #[serde(default)]
    pub feature_set: FeatureSet,
}

impl Model {
    pub fn forward(&self, x: &FeatureVector) -> Result<FrustumCode> {
        let out = self.params.forward(&x.masked(self.feature_set).values)?;
        FrustumCode::from_slice(&out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Model = serde_json::from_str(text).map_err(|e| Error::ModelParse(e.to_string()))?;
        m.params.validate()?;
        if m.params.input_len() != FEATURE_LEN || m.params.output_len() != 8 {
            return Err(Error::ModelParse(format!(
                "expected {FEATURE_LEN} inputs and 8 outputs, got {:?}",
                m.params.layer_sizes
            )));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// A decoded detection with the inputs that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub box3d: Box3D,
    pub box2d: Box2D,
    pub code: FrustumCode,
}

/// Runs the head on one detection whose features are already extracted.
pub fn predict_one(
    model: &Model,
    features: &FeatureVector,
    p: &Box2D,
    stats: &ClassStats,
    k: f64,
    cam: &CameraModel,
) -> Result<Prediction> {
    let code = model.forward(features)?;
    let box3d = decode(&code, p, stats.get(p.class), k, cam)?;
    Ok(Prediction {
        box3d,
        box2d: *p,
        code,
    })
}

/// Runs the head on every 2D box of a frame. Boxes that fail to decode are
/// dropped with a warning.
pub fn predict(
    model: &Model,
    frame: &GatedFrame,
    boxes: &[Box2D],
    stats: &ClassStats,
    k: f64,
    cam: &CameraModel,
) -> Vec<Prediction> {
    boxes
        .iter()
        .filter_map(|p| match predict_one(model, &extract_features(frame, p, cam), p, stats, k, cam) {
            Ok(pred) => Some(pred),
            Err(e) => {
                log::warn!("dropping detection at ({:.1}, {:.1}): {e}", p.u, p.v);
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CamPoint;
    use crate::codec::encode;
    use crate::ripsim::default_gates;
    use crate::scene::{oracle_box2d, ClassName};

    #[test]
    fn empty_boxes_empty_predictions() {
        let model = Model {
            params: MlpParams::zeros(&LAYER_SIZES),
            feature_set: FeatureSet::Full,
        };
        let frame = GatedFrame::filled(8, 8, [0.0; 3], default_gates());
        let cam = CameraModel::new(10.0, 10.0, 4.0, 4.0, 8, 8).unwrap();
        assert!(predict(&model, &frame, &[], &ClassStats::default(), 2.0, &cam).is_empty());
    }

    #[test]
    fn oracle_output_recovers_ground_truth() {
        // A network whose last-layer bias is the exact code and whose weights
        // are zero reproduces the ground-truth box through decode.
        let cam = CameraModel::default();
        let stats = ClassStats::default();
        let gt = Box3D::new(ClassName::Car, CamPoint::new(-2.5, 1.6, 33.0), [1.62, 1.9, 4.1], 0.7);
        let p = oracle_box2d(&gt, &cam).unwrap();
        let code = encode(&gt, &p, stats.get(ClassName::Car), 2.0, &cam).unwrap();
        let mut params = MlpParams::zeros(&LAYER_SIZES);
        params.biases[2] = code.to_array().to_vec();
        let model = Model {
            params,
            feature_set: FeatureSet::Full,
        };
        let frame = GatedFrame::filled(cam.width, cam.height, [0.0; 3], default_gates());
        let out = predict(&model, &frame, &[p], &stats, 2.0, &cam);
        assert_eq!(out.len(), 1);
        let b = out[0].box3d;
        for (a, e) in [b.center.x, b.center.y, b.center.z, b.h, b.w, b.l, b.yaw]
            .iter()
            .zip([gt.center.x, gt.center.y, gt.center.z, gt.h, gt.w, gt.l, gt.yaw])
        {
            assert!((a - e).abs() < 1e-4);
        }
        assert_eq!(b.score, p.score);
    }

    #[test]
    fn undecodable_boxes_are_dropped() {
        let cam = CameraModel::default();
        let mut params = MlpParams::zeros(&LAYER_SIZES);
        params.biases[2][3] = -2.0; // dh = -2 gives a negative height
        let model = Model {
            params,
            feature_set: FeatureSet::Full,
        };
        let p = Box2D::from_bounds(ClassName::Pedestrian, 600.0, 300.0, 640.0, 400.0, 0.9);
        let frame = GatedFrame::filled(cam.width, cam.height, [0.0; 3], default_gates());
        assert!(predict(&model, &frame, &[p], &ClassStats::default(), 2.0, &cam).is_empty());
    }

    #[test]
    fn model_json_round_trip() {
        let params = MlpParams::zeros(&LAYER_SIZES);
        let model = Model {
            params,
            feature_set: FeatureSet::GeometryOnly,
        };
        let back = Model::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        assert!(Model::from_json("{\"layer_sizes\":[3,2]}").is_err());
        let wrong = Model {
            params: MlpParams::zeros(&[5, 8]),
            feature_set: FeatureSet::Full,
        };
        assert!(matches!(Model::from_json(&wrong.to_json()), Err(Error::ModelParse(_))));
    }
}
