//! Run configuration and the simulate, train, predict, eval and codec-check
//! commands.
//!
//! All randomness derives from one master seed. Frame `id` uses
//! `frame_seed(master, id)`; within a frame the scene sampler, the 2D box
//! jitter and every (slice, row) of the renderer draw from distinct ChaCha8
//! streams of that seed. Training uses `substream(master, TRAIN_STREAM)`
//! mixed with `train.seed`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::codec::{decode, encode, DEFAULT_K};
use crate::dataset::{atomic_write, read_predictions, to_jsonl, DatasetLayout, Label, Manifest, PredictionRecord, Split};
use crate::error::{Error, Result};
use crate::eval::{evaluate_frames, render_bev_svg, EvalConfig, EvalFrame, EvalObject, EvalReport};
use crate::regressor::{
    extract_features, history_csv, predict_one, train, FeatureVector, Model, Prediction, Sample, TrainConfig,
    TrainOutcome,
};
use crate::ripsim::{default_gates, render_frame, GateConfig, GatedFrame, NoiseConfig};
use crate::scene::{oracle_box2d, perturb_box2d, sample_scene, Box2D, ClassStats, SceneConfig, SceneDescription};

/// Stream index of the scene sampler within a frame seed.
pub const SCENE_STREAM: u64 = u64::MAX;
/// Stream index of the 2D box jitter within a frame seed.
pub const BOX_STREAM: u64 = u64::MAX - 1;
/// Substream of the master seed used for training.
pub const TRAIN_STREAM: u64 = 0x7472_6169_6e00_0000;

const SUBSTREAM_DOC: &str = "frame_seed = splitmix64(master ^ splitmix64(frame_id)); \
scene stream 2^64-1, box jitter stream 2^64-2, render stream (slice << 32) | row";

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(master: u64, id: u64) -> u64 {
    splitmix64(master ^ splitmix64(id))
}

pub fn frame_seed(master: u64, frame_id: u64) -> u64 {
    substream(master, frame_id)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitCounts {
    pub train: u64,
    pub val: u64,
    pub test: u64,
}

impl Default for SplitCounts {
    fn default() -> Self {
        Self {
            train: 200,
            val: 40,
            test: 40,
        }
    }
}

impl SplitCounts {
    /// Frame ids of a split; ids run consecutively through train, val, test.
    pub fn ids(&self, split: Split) -> Vec<u64> {
        let (start, n) = match split {
            Split::Train => (0, self.train),
            Split::Val => (self.train, self.val),
            Split::Test => (self.train + self.val, self.test),
        };
        (start..start + n).collect()
    }
}

/// Artifact locations, relative to the output directory unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub metrics: PathBuf,
    pub predictions: PathBuf,
    pub report_json: PathBuf,
    pub report_csv: PathBuf,
    pub bev_dir: PathBuf,
    pub codec_report: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dataset: "dataset".into(),
            model: "model.json".into(),
            metrics: "metrics.csv".into(),
            predictions: "predictions.jsonl".into(),
            report_json: "report.json".into(),
            report_csv: "report.csv".into(),
            bev_dir: "bev".into(),
            codec_report: "codec_check.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub frames: SplitCounts,
    pub camera: CameraModel,
    pub gates: [GateConfig; 3],
    pub scene: SceneConfig,
    pub noise: NoiseConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    /// Frustum half-width in class height standard deviations.
    pub codec_k: f64,
    /// Relative jitter applied to oracle 2D boxes before regression.
    pub box_noise: f64,
    /// Split used by predict and eval.
    pub eval_split: Split,
    pub paths: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: SplitCounts::default(),
            camera: CameraModel::default(),
            gates: default_gates(),
            scene: SceneConfig {
                z_min: 5.0,
                z_max: 85.0,
                terrain_sigma: 0.4,
                ground_albedo: Some(0.3),
                ..SceneConfig::default()
            },
            noise: NoiseConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            codec_k: DEFAULT_K,
            box_noise: 0.0,
            eval_split: Split::Test,
            paths: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.camera
            .validate()
            .map_err(|e| Error::config("camera", e.to_string()))?;
        for (i, g) in self.gates.iter().enumerate() {
            g.validate()
                .map_err(|e| Error::config(format!("gates[{i}]"), e.to_string()))?;
        }
        self.scene.validate()?;
        self.noise.validate()?;
        self.train.validate()?;
        self.eval.validate()?;
        if !(self.codec_k > 0.0 && self.codec_k.is_finite()) {
            return Err(Error::config("codec_k", "must be > 0"));
        }
        if !(self.box_noise >= 0.0 && self.box_noise.is_finite()) {
            return Err(Error::config("box_noise", "must be >= 0"));
        }
        Ok(())
    }

    /// Class statistics, taken from the scene generator's class list.
    pub fn class_stats(&self) -> ClassStats {
        let mut stats = ClassStats::default();
        for c in &self.scene.classes {
            match c.class.name {
                crate::scene::ClassName::Car => stats.car = c.class,
                crate::scene::ClassName::Pedestrian => stats.pedestrian = c.class,
            }
        }
        stats
    }

    /// Training configuration with the seed tied to the master seed.
    pub fn effective_train(&self) -> TrainConfig {
        TrainConfig {
            seed: substream(self.seed, TRAIN_STREAM ^ self.train.seed),
            ..self.train
        }
    }

    pub fn resolve(&self, out: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            out.join(p)
        }
    }

    pub fn layout(&self, out: &Path) -> DatasetLayout {
        DatasetLayout::new(self.resolve(out, &self.paths.dataset))
    }
}

/// Caps the global thread pool at `GFK_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GFK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config("GFK_THREADS", format!("expected a positive integer, got `{v}`")))?;
    // A pool built earlier in the process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// One simulated frame held in memory.
#[derive(Debug, Clone)]
pub struct SimFrame {
    pub id: u64,
    pub scene: SceneDescription,
    pub frame: GatedFrame,
    pub labels: Vec<Label>,
}

/// Samples and renders frame `id`. Objects whose projection misses the
/// image are not labeled.
pub fn simulate_frame(cfg: &RunConfig, id: u64) -> Result<SimFrame> {
    let seed = frame_seed(cfg.seed, id);
    let mut rng = stream_rng(seed, SCENE_STREAM);
    let scene = sample_scene(&cfg.scene, &cfg.camera, id, &mut rng)?;
    let frame = render_frame(&scene, &cfg.gates, &cfg.camera, Some(&cfg.noise), seed)?;
    let labels = scene
        .objects
        .iter()
        .filter_map(|o| match oracle_box2d(&o.bbox, &cfg.camera) {
            Ok(box2d) => Some(Label {
                box3d: o.bbox,
                box2d,
                albedo: o.albedo,
            }),
            Err(e) => {
                log::debug!("frame {id}: unlabeled object ({e})");
                None
            }
        })
        .collect();
    Ok(SimFrame {
        id,
        scene,
        frame,
        labels,
    })
}

/// 2D detector stand-in: the labeled boxes with seeded jitter.
pub fn detector_boxes(cfg: &RunConfig, id: u64, labels: &[Label]) -> Result<Vec<Box2D>> {
    let mut rng = stream_rng(frame_seed(cfg.seed, id), BOX_STREAM);
    labels
        .iter()
        .map(|l| perturb_box2d(&l.box2d, cfg.box_noise, &mut rng))
        .collect()
}

/// Per-frame regression inputs, with the slices already discarded.
#[derive(Debug, Clone)]
pub struct FrameFeatures {
    pub id: u64,
    pub labels: Vec<Label>,
    /// One detector box per label.
    pub boxes: Vec<Box2D>,
    pub features: Vec<FeatureVector>,
}

impl FrameFeatures {
    pub fn from_frame(cfg: &RunConfig, id: u64, frame: &GatedFrame, labels: Vec<Label>) -> Result<Self> {
        let boxes = detector_boxes(cfg, id, &labels)?;
        let features = boxes
            .iter()
            .map(|p| extract_features(frame, p, &cfg.camera))
            .collect();
        Ok(Self {
            id,
            labels,
            boxes,
            features,
        })
    }

    /// Training samples; boxes whose target cannot be encoded are skipped.
    pub fn samples(&self, stats: &ClassStats, k: f64, cam: &CameraModel) -> Vec<Sample> {
        self.labels
            .iter()
            .zip(&self.boxes)
            .zip(&self.features)
            .filter_map(|((l, p), f)| match encode(&l.box3d, p, stats.get(p.class), k, cam) {
                Ok(target) => Some(Sample {
                    features: *f,
                    target,
                    box2d: *p,
                }),
                Err(e) => {
                    log::debug!("frame {}: no target ({e})", self.id);
                    None
                }
            })
            .collect()
    }

    /// Predictions paired with the index of the label they came from.
    pub fn predict(&self, model: &Model, stats: &ClassStats, k: f64, cam: &CameraModel) -> Vec<(usize, Prediction)> {
        self.boxes
            .iter()
            .zip(&self.features)
            .enumerate()
            .filter_map(|(i, (p, f))| match predict_one(model, f, p, stats, k, cam) {
                Ok(pred) => Some((i, pred)),
                Err(e) => {
                    log::warn!("frame {}: dropping detection {i}: {e}", self.id);
                    None
                }
            })
            .collect()
    }

    pub fn eval_frame(&self, preds: &[(usize, Prediction)]) -> EvalFrame {
        EvalFrame {
            frame_id: self.id,
            gts: self.labels.iter().map(Label::eval_object).collect(),
            dets: preds.iter().map(|(_, p)| prediction_object(p)).collect(),
        }
    }
}

pub fn prediction_object(p: &Prediction) -> EvalObject {
    EvalObject {
        box3d: p.box3d,
        box2d: p.box2d,
    }
}

/// Simulates frames in memory and keeps only their features.
pub fn simulate_features(cfg: &RunConfig, ids: &[u64]) -> Result<Vec<FrameFeatures>> {
    cfg.validate()?;
    ids.par_iter()
        .map(|&id| {
            let sim = simulate_frame(cfg, id)?;
            FrameFeatures::from_frame(cfg, id, &sim.frame, sim.labels)
        })
        .collect()
}

fn load_features(cfg: &RunConfig, layout: &DatasetLayout, ids: &[u64], cam: &CameraModel) -> Result<Vec<FrameFeatures>> {
    let gates = layout.read_gates()?;
    let cfg = RunConfig {
        camera: *cam,
        ..cfg.clone()
    };
    ids.par_iter()
        .map(|&id| {
            let frame = layout.read_frame(id, &gates)?;
            let labels = layout.read_labels(id)?;
            FrameFeatures::from_frame(&cfg, id, &frame, labels)
        })
        .collect()
}

fn samples_of(frames: &[FrameFeatures], stats: &ClassStats, k: f64, cam: &CameraModel) -> Vec<Sample> {
    frames.iter().flat_map(|f| f.samples(stats, k, cam)).collect()
}

/// Writes a complete dataset. Re-running with the same config rewrites
/// identical bytes.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let layout = cfg.layout(out);
    fs::create_dir_all(&layout.root).map_err(|e| Error::io(&layout.root, e))?;
    layout.write_calibration(&cfg.camera)?;
    layout.write_gates(&cfg.gates)?;
    let manifest = Manifest {
        seed: cfg.seed,
        train: cfg.frames.ids(Split::Train),
        val: cfg.frames.ids(Split::Val),
        test: cfg.frames.ids(Split::Test),
        substreams: SUBSTREAM_DOC.to_string(),
    };
    let all: Vec<u64> = manifest
        .train
        .iter()
        .chain(&manifest.val)
        .chain(&manifest.test)
        .copied()
        .collect();
    all.par_iter().try_for_each(|&id| {
        let sim = simulate_frame(cfg, id)?;
        layout.write_frame(id, &sim.frame, &sim.labels)
    })?;
    layout.write_manifest(&manifest)?;
    log::info!("simulated {} frames into {}", all.len(), layout.root.display());
    Ok(manifest)
}

/// Trains on the train split, reporting validation loss every epoch.
pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    let layout = cfg.layout(out);
    let manifest = layout.verify()?;
    let cam = layout.read_calibration()?;
    let stats = cfg.class_stats();
    let train_frames = load_features(cfg, &layout, &manifest.train, &cam)?;
    let val_frames = load_features(cfg, &layout, &manifest.val, &cam)?;
    let train_set = samples_of(&train_frames, &stats, cfg.codec_k, &cam);
    let val_set = samples_of(&val_frames, &stats, cfg.codec_k, &cam);
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let outcome = train(&train_set, &val_set, &cfg.effective_train())?;
    atomic_write(&cfg.resolve(out, &cfg.paths.model), outcome.model.to_json().as_bytes())?;
    atomic_write(&cfg.resolve(out, &cfg.paths.metrics), history_csv(&outcome.history).as_bytes())?;
    log::info!(
        "trained on {} samples ({} val), final loss {:.5}",
        train_set.len(),
        val_set.len(),
        outcome.history.last().map_or(f64::NAN, |h| h.train.total)
    );
    Ok(outcome)
}

/// Predicts 3D boxes for every frame of the eval split.
pub fn cmd_predict(cfg: &RunConfig, out: &Path) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    let model = Model::load(&cfg.resolve(out, &cfg.paths.model))?;
    let layout = cfg.layout(out);
    let manifest = layout.verify()?;
    let cam = layout.read_calibration()?;
    let stats = cfg.class_stats();
    let frames = load_features(cfg, &layout, manifest.ids(cfg.eval_split), &cam)?;
    let records: Vec<PredictionRecord> = frames
        .par_iter()
        .map(|f| {
            f.predict(&model, &stats, cfg.codec_k, &cam)
                .iter()
                .map(|(_, p)| PredictionRecord::new(f.id, p))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    atomic_write(&cfg.resolve(out, &cfg.paths.predictions), to_jsonl(&records).as_bytes())?;
    Ok(records)
}

/// Scores the predictions file against the eval split's labels.
pub fn cmd_eval(cfg: &RunConfig, out: &Path, render_bev: bool) -> Result<EvalReport> {
    cfg.validate()?;
    let layout = cfg.layout(out);
    let manifest = layout.verify()?;
    let preds = read_predictions(&cfg.resolve(out, &cfg.paths.predictions))?;
    let ids = manifest.ids(cfg.eval_split);
    let frames: Vec<EvalFrame> = ids
        .iter()
        .map(|&id| {
            Ok(EvalFrame {
                frame_id: id,
                gts: layout.read_labels(id)?.iter().map(Label::eval_object).collect(),
                dets: preds
                    .iter()
                    .filter(|(f, _)| *f == id)
                    .map(|(_, p)| prediction_object(p))
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;
    for (f, _) in &preds {
        if !ids.contains(f) {
            log::warn!("prediction for frame {f} outside the {} split", cfg.eval_split.as_str());
        }
    }
    let report = evaluate_frames(&frames, &cfg.eval)?;
    atomic_write(&cfg.resolve(out, &cfg.paths.report_json), report.to_json().as_bytes())?;
    atomic_write(&cfg.resolve(out, &cfg.paths.report_csv), report.to_csv().as_bytes())?;
    if render_bev {
        let dir = cfg.resolve(out, &cfg.paths.bev_dir);
        let max_depth = cfg.eval.bins.iter().map(|b| b.hi).fold(cfg.scene.z_max, f64::max);
        let half_width = max_depth * (cfg.camera.width as f64 / 2.0) / cfg.camera.f_u;
        frames.par_iter().try_for_each(|f| {
            let path = dir.join(format!("{}.svg", crate::dataset::frame_name(f.frame_id)));
            atomic_write(&path, render_bev_svg(f, max_depth, half_width).as_bytes())
        })?;
    }
    Ok(report)
}

/// Summary statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p05: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            count: v.len(),
            mean,
            std: var.sqrt(),
            min: v[0],
            p05: quantile(&v, 0.05),
            median: quantile(&v, 0.5),
            p95: quantile(&v, 0.95),
            max: v[v.len() - 1],
        }
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecFailure {
    pub frame: u64,
    pub line: usize,
    pub class: String,
    pub kind: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecCheckReport {
    pub records: usize,
    pub checked: usize,
    pub skipped_classes: usize,
    pub max_position_error: f64,
    pub max_dimension_error: f64,
    pub max_yaw_error: f64,
    pub failures: Vec<CodecFailure>,
    pub dz: Summary,
}

/// Encodes and decodes every label of the dataset against its stored 2D box.
pub fn cmd_codec_check(cfg: &RunConfig, out: &Path) -> Result<CodecCheckReport> {
    cfg.validate()?;
    let layout = cfg.layout(out);
    let manifest = layout.verify()?;
    let cam = layout.read_calibration()?;
    let stats = cfg.class_stats();
    let mut report = CodecCheckReport {
        records: 0,
        checked: 0,
        skipped_classes: 0,
        max_position_error: 0.0,
        max_dimension_error: 0.0,
        max_yaw_error: 0.0,
        failures: Vec::new(),
        dz: Summary::default(),
    };
    let mut dz = Vec::new();
    for &id in manifest.train.iter().chain(&manifest.val).chain(&manifest.test) {
        for (line, rec) in layout.read_label_records(id)?.iter().enumerate() {
            report.records += 1;
            let Some(label) = rec.to_label() else {
                log::warn!("frame {id} line {}: skipping unknown class `{}`", line + 1, rec.class);
                report.skipped_classes += 1;
                continue;
            };
            let (b, p) = (label.box3d, label.box2d);
            let result = encode(&b, &p, stats.get(b.class), cfg.codec_k, &cam)
                .and_then(|q| decode(&q, &p, stats.get(b.class), cfg.codec_k, &cam).map(|d| (q, d)));
            match result {
                Ok((q, d)) => {
                    report.checked += 1;
                    dz.push(q.dz);
                    let pos = [d.center.x - b.center.x, d.center.y - b.center.y, d.center.z - b.center.z];
                    let dim = [d.h - b.h, d.w - b.w, d.l - b.l];
                    let max_abs = |v: [f64; 3]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    report.max_position_error = report.max_position_error.max(max_abs(pos));
                    report.max_dimension_error = report.max_dimension_error.max(max_abs(dim));
                    report.max_yaw_error = report
                        .max_yaw_error
                        .max(crate::camera::wrap_to_pi(d.yaw - b.yaw).abs());
                }
                Err(e) => report.failures.push(CodecFailure {
                    frame: id,
                    line: line + 1,
                    class: rec.class.clone(),
                    kind: e.kind().to_string(),
                    error: e.to_string(),
                }),
            }
        }
    }
    report.dz = Summary::of(&dz);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    atomic_write(&cfg.resolve(out, &cfg.paths.codec_report), text.as_bytes())?;
    Ok(report)
}
