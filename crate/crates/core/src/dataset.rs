//! On-disk dataset layout and record formats.
//!
//! ```text
//! <root>/calibration.json
//! <root>/gates.json
//! <root>/manifest.json
//! <root>/frames/<frame_id>/slice_{1,2,3}.pgm
//! <root>/frames/<frame_id>/labels.jsonl
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{CamPoint, CameraModel};
use crate::codec::FrustumCode;
use crate::error::{Error, Result};
use crate::eval::EvalObject;
use crate::pgm::Pgm16;
use crate::regressor::Prediction;
use crate::ripsim::{load_gates, GateConfig, GatedFrame, FULL_SCALE};
use crate::scene::{Box2D, Box3D, ClassName};

/// Writes through a temporary file in the same directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn frame_name(id: u64) -> String {
    format!("{id:06}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
    /// How per-frame random streams derive from the master seed.
    pub substreams: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

impl Manifest {
    pub fn ids(&self, split: Split) -> &[u64] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// One line of `labels.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub class: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
    /// `[u, v, w_u, h_v]`
    pub box2d: [f64; 4],
    pub albedo: f64,
}

/// A parsed label with a known class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub box3d: Box3D,
    pub box2d: Box2D,
    pub albedo: f64,
}

impl Label {
    pub fn eval_object(&self) -> EvalObject {
        EvalObject {
            box3d: self.box3d,
            box2d: self.box2d,
        }
    }
}

impl LabelRecord {
    pub fn from_label(l: &Label) -> Self {
        let b = &l.box3d;
        Self {
            class: b.class.to_string(),
            x: b.center.x,
            y: b.center.y,
            z: b.center.z,
            h: b.h,
            w: b.w,
            l: b.l,
            yaw: b.yaw,
            box2d: [l.box2d.u, l.box2d.v, l.box2d.w_u, l.box2d.h_v],
            albedo: l.albedo,
        }
    }

    /// `None` for classes this toolkit does not model.
    pub fn to_label(&self) -> Option<Label> {
        let class: ClassName = self.class.parse().ok()?;
        let [u, v, w_u, h_v] = self.box2d;
        Some(Label {
            box3d: Box3D::new(class, CamPoint::new(self.x, self.y, self.z), [self.h, self.w, self.l], self.yaw),
            box2d: Box2D {
                class,
                u,
                v,
                w_u,
                h_v,
                score: 1.0,
            },
            albedo: self.albedo,
        })
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub frame: u64,
    pub class: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
    pub score: f64,
    pub box2d: [f64; 4],
    pub code: [f64; 8],
}

impl PredictionRecord {
    pub fn new(frame: u64, p: &Prediction) -> Self {
        let b = &p.box3d;
        Self {
            frame,
            class: b.class.to_string(),
            x: b.center.x,
            y: b.center.y,
            z: b.center.z,
            h: b.h,
            w: b.w,
            l: b.l,
            yaw: b.yaw,
            score: b.score,
            box2d: [p.box2d.u, p.box2d.v, p.box2d.w_u, p.box2d.h_v],
            code: p.code.to_array(),
        }
    }

    pub fn to_prediction(&self) -> Option<Prediction> {
        let class: ClassName = self.class.parse().ok()?;
        let [u, v, w_u, h_v] = self.box2d;
        let mut box3d = Box3D::new(class, CamPoint::new(self.x, self.y, self.z), [self.h, self.w, self.l], self.yaw);
        box3d.score = self.score;
        Some(Prediction {
            box3d,
            box2d: Box2D {
                class,
                u,
                v,
                w_u,
                h_v,
                score: self.score,
            },
            code: FrustumCode::from_array(self.code),
        })
    }
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses JSON lines; blank lines are skipped.
pub fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a predictions file, skipping unknown classes with a warning.
pub fn read_predictions(path: &Path) -> Result<Vec<(u64, Prediction)>> {
    let records: Vec<PredictionRecord> = parse_jsonl(path, &read_text(path)?)?;
    Ok(records
        .iter()
        .filter_map(|r| match r.to_prediction() {
            Some(p) => Some((r.frame, p)),
            None => {
                log::warn!("{}: skipping unknown class `{}`", path.display(), r.class);
                None
            }
        })
        .collect())
}

/// Paths of a dataset rooted at `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetLayout {
    pub root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn calibration(&self) -> PathBuf {
        self.root.join("calibration.json")
    }

    pub fn gates(&self) -> PathBuf {
        self.root.join("gates.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn frame_dir(&self, id: u64) -> PathBuf {
        self.root.join("frames").join(frame_name(id))
    }

    pub fn slice(&self, id: u64, slice: usize) -> PathBuf {
        self.frame_dir(id).join(format!("slice_{}.pgm", slice + 1))
    }

    pub fn labels(&self, id: u64) -> PathBuf {
        self.frame_dir(id).join("labels.jsonl")
    }

    pub fn write_calibration(&self, cam: &CameraModel) -> Result<()> {
        let text = serde_json::to_string_pretty(cam).expect("camera serializes");
        atomic_write(&self.calibration(), text.as_bytes())
    }

    pub fn write_gates(&self, gates: &[GateConfig; 3]) -> Result<()> {
        let text = serde_json::to_string_pretty(gates).expect("gates serialize");
        atomic_write(&self.gates(), text.as_bytes())
    }

    pub fn write_manifest(&self, m: &Manifest) -> Result<()> {
        let text = serde_json::to_string_pretty(m).expect("manifest serializes");
        atomic_write(&self.manifest(), text.as_bytes())
    }

    pub fn read_calibration(&self) -> Result<CameraModel> {
        CameraModel::load(&self.calibration())
    }

    pub fn read_gates(&self) -> Result<[GateConfig; 3]> {
        load_gates(&self.gates())
    }

    pub fn read_manifest(&self) -> Result<Manifest> {
        let path = self.manifest();
        serde_json::from_str(&read_text(&path)?).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write_frame(&self, id: u64, frame: &GatedFrame, labels: &[Label]) -> Result<()> {
        for s in 0..3 {
            let img = Pgm16::new(frame.width, frame.height, FULL_SCALE as u16, frame.quantized_slice(s))?;
            atomic_write(&self.slice(id, s), &img.encode())?;
        }
        let records: Vec<LabelRecord> = labels.iter().map(LabelRecord::from_label).collect();
        atomic_write(&self.labels(id), to_jsonl(&records).as_bytes())
    }

    pub fn read_frame(&self, id: u64, gates: &[GateConfig; 3]) -> Result<GatedFrame> {
        let mut slices: [Vec<f32>; 3] = Default::default();
        let mut dims = None;
        for (s, out) in slices.iter_mut().enumerate() {
            let path = self.slice(id, s);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let img = Pgm16::decode(&bytes).map_err(|e| Error::Pgm(format!("{}: {e}", path.display())))?;
            match dims {
                None => dims = Some((img.width, img.height)),
                Some(d) if d != (img.width, img.height) => {
                    return Err(Error::Pgm(format!("{}: slice size mismatch", path.display())));
                }
                _ => {}
            }
            *out = img.data.iter().map(|&v| v as f32).collect();
        }
        let (width, height) = dims.unwrap_or((0, 0));
        Ok(GatedFrame {
            width,
            height,
            slices,
            seed: 0,
            gates: *gates,
            quantized: true,
        })
    }

    pub fn read_label_records(&self, id: u64) -> Result<Vec<LabelRecord>> {
        let path = self.labels(id);
        parse_jsonl(&path, &read_text(&path)?)
    }

    /// Labels of known classes; others are skipped with a warning.
    pub fn read_labels(&self, id: u64) -> Result<Vec<Label>> {
        let path = self.labels(id);
        Ok(self
            .read_label_records(id)?
            .iter()
            .filter_map(|r| {
                let l = r.to_label();
                if l.is_none() {
                    log::warn!("{}: skipping unknown class `{}`", path.display(), r.class);
                }
                l
            })
            .collect())
    }

    /// Checks every manifest frame resolves to a complete directory.
    pub fn verify(&self) -> Result<Manifest> {
        self.read_calibration()?;
        self.read_gates()?;
        let m = self.read_manifest()?;
        for id in m.train.iter().chain(&m.val).chain(&m.test) {
            for p in [self.slice(*id, 0), self.slice(*id, 1), self.slice(*id, 2), self.labels(*id)] {
                if !p.is_file() {
                    return Err(Error::config("manifest", format!("missing {}", p.display())));
                }
            }
        }
        Ok(m)
    }
}
