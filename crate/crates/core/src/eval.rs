//! Distance-binned average precision over 2D, BEV and 3D IoU.
//!
//! Detections are matched greedily in descending score order to the
//! highest-IoU unmatched ground truth. Precision is interpolated at 40 recall
//! positions `{1/40, ..., 40/40}` and averaged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::scene::{Box2D, Box3D, ClassName};

/// Slack used when comparing an achieved recall against a recall position.
const RECALL_EPS: f64 = 1e-12;

pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let (a0, a1, a2, a3) = a.bounds();
    let (b0, b1, b2, b3) = b.bounds();
    let iw = (a2.min(b2) - a0.max(b0)).max(0.0);
    let ih = (a3.min(b3) - a1.max(b1)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

/// Intersection area of the two BEV footprints.
pub fn bev_intersection(a: &Box3D, b: &Box3D) -> f64 {
    geometry::intersection_area(&a.bev_polygon(), &b.bev_polygon())
}

pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.w * a.l + b.w * b.l - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let overlap_y = (a.center.y.min(b.center.y) - (a.center.y - a.h).max(b.center.y - b.h)).max(0.0);
    if overlap_y == 0.0 {
        return 0.0;
    }
    let inter = bev_intersection(a, b) * overlap_y;
    if inter == 0.0 {
        return 0.0;
    }
    (inter / (a.volume() + b.volume() - inter)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "2D")]
    TwoD,
    #[serde(rename = "BEV")]
    Bev,
    #[serde(rename = "3D")]
    ThreeD,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::TwoD, MetricKind::Bev, MetricKind::ThreeD];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::TwoD => "2D",
            MetricKind::Bev => "BEV",
            MetricKind::ThreeD => "3D",
        }
    }
}

/// Half-open depth interval `[lo, hi)`, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    pub lo: f64,
    pub hi: f64,
}

impl DistanceBin {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.lo && z < self.hi
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub car_iou: f64,
    pub pedestrian_iou: f64,
    pub bins: Vec<DistanceBin>,
    pub recall_positions: usize,
    pub kinds: Vec<MetricKind>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            car_iou: 0.2,
            pedestrian_iou: 0.1,
            bins: vec![
                DistanceBin::new(0.0, 30.0),
                DistanceBin::new(30.0, 50.0),
                DistanceBin::new(50.0, 80.0),
            ],
            recall_positions: 40,
            kinds: MetricKind::ALL.to_vec(),
        }
    }
}

impl EvalConfig {
    pub fn threshold(&self, class: ClassName) -> f64 {
        match class {
            ClassName::Car => self.car_iou,
            ClassName::Pedestrian => self.pedestrian_iou,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, t) in [("eval.car_iou", self.car_iou), ("eval.pedestrian_iou", self.pedestrian_iou)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config(field, "threshold must be in (0, 1]"));
            }
        }
        if self.recall_positions == 0 {
            return Err(Error::config("eval.recall_positions", "must be >= 1"));
        }
        for (i, b) in self.bins.iter().enumerate() {
            if !(b.lo < b.hi) {
                return Err(Error::config(format!("eval.bins[{i}]"), "lo must be < hi"));
            }
            if i > 0 && b.lo < self.bins[i - 1].hi {
                return Err(Error::config(format!("eval.bins[{i}]"), "bins overlap or are unordered"));
            }
        }
        Ok(())
    }
}

/// Detections and ground truth of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBoxes<T> {
    /// (box, score)
    pub dets: Vec<(T, f64)>,
    pub gts: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    /// `None` when there is neither ground truth nor detections.
    pub ap: Option<f64>,
    pub num_gt: usize,
    pub num_det: usize,
    pub num_tp: usize,
    /// Raw (recall, precision) at every distinct score threshold.
    pub curve: Vec<[f64; 2]>,
    /// Interpolated precision at each recall position.
    pub interpolated: Vec<f64>,
}

/// Greedy matching for one frame. Returns, per detection in descending score
/// order (stable), its score and whether it is a true positive.
pub fn greedy_match<T>(frame: &FrameBoxes<T>, iou: impl Fn(&T, &T) -> f64, threshold: f64) -> Vec<(f64, bool)> {
    let mut order: Vec<usize> = (0..frame.dets.len()).collect();
    order.sort_by(|&a, &b| frame.dets[b].1.total_cmp(&frame.dets[a].1));
    let mut matched = vec![false; frame.gts.len()];
    order
        .into_iter()
        .map(|d| {
            let (ref det, score) = frame.dets[d];
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in frame.gts.iter().enumerate() {
                if matched[g] {
                    continue;
                }
                let v = iou(det, gt);
                if v >= threshold && best.map_or(true, |(_, bv)| v > bv) {
                    best = Some((g, v));
                }
            }
            if let Some((g, _)) = best {
                matched[g] = true;
            }
            (score, best.is_some())
        })
        .collect()
}

/// Average precision with `positions` interpolated recall points.
pub fn average_precision<T>(
    frames: &[FrameBoxes<T>],
    iou: impl Fn(&T, &T) -> f64,
    threshold: f64,
    positions: usize,
) -> ApResult {
    let num_gt: usize = frames.iter().map(|f| f.gts.len()).sum();
    let mut scored: Vec<(f64, bool)> = frames
        .iter()
        .flat_map(|f| greedy_match(f, &iou, threshold))
        .collect();
    let num_det = scored.len();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut curve = Vec::new();
    let mut tp = 0usize;
    for (i, &(score, is_tp)) in scored.iter().enumerate() {
        tp += is_tp as usize;
        let group_end = scored.get(i + 1).map_or(true, |next| next.0 != score);
        if group_end && num_gt > 0 {
            curve.push([tp as f64 / num_gt as f64, tp as f64 / (i + 1) as f64]);
        }
    }

    let interpolated: Vec<f64> = (1..=positions)
        .map(|i| {
            let r = i as f64 / positions as f64;
            curve
                .iter()
                .filter(|[rec, _]| *rec + RECALL_EPS >= r)
                .map(|[_, p]| *p)
                .fold(0.0, f64::max)
        })
        .collect();

    let ap = if num_gt == 0 {
        (num_det > 0).then_some(0.0)
    } else {
        Some(interpolated.iter().sum::<f64>() / positions as f64)
    };
    ApResult {
        ap,
        num_gt,
        num_det,
        num_tp: tp,
        curve,
        interpolated,
    }
}

/// AP-40 over a single frame's boxes.
pub fn ap_40<T>(dets: &[(T, f64)], gts: &[T], iou: impl Fn(&T, &T) -> f64, threshold: f64) -> ApResult
where
    T: Clone,
{
    let frame = FrameBoxes {
        dets: dets.to_vec(),
        gts: gts.to_vec(),
    };
    average_precision(std::slice::from_ref(&frame), iou, threshold, 40)
}

/// A labeled or predicted object: 3D box plus its 2D box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalObject {
    pub box3d: Box3D,
    pub box2d: Box2D,
}

impl EvalObject {
    pub fn class(&self) -> ClassName {
        self.box3d.class
    }

    pub fn depth(&self) -> f64 {
        self.box3d.center.z
    }

    pub fn score(&self) -> f64 {
        self.box3d.score
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub frame_id: u64,
    pub gts: Vec<EvalObject>,
    pub dets: Vec<EvalObject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub class: ClassName,
    pub kind: MetricKind,
    pub bin: DistanceBin,
    pub threshold: f64,
    pub result: ApResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub entries: Vec<ReportEntry>,
}

impl EvalReport {
    pub fn get(&self, class: ClassName, kind: MetricKind, bin_index: usize) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .filter(|e| e.class == class && e.kind == kind)
            .nth(bin_index)
    }

    /// `{class: {kind: {bin: ap}}}`, the layout of a results table.
    pub fn table(&self) -> BTreeMap<String, BTreeMap<String, BTreeMap<String, Option<f64>>>> {
        let mut out: BTreeMap<String, BTreeMap<String, BTreeMap<String, Option<f64>>>> = BTreeMap::new();
        for e in &self.entries {
            out.entry(e.class.to_string())
                .or_default()
                .entry(e.kind.as_str().to_string())
                .or_default()
                .insert(e.bin.label(), e.result.ap);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({
            "table": self.table(),
            "entries": self.entries,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,kind,bin,threshold,ap,num_gt,num_det,num_tp\n");
        for e in &self.entries {
            let ap = e.result.ap.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.class,
                e.kind.as_str(),
                e.bin.label(),
                e.threshold,
                ap,
                e.result.num_gt,
                e.result.num_det,
                e.result.num_tp
            );
        }
        out
    }
}

/// Evaluates every (class, kind, bin) cell. Ground truth is binned by its
/// true depth, detections by their predicted depth.
pub fn evaluate_frames(frames: &[EvalFrame], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let mut entries = Vec::new();
    for class in ClassName::ALL {
        let threshold = cfg.threshold(class);
        for &kind in &cfg.kinds {
            for bin in &cfg.bins {
                let sets: Vec<FrameBoxes<EvalObject>> = frames
                    .iter()
                    .map(|f| FrameBoxes {
                        dets: f
                            .dets
                            .iter()
                            .filter(|d| d.class() == class && bin.contains(d.depth()))
                            .map(|d| (*d, d.score()))
                            .collect(),
                        gts: f
                            .gts
                            .iter()
                            .filter(|g| g.class() == class && bin.contains(g.depth()))
                            .copied()
                            .collect(),
                    })
                    .collect();
                let result = match kind {
                    MetricKind::TwoD => {
                        average_precision(&sets, |a, b| iou_2d(&a.box2d, &b.box2d), threshold, cfg.recall_positions)
                    }
                    MetricKind::Bev => {
                        average_precision(&sets, |a, b| iou_bev(&a.box3d, &b.box3d), threshold, cfg.recall_positions)
                    }
                    MetricKind::ThreeD => {
                        average_precision(&sets, |a, b| iou_3d(&a.box3d, &b.box3d), threshold, cfg.recall_positions)
                    }
                };
                entries.push(ReportEntry {
                    class,
                    kind,
                    bin: *bin,
                    threshold,
                    result,
                });
            }
        }
    }
    Ok(EvalReport { entries })
}

/// Top-down SVG of one frame: ground truth green, predictions orange.
pub fn render_bev_svg(frame: &EvalFrame, max_depth: f64, half_width: f64) -> String {
    let scale = 8.0;
    let (w, h) = (2.0 * half_width * scale, max_depth * scale);
    let to_px = |[x, z]: [f64; 2]| ((x + half_width) * scale, h - z * scale);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#111"/>"##);
    for ring in (10..=max_depth as usize).step_by(10) {
        let y = h - ring as f64 * scale;
        let _ = writeln!(
            svg,
            r##"<line x1="0" y1="{y:.1}" x2="{w:.0}" y2="{y:.1}" stroke="#333" stroke-width="1"/>"##
        );
    }
    let mut poly = |b: &Box3D, color: &str| {
        let pts: Vec<String> = b
            .bev_polygon()
            .iter()
            .map(|&p| {
                let (x, y) = to_px(p);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    };
    for g in &frame.gts {
        poly(&g.box3d, "#2ecc40");
    }
    for d in &frame.dets {
        poly(&d.box3d, "#ff851b");
    }
    svg.push_str("</svg>\n");
    svg
}
