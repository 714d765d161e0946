//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use gfk::ripsim::{GateConfig, SPEED_OF_LIGHT};
use gfk::scene::Box3D;
use rand::Rng;

/// Profile by numerical integration of gate x pulse overlap.
///
/// Integrates `gate_amplitude * pulse_amplitude * 1[xi <= t <= xi + t_g] *
/// 1[2r/c <= t <= 2r/c + t_p]` over the gate window with adaptive Simpson,
/// starting from 256 panels, then applies the range attenuation.
pub fn rip_quadrature(g: &GateConfig, r: f64) -> f64 {
    let arrival = 2.0 * r / SPEED_OF_LIGHT;
    let (a, b) = (g.delay, g.delay + g.gate_duration);
    // Time is measured in units of the gate duration.
    let scale = g.gate_duration;
    let f = |s: f64| {
        let t = a + s * scale;
        let lit = t >= arrival && t <= arrival + g.pulse_duration;
        if lit {
            1.0
        } else {
            0.0
        }
    };
    let panels = 256;
    let h = (b - a) / scale / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
        total += adaptive_simpson(&f, lo, hi, 1e-13, 60);
    }
    let mut beta = (-2.0 * g.attenuation_gamma * r).exp();
    if g.inverse_square {
        beta /= r.max(0.5).powi(2);
    }
    g.gate_amplitude * g.pulse_amplitude * total * scale * beta
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let whole = simpson(f, a, b);
    let m = 0.5 * (a + b);
    let (left, right) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, 0.5 * tol, depth - 1) + adaptive_simpson(f, m, b, 0.5 * tol, depth - 1)
    }
}

/// Half-plane form of a convex counter-clockwise polygon: `n . p <= c`.
struct HalfPlanes([([f64; 2], f64); 4]);

impl HalfPlanes {
    fn new(poly: &[[f64; 2]; 4]) -> Self {
        let ccw = {
            let s: f64 = (0..4)
                .map(|i| {
                    let (p, q) = (poly[i], poly[(i + 1) % 4]);
                    p[0] * q[1] - q[0] * p[1]
                })
                .sum();
            s > 0.0
        };
        Self(std::array::from_fn(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % 4]);
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let n = if ccw { [dy, -dx] } else { [-dy, dx] };
            (n, n[0] * p[0] + n[1] * p[1])
        }))
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.0.iter().all(|(n, c)| n[0] * x + n[1] * y <= *c)
    }
}

/// BEV IoU by stratified point sampling: one uniform point per cell of a
/// `side x side` grid over the joint bounding box.
pub fn monte_carlo_iou_bev<R: Rng + ?Sized>(a: &Box3D, b: &Box3D, side: usize, rng: &mut R) -> f64 {
    let (pa, pb) = (a.bev_polygon(), b.bev_polygon());
    let (ha, hb) = (HalfPlanes::new(&pa), HalfPlanes::new(&pb));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pa.iter().chain(pb.iter()) {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let (dx, dy) = ((x1 - x0) / side as f64, (y1 - y0) / side as f64);
    let (mut inter, mut union) = (0u64, 0u64);
    for i in 0..side {
        for j in 0..side {
            let x = x0 + (i as f64 + rng.random::<f64>()) * dx;
            let y = y0 + (j as f64 + rng.random::<f64>()) * dy;
            let (ia, ib) = (ha.contains(x, y), hb.contains(x, y));
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// AP by enumerating every distinct score threshold: for each threshold the
/// detections at or above it are matched from scratch, giving one
/// (recall, precision) point. `None` when there are no gts and no dets.
pub fn brute_force_ap<T>(
    dets: &[(T, f64)],
    gts: &[T],
    iou: impl Fn(&T, &T) -> f64,
    threshold: f64,
    positions: usize,
) -> Option<f64> {
    if gts.is_empty() {
        return (!dets.is_empty()).then_some(0.0);
    }
    let mut thresholds: Vec<f64> = dets.iter().map(|d| d.1).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut points = Vec::new();
    for &t in &thresholds {
        let mut kept: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].1 >= t).collect();
        kept.sort_by(|&a, &b| dets[b].1.total_cmp(&dets[a].1));
        let mut used = vec![false; gts.len()];
        let mut tp = 0usize;
        for &d in &kept {
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in gts.iter().enumerate() {
                let v = iou(&dets[d].0, gt);
                if !used[g] && v >= threshold && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((g, v));
                }
            }
            if let Some((g, _)) = best {
                used[g] = true;
                tp += 1;
            }
        }
        points.push((tp as f64 / gts.len() as f64, tp as f64 / kept.len() as f64));
    }
    let sum: f64 = (1..=positions)
        .map(|i| {
            let r = i as f64 / positions as f64;
            points
                .iter()
                .filter(|(rec, _)| *rec + 1e-12 >= r)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max)
        })
        .sum();
    Some(sum / positions as f64)
}

/// Analytic mean and variance of the noisy measurement without clipping.
pub fn noise_moments(signal: f64, photon_scale: f64, read_sigma: f64) -> (f64, f64) {
    (signal, signal / photon_scale + read_sigma * read_sigma)
}
