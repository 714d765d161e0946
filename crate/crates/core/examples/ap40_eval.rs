//! AP-40 on hand-made detections, then a full per-class, per-bin report on
//! synthetic noisy predictions.
//!
//! ```text
//! cargo run --example ap40_eval
//! ```

use gfk::camera::CamPoint;
use gfk::eval::{ap_40, evaluate_frames, iou_2d, EvalConfig, EvalFrame, EvalObject};
use gfk::scene::{Box2D, Box3D, ClassName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn square(u: f64) -> Box2D {
    Box2D::from_bounds(ClassName::Car, u, 0.0, u + 10.0, 10.0, 1.0)
}

fn main() -> gfk::Result<()> {
    let gts = [square(0.0), square(100.0)];
    let dets = [(square(0.0), 0.9), (square(50.0), 0.8), (square(100.0), 0.7)];
    let r = ap_40(&dets, &gts, iou_2d, 0.5);
    println!("two gts, a false positive between two hits: AP-40 = {:?}", r.ap);
    println!("PR points: {:?}", r.curve);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut frames = Vec::new();
    for frame_id in 0..200 {
        let mut f = EvalFrame {
            frame_id,
            gts: Vec::new(),
            dets: Vec::new(),
        };
        for _ in 0..rng.random_range(1..5) {
            let z = rng.random_range(5.0..80.0);
            let class = if rng.random_bool(0.5) { ClassName::Car } else { ClassName::Pedestrian };
            let dims = match class {
                ClassName::Car => [1.55, 1.85, 4.3],
                ClassName::Pedestrian => [1.75, 0.6, 0.8],
            };
            let gt = Box3D::new(class, CamPoint::new(rng.random_range(-0.3..0.3) * z, 1.6, z), dims, rng.random_range(-3.0..3.0));
            let b2 = Box2D::from_bounds(class, 0.0, 0.0, 1.0, 1.0, 1.0);
            f.gts.push(EvalObject { box3d: gt, box2d: b2 });
            // Depth error grows with distance.
            let err = Normal::new(0.0, 0.02 * z).expect("positive sigma").sample(&mut rng);
            let mut det = gt;
            det.center.z += err;
            det.score = (1.0 - err.abs() / z).clamp(0.0, 1.0);
            f.dets.push(EvalObject { box3d: det, box2d: b2 });
        }
        frames.push(f);
    }
    let report = evaluate_frames(&frames, &EvalConfig::default())?;
    print!("\n{}", report.to_csv());
    Ok(())
}
