//! Bird's-eye-view and 3D IoU of rotated boxes, checked against a Monte
//! Carlo estimate.
//!
//! ```text
//! cargo run --release --example rotated_iou -- [samples]
//! ```

use std::f64::consts::FRAC_PI_2;

use gfk::camera::CamPoint;
use gfk::eval::{iou_3d, iou_bev};
use gfk::geometry::{area, intersection_area};
use gfk::scene::{Box3D, ClassName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inside(poly: &[[f64; 2]; 4], p: [f64; 2]) -> bool {
    (0..4).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % 4];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

fn monte_carlo(a: &Box3D, b: &Box3D, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let (pa, pb) = (a.bev_polygon(), b.bev_polygon());
    let pts = pa.iter().chain(pb.iter());
    let (mut x0, mut x1, mut z0, mut z1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        z0 = z0.min(p[1]);
        z1 = z1.max(p[1]);
    }
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..n {
        let p = [rng.random_range(x0..x1), rng.random_range(z0..z1)];
        let (ia, ib) = (inside(&pa, p), inside(&pb, p));
        both += (ia && ib) as usize;
        either += (ia || ib) as usize;
    }
    both as f64 / either.max(1) as f64
}

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let a = Box3D::new(ClassName::Car, CamPoint::new(0.0, 1.6, 20.0), [1.5, 1.0, 2.0], 0.0);
    let b = Box3D {
        yaw: FRAC_PI_2,
        ..a
    };
    println!("crossed 2x1 rectangles: BEV IoU {}, 3D IoU {} (exact 1/3)", iou_bev(&a, &b), iou_3d(&a, &b));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("\n{:>8} {:>8} {:>8} {:>8} {:>10} {:>10}", "dx", "dz", "dyaw", "BEV", "MonteCarlo", "3D");
    for _ in 0..6 {
        let other = Box3D::new(
            ClassName::Car,
            CamPoint::new(rng.random_range(-1.5..1.5), 1.6 + rng.random_range(-0.5..0.5), 20.0 + rng.random_range(-2.0..2.0)),
            [1.5, 1.8, 4.2],
            rng.random_range(-3.1..3.1),
        );
        let base = Box3D::new(ClassName::Car, CamPoint::new(0.0, 1.6, 20.0), [1.5, 1.8, 4.2], 0.4);
        println!(
            "{:8.2} {:8.2} {:8.2} {:8.4} {:10.4} {:10.4}",
            other.center.x,
            other.center.z - 20.0,
            other.yaw - base.yaw,
            iou_bev(&base, &other),
            monte_carlo(&base, &other, n, &mut rng),
            iou_3d(&base, &other)
        );
    }

    let pa = a.bev_polygon();
    println!("\nfootprint area {} m^2, self intersection {} m^2", area(&pa), intersection_area(&pa, &pa));
}
