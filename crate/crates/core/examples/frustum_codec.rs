//! Encodes a few 3D boxes against their projected 2D boxes, shows the frustum
//! segment each 2D box implies, and decodes the codes back.
//!
//! ```text
//! cargo run --example frustum_codec
//! ```

use gfk::camera::{CamPoint, CameraModel};
use gfk::codec::{decode, encode, frustum_segment, DEFAULT_K};
use gfk::scene::{oracle_box2d, Box2D, Box3D, ClassName, ClassStats};

fn main() -> gfk::Result<()> {
    let cam = CameraModel::default();
    let stats = ClassStats::default();

    let fixture = Box2D {
        class: ClassName::Pedestrian,
        u: 640.0,
        v: 360.0,
        w_u: 80.0,
        h_v: 230.0,
        score: 1.0,
    };
    let seg = frustum_segment(&fixture, stats.get(ClassName::Pedestrian), DEFAULT_K, &cam)?;
    println!(
        "pedestrian, h_v = 230 px: z_near {} m, z_far {} m, d {} m, anchor {} m\n",
        seg.z_near, seg.z_far, seg.d, seg.z_anchor
    );

    let boxes = [
        Box3D::new(ClassName::Car, CamPoint::new(-3.2, 1.6, 14.0), [1.50, 1.80, 4.40], 0.3),
        Box3D::new(ClassName::Car, CamPoint::new(4.0, 1.7, 47.5), [1.62, 1.91, 4.05], -2.4),
        Box3D::new(ClassName::Pedestrian, CamPoint::new(1.1, 1.5, 23.0), [1.82, 0.55, 0.70], 1.2),
        Box3D::new(ClassName::Pedestrian, CamPoint::new(-6.0, 1.6, 71.0), [1.64, 0.63, 0.86], -0.7),
    ];
    println!(
        "{:<10} {:>6} | {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} | {:>9}",
        "class", "z", "du", "dv", "dz", "dh", "dw", "dl", "sin", "cos", "max err"
    );
    for b in &boxes {
        let p = oracle_box2d(b, &cam)?;
        let s = stats.get(b.class);
        let q = encode(b, &p, s, DEFAULT_K, &cam)?;
        let back = decode(&q, &p, s, DEFAULT_K, &cam)?;
        let err = [
            back.center.x - b.center.x,
            back.center.y - b.center.y,
            back.center.z - b.center.z,
            back.h - b.h,
            back.w - b.w,
            back.l - b.l,
            gfk::camera::wrap_to_pi(back.yaw - b.yaw),
        ]
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()));
        let a = q.to_array();
        println!(
            "{:<10} {:6.1} | {:7.3} {:7.3} {:7.3} {:7.3} {:7.3} {:7.3} {:7.3} {:7.3} | {err:9.2e}",
            b.class, b.center.z, a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]
        );
    }
    Ok(())
}
