//! Samples a street scene, renders three noisy gated slices and writes them
//! as 16-bit PGMs.
//!
//! ```text
//! cargo run --release --example gated_frame -- [out_dir] [scale]
//! ```

use std::time::Instant;

use gfk::camera::CameraModel;
use gfk::pgm::Pgm16;
use gfk::ripsim::{default_gates, render_frame, NoiseConfig, FULL_SCALE};
use gfk::scene::{sample_scene, SceneConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gfk::Result<()> {
    let mut args = std::env::args().skip(1);
    let out_dir = args.next();
    let scale: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);

    let cam = CameraModel::default().scaled(scale)?;
    let gates = default_gates();
    let cfg = SceneConfig {
        ground_albedo: Some(0.3),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scene = sample_scene(&cfg, &cam, 0, &mut rng)?;
    for o in &scene.objects {
        let b = &o.bbox;
        println!(
            "{:<10} x={:6.2} z={:6.2} h={:.2} albedo={:.2}",
            b.class, b.center.x, b.center.z, b.h, o.albedo
        );
    }

    let start = Instant::now();
    let frame = render_frame(&scene, &gates, &cam, Some(&NoiseConfig::default()), 7)?;
    println!(
        "rendered {}x{} x3 in {:.1} ms",
        frame.width,
        frame.height,
        start.elapsed().as_secs_f64() * 1e3
    );

    for s in 0..3 {
        let data = frame.quantized_slice(s);
        let mean = data.iter().map(|&v| v as f64).sum::<f64>() / data.len() as f64;
        let max = data.iter().copied().max().unwrap_or(0);
        println!("slice {}: mean {mean:7.2}  max {max}", s + 1);
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir).map_err(|e| gfk::Error::Io {
                path: dir.into(),
                source: e,
            })?;
            let path = std::path::Path::new(dir).join(format!("slice_{}.pgm", s + 1));
            let img = Pgm16::new(frame.width, frame.height, FULL_SCALE as u16, data)?;
            std::fs::write(&path, img.encode()).map_err(|e| gfk::Error::Io { path, source: e })?;
        }
    }
    Ok(())
}
