//! Trains the regression head twice on in-memory simulated frames, once on
//! all features and once on 2D box geometry alone, and compares held-out
//! depth error and 3D AP per distance bin.
//!
//! ```text
//! cargo run --release --example train_regressor -- [train_frames] [test_frames] [camera_scale] [epochs] [learning_rate] [orientation_weight]
//! ```

use std::time::Instant;

use gfk::eval::{evaluate_frames, MetricKind};
use gfk::pipeline::{quantile, simulate_features, FrameFeatures, RunConfig, SplitCounts};
use gfk::regressor::{train, FeatureSet, Model, TrainConfig};
use gfk::scene::ClassName;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn depth_errors(model: &Model, frames: &[FrameFeatures], cfg: &RunConfig, lo: f64, hi: f64) -> Vec<f64> {
    let stats = cfg.class_stats();
    let mut errs: Vec<f64> = frames
        .iter()
        .flat_map(|f| {
            f.predict(model, &stats, cfg.codec_k, &cfg.camera)
                .into_iter()
                .map(|(i, p)| (f.labels[i].box3d.center.z, p.box3d.center.z))
                .collect::<Vec<_>>()
        })
        .filter(|(z, _)| (lo..hi).contains(z))
        .map(|(z, zp)| (z - zp).abs())
        .collect();
    errs.sort_by(f64::total_cmp);
    errs
}

fn main() -> gfk::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let n_train: u64 = arg(1, 500);
    let n_test: u64 = arg(2, 100);
    let scale: f64 = arg(3, 0.5);
    let cfg = RunConfig {
        seed: 2024,
        frames: SplitCounts {
            train: n_train,
            val: 0,
            test: n_test,
        },
        camera: gfk::camera::CameraModel::default().scaled(scale)?,
        ..Default::default()
    };
    let mut base = cfg.effective_train();
    base.epochs = arg(4, base.epochs);
    base.learning_rate = arg(5, base.learning_rate);
    base.loss.beta = arg(6, base.loss.beta);

    let start = Instant::now();
    let train_ids = cfg.frames.ids(gfk::dataset::Split::Train);
    let test_ids = cfg.frames.ids(gfk::dataset::Split::Test);
    let train_frames = simulate_features(&cfg, &train_ids)?;
    let test_frames = simulate_features(&cfg, &test_ids)?;
    println!("simulated {} frames in {:.1} s", n_train + n_test, start.elapsed().as_secs_f64());

    let stats = cfg.class_stats();
    let samples: Vec<_> = train_frames
        .iter()
        .flat_map(|f| f.samples(&stats, cfg.codec_k, &cfg.camera))
        .collect();
    println!("{} training samples", samples.len());

    for set in [FeatureSet::Full, FeatureSet::GeometryOnly] {
        let t = Instant::now();
        let tc = TrainConfig {
            feature_set: set,
            ..base
        };
        let outcome = train(&samples, &[], &tc)?;
        let model = outcome.model;
        let errs = depth_errors(&model, &test_frames, &cfg, 30.0, 80.0);
        println!(
            "{set:?}: trained in {:.1} s, final loss {:.4}, median |dz| 30-80 m = {:.3} m over {}",
            t.elapsed().as_secs_f64(),
            outcome.history.last().map_or(f64::NAN, |h| h.train.total),
            quantile(&errs, 0.5),
            errs.len()
        );
        let eval_frames: Vec<_> = test_frames
            .iter()
            .map(|f| f.eval_frame(&f.predict(&model, &stats, cfg.codec_k, &cfg.camera)))
            .collect();
        let report = evaluate_frames(&eval_frames, &cfg.eval)?;
        for class in ClassName::ALL {
            let aps: Vec<String> = (0..cfg.eval.bins.len())
                .map(|b| {
                    let e = report.get(class, MetricKind::ThreeD, b).expect("cell exists");
                    e.result
                        .ap
                        .map_or("undefined".into(), |ap| format!("{}: {:.3}", e.bin.label(), ap))
                })
                .collect();
            println!("  3D AP {class:<10} {}", aps.join("  "));
        }
    }
    println!("total {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
