use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gfk::pipeline::{self, RunConfig};

#[derive(Parser)]
#[command(name = "gfk", version, about = "Gated-imaging frustum toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Render a dataset of gated frames with labels.
    Simulate(Common),
    /// Train the regression head on the train split.
    Train(Common),
    /// Predict 3D boxes for the eval split.
    Predict(Common),
    /// Score predictions and write the AP report.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Also write a bird's-eye-view SVG per frame.
        #[arg(long)]
        render_bev: bool,
    },
    /// Encode and decode every label as a codec self-test.
    CodecCheck(Common),
}

fn load(common: &Common) -> gfk::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> gfk::Result<()> {
    pipeline::configure_threads()?;
    match cli.command {
        Command::Simulate(c) => {
            let m = pipeline::cmd_simulate(&load(&c)?, &c.out)?;
            println!("frames: train {} val {} test {}", m.train.len(), m.val.len(), m.test.len());
        }
        Command::Train(c) => {
            let outcome = pipeline::cmd_train(&load(&c)?, &c.out)?;
            if let Some(last) = outcome.history.last() {
                let val = last.val.map_or("-".to_string(), |v| format!("{:.5}", v.total));
                println!("epochs {} train loss {:.5} val loss {val}", outcome.history.len(), last.train.total);
            }
        }
        Command::Predict(c) => {
            let records = pipeline::cmd_predict(&load(&c)?, &c.out)?;
            println!("predictions: {}", records.len());
        }
        Command::Eval { common, render_bev } => {
            let report = pipeline::cmd_eval(&load(&common)?, &common.out, render_bev)?;
            print!("{}", report.to_csv());
        }
        Command::CodecCheck(c) => {
            let r = pipeline::cmd_codec_check(&load(&c)?, &c.out)?;
            println!(
                "records {} checked {} failures {} max position error {:.3e} max yaw error {:.3e}",
                r.records,
                r.checked,
                r.failures.len(),
                r.max_position_error,
                r.max_yaw_error
            );
            for f in &r.failures {
                println!("frame {} line {}: {}: {}", f.frame, f.line, f.kind, f.error);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message={}", e.kind(), serde_json::to_string(&msg).expect("string serializes"));
            ExitCode::FAILURE
        }
    }
}
