use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod manifest;

use config::ConfigArgs;

/// Occlusion-aware multi-object tracking on MOTChallenge files.
#[derive(Debug, Parser)]
#[command(name = "oasort", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track detections and write results plus a run manifest.
    Track {
        det: PathBuf,
        out: PathBuf,
        /// Manifest path; defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a result file against ground truth.
    Eval {
        gt: PathBuf,
        pred: PathBuf,
        /// Minimum IoU for a frame-level match.
        #[arg(long, default_value_t = oasort::metrics::DEFAULT_IOU_MATCH)]
        iou_thresh: f64,
        /// Also write the summary as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Track and score under each component ablation row.
    Ablate {
        det: PathBuf,
        gt: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = oasort::metrics::DEFAULT_IOU_MATCH)]
        iou_thresh: f64,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the resolved settings in config file form.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a canonical synthetic scenario (gt.txt, det.txt, scenario.json).
    Synth {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(oasort::synth::PRESET_NAMES))]
        preset: String,
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Track {
            det,
            out,
            manifest,
            config,
        } => commands::track(config.resolve()?, &det, &out, manifest.as_deref()),
        Command::Eval {
            gt,
            pred,
            iou_thresh,
            csv,
        } => commands::eval(&gt, &pred, iou_thresh, csv.as_deref()).map(drop),
        Command::Ablate {
            det,
            gt,
            out_dir,
            iou_thresh,
            config,
        } => commands::ablate(config.resolve()?, &det, &gt, &out_dir, iou_thresh).map(drop),
        Command::Config { config } => {
            print!("{}", config::to_config_text(&config.resolve()?));
            Ok(())
        }
        Command::Synth { preset, out_dir } => commands::synth(&preset, &out_dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
