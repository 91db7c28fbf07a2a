//! `dmdwatch`: motion detection, background separation and threshold tuning
//! on frame sequences with sliding-window compressed DMD.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dmdwatch::dmd::DEFAULT_ZERO_SENTINEL;
use dmdwatch::window::WindowConfig;

#[derive(Debug, Parser)]
#[command(name = "dmdwatch", version, about = "Sliding-window compressed DMD motion detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Window, rank and sketch settings shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Frames per window (T).
    #[arg(long = "window-len", default_value_t = 80)]
    pub window_len: usize,
    /// Target rank (r).
    #[arg(long, default_value_t = 5)]
    pub rank: usize,
    /// Sketch dimension (p).
    #[arg(long, default_value_t = 20)]
    pub sketch: usize,
    /// Frames between consecutive windows.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Seed of the random compression operator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Frame rate of the input, frames per second.
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
}

impl WindowArgs {
    pub fn config(&self) -> WindowConfig {
        WindowConfig {
            window_len: self.window_len,
            rank: self.rank,
            sketch_dim: self.sketch,
            stride: self.stride,
            zero_sentinel: DEFAULT_ZERO_SENTINEL,
        }
    }
}

/// Matching and cost settings for scoring against labels.
#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Matching tolerance in windows.
    #[arg(long = "d-star", default_value_t = 30)]
    pub d_star: usize,
    /// Cost of a missed event relative to a false alarm.
    #[arg(long, default_value_t = 100.0)]
    pub c: f64,
    #[arg(long, default_value_t = 15)]
    pub cooldown: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Varied blob scenario (the mixed corpus).
    Blob,
    /// Flat or textured background, no blob.
    Static,
    /// Swaying background, no blob.
    Swaying,
    /// Constant-speed crossing for separation checks.
    Crossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameFormat {
    /// Numbered PGM files.
    Pgm,
    /// One DMDW raw stream file.
    Dmdw,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stream frames through the detector and emit events as JSON lines.
    Detect {
        /// Frame directory, PNM file, .dmdw file, or `-` for DMDW on stdin.
        #[arg(long)]
        input: String,
        /// Relative-change threshold; pick one with `cv`.
        #[arg(long)]
        threshold: f64,
        #[arg(long, default_value_t = 15)]
        cooldown: usize,
        /// Report every activation instead of one per burst.
        #[arg(long = "no-suppress")]
        no_suppress: bool,
        /// Fit the whole video window-parallel instead of streaming.
        #[arg(long)]
        batch: bool,
        /// Directory for events.jsonl and manifest.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Split one window into background (L) and foreground (S) frames.
    Separate {
        #[arg(long)]
        input: String,
        /// Window index to separate.
        #[arg(long, conflicts_with = "events", required_unless_present = "events")]
        window: Option<usize>,
        /// Take the window from an events.jsonl file instead.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Which event of the file to use.
        #[arg(long, default_value_t = 0, requires = "events")]
        event: usize,
        /// Background cutoff on the per-frame eigenvalue modulus.
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        /// Report L = R + |L~| so that L + S reassembles the input.
        #[arg(long = "canonical-L")]
        canonical_l: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        window_args: WindowArgs,
    },
    /// ROC curve and AUC of a labelled corpus.
    Roc {
        /// Directory of videos (frame directories or .dmdw files).
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of `<video name>.csv` label files.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// k-fold cross-validation of the detection threshold.
    Cv {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long = "grid-min", default_value_t = 0.0)]
        grid_min: f64,
        #[arg(long = "grid-max", default_value_t = 1.0)]
        grid_max: f64,
        #[arg(long = "grid-n", default_value_t = 1000)]
        grid_n: usize,
        /// Seed of the fold shuffle.
        #[arg(long = "cv-seed", default_value_t = 0)]
        cv_seed: u64,
        #[arg(long = "no-suppress")]
        no_suppress: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Render a synthetic scenario (or a run of presets) with labels.
    Synth {
        /// Scenario JSON file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// First preset index.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Preset family seed.
        #[arg(long = "preset-seed", default_value_t = 1)]
        preset_seed: u64,
        /// Write a corpus of this many consecutive presets.
        #[arg(long, requires = "preset")]
        count: Option<usize>,
        #[arg(long, value_enum, default_value_t = FrameFormat::Pgm)]
        format: FrameFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-window latency and sustained throughput on synthetic frames.
    Bench {
        #[arg(long, default_value_t = 426)]
        width: usize,
        #[arg(long, default_value_t = 240)]
        height: usize,
        /// Windows to time after warm-up.
        #[arg(long, default_value_t = 120)]
        windows: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        window: WindowArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect {
            input,
            threshold,
            cooldown,
            no_suppress,
            batch,
            out,
            window,
        } => commands::detect(&commands::DetectOptions {
            input,
            threshold,
            cooldown,
            suppression: !no_suppress,
            batch,
            out,
            window,
        }),
        Command::Separate {
            input,
            window,
            events,
            event,
            epsilon,
            canonical_l,
            out,
            window_args,
        } => commands::separate(&commands::SeparateOptions {
            input,
            window_index: window,
            events,
            event,
            epsilon,
            canonical_l,
            out,
            window: window_args,
        }),
        Command::Roc {
            corpus,
            labels,
            out,
            window,
            score,
        } => commands::roc(&corpus, &labels, &out, &window, &score),
        Command::Cv {
            corpus,
            labels,
            k,
            grid_min,
            grid_max,
            grid_n,
            cv_seed,
            no_suppress,
            out,
            window,
            score,
        } => commands::cv(&commands::CvOptions {
            corpus,
            labels,
            k,
            grid: (grid_min, grid_max, grid_n),
            cv_seed,
            suppression: !no_suppress,
            out,
            window,
            score,
        }),
        Command::Synth {
            scenario,
            preset,
            index,
            preset_seed,
            count,
            format,
            out,
        } => commands::synth(&commands::SynthOptions {
            scenario,
            preset,
            index,
            preset_seed,
            count,
            format,
            out,
        }),
        Command::Bench {
            width,
            height,
            windows,
            out,
            window,
        } => commands::bench(width, height, windows, out.as_deref(), &window),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
