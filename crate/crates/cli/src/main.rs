//! `seeds` — command-line front end for SEEDS superpixel segmentation.
//!
//! Two subcommands:
//!
//! * `segment` runs one image through the segmenter and writes a label map
//!   and/or a boundary overlay; it prints one JSON line with the achieved
//!   superpixel count and elapsed milliseconds.
//! * `bench` segments a directory of images against stem-matched ground
//!   truths and writes a machine-readable metrics report.
//!
//! Exit codes are stable: 0 success, 1 runtime or I/O failure, 2 usage
//! error. Progress lines on stdout are JSON; human-readable logging goes to
//! stderr and is controlled by the `SEEDS_LOG` environment variable
//! (`off`, `info`, or `debug`; default `off`).

mod bench;
mod segment;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seeds_core::energy::Prior;
use seeds_core::imgproc::MAX_BINS_PER_CHANNEL;
use seeds_core::seeds::{SeedsConfig, Traversal};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "seeds",
    version,
    about = "SEEDS superpixel segmentation and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image and write label map and/or boundary overlay.
    Segment(segment::SegmentArgs),
    /// Segment a directory of images and score them against ground truth.
    Bench(bench::BenchArgs),
}

/// Segmentation settings shared by both subcommands.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Target number of superpixels.
    #[arg(long, short = 'k', value_parser = parse_target_k)]
    superpixels: usize,

    /// Color histogram bins per LAB channel.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..=MAX_BINS_PER_CHANNEL as i64))]
    bins: u32,

    /// Gate applied to candidate moves on top of the color test.
    #[arg(long, value_enum, default_value_t = PriorArg::Smooth)]
    prior: PriorArg,

    /// Wall-clock budget in milliseconds; the run stops early and returns
    /// the best partition found so far.
    #[arg(long)]
    budget_ms: Option<u64>,

    /// Cap on boundary-pixel refinement passes (default 8).
    #[arg(long)]
    pixel_passes: Option<usize>,

    /// RNG seed; only the random traversal order consumes randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Order in which pixels are visited within a sweep.
    #[arg(long, value_enum, default_value_t = TraversalArg::Raster)]
    traversal: TraversalArg,

    /// Skip the mean-color refinement pass after histogram refinement.
    #[arg(long)]
    no_post: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PriorArg {
    /// Color test alone decides each move.
    None,
    /// Require moves to make 3x3 label patches more uniform.
    Smooth,
    /// Require moves toward the nearer superpixel centroid.
    Compact,
    /// Freeze pixels on strong image edges, smooth elsewhere.
    Edge,
    /// Majority vote of smoothing, compactness, and edge tests.
    Combined,
}

impl From<PriorArg> for Prior {
    fn from(arg: PriorArg) -> Self {
        match arg {
            PriorArg::None => Prior::None,
            PriorArg::Smooth => Prior::Smooth3x3,
            PriorArg::Compact => Prior::Compactness,
            PriorArg::Edge => Prior::EdgeSnap,
            PriorArg::Combined => Prior::Combined,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum TraversalArg {
    /// Row-major order, fully deterministic.
    Raster,
    /// Seeded shuffle per sweep; deterministic for a fixed --seed.
    Random,
}

impl From<TraversalArg> for Traversal {
    fn from(arg: TraversalArg) -> Self {
        match arg {
            TraversalArg::Raster => Traversal::Raster,
            TraversalArg::Random => Traversal::SeededRandom,
        }
    }
}

impl ConfigArgs {
    fn to_config(&self) -> SeedsConfig {
        let mut config = SeedsConfig::new(self.superpixels);
        config.bins_per_channel = self.bins;
        config.energy.prior = self.prior.into();
        config.time_budget_ms = self.budget_ms;
        if let Some(passes) = self.pixel_passes {
            config.pixel_passes = Some(passes);
        }
        config.rng_seed = self.seed;
        config.traversal = self.traversal.into();
        config.post_process_means = !self.no_post;
        config
    }

    /// Settings snapshot embedded in bench reports. Reflects effective
    /// values, so defaults filled in by the library appear too.
    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            superpixels: self.superpixels,
            bins: self.bins,
            prior: self.prior,
            budget_ms: self.budget_ms,
            pixel_passes: self.to_config().pixel_passes,
            seed: self.seed,
            traversal: self.traversal,
            post_process: !self.no_post,
            boundary_tolerance: bench::BOUNDARY_TOLERANCE,
        }
    }
}

/// The configuration block of a bench report.
#[derive(Serialize)]
struct ConfigEcho {
    superpixels: usize,
    bins: u32,
    prior: PriorArg,
    budget_ms: Option<u64>,
    pixel_passes: Option<usize>,
    seed: u64,
    traversal: TraversalArg,
    post_process: bool,
    /// Chebyshev tolerance (pixels) used by boundary recall.
    boundary_tolerance: u32,
}

/// Clap value parser: superpixel counts must be at least 2.
fn parse_target_k(raw: &str) -> Result<usize, String> {
    let k: usize = raw
        .parse()
        .map_err(|_| "must be a positive integer".to_string())?;
    if k < 2 {
        return Err("must be at least 2".into());
    }
    Ok(k)
}

/// Clap value parser: require one of the listed file extensions.
fn path_with_extension(
    allowed: &'static [&'static str],
) -> impl Fn(&str) -> Result<PathBuf, String> + Clone {
    move |raw: &str| {
        let path = PathBuf::from(raw);
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext {
            Some(e) if allowed.contains(&e.as_str()) => Ok(path),
            _ => Err(format!("must end in {}", allowed.join(" or "))),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEEDS_LOG", "off"))
        .format_timestamp(None)
        .init();
    // Clap exits with code 2 and a usage message on bad flags.
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Segment(args) => segment::run(&args),
        Command::Bench(args) => bench::run(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
