mod commands;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frenetkit::baselines::{Frame, PredictorKind};
use frenetkit::io::FamilySpec;

/// Lane-relative trajectory normalization, domain splits and baselines.
#[derive(Debug, Parser)]
#[command(name = "frenetkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene file
    Synth(SynthArgs),
    /// Convert trajectories to (s, d) along each scene's selected centerline
    Transform(TransformArgs),
    /// Score every candidate centerline and report the selected one
    SelectRef(SceneArgs),
    /// Cluster scenes into domains and write a split manifest
    Split(SplitArgs),
    /// Run a baseline on a split and report seen/unseen metrics
    Eval(EvalArgs),
    /// Report the Cartesian -> Frenet -> Cartesian error over a scene file
    Roundtrip(SceneArgs),
    /// Grid of Cartesian vs Frenet position errors around one ground-truth point
    ErrorField(ErrorFieldArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Scene file (line-delimited JSON)
    scenes: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenes per family
    #[arg(long, default_value_t = 100)]
    per_family: usize,
    /// Family spec `kind[:rmin:rmax][@vmin:vmax]`; repeatable. Defaults to
    /// one of each kind.
    #[arg(long = "family")]
    families: Vec<FamilySpec>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// Scene file (line-delimited JSON)
    scenes: PathBuf,
    /// Also transform the ground-truth future
    #[arg(long)]
    include_future: bool,
    /// Map an (s, d) table produced by `transform` back to Cartesian
    #[arg(long, value_name = "TABLE", conflicts_with = "include_future")]
    inverse: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Scene file (line-delimited JSON)
    scenes: PathBuf,
    /// Number of clusters
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Number of smallest clusters held out as unseen
    #[arg(long, default_value_t = 3)]
    unseen: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the scenes' own domain labels instead of clustering; the listed
    /// labels become unseen
    #[arg(long, value_delimiter = ',', value_name = "LABELS", conflicts_with_all = ["k", "unseen", "scatter"])]
    by_label: Option<Vec<usize>>,
    /// Split manifest output (scene_id,cluster,partition)
    #[arg(long)]
    manifest: PathBuf,
    /// Optional scatter table output (scene_id,cluster,e1,e2)
    #[arg(long)]
    scatter: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Scene file (line-delimited JSON)
    scenes: PathBuf,
    /// Split manifest written by `split`
    #[arg(long)]
    split: PathBuf,
    #[arg(long, value_parser = ["cv", "nn"], default_value = "cv")]
    predictor: String,
    #[arg(long, default_value = "cartesian")]
    frame: Frame,
    /// Modes returned by the nearest-neighbor predictor
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Optional per-scene score table
    #[arg(long)]
    scores: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

impl EvalArgs {
    fn kind(&self) -> PredictorKind {
        match self.predictor.as_str() {
            "nn" => PredictorKind::NearestNeighbor { k: self.k },
            _ => PredictorKind::ConstantVelocity,
        }
    }
}

#[derive(Debug, Args)]
struct ErrorFieldArgs {
    /// Scene file (line-delimited JSON)
    scenes: PathBuf,
    /// Scene to use; defaults to the first in the file
    #[arg(long)]
    scene: Option<String>,
    /// Index of the ground-truth point in observed followed by future;
    /// defaults to the last future point, or the last observed one
    #[arg(long)]
    index: Option<usize>,
    /// Grid spacing in meters
    #[arg(long, default_value_t = 0.25)]
    resolution: f64,
    /// Half the grid side in meters
    #[arg(long, default_value_t = 5.0)]
    half_extent: f64,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Transform(a) => commands::transform(a),
        Command::SelectRef(a) => commands::select_ref(a),
        Command::Split(a) => commands::split(a),
        Command::Eval(a) => commands::eval(a),
        Command::Roundtrip(a) => commands::roundtrip(a),
        Command::ErrorField(a) => commands::error_field(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

// Output piped into something like `head` that stopped reading.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| {
            match c.downcast_ref::<csv::Error>()?.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            }
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
