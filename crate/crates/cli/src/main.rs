//! `shapecodes`: generate viewgrid datasets, train, evaluate and export.

mod commands;
mod resolve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "shapecodes", version, about = "Viewgrid prediction from single views: data, training and evaluation")]
struct Cli {
    /// Worker threads (1 = deterministic reference mode).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a procedural viewgrid dataset.
    Gen(GenArgs),
    /// Train a network (ours, ca or autoencoder) with a learning-rate sweep.
    Train(TrainArgs),
    /// Reconstruction error (MSE×1000) of a checkpoint and/or the average baselines.
    EvalRecon(EvalReconArgs),
    /// k-NN recognition accuracy of feature extractors.
    EvalKnn(EvalKnnArgs),
    /// PGM montage of ground truth above prediction for one object.
    Export(ExportArgs),
    /// Per-observed-view error heatmap for one class.
    Heatmap(HeatmapArgs),
    /// Finite-difference gradient checks of every layer and the full network.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    /// Number of shape families (at most 12).
    #[arg(long)]
    classes: Option<usize>,
    /// How many of the classes (taken from the end) are held out as unseen.
    #[arg(long)]
    unseen: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    azimuths: Option<usize>,
    /// Comma-separated degrees; `±30` expands to -30,30.
    #[arg(long, allow_hyphen_values = true)]
    elevations: Option<String>,
    #[arg(long)]
    image_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    /// Output checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// ours | ca | autoencoder
    #[arg(long)]
    variant: Option<String>,
    /// Comma-separated learning rates.
    #[arg(long)]
    lr_grid: Option<String>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    momentum: Option<f64>,
    /// Training log (TSV); defaults to `<out>.log.tsv`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalReconArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    /// Network to score; omit for baselines only.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Comma-separated baselines (avg_view, avg_viewgrid, class_avg_view, class_avg_viewgrid), `all` or `none`.
    #[arg(long)]
    baselines: Option<String>,
    /// Comma-separated splits.
    #[arg(long)]
    splits: Option<String>,
    /// Result table (TSV); printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalKnnArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    /// Trained "ours" (or ca) checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Trained autoencoder checkpoint.
    #[arg(long)]
    autoencoder: Option<PathBuf>,
    /// Comma-separated subset of ours, pixels, random, autoencoder.
    #[arg(long)]
    methods: Option<String>,
    /// fc1 | fc2 | fc3 | auto (all layers plus the best).
    #[arg(long)]
    layer: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    /// Number of sampling seeds to average (seed, seed+1, ...).
    #[arg(long)]
    seeds: Option<usize>,
    /// seen | unseen | both
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Object index in the dataset file.
    #[arg(long)]
    object: usize,
    /// Observed view as `row,col` (elevation row, azimuth column).
    #[arg(long, default_value = "0,0")]
    view: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct HeatmapArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Class name or id.
    #[arg(long)]
    class: String,
    /// Split the instances come from.
    #[arg(long, default_value = "test")]
    split: String,
    /// Output prefix: writes `<out>.pgm` and `<out>.txt`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[command(flatten)]
    common: Common,
    /// Random instances per layer and per variant.
    #[arg(long, default_value_t = 20)]
    instances: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Train(a) => commands::train(a),
        Command::EvalRecon(a) => commands::eval_recon(a),
        Command::EvalKnn(a) => commands::eval_knn(a),
        Command::Export(a) => commands::export(a),
        Command::Heatmap(a) => commands::heatmap(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
