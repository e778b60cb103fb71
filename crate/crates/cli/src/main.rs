//! `roiregress` command-line front end.

mod commands;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roiregress::design::CategoryScope;

use pipeline::{GpSelect, Method, Order, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "roiregress", version, about = "Regress hypothesized haemodynamic responses from ROI time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a hypothesized HR target CSV for a block schedule.
    Hr(HrArgs),
    /// Generate a synthetic multi-subject dataset with a planted model.
    Synth(SynthArgs),
    /// Fit one model per manifest run.
    Fit(PipelineArgs),
    /// Score fitted models under a generalizability protocol.
    Eval(EvalArgs),
    /// t-test on score lists or reports; prints t,df,p.
    Stats(StatsArgs),
    /// Pretty-print a serialized model.
    Inspect {
        model: PathBuf,
    },
}

#[derive(Args, Debug)]
struct HrArgs {
    /// Built-in localiser order (ignored with --schedule).
    #[arg(long, value_enum, default_value = "loc1")]
    order: Order,
    /// CSV schedule `category,onset,duration`.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// `all` or one of faces, hands, bodies, scrambled.
    #[arg(long, default_value = "all")]
    scope: CategoryScope,
    #[arg(long, default_value_t = 1.0)]
    tr: f64,
    /// Number of time points.
    #[arg(long = "T", alias = "n-time")]
    n_time: usize,
    /// Rescale to zero mean and unit variance.
    #[arg(long)]
    standardize: bool,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum GeneratorKind {
    Linear,
    Nonlinear,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    subjects: usize,
    /// Extra subjects written to validation.txt instead of manifest.txt.
    #[arg(long, default_value_t = 0)]
    validation: usize,
    #[arg(long, default_value_t = 48)]
    rois: usize,
    #[arg(long = "T", alias = "n-time", default_value_t = 336)]
    n_time: usize,
    #[arg(long, default_value_t = 1.0)]
    tr: f64,
    #[arg(long, default_value = "all")]
    scope: CategoryScope,
    /// Standardize the targets before planting.
    #[arg(long)]
    standardize: bool,
    #[arg(long, value_enum, default_value = "linear")]
    generator: GeneratorKind,
    /// Linear weights, one per signal ROI.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    intercept: f64,
    /// Expression text for the non-linear plant, e.g. "(+ (sin x0) x2)".
    #[arg(long)]
    expr: Option<String>,
    /// Signal ROI indices; the last one is solved for.
    #[arg(long, value_delimiter = ',', required = true)]
    signal_rois: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0.0)]
    jitter_sd: f64,
    /// Also write a resting run per subject (pure noise, unit sd).
    #[arg(long)]
    rest: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synthetic")]
    atlas: String,
}

/// Flags mirroring every config-file key; a flag overrides the file.
#[derive(Args, Debug, Default)]
pub struct PipelineArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    validation_manifest: Option<PathBuf>,
    #[arg(long)]
    atlas: Option<String>,
    /// CSV files have a header row.
    #[arg(long)]
    header: Option<bool>,
    #[arg(long)]
    tr: Option<f64>,
    #[arg(long)]
    zscore: Option<bool>,
    #[arg(long)]
    scope: Option<CategoryScope>,
    #[arg(long)]
    schedule_loc1: Option<PathBuf>,
    #[arg(long)]
    schedule_loc2: Option<PathBuf>,
    #[arg(long, value_enum)]
    rest_order: Option<Order>,
    #[arg(long)]
    hrf_peak_delay: Option<f64>,
    #[arg(long)]
    hrf_undershoot_delay: Option<f64>,
    #[arg(long)]
    hrf_peak_dispersion: Option<f64>,
    #[arg(long)]
    hrf_undershoot_dispersion: Option<f64>,
    #[arg(long)]
    hrf_ratio: Option<f64>,
    #[arg(long)]
    hrf_length: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Choose lambda by generalized cross-validation.
    #[arg(long)]
    gcv: Option<bool>,
    #[arg(long)]
    gp_islands: Option<usize>,
    #[arg(long)]
    gp_pop: Option<usize>,
    #[arg(long)]
    gp_elitism: Option<usize>,
    #[arg(long)]
    gp_migrations: Option<usize>,
    #[arg(long)]
    gp_generations: Option<usize>,
    #[arg(long)]
    gp_crossover_rate: Option<f64>,
    #[arg(long)]
    gp_mutation_rate: Option<f64>,
    #[arg(long)]
    gp_mutation_chances: Option<usize>,
    #[arg(long)]
    gp_trainers: Option<usize>,
    #[arg(long)]
    gp_predictors: Option<usize>,
    #[arg(long)]
    gp_predictor_fraction: Option<f64>,
    #[arg(long)]
    gp_predictor_generations: Option<usize>,
    #[arg(long)]
    gp_max_nodes: Option<usize>,
    #[arg(long)]
    gp_tournament: Option<usize>,
    /// Early stop threshold on exact MSE, or `none`.
    #[arg(long)]
    gp_stop_mse: Option<String>,
    #[arg(long)]
    gp_runs: Option<usize>,
    #[arg(long, value_enum)]
    gp_select: Option<GpSelect>,
    #[arg(long)]
    standardize_target: Option<bool>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress GP progress on standard error.
    #[arg(long)]
    quiet: bool,
}

impl PipelineArgs {
    fn resolve(&self) -> roiregress::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let show = |v: Option<String>| v;
        let pairs: [(&str, Option<String>); 39] = [
            ("manifest", path(&self.manifest)),
            ("validation_manifest", path(&self.validation_manifest)),
            ("atlas", self.atlas.clone()),
            ("header", self.header.map(|v| v.to_string())),
            ("tr", self.tr.map(|v| v.to_string())),
            ("zscore", self.zscore.map(|v| v.to_string())),
            ("scope", self.scope.map(|v| v.to_string())),
            ("schedule_loc1", path(&self.schedule_loc1)),
            ("schedule_loc2", path(&self.schedule_loc2)),
            ("rest_order", self.rest_order.map(|o| format!("{o:?}").to_lowercase())),
            ("hrf_peak_delay", self.hrf_peak_delay.map(|v| v.to_string())),
            ("hrf_undershoot_delay", self.hrf_undershoot_delay.map(|v| v.to_string())),
            ("hrf_peak_dispersion", self.hrf_peak_dispersion.map(|v| v.to_string())),
            ("hrf_undershoot_dispersion", self.hrf_undershoot_dispersion.map(|v| v.to_string())),
            ("hrf_ratio", self.hrf_ratio.map(|v| v.to_string())),
            ("hrf_length", self.hrf_length.map(|v| v.to_string())),
            ("method", self.method.map(|m| format!("{m:?}").to_lowercase())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("gcv", self.gcv.map(|v| v.to_string())),
            ("gp_islands", self.gp_islands.map(|v| v.to_string())),
            ("gp_pop", self.gp_pop.map(|v| v.to_string())),
            ("gp_elitism", self.gp_elitism.map(|v| v.to_string())),
            ("gp_migrations", self.gp_migrations.map(|v| v.to_string())),
            ("gp_generations", self.gp_generations.map(|v| v.to_string())),
            ("gp_crossover_rate", self.gp_crossover_rate.map(|v| v.to_string())),
            ("gp_mutation_rate", self.gp_mutation_rate.map(|v| v.to_string())),
            ("gp_mutation_chances", self.gp_mutation_chances.map(|v| v.to_string())),
            ("gp_trainers", self.gp_trainers.map(|v| v.to_string())),
            ("gp_predictors", self.gp_predictors.map(|v| v.to_string())),
            ("gp_predictor_fraction", self.gp_predictor_fraction.map(|v| v.to_string())),
            ("gp_predictor_generations", self.gp_predictor_generations.map(|v| v.to_string())),
            ("gp_max_nodes", self.gp_max_nodes.map(|v| v.to_string())),
            ("gp_tournament", self.gp_tournament.map(|v| v.to_string())),
            ("gp_stop_mse", show(self.gp_stop_mse.clone())),
            ("gp_runs", self.gp_runs.map(|v| v.to_string())),
            ("gp_select", self.gp_select.map(|s| format!("{s:?}").to_lowercase())),
            ("standardize_target", self.standardize_target.map(|v| v.to_string())),
            ("out_dir", path(&self.out_dir)),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProtocolArg {
    #[value(name = "self")]
    SelfFit,
    Within,
    Between,
    Average,
    Validation,
    Resting,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_enum)]
    protocol: ProtocolArg,
    /// Directory holding `<subject>_<label>.model` files.
    #[arg(long)]
    models_dir: PathBuf,
    /// Second models directory scored the same way and compared by Welch t-test.
    #[arg(long)]
    compare: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TestKind {
    Welch,
    Pooled,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Report CSV or one number per line.
    #[arg(long)]
    a: PathBuf,
    /// Second sample for a two-sample test.
    #[arg(long, conflicts_with = "mu")]
    b: Option<PathBuf>,
    /// Hypothesized mean for a one-sample test.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, value_enum, default_value = "welch")]
    test: TestKind,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Hr(a) => commands::hr(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Fit(a) => a.resolve().and_then(|c| commands::fit(&c, a.quiet)),
        Command::Eval(a) => a
            .pipeline
            .resolve()
            .and_then(|c| commands::eval(&c, a.protocol, &a.models_dir, a.compare.as_deref(), a.pipeline.quiet)),
        Command::Stats(a) => commands::stats(&a),
        Command::Inspect { model } => commands::inspect(&model),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
