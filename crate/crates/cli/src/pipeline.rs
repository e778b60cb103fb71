//! Pipeline settings shared by `fit` and `eval`, with a flat `key = value`
//! file format. Keys are the long flag names with `-` replaced by `_`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use roiregress::design::{CategoryScope, HrfParams, LocalizerOrder};
use roiregress::gp::GpConfig;
use roiregress::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Linear,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GpSelect {
    /// Lowest MSE on the fitted run.
    Best,
    /// Highest R on the same subject's other run.
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Order {
    Loc1,
    Loc2,
}

impl From<Order> for LocalizerOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Loc1 => LocalizerOrder::Loc1,
            Order::Loc2 => LocalizerOrder::Loc2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub validation_manifest: Option<PathBuf>,
    pub atlas: String,
    pub header: bool,
    pub tr: f64,
    pub zscore: bool,
    pub scope: CategoryScope,
    pub schedule_loc1: Option<PathBuf>,
    pub schedule_loc2: Option<PathBuf>,
    /// Stimulus order whose target is used for resting runs.
    pub rest_order: Order,
    pub hrf: HrfParams,
    pub method: Method,
    pub lambda: f64,
    pub gcv: bool,
    pub gp: GpConfig,
    pub gp_runs: usize,
    pub gp_select: GpSelect,
    pub standardize_target: bool,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            validation_manifest: None,
            atlas: "default".into(),
            header: false,
            tr: 1.0,
            zscore: false,
            scope: CategoryScope::AllStims,
            schedule_loc1: None,
            schedule_loc2: None,
            rest_order: Order::Loc1,
            hrf: HrfParams::default(),
            method: Method::Linear,
            lambda: 1.0,
            gcv: false,
            gp: GpConfig::desk(),
            gp_runs: 10,
            gp_select: GpSelect::Best,
            standardize_target: true,
            out_dir: None,
            seed: 0,
        }
    }
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("bad value {value:?} for {key}")))
}

fn parse_enum<V: clap::ValueEnum>(key: &str, value: &str) -> Result<V> {
    V::from_str(value, true).map_err(|_| Error::Parameter(format!("bad value {value:?} for {key}")))
}

fn enum_name<V: clap::ValueEnum>(v: &V) -> String {
    v.to_possible_value().expect("not skipped").get_name().to_string()
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(String::new, |p| p.display().to_string())
}

impl PipelineConfig {
    /// Every recognised key, in file order.
    pub const KEYS: &'static [&'static str] = &[
        "manifest",
        "validation_manifest",
        "atlas",
        "header",
        "tr",
        "zscore",
        "scope",
        "schedule_loc1",
        "schedule_loc2",
        "rest_order",
        "hrf_peak_delay",
        "hrf_undershoot_delay",
        "hrf_peak_dispersion",
        "hrf_undershoot_dispersion",
        "hrf_ratio",
        "hrf_length",
        "method",
        "lambda",
        "gcv",
        "gp_islands",
        "gp_pop",
        "gp_elitism",
        "gp_migrations",
        "gp_generations",
        "gp_crossover_rate",
        "gp_mutation_rate",
        "gp_mutation_chances",
        "gp_trainers",
        "gp_predictors",
        "gp_predictor_fraction",
        "gp_predictor_generations",
        "gp_max_nodes",
        "gp_tournament",
        "gp_stop_mse",
        "gp_runs",
        "gp_select",
        "standardize_target",
        "out_dir",
        "seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = |v: &str| if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        match key {
            "manifest" => self.manifest = path(value),
            "validation_manifest" => self.validation_manifest = path(value),
            "atlas" => self.atlas = value.to_string(),
            "header" => self.header = parse(key, value)?,
            "tr" => self.tr = parse(key, value)?,
            "zscore" => self.zscore = parse(key, value)?,
            "scope" => self.scope = value.parse()?,
            "schedule_loc1" => self.schedule_loc1 = path(value),
            "schedule_loc2" => self.schedule_loc2 = path(value),
            "rest_order" => self.rest_order = parse_enum(key, value)?,
            "hrf_peak_delay" => self.hrf.peak_delay = parse(key, value)?,
            "hrf_undershoot_delay" => self.hrf.undershoot_delay = parse(key, value)?,
            "hrf_peak_dispersion" => self.hrf.peak_dispersion = parse(key, value)?,
            "hrf_undershoot_dispersion" => self.hrf.undershoot_dispersion = parse(key, value)?,
            "hrf_ratio" => self.hrf.undershoot_ratio = parse(key, value)?,
            "hrf_length" => self.hrf.length_seconds = parse(key, value)?,
            "method" => self.method = parse_enum(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "gcv" => self.gcv = parse(key, value)?,
            "gp_islands" => self.gp.subpopulations = parse(key, value)?,
            "gp_pop" => self.gp.pop_per_island = parse(key, value)?,
            "gp_elitism" => self.gp.elitism = parse(key, value)?,
            "gp_migrations" => self.gp.migrations = parse(key, value)?,
            "gp_generations" => self.gp.generations_per_migration = parse(key, value)?,
            "gp_crossover_rate" => self.gp.crossover_rate = parse(key, value)?,
            "gp_mutation_rate" => self.gp.mutation_rate = parse(key, value)?,
            "gp_mutation_chances" => self.gp.mutation_chances = parse(key, value)?,
            "gp_trainers" => self.gp.trainers = parse(key, value)?,
            "gp_predictors" => self.gp.predictors = parse(key, value)?,
            "gp_predictor_fraction" => self.gp.predictor_size_fraction = parse(key, value)?,
            "gp_predictor_generations" => self.gp.predictor_generations = parse(key, value)?,
            "gp_max_nodes" => self.gp.max_nodes = parse(key, value)?,
            "gp_tournament" => self.gp.tournament_size = parse(key, value)?,
            "gp_stop_mse" => {
                self.gp.stop_mse = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "gp_runs" => self.gp_runs = parse(key, value)?,
            "gp_select" => self.gp_select = parse_enum(key, value)?,
            "standardize_target" => self.standardize_target = parse(key, value)?,
            "out_dir" => self.out_dir = path(value),
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Parameter(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "manifest" => opt_path(&self.manifest),
            "validation_manifest" => opt_path(&self.validation_manifest),
            "atlas" => self.atlas.clone(),
            "header" => self.header.to_string(),
            "tr" => format!("{:?}", self.tr),
            "zscore" => self.zscore.to_string(),
            "scope" => self.scope.to_string(),
            "schedule_loc1" => opt_path(&self.schedule_loc1),
            "schedule_loc2" => opt_path(&self.schedule_loc2),
            "rest_order" => enum_name(&self.rest_order),
            "hrf_peak_delay" => format!("{:?}", self.hrf.peak_delay),
            "hrf_undershoot_delay" => format!("{:?}", self.hrf.undershoot_delay),
            "hrf_peak_dispersion" => format!("{:?}", self.hrf.peak_dispersion),
            "hrf_undershoot_dispersion" => format!("{:?}", self.hrf.undershoot_dispersion),
            "hrf_ratio" => format!("{:?}", self.hrf.undershoot_ratio),
            "hrf_length" => format!("{:?}", self.hrf.length_seconds),
            "method" => enum_name(&self.method),
            "lambda" => format!("{:?}", self.lambda),
            "gcv" => self.gcv.to_string(),
            "gp_islands" => self.gp.subpopulations.to_string(),
            "gp_pop" => self.gp.pop_per_island.to_string(),
            "gp_elitism" => self.gp.elitism.to_string(),
            "gp_migrations" => self.gp.migrations.to_string(),
            "gp_generations" => self.gp.generations_per_migration.to_string(),
            "gp_crossover_rate" => format!("{:?}", self.gp.crossover_rate),
            "gp_mutation_rate" => format!("{:?}", self.gp.mutation_rate),
            "gp_mutation_chances" => self.gp.mutation_chances.to_string(),
            "gp_trainers" => self.gp.trainers.to_string(),
            "gp_predictors" => self.gp.predictors.to_string(),
            "gp_predictor_fraction" => format!("{:?}", self.gp.predictor_size_fraction),
            "gp_predictor_generations" => self.gp.predictor_generations.to_string(),
            "gp_max_nodes" => self.gp.max_nodes.to_string(),
            "gp_tournament" => self.gp.tournament_size.to_string(),
            "gp_stop_mse" => self.gp.stop_mse.map_or_else(|| "none".into(), |v| format!("{v:?}")),
            "gp_runs" => self.gp_runs.to_string(),
            "gp_select" => enum_name(&self.gp_select),
            "standardize_target" => self.standardize_target.to_string(),
            "out_dir" => opt_path(&self.out_dir),
            "seed" => self.seed.to_string(),
            other => unreachable!("unlisted key {other}"),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in Self::KEYS {
            let _ = writeln!(s, "{key} = {}", self.get(key));
        }
        s
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Format {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Loads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut c = Self::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [
            &mut c.manifest,
            &mut c.validation_manifest,
            &mut c.schedule_loc1,
            &mut c.schedule_loc2,
            &mut c.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tr > 0.0) {
            return Err(Error::Parameter("tr must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Parameter("lambda must be non-negative".into()));
        }
        if self.gp_runs == 0 {
            return Err(Error::Parameter("gp_runs must be at least 1".into()));
        }
        self.gp.validate()
    }
}
