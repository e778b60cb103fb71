//! Model scoring with Pearson R and the generalizability protocols:
//! self-fit, within-subject, pairwise between-subject, leave-one-out average
//! model, validation on withheld subjects, and resting-state overfit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::dataset::{RoiMatrix, RunKey, RunLabel};
use crate::design::HrTarget;
use crate::error::{Error, Result};
use crate::fit::{fit_gp, fit_linear, LambdaChoice};
use crate::gp::{sexpr, ExpressionGenome, GpConfig, GpRunResult, Progress};
use crate::ridge::{LinearModel, LINEAR_HEADER};
use crate::scalar::{fmt17, mean, sample_sd, Real};

/// Pearson product-moment correlation, clamped to [-1, 1].
///
/// Errors when either input is constant, since the coefficient is undefined.
pub fn pearson_r<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("series lengths {} and {} differ", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two samples".into()));
    }
    let ma = mean(a).expect("nonempty");
    let mb = mean(b).expect("nonempty");
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > T::zero()) || !(sbb > T::zero()) {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    let denom = match (saa * sbb).sqrt() {
        d if d.is_finite() && d > T::zero() => d,
        _ => saa.sqrt() * sbb.sqrt(),
    };
    let r = sab / denom;
    if !r.is_finite() {
        return Err(Error::UndefinedCorrelation("non-finite correlation".into()));
    }
    Ok(r.max(-T::one()).min(T::one()))
}

/// Either model family behind one apply interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Linear(LinearModel<T>),
    Genome(ExpressionGenome<T>),
}

impl<T: Real> Model<T> {
    pub fn apply(&self, x: &RoiMatrix<T>) -> Result<Vec<T>> {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Genome(g) => g.eval_series(x),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Model::Linear(m) => m.to_text(),
            Model::Genome(g) => sexpr::to_text(g),
        }
    }

    /// Parses either serialized form, dispatching on the header line.
    pub fn parse(text: &str) -> Result<Self> {
        match text.lines().next().map(str::trim) {
            Some(LINEAR_HEADER) => LinearModel::parse(text).map(Model::Linear),
            Some(sexpr::GP_HEADER) => sexpr::parse_text(text).map(Model::Genome),
            _ => Err(Error::Format {
                line: 1,
                msg: "unrecognized model header".into(),
            }),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    SelfFit,
    WithinSubject,
    PairwiseBetween,
    AverageModel,
    PairwiseValidation,
    AverageValidation,
    Resting,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::SelfFit => "self",
            Protocol::WithinSubject => "within",
            Protocol::PairwiseBetween => "between",
            Protocol::AverageModel => "average",
            Protocol::PairwiseValidation => "validation-pairwise",
            Protocol::AverageValidation => "validation-average",
            Protocol::Resting => "resting",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "self" => Protocol::SelfFit,
            "within" => Protocol::WithinSubject,
            "between" => Protocol::PairwiseBetween,
            "average" => Protocol::AverageModel,
            "validation-pairwise" => Protocol::PairwiseValidation,
            "validation-average" => Protocol::AverageValidation,
            "resting" => Protocol::Resting,
            other => return Err(Error::Parameter(format!("unknown protocol {other:?}"))),
        })
    }
}

/// One (source model, target data) score; `None` when R is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry<T> {
    pub source: String,
    pub target: String,
    pub score: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub n: usize,
    pub excluded: usize,
    pub mean: Option<T>,
    pub sd: Option<T>,
}

/// Raw score list for one protocol, with summaries computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub protocol: Protocol,
    pub run_label: Option<RunLabel>,
    pub entries: Vec<ScoreEntry<T>>,
}

pub const REPORT_HEADER: &str = "roiregress-report v1";

impl<T: Real> EvalReport<T> {
    pub fn new(protocol: Protocol, run_label: Option<RunLabel>) -> Self {
        Self {
            protocol,
            run_label,
            entries: Vec::new(),
        }
    }

    fn push(&mut self, source: impl ToString, target: impl ToString, output: &[T], truth: &[T]) -> Result<()> {
        let score = match pearson_r(output, truth) {
            Ok(r) => Some(r),
            Err(Error::UndefinedCorrelation(_)) => None,
            Err(e) => return Err(e),
        };
        self.entries.push(ScoreEntry {
            source: source.to_string(),
            target: target.to_string(),
            score,
        });
        Ok(())
    }

    /// Defined scores in entry order.
    pub fn scores(&self) -> Vec<T> {
        self.entries.iter().filter_map(|e| e.score).collect()
    }

    pub fn excluded(&self) -> usize {
        self.entries.iter().filter(|e| e.score.is_none()).count()
    }

    pub fn mean(&self) -> Option<T> {
        mean(&self.scores())
    }

    /// Sample (n - 1) standard deviation.
    pub fn sd(&self) -> Option<T> {
        sample_sd(&self.scores())
    }

    pub fn summary(&self) -> Summary<T> {
        Summary {
            n: self.scores().len(),
            excluded: self.excluded(),
            mean: self.mean(),
            sd: self.sd(),
        }
    }

    /// Entries satisfying `keep`, e.g. one direction of a within-subject report.
    pub fn filtered(&self, keep: impl Fn(&ScoreEntry<T>) -> bool) -> Self {
        Self {
            protocol: self.protocol,
            run_label: self.run_label,
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let label = self.run_label.map_or_else(|| "all".to_string(), |l| l.to_string());
        let mut s = format!("# {REPORT_HEADER} protocol={} run_label={label}\nsource,target,score\n", self.protocol);
        for e in &self.entries {
            let score = e.score.map_or_else(|| "undefined".to_string(), fmt17);
            s.push_str(&format!("{},{},{score}\n", e.source, e.target));
        }
        let opt = |v: Option<T>| v.map_or_else(|| "NA".to_string(), fmt17);
        let sm = self.summary();
        s.push_str(&format!(
            "# summary n={} excluded={} mean={} sd={}\n",
            sm.n,
            sm.excluded,
            opt(sm.mean),
            opt(sm.sd)
        ));
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut protocol = None;
        let mut run_label = None;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                if meta.trim().starts_with(REPORT_HEADER) {
                    for kv in meta.split_whitespace() {
                        match kv.split_once('=') {
                            Some(("protocol", p)) => protocol = Some(p.parse()?),
                            Some(("run_label", "all")) => run_label = None,
                            Some(("run_label", l)) => run_label = Some(l.parse()?),
                            _ => {}
                        }
                    }
                }
                continue;
            }
            if line.is_empty() || line == "source,target,score" {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::Format {
                    line: i + 1,
                    msg: "expected source,target,score".into(),
                });
            }
            let score = match cells[2].trim() {
                "undefined" => None,
                v => Some(T::lit(v.parse::<f64>().map_err(|_| Error::Parse {
                    row: i + 1,
                    col: 3,
                    msg: format!("bad score {v:?}"),
                })?)),
            };
            entries.push(ScoreEntry {
                source: cells[0].to_string(),
                target: cells[1].to_string(),
                score,
            });
        }
        Ok(Self {
            protocol: protocol.ok_or_else(|| Error::Format {
                line: 1,
                msg: "missing report header".into(),
            })?,
            run_label,
            entries,
        })
    }
}

pub type ModelSet<T> = BTreeMap<RunKey, Model<T>>;
pub type DataSet<T> = BTreeMap<RunKey, RoiMatrix<T>>;
/// Hypothesized response per run label (Loc1 and Loc2 schedules differ).
pub type TargetSet<T> = BTreeMap<RunLabel, HrTarget<T>>;

fn target_for<T: Real>(targets: &TargetSet<T>, label: RunLabel) -> Result<&[T]> {
    targets
        .get(&label)
        .map(|t| t.values.as_slice())
        .ok_or_else(|| Error::Coverage(vec![format!("target for {label}")]))
}

fn data_for<'a, T>(data: &'a DataSet<T>, key: &RunKey) -> Result<&'a RoiMatrix<T>> {
    data.get(key).ok_or_else(|| Error::Coverage(vec![format!("data {key}")]))
}

/// Each model applied to its own training run.
pub fn self_fit<T: Real>(models: &ModelSet<T>, data: &DataSet<T>, targets: &TargetSet<T>) -> Result<EvalReport<T>> {
    let missing: Vec<String> = models
        .keys()
        .filter(|k| !data.contains_key(k))
        .map(|k| format!("data {k}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(missing));
    }
    let mut report = EvalReport::new(Protocol::SelfFit, None);
    for (key, model) in models {
        let out = model.apply(&data[key])?;
        report.push(key, key, &out, target_for(targets, key.label)?)?;
    }
    Ok(report)
}

/// Every subject's Loc1 model scored on its Loc2 run and vice versa.
pub fn within_subject<T: Real>(
    models: &ModelSet<T>,
    data: &DataSet<T>,
    targets: &TargetSet<T>,
) -> Result<EvalReport<T>> {
    let subjects: BTreeSet<&str> = models
        .keys()
        .filter(|k| k.label != RunLabel::Rest)
        .map(|k| k.subject.as_str())
        .collect();
    let mut missing = Vec::new();
    for s in &subjects {
        for label in [RunLabel::Loc1, RunLabel::Loc2] {
            let key = RunKey::new(*s, label);
            if !models.contains_key(&key) {
                missing.push(format!("model {key}"));
            }
            if !data.contains_key(&key) {
                missing.push(format!("data {key}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Coverage(missing));
    }
    let mut report = EvalReport::new(Protocol::WithinSubject, None);
    for s in subjects {
        for label in [RunLabel::Loc1, RunLabel::Loc2] {
            let src = RunKey::new(s, label);
            let dst = RunKey::new(s, label.counterpart().expect("localiser run"));
            let out = models[&src].apply(&data[&dst])?;
            report.push(&src, &dst, &out, target_for(targets, dst.label)?)?;
        }
    }
    Ok(report)
}

fn subjects_with<T: Real>(
    models: &ModelSet<T>,
    data: &DataSet<T>,
    label: RunLabel,
) -> Result<Vec<String>> {
    let subjects: Vec<String> = models
        .keys()
        .filter(|k| k.label == label)
        .map(|k| k.subject.clone())
        .collect();
    let missing: Vec<String> = subjects
        .iter()
        .map(|s| RunKey::new(s.clone(), label))
        .filter(|k| !data.contains_key(k))
        .map(|k| format!("data {k}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(missing));
    }
    if subjects.len() < 2 {
        return Err(Error::Protocol(format!(
            "need at least 2 subjects with {label} models, found {}",
            subjects.len()
        )));
    }
    Ok(subjects)
}

/// Every subject's model applied to every other subject's run of `label`.
pub fn pairwise_between<T: Real>(
    models: &ModelSet<T>,
    data: &DataSet<T>,
    targets: &TargetSet<T>,
    label: RunLabel,
) -> Result<EvalReport<T>> {
    let subjects = subjects_with(models, data, label)?;
    let truth = target_for(targets, label)?;
    let mut report = EvalReport::new(Protocol::PairwiseBetween, Some(label));
    for i in &subjects {
        let src = RunKey::new(i.clone(), label);
        for j in subjects.iter().filter(|j| *j != i) {
            let dst = RunKey::new(j.clone(), label);
            let out = models[&src].apply(&data[&dst])?;
            report.push(&src, &dst, &out, truth)?;
        }
    }
    Ok(report)
}

/// Elementwise mean of the models' outputs on `x`.
pub fn average_output<T: Real>(models: &[&Model<T>], x: &RoiMatrix<T>) -> Result<Vec<T>> {
    if models.is_empty() {
        return Err(Error::Protocol("average of zero models".into()));
    }
    let mut acc = vec![T::zero(); x.n_time()];
    for m in models {
        for (a, v) in acc.iter_mut().zip(m.apply(x)?) {
            *a += v;
        }
    }
    let k = T::from_usize_lossy(models.len());
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(acc)
}

/// For each held-out subject, the average of all other subjects' models
/// applied to the held-out run.
pub fn average_model_loo<T: Real>(
    models: &ModelSet<T>,
    data: &DataSet<T>,
    targets: &TargetSet<T>,
    label: RunLabel,
) -> Result<EvalReport<T>> {
    let subjects = subjects_with(models, data, label)?;
    let truth = target_for(targets, label)?;
    let mut report = EvalReport::new(Protocol::AverageModel, Some(label));
    for j in &subjects {
        let others: Vec<&Model<T>> = subjects
            .iter()
            .filter(|i| *i != j)
            .map(|i| &models[&RunKey::new(i.clone(), label)])
            .collect();
        let dst = RunKey::new(j.clone(), label);
        let out = average_output(&others, &data[&dst])?;
        report.push(format!("avg-without-{j}:{label}"), &dst, &out, truth)?;
    }
    Ok(report)
}

/// Scores on withheld subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    pub pairwise: EvalReport<T>,
    pub average: EvalReport<T>,
}

/// Applies every `label` model, and their average, to each validation subject's run.
pub fn apply_to_validation<T: Real>(
    models: &ModelSet<T>,
    validation_data: &DataSet<T>,
    targets: &TargetSet<T>,
    label: RunLabel,
) -> Result<ValidationReport<T>> {
    let modelled: BTreeSet<&str> = models.keys().map(|k| k.subject.as_str()).collect();
    let validation: Vec<&RunKey> = validation_data.keys().filter(|k| k.label == label).collect();
    if validation.is_empty() {
        return Err(Error::Protocol(format!("no validation runs with label {label}")));
    }
    let overlap: Vec<&str> = validation
        .iter()
        .map(|k| k.subject.as_str())
        .filter(|s| modelled.contains(s))
        .collect();
    if !overlap.is_empty() {
        return Err(Error::Protocol(format!(
            "validation subjects also modelled: {}",
            overlap.join(", ")
        )));
    }
    let sources: Vec<(&RunKey, &Model<T>)> = models.iter().filter(|(k, _)| k.label == label).collect();
    if sources.is_empty() {
        return Err(Error::Protocol(format!("no {label} models to validate")));
    }
    let truth = target_for(targets, label)?;
    let mut pairwise = EvalReport::new(Protocol::PairwiseValidation, Some(label));
    let mut average = EvalReport::new(Protocol::AverageValidation, Some(label));
    let all: Vec<&Model<T>> = sources.iter().map(|(_, m)| *m).collect();
    for dst in validation {
        let x = data_for(validation_data, dst)?;
        for (src, m) in &sources {
            pairwise.push(src, dst, &m.apply(x)?, truth)?;
        }
        average.push(format!("avg-all:{label}"), dst, &average_output(&all, x)?, truth)?;
    }
    Ok(ValidationReport { pairwise, average })
}

/// Self-fit scores of models fit directly to data unrelated to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct RestingResult<T> {
    pub r_linear: Option<T>,
    pub r_gp: Option<T>,
    pub linear: LinearModel<T>,
    pub genome: ExpressionGenome<T>,
}

/// Fits one linear and one GP model (best of `gp_runs`) to `(x_rest, target)`
/// and scores each on the same data.
pub fn resting_overfit<T: Real>(
    x_rest: &RoiMatrix<T>,
    target: &HrTarget<T>,
    lambda: &LambdaChoice<T>,
    gp: &GpConfig,
    gp_runs: usize,
    progress: &(dyn Fn(usize, Progress) + Sync),
) -> Result<RestingResult<T>> {
    let y = &target.values;
    let linear = fit_linear(x_rest, y, lambda)?.model;
    let r_linear = pearson_r(&linear.predict(x_rest)?, y).ok();
    let genome = fit_gp(x_rest, y, gp, gp_runs, true, progress)?.selection.genome;
    let r_gp = pearson_r(&genome.eval_series(x_rest)?, y).ok();
    Ok(RestingResult {
        r_linear,
        r_gp,
        linear,
        genome,
    })
}

/// Holdout R of each run's best genome; `None` where undefined.
pub fn candidate_scores<T: Real>(
    results: &[GpRunResult<T>],
    holdout_x: &RoiMatrix<T>,
    holdout_y: &[T],
) -> Result<Vec<Option<T>>> {
    results
        .iter()
        .map(|r| {
            let out = r.best.eval_series(holdout_x)?;
            Ok(pearson_r(&out, holdout_y).ok())
        })
        .collect()
}

/// Counts of values in `bins` equal-width bins spanning [-1, 1].
pub fn score_histogram<T: Real>(scores: &[T], bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    if bins == 0 {
        return h;
    }
    for &s in scores {
        let pos = ((s.as_f64() + 1.0) / 2.0 * bins as f64).floor();
        let idx = (pos.max(0.0) as usize).min(bins - 1);
        h[idx] += 1;
    }
    h
}
