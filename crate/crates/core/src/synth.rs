//! Synthetic multi-subject ROI datasets with planted generating models.
//!
//! Signal ROIs are built so the planted generator applied to a run's matrix
//! reproduces that run's target before noise is added. All other ROIs are
//! independent standard Gaussian series.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Manifest, ManifestEntry, RoiMatrix, RunDescriptor, RunLabel};
use crate::eval::TargetSet;
use crate::error::{Error, Result};
use crate::gp::{derive_seed, sexpr, ExpressionGenome, Node};
use crate::scalar::{fmt17, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum Generator<T> {
    /// `intercept + sum_k weights[k] * x[signal_rois[k]]`.
    LinearMixture { weights: Vec<T>, intercept: T },
    /// Expression text whose variables index ROI columns directly.
    NonLinearPlant(String),
}

impl<T: Real> Generator<T> {
    fn describe(&self) -> String {
        match self {
            Generator::LinearMixture { weights, intercept } => format!(
                "generator = linear\nweights = {}\nintercept = {}\n",
                weights.iter().map(|&w| fmt17(w)).collect::<Vec<_>>().join(","),
                fmt17(*intercept)
            ),
            Generator::NonLinearPlant(text) => format!("generator = nonlinear\nexpression = {}\n", text.trim()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec<T> {
    pub n_subjects: usize,
    pub runs: Vec<RunLabel>,
    pub n_rois: usize,
    pub tr_seconds: T,
    pub generator: Generator<T>,
    /// Columns carrying signal. For a linear mixture, `weights[k]` applies to
    /// `signal_rois[k]`; the last listed ROI is the one solved for.
    pub signal_rois: Vec<usize>,
    pub noise_sd: T,
    pub subject_jitter_sd: T,
    pub seed: u64,
    pub atlas: String,
}

impl<T: Real> SynthSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.n_subjects == 0 || self.runs.is_empty() || self.n_rois == 0 {
            return bad("need at least one subject, run and ROI".into());
        }
        if self.signal_rois.is_empty() {
            return bad("signal_rois is empty".into());
        }
        let set: BTreeSet<usize> = self.signal_rois.iter().copied().collect();
        if set.len() != self.signal_rois.len() {
            return bad("signal_rois has duplicates".into());
        }
        if let Some(&r) = set.iter().find(|&&r| r >= self.n_rois) {
            return bad(format!("signal ROI {r} outside [0, {})", self.n_rois));
        }
        for (name, v) in [("noise_sd", self.noise_sd), ("subject_jitter_sd", self.subject_jitter_sd)] {
            if !v.is_finite() || v < T::zero() {
                return bad(format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.tr_seconds > T::zero()) {
            return bad("tr must be positive".into());
        }
        match &self.generator {
            Generator::LinearMixture { weights, intercept } => {
                if weights.len() != self.signal_rois.len() {
                    return bad(format!(
                        "{} weights for {} signal ROIs",
                        weights.len(),
                        self.signal_rois.len()
                    ));
                }
                if weights.iter().chain([intercept]).any(|w| !w.is_finite()) {
                    return bad("non-finite generator weight".into());
                }
                if *weights.last().expect("nonempty") == T::zero() {
                    return bad("weight of the last signal ROI must be nonzero".into());
                }
            }
            Generator::NonLinearPlant(text) => {
                let g: ExpressionGenome<T> = sexpr::parse_sexpr(text)?;
                let vars: BTreeSet<usize> = g.variables().into_iter().collect();
                if vars != set {
                    return bad(format!(
                        "expression variables {vars:?} differ from signal ROIs {set:?}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Generated runs plus the per-subject planted generator (after jitter).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset<T> {
    pub runs: Vec<(RunDescriptor, RoiMatrix<T>)>,
    pub planted: BTreeMap<String, Generator<T>>,
}

fn gauss<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

pub fn subject_id(i: usize) -> String {
    format!("s{:02}", i + 1)
}

fn jittered<T: Real>(g: &Generator<T>, sd: T, rng: &mut ChaCha8Rng) -> Result<Generator<T>> {
    Ok(match g {
        Generator::LinearMixture { weights, intercept } => Generator::LinearMixture {
            weights: weights.iter().map(|&w| w + sd * gauss::<T>(rng)).collect(),
            intercept: *intercept,
        },
        Generator::NonLinearPlant(text) => {
            let genome: ExpressionGenome<T> = sexpr::parse_sexpr(text)?;
            let nodes = genome
                .nodes()
                .iter()
                .map(|n| match *n {
                    Node::Const(c) => Node::Const(c + sd * gauss::<T>(rng)),
                    other => other,
                })
                .collect();
            let jit = ExpressionGenome::new(nodes, genome.output())?;
            Generator::NonLinearPlant(sexpr::to_sexpr(&jit))
        }
    })
}

/// Smallest-magnitude `x` with `f(x) == 0`, scanning outward from 0 over
/// geometrically spaced points and refining the first sign change by bisection.
fn solve_scalar<T: Real>(mut f: impl FnMut(T) -> T) -> Option<T> {
    let f0 = f(T::zero());
    if f0 == T::zero() {
        return Some(T::zero());
    }
    let mut prev = [(T::zero(), f0), (T::zero(), f0)];
    for k in 1..=200 {
        let mag = T::lit(2f64.powf(k as f64 / 8.0) - 1.0);
        for (side, sign) in [(0, T::one()), (1, -T::one())] {
            let x = sign * mag;
            let fx = f(x);
            let (px, pf) = prev[side];
            if fx == T::zero() {
                return Some(x);
            }
            if fx.is_finite() && pf.is_finite() && (fx > T::zero()) != (pf > T::zero()) {
                return Some(bisect(&mut f, px, pf, x));
            }
            prev[side] = (x, fx);
        }
    }
    None
}

fn bisect<T: Real>(f: &mut impl FnMut(T) -> T, mut a: T, mut fa: T, mut b: T) -> T {
    for _ in 0..200 {
        let m = (a + b) / T::lit(2.0);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return m;
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    if fa.abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

fn plant_run<T: Real>(
    spec: &SynthSpec<T>,
    generator: &Generator<T>,
    target: &[T],
    rng: &mut ChaCha8Rng,
) -> Result<RoiMatrix<T>> {
    let (n, t_len) = (spec.n_rois, target.len());
    let solve = *spec.signal_rois.last().expect("validated");
    let mut data: Vec<T> = (0..n * t_len).map(|_| gauss(rng)).collect();
    match generator {
        Generator::LinearMixture { weights, intercept } => {
            let (w_last, rest) = weights.split_last().expect("validated");
            for t in 0..t_len {
                let row = &mut data[t * n..(t + 1) * n];
                let partial: T = rest.iter().zip(&spec.signal_rois).map(|(&w, &r)| w * row[r]).sum();
                row[solve] = (target[t] - *intercept - partial) / *w_last;
            }
        }
        Generator::NonLinearPlant(text) => {
            let g: ExpressionGenome<T> = sexpr::parse_sexpr(text)?;
            for t in 0..t_len {
                let mut row = data[t * n..(t + 1) * n].to_vec();
                let y = target[t];
                let x = solve_scalar(|v| {
                    row[solve] = v;
                    g.eval_row(&row) - y
                })
                .ok_or_else(|| {
                    Error::Spec(format!("expression cannot reach target value {} at t={t}", fmt17(y)))
                })?;
                data[t * n + solve] = x;
            }
        }
    }
    if spec.noise_sd > T::zero() {
        for v in data.iter_mut() {
            *v += spec.noise_sd * gauss::<T>(rng);
        }
    }
    RoiMatrix::from_row_major(t_len, n, data, spec.tr_seconds)
}

fn label_stream(label: RunLabel) -> u64 {
    match label {
        RunLabel::Loc1 => 0,
        RunLabel::Loc2 => 1,
        RunLabel::Rest => 2,
    }
}

/// Generates every (subject, run) matrix; deterministic in `spec.seed`.
pub fn generate<T: Real>(spec: &SynthSpec<T>, targets: &TargetSet<T>) -> Result<SynthDataset<T>> {
    spec.validate()?;
    let missing: Vec<String> = spec
        .runs
        .iter()
        .filter(|l| !targets.contains_key(l))
        .map(|l| format!("target for {l}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(missing));
    }
    let mut runs = Vec::new();
    let mut planted = BTreeMap::new();
    for i in 0..spec.n_subjects {
        let id = subject_id(i);
        let mut subj_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, i as u64));
        let generator = jittered(&spec.generator, spec.subject_jitter_sd, &mut subj_rng)?;
        for &label in &spec.runs {
            let stream = 0x5EED_0000 + 4 * i as u64 + label_stream(label);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, stream));
            let m = plant_run(spec, &generator, &targets[&label].values, &mut rng)?;
            runs.push((
                RunDescriptor {
                    subject_id: id.clone(),
                    run_label: label,
                    atlas_label: spec.atlas.clone(),
                },
                m,
            ));
        }
        planted.insert(id, generator);
    }
    Ok(SynthDataset { runs, planted })
}

/// I.i.d. Gaussian `n_time x n_rois` matrix with no relation to any target.
pub fn resting_noise<T: Real>(n_rois: usize, n_time: usize, sd: T, seed: u64, tr_seconds: T) -> Result<RoiMatrix<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n_rois * n_time).map(|_| sd * gauss::<T>(&mut rng)).collect();
    RoiMatrix::from_row_major(n_time, n_rois, data, tr_seconds)
}

/// Writes one CSV per run plus `manifest.txt` (first `n_subjects - n_validation`
/// subjects), `validation.txt` (the rest, when any) and the `synth.txt` sidecar.
pub fn write_dataset<T: Real>(dir: &Path, spec: &SynthSpec<T>, ds: &SynthDataset<T>, n_validation: usize) -> Result<()> {
    if n_validation >= spec.n_subjects && n_validation > 0 {
        return Err(Error::Spec("validation subjects must leave at least one modelled subject".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first_validation = spec.n_subjects - n_validation;
    let (mut main, mut val) = (Vec::new(), Vec::new());
    for (desc, m) in &ds.runs {
        let name = format!("{}_{}.csv", desc.subject_id, desc.run_label);
        m.write_csv(&dir.join(&name))?;
        let entry = ManifestEntry {
            descriptor: desc.clone(),
            path: name.into(),
        };
        let idx: usize = desc.subject_id[1..].parse::<usize>().unwrap_or(1) - 1;
        if idx >= first_validation {
            val.push(entry);
        } else {
            main.push(entry);
        }
    }
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("manifest.txt", Manifest::new(main)?.to_text())?;
    if !val.is_empty() {
        write("validation.txt", Manifest::new(val)?.to_text())?;
    }
    let mut side = format!(
        "# roiregress-synth v1\nsubjects = {}\nvalidation_subjects = {n_validation}\nruns = {}\nrois = {}\ntr = {}\nsignal_rois = {}\nnoise_sd = {}\nsubject_jitter_sd = {}\nseed = {}\n",
        spec.n_subjects,
        spec.runs.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
        spec.n_rois,
        fmt17(spec.tr_seconds),
        spec.signal_rois.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
        fmt17(spec.noise_sd),
        fmt17(spec.subject_jitter_sd),
        spec.seed,
    );
    side.push_str(&spec.generator.describe());
    for (id, g) in &ds.planted {
        side.push_str(&format!("\n[{id}]\n{}", g.describe()));
    }
    write("synth.txt", side)
}
