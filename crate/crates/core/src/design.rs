//! Block-design stimulus schedules and hypothesized haemodynamic response targets.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{fmt17, mean, sample_sd, Real};
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Faces,
    Hands,
    Bodies,
    Scrambled,
    Baseline,
}

impl Category {
    /// The four stimulus categories, excluding baseline.
    pub const STIMULI: [Category; 4] = [
        Category::Faces,
        Category::Hands,
        Category::Bodies,
        Category::Scrambled,
    ];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Faces => "faces",
            Category::Hands => "hands",
            Category::Bodies => "bodies",
            Category::Scrambled => "scrambled",
            Category::Baseline => "baseline",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "faces" | "face" => Ok(Category::Faces),
            "hands" | "hand" => Ok(Category::Hands),
            "bodies" | "body" => Ok(Category::Bodies),
            "scrambled" => Ok(Category::Scrambled),
            "baseline" | "rest" | "fixation" => Ok(Category::Baseline),
            other => Err(Error::Parameter(format!("unknown stimulus category {other:?}"))),
        }
    }
}

/// Which blocks contribute to a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CategoryScope {
    AllStims,
    Single(Category),
}

impl CategoryScope {
    pub fn includes(self, c: Category) -> bool {
        match self {
            _ if c == Category::Baseline => false,
            CategoryScope::AllStims => true,
            CategoryScope::Single(s) => s == c,
        }
    }
}

impl fmt::Display for CategoryScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CategoryScope::AllStims => f.write_str("all"),
            CategoryScope::Single(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for CategoryScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" | "all-stims" | "allstims" => Ok(CategoryScope::AllStims),
            other => match other.parse()? {
                Category::Baseline => Err(Error::Parameter("baseline is never a target scope".into())),
                c => Ok(CategoryScope::Single(c)),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub category: Category,
    pub onset_seconds: f64,
    pub duration_seconds: f64,
}

impl Block {
    pub fn end(&self) -> f64 {
        self.onset_seconds + self.duration_seconds
    }
}

/// Sorted, non-overlapping blocks covering `[0, total_duration)`; gaps are baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSchedule {
    blocks: Vec<Block>,
    total_duration_seconds: f64,
}

impl StimulusSchedule {
    /// Validates `blocks` and fills every gap (including a trailing one) with baseline.
    pub fn new(blocks: Vec<Block>, total_duration_seconds: f64) -> Result<Self> {
        let mut filled = Vec::with_capacity(blocks.len());
        let mut cursor = 0.0;
        for (i, b) in blocks.into_iter().enumerate() {
            if !(b.onset_seconds >= 0.0 && b.duration_seconds > 0.0 && b.end().is_finite()) {
                return Err(Error::Parameter(format!("block {} has invalid timing", i + 1)));
            }
            if b.onset_seconds < cursor {
                return Err(Error::Parameter(format!(
                    "block {} starts at {} s, before the previous block ends at {cursor} s",
                    i + 1,
                    b.onset_seconds
                )));
            }
            if b.onset_seconds > cursor {
                filled.push(Block {
                    category: Category::Baseline,
                    onset_seconds: cursor,
                    duration_seconds: b.onset_seconds - cursor,
                });
            }
            cursor = b.end();
            filled.push(b);
        }
        if total_duration_seconds < cursor {
            return Err(Error::Parameter(format!(
                "total duration {total_duration_seconds} s is shorter than the blocks ({cursor} s)"
            )));
        }
        if total_duration_seconds > cursor {
            filled.push(Block {
                category: Category::Baseline,
                onset_seconds: cursor,
                duration_seconds: total_duration_seconds - cursor,
            });
        }
        Ok(Self {
            blocks: filled,
            total_duration_seconds,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_duration_seconds(&self) -> f64 {
        self.total_duration_seconds
    }

    /// Parses `category,onset_seconds,duration_seconds` rows. A header row is tolerated.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 3 {
                return Err(Error::Format {
                    line: i + 1,
                    msg: format!("expected 3 columns, found {}", cells.len()),
                });
            }
            if blocks.is_empty() && cells[0].eq_ignore_ascii_case("category") {
                continue;
            }
            let category: Category = cells[0].parse().map_err(|e: Error| Error::Parse {
                row: i + 1,
                col: 1,
                msg: e.to_string(),
            })?;
            let num = |col: usize| -> Result<f64> {
                cells[col].parse::<f64>().map_err(|_| Error::Parse {
                    row: i + 1,
                    col: col + 1,
                    msg: format!("not a number: {:?}", cells[col]),
                })
            };
            blocks.push(Block {
                category,
                onset_seconds: num(1)?,
                duration_seconds: num(2)?,
            });
        }
        if blocks.is_empty() {
            return Err(Error::EmptyInput);
        }
        let total = blocks.last().map(Block::end).unwrap_or(0.0);
        Self::new(blocks, total)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalizerOrder {
    Loc1,
    Loc2,
}

impl FromStr for LocalizerOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "loc1" => Ok(LocalizerOrder::Loc1),
            "loc2" => Ok(LocalizerOrder::Loc2),
            other => Err(Error::Parameter(format!("unknown localiser order {other:?}"))),
        }
    }
}

pub const BLOCK_SECONDS: f64 = 16.0;

/// Built-in 21-block localiser: baseline, four cycles of the four categories
/// separated by baseline, baseline. Each category appears once in every
/// within-cycle position (a cyclic Latin square); Loc2 uses a different square.
pub fn builtin_localizer_schedule(order: LocalizerOrder) -> StimulusSchedule {
    use Category::*;
    let first_cycle = match order {
        LocalizerOrder::Loc1 => [Faces, Hands, Bodies, Scrambled],
        LocalizerOrder::Loc2 => [Bodies, Faces, Scrambled, Hands],
    };
    let mut seq = vec![Baseline];
    for cycle in 0..4 {
        seq.extend((0..4).map(|pos| first_cycle[(pos + cycle) % 4]));
        seq.push(Baseline);
    }
    let blocks = seq
        .into_iter()
        .enumerate()
        .map(|(i, category)| Block {
            category,
            onset_seconds: i as f64 * BLOCK_SECONDS,
            duration_seconds: BLOCK_SECONDS,
        })
        .collect::<Vec<_>>();
    let total = blocks.len() as f64 * BLOCK_SECONDS;
    StimulusSchedule::new(blocks, total).expect("built-in schedule is valid")
}

/// Square wave sampled at TR resolution: 1 inside in-scope stimulus blocks, else 0.
/// Samples past the end of the schedule are 0.
pub fn boxcar<T: Real>(
    schedule: &StimulusSchedule,
    scope: CategoryScope,
    tr_seconds: f64,
    n_time: usize,
) -> Result<Vec<T>> {
    if n_time == 0 {
        return Err(Error::EmptyInput);
    }
    if !(tr_seconds > 0.0) {
        return Err(Error::Parameter(format!("tr_seconds must be positive, got {tr_seconds}")));
    }
    Ok((0..n_time)
        .map(|t| {
            let time = t as f64 * tr_seconds;
            let on = schedule
                .blocks()
                .iter()
                .any(|b| scope.includes(b.category) && time >= b.onset_seconds && time < b.end());
            if on {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect())
}

/// Two-gamma HRF parameters. Each lobe is a gamma density with mode at its
/// delay and scale equal to its dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrfParams {
    pub peak_delay: f64,
    pub peak_dispersion: f64,
    pub undershoot_delay: f64,
    pub undershoot_dispersion: f64,
    pub undershoot_ratio: f64,
    pub length_seconds: f64,
}

impl Default for HrfParams {
    fn default() -> Self {
        Self {
            peak_delay: 5.0,
            peak_dispersion: 1.0,
            undershoot_delay: 15.0,
            undershoot_dispersion: 1.0,
            undershoot_ratio: 1.0 / 6.0,
            length_seconds: 32.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrfKind {
    TwoGamma,
    Custom,
}

/// HRF sampled at TR resolution, peak-normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Hrf<T> {
    pub kind: HrfKind,
    pub params: Option<HrfParams>,
    kernel: Vec<T>,
}

impl<T: Real> Hrf<T> {
    /// Wraps an arbitrary kernel, rescaling it so its maximum is 1.
    pub fn custom(kernel: Vec<T>) -> Result<Self> {
        let kernel = normalize_peak(kernel)?;
        Ok(Self {
            kind: HrfKind::Custom,
            params: None,
            kernel,
        })
    }

    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }
}

fn normalize_peak<T: Real>(kernel: Vec<T>) -> Result<Vec<T>> {
    if kernel.is_empty() || kernel.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("HRF kernel must be non-empty and finite".into()));
    }
    let peak = kernel.iter().copied().fold(T::neg_infinity(), T::max);
    if !(peak > T::zero()) {
        return Err(Error::Parameter("HRF kernel has no positive value".into()));
    }
    Ok(kernel.into_iter().map(|v| v / peak).collect())
}

fn gamma_pdf_mode(t: f64, delay: f64, dispersion: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let shape = delay / dispersion + 1.0;
    let ln = (shape - 1.0) * t.ln() - t / dispersion - ln_gamma(shape) - shape * dispersion.ln();
    ln.exp()
}

/// Samples `g(t; peak) - c * g(t; undershoot)` on a TR grid over `[0, length]`
/// and rescales the result to a maximum of 1.
pub fn two_gamma_hrf<T: Real>(tr_seconds: f64, params: HrfParams) -> Result<Hrf<T>> {
    let p = params;
    if !(tr_seconds > 0.0) || !(p.length_seconds > 0.0) {
        return Err(Error::Parameter("tr and kernel length must be positive".into()));
    }
    if !(p.peak_dispersion > 0.0 && p.undershoot_dispersion > 0.0) {
        return Err(Error::Parameter("HRF dispersions must be positive".into()));
    }
    if !(p.peak_delay > 0.0 && p.undershoot_delay > 0.0 && p.undershoot_ratio >= 0.0) {
        return Err(Error::Parameter(
            "HRF delays must be positive and the undershoot ratio nonnegative".into(),
        ));
    }
    let n = (p.length_seconds / tr_seconds).floor() as usize + 1;
    let kernel = (0..n)
        .map(|k| {
            let t = k as f64 * tr_seconds;
            let v = gamma_pdf_mode(t, p.peak_delay, p.peak_dispersion)
                - p.undershoot_ratio * gamma_pdf_mode(t, p.undershoot_delay, p.undershoot_dispersion);
            T::lit(v)
        })
        .collect();
    Ok(Hrf {
        kind: HrfKind::TwoGamma,
        params: Some(params),
        kernel: normalize_peak(kernel)?,
    })
}

/// Regression target: the hypothesized response over a run's T samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HrTarget<T> {
    pub values: Vec<T>,
    pub scope: CategoryScope,
}

impl<T: Real> HrTarget<T> {
    pub fn new(values: Vec<T>, scope: CategoryScope) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("target contains non-finite values".into()));
        }
        Ok(Self { values, scope })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Zero-mean, unit-sample-variance copy. A constant target is only centred.
    pub fn standardized(&self) -> Self {
        let mu = mean(&self.values).unwrap_or_else(T::zero);
        let sd = sample_sd(&self.values).unwrap_or_else(T::zero);
        let values = self
            .values
            .iter()
            .map(|&v| if sd > T::zero() { (v - mu) / sd } else { v - mu })
            .collect();
        Self {
            values,
            scope: self.scope,
        }
    }

    pub fn to_csv_string(&self) -> String {
        self.values.iter().map(|&v| fmt17(v) + "\n").collect()
    }

    /// Reads a single-column CSV written by [`HrTarget::to_csv_string`].
    pub fn parse_csv(text: &str, scope: CategoryScope) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                row: i + 1,
                col: 1,
                msg: format!("not a number: {line:?}"),
            })?;
            values.push(T::lit(v));
        }
        Self::new(values, scope)
    }

    pub fn load_csv(path: &Path, scope: CategoryScope) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, scope)
    }
}

/// Causal discrete convolution of a boxcar with the HRF, truncated to the boxcar's length.
pub fn convolve_hr<T: Real>(boxcar: &[T], hrf: &Hrf<T>, scope: CategoryScope) -> Result<HrTarget<T>> {
    if boxcar.is_empty() {
        return Err(Error::EmptyInput);
    }
    let kernel = hrf.kernel();
    let values = (0..boxcar.len())
        .map(|t| {
            let kmax = kernel.len().min(t + 1);
            (0..kmax).map(|k| boxcar[t - k] * kernel[k]).sum()
        })
        .collect();
    HrTarget::new(values, scope)
}

/// Hypothesized response for one scope. `AllStims` is built as the sum of the
/// four per-category responses.
pub fn hr_target<T: Real>(
    schedule: &StimulusSchedule,
    scope: CategoryScope,
    hrf: &Hrf<T>,
    tr_seconds: f64,
    n_time: usize,
) -> Result<HrTarget<T>> {
    match scope {
        CategoryScope::AllStims => all_stims_target(schedule, hrf, tr_seconds, n_time),
        CategoryScope::Single(_) => convolve_hr(&boxcar(schedule, scope, tr_seconds, n_time)?, hrf, scope),
    }
}

/// Elementwise sum of the four single-category responses.
pub fn all_stims_target<T: Real>(
    schedule: &StimulusSchedule,
    hrf: &Hrf<T>,
    tr_seconds: f64,
    n_time: usize,
) -> Result<HrTarget<T>> {
    let mut sum = vec![T::zero(); n_time];
    for c in Category::STIMULI {
        let scope = CategoryScope::Single(c);
        let part = convolve_hr(&boxcar(schedule, scope, tr_seconds, n_time)?, hrf, scope)?;
        for (acc, v) in sum.iter_mut().zip(part.values) {
            *acc += v;
        }
    }
    HrTarget::new(sum, CategoryScope::AllStims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(v: &[f64]) -> usize {
        v.iter().filter(|&&x| x == 1.0).count()
    }

    #[test]
    fn localizer_layout() {
        for order in [LocalizerOrder::Loc1, LocalizerOrder::Loc2] {
            let s = builtin_localizer_schedule(order);
            assert_eq!(s.blocks().len(), 21);
            assert_eq!(s.total_duration_seconds(), 336.0);
            for (i, b) in s.blocks().iter().enumerate() {
                assert_eq!(b.duration_seconds, 16.0);
                assert_eq!(b.category == Category::Baseline, i % 5 == 0, "block {}", i + 1);
            }
            // each category once per within-cycle position
            for pos in 0..4 {
                let mut seen: Vec<_> = (0..4).map(|c| s.blocks()[1 + c * 5 + pos].category).collect();
                seen.sort();
                assert_eq!(seen, Category::STIMULI.to_vec());
            }
        }
        let l1 = builtin_localizer_schedule(LocalizerOrder::Loc1);
        assert_eq!(
            l1.blocks()[0],
            Block {
                category: Category::Baseline,
                onset_seconds: 0.0,
                duration_seconds: 16.0
            }
        );
        let l2 = builtin_localizer_schedule(LocalizerOrder::Loc2);
        let key = |s: &StimulusSchedule| {
            let mut v: Vec<_> = s.blocks().iter().map(|b| (b.category, b.duration_seconds as u64)).collect();
            v.sort();
            v
        };
        assert_eq!(key(&l1), key(&l2));
        assert_ne!(l1, l2);
    }

    #[test]
    fn boxcar_counts() {
        let s = builtin_localizer_schedule(LocalizerOrder::Loc1);
        let all = boxcar::<f64>(&s, CategoryScope::AllStims, 1.0, 336).unwrap();
        assert_eq!((ones(&all), all.len() - ones(&all)), (256, 80));
        let faces = boxcar::<f64>(&s, CategoryScope::Single(Category::Faces), 1.0, 336).unwrap();
        assert_eq!(ones(&faces), 64);
        let rest = StimulusSchedule::new(vec![], 100.0).unwrap();
        assert!(boxcar::<f64>(&rest, CategoryScope::AllStims, 1.0, 100)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(
            boxcar::<f64>(&s, CategoryScope::AllStims, 1.0, 0),
            Err(Error::EmptyInput)
        ));
        // padding past the schedule end
        let long = boxcar::<f64>(&s, CategoryScope::AllStims, 1.0, 340).unwrap();
        assert!(long[336..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn default_hrf_shape() {
        let h = two_gamma_hrf::<f64>(1.0, HrfParams::default()).unwrap();
        let k = h.kernel();
        assert_eq!(k.len(), 33);
        let (argmax, max) = k
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(max, 1.0);
        assert!((4..=6).contains(&argmax), "peak at {argmax}");
        assert!(k[0].abs() < 1e-9);
        assert!(k.iter().any(|&v| v < 0.0), "undershoot present");
        let no_under = two_gamma_hrf::<f64>(
            1.0,
            HrfParams {
                undershoot_ratio: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(no_under.kernel().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn hrf_matches_closed_form_grid() {
        // gamma(6, 1) - gamma(16, 1) / 6 evaluated with factorials directly
        let f = |t: f64| {
            let g6 = t.powi(5) * (-t).exp() / 120.0;
            let g16 = t.powi(15) * (-t).exp() / 1_307_674_368_000.0;
            g6 - g16 / 6.0
        };
        let raw: Vec<f64> = (0..=32).map(|t| f(t as f64)).collect();
        let peak = raw.iter().copied().fold(f64::MIN, f64::max);
        let h = two_gamma_hrf::<f64>(1.0, HrfParams::default()).unwrap();
        for (a, b) in h.kernel().iter().zip(&raw) {
            assert!((a - b / peak).abs() < 1e-12);
        }
    }

    #[test]
    fn hrf_rejects_bad_dispersion() {
        let p = HrfParams {
            peak_dispersion: 0.0,
            ..Default::default()
        };
        assert!(matches!(two_gamma_hrf::<f64>(1.0, p), Err(Error::Parameter(_))));
        assert!(Hrf::<f64>::custom(vec![0.0, -1.0]).is_err());
        assert_eq!(Hrf::custom(vec![0.0, 2.0, 1.0]).unwrap().kernel(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn convolution_identity_and_zero() {
        let h = two_gamma_hrf::<f64>(1.0, HrfParams::default()).unwrap();
        let mut impulse = vec![0.0; 50];
        impulse[0] = 1.0;
        let out = convolve_hr(&impulse, &h, CategoryScope::AllStims).unwrap();
        assert_eq!(&out.values[..33], h.kernel());
        assert!(out.values[33..].iter().all(|&v| v == 0.0));
        let short = convolve_hr(&impulse[..10], &h, CategoryScope::AllStims).unwrap();
        assert_eq!(short.values, h.kernel()[..10].to_vec());
        let zero = convolve_hr(&[0.0; 20], &h, CategoryScope::AllStims).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_stims_is_sum_of_categories() {
        let s = builtin_localizer_schedule(LocalizerOrder::Loc1);
        let h = two_gamma_hrf::<f64>(1.0, HrfParams::default()).unwrap();
        let all = all_stims_target(&s, &h, 1.0, 340).unwrap();
        let mut sum = vec![0.0; 340];
        for c in Category::STIMULI {
            let t = hr_target(&s, CategoryScope::Single(c), &h, 1.0, 340).unwrap();
            sum.iter_mut().zip(&t.values).for_each(|(a, b)| *a += b);
        }
        for (a, b) in all.values.iter().zip(&sum) {
            assert!((a - b).abs() <= 1e-12);
        }
        // single-category schedule
        let one = StimulusSchedule::new(
            vec![Block {
                category: Category::Hands,
                onset_seconds: 10.0,
                duration_seconds: 16.0,
            }],
            60.0,
        )
        .unwrap();
        let all = all_stims_target(&one, &h, 1.0, 60).unwrap();
        let hands = hr_target(&one, CategoryScope::Single(Category::Hands), &h, 1.0, 60).unwrap();
        assert_eq!(all.values, hands.values);
    }

    #[test]
    fn schedule_validation_and_csv() {
        let s = StimulusSchedule::parse_csv("category,onset_seconds,duration_seconds\nfaces,16,16\nhands,48,16\n")
            .unwrap();
        let cats: Vec<_> = s.blocks().iter().map(|b| b.category).collect();
        assert_eq!(
            cats,
            vec![Category::Baseline, Category::Faces, Category::Baseline, Category::Hands]
        );
        assert_eq!(s.total_duration_seconds(), 64.0);
        assert!(StimulusSchedule::parse_csv("faces,0,16\nhands,8,16\n").is_err());
        assert!(StimulusSchedule::parse_csv("feet,0,16\n").is_err());
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("all".parse::<CategoryScope>().unwrap(), CategoryScope::AllStims);
        assert_eq!(
            "Faces".parse::<CategoryScope>().unwrap(),
            CategoryScope::Single(Category::Faces)
        );
        assert!("feet".parse::<CategoryScope>().is_err());
        assert!("baseline".parse::<CategoryScope>().is_err());
    }
}
