//! Fitness: exact mean squared error, and coevolved fitness predictors that
//! estimate it on a subset of time points.

use rand::seq::index::sample;
use rand::Rng;

use super::config::GpConfig;
use super::genome::ExpressionGenome;
use crate::dataset::RoiMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean of squared residuals.
pub fn mse<T: Real>(predicted: &[T], target: &[T]) -> Result<T> {
    if predicted.len() != target.len() {
        return Err(Error::Shape(format!(
            "prediction has {} values, target has {}",
            predicted.len(),
            target.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(sq_err_sum(predicted, target) / T::from_usize_lossy(target.len()))
}

fn sq_err_sum<T: Real>(p: &[T], y: &[T]) -> T {
    p.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum()
}

/// Maps NaN to +inf so fitness values always order.
#[inline]
pub(crate) fn sanitize<T: Real>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Exact MSE of a genome over all rows; infinite on overflow.
pub fn exact_mse<T: Real>(g: &ExpressionGenome<T>, x: &RoiMatrix<T>, y: &[T]) -> Result<T> {
    let pred = g.eval_series(x)?;
    mse(&pred, y).map(sanitize)
}

/// Subset of time indices on which fitness is estimated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitnessPredictor {
    indices: Vec<usize>,
}

impl FitnessPredictor {
    /// Sorted, deduplicated indices; each must be below `n_time`.
    pub fn new(mut indices: Vec<usize>, n_time: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::Parameter("fitness predictor is empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_time) {
            return Err(Error::Parameter(format!("predictor index {bad} >= T = {n_time}")));
        }
        Ok(Self { indices })
    }

    pub fn full(n_time: usize) -> Self {
        Self {
            indices: (0..n_time).collect(),
        }
    }

    pub fn size_for(fraction: f64, n_time: usize) -> usize {
        ((fraction * n_time as f64).round() as usize).clamp(1, n_time)
    }

    pub fn random<R: Rng + ?Sized>(size: usize, n_time: usize, rng: &mut R) -> Self {
        let mut indices = sample(rng, n_time, size.min(n_time)).into_vec();
        indices.sort_unstable();
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Resamples `ceil(fraction · size)` indices to values not already present.
    pub fn mutated<R: Rng + ?Sized>(&self, fraction: f64, n_time: usize, rng: &mut R) -> Self {
        let k = self.indices.len();
        if k >= n_time {
            return self.clone();
        }
        let n_swap = ((fraction * k as f64).ceil() as usize).clamp(1, k);
        let mut idx = self.indices.clone();
        let mut present = vec![false; n_time];
        idx.iter().for_each(|&i| present[i] = true);
        for pos in sample(rng, k, n_swap) {
            let mut fresh = rng.random_range(0..n_time);
            while present[fresh] {
                fresh = rng.random_range(0..n_time);
            }
            present[idx[pos]] = false;
            present[fresh] = true;
            idx[pos] = fresh;
        }
        idx.sort_unstable();
        Self { indices: idx }
    }

    /// Row-major copy of the selected rows and the matching target values.
    pub fn gather<T: Real>(&self, x: &RoiMatrix<T>, y: &[T]) -> (Vec<T>, Vec<T>) {
        let mut rows = Vec::with_capacity(self.indices.len() * x.n_rois());
        for &t in &self.indices {
            rows.extend_from_slice(x.row(t));
        }
        (rows, self.indices.iter().map(|&t| y[t]).collect())
    }
}

/// MSE restricted to the predictor's time points.
pub fn predicted_fitness<T: Real>(
    g: &ExpressionGenome<T>,
    x: &RoiMatrix<T>,
    y: &[T],
    p: &FitnessPredictor,
) -> Result<T> {
    if p.indices().is_empty() {
        return Err(Error::Parameter("fitness predictor is empty".into()));
    }
    if x.n_time() != y.len() {
        return Err(Error::Shape("data and target lengths differ".into()));
    }
    if let Some(&bad) = p.indices().iter().find(|&&i| i >= y.len()) {
        return Err(Error::Parameter(format!("predictor index {bad} >= T = {}", y.len())));
    }
    g.check_binding(x.n_rois())?;
    let (rows, ys) = p.gather(x, y);
    let pred = g.eval_block(&rows, x.n_rois(), &mut Vec::new());
    mse(&pred, &ys).map(sanitize)
}

/// A genome with its exact MSE, used to score predictors.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub genome: ExpressionGenome<T>,
    pub exact: T,
}

/// How badly a predictor ranks the trainers: number of discordant trainer
/// pairs, then mean absolute error of its estimates (lower is better).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PredictorScore {
    pub discordant_pairs: usize,
    pub mean_abs_error: f64,
}

pub fn score_predictor<T: Real>(
    p: &FitnessPredictor,
    trainers: &[Trainer<T>],
    x: &RoiMatrix<T>,
    y: &[T],
) -> PredictorScore {
    let (rows, ys) = p.gather(x, y);
    let mut scratch = Vec::new();
    let est: Vec<f64> = trainers
        .iter()
        .map(|t| {
            let pred = t.genome.eval_block(&rows, x.n_rois(), &mut scratch);
            let m = sq_err_sum(&pred, &ys) / T::from_usize_lossy(ys.len());
            sanitize(m).as_f64()
        })
        .collect();
    let exact: Vec<f64> = trainers.iter().map(|t| t.exact.as_f64()).collect();
    let mut discordant = 0;
    for i in 0..trainers.len() {
        for j in i + 1..trainers.len() {
            let a = exact[i].partial_cmp(&exact[j]);
            let b = est[i].partial_cmp(&est[j]);
            if a != b {
                discordant += 1;
            }
        }
    }
    let mae = est
        .iter()
        .zip(&exact)
        .map(|(e, x)| {
            let d = (e - x).abs();
            if d.is_finite() {
                d
            } else {
                f64::MAX
            }
        })
        .sum::<f64>()
        / trainers.len().max(1) as f64;
    PredictorScore {
        discordant_pairs: discordant,
        mean_abs_error: mae,
    }
}

/// Population of fitness predictors evolved against trainer genomes.
#[derive(Debug, Clone)]
pub struct PredictorPopulation {
    members: Vec<FitnessPredictor>,
}

impl PredictorPopulation {
    pub fn random<R: Rng + ?Sized>(cfg: &GpConfig, n_time: usize, rng: &mut R) -> Self {
        let size = FitnessPredictor::size_for(cfg.predictor_size_fraction, n_time);
        Self {
            members: (0..cfg.predictors)
                .map(|_| FitnessPredictor::random(size, n_time, rng))
                .collect(),
        }
    }

    pub fn members(&self) -> &[FitnessPredictor] {
        &self.members
    }

    /// Runs `predictor_generations` rounds of (μ + μ) selection: every member
    /// spawns one mutant and the best `predictors` of parents and mutants
    /// survive. Returns the best predictor.
    pub fn coevolve<T: Real, R: Rng + ?Sized>(
        &mut self,
        trainers: &[Trainer<T>],
        x: &RoiMatrix<T>,
        y: &[T],
        cfg: &GpConfig,
        rng: &mut R,
    ) -> FitnessPredictor {
        let n_time = y.len();
        let mut scored: Vec<(PredictorScore, FitnessPredictor)> = self
            .members
            .drain(..)
            .map(|p| (score_predictor(&p, trainers, x, y), p))
            .collect();
        for _ in 0..cfg.predictor_generations {
            let children: Vec<_> = scored
                .iter()
                .map(|(_, p)| p.mutated(cfg.predictor_mutation_fraction, n_time, rng))
                .map(|c| (score_predictor(&c, trainers, x, y), c))
                .collect();
            scored.extend(children);
            // stable: parents win ties
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            scored.truncate(cfg.predictors);
        }
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        self.members = scored.into_iter().map(|(_, p)| p).collect();
        self.members[0].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::sexpr::parse_sexpr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((mse(&[1.0, 2.0, 3.0], &[2.0, 4.0, 3.0]).unwrap() - 5.0 / 3.0_f64).abs() < 1e-15);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn predicted_fitness_examples() {
        let x = RoiMatrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0]], 1.0).unwrap();
        let y = [1.0, 1.0, 3.0, 3.0];
        let zero: ExpressionGenome<f64> = ExpressionGenome::constant(0.0);
        let p = FitnessPredictor::new(vec![0, 1], 4).unwrap();
        assert_eq!(predicted_fitness(&zero, &x, &y, &p).unwrap(), 1.0);
        let g: ExpressionGenome<f64> = parse_sexpr("(* x0 0.5)").unwrap();
        let full = FitnessPredictor::full(4);
        assert_eq!(
            predicted_fitness(&g, &x, &y, &full).unwrap(),
            exact_mse(&g, &x, &y).unwrap()
        );
        let one = FitnessPredictor::new(vec![1], 4).unwrap();
        assert_eq!(predicted_fitness(&ExpressionGenome::variable(0), &x, &[9.0, 2.0, 0.0, 0.0], &one).unwrap(), 0.0);
        assert!(FitnessPredictor::new(vec![], 4).is_err());
        assert!(FitnessPredictor::new(vec![4], 4).is_err());
    }

    #[test]
    fn predictor_mutation_keeps_indices_unique() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = FitnessPredictor::random(68, 340, &mut rng);
        assert_eq!(FitnessPredictor::size_for(0.2, 340), 68);
        for _ in 0..200 {
            let m = p.mutated(0.1, 340, &mut rng);
            assert_eq!(m.indices().len(), 68);
            assert!(m.indices().windows(2).all(|w| w[0] < w[1]));
            let changed = m.indices().iter().filter(|i| !p.indices().contains(i)).count();
            assert!((1..=7).contains(&changed));
        }
    }

    #[test]
    fn coevolution_prefers_consistent_ranking() {
        // trainers whose error is concentrated in the first half of the series
        let n = 40;
        let col: Vec<f64> = (0..n).map(|t| t as f64).collect();
        let x = RoiMatrix::from_columns(&[col], 1.0).unwrap();
        let y: Vec<f64> = (0..n).map(|t| if t < 20 { 0.0 } else { t as f64 }).collect();
        let trainers: Vec<Trainer<f64>> = ["x0", "(* x0 0.5)", "(* x0 1.5)", "0.0", "(* x0 x0)"]
            .iter()
            .map(|s| {
                let genome = parse_sexpr(s).unwrap();
                let exact = exact_mse(&genome, &x, &y).unwrap();
                Trainer { genome, exact }
            })
            .collect();
        let cfg = GpConfig { predictor_size_fraction: 0.1, predictor_generations: 30, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pop = PredictorPopulation::random(&cfg, n, &mut rng);
        let before = pop.members().iter().map(|p| score_predictor(p, &trainers, &x, &y).discordant_pairs).min().unwrap();
        let best = pop.coevolve(&trainers, &x, &y, &cfg, &mut rng);
        let after = score_predictor(&best, &trainers, &x, &y).discordant_pairs;
        assert!(after <= before);
        assert_eq!(pop.members().len(), cfg.predictors);
    }
}
