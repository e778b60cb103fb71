//! Island-model evolution with coevolved fitness predictors.
//!
//! Each island owns a private random stream derived from the run seed and its
//! index, so results do not depend on how islands are scheduled across threads.
//! Every epoch runs `generations_per_migration` generations per island under a
//! fixed predictor; between epochs the best individual of each island is
//! copied over the worst of the next island on a ring, trainers are refreshed
//! and the predictor population is coevolved.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::GpConfig;
use super::genome::ExpressionGenome;
use super::predictor::{exact_mse, sanitize, FitnessPredictor, PredictorPopulation, Trainer};
use super::variation::{crossover, mutate, random_genome};
use crate::dataset::RoiMatrix;
use crate::error::{Error, Result};
use crate::eval::pearson_r;
use crate::scalar::Real;

const PREDICTOR_STREAM: u64 = 0xF17E_55E5;
const BATCH_STREAM: u64 = 0xBA7C_0000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Seed used for run `index` of a batch.
pub fn batch_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, BATCH_STREAM + index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<T> {
    pub genome: ExpressionGenome<T>,
    /// Predicted fitness (MSE on the current predictor's time points).
    pub fitness: T,
}

fn cmp_fitness<T: Real>(a: T, b: T) -> Ordering {
    sanitize(a).partial_cmp(&sanitize(b)).unwrap_or(Ordering::Equal)
}

/// Rows and targets at a predictor's time points, shared by all islands in an epoch.
pub struct Evaluator<'a, T> {
    rows: Vec<T>,
    ys: Vec<T>,
    n_cols: usize,
    _x: std::marker::PhantomData<&'a T>,
}

impl<'a, T: Real> Evaluator<'a, T> {
    pub fn new(x: &'a RoiMatrix<T>, y: &'a [T], predictor: &FitnessPredictor) -> Self {
        let (rows, ys) = predictor.gather(x, y);
        Self {
            rows,
            ys,
            n_cols: x.n_rois(),
            _x: std::marker::PhantomData,
        }
    }

    pub fn fitness(&self, g: &ExpressionGenome<T>, scratch: &mut Vec<T>) -> T {
        let pred = g.eval_block(&self.rows, self.n_cols, scratch);
        let sum: T = pred.iter().zip(&self.ys).map(|(&p, &y)| (p - y) * (p - y)).sum();
        sanitize(sum / T::from_usize_lossy(self.ys.len()))
    }
}

/// One subpopulation and its random stream.
#[derive(Debug, Clone)]
pub struct Island<T> {
    population: Vec<Individual<T>>,
    rng: ChaCha8Rng,
    n_vars: usize,
    /// Predicted fitness by structural hash, valid for the current predictor.
    cache: HashMap<u64, T>,
}

const CACHE_LIMIT: usize = 1 << 16;

impl<T: Real> Island<T> {
    /// Random population of `pop_per_island` genomes, evaluated with `eval`.
    pub fn random(cfg: &GpConfig, n_vars: usize, seed: u64, eval: &Evaluator<'_, T>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scratch = Vec::new();
        let population = (0..cfg.pop_per_island)
            .map(|_| {
                let genome = random_genome(cfg, n_vars, &mut rng);
                let fitness = eval.fitness(&genome, &mut scratch);
                Individual { genome, fitness }
            })
            .collect();
        Self {
            population,
            rng,
            n_vars,
            cache: HashMap::new(),
        }
    }

    fn score(&mut self, g: &ExpressionGenome<T>, eval: &Evaluator<'_, T>, scratch: &mut Vec<T>) -> T {
        let key = g.structural_hash();
        if let Some(&f) = self.cache.get(&key) {
            return f;
        }
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        let f = eval.fitness(g, scratch);
        self.cache.insert(key, f);
        f
    }

    pub fn population(&self) -> &[Individual<T>] {
        &self.population
    }

    /// Index of the lowest predicted fitness (first on ties).
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, ind) in self.population.iter().enumerate() {
            if cmp_fitness(ind.fitness, self.population[best].fitness) == Ordering::Less {
                best = i;
            }
        }
        best
    }

    pub fn best(&self) -> &Individual<T> {
        &self.population[self.best_index()]
    }

    fn worst_index(&self) -> usize {
        let mut worst = 0;
        for (i, ind) in self.population.iter().enumerate() {
            if cmp_fitness(ind.fitness, self.population[worst].fitness) != Ordering::Less {
                worst = i;
            }
        }
        worst
    }

    fn tournament(&mut self, size: usize) -> usize {
        let n = self.population.len();
        let mut best = self.rng.random_range(0..n);
        for _ in 1..size {
            let c = self.rng.random_range(0..n);
            if cmp_fitness(self.population[c].fitness, self.population[best].fitness) == Ordering::Less {
                best = c;
            }
        }
        best
    }

    /// Re-scores every member, e.g. after the predictor changed.
    pub fn reevaluate(&mut self, eval: &Evaluator<'_, T>) {
        let mut scratch = Vec::new();
        self.cache.clear();
        let mut pop = std::mem::take(&mut self.population);
        for ind in &mut pop {
            ind.fitness = self.score(&ind.genome, eval, &mut scratch);
        }
        self.population = pop;
    }

    /// One generation: elites survive unchanged, the rest of the population is
    /// refilled with tournament-selected, recombined and mutated offspring.
    pub fn step(&mut self, cfg: &GpConfig, eval: &Evaluator<'_, T>, scratch: &mut Vec<T>) {
        let n = self.population.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cmp_fitness(self.population[a].fitness, self.population[b].fitness));
        let mut next: Vec<Individual<T>> = order[..cfg.elitism.min(n)]
            .iter()
            .map(|&i| self.population[i].clone())
            .collect();
        while next.len() < n {
            let pa = self.tournament(cfg.tournament_size);
            let pb = self.tournament(cfg.tournament_size);
            let (a, b) = (&self.population[pa], &self.population[pb]);
            let (mut c1, mut c2, crossed) = match crossover(&a.genome, &b.genome, cfg, &mut self.rng) {
                Some((x, y)) => (
                    Individual { genome: x, fitness: T::infinity() },
                    Individual { genome: y, fitness: T::infinity() },
                    true,
                ),
                None => (a.clone(), b.clone(), false),
            };
            for child in [&mut c1, &mut c2] {
                let mutated = mutate(&mut child.genome, cfg, self.n_vars, &mut self.rng);
                if crossed || mutated {
                    child.fitness = self.score(&child.genome, eval, scratch);
                }
            }
            next.push(c1);
            if next.len() < n {
                next.push(c2);
            }
        }
        self.population = next;
    }

    pub fn run(&mut self, generations: usize, cfg: &GpConfig, eval: &Evaluator<'_, T>) {
        let mut scratch = Vec::new();
        for _ in 0..generations {
            self.step(cfg, eval, &mut scratch);
        }
    }
}

/// Runs one island from a random start for `generations_per_migration`
/// generations under a fixed predictor and returns its population.
pub fn evolve_island<T: Real>(
    x: &RoiMatrix<T>,
    y: &[T],
    cfg: &GpConfig,
    predictor: &FitnessPredictor,
    island_seed: u64,
) -> Result<Vec<Individual<T>>> {
    cfg.validate()?;
    check_inputs(x, y)?;
    let eval = Evaluator::new(x, y, predictor);
    let mut island = Island::random(cfg, x.n_rois(), island_seed, &eval);
    island.run(cfg.generations_per_migration, cfg, &eval);
    Ok(island.population)
}

fn check_inputs<T: Real>(x: &RoiMatrix<T>, y: &[T]) -> Result<()> {
    if x.n_time() != y.len() {
        return Err(Error::Shape(format!(
            "data has {} time points but target has {}",
            x.n_time(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("target contains non-finite values".into()));
    }
    Ok(())
}

/// Outcome of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct GpRunResult<T> {
    pub seed: u64,
    /// Per island: every final individual with its exact MSE.
    pub final_population: Vec<Vec<(ExpressionGenome<T>, T)>>,
    pub best: ExpressionGenome<T>,
    pub best_mse: T,
    /// Best exact MSE among island elites after each epoch.
    pub history: Vec<T>,
}

impl<T: Real> GpRunResult<T> {
    /// `migration,best_mse` rows with a header.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("migration,best_mse\n");
        for (i, m) in self.history.iter().enumerate() {
            s.push_str(&format!("{i},{}\n", crate::scalar::fmt17(*m)));
        }
        s
    }
}

/// Per-epoch progress notification.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub epoch: usize,
    pub epochs: usize,
    pub best_mse: f64,
}

fn better_candidate<T: Real>(a: (T, usize), b: (T, usize)) -> bool {
    match cmp_fitness(a.0, b.0) {
        Ordering::Less => true,
        Ordering::Equal => a.1 < b.1,
        Ordering::Greater => false,
    }
}

fn pick_trainers<T: Real>(
    islands: &[Island<T>],
    x: &RoiMatrix<T>,
    y: &[T],
    cfg: &GpConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Trainer<T>> {
    let mut genomes: Vec<ExpressionGenome<T>> = islands
        .iter()
        .take(cfg.trainers)
        .map(|isl| isl.best().genome.clone())
        .collect();
    while genomes.len() < cfg.trainers {
        let isl = &islands[rng.random_range(0..islands.len())];
        let k = rng.random_range(0..isl.population.len());
        genomes.push(isl.population[k].genome.clone());
    }
    genomes
        .into_iter()
        .map(|genome| {
            let exact = exact_mse(&genome, x, y).unwrap_or_else(|_| T::infinity());
            Trainer { genome, exact }
        })
        .collect()
}

/// Evolves a full island model and selects the final best by exact MSE.
pub fn evolve<T: Real>(x: &RoiMatrix<T>, y: &[T], cfg: &GpConfig) -> Result<GpRunResult<T>> {
    evolve_with_progress(x, y, cfg, &|_| {})
}

pub fn evolve_with_progress<T: Real>(
    x: &RoiMatrix<T>,
    y: &[T],
    cfg: &GpConfig,
    progress: &(dyn Fn(Progress) + Sync),
) -> Result<GpRunResult<T>> {
    cfg.validate()?;
    check_inputs(x, y)?;
    let n_time = y.len();
    let n_vars = x.n_rois();
    let seed = cfg.rng_seed;
    let mut pred_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, PREDICTOR_STREAM));
    let mut predictors = PredictorPopulation::random(cfg, n_time, &mut pred_rng);

    let mut active = predictors.members()[0].clone();
    let mut islands: Vec<Island<T>> = {
        let eval = Evaluator::new(x, y, &active);
        (0..cfg.subpopulations)
            .into_par_iter()
            .map(|k| Island::random(cfg, n_vars, derive_seed(seed, k as u64), &eval))
            .collect()
    };

    let epochs = cfg.migrations + 1;
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        if epoch > 0 {
            migrate(&mut islands);
        }
        let trainers = pick_trainers(&islands, x, y, cfg, &mut pred_rng);
        active = predictors.coevolve(&trainers, x, y, cfg, &mut pred_rng);
        let eval = Evaluator::new(x, y, &active);
        islands.par_iter_mut().for_each(|isl| {
            isl.reevaluate(&eval);
            isl.run(cfg.generations_per_migration, cfg, &eval);
        });
        let best = islands
            .iter()
            .map(|isl| exact_mse(&isl.best().genome, x, y).unwrap_or_else(|_| T::infinity()))
            .fold(T::infinity(), |a, b| if cmp_fitness(b, a) == Ordering::Less { b } else { a });
        history.push(best);
        progress(Progress {
            epoch: epoch + 1,
            epochs,
            best_mse: best.as_f64(),
        });
        if cfg.stop_mse.is_some_and(|s| best.as_f64() <= s) {
            break;
        }
    }

    let final_population: Vec<Vec<(ExpressionGenome<T>, T)>> = islands
        .par_iter()
        .map(|isl| {
            isl.population
                .iter()
                .map(|ind| {
                    let m = exact_mse(&ind.genome, x, y).unwrap_or_else(|_| T::infinity());
                    (ind.genome.clone(), m)
                })
                .collect()
        })
        .collect();
    let mut best: Option<(&ExpressionGenome<T>, T, usize)> = None;
    for (g, m) in final_population.iter().flatten() {
        let size = g.active_indices().len();
        if best.map_or(true, |(_, bm, bs)| better_candidate((*m, size), (bm, bs))) {
            best = Some((g, *m, size));
        }
    }
    let (best, best_mse, _) = best.expect("at least one individual");
    Ok(GpRunResult {
        seed,
        best: best.clone(),
        best_mse,
        final_population,
        history,
    })
}

/// Copies each island's best over the worst member of the next island (ring).
fn migrate<T: Real>(islands: &mut [Island<T>]) {
    let s = islands.len();
    if s < 2 {
        return;
    }
    let migrants: Vec<Individual<T>> = islands.iter().map(|isl| isl.best().clone()).collect();
    for (k, m) in migrants.into_iter().enumerate() {
        let dest = &mut islands[(k + 1) % s];
        let w = dest.worst_index();
        dest.population[w] = m;
    }
}

/// `n_runs` independent evolutions seeded with [`batch_seed`].
pub fn run_batch<T: Real>(x: &RoiMatrix<T>, y: &[T], cfg: &GpConfig, n_runs: usize) -> Result<Vec<GpRunResult<T>>> {
    run_batch_with_progress(x, y, cfg, n_runs, &|_, _| {})
}

pub fn run_batch_with_progress<T: Real>(
    x: &RoiMatrix<T>,
    y: &[T],
    cfg: &GpConfig,
    n_runs: usize,
    progress: &(dyn Fn(usize, Progress) + Sync),
) -> Result<Vec<GpRunResult<T>>> {
    if n_runs == 0 {
        return Err(Error::Parameter("n_runs must be at least 1".into()));
    }
    cfg.validate()?;
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let run_cfg = cfg.clone().with_seed(batch_seed(cfg.rng_seed, i));
            evolve_with_progress(x, y, &run_cfg, &|p| progress(i, p))
        })
        .collect()
}

/// A genome chosen from a batch, with the run it came from and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub run_index: usize,
    pub genome: ExpressionGenome<T>,
    pub score: T,
}

/// Run-best genome with the lowest exact MSE on `(x, y)`; ties go to fewer
/// nodes, then the lower run index.
pub fn select_best<T: Real>(results: &[GpRunResult<T>], x: &RoiMatrix<T>, y: &[T]) -> Result<Selection<T>> {
    if results.is_empty() {
        return Err(Error::Parameter("no GP results to select from".into()));
    }
    let mut best: Option<(usize, T, usize)> = None;
    for (i, r) in results.iter().enumerate() {
        let m = exact_mse(&r.best, x, y)?;
        let size = r.best.len();
        let better = match best {
            None => true,
            Some((_, bm, bs)) => match cmp_fitness(m, bm) {
                Ordering::Less => true,
                Ordering::Equal => size < bs,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((i, m, size));
        }
    }
    let (i, m, _) = best.expect("nonempty");
    Ok(Selection {
        run_index: i,
        genome: results[i].best.clone(),
        score: m,
    })
}

/// Lowest exact-MSE genome of one run's final population on `(x, y)`.
pub fn run_best_on<T: Real>(r: &GpRunResult<T>, x: &RoiMatrix<T>, y: &[T]) -> Result<ExpressionGenome<T>> {
    let mut best: Option<(&ExpressionGenome<T>, T, usize)> = None;
    for (g, _) in r.final_population.iter().flatten() {
        let m = exact_mse(g, x, y)?;
        let size = g.active_indices().len();
        if best.map_or(true, |(_, bm, bs)| better_candidate((m, size), (bm, bs))) {
            best = Some((g, m, size));
        }
    }
    Ok(best.map_or_else(|| r.best.clone(), |(g, _, _)| g.clone()))
}

/// Among each run's best-by-MSE genome on the fitting data, the one whose
/// output correlates best with `holdout_y` on `holdout_x`. Undefined
/// correlations rank last; ties go to the lower run index.
pub fn select_unbiased<T: Real>(
    results: &[GpRunResult<T>],
    fit_x: &RoiMatrix<T>,
    fit_y: &[T],
    holdout_x: &RoiMatrix<T>,
    holdout_y: &[T],
) -> Result<Selection<T>> {
    if results.is_empty() {
        return Err(Error::Parameter("no GP results to select from".into()));
    }
    let mut best: Option<Selection<T>> = None;
    for (i, r) in results.iter().enumerate() {
        let genome = run_best_on(r, fit_x, fit_y)?;
        let out = genome.eval_series(holdout_x)?;
        let score = pearson_r(&out, holdout_y).unwrap_or_else(|_| T::neg_infinity());
        if best.as_ref().map_or(true, |b| score > b.score) {
            best = Some(Selection {
                run_index: i,
                genome,
                score,
            });
        }
    }
    Ok(best.expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::sexpr::{parse_sexpr, to_text};

    fn fixture(n_time: usize, n_vars: usize, seed: u64) -> RoiMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..n_vars)
            .map(|_| (0..n_time).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        RoiMatrix::from_columns(&cols, 1.0).unwrap()
    }

    fn tiny() -> GpConfig {
        GpConfig {
            subpopulations: 3,
            pop_per_island: 20,
            migrations: 2,
            generations_per_migration: 5,
            ..GpConfig::default()
        }
    }

    #[test]
    fn population_size_and_elitism_per_generation() {
        let x = fixture(50, 4, 1);
        let y: Vec<f64> = x.column(1).iter().map(|v| v.sin()).collect();
        let cfg = GpConfig { pop_per_island: 101, ..tiny() };
        let pred = FitnessPredictor::full(50);
        let eval = Evaluator::new(&x, &y, &pred);
        let mut isl = Island::random(&cfg, 4, 7, &eval);
        let mut scratch = Vec::new();
        let mut prev = isl.best().fitness;
        for _ in 0..30 {
            isl.step(&cfg, &eval, &mut scratch);
            assert_eq!(isl.population().len(), 101);
            let b = isl.best().fitness;
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn zero_generations_returns_initial_population() {
        let x = fixture(30, 3, 2);
        let y = x.column(0);
        let cfg = GpConfig { generations_per_migration: 0, ..tiny() };
        let pred = FitnessPredictor::full(30);
        let pop = evolve_island(&x, &y, &cfg, &pred, 11).unwrap();
        let eval = Evaluator::new(&x, &y, &pred);
        let init = Island::random(&cfg, 3, 11, &eval);
        assert_eq!(pop, init.population().to_vec());
    }

    #[test]
    fn deterministic_under_seed() {
        let x = fixture(40, 4, 3);
        let y: Vec<f64> = x.column(2).iter().zip(x.column(0)).map(|(a, b)| a * b).collect();
        let cfg = tiny().with_seed(99);
        let a = evolve(&x, &y, &cfg).unwrap();
        let b = evolve(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_text(&a.best), to_text(&b.best));
        assert_eq!(a.history.len(), 3);
        let c = evolve(&x, &y, &cfg.clone().with_seed(100)).unwrap();
        assert_ne!(a.final_population, c.final_population);
    }

    #[test]
    fn best_is_minimal_over_final_population() {
        let x = fixture(40, 3, 4);
        let y = x.column(1);
        let r = evolve(&x, &y, &tiny()).unwrap();
        let min = r.final_population.iter().flatten().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_mse, min);
        assert_eq!(r.final_population.len(), 3);
        assert!(r.final_population.iter().all(|p| p.len() == 20));
    }

    #[test]
    fn no_migration_keeps_islands_independent() {
        let x = fixture(30, 3, 5);
        let y = x.column(2);
        let cfg = GpConfig { migrations: 0, ..tiny() };
        let r = evolve(&x, &y, &cfg).unwrap();
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn batch_matches_direct_runs() {
        let x = fixture(30, 3, 6);
        let y = x.column(0);
        let cfg = tiny().with_seed(5);
        let batch = run_batch(&x, &y, &cfg, 1).unwrap();
        let direct = evolve(&x, &y, &cfg.clone().with_seed(batch_seed(5, 0))).unwrap();
        assert_eq!(batch[0], direct);
        assert_eq!(run_batch(&x, &y, &cfg, 3).unwrap(), run_batch(&x, &y, &cfg, 3).unwrap());
        assert!(run_batch(&x, &y, &cfg, 0).is_err());
    }

    fn result_with(best: &str) -> GpRunResult<f64> {
        let g: ExpressionGenome<f64> = parse_sexpr(best).unwrap();
        GpRunResult {
            seed: 0,
            final_population: vec![vec![(g.clone(), 0.0)]],
            best: g,
            best_mse: 0.0,
            history: vec![],
        }
    }

    #[test]
    fn selection_rules() {
        let x = RoiMatrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0], vec![4.0, 1.0, 3.0, 2.0]], 1.0).unwrap();
        let y = vec![1.0, 2.0, 3.0, 4.0];
        assert!(select_best::<f64>(&[], &x, &y).is_err());
        let single = [result_with("x1")];
        assert_eq!(select_best(&single, &x, &y).unwrap().run_index, 0);
        // mse 0.5 vs ~0.3
        let a = result_with("(+ x0 (* 0.70710678118654757 (- 0.0 (/ x0 x0))))");
        let b = result_with("(+ x0 0.54772255750516607)");
        let s = select_best(&[a, b], &x, &y).unwrap();
        assert_eq!(s.run_index, 1);
        assert!((s.score - 0.3).abs() < 1e-12);
        // equal mse, fewer nodes wins
        let big = result_with("(+ (* x0 1.0) 0.0)");
        let small = result_with("(* x0 1.0)");
        assert_eq!(select_best(&[big, small], &x, &y).unwrap().run_index, 1);

        let good = result_with("x0");
        let bad = result_with("x1");
        assert_eq!(select_unbiased(&[bad.clone(), good.clone()], &x, &y, &x, &y).unwrap().run_index, 1);
        assert_eq!(select_unbiased(&[good.clone(), good], &x, &y, &x, &y).unwrap().run_index, 0);
        assert_eq!(select_unbiased(&[bad], &x, &y, &x, &y).unwrap().run_index, 0);
    }
}
