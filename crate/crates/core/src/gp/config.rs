use crate::error::{Error, Result};

/// Island-model GP settings. `Default` gives the full-scale configuration
/// (7 islands × 101, 1000 migrations of 1000 generations); [`GpConfig::desk`]
/// gives a budget suitable for tests and laptops.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub elitism: usize,
    pub subpopulations: usize,
    pub pop_per_island: usize,
    /// Migration events. The islands evolve for `generations_per_migration`
    /// generations before the first event and after every event.
    pub migrations: usize,
    pub generations_per_migration: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Independent mutation attempts per offspring.
    pub mutation_chances: usize,
    pub trainers: usize,
    pub predictors: usize,
    pub predictor_size_fraction: f64,
    /// Mutation-selection rounds applied to the predictor population at each
    /// migration boundary.
    pub predictor_generations: usize,
    /// Fraction of a predictor's indices resampled by one predictor mutation.
    pub predictor_mutation_fraction: f64,
    pub max_nodes: usize,
    pub tournament_size: usize,
    pub init_min_nodes: usize,
    pub init_max_nodes: usize,
    pub p_variable: f64,
    pub p_constant: f64,
    pub const_min: f64,
    pub const_max: f64,
    pub const_sigma: f64,
    /// End the evolution at the first epoch boundary where the best exact MSE
    /// is at or below this value. `None` always runs the full budget.
    pub stop_mse: Option<f64>,
    pub rng_seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            elitism: 1,
            subpopulations: 7,
            pop_per_island: 101,
            migrations: 1000,
            generations_per_migration: 1000,
            crossover_rate: 0.80,
            mutation_rate: 0.10,
            mutation_chances: 2,
            trainers: 8,
            predictors: 20,
            predictor_size_fraction: 0.20,
            predictor_generations: 10,
            predictor_mutation_fraction: 0.10,
            max_nodes: 140,
            tournament_size: 4,
            init_min_nodes: 3,
            init_max_nodes: 30,
            p_variable: 0.4,
            p_constant: 0.2,
            const_min: -5.0,
            const_max: 5.0,
            const_sigma: 0.5,
            stop_mse: None,
            rng_seed: 0,
        }
    }
}

impl GpConfig {
    /// Full population, 2·10⁴ generations per island.
    pub fn desk() -> Self {
        Self {
            migrations: 19,
            generations_per_migration: 1000,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Generations each island runs over a whole evolution.
    pub fn total_generations(&self) -> usize {
        (self.migrations + 1) * self.generations_per_migration
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("subpopulations", self.subpopulations),
            ("pop_per_island", self.pop_per_island),
            ("trainers", self.trainers),
            ("predictors", self.predictors),
            ("max_nodes", self.max_nodes),
            ("tournament_size", self.tournament_size),
            ("init_min_nodes", self.init_min_nodes),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be positive")));
        }
        let rates = [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
            ("p_variable", self.p_variable),
            ("p_constant", self.p_constant),
            ("predictor_mutation_fraction", self.predictor_mutation_fraction),
        ];
        if let Some((name, v)) = rates.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(Error::Parameter(format!("{name} must lie in [0, 1], got {v}")));
        }
        if self.p_variable + self.p_constant > 1.0 {
            return Err(Error::Parameter("p_variable + p_constant exceeds 1".into()));
        }
        if !(self.predictor_size_fraction > 0.0 && self.predictor_size_fraction <= 1.0) {
            return Err(Error::Parameter(format!(
                "predictor_size_fraction must lie in (0, 1], got {}",
                self.predictor_size_fraction
            )));
        }
        if self.elitism > self.pop_per_island {
            return Err(Error::Parameter("elitism exceeds island population".into()));
        }
        if self.init_min_nodes > self.init_max_nodes || self.init_max_nodes > self.max_nodes {
            return Err(Error::Parameter(
                "need init_min_nodes <= init_max_nodes <= max_nodes".into(),
            ));
        }
        if self.stop_mse.is_some_and(|s| !(s >= 0.0)) {
            return Err(Error::Parameter("stop_mse must be non-negative".into()));
        }
        if !(self.const_min <= self.const_max) || !(self.const_sigma >= 0.0) {
            return Err(Error::Parameter("bad constant range or sigma".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = GpConfig::default();
        c.validate().unwrap();
        assert_eq!(c.subpopulations * c.pop_per_island, 707);
        assert_eq!(GpConfig::desk().total_generations(), 20_000);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            GpConfig { crossover_rate: 1.5, ..Default::default() },
            GpConfig { predictor_size_fraction: 0.0, ..Default::default() },
            GpConfig { subpopulations: 0, ..Default::default() },
            GpConfig { init_max_nodes: 200, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
