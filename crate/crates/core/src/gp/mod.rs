//! Symbolic regression by island-model genetic programming over acyclic
//! expression graphs.

pub mod config;
pub mod engine;
pub mod genome;
pub mod predictor;
pub mod sexpr;
pub mod variation;

pub use config::GpConfig;
pub use engine::{
    batch_seed, derive_seed, evolve, evolve_island, evolve_with_progress, run_batch, run_batch_with_progress,
    select_best, select_unbiased, GpRunResult, Individual, Island, Progress, Selection,
};
pub use genome::{eval_genome, eval_series, BinaryOp, ExpressionGenome, Node, Op, UnaryOp};
pub use predictor::{exact_mse, mse, predicted_fitness, FitnessPredictor};
pub use variation::{crossover, mutate, random_genome};
