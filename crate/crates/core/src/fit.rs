//! Fitting front-ends shared by the pipeline: ridge with a fixed or
//! GCV-selected penalty, and batched GP with optional target standardization.

use crate::dataset::RoiMatrix;
use crate::error::{Error, Result};
use crate::gp::{run_batch_with_progress, select_best, GpConfig, GpRunResult, Progress, Selection};
use crate::ridge::{fit_ridge, select_lambda_gcv, RidgeFit};
use crate::scalar::{mean, sample_sd, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice<T> {
    Fixed(T),
    /// Minimum generalized cross-validation score over the grid.
    Gcv(Vec<T>),
}

pub fn fit_linear<T: Real>(x: &RoiMatrix<T>, y: &[T], choice: &LambdaChoice<T>) -> Result<RidgeFit<T>> {
    let lambda = match choice {
        LambdaChoice::Fixed(l) => *l,
        LambdaChoice::Gcv(grid) => select_lambda_gcv(x, y, grid)?,
    };
    fit_ridge(x, y, lambda)
}

/// `(y - mean) / sd`, or an error for a constant target.
pub fn standardize<T: Real>(y: &[T]) -> Result<Vec<T>> {
    let m = mean(y).ok_or(Error::EmptyInput)?;
    let sd = sample_sd(y).ok_or(Error::EmptyInput)?;
    if !(sd > T::zero()) {
        return Err(Error::Degenerate("target is constant".into()));
    }
    Ok(y.iter().map(|&v| (v - m) / sd).collect())
}

/// A GP batch and its selected best genome.
#[derive(Debug, Clone, PartialEq)]
pub struct GpFit<T> {
    pub results: Vec<GpRunResult<T>>,
    pub selection: Selection<T>,
    /// Whether evolution ran against the standardized target.
    pub standardized: bool,
}

/// Runs `n_runs` evolutions on `(x, y)` and selects the lowest-MSE run best.
/// With `standardize`, evolution and selection use the z-scored target; the
/// genome's output is then in standard units, which correlation ignores.
pub fn fit_gp<T: Real>(
    x: &RoiMatrix<T>,
    y: &[T],
    cfg: &GpConfig,
    n_runs: usize,
    standardize_target: bool,
    progress: &(dyn Fn(usize, Progress) + Sync),
) -> Result<GpFit<T>> {
    let owned;
    let y = if standardize_target {
        owned = standardize(y)?;
        &owned[..]
    } else {
        y
    };
    let results = run_batch_with_progress(x, y, cfg, n_runs, progress)?;
    let selection = select_best(&results, x, y)?;
    Ok(GpFit {
        results,
        selection,
        standardized: standardize_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_moments() {
        let z = standardize(&[1.0f64, 2.0, 3.0, 6.0]).unwrap();
        assert!(mean(&z).unwrap().abs() < 1e-15);
        assert!((sample_sd(&z).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(standardize(&[2.0, 2.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gcv_choice_uses_grid_member() {
        let x = RoiMatrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.5, -1.0, 2.0, 0.0, 1.0]], 1.0).unwrap();
        let y = [1.1, 1.9, 3.2, 3.9, 5.1];
        let grid = vec![0.01, 1.0, 100.0];
        let fit = fit_linear(&x, &y, &LambdaChoice::Gcv(grid.clone())).unwrap();
        assert!(grid.contains(&fit.model.lambda));
    }
}
