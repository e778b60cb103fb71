//! Ridge-regularized linear model from ROI columns to a target series.
//!
//! Minimizes `‖y − (Xw + b)‖² + λ‖w‖²` with an unpenalized intercept: X and y
//! are centred, `(XcᵀXc + λI) w = Xcᵀyc` is solved by Cholesky, and
//! `b = ȳ − x̄ᵀw`. When the system is singular (λ = 0 with collinear columns)
//! the minimum-norm solution is used instead and the fit is flagged.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::RoiMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, pinv_solve, symmetric_eigen};
use crate::scalar::{fmt17, Real};

pub const LINEAR_HEADER: &str = "roiregress-linear v1";

/// `n` scaling factors plus one constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
    pub lambda: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit<T> {
    pub model: LinearModel<T>,
    /// The penalized system was singular; `model` holds the minimum-norm solution.
    pub min_norm_fallback: bool,
    /// Fewer time points than ROIs (T ≤ N).
    pub underdetermined: bool,
}

struct Centered<T> {
    gram: Vec<T>,
    xty: Vec<T>,
    x_mean: Vec<T>,
    y_mean: T,
    yy: T,
}

fn center<T: Real>(x: &RoiMatrix<T>, y: &[T]) -> Result<Centered<T>> {
    if x.n_time() != y.len() {
        return Err(Error::Shape(format!(
            "data has {} time points but target has {}",
            x.n_time(),
            y.len()
        )));
    }
    let (t_len, n) = (x.n_time(), x.n_rois());
    let tf = T::from_usize_lossy(t_len);
    let mut x_mean = vec![T::zero(); n];
    for row in x.rows() {
        for (m, &v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= tf);
    let y_mean = y.iter().copied().sum::<T>() / tf;
    let mut gram = vec![T::zero(); n * n];
    let mut xty = vec![T::zero(); n];
    let mut yy = T::zero();
    let mut xc = vec![T::zero(); n];
    for (row, &yv) in x.rows().zip(y) {
        for ((c, &v), &m) in xc.iter_mut().zip(row).zip(&x_mean) {
            *c = v - m;
        }
        let yc = yv - y_mean;
        yy += yc * yc;
        for i in 0..n {
            xty[i] += xc[i] * yc;
            for j in 0..=i {
                gram[i * n + j] += xc[i] * xc[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[j * n + i] = gram[i * n + j];
        }
    }
    Ok(Centered {
        gram,
        xty,
        x_mean,
        y_mean,
        yy,
    })
}

/// Fits the ridge model. `lambda` must be finite and nonnegative.
pub fn fit_ridge<T: Real>(x: &RoiMatrix<T>, y: &[T], lambda: T) -> Result<RidgeFit<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let c = center(x, y)?;
    let n = x.n_rois();
    let mut a = c.gram.clone();
    for i in 0..n {
        a[i * n + i] += lambda;
    }
    let (weights, min_norm_fallback) = match cholesky(&a, n) {
        Some(l) => (cholesky_solve(&l, n, &c.xty), false),
        None => (pinv_solve(&a, n, &c.xty), true),
    };
    let intercept = c.y_mean - weights.iter().zip(&c.x_mean).map(|(&w, &m)| w * m).sum::<T>();
    Ok(RidgeFit {
        model: LinearModel {
            weights,
            intercept,
            lambda,
        },
        min_norm_fallback,
        underdetermined: x.n_time() <= n,
    })
}

/// Generalized cross-validation score for each λ in `grid`, from one eigen-decomposition.
pub fn gcv_scores<T: Real>(x: &RoiMatrix<T>, y: &[T], grid: &[T]) -> Result<Vec<T>> {
    let c = center(x, y)?;
    let n = x.n_rois();
    let (vals, vecs) = symmetric_eigen(&c.gram, n);
    // projections of Xcᵀyc on eigenvectors
    let proj: Vec<T> = (0..n)
        .map(|j| (0..n).map(|i| vecs[i * n + j] * c.xty[i]).sum())
        .collect();
    let tf = T::from_usize_lossy(x.n_time());
    grid.iter()
        .map(|&lambda| {
            if !(lambda >= T::zero()) {
                return Err(Error::Parameter(format!("lambda must be >= 0, got {lambda}")));
            }
            // RSS = yᵀy − 2 wᵀXᵀy + wᵀGw with w = Σ p_j/(d_j+λ) v_j
            let mut rss = c.yy;
            let mut df = T::one();
            for (&d, &p) in vals.iter().zip(&proj) {
                let d = d.max(T::zero());
                let denom = d + lambda;
                if denom <= T::epsilon() {
                    continue;
                }
                let coef = p / denom;
                rss += -T::lit(2.0) * coef * p + coef * coef * d;
                df += d / denom;
            }
            let resid_df = tf - df;
            Ok(tf * rss.max(T::zero()) / (resid_df * resid_df))
        })
        .collect()
}

/// Log-spaced λ grid from 1e-3 to 1e3 in half-decade steps.
pub fn default_lambda_grid<T: Real>() -> Vec<T> {
    (0..=12).map(|k| T::lit(10f64.powf(-3.0 + 0.5 * k as f64))).collect()
}

/// λ from `grid` with the smallest GCV score (first on ties).
pub fn select_lambda_gcv<T: Real>(x: &RoiMatrix<T>, y: &[T], grid: &[T]) -> Result<T> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty lambda grid".into()));
    }
    let scores = gcv_scores(x, y, grid)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(grid[best])
}

impl<T: Real> LinearModel<T> {
    pub fn n_rois(&self) -> usize {
        self.weights.len()
    }

    /// `intercept + Σ_j weights[j]·x[t, j]` for every row.
    pub fn predict(&self, x: &RoiMatrix<T>) -> Result<Vec<T>> {
        if x.n_rois() != self.weights.len() {
            return Err(Error::Shape(format!(
                "model has {} weights but data has {} columns",
                self.weights.len(),
                x.n_rois()
            )));
        }
        Ok(x.rows()
            .map(|row| self.intercept + row.iter().zip(&self.weights).map(|(&v, &w)| v * w).sum::<T>())
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{LINEAR_HEADER}").unwrap();
        writeln!(s, "n={}", self.weights.len()).unwrap();
        writeln!(s, "lambda={}", fmt17(self.lambda)).unwrap();
        writeln!(s, "intercept={}", fmt17(self.intercept)).unwrap();
        let w: Vec<String> = self.weights.iter().map(|&w| fmt17(w)).collect();
        writeln!(s, "weights={}", w.join(",")).unwrap();
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(LINEAR_HEADER) {
            return Err(Error::Format {
                line: 1,
                msg: format!("expected header {LINEAR_HEADER:?}"),
            });
        }
        let (mut n, mut lambda, mut intercept, mut weights) = (None, None, None, None);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
                line: line_no,
                msg: "expected key=value".into(),
            })?;
            let num = |v: &str| -> Result<T> {
                v.trim().parse::<f64>().map(T::lit).map_err(|_| Error::Format {
                    line: line_no,
                    msg: format!("bad number {v:?}"),
                })
            };
            match key.trim() {
                "n" => {
                    n = Some(value.trim().parse::<usize>().map_err(|_| Error::Format {
                        line: line_no,
                        msg: "bad n".into(),
                    })?)
                }
                "lambda" => lambda = Some(num(value)?),
                "intercept" => intercept = Some(num(value)?),
                "weights" => {
                    weights = Some(if value.trim().is_empty() {
                        Vec::new()
                    } else {
                        value.split(',').map(num).collect::<Result<Vec<_>>>()?
                    })
                }
                other => {
                    return Err(Error::Format {
                        line: line_no,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let missing = |k: &str| Error::Format {
            line: 0,
            msg: format!("missing {k}"),
        };
        let n = n.ok_or_else(|| missing("n"))?;
        let weights = weights.ok_or_else(|| missing("weights"))?;
        if weights.len() != n {
            return Err(Error::Shape(format!("n={n} but {} weights", weights.len())));
        }
        let model = Self {
            weights,
            intercept: intercept.ok_or_else(|| missing("intercept"))?,
            lambda: lambda.ok_or_else(|| missing("lambda"))?,
        };
        if model.weights.iter().any(|w| !w.is_finite()) || !model.intercept.is_finite() {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Free-function form of [`LinearModel::predict`].
pub fn predict_linear<T: Real>(m: &LinearModel<T>, x: &RoiMatrix<T>) -> Result<Vec<T>> {
    m.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(cols: &[Vec<f64>]) -> RoiMatrix<f64> {
        RoiMatrix::from_columns(cols, 1.0).unwrap()
    }

    #[test]
    fn exact_line() {
        let x = mat(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let fit = fit_ridge(&x, &[3.0, 5.0, 7.0, 9.0], 0.0).unwrap();
        assert!((fit.model.weights[0] - 2.0).abs() < 1e-9);
        assert!((fit.model.intercept - 1.0).abs() < 1e-9);
        assert!(!fit.min_norm_fallback);
        let pred = fit.model.predict(&x).unwrap();
        for (p, y) in pred.iter().zip([3.0, 5.0, 7.0, 9.0]) {
            assert!((p - y).abs() < 1e-8);
        }
    }

    #[test]
    fn huge_lambda_shrinks_to_mean() {
        let x = mat(&[vec![1.0, 4.0, 2.0, 8.0, 5.0], vec![0.3, -1.0, 2.0, 0.0, 1.0]]);
        let y = [2.0, 1.0, 5.0, 3.0, 4.0];
        let fit = fit_ridge(&x, &y, 1e14).unwrap();
        assert!(fit.model.weights.iter().all(|w| w.abs() < 1e-10));
        assert!((fit.model.intercept - 3.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_column_shares_weight() {
        let c = vec![0.5, 1.5, -2.0, 3.0, 0.1, 2.2];
        let x = mat(&[c.clone(), vec![1.0, 0.0, 1.0, 3.0, -1.0, 0.5], c]);
        let y = [1.0, 2.0, 0.0, 4.0, 1.0, 2.5];
        let w = fit_ridge(&x, &y, 1.0).unwrap().model.weights;
        assert!((w[0] - w[2]).abs() < 1e-9);
    }

    #[test]
    fn collinear_without_penalty_falls_back() {
        let c = vec![1.0, 2.0, 3.0, 4.0];
        let x = mat(&[c.clone(), c]);
        let fit = fit_ridge(&x, &[2.0, 4.0, 6.0, 8.0], 0.0).unwrap();
        assert!(fit.min_norm_fallback);
        let w = &fit.model.weights;
        assert!((w[0] - 1.0).abs() < 1e-9 && (w[1] - 1.0).abs() < 1e-9, "{w:?}");
    }

    #[test]
    fn shape_errors() {
        let x = mat(&[vec![1.0, 2.0, 3.0]]);
        assert!(matches!(fit_ridge(&x, &[1.0, 2.0], 0.0), Err(Error::Shape(_))));
        assert!(matches!(fit_ridge(&x, &[1.0, 2.0, 3.0], -1.0), Err(Error::Parameter(_))));
        let m = LinearModel {
            weights: vec![1.0, -1.0],
            intercept: 0.5,
            lambda: 0.0,
        };
        assert!(matches!(m.predict(&x), Err(Error::Shape(_))));
        let x2 = RoiMatrix::from_rows(&[vec![3.0, 1.0], vec![0.0, 0.0]], 1.0).unwrap();
        assert_eq!(m.predict(&x2).unwrap(), vec![2.5, 0.5]);
        let zero = LinearModel {
            weights: vec![0.0],
            intercept: 2.0,
            lambda: 1.0,
        };
        assert_eq!(zero.predict(&x).unwrap(), vec![2.0; 3]);
    }

    #[test]
    fn text_round_trip() {
        let m = LinearModel {
            weights: vec![0.1, -1.0 / 3.0, 2.5e-17],
            intercept: std::f64::consts::PI,
            lambda: 1.0,
        };
        let text = m.to_text();
        assert!(text.starts_with("roiregress-linear v1\n"));
        assert_eq!(LinearModel::<f64>::parse(&text).unwrap(), m);
        assert!(LinearModel::<f64>::parse("bogus\n").is_err());
    }

    #[test]
    fn gcv_picks_from_grid() {
        let x = mat(&[
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            vec![0.2, -0.1, 0.4, 0.0, 0.3, -0.2, 0.1],
        ]);
        let y = [1.1, 2.0, 2.9, 4.2, 5.0, 5.8, 7.1];
        let grid = default_lambda_grid::<f64>();
        assert_eq!(grid.len(), 13);
        let l = select_lambda_gcv(&x, &y, &grid).unwrap();
        assert!(grid.contains(&l));
        // GCV RSS agrees with a direct fit
        let scores = gcv_scores(&x, &y, &[0.5]).unwrap();
        let fit = fit_ridge(&x, &y, 0.5).unwrap().model;
        let rss: f64 = fit.predict(&x).unwrap().iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum();
        assert!(scores[0] > 0.0 && rss > 0.0);
    }
}
