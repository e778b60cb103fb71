//! Two-sample and one-sample t-tests on score lists.

use crate::error::{Error, Result};
use crate::scalar::{mean, Real};
use crate::special::student_t_two_sided;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestKind {
    /// Unequal variances with Welch-Satterthwaite degrees of freedom.
    TwoSampleWelch,
    /// Pooled variance, `n1 + n2 - 2` degrees of freedom.
    TwoSamplePooled,
    OneSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult<T> {
    pub t: T,
    pub df: T,
    /// Two-sided p-value.
    pub p: T,
    pub kind: TTestKind,
}

fn sum_sq_dev<T: Real>(xs: &[T], m: T) -> T {
    xs.iter().map(|&x| (x - m) * (x - m)).sum()
}

fn check<T: Real>(name: &str, xs: &[T]) -> Result<T> {
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!("{name} has {} values, need at least 2", xs.len())));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("{name} contains non-finite values")));
    }
    Ok(mean(xs).expect("nonempty"))
}

fn finish<T: Real>(t: T, df: T, kind: TTestKind) -> Result<TTestResult<T>> {
    if !t.is_finite() || !(df > T::zero()) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided(t, df),
        kind,
    })
}

/// Compares the means of `a` and `b`; positive `t` means `a` is larger.
pub fn ttest_two_sample<T: Real>(a: &[T], b: &[T], kind: TTestKind) -> Result<TTestResult<T>> {
    let ma = check("first sample", a)?;
    let mb = check("second sample", b)?;
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let (ssa, ssb) = (sum_sq_dev(a, ma), sum_sq_dev(b, mb));
    if !(ssa + ssb > T::zero()) {
        return Err(Error::Degenerate("both samples have zero variance".into()));
    }
    let one = T::one();
    match kind {
        TTestKind::TwoSampleWelch => {
            let va = ssa / (na - one) / na;
            let vb = ssb / (nb - one) / nb;
            let se2 = va + vb;
            let df = se2 * se2 / (va * va / (na - one) + vb * vb / (nb - one));
            finish((ma - mb) / se2.sqrt(), df, kind)
        }
        TTestKind::TwoSamplePooled => {
            let df = na + nb - T::lit(2.0);
            let sp2 = (ssa + ssb) / df;
            let se = (sp2 * (one / na + one / nb)).sqrt();
            finish((ma - mb) / se, df, kind)
        }
        TTestKind::OneSample => Err(Error::Parameter("one-sample kind for a two-sample test".into())),
    }
}

/// Tests whether the mean of `xs` differs from `mu`.
pub fn ttest_one_sample<T: Real>(xs: &[T], mu: T) -> Result<TTestResult<T>> {
    let m = check("sample", xs)?;
    let n = T::from_usize_lossy(xs.len());
    let ss = sum_sq_dev(xs, m);
    if !(ss > T::zero()) {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    let sd = (ss / (n - T::one())).sqrt();
    finish((m - mu) / (sd / n.sqrt()), n - T::one(), TTestKind::OneSample)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_reference_values() {
        // Hand computation: means 3 and 5, variances 2.5 and 2.5, n = 5 each.
        let a = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let b = [3.0, 4.0, 5.0, 6.0, 7.0];
        let r = ttest_two_sample(&a, &b, TTestKind::TwoSampleWelch).unwrap();
        assert!((r.t + 2.0).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        let p = ttest_two_sample(&a, &b, TTestKind::TwoSamplePooled).unwrap();
        assert!((p.t - r.t).abs() < 1e-12);
        // Two-sided p of t = 2 with 8 df.
        assert!((r.p - 0.080_516_237_957_262_57).abs() < 1e-9);
    }

    #[test]
    fn unequal_variance_df() {
        let a = [1.0f64, 2.0, 3.0];
        let b = [0.0, 10.0, 20.0, 30.0];
        let r = ttest_two_sample(&a, &b, TTestKind::TwoSampleWelch).unwrap();
        let (va, vb) = (1.0 / 3.0, (500.0 / 3.0) / 4.0);
        let df = (va + vb) * (va + vb) / (va * va / 2.0 + vb * vb / 3.0);
        assert!((r.df - df).abs() < 1e-10);
        assert!((r.t - (2.0 - 15.0) / (va + vb).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            ttest_two_sample(&[1.0, 1.0], &[2.0, 2.0], TTestKind::TwoSampleWelch),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(ttest_one_sample(&[1.0], 0.0), Err(Error::Degenerate(_))));
        assert!(ttest_one_sample(&[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn one_sample() {
        let r = ttest_one_sample(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap();
        assert!((r.t - 3.0 / (2.5f64.sqrt() / 5f64.sqrt())).abs() < 1e-12);
        assert_eq!(r.df, 4.0);
    }
}
