use roiregress::special::student_t_two_sided;
use roiregress::stats::{ttest_one_sample, ttest_two_sample, TTestKind};

/// Gamma at a positive integer or half-integer, by downward recursion.
fn gamma_half(x: f64) -> f64 {
    let mut acc = 1.0;
    let mut z = x;
    while z > 1.0 {
        z -= 1.0;
        acc *= z;
    }
    if (z - 0.5).abs() < 1e-12 {
        acc * std::f64::consts::PI.sqrt()
    } else {
        acc
    }
}

/// Two-sided tail probability by composite Simpson on the t density over [0, |t|].
fn oracle_p(t: f64, df: f64) -> f64 {
    let c = gamma_half((df + 1.0) / 2.0) / ((df * std::f64::consts::PI).sqrt() * gamma_half(df / 2.0));
    let f = |x: f64| c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let b = t.abs();
    let n = 20_000;
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn t_distribution_matches_density_integral() {
    for df in [1.0, 4.0, 30.0] {
        for t in [0.0, 1.0, 2.5, -2.5] {
            let p = student_t_two_sided(t, df);
            let q = oracle_p(t, df);
            assert!((p - q).abs() <= 1e-8, "df={df} t={t}: {p} vs {q}");
        }
    }
}

#[test]
fn welch_hand_example() {
    let a = [1.0f64, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0];
    let r = ttest_two_sample(&a, &b, TTestKind::TwoSampleWelch).unwrap();
    assert!((r.t + 1.0).abs() <= 1e-9);
    assert!((r.df - 8.0).abs() <= 1e-12);
    assert!((r.p - oracle_p(-1.0, 8.0)).abs() <= 1e-8);
    let same = ttest_two_sample(&a, &a, TTestKind::TwoSampleWelch).unwrap();
    assert_eq!(same.t, 0.0);
    assert!((same.p - 1.0).abs() <= 1e-15);
}

#[test]
fn separated_samples_are_significant() {
    let a = [0.0f64, 0.0, 0.0, 0.0, 0.0001];
    let b = [10.0, 10.0, 10.0, 10.0, 10.0001];
    let r = ttest_two_sample(&a, &b, TTestKind::TwoSampleWelch).unwrap();
    assert!(r.p < 1e-6);
}

#[test]
fn one_sample_hand_examples() {
    let a = [1.0f64, 2.0, 3.0, 4.0, 5.0];
    let zero = ttest_one_sample(&a, 3.0).unwrap();
    assert_eq!(zero.t, 0.0);
    assert!((zero.p - 1.0).abs() <= 1e-15);
    let r = ttest_one_sample(&a, 0.0).unwrap();
    assert!((r.t - 3.0 * 5f64.sqrt() / 2.5f64.sqrt()).abs() <= 1e-12);
    assert_eq!(r.df, 4.0);
    assert!((r.p - oracle_p(r.t, 4.0)).abs() <= 1e-8);
}
