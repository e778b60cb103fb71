use roiregress::dataset::RunLabel;
use roiregress::design::{builtin_localizer_schedule, hr_target, two_gamma_hrf, CategoryScope, HrfParams, LocalizerOrder};
use roiregress::eval::{pearson_r, TargetSet};
use roiregress::gp::sexpr::parse_sexpr;
use roiregress::gp::ExpressionGenome;
use roiregress::ridge::fit_ridge;
use roiregress::synth::{generate, Generator, SynthSpec};

fn targets(n_time: usize) -> TargetSet<f64> {
    let hrf = two_gamma_hrf::<f64>(1.0, HrfParams::default()).unwrap();
    [(RunLabel::Loc1, LocalizerOrder::Loc1), (RunLabel::Loc2, LocalizerOrder::Loc2)]
        .into_iter()
        .map(|(label, order)| {
            let s = builtin_localizer_schedule(order);
            (label, hr_target(&s, CategoryScope::AllStims, &hrf, 1.0, n_time).unwrap())
        })
        .collect()
}

fn linear_spec(noise_sd: f64, seed: u64) -> SynthSpec<f64> {
    SynthSpec {
        n_subjects: 3,
        runs: vec![RunLabel::Loc1, RunLabel::Loc2],
        n_rois: 8,
        tr_seconds: 1.0,
        generator: Generator::LinearMixture {
            weights: vec![0.7, -1.3, 2.0],
            intercept: 0.4,
        },
        signal_rois: vec![1, 4, 6],
        noise_sd,
        subject_jitter_sd: 0.0,
        seed,
        atlas: "synthetic".into(),
    }
}

#[test]
fn noiseless_linear_fixture_is_recovered_by_unpenalized_ridge() {
    let ts = targets(336);
    let ds = generate(&linear_spec(0.0, 11), &ts).unwrap();
    let mut planted = [0.0; 8];
    planted[1] = 0.7;
    planted[4] = -1.3;
    planted[6] = 2.0;
    for (run, x) in &ds.runs {
        let y = &ts[&run.run_label].values;
        let fit = fit_ridge(x, y, 0.0).unwrap();
        for (w, p) in fit.model.weights.iter().zip(planted) {
            assert!((w - p).abs() <= 1e-6, "{w} vs {p}");
        }
        assert!((fit.model.intercept - 0.4).abs() <= 1e-6);
        let r = pearson_r(&fit.model.predict(x).unwrap(), y).unwrap();
        assert!((r - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn noiseless_nonlinear_fixture_reproduces_target() {
    let ts = targets(336);
    let text = "(+ (sin x0) (* 0.5 x2))";
    let mut spec = linear_spec(0.0, 4);
    spec.generator = Generator::NonLinearPlant(text.into());
    spec.signal_rois = vec![0, 2];
    let g: ExpressionGenome<f64> = parse_sexpr(text).unwrap();
    for (run, x) in &generate(&spec, &ts).unwrap().runs {
        let out = g.eval_series(x).unwrap();
        for (a, b) in out.iter().zip(&ts[&run.run_label].values) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn self_fit_falls_as_noise_grows() {
    let ts = targets(336);
    let mut means = Vec::new();
    for noise in [0.3, 1.0, 3.0] {
        let mut rs = Vec::new();
        for seed in 0..10 {
            let ds = generate(&linear_spec(noise, seed), &ts).unwrap();
            for (run, x) in &ds.runs {
                let y = &ts[&run.run_label].values;
                let fit = fit_ridge(x, y, 0.0).unwrap();
                rs.push(pearson_r(&fit.model.predict(x).unwrap(), y).unwrap());
            }
        }
        means.push(rs.iter().sum::<f64>() / rs.len() as f64);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}
