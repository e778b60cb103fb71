use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use roiregress::dataset::{load_run, zscore_columns, CsvOptions, Manifest, RunKey, RunLabel};
use roiregress::design::{
    builtin_localizer_schedule, hr_target, two_gamma_hrf, CategoryScope, HrTarget, HrfParams, StimulusSchedule,
};
use roiregress::eval::{
    apply_to_validation, average_model_loo, pairwise_between, resting_overfit, self_fit, within_subject, DataSet,
    EvalReport, Model, ModelSet, TargetSet,
};
use roiregress::fit::{fit_gp, fit_linear, standardize, LambdaChoice};
use roiregress::gp::{derive_seed, select_unbiased, sexpr, ExpressionGenome, Progress};
use roiregress::ridge::default_lambda_grid;
use roiregress::scalar::fmt17;
use roiregress::stats::{ttest_one_sample, ttest_two_sample, TTestKind, TTestResult};
use roiregress::synth::{generate, resting_noise, write_dataset, Generator, SynthSpec};
use roiregress::{Error, Result};

use crate::pipeline::{GpSelect, Method, Order, PipelineConfig};
use crate::{GeneratorKind, HrArgs, ProtocolArg, StatsArgs, SynthArgs, TestKind};

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn schedule_for(order: Order, file: Option<&Path>) -> Result<StimulusSchedule> {
    match file {
        Some(p) => StimulusSchedule::load_csv(p),
        None => Ok(builtin_localizer_schedule(order.into())),
    }
}

fn target(schedule: &StimulusSchedule, scope: CategoryScope, hrf: HrfParams, tr: f64, n: usize) -> Result<HrTarget<f64>> {
    let h = two_gamma_hrf(tr, hrf)?;
    hr_target(schedule, scope, &h, tr, n)
}

pub fn hr(a: &HrArgs) -> Result<()> {
    let schedule = schedule_for(a.order, a.schedule.as_deref())?;
    let mut t = target(&schedule, a.scope, HrfParams::default(), a.tr, a.n_time)?;
    if a.standardize {
        t = t.standardized();
    }
    match &a.out {
        Some(p) => write_file(p, &t.to_csv_string()),
        None => {
            print!("{}", t.to_csv_string());
            Ok(())
        }
    }
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let generator = match a.generator {
        GeneratorKind::Linear => Generator::LinearMixture {
            weights: a.weights.clone(),
            intercept: a.intercept,
        },
        GeneratorKind::Nonlinear => Generator::NonLinearPlant(
            a.expr
                .clone()
                .ok_or_else(|| Error::Spec("--expr is required for a non-linear generator".into()))?,
        ),
    };
    let spec = SynthSpec {
        n_subjects: a.subjects + a.validation,
        runs: vec![RunLabel::Loc1, RunLabel::Loc2],
        n_rois: a.rois,
        tr_seconds: a.tr,
        generator,
        signal_rois: a.signal_rois.clone(),
        noise_sd: a.noise_sd,
        subject_jitter_sd: a.jitter_sd,
        seed: a.seed,
        atlas: a.atlas.clone(),
    };
    let mut targets = TargetSet::new();
    for (label, order) in [(RunLabel::Loc1, Order::Loc1), (RunLabel::Loc2, Order::Loc2)] {
        let mut t = target(&schedule_for(order, None)?, a.scope, HrfParams::default(), a.tr, a.n_time)?;
        if a.standardize {
            t = t.standardized();
        }
        targets.insert(label, t);
    }
    let ds = generate(&spec, &targets)?;
    write_dataset(&a.out_dir, &spec, &ds, a.validation)?;
    if a.rest {
        let mut lines = String::new();
        for i in 0..a.subjects {
            let id = roiregress::synth::subject_id(i);
            let m = resting_noise(a.rois, a.n_time, 1.0, derive_seed(a.seed, 0x4E57_0000 + i as u64), a.tr)?;
            let name = format!("{id}_Rest.csv");
            m.write_csv(&a.out_dir.join(&name))?;
            let _ = writeln!(lines, "{id}:Rest:{name}");
        }
        write_file(&a.out_dir.join("rest.txt"), &lines)?;
    }
    Ok(())
}

fn load_manifest_data(path: &Path, c: &PipelineConfig) -> Result<DataSet<f64>> {
    let manifest = Manifest::load(path, &c.atlas)?;
    let opts = CsvOptions { has_header: c.header };
    let mut data = DataSet::new();
    let mut failed = Vec::new();
    for e in &manifest.entries {
        match load_run(&e.path, c.tr, opts) {
            Ok(m) => {
                let m = if c.zscore { zscore_columns(&m) } else { m };
                data.insert(e.descriptor.key(), m);
            }
            Err(err) => failed.push(format!("{} ({err})", e.path.display())),
        }
    }
    if !failed.is_empty() {
        return Err(Error::Coverage(failed));
    }
    Ok(data)
}

fn manifest_path(c: &PipelineConfig) -> Result<&Path> {
    c.manifest
        .as_deref()
        .ok_or_else(|| Error::Parameter("no manifest given (--manifest or config key manifest)".into()))
}

/// Target per run label, sized to that label's runs.
fn targets_for(c: &PipelineConfig, data: &DataSet<f64>) -> Result<TargetSet<f64>> {
    let mut lengths: BTreeMap<RunLabel, usize> = BTreeMap::new();
    for (k, m) in data {
        match lengths.get(&k.label) {
            Some(&n) if n != m.n_time() => {
                return Err(Error::Shape(format!(
                    "{} runs have differing lengths {n} and {}",
                    k.label,
                    m.n_time()
                )))
            }
            _ => {
                lengths.insert(k.label, m.n_time());
            }
        }
    }
    let mut out = TargetSet::new();
    for (label, n) in lengths {
        let (order, file) = match label {
            RunLabel::Loc1 => (Order::Loc1, c.schedule_loc1.as_deref()),
            RunLabel::Loc2 => (Order::Loc2, c.schedule_loc2.as_deref()),
            RunLabel::Rest => match c.rest_order {
                Order::Loc1 => (Order::Loc1, c.schedule_loc1.as_deref()),
                Order::Loc2 => (Order::Loc2, c.schedule_loc2.as_deref()),
            },
        };
        out.insert(label, target(&schedule_for(order, file)?, c.scope, c.hrf, c.tr, n)?);
    }
    Ok(out)
}

fn model_file(dir: &Path, key: &RunKey) -> PathBuf {
    dir.join(format!("{}_{}.model", key.subject, key.label))
}

fn lambda_choice(c: &PipelineConfig) -> LambdaChoice<f64> {
    if c.gcv {
        LambdaChoice::Gcv(default_lambda_grid())
    } else {
        LambdaChoice::Fixed(c.lambda)
    }
}

fn progress_printer(quiet: bool, key: String) -> impl Fn(usize, Progress) + Sync {
    move |run, p| {
        if !quiet {
            eprintln!(
                "[{key}] run {run} migration {}/{} best_mse={:.6e}",
                p.epoch, p.epochs, p.best_mse
            );
        }
    }
}

pub fn fit(c: &PipelineConfig, quiet: bool) -> Result<()> {
    let out = c
        .out_dir
        .as_deref()
        .ok_or_else(|| Error::Parameter("no output directory (--out-dir)".into()))?;
    let data = load_manifest_data(manifest_path(c)?, c)?;
    let targets = targets_for(c, &data)?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut summary = String::from("subject,label,method,detail,train_score\n");
    for (i, (key, x)) in data.iter().enumerate() {
        let y = &targets[&key.label].values;
        match c.method {
            Method::Linear => {
                let f = fit_linear(x, y, &lambda_choice(c))?;
                let model = Model::Linear(f.model);
                let r = roiregress::eval::pearson_r(&model.apply(x)?, y).ok();
                model.save(&model_file(out, key))?;
                let detail = if let Model::Linear(m) = &model { fmt17(m.lambda) } else { unreachable!() };
                let _ = writeln!(
                    summary,
                    "{},{},linear,lambda={detail},{}",
                    key.subject,
                    key.label,
                    r.map_or_else(|| "undefined".into(), fmt17)
                );
            }
            Method::Gp => {
                let cfg = c.gp.clone().with_seed(derive_seed(c.seed, i as u64));
                let fitted = fit_gp(x, y, &cfg, c.gp_runs, c.standardize_target, &progress_printer(quiet, key.to_string()))?;
                let run_dir = out.join(format!("{}_{}", key.subject, key.label));
                for (k, r) in fitted.results.iter().enumerate() {
                    write_file(&run_dir.join(format!("candidate_{k:03}.gp")), &sexpr::to_text(&r.best))?;
                    write_file(&run_dir.join(format!("trace_{k:03}.csv")), &r.trace_csv())?;
                }
                let chosen = match c.gp_select {
                    GpSelect::Best => fitted.selection,
                    GpSelect::Unbiased => {
                        let other = RunKey::new(
                            key.subject.clone(),
                            key.label
                                .counterpart()
                                .ok_or_else(|| Error::Protocol("unbiased selection needs a localiser run".into()))?,
                        );
                        let hx = data
                            .get(&other)
                            .ok_or_else(|| Error::Coverage(vec![format!("data {other}")]))?;
                        let hy = &targets[&other.label].values;
                        let fy = if c.standardize_target { standardize(y)? } else { y.clone() };
                        select_unbiased(&fitted.results, x, &fy, hx, hy)?
                    }
                };
                write_file(&run_dir.join("best.txt"), &format!("candidate_{:03}.gp\n", chosen.run_index))?;
                let model = Model::Genome(chosen.genome);
                let r = roiregress::eval::pearson_r(&model.apply(x)?, y).ok();
                model.save(&model_file(out, key))?;
                let _ = writeln!(
                    summary,
                    "{},{},gp,run={};selection={},{}",
                    key.subject,
                    key.label,
                    chosen.run_index,
                    fmt17(chosen.score),
                    r.map_or_else(|| "undefined".into(), fmt17)
                );
            }
        }
    }
    write_file(&out.join("fit_summary.csv"), &summary)?;
    write_file(&out.join("fit_config.txt"), &c.to_text())
}

fn load_models(dir: &Path, keys: impl IntoIterator<Item = RunKey>) -> Result<ModelSet<f64>> {
    let mut models = ModelSet::new();
    for key in keys {
        let p = model_file(dir, &key);
        if p.exists() {
            models.insert(key, Model::load(&p)?);
        }
    }
    if models.is_empty() {
        return Err(Error::Coverage(vec![format!("no model files in {}", dir.display())]));
    }
    Ok(models)
}

fn report_name(r: &EvalReport<f64>) -> String {
    match r.run_label {
        Some(l) => format!("{}_{l}.csv", r.protocol),
        None => format!("{}.csv", r.protocol),
    }
}

fn summary_line(tag: &str, r: &EvalReport<f64>) -> String {
    let s = r.summary();
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt17);
    format!(
        "{tag},{},{},{},{},{},{}\n",
        r.protocol,
        r.run_label.map_or_else(|| "all".to_string(), |l| l.to_string()),
        s.n,
        s.excluded,
        opt(s.mean),
        opt(s.sd)
    )
}

fn test_line(name: &str, t: Result<TTestResult<f64>>) -> String {
    match t {
        Ok(t) => format!("{name},{},{},{}\n", fmt17(t.t), fmt17(t.df), fmt17(t.p)),
        Err(e) => format!("{name},NA,NA,NA # {e}\n"),
    }
}

/// Protocol reports for one models directory.
fn protocol_reports(
    c: &PipelineConfig,
    protocol: ProtocolArg,
    models: &ModelSet<f64>,
    data: &DataSet<f64>,
    targets: &TargetSet<f64>,
) -> Result<Vec<EvalReport<f64>>> {
    let labels = [RunLabel::Loc1, RunLabel::Loc2];
    let task_models: ModelSet<f64> = models
        .iter()
        .filter(|(k, _)| k.label != RunLabel::Rest)
        .map(|(k, m)| (k.clone(), m.clone()))
        .collect();
    Ok(match protocol {
        ProtocolArg::SelfFit => vec![self_fit(&task_models, data, targets)?],
        ProtocolArg::Within => vec![within_subject(&task_models, data, targets)?],
        ProtocolArg::Between => labels
            .iter()
            .map(|&l| pairwise_between(&task_models, data, targets, l))
            .collect::<Result<_>>()?,
        ProtocolArg::Average => {
            let mut v = Vec::new();
            for l in labels {
                v.push(average_model_loo(&task_models, data, targets, l)?);
                v.push(pairwise_between(&task_models, data, targets, l)?);
            }
            v
        }
        ProtocolArg::Validation => {
            let vpath = c
                .validation_manifest
                .as_deref()
                .ok_or_else(|| Error::Protocol("validation needs --validation-manifest".into()))?;
            let vdata = load_manifest_data(vpath, c)?;
            let vtargets = targets_for(c, &vdata)?;
            let mut v = Vec::new();
            for l in labels {
                let r = apply_to_validation(&task_models, &vdata, &vtargets, l)?;
                v.push(r.pairwise);
                v.push(r.average);
            }
            v
        }
        ProtocolArg::Resting => vec![self_fit(&task_models, data, targets)?],
    })
}

pub fn eval(c: &PipelineConfig, protocol: ProtocolArg, models_dir: &Path, compare: Option<&Path>, quiet: bool) -> Result<()> {
    let out = c
        .out_dir
        .as_deref()
        .ok_or_else(|| Error::Parameter("no output directory (--out-dir)".into()))?;
    let data = load_manifest_data(manifest_path(c)?, c)?;
    let targets = targets_for(c, &data)?;
    let models = load_models(models_dir, data.keys().cloned())?;
    let reports = protocol_reports(c, protocol, &models, &data, &targets)?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;

    let mut summary = String::from("source_dir,protocol,run_label,n,excluded,mean,sd\n");
    let mut tests = String::from("test,t,df,p\n");
    for r in &reports {
        write_file(&out.join(report_name(r)), &r.to_csv())?;
        summary.push_str(&summary_line("models", r));
    }
    if protocol == ProtocolArg::Within {
        let w = &reports[0];
        for (from, to) in [(RunLabel::Loc1, RunLabel::Loc2), (RunLabel::Loc2, RunLabel::Loc1)] {
            let dir = w.filtered(|e| e.source.ends_with(&format!(":{from}")));
            summary.push_str(&summary_line(&format!("models[{from}->{to}]"), &dir));
        }
    }
    if protocol == ProtocolArg::Average {
        for pair in reports.chunks(2) {
            let label = pair[0].run_label.map_or_else(String::new, |l| l.to_string());
            tests.push_str(&test_line(
                &format!("average_vs_between_{label}"),
                ttest_two_sample(&pair[0].scores(), &pair[1].scores(), TTestKind::TwoSampleWelch),
            ));
        }
    }
    if protocol == ProtocolArg::Validation {
        for pair in reports.chunks(2) {
            let label = pair[0].run_label.map_or_else(String::new, |l| l.to_string());
            tests.push_str(&test_line(
                &format!("validation_average_vs_pairwise_{label}"),
                ttest_two_sample(&pair[1].scores(), &pair[0].scores(), TTestKind::TwoSampleWelch),
            ));
        }
    }
    if protocol == ProtocolArg::Resting {
        let task = &reports[0];
        let rest_keys: Vec<&RunKey> = data.keys().filter(|k| k.label == RunLabel::Rest).collect();
        if rest_keys.is_empty() {
            return Err(Error::Protocol("resting protocol needs Rest runs in the manifest".into()));
        }
        let mut rest = String::from("run,method,r\n");
        let (mut lin, mut gp) = (Vec::new(), Vec::new());
        for (i, key) in rest_keys.into_iter().enumerate() {
            let cfg = c.gp.clone().with_seed(derive_seed(c.seed, 0x4E57 + i as u64));
            let prog = progress_printer(quiet, format!("rest {key}"));
            let r = resting_overfit(&data[key], &targets[&RunLabel::Rest], &lambda_choice(c), &cfg, c.gp_runs, &prog)?;
            let show = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), fmt17);
            let _ = writeln!(rest, "{key},linear,{}", show(r.r_linear));
            let _ = writeln!(rest, "{key},gp,{}", show(r.r_gp));
            lin.extend(r.r_linear);
            gp.extend(r.r_gp);
        }
        write_file(&out.join("resting.csv"), &rest)?;
        for (name, rs) in [("linear", &lin), ("gp", &gp)] {
            let mean = roiregress::scalar::mean(rs);
            match mean {
                Some(mu) => tests.push_str(&test_line(
                    &format!("task_self_vs_rest_{name}(mu={})", fmt17(mu)),
                    ttest_one_sample(&task.scores(), mu),
                )),
                None => tests.push_str(&format!("task_self_vs_rest_{name},NA,NA,NA # no defined resting score\n")),
            }
        }
    }
    if let Some(cdir) = compare {
        let other = load_models(cdir, data.keys().cloned())?;
        let oreports = protocol_reports(c, protocol, &other, &data, &targets)?;
        for (a, b) in reports.iter().zip(&oreports) {
            summary.push_str(&summary_line("compare", b));
            tests.push_str(&test_line(
                &format!("models_vs_compare_{}", report_name(a).trim_end_matches(".csv")),
                ttest_two_sample(&a.scores(), &b.scores(), TTestKind::TwoSampleWelch),
            ));
        }
    }
    write_file(&out.join("summary.csv"), &summary)?;
    write_file(&out.join("tests.csv"), &tests)?;
    print!("{summary}");
    Ok(())
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim_start().starts_with('#') {
        return Ok(EvalReport::<f64>::parse_csv(&text)?.scores());
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                row: i + 1,
                col: 1,
                msg: format!("bad score {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let xs = read_scores(&a.a)?;
    let r = match (&a.b, a.mu) {
        (Some(b), None) => {
            let kind = match a.test {
                TestKind::Welch => TTestKind::TwoSampleWelch,
                TestKind::Pooled => TTestKind::TwoSamplePooled,
            };
            ttest_two_sample(&xs, &read_scores(b)?, kind)?
        }
        (None, Some(mu)) => ttest_one_sample(&xs, mu)?,
        _ => return Err(Error::Parameter("give either --b or --mu".into())),
    };
    println!("{},{},{}", fmt17(r.t), fmt17(r.df), fmt17(r.p));
    Ok(())
}

fn describe_genome(g: &ExpressionGenome<f64>) -> String {
    let active = g.active_indices().len();
    let vars = g.variables();
    format!(
        "kind: gp\nnodes: {} ({active} active)\nvariables: {}\nexpression:\n{}\n",
        g.len(),
        vars.iter().map(|v| format!("x{v}")).collect::<Vec<_>>().join(" "),
        sexpr::to_sexpr(g)
    )
}

pub fn inspect(path: &Path) -> Result<()> {
    match Model::<f64>::load(path)? {
        Model::Linear(m) => {
            println!("kind: linear");
            println!("lambda: {}", m.lambda);
            println!("intercept: {}", m.intercept);
            println!("weights: {}", m.weights.len());
            for (i, w) in m.weights.iter().enumerate() {
                println!("  x{i:<4} {w:>+.6e}");
            }
        }
        Model::Genome(g) => print!("{}", describe_genome(&g)),
    }
    Ok(())
}
