use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roiregress"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn numbers(text: &str) -> Vec<f64> {
    text.lines().map(|l| l.trim().parse().unwrap()).collect()
}

fn small_dataset(dir: &Path) {
    ok(
        dir,
        &[
            "synth", "--out-dir", "data", "--subjects", "4", "--validation", "2", "--rois", "6", "--T", "120",
            "--signal-rois", "0,2", "--weights", "1,0.5", "--noise-sd", "0.3", "--jitter-sd", "0.1", "--rest",
            "--seed", "3",
        ],
    );
}

#[test]
fn hr_writes_one_value_per_time_point() {
    let d = tempfile::tempdir().unwrap();
    let text = ok(d.path(), &["hr", "--T", "340"]);
    assert_eq!(numbers(&text).len(), 340);
    ok(d.path(), &["hr", "--T", "340", "--order", "loc2", "--scope", "faces", "--out", "f.csv"]);
    assert_eq!(numbers(&fs::read_to_string(d.path().join("f.csv")).unwrap()).len(), 340);
}

#[test]
fn hr_all_is_sum_of_categories() {
    let d = tempfile::tempdir().unwrap();
    let all = numbers(&ok(d.path(), &["hr", "--T", "336"]));
    let mut sum = vec![0.0; 336];
    for c in ["faces", "hands", "bodies", "scrambled"] {
        for (s, v) in sum.iter_mut().zip(numbers(&ok(d.path(), &["hr", "--T", "336", "--scope", c]))) {
            *s += v;
        }
    }
    for (a, s) in all.iter().zip(&sum) {
        assert!((a - s).abs() <= 1e-12);
    }
}

#[test]
fn usage_errors_exit_two_and_runtime_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let bad = run(d.path(), &["hr", "--T", "10", "--scope", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = run(d.path(), &["fit", "--manifest", "none.txt", "--out-dir", "m"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error[io]"));
}

#[test]
fn linear_pipeline_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    small_dataset(p);
    ok(p, &["fit", "--manifest", "data/manifest.txt", "--out-dir", "m", "--quiet"]);
    let models = fs::read_dir(p.join("m"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "model"))
        .count();
    assert_eq!(models, 8);
    assert_eq!(fs::read_to_string(p.join("m/fit_summary.csv")).unwrap().lines().count(), 9);

    let rows = |f: &str| {
        fs::read_to_string(p.join(f))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("source"))
            .count()
    };
    for proto in ["self", "within", "between", "average"] {
        ok(p, &["eval", "--protocol", proto, "--models-dir", "m", "--manifest", "data/manifest.txt", "--out-dir", proto, "--quiet"]);
    }
    assert_eq!(rows("self/self.csv"), 8);
    assert_eq!(rows("within/within.csv"), 8);
    assert_eq!(rows("between/between_Loc1.csv"), 12);
    assert_eq!(rows("average/average_Loc2.csv"), 4);
    assert!(fs::read_to_string(p.join("average/tests.csv")).unwrap().contains("average_vs_between_Loc1"));

    ok(
        p,
        &[
            "eval", "--protocol", "validation", "--models-dir", "m", "--manifest", "data/manifest.txt",
            "--validation-manifest", "data/validation.txt", "--out-dir", "val", "--quiet",
        ],
    );
    assert_eq!(rows("val/validation-pairwise_Loc1.csv"), 8);
    assert_eq!(rows("val/validation-average_Loc1.csv"), 2);

    let stats = ok(p, &["stats", "--a", "self/self.csv", "--b", "between/between_Loc1.csv"]);
    assert_eq!(stats.trim().split(',').count(), 3);
    let shown = ok(p, &["inspect", "m/s01_Loc1.model"]);
    assert!(shown.starts_with("kind: linear"));
}

#[test]
fn resting_protocol_reads_rest_runs_from_manifest() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    small_dataset(p);
    let mut manifest = fs::read_to_string(p.join("data/manifest.txt")).unwrap();
    manifest.push_str(&fs::read_to_string(p.join("data/rest.txt")).unwrap());
    fs::write(p.join("data/all.txt"), manifest).unwrap();
    ok(p, &["fit", "--manifest", "data/manifest.txt", "--out-dir", "m", "--quiet"]);
    ok(
        p,
        &[
            "eval", "--protocol", "resting", "--models-dir", "m", "--manifest", "data/all.txt", "--gp-runs", "1",
            "--gp-islands", "1", "--gp-pop", "10", "--gp-generations", "5", "--gp-migrations", "1", "--out-dir", "rest",
            "--quiet",
        ],
    );
    let resting = fs::read_to_string(p.join("rest/resting.csv")).unwrap();
    assert_eq!(resting.lines().count(), 1 + 2 * 4);
    assert!(fs::read_to_string(p.join("rest/tests.csv")).unwrap().contains("task_self_vs_rest_linear"));
}

#[test]
fn stats_prints_hand_example() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("a.txt"), "1\n2\n3\n4\n5\n").unwrap();
    fs::write(d.path().join("b.txt"), "2\n3\n4\n5\n6\n").unwrap();
    let row = ok(d.path(), &["stats", "--a", "a.txt", "--b", "b.txt"]);
    let v: Vec<f64> = row.trim().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((v[0] + 1.0).abs() <= 1e-9);
    assert_eq!(v[1], 8.0);
    let one = ok(d.path(), &["stats", "--a", "a.txt", "--mu", "0"]);
    let v: Vec<f64> = one.trim().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((v[0] - 4.242640687119285).abs() <= 1e-9);
    assert_eq!(v[1], 4.0);
}

#[test]
fn config_file_and_flags_combine() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    small_dataset(p);
    fs::write(p.join("run.cfg"), "manifest = data/manifest.txt\nlambda = 5\nout_dir = from_file\n").unwrap();
    ok(p, &["fit", "--config", "run.cfg", "--out-dir", "from_flag", "--quiet"]);
    assert!(!p.join("from_file").exists());
    let cfg = fs::read_to_string(p.join("from_flag/fit_config.txt")).unwrap();
    assert!(cfg.lines().any(|l| l.replace(" ", "") == "lambda=5.0"), "{cfg}");
    let model = fs::read_to_string(p.join("from_flag/s01_Loc1.model")).unwrap();
    assert!(model.contains("lambda=5.0000000000000000e0"));
    fs::write(p.join("bad.cfg"), "manifest = data/manifest.txt\nno_such_key = 1\n").unwrap();
    let bad = run(p, &["fit", "--config", "bad.cfg", "--out-dir", "x"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn gp_fit_writes_candidates_and_is_repeatable() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    small_dataset(p);
    let args = |out: &'static str| {
        vec![
            "fit", "--manifest", "data/manifest.txt", "--method", "gp", "--gp-runs", "3", "--gp-islands", "2", "--gp-pop",
            "20", "--gp-generations", "10", "--gp-migrations", "2", "--seed", "9", "--out-dir", out, "--quiet",
        ]
    };
    ok(p, &args("g1"));
    ok(p, &args("g2"));
    for f in ["s01_Loc1/candidate_002.gp", "s01_Loc1/trace_000.csv", "s01_Loc1/best.txt", "s02_Loc2.model", "fit_summary.csv"] {
        assert_eq!(fs::read(p.join("g1").join(f)).unwrap(), fs::read(p.join("g2").join(f)).unwrap(), "{f}");
    }
    assert!(ok(p, &["inspect", "g1/s01_Loc1.model"]).starts_with("kind: gp"));
}
