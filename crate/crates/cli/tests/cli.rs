use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spotvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spotvol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = spotvol(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn same_bytes(a: &Path, b: &Path) {
    assert_eq!(
        fs::read(a).unwrap(),
        fs::read(b).unwrap(),
        "{} vs {}",
        a.display(),
        b.display()
    );
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let (ja, jb) = (dir.path().join("ja.csv"), dir.path().join("jb.csv"));
    for (out, jout) in [(&a, &ja), (&b, &jb)] {
        ok(&[
            "simulate",
            "--model",
            "sinshift:1",
            "--jumps",
            "lambda=2,marks=unit",
            "--grid-points",
            "5000",
            "--seed",
            "42",
            "--out",
            p(out),
            "--jumps-out",
            p(jout),
        ]);
    }
    same_bytes(&a, &b);
    same_bytes(&ja, &jb);
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("t,H,J,P,V\n"));
    assert_eq!(text.lines().count(), 5001);

    let c = dir.path().join("c.csv");
    ok(&[
        "simulate",
        "--model",
        "sinshift:1",
        "--grid-points",
        "5000",
        "--seed",
        "43",
        "--out",
        p(&c),
    ]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn estimate_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    ok(&[
        "simulate",
        "--model",
        "constant:1",
        "--grid-points",
        "4001",
        "--seed",
        "7",
        "--out",
        p(&input),
    ]);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        ok(&[
            "estimate",
            "--input",
            p(&input),
            "--harmonics",
            "200",
            "--degree",
            "8",
            "--eval-points",
            "101",
            "--out",
            p(out),
            "--coefficients",
            p(&dir.path().join(format!("{}.coef", out.display()))),
        ]);
    }
    same_bytes(&a, &b);
    let meta_a = dir.path().join("a.csv.meta.json");
    same_bytes(&meta_a, &dir.path().join("b.csv.meta.json"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&meta_a).unwrap()).unwrap();
    assert_eq!(meta["harmonics"], 200);
    assert_eq!(meta["degree"], 8);
    assert_eq!(meta["kind"], "volatility");
    assert_eq!(meta["rescale"]["volatility_factor"], 1.0);

    let text = fs::read_to_string(&a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let values: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 101);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert!((mean - 1.0).abs() < 0.3, "mean spot variance {mean}");
}

#[test]
fn estimate_defaults_and_rescaled_mode() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    ok(&[
        "simulate",
        "--model",
        "constant:0.5",
        "--jumps",
        "lambda=1,marks=unit",
        "--grid-points",
        "2001",
        "--out",
        p(&input),
    ]);
    let out = dir.path().join("j.csv");
    ok(&[
        "estimate",
        "--input",
        p(&input),
        "--rescale-jumps",
        "--out",
        p(&out),
    ]);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("j.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["harmonics"], 1000);
    assert_eq!(meta["degree"], 15);
    assert_eq!(meta["kind"], "quadratic_jumps");
}

#[test]
fn degree_beyond_harmonics_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    ok(&[
        "simulate",
        "--model",
        "constant:1",
        "--grid-points",
        "101",
        "--out",
        p(&input),
    ]);
    let out = spotvol(&[
        "estimate",
        "--input",
        p(&input),
        "--harmonics",
        "10",
        "--degree",
        "11",
        "--out",
        p(&dir.path().join("e.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lower --degree to at most 10"), "{err}");
    assert!(!dir.path().join("e.csv").exists());
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = spotvol(&[
        "estimate",
        "--input",
        p(&missing),
        "--out",
        p(&dir.path().join("o.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    assert_eq!(spotvol(&["simulate", "--bogus"]).status.code(), Some(2));
    let bad_model = spotvol(&[
        "simulate",
        "--model",
        "wiggly:1",
        "--grid-points",
        "10",
        "--out",
        "x.csv",
    ]);
    assert_eq!(bad_model.status.code(), Some(2));
    let zero = spotvol(&[
        "simulate",
        "--model",
        "constant:1",
        "--grid-points",
        "1",
        "--out",
        "x.csv",
    ]);
    assert_eq!(zero.status.code(), Some(2));

    let malformed = dir.path().join("bad.csv");
    fs::write(&malformed, "t,logprice\n0,1\n1,x\n").unwrap();
    let out = spotvol(&[
        "estimate",
        "--input",
        p(&malformed),
        "--out",
        p(&dir.path().join("o.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn inversion_check_passes_on_simulated_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let jumps = dir.path().join("jumps.csv");
    ok(&[
        "simulate",
        "--model",
        "constant:1",
        "--jumps",
        "lambda=2,marks=unit",
        "--grid-points",
        "1001",
        "--seed",
        "3",
        "--out",
        p(&dir.path().join("path.csv")),
        "--jumps-out",
        p(&jumps),
    ]);
    let out = dir.path().join("inv.csv");
    ok(&[
        "inversion-check",
        "--jumps",
        p(&jumps),
        "--n-list",
        "8,16,...,1024",
        "--out",
        p(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("set,harmonics,t,error,bound,passed\n"));
    assert_eq!(text.lines().count(), 1 + 8 * 64);
    assert!(!text.contains("false"));
}

#[test]
fn sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{"n_values":[8,16,32,64],"grid":{"regular":2000},"model":{"kind":"constant","c":1.0},
            "replicates":30,"seed":1}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["sweep", "--config", p(&config), "--out-dir", p(&a)]);
    ok(&["sweep", "--config", p(&config), "--out-dir", p(&b)]);
    for f in [
        "sweep.csv",
        "errors.csv",
        "event_frequencies.csv",
        "summary.json",
        "error_vs_n.svg",
    ] {
        same_bytes(&a.join(f), &b.join(f));
    }
    let rows = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert!(rows.starts_with("harmonics,degree,mean,std,std_err\n"));
    assert_eq!(rows.lines().count(), 5);
    assert_eq!(
        fs::read_to_string(a.join("errors.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 4 * 30
    );

    fs::write(
        &config,
        r#"{"n_values":[8],"grid":{"regular":200},"model":{"kind":"constant","c":1.0},"replicates":5,"seed":1}"#,
    )
    .unwrap();
    let out = spotvol(&["sweep", "--config", p(&config), "--out-dir", p(&a)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jumps_demo_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&[
            "jumps-demo",
            "--out-dir",
            p(out),
            "--seed",
            "5",
            "--cells",
            "8192",
            "--harmonics",
            "1024",
        ]);
    }
    for m in [10, 50, 100, 700] {
        let f = format!("estimate_M{m}.csv");
        assert!(a.join(&f).exists(), "{f}");
        same_bytes(&a.join(&f), &b.join(&f));
    }
    for f in ["summary.json", "jumps.csv", "estimates.svg"] {
        same_bytes(&a.join(f), &b.join(f));
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["degrees"].as_array().unwrap().len(), 4);
}
