use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pwlik(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwlik"))
        .args(args)
        .output()
        .expect("spawn pwlik")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn key_values(o: &Output) -> HashMap<String, String> {
    stdout(o)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn number(o: &Output, key: &str) -> f64 {
    key_values(o)[key].parse().unwrap()
}

fn assert_usage_error(o: &Output) {
    assert_eq!(o.status.code(), Some(2), "stderr: {}", stderr(o));
    let err = stderr(o);
    assert_eq!(
        err.trim_end().lines().count(),
        1,
        "diagnostic should be one line: {err}"
    );
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> String {
    let file = dir.join(name).to_str().unwrap().to_string();
    let mut args = vec!["simulate", "--theta", "15", "--sigma2", "1", "--out", &file];
    args.extend_from_slice(extra);
    let o = pwlik(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    file
}

#[test]
fn simulate_on_the_refinement_grid() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--grid", "1", "--seed", "3"]);
    let text = fs::read_to_string(file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,z"));
    let s: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(s.len(), 51);
    for (i, x) in s.iter().enumerate() {
        assert!((x - 0.02 * i as f64).abs() < 1e-12, "{i}: {x}");
    }
    assert_eq!(s[50], 1.0);
}

#[test]
fn simulate_is_deterministic_in_the_seed() {
    let args = ["simulate", "--n", "2", "--theta", "1", "--sigma2", "1", "--seed", "7"];
    let (a, b) = (pwlik(&args), pwlik(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 3);
    let mut other = args;
    other[8] = "8";
    assert_ne!(pwlik(&other).stdout, a.stdout);
}

#[test]
fn simulate_flag_errors_exit_with_usage() {
    assert_usage_error(&pwlik(&["simulate", "--n", "2", "--sigma2", "1"]));
    assert_usage_error(&pwlik(&[
        "simulate", "--n", "2", "--grid", "1", "--theta", "1", "--sigma2", "1",
    ]));
    assert_usage_error(&pwlik(&["simulate", "--n", "two", "--theta", "1", "--sigma2", "1"]));
    assert_usage_error(&pwlik(&["simulate", "--n", "2", "--theta", "-1", "--sigma2", "1"]));
    assert_usage_error(&pwlik(&[]));
    assert_usage_error(&pwlik(&["frobnicate"]));
}

#[test]
fn estimate_in_a_singleton_box_echoes_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--n", "40"]);
    for method in ["mle", "wpmle", "wpcmle"] {
        let o = pwlik(&[
            "estimate",
            "--in",
            &file,
            "--method",
            method,
            "--box",
            "7.5,7.5,0.4,0.4",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(number(&o, "theta_hat"), 7.5);
        assert_eq!(number(&o, "sigma2_hat"), 0.4);
        assert!((number(&o, "microergodic") - 3.0).abs() < 1e-14);
        assert_eq!(key_values(&o)["converged"], "true");
        assert!(number(&o, "objective").is_finite());
    }
}

#[test]
fn pairwise_and_full_estimates_agree_on_a_fine_grid() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--grid", "16", "--seed", "11"]);
    let wp = pwlik(&["estimate", "--in", &file, "--method", "wpmle", "--K", "1"]);
    let ml = pwlik(&["estimate", "--in", &file, "--method", "mle"]);
    let (a, b) = (number(&wp, "microergodic"), number(&ml, "microergodic"));
    assert!((a / b - 1.0).abs() < 0.02, "{a} vs {b}");
}

#[test]
fn default_box_is_the_reference_box() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--grid", "2", "--seed", "4"]);
    let a = pwlik(&["estimate", "--in", &file, "--method", "wpcmle", "--K", "2"]);
    let b = pwlik(&[
        "estimate",
        "--in",
        &file,
        "--method",
        "wpcmle",
        "--weights",
        "1,1",
        "--box",
        "0.01,2500,0.01,5",
    ]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn estimate_accepts_open_box_sides() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--grid", "4", "--seed", "5"]);
    let o = pwlik(&["estimate", "--in", &file, "--method", "wpmle", "--box", "14,16,0,inf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let theta = number(&o, "theta_hat");
    assert!((14.0..=16.0).contains(&theta));
}

#[test]
fn estimate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--n", "10"]);
    assert_usage_error(&pwlik(&["estimate", "--in", &file, "--method", "ols"]));
    assert_usage_error(&pwlik(&[
        "estimate", "--in", &file, "--method", "mle", "--box", "1,2,3",
    ]));
    assert_usage_error(&pwlik(&[
        "estimate",
        "--in",
        &file,
        "--method",
        "mle",
        "--K",
        "1",
        "--weights",
        "1",
    ]));
    let missing = dir.path().join("none.csv");
    assert_usage_error(&pwlik(&[
        "estimate",
        "--in",
        missing.to_str().unwrap(),
        "--method",
        "mle",
    ]));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y\n0,1\n1,2\n").unwrap();
    assert_usage_error(&pwlik(&["estimate", "--in", bad.to_str().unwrap(), "--method", "mle"]));
    let single = dir.path().join("single.csv");
    fs::write(&single, "s,z\n0,1\n").unwrap();
    let o = pwlik(&["estimate", "--in", single.to_str().unwrap(), "--method", "wpmle"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tau_approximation_on_the_coarse_grid() {
    let o = pwlik(&["tau", "--grid", "1", "--K", "1"]);
    assert!(o.status.success());
    assert!((number(&o, "tau2") - 2.0 * 50.0 / 51.0).abs() < 1e-12);
    assert_eq!(key_values(&o)["method"], "Approx");
    let o = pwlik(&[
        "tau",
        "--grid",
        "1",
        "--K",
        "1",
        "--asym-var",
        "--theta0",
        "15",
        "--sigma20",
        "1",
    ]);
    assert_eq!(format!("{:.4}", number(&o, "asym_var")), "8.6505");
}

#[test]
fn exact_tau_matches_the_approximation_for_unit_lag() {
    let a = number(&pwlik(&["tau", "--grid", "4", "--K", "1"]), "tau2");
    let o = pwlik(&["tau", "--grid", "4", "--K", "1", "--exact", "--theta0", "15"]);
    assert_eq!(key_values(&o)["method"], "Exact");
    assert!((number(&o, "tau2") - a).abs() < 1e-12);
}

#[test]
fn tau_from_a_path_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = simulate(dir.path(), "p.csv", &["--grid", "1"]);
    let a = pwlik(&["tau", "--in", &file, "--weights", "1,0.5"]);
    let b = pwlik(&["tau", "--grid", "1", "--weights", "1,0.5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tau_flag_errors() {
    assert_usage_error(&pwlik(&["tau", "--grid", "1", "--exact"]));
    assert_usage_error(&pwlik(&["tau", "--grid", "1", "--asym-var", "--theta0", "15"]));
    assert_usage_error(&pwlik(&["tau", "--K", "1"]));
    assert_usage_error(&pwlik(&["tau", "--grid", "1", "--weights", "0,0"]));
}

#[test]
fn cutoff_asymptotic_columns_need_no_replications() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (a, b) = (out("a.csv"), out("b.csv"));
    let o = pwlik(&[
        "experiment",
        "--scenario",
        "table2",
        "--reps",
        "1",
        "--seed",
        "1",
        "--out",
        &a,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    pwlik(&[
        "experiment",
        "--scenario",
        "table2",
        "--reps",
        "1",
        "--seed",
        "2",
        "--out",
        &b,
    ]);
    let asym = |f: &str| -> Vec<String> {
        fs::read_to_string(f)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(14).unwrap().to_string())
            .collect()
    };
    let col = asym(&a);
    assert!(!col.is_empty() && col.iter().all(|c| !c.is_empty()));
    assert_eq!(col, asym(&b));
    assert!(col.contains(&"8.65052".to_string()));
    // one summary line per CSV row
    assert_eq!(stdout(&o).lines().count(), col.len());
}

#[test]
fn experiment_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let run = |file: &str, threads: &str| {
        let o = pwlik(&[
            "experiment",
            "--scenario",
            "table1",
            "--reps",
            "40",
            "--seed",
            "42",
            "--n",
            "51,101",
            "--threads",
            threads,
            "--out",
            file,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(file).unwrap()
    };
    let a = run(&out("a.csv"), "1");
    assert_eq!(a, run(&out("b.csv"), "1"));
    assert_eq!(a, run(&out("c.csv"), "4"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "scenario,estimator,n,K,reps,failures,q05,q25,q50,q75,q95,mean,variance,kurtosis,asym_var,sample_var,seed\n"
    ));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\nscenario = case-iii\nreps = 5\nn = 51\nseed = 9\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = pwlik(&["experiment", "--config", cfg, "--reps", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!((f[0], f[2], f[4], f[16]), ("case-iii", "51", "3", "9"));
    }
    // summary lines go to stderr when the CSV goes to stdout
    assert!(stderr(&o).contains("rmse="));
    assert_usage_error(&pwlik(&["experiment", "--config", cfg, "--set", "bogus=1"]));
    assert_usage_error(&pwlik(&["experiment", "--scenario", "table3"]));
    assert_usage_error(&pwlik(&["experiment", "--reps", "3"]));
}

#[test]
fn conditional_rmse_shrinks_while_pairwise_stalls() {
    let o = pwlik(&[
        "experiment",
        "--scenario",
        "case-iii",
        "--reps",
        "200",
        "--seed",
        "3",
        "--n",
        "51,801",
        "--out",
        "/dev/null",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rmse = |est: &str, n: &str| -> f64 {
        let line = stdout(&o)
            .lines()
            .find(|l| l.split(' ').nth(1) == Some(est) && l.contains(&format!(" n={n} ")))
            .unwrap()
            .to_string();
        line.rsplit_once("rmse=").unwrap().1.parse().unwrap()
    };
    assert!(rmse("WPCMLE", "801") < 0.5 * rmse("WPCMLE", "51"));
    assert!(rmse("WPMLE", "801") > 0.4 * rmse("WPMLE", "51"));
    assert!(rmse("WPCMLE", "801") < rmse("WPMLE", "801"));
}

#[test]
fn version_prints_the_package_version() {
    let o = pwlik(&["version"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), format!("pwlik {}", env!("CARGO_PKG_VERSION")));
}
