//! `pwlik` command-line frontend.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 computation failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pwlik::harness::report::{format_g6, write_csv};
use pwlik::harness::{parse_box, Scenario};
use pwlik::{
    estimate, simulate_ou, tau2_approx, tau2_exact, wp_variance_from_tau, CovParams, Design, ExperimentConfig,
    MinimizeOptions, ObjectiveKind, ParamBox, RngStream, SamplePath, SummaryRow, WeightSeq,
};

#[derive(Parser)]
#[command(
    name = "pwlik",
    about = "Pairwise and full likelihood estimation for the exponential-covariance Gaussian process"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path on [0, 1] and write it as CSV with header s,z.
    Simulate(SimulateArgs),
    /// Estimate (θ, σ²) from a path file.
    Estimate(EstimateArgs),
    /// Compute τ² and optionally the asymptotic variance of the pairwise estimate.
    Tau(TauArgs),
    /// Run a Monte Carlo scenario and write the summary CSV.
    Experiment(ExperimentArgs),
    /// Print the version.
    Version,
}

#[derive(Args)]
#[group(id = "design", required = true, multiple = false)]
struct DesignArgs {
    /// Number of equispaced points on [0, 1].
    #[arg(long, group = "design")]
    n: Option<usize>,
    /// Refinement level L: spacing 0.02/L, 50L + 1 points.
    #[arg(long, group = "design")]
    grid: Option<usize>,
}

impl DesignArgs {
    fn design(&self) -> pwlik::Result<Design> {
        match (self.n, self.grid) {
            (Some(n), _) => Design::equispaced(n),
            (_, Some(l)) => Design::refinement_grid(l),
            _ => unreachable!("clap enforces one design flag"),
        }
    }
}

#[derive(Args)]
#[group(multiple = false)]
struct WeightArgs {
    /// Unit weights on lags 1..=K.
    #[arg(long = "K", visible_alias = "k")]
    k: Option<usize>,
    /// Explicit lag weights, comma separated.
    #[arg(long)]
    weights: Option<String>,
}

impl WeightArgs {
    fn weights(&self) -> pwlik::Result<WeightSeq> {
        match (&self.weights, self.k) {
            (Some(s), _) => WeightSeq::new(parse_floats(s)?),
            (None, Some(k)) => WeightSeq::unit(k),
            (None, None) => WeightSeq::unit(1),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mle,
    Wpmle,
    Wpcmle,
}

#[derive(Args)]
struct EstimateArgs {
    /// Path file with header s,z.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    weights: WeightArgs,
    /// Parameter box "a,b,c,d" for θ ∈ [a,b], σ² ∈ [c,d]; "inf" opens a side.
    #[arg(long = "box", default_value = "0.01,2500,0.01,5")]
    param_box: String,
}

#[derive(Args)]
struct TauArgs {
    /// Path file whose locations define the design.
    #[arg(long = "in", conflicts_with_all = ["n", "grid"])]
    input: Option<PathBuf>,
    #[arg(long, conflicts_with = "grid")]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[command(flatten)]
    weights: WeightArgs,
    /// Use the exact τ² at --theta0 instead of the small-spacing approximation.
    #[arg(long, requires = "theta0")]
    exact: bool,
    /// Also print the asymptotic variance of the pairwise estimate of θσ².
    #[arg(long, requires_all = ["theta0", "sigma20"])]
    asym_var: bool,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    sigma20: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// table1, table2, case-iii, case-i, case-iv or appendix-b.
    #[arg(long)]
    scenario: Option<String>,
    /// key=value file applied before the command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Sample sizes, comma separated.
    #[arg(long = "n")]
    n_list: Option<String>,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long = "box")]
    param_box: Option<String>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    sigma20: Option<f64>,
    /// Further key=value overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// CSV output file; standard output if omitted (summaries then go to standard error).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl ToString) -> Failure {
    Failure::Compute(e.to_string())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", one_line(&e.render().to_string()));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Tau(a) => cmd_tau(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Version => {
            println!("pwlik {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Collapse a clap diagnostic into one line, dropping the usage hints.
fn one_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_floats(s: &str) -> pwlik::Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| pwlik::Error::Config(format!("invalid number '{}'", x.trim())))
        })
        .collect()
}

fn write_output(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| compute(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(compute),
    }
}

fn read_path(p: &Path) -> Result<SamplePath, Failure> {
    let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(|h| h.split(',').map(str::trim).collect::<Vec<_>>()) {
        Some(h) if h == ["s", "z"] => {}
        _ => return Err(usage(format!("{}: expected header s,z", p.display()))),
    }
    let (mut s, mut z) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let v = parse_floats(line).map_err(|e| usage(format!("{} row {}: {e}", p.display(), i + 1)))?;
        if v.len() != 2 {
            return Err(usage(format!("{} row {}: expected 2 columns", p.display(), i + 1)));
        }
        s.push(v[0]);
        z.push(v[1]);
    }
    let design = Design::new(s).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    SamplePath::new(design, z).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let psi = CovParams::new(a.theta, a.sigma2).map_err(usage)?;
    let design = a.design.design().map_err(usage)?;
    let path = simulate_ou(&psi, &design, &mut RngStream::new(a.seed, 0));
    let mut text = String::from("s,z\n");
    for (s, z) in path.points().iter().zip(path.values()) {
        text.push_str(&format!("{s},{z}\n"));
    }
    write_output(a.out.as_deref(), &text)
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let w = a.weights.weights().map_err(usage)?;
    let bx: ParamBox = parse_box(&a.param_box).map_err(usage)?;
    let path = read_path(&a.input)?;
    let kind = match a.method {
        Method::Mle => ObjectiveKind::Full,
        Method::Wpmle => ObjectiveKind::Pl,
        Method::Wpcmle => ObjectiveKind::Pcl,
    };
    let r = estimate(kind, &path, &w, &bx, &MinimizeOptions::default()).map_err(compute)?;
    println!("theta_hat={}", r.psi_hat.theta());
    println!("sigma2_hat={}", r.psi_hat.sigma2());
    println!("microergodic={}", r.microergodic);
    println!("objective={}", r.objective_value);
    println!("converged={}", r.converged);
    Ok(())
}

fn cmd_tau(a: TauArgs) -> CmdResult {
    let w = a.weights.weights().map_err(usage)?;
    let design = match (&a.input, a.n, a.grid) {
        (Some(p), _, _) => read_path(p)?.design().clone(),
        (None, Some(n), _) => Design::equispaced(n).map_err(usage)?,
        (None, None, Some(l)) => Design::refinement_grid(l).map_err(usage)?,
        (None, None, None) => return Err(usage("one of --in, --n or --grid is required")),
    };
    let psi0 = match (a.theta0, a.sigma20) {
        (Some(t), s) => Some(CovParams::new(t, s.unwrap_or(1.0)).map_err(usage)?),
        (None, _) => None,
    };
    let tau = match (a.exact, psi0) {
        (true, Some(p)) => tau2_exact(&design, &w, p.theta()),
        _ => tau2_approx(&design, &w),
    }
    .map_err(usage)?;
    println!("tau2={}", tau.tau2);
    println!("method={:?}", tau.method);
    println!("n={}", tau.n);
    println!("K={}", tau.k);
    if a.asym_var {
        let psi0 = psi0.expect("clap requires --theta0 with --asym-var");
        println!("asym_var={}", wp_variance_from_tau(&psi0, &tau, &w));
    }
    Ok(())
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let file = match &a.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?),
        None => None,
    };
    let file_scenario = file.as_deref().and_then(|t| {
        t.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == "scenario")
            .map(|(_, v)| v.trim().to_string())
    });
    let name = a
        .scenario
        .clone()
        .or(file_scenario)
        .ok_or_else(|| usage("--scenario is required (or a scenario key in --config)"))?;
    let scenario: Scenario = name.parse().map_err(usage)?;
    let mut cfg = ExperimentConfig::defaults(scenario);
    if let Some(text) = &file {
        cfg.apply_file_contents(text).map_err(usage)?;
        cfg.scenario = scenario;
    }
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| overrides.push((k.to_string(), v));
    if let Some(v) = a.reps {
        push("reps", v.to_string());
    }
    if let Some(v) = a.seed {
        push("seed", v.to_string());
    }
    if let Some(v) = a.threads {
        push("threads", v.to_string());
    }
    if let Some(v) = &a.n_list {
        push("n", v.clone());
    }
    if let Some(v) = a.weights.k {
        push("K", v.to_string());
    }
    if let Some(v) = &a.weights.weights {
        push("weights", v.clone());
    }
    if let Some(v) = &a.param_box {
        push("box", v.clone());
    }
    if let Some(v) = a.theta0 {
        push("theta0", v.to_string());
    }
    if let Some(v) = a.sigma20 {
        push("sigma20", v.to_string());
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        if k.trim() == "scenario" {
            return Err(usage("use --scenario to select the scenario"));
        }
        push(k.trim(), v.trim().to_string());
    }
    for (k, v) in &overrides {
        cfg.apply(k, v).map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn summary_line(row: &SummaryRow) -> String {
    let opt = |x: Option<f64>| x.map(format_g6).unwrap_or_else(|| "-".into());
    let k = row.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
    format!(
        "{} {} n={} K={} reps={} failures={} median={} var={} asym_var={} rmse={}",
        row.scenario,
        row.estimator,
        row.n,
        k,
        row.reps,
        row.failures,
        opt(row.summary.as_ref().map(|s| s.q50)),
        opt(row.summary.as_ref().map(|s| s.variance)),
        opt(row.asym_var),
        opt(row.rmse),
    )
}

fn cmd_experiment(a: ExperimentArgs) -> CmdResult {
    let cfg = experiment_config(&a)?;
    let report = pwlik::harness::run_experiment(&cfg).map_err(compute)?;
    let mut csv = Vec::new();
    write_csv(&mut csv, &report.rows).map_err(compute)?;
    write_output(a.out.as_deref(), &String::from_utf8(csv).map_err(compute)?)?;
    let mut lines: Vec<String> = report.rows.iter().map(summary_line).collect();
    if let Some(p) = &report.pathwise {
        lines.push(format!(
            "pathwise n={}->{} rms={} max={}",
            p.n_coarse,
            p.n_fine,
            format_g6(p.rms),
            format_g6(p.max)
        ));
    }
    for l in &lines {
        if a.out.is_some() {
            println!("{l}");
        } else {
            eprintln!("{l}");
        }
    }
    let failures: usize = report.rows.iter().map(|r| r.failures).sum();
    if failures > 0 {
        return Err(compute(format!("{failures} replication(s) failed")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_diagnostics_collapse_to_one_line() {
        let text = "error: the following required arguments were not provided:\n  --theta <THETA>\n\nUsage: pwlik simulate --theta <THETA>\n\nFor more information, try '--help'.\n";
        assert_eq!(
            one_line(text),
            "error: the following required arguments were not provided: --theta <THETA>"
        );
    }

    #[test]
    fn weight_flags() {
        let w = WeightArgs { k: None, weights: None }.weights().unwrap();
        assert_eq!(w.as_slice(), &[1.0]);
        let w = WeightArgs {
            k: Some(3),
            weights: None,
        }
        .weights()
        .unwrap();
        assert_eq!(w.as_slice(), &[1.0, 1.0, 1.0]);
        let w = WeightArgs {
            k: None,
            weights: Some("1, 0.5".into()),
        }
        .weights()
        .unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.5]);
        assert!(parse_floats("1,x").is_err());
    }
}
