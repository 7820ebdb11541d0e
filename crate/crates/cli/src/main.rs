//! `predsched`: simulate, bound, verify and search from the command line.
//!
//! Exit codes: 0 pass, 1 invariant failure, 2 input error, 3 bound violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use predsched::adversary::{run_search, AdversaryError, SearchConfig};
use predsched::bounds::{evaluate, rational_grid, AlphaSquared, Formula};
use predsched::report::simulate;
use predsched::verify::{default_x_caps, run_suite, Suite, VerifyParams};
use predsched::{Algorithm, Instance, RatioReport, Rational};

const NODE_BUDGET_ENV: &str = "PREDSCHED_NODE_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "predsched", version, about = "Scheduling with predicted processing times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one algorithm on an instance and compare it with the optimum and its bound.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        /// Oracle node budget (defaults to $PREDSCHED_NODE_BUDGET, then 1e8).
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate a bound formula over a grid of alpha^2 values.
    Bounds {
        /// Formula id: thm1..thm6, prior-lb-nonpre, prior-ub-lppt, prior-lb-pre, prior-ub-pprr.
        #[arg(long)]
        formula: String,
        #[arg(long)]
        m: usize,
        /// Grid START:STOP:STEP of alpha^2 values.
        #[arg(long, conflicts_with = "x")]
        grid: Option<String>,
        /// A single alpha^2 value.
        #[arg(long)]
        x: Option<Rational>,
        #[command(flatten)]
        output: Output,
    },
    /// Run an invariant suite: sandwich, continuity, improvement, optimality or empirical.
    Verify {
        #[arg(long)]
        suite: Suite,
        /// Machine count or inclusive range A..B.
        #[arg(long, default_value = "2..8")]
        m: String,
        #[arg(long, default_value = "1:12:1/32")]
        grid: String,
        /// Random instances per machine count (empirical).
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict the empirical suite to one algorithm.
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long, default_value_t = 14)]
        n_max: usize,
        /// Largest alpha^2 cap for random instances (empirical).
        #[arg(long)]
        x_max: Option<Rational>,
        /// Oracle node budget.
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Hill-climb for an instance with a large competitive ratio.
    Search {
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        m: usize,
        /// Cap on alpha^2.
        #[arg(long)]
        x: Rational,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Number of instance evaluations.
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the best instance (JSON), for replay with `simulate`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the search log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Outcome format on standard output (csv prints the log).
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Simulate every `*.json` instance in a directory.
    Sweep {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
enum Failure {
    Invariant(String),
    Input(String),
    Violation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Input(_) => 2,
            Failure::Violation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invariant(m) | Failure::Input(m) | Failure::Violation(m) => m,
        }
    }
}

type CliResult = Result<(), Failure>;

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

impl Output {
    fn emit(&self, text: &str) -> CliResult {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| input(format!("stdout: {e}")))
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Flag, then environment, then the oracle default.
fn node_budget(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(NODE_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| input(format!("{NODE_BUDGET_ENV}={v}: {e}"))),
        Err(_) => Ok(None),
    }
}

fn parse_grid(raw: &str) -> Result<Vec<Rational>, Failure> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(input(format!("grid `{raw}`: expected START:STOP:STEP")));
    };
    let parse = |s: &str| s.trim().parse::<Rational>().map_err(|e| input(format!("grid `{raw}`: {e}")));
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if !step.is_positive() {
        return Err(input(format!("grid `{raw}`: step must be positive")));
    }
    if start > stop {
        return Err(input(format!("grid `{raw}`: start exceeds stop")));
    }
    Ok(rational_grid(&start, &stop, &step))
}

fn parse_machine_range(raw: &str) -> Result<(usize, usize), Failure> {
    let bad = || input(format!("--m `{raw}`: expected INT or A..B with 2 <= A <= B"));
    let (lo, hi) = match raw.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let m = raw.trim().parse().map_err(|_| bad())?;
            (m, m)
        }
    };
    if lo < 2 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn alpha(x: Rational) -> Result<AlphaSquared, Failure> {
    AlphaSquared::new(x).map_err(input)
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    Instance::from_json(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn reports_csv(reports: &[RatioReport]) -> String {
    let mut out = String::from(RatioReport::csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Violations dominate; an unproven optimum cannot certify compliance.
fn judge(reports: &[RatioReport]) -> CliResult {
    if let Some(r) = reports.iter().find(|r| !r.compliant) {
        return Err(Failure::Violation(format!(
            "BOUND VIOLATION: {} ratio {} exceeds {} ({}) on instance {}",
            r.algorithm, r.ratio, r.bound.value, r.bound.formula, r.instance_digest
        )));
    }
    if let Some(r) = reports.iter().find(|r| !r.optimum_proven) {
        return Err(Failure::Invariant(format!(
            "optimum for instance {} not proven within the node budget; ratio {} is a lower estimate",
            r.instance_digest, r.ratio
        )));
    }
    Ok(())
}

fn cmd_simulate(instance: &Path, algorithm: Algorithm, budget: Option<u64>, output: &Output) -> CliResult {
    let inst = load_instance(instance)?;
    let report = simulate(&inst, algorithm, node_budget(budget)?);
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => reports_csv(std::slice::from_ref(&report)),
    };
    output.emit(&text)?;
    judge(std::slice::from_ref(&report))
}

fn cmd_bounds(formula: &str, m: usize, grid: Option<&str>, x: Option<Rational>, output: &Output) -> CliResult {
    let formula: Formula = formula.parse().map_err(input)?;
    if m < 2 {
        return Err(input(format!("--m {m}: at least 2 machines required")));
    }
    let points = match (grid, x) {
        (Some(g), None) => parse_grid(g)?,
        (None, Some(x)) => vec![x],
        (None, None) => return Err(input("one of --grid or --x is required")),
        (Some(_), Some(_)) => unreachable!("clap rejects --grid with --x"),
    };
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let eval = evaluate(formula, m, &alpha(x.clone())?).map_err(input)?;
        rows.push((x, eval));
    }
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("formula,m,x,value,value_float,piece\n");
            for (x, e) in &rows {
                out.push_str(&format!(
                    "{},{m},{x},{},{},{}\n",
                    formula,
                    e.value,
                    e.value.to_sig_digits(12),
                    e.piece
                ));
            }
            out
        }
        Format::Json => {
            let json: Vec<_> = rows
                .iter()
                .map(|(x, e)| {
                    serde_json::json!({
                        "formula": formula,
                        "m": m,
                        "x": x,
                        "value": e.value,
                        "value_float": e.value.to_sig_digits(12),
                        "piece": e.piece,
                        "anomalous": e.anomalous,
                    })
                })
                .collect();
            to_json(&json)
        }
    };
    output.emit(&text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    suite: Suite,
    m: &str,
    grid: &str,
    count: usize,
    seed: u64,
    algorithm: Option<Algorithm>,
    n_max: usize,
    x_max: Option<Rational>,
    budget: Option<u64>,
    output: &Output,
) -> CliResult {
    let (min_machines, max_machines) = parse_machine_range(m)?;
    let points = parse_grid(grid)?;
    let (grid_start, grid_stop) = (points[0].clone(), points[points.len() - 1].clone());
    let step: Rational = grid
        .rsplit(':')
        .next()
        .and_then(|s| s.trim().parse().ok())
        .expect("validated by parse_grid");
    if grid_start < Rational::one() {
        return Err(input(format!("grid `{grid}`: alpha^2 must be at least 1")));
    }
    if n_max == 0 {
        return Err(input("--n-max must be at least 1"));
    }
    let x_caps = match x_max {
        None => default_x_caps(),
        Some(cap) => {
            alpha(cap.clone())?;
            let mut caps: Vec<Rational> = default_x_caps().into_iter().filter(|c| *c < cap).collect();
            caps.push(cap);
            caps
        }
    };
    let params = VerifyParams {
        min_machines,
        max_machines,
        grid_start,
        grid_stop,
        grid_step: step,
        count,
        seed,
        algorithm,
        max_jobs: n_max,
        x_caps,
        node_budget: node_budget(budget)?,
    };
    let report = run_suite(suite, &params);
    let text = match output.format {
        None => format!("suite {suite}\n{report}"),
        Some(Format::Json) => to_json(&report),
        Some(Format::Csv) => {
            let mut out = String::from("suite,check,passed,cases,failures,counterexample\n");
            for c in &report.checks {
                let cx = c.counterexample.as_deref().unwrap_or("").replace('"', "\"\"");
                out.push_str(&format!(
                    "{suite},{},{},{},{},\"{cx}\"\n",
                    c.name, c.passed, c.cases, c.failures
                ));
            }
            out
        }
    };
    output.emit(&text)?;
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        Err(Failure::Invariant(format!("failed checks: {}", names.join("; "))))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    algorithm: Algorithm,
    m: usize,
    x: Rational,
    n_max: usize,
    budget: u64,
    seed: u64,
    instance_out: Option<&Path>,
    log: Option<&Path>,
    format: Option<Format>,
) -> CliResult {
    if m < 2 {
        return Err(input(format!("--m {m}: at least 2 machines required")));
    }
    let mut config = SearchConfig::new(algorithm, m, alpha(x)?, n_max, budget, seed);
    config.node_budget = node_budget(None)?;
    let outcome = run_search(&config).map_err(|e| match e {
        AdversaryError::BoundViolation { .. } => Failure::Violation(e.to_string()),
        AdversaryError::InvalidConfig(_) => input(e),
    })?;
    if let Some(path) = instance_out {
        fs::write(path, outcome.instance.to_json_pretty() + "\n")
            .map_err(|e| input(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = log {
        fs::write(path, outcome.log_csv()).map_err(|e| input(format!("{}: {e}", path.display())))?;
    }
    let text = match format.unwrap_or(Format::Json) {
        Format::Json => to_json(&outcome),
        Format::Csv => outcome.log_csv(),
    };
    Output { format, out: None }.emit(&text)
}

fn cmd_sweep(dir: &Path, algorithm: Algorithm, budget: Option<u64>, output: &Output) -> CliResult {
    let entries = fs::read_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json") && p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(input(format!("{}: no *.json instances", dir.display())));
    }
    let budget = node_budget(budget)?;
    let mut reports = Vec::with_capacity(paths.len());
    for path in &paths {
        reports.push(simulate(&load_instance(path)?, algorithm, budget));
    }
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("file,");
            out.push_str(RatioReport::csv_header());
            out.push('\n');
            for (path, r) in paths.iter().zip(&reports) {
                let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
                out.push_str(&format!("{name},{}\n", r.csv_row()));
            }
            out
        }
        Format::Json => {
            let rows: Vec<_> = paths
                .iter()
                .zip(&reports)
                .map(|(path, r)| {
                    let name = path.file_name().map(|n| n.to_string_lossy().into_owned());
                    serde_json::json!({ "file": name, "report": r })
                })
                .collect();
            to_json(&rows)
        }
    };
    output.emit(&text)?;
    judge(&reports)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate {
            instance,
            algorithm,
            budget,
            output,
        } => cmd_simulate(&instance, algorithm, budget, &output),
        Command::Bounds {
            formula,
            m,
            grid,
            x,
            output,
        } => cmd_bounds(&formula, m, grid.as_deref(), x, &output),
        Command::Verify {
            suite,
            m,
            grid,
            count,
            seed,
            algorithm,
            n_max,
            x_max,
            budget,
            output,
        } => cmd_verify(suite, &m, &grid, count, seed, algorithm, n_max, x_max, budget, &output),
        Command::Search {
            algorithm,
            m,
            x,
            n_max,
            budget,
            seed,
            out,
            log,
            format,
        } => cmd_search(
            algorithm,
            m,
            x,
            n_max,
            budget,
            seed,
            out.as_deref(),
            log.as_deref(),
            format,
        ),
        Command::Sweep {
            dir,
            algorithm,
            budget,
            output,
        } => cmd_sweep(&dir, algorithm, budget, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("predsched: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use predsched::rat;

    fn report(compliant: bool, proven: bool) -> RatioReport {
        let inst = Instance::from_integers(2, &[1, 1, 2], &[1, 1, 1]).unwrap();
        let mut r = simulate(&inst, Algorithm::Lppt, None);
        r.compliant = compliant;
        r.optimum_proven = proven;
        r
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert!(judge(&[report(true, true)]).is_ok());
        assert_eq!(judge(&[report(true, false)]).unwrap_err().code(), 1);
        assert_eq!(judge(&[report(true, false), report(false, true)]).unwrap_err().code(), 3);
        let violation = judge(&[report(false, true)]).unwrap_err();
        assert!(violation.message().starts_with("BOUND VIOLATION"));
    }

    #[test]
    fn grid_and_range_parsing() {
        assert_eq!(parse_grid("1:2:1/2").unwrap(), vec![rat(1, 1), rat(3, 2), rat(2, 1)]);
        assert_eq!(parse_grid("1.5:1.5:1").unwrap(), vec![rat(3, 2)]);
        assert!(parse_grid("2:1:1").is_err());
        assert_eq!(parse_machine_range("3").unwrap(), (3, 3));
        assert_eq!(parse_machine_range("2..8").unwrap(), (2, 8));
        assert!(parse_machine_range("1..3").is_err());
    }
}
