//! `dprel`: private tests for relevant dependencies from the command line.
//!
//! Exit codes: 0 on a completed run whatever the decision, 1 when `--verify`
//! finds a mismatch, 2 on usage errors, 3 when the privacy budget would be
//! exceeded, 4 on data errors.

mod args;
mod config;
mod report;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use dprel::extremal::{p_rel, relevant_set};
use dprel::hdtest::{default_grid, hd_release, scan_release, BranchPolicy};
use dprel::privacy::{svt_epsilon_bound, CutoffConvention, PrivacyBudget};
use dprel::rng::streams;
use dprel::simulate::{build_tau, run_power_experiment, write_results_csv, Design, ExperimentConfig, Method};
use dprel::ustat::{compute_ustat, tie_jitter, KendallKernel};
use dprel::{DataMatrix, Error, Seed};

use args::{Cli, Command, ConventionChoice, DataArgs, ExtremalArgs, SimulateArgs, SvtArgs, TestArgs};
use config::{Common, FileConfig};
use report::{ExtremalOutput, OneOrMany, SvtOutput, TestReport};

enum Failure {
    Lib(Error),
    Mismatch(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) => 2,
        Error::BudgetExhausted { .. } => 3,
        Error::Data(_) | Error::Dimension(_) | Error::MissingLeaveOneOut | Error::Io(_) | Error::Csv(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match (&cli.verify, cli.command) {
        (Some(path), _) => run_verify(path),
        (None, Some(Command::Test(a))) => run_test(&a, false),
        (None, Some(Command::Scan(a))) => run_test(&a, true),
        (None, Some(Command::Extremal(a))) => run_extremal(&a),
        (None, Some(Command::Simulate(a))) => run_simulate(&a),
        (None, Some(Command::SvtCost(a))) => run_svt(&a),
        (None, None) => Err(Failure::Lib(Error::Parameter("no command given".into()))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("dprel: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Mismatch(problems)) => {
            for p in problems {
                eprintln!("dprel: verify: {p}");
            }
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn load(args: &DataArgs, common: &Common) -> Result<(DataMatrix, KendallKernel), Error> {
    let mut data = DataMatrix::from_csv_path(&args.input)?;
    if let Some(sd) = common.jitter {
        data = tie_jitter(&data, sd, &mut Seed(common.seed).stream(streams::JITTER))?;
    }
    let kernel = KendallKernel::with_band(data.d(), common.band.unwrap_or(1))?;
    Ok((data, kernel))
}

fn run_test(args: &TestArgs, scan: bool) -> Result<(), Failure> {
    let file = FileConfig::load(args.data.config.as_deref())?;
    let common = Common::resolve(&args.data, &file)?;
    let grid = match config::thresholds(args, &file) {
        Some(g) => g,
        None if scan => default_grid(),
        None => return Err(Error::Parameter("pass --delta (a threshold or a descending grid)".into()).into()),
    };
    if grid.is_empty() {
        return Err(Error::Parameter("--delta is empty".into()).into());
    }
    let (data, kernel) = load(&args.data, &common)?;
    let cfg = config::test_config(args, &file, &common, data.n());
    let declared_delta = if cfg.branch == BranchPolicy::Auto { cfg.dp_delta } else { 0.0 };
    let mut budget = PrivacyBudget::new(cfg.rho, declared_delta)?;
    let release = hd_release(&data, &kernel, &cfg, &mut budget, Seed(common.seed))?;
    let extremal = release.extremal().map(|e| e.report());

    let report = if grid.len() == 1 && !scan {
        let delta = grid[0];
        TestReport {
            decision: OneOrMany::One(release.decide(delta)),
            branch: release.branch(),
            delta: OneOrMany::One(delta),
            delta_hat: None,
            norm_dp: release.norm_dp(),
            quantile: OneOrMany::One(release.margin(delta)),
            extremal,
            ledger: budget.ledger().to_vec(),
        }
    } else {
        let result = scan_release(release, &grid)?;
        TestReport {
            decision: OneOrMany::Many(result.points.iter().map(|p| p.reject).collect()),
            branch: result.release.branch(),
            delta: OneOrMany::Many(grid.clone()),
            delta_hat: Some(result.delta_hat),
            norm_dp: result.release.norm_dp(),
            quantile: OneOrMany::Many(result.points.iter().map(|p| p.margin).collect()),
            extremal,
            ledger: budget.ledger().to_vec(),
        }
    };
    emit(args.data.out.as_deref(), &to_json(&report))?;
    eprintln!("{}", summary(&report));
    Ok(())
}

fn summary(r: &TestReport) -> String {
    let branch = serde_json::to_string(&r.branch).unwrap_or_default();
    match (&r.decision, &r.delta, r.delta_hat) {
        (OneOrMany::One(reject), OneOrMany::One(delta), _) => format!(
            "{} H0(Delta={delta}) via the {} branch: normDP={:.6}, critical value={:.6}",
            if *reject { "reject" } else { "do not reject" },
            branch.trim_matches('"'),
            r.norm_dp,
            r.quantile.to_vec()[0] + delta
        ),
        (_, _, hat) => format!(
            "Delta-hat={} via the {} branch: normDP={:.6}, {} of {} thresholds rejected",
            hat.unwrap_or(f64::NAN),
            branch.trim_matches('"'),
            r.norm_dp,
            r.decision.to_vec().iter().filter(|&&d| d).count(),
            r.decision.to_vec().len()
        ),
    }
}

fn run_extremal(args: &ExtremalArgs) -> Result<(), Failure> {
    let file = FileConfig::load(args.data.config.as_deref())?;
    let common = Common::resolve(&args.data, &file)?;
    let (data, kernel) = load(&args.data, &common)?;
    let n = data.n();
    let dp_delta = common.dp_delta(n);
    let mut budget = PrivacyBudget::new(common.rho, dp_delta)?;
    let u = compute_ustat(&data, &kernel, false)?.u;
    let seed = Seed(common.seed);
    let reg = common.regularizer(n);
    let estimate = match args.threshold {
        Some(t) => relevant_set(&u, t, &kernel, n, common.rho, dp_delta, &reg, &mut budget, seed)?,
        None => p_rel(&u, &kernel, n, common.rho, dp_delta, &reg, &mut budget, seed)?,
    };
    let out = ExtremalOutput {
        estimate: estimate.report(),
        ledger: budget.ledger().to_vec(),
    };
    emit(args.data.out.as_deref(), &to_json(&out))?;
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let design: Design = args.model.parse()?;
    let d = args.d.unwrap_or_else(|| (2.0 * args.n as f64).sqrt().ceil() as usize);
    let grid = args.delta_grid.clone().unwrap_or_else(default_grid);
    let mut cfg = ExperimentConfig::new(design, args.n, d, args.rho.clone(), grid)?;
    cfg.model = build_tau(design, d)?;
    cfg.reps = args.reps;
    cfg.bootstrap_reps = args.bootstrap;
    cfg.alpha = args.alpha;
    cfg.seed = args.seed;
    cfg.dp_delta = args.dp_delta;
    cfg.methods = args.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?;
    let rows = run_power_experiment(&cfg)?;
    let mut buf = Vec::new();
    write_results_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(())
}

fn run_svt(args: &SvtArgs) -> Result<(), Failure> {
    let n = args.n;
    if n < 2 {
        return Err(Error::Parameter("--n must be at least 2".into()).into());
    }
    let p = args.p.unwrap_or((n as u64) * (n as u64 - 1) / 2);
    let (convention, name) = match args.convention {
        ConventionChoice::Ceiling => (CutoffConvention::Ceiling, "ceiling"),
        ConventionChoice::Continuous => (CutoffConvention::Continuous, "continuous"),
    };
    let sensitivity = args.sensitivity.unwrap_or(8.0 / n as f64);
    let sigma2 = args.sigma2.unwrap_or(args.sigma);
    let delta = args.dp_delta.unwrap_or(1.0 / n as f64);
    let cutoff = convention.cutoff(p);
    let epsilon = svt_epsilon_bound(sensitivity, args.sigma, sigma2, cutoff, p, delta)?;
    let out = SvtOutput {
        epsilon,
        n,
        p,
        cutoff,
        convention: name,
        sensitivity,
        sigma1: args.sigma,
        sigma2,
        delta,
    };
    emit(None, &to_json(&out))?;
    Ok(())
}

fn run_verify(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let report: TestReport =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("not a test result: {e}")))?;
    match report::verify(&report) {
        Ok(count) => {
            println!("verified: {count} decision(s) reproduced from the recorded releases");
            Ok(())
        }
        Err(problems) => Err(Failure::Mismatch(problems)),
    }
}
