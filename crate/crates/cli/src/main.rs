//! `qcurv`: command-line front end for radial solutions of `Δ^m u = ±e^u`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcurv_core::io::{json_f64, json_f64_vec};
use qcurv_core::shooting::{
    alpha_family, parse_grid, scan_branch, scan_to_csv, solve_for_volume, solve_for_volume_default, threshold_finder,
    Branch, PathFile, PathSpec, ScanRow, ThresholdQuery,
};
use qcurv_core::verify::{reports_to_json, run_suite, Suite};
use qcurv_core::{integrate, spherical_spec, Error, ProblemSpecF64, Sign, TailMode};
use serde::Serialize;

use config::{CliConfig, Format, Overrides};

const EXIT_FAILURE: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_UNDERFLOW: u8 = 3;
const EXIT_BRACKETING: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "qcurv", version, about = "Radial solutions of Δ^m u = ±e^u: integrate, measure ∫e^u, prescribe it")]
struct Cli {
    /// JSON config file (falls back to $QCURV_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Table format for scan output
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for randomly generated verification specs
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    #[arg(long, global = true)]
    vol_tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one initial value problem and write the trajectory CSV
    Solve(SolveArgs),
    /// Total volume ∫ e^u dx with its tail bound
    Volume(SolveArgs),
    /// Volumes along a one-parameter branch
    Scan(ScanArgs),
    /// Find initial data with a prescribed volume
    Shoot(ShootArgs),
    /// Bracket the σ=+1 global-existence threshold in Δ^{m-1}u(0)
    Threshold(ThresholdArgs),
    /// Run the verification checks
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Order m of Δ^m
    #[arg(long)]
    m: usize,
    /// Dimension N (default 2m)
    #[arg(long)]
    dim: Option<usize>,
    /// Sign σ of the right-hand side: +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    sign: String,
    /// Initial data a_0,...,a_{m-1}
    #[arg(long, allow_hyphen_values = true)]
    a: String,
    #[arg(long)]
    rmax: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Output file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    dim: Option<usize>,
    /// Defaults to -1 for the c0 branches and +1 for alpha
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    #[arg(long, value_parser = ["plus_c0", "minus_c0", "alpha"])]
    branch: String,
    /// lo:hi:n
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Base data of the alpha branch (default: spherical data, even m)
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Path,
    Alpha,
}

#[derive(Args, Debug)]
struct ShootArgs {
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    dim: Option<usize>,
    /// Defaults to -1 for path shooting and +1 for the alpha family
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    /// Target volume V > 0
    #[arg(long)]
    target: f64,
    /// Relative tolerance on the achieved volume
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Path JSON {"m","dim","sign","vertices"} (default: the two-branch polyline)
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Family::Path)]
    family: Family,
    /// Base data for the alpha family (default: spherical data, even m)
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the (param, volume) evaluation history as CSV
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long)]
    m: usize,
    /// Fixed data a_0,...,a_{m-2}
    #[arg(long, allow_hyphen_values = true)]
    a0: String,
    /// Required bracket width
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
    /// Radius standing in for "entire"
    #[arg(long, default_value_t = qcurv_core::shooting::THRESHOLD_R_MAX)]
    rmax: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all",
          value_parser = ["all", "comparison", "barrier", "scaling", "conversion", "first-zero", "limit"])]
    suite: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
    /// Printed to stdout before exiting.
    payload: Option<String>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
            payload: None,
        }
    }

    fn other(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
            payload: None,
        }
    }
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_f64")]
    r_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<TableRow>>,
}

#[derive(Serialize)]
struct TableRow {
    #[serde(serialize_with = "json_f64")]
    param: f64,
    #[serde(serialize_with = "json_f64")]
    volume: f64,
}

fn opt_f64<S: serde::Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => json_f64(v, s),
        None => s.serialize_none(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidSpec(_) | Error::InvalidControls(_) | Error::Unsupported(_) | Error::Precondition(_) => {
                Failure::usage(message)
            }
            Error::BlowUp { r_star } => Failure {
                code: EXIT_BLOWUP,
                payload: Some(json(&ErrorJson {
                    error: &message,
                    r_star: Some(r_star),
                    table: None,
                })),
                message,
            },
            Error::StepUnderflow { .. } => Failure {
                code: EXIT_UNDERFLOW,
                message,
                payload: None,
            },
            Error::Bracketing { ref table, .. } => {
                let rows = table.iter().map(|&(param, volume)| TableRow { param, volume }).collect();
                Failure {
                    code: EXIT_BRACKETING,
                    payload: Some(json(&ErrorJson {
                        error: &message,
                        r_star: None,
                        table: Some(rows),
                    })),
                    message,
                }
            }
            _ => Failure::other(message),
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("output serializes")
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("{what}: cannot parse {t:?} as a number")))
        })
        .collect()
}

fn parse_sign(s: &str) -> Result<Sign, Failure> {
    s.parse::<Sign>().map_err(Failure::from)
}

fn build_spec(m: usize, dim: Option<usize>, sign: Sign, a: Vec<f64>) -> Result<ProblemSpecF64, Failure> {
    Ok(ProblemSpecF64::new(m, dim.unwrap_or(2 * m), sign, a)?)
}

fn spec_from(args: &SpecArgs) -> Result<ProblemSpecF64, Failure> {
    build_spec(args.m, args.dim, parse_sign(&args.sign)?, parse_list(&args.a, "--a")?)
}

/// `--a` if given, else the spherical data (even `m`, `N = 2m`).
fn base_spec(m: usize, dim: Option<usize>, sign: Sign, a: Option<&str>) -> Result<ProblemSpecF64, Failure> {
    match a {
        Some(a) => build_spec(m, dim, sign, parse_list(a, "--a")?),
        None => {
            let s = spherical_spec::<f64>(m)?;
            if dim.is_some_and(|d| d != s.dim()) {
                return Err(Failure::usage("the spherical base data lives in N = 2m; pass --a for other N"));
            }
            Ok(s)
        }
    }
}

fn with_rmax(cfg: &CliConfig, rmax: Option<f64>) -> Result<CliConfig, Failure> {
    let mut cfg = cfg.clone();
    if let Some(r) = rmax {
        cfg.settings.controls.r_max = r;
        cfg.settings.controls.validate()?;
    }
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::other(format!("cannot write {}: {e}", path.display())))
}

fn output(cfg: &CliConfig, explicit: Option<&Path>, default_name: &str, text: &str) -> Result<PathBuf, Failure> {
    let path = cfg.output_path(explicit, default_name).map_err(Failure::other)?;
    write_file(&path, text)?;
    Ok(path)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    outcome: &'a str,
    #[serde(serialize_with = "json_f64")]
    r_end: f64,
    #[serde(serialize_with = "json_f64_vec")]
    w: Vec<f64>,
    #[serde(serialize_with = "json_f64_vec")]
    dw: Vec<f64>,
    nodes: usize,
    accepted_steps: usize,
    rejected_steps: usize,
    trajectory: String,
}

fn cmd_solve(cfg: &CliConfig, args: &SolveArgs) -> Result<u8, Failure> {
    let spec = spec_from(&args.spec)?;
    let cfg = with_rmax(cfg, args.spec.rmax)?;
    let traj = integrate(&spec, &cfg.settings.controls)?;
    let path = output(&cfg, args.out.as_deref(), "trajectory.csv", &traj.to_csv())?;
    let outcome = traj.outcome();
    let last = traj.last();
    println!(
        "{}",
        json(&SolveSummary {
            outcome: outcome.label(),
            r_end: last.r,
            w: last.w.clone(),
            dw: last.dw.clone(),
            nodes: traj.nodes().len(),
            accepted_steps: traj.accepted_steps(),
            rejected_steps: traj.rejected_steps(),
            trajectory: path.display().to_string(),
        })
    );
    Ok(match outcome {
        qcurv_core::Outcome::GlobalToRmax(_) => 0,
        qcurv_core::Outcome::BlowUp(_) => EXIT_BLOWUP,
        qcurv_core::Outcome::StepUnderflow(_) => EXIT_UNDERFLOW,
    })
}

fn cmd_volume(cfg: &CliConfig, args: &SolveArgs) -> Result<u8, Failure> {
    let spec = spec_from(&args.spec)?;
    let cfg = with_rmax(cfg, args.spec.rmax)?;
    let rep = cfg.settings.total_volume(&spec)?;
    let text = rep.to_json();
    output(&cfg, args.out.as_deref(), "volume.json", &format!("{text}\n"))?;
    println!("{text}");
    if rep.warning {
        eprintln!("warning: r_max cap reached before the tail tolerance was met");
    }
    Ok(if rep.rel_err.is_finite() { 0 } else { EXIT_FAILURE })
}

#[derive(Serialize)]
struct ScanJsonRow {
    #[serde(serialize_with = "json_f64")]
    param: f64,
    #[serde(serialize_with = "json_f64")]
    total: f64,
    #[serde(serialize_with = "json_f64")]
    rel_err: f64,
    tail_mode: &'static str,
    #[serde(serialize_with = "json_f64")]
    ell_estimate: f64,
    outcome: &'static str,
}

fn scan_json(rows: &[ScanRow<f64>]) -> String {
    let rows: Vec<ScanJsonRow> = rows
        .iter()
        .map(|r| match &r.report {
            Ok(rep) => ScanJsonRow {
                param: r.param,
                total: rep.total,
                rel_err: rep.rel_err,
                tail_mode: rep.tail_mode.as_str(),
                ell_estimate: rep.ell_estimate,
                outcome: r.outcome,
            },
            Err(_) => ScanJsonRow {
                param: r.param,
                total: f64::NAN,
                rel_err: f64::INFINITY,
                tail_mode: TailMode::Invalid.as_str(),
                ell_estimate: f64::NAN,
                outcome: r.outcome,
            },
        })
        .collect();
    json(&rows)
}

fn cmd_scan(cfg: &CliConfig, args: &ScanArgs) -> Result<u8, Failure> {
    let branch: Branch = args.branch.parse()?;
    let sign = match &args.sign {
        Some(s) => parse_sign(s)?,
        None if branch == Branch::Alpha => Sign::Plus,
        None => Sign::Minus,
    };
    let template = match branch {
        Branch::Alpha => base_spec(args.m, args.dim, sign, args.a.as_deref())?,
        _ => build_spec(args.m, args.dim, sign, vec![0.0; args.m])?,
    };
    let params = parse_grid(&args.grid)?;
    let cfg = with_rmax(cfg, args.rmax)?;
    let rows = scan_branch(branch, &params, &template, &cfg.settings);
    let (text, name) = match cfg.format {
        Format::Csv => (scan_to_csv(&rows), "scan.csv"),
        Format::Json => (format!("{}\n", scan_json(&rows)), "scan.json"),
    };
    output(&cfg, args.out.as_deref(), name, &text)?;
    print!("{text}");
    let flagged = rows.iter().filter(|r| r.is_flagged()).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} row(s) flagged (blow-up or unbounded tail)");
    }
    Ok(0)
}

fn cmd_shoot(cfg: &CliConfig, args: &ShootArgs) -> Result<u8, Failure> {
    let cfg = with_rmax(cfg, args.rmax)?;
    let res = match args.family {
        Family::Alpha => {
            let sign = args.sign.as_deref().map(parse_sign).transpose()?.unwrap_or(Sign::Plus);
            let u0 = base_spec(args.m, args.dim, sign, args.a.as_deref())?;
            alpha_family(&u0, args.target, args.tol, &cfg.settings)?
        }
        Family::Path => match &args.path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
                let file: PathFile =
                    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid path file: {e}")))?;
                let path = PathSpec::<f64>::from_file(&file)?;
                solve_for_volume(args.target, &path, args.tol, &cfg.settings)?
            }
            None => {
                let sign = args.sign.as_deref().map(parse_sign).transpose()?.unwrap_or(Sign::Minus);
                let template = build_spec(args.m, args.dim, sign, vec![0.0; args.m])?;
                solve_for_volume_default(args.target, &template, args.tol, &cfg.settings)?
            }
        },
    };
    let text = res.to_json();
    output(&cfg, args.out.as_deref(), "shoot.json", &format!("{text}\n"))?;
    if let Some(h) = &args.history {
        let path = cfg.output_path(Some(h), "").map_err(Failure::other)?;
        write_file(&path, &res.history_csv())?;
    }
    println!("{text}");
    Ok(0)
}

fn cmd_threshold(cfg: &CliConfig, args: &ThresholdArgs) -> Result<u8, Failure> {
    let fixed = parse_list(&args.a0, "--a0")?;
    let mut query = ThresholdQuery::new(args.m, fixed);
    query.resolution = args.resolution;
    query.r_max = args.rmax;
    let res = threshold_finder(&query, &cfg.settings)?;
    let text = res.to_json();
    output(cfg, args.out.as_deref(), "threshold.json", &format!("{text}\n"))?;
    println!("{text}");
    eprintln!(
        "note: \"global\" means reaching r = {} without blow-up; the true threshold may differ",
        res.r_max
    );
    Ok(0)
}

fn cmd_verify(cfg: &CliConfig, args: &VerifyArgs) -> Result<u8, Failure> {
    let suite: Suite = args.suite.parse()?;
    let reports = run_suite(suite, cfg.seed, &cfg.settings)?;
    let text = reports_to_json(&reports);
    output(cfg, args.out.as_deref(), "verify.json", &format!("{text}\n"))?;
    println!("{text}");
    for r in reports.iter().filter(|r| !r.passed) {
        eprintln!("failed: {} (worst margin {:e})", r.name, r.worst_violation);
    }
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { EXIT_FAILURE })
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let overrides = Overrides {
        rel_tol: cli.rel_tol,
        abs_tol: cli.abs_tol,
        r_max: None,
        vol_tol: cli.vol_tol,
        out_dir: cli.out_dir.clone(),
        format: cli.format,
        seed: cli.seed,
    };
    let cfg = CliConfig::resolve(cli.config.as_deref(), &overrides).map_err(Failure::usage)?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(&cfg, a),
        Command::Volume(a) => cmd_volume(&cfg, a),
        Command::Scan(a) => cmd_scan(&cfg, a),
        Command::Shoot(a) => cmd_shoot(&cfg, a),
        Command::Threshold(a) => cmd_threshold(&cfg, a),
        Command::Verify(a) => cmd_verify(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if let Some(p) = &f.payload {
                println!("{p}");
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
