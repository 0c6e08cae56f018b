mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use aorc_core::asymptotics::{level_function_g, limiting_fdr_of_procedure, solve_r_star};
use aorc_core::montecarlo::{simulate, summarize, DEFAULT_MU, DEFAULT_RHO};
use aorc_core::{
    calibrate_beta, decide, exact_du_fdr_su, f_alpha_inv, fdr_upper_bound, worst_case_scan, AdjustedKind, Alpha,
    AsymptoticModel, DataModel, DuConfig, Error, ProcedureKind, RejectionCurveSpec, EXACT_SIZE_CAP,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::io::{csv_writer, num, opt_num, read_pvalues, write_json};

const SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Domain(String),
    SizeCap(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::SizeCap(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Domain(_) => "domain",
            CliError::SizeCap(_) => "size_cap",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Parse(m) | CliError::Domain(m) | CliError::SizeCap(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeCap { .. } => CliError::SizeCap(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "aorc", version, about = "Stepwise FDR procedures built on the asymptotically optimal rejection curve")]
struct Cli {
    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true, env = "AORC_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a stepwise procedure to a CSV of p-values.
    Decide(DecideArgs),
    /// Print the critical values α_{1:n}, ..., α_{n:n}.
    Critvals(CritvalsArgs),
    /// Exact step-up FDR under Dirac-uniform configurations.
    ExactFdr(ExactFdrArgs),
    /// Smallest β whose adjusted step-up procedure controls the DU FDR.
    Calibrate(CalibrateArgs),
    /// Monte Carlo FDR and power.
    Simulate(SimulateArgs),
    /// Dirac-uniform limits as n → ∞.
    Asymptotics(AsymptoticsArgs),
    /// Rejection curve and critical value function on a grid.
    CurveTable(CurveTableArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveName {
    Simes,
    Aorc,
    AdjustedH1,
    AdjustedH2,
    Truncated,
    Beta,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum, default_value = "aorc")]
    curve: CurveName,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Junction point for adjusted and truncated curves.
    #[arg(long, conflicts_with = "xstar")]
    kappa: Option<f64>,
    /// Level x* where the adjusted curve reaches 1 (or f_α(κ) for truncated).
    #[arg(long)]
    xstar: Option<f64>,
    /// Additive constant of the β-adjusted curve.
    #[arg(long)]
    beta: Option<f64>,
}

impl CurveArgs {
    fn alpha(&self) -> CliResult<Alpha> {
        Ok(Alpha::new(self.alpha)?)
    }

    fn kappa_or_xstar(&self) -> CliResult<KappaSel> {
        match (self.kappa, self.xstar) {
            (Some(k), _) => Ok(KappaSel::Kappa(k)),
            (None, Some(x)) => Ok(KappaSel::XStar(x)),
            (None, None) => Err(CliError::Parse("this curve needs --kappa or --xstar".into())),
        }
    }

    fn spec(&self, n: usize) -> CliResult<RejectionCurveSpec> {
        let a = self.alpha()?;
        let adjusted = |kind| -> CliResult<RejectionCurveSpec> {
            Ok(match self.kappa_or_xstar()? {
                KappaSel::Kappa(k) => RejectionCurveSpec::adjusted(kind, a, k)?,
                KappaSel::XStar(x) => RejectionCurveSpec::adjusted_with_xstar(kind, a, x)?,
            })
        };
        Ok(match self.curve {
            CurveName::Simes => RejectionCurveSpec::simes(a),
            CurveName::Aorc => RejectionCurveSpec::aorc(a),
            CurveName::AdjustedH1 => adjusted(AdjustedKind::H1)?,
            CurveName::AdjustedH2 => adjusted(AdjustedKind::H2)?,
            CurveName::Truncated => {
                let kappa = match self.kappa_or_xstar()? {
                    KappaSel::Kappa(k) => k,
                    KappaSel::XStar(x) => f_alpha_inv(x, a)?,
                };
                RejectionCurveSpec::truncated(a, kappa)?
            }
            CurveName::Beta => {
                let beta = self.beta.ok_or_else(|| CliError::Parse("--curve beta needs --beta".into()))?;
                RejectionCurveSpec::beta_adjusted(a, beta, n)?
            }
        })
    }
}

enum KappaSel {
    Kappa(f64),
    XStar(f64),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindName {
    Su,
    Sd,
    Sud,
}

#[derive(Args)]
struct ProcedureArgs {
    #[arg(long, value_enum, default_value = "su")]
    kind: KindName,
    /// Starting level of the step-up-down procedure.
    #[arg(long)]
    lambda: Option<f64>,
}

impl ProcedureArgs {
    fn kind(&self) -> CliResult<ProcedureKind> {
        match (self.kind, self.lambda) {
            (KindName::Su, None) => Ok(ProcedureKind::StepUp),
            (KindName::Sd, None) => Ok(ProcedureKind::StepDown),
            (KindName::Sud, Some(l)) => Ok(ProcedureKind::step_up_down(l)?),
            (KindName::Sud, None) => Err(CliError::Parse("--kind sud needs --lambda".into())),
            (_, Some(_)) => Err(CliError::Parse("--lambda only applies to --kind sud".into())),
        }
    }
}

#[derive(Args)]
struct DecideArgs {
    /// CSV file with header `p`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    curve: CurveArgs,
    #[command(flatten)]
    procedure: ProcedureArgs,
    /// Per-hypothesis CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary path; defaults to stdout when --out is a file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct CritvalsArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepUpOnly {
    Su,
}

#[derive(Args)]
struct ExactFdrArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, required_unless_present = "scan", conflicts_with = "scan")]
    n0: Option<usize>,
    /// Tabulate every n0 = 0..=n.
    #[arg(long)]
    scan: bool,
    #[arg(long, value_enum, default_value = "su")]
    kind: StepUpOnly,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of every (beta, max_fdr) evaluated.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Du,
    Shift,
    Equicorr,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "du")]
    model: ModelName,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    n0: usize,
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    #[command(flatten)]
    curve: CurveArgs,
    #[command(flatten)]
    procedure: ProcedureArgs,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of per-replication outcomes.
    #[arg(long)]
    per_rep: Option<PathBuf>,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Explicit ζ values; overrides --grid.
    #[arg(long, value_delimiter = ',')]
    zeta: Vec<f64>,
    /// Use ζ = k/grid for k = 0..=grid.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// n for the β-adjusted curve.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveTableArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Grid t = x = k/points for k = 0..=points.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// n for the β-adjusted curve.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn grid(points: usize) -> CliResult<Vec<f64>> {
    if points == 0 {
        return Err(CliError::Parse("grid size must be >= 1".into()));
    }
    Ok((0..=points).map(|k| k as f64 / points as f64).collect())
}

fn run_decide(a: &DecideArgs) -> CliResult<()> {
    let sample = read_pvalues(&a.input)?;
    let spec = a.curve.spec(sample.len())?;
    let kind = a.procedure.kind()?;
    let c = spec.critical_values(sample.len())?;
    let d = decide(&sample, &c, kind)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["index", "p", "rejected"])?;
    for (i, (&p, &r)) in sample.values().iter().zip(&d.rejected).enumerate() {
        w.write_record([(i + 1).to_string(), num(p), r.to_string()])?;
    }
    w.flush()?;
    drop(w);
    let summary = json!({
        "schema": SCHEMA,
        "R": d.rejections,
        "threshold": d.threshold,
        "m_index": d.m_index,
    });
    match (&a.summary, &a.out) {
        (Some(path), _) => write_json(Some(path), &summary),
        (None, Some(_)) => write_json(None, &summary),
        (None, None) => Ok(()),
    }
}

fn run_critvals(a: &CritvalsArgs) -> CliResult<()> {
    let c = a.curve.spec(a.n)?.critical_values(a.n)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["i", "critical_value"])?;
    for (i, &v) in c.values().iter().enumerate() {
        w.write_record([(i + 1).to_string(), num(v)])?;
    }
    Ok(w.flush()?)
}

fn check_cap(n: usize) -> CliResult<()> {
    if n > EXACT_SIZE_CAP {
        return Err(Error::SizeCap { n, cap: EXACT_SIZE_CAP }.into());
    }
    Ok(())
}

fn bound_or_none(c: &aorc_core::CriticalValues, spec: &RejectionCurveSpec, cfg: DuConfig) -> Option<f64> {
    // undefined without a true null
    (cfg.n0 > 0).then(|| fdr_upper_bound(c, spec, cfg).ok()).flatten()
}

fn run_exact_fdr(a: &ExactFdrArgs) -> CliResult<()> {
    let StepUpOnly::Su = a.kind;
    check_cap(a.n)?;
    let spec = a.curve.spec(a.n)?;
    let c = spec.critical_values(a.n)?;
    if a.scan {
        let scan = worst_case_scan(&spec, a.n)?;
        let mut w = csv_writer(a.out.as_deref())?;
        w.write_record(["n0", "exact_fdr", "upper_bound"])?;
        for &(n0, f) in &scan.table {
            let b = bound_or_none(&c, &spec, DuConfig::new(a.n, n0)?);
            w.write_record([n0.to_string(), num(f), opt_num(b)])?;
        }
        return Ok(w.flush()?);
    }
    let n0 = a.n0.expect("clap enforces --n0 or --scan");
    let cfg = DuConfig::new(a.n, n0)?;
    let f = exact_du_fdr_su(&c, cfg)?;
    write_json(
        a.out.as_deref(),
        &json!({
            "schema": SCHEMA,
            "n": a.n,
            "n0": n0,
            "exact_fdr": f,
            "upper_bound": bound_or_none(&c, &spec, cfg),
            "du_least_favorable": c.ratio_nondecreasing(),
        }),
    )
}

fn run_calibrate(a: &CalibrateArgs) -> CliResult<()> {
    let res = calibrate_beta(a.n, Alpha::new(a.alpha)?, a.tol)?;
    if let Some(path) = &a.trace {
        let mut w = csv_writer(Some(path))?;
        w.write_record(["beta", "max_fdr"])?;
        for &(b, f) in &res.trace {
            w.write_record([num(b), num(f)])?;
        }
        w.flush()?;
    }
    let mut value = serde_json::to_value(&res).map_err(|e| CliError::Io(e.to_string()))?;
    value["schema"] = json!(SCHEMA);
    write_json(a.out.as_deref(), &value)
}

fn run_simulate(a: &SimulateArgs) -> CliResult<()> {
    let model = match a.model {
        ModelName::Du => DataModel::DiracUniform { n0: a.n0 },
        ModelName::Shift => DataModel::NormalShift { n0: a.n0, mu: a.mu },
        ModelName::Equicorr => DataModel::Equicorrelated { n0: a.n0, mu: a.mu, rho: a.rho },
    };
    let spec = a.curve.spec(a.n)?;
    let kind = a.procedure.kind()?;
    let outcomes = simulate(&model, &spec, kind, a.n, a.reps, a.seed)?;
    if let Some(path) = &a.per_rep {
        let mut w = csv_writer(Some(path))?;
        w.write_record(["rep", "R", "V", "fdp", "power"])?;
        for (rep, o) in outcomes.iter().enumerate() {
            w.write_record([
                rep.to_string(),
                o.rejections.to_string(),
                o.false_rejections.to_string(),
                num(o.fdp),
                num(o.power),
            ])?;
        }
        w.flush()?;
    }
    let est = summarize(&outcomes, a.seed);
    let mut value = serde_json::to_value(est).map_err(|e| CliError::Io(e.to_string()))?;
    value["schema"] = json!(SCHEMA);
    value["model"] = serde_json::to_value(model).map_err(|e| CliError::Io(e.to_string()))?;
    value["n"] = json!(a.n);
    write_json(a.out.as_deref(), &value)
}

fn run_asymptotics(a: &AsymptoticsArgs) -> CliResult<()> {
    let spec = a.curve.spec(a.n)?;
    let zetas = if a.zeta.is_empty() { grid(a.grid)? } else { a.zeta.clone() };
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["zeta", "t_zeta", "r_star", "limiting_fdr", "g"])?;
    for z in zetas {
        let m = AsymptoticModel::new(z, spec.alpha)?;
        let g = match level_function_g(&spec, z) {
            Ok(g) => Some(g),
            Err(Error::Unsupported(_)) => None,
            Err(e) => return Err(e.into()),
        };
        w.write_record([
            num(z),
            num(m.t_zeta()),
            num(solve_r_star(&spec, &m)),
            num(limiting_fdr_of_procedure(&spec, &m)),
            opt_num(g),
        ])?;
    }
    Ok(w.flush()?)
}

fn run_curve_table(a: &CurveTableArgs) -> CliResult<()> {
    let spec = a.curve.spec(a.n)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["t", "r", "x", "rho"])?;
    for u in grid(a.points)? {
        w.write_record([num(u), num(spec.rejection_curve(u)?), num(u), num(spec.rho(u)?)])?;
    }
    Ok(w.flush()?)
}

fn run(cli: &Cli) -> CliResult<()> {
    if cli.threads > 0 {
        // ignore the error if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match &cli.command {
        Command::Decide(a) => run_decide(a),
        Command::Critvals(a) => run_critvals(a),
        Command::ExactFdr(a) => run_exact_fdr(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Asymptotics(a) => run_asymptotics(a),
        Command::CurveTable(a) => run_curve_table(a),
    }
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("{}", json!({ "schema": SCHEMA, "error": e.kind(), "message": e.message() }));
    ExitCode::from(e.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::Parse(e.render().to_string().trim().to_string())),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
