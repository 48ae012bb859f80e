//! `otto-spin` command line: `cycle`, `sweep` and `verify`.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 usage or domain error,
//! 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::otto_cycle::{bound_audit, classify, run_cycle, sign_link, AuditScope, CycleParams};
use crate::sweep::{run_sweep, write_csv, SweepSpec, SweepVariable};
use crate::verify::run_verification;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "OTTO_SPIN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "otto-spin",
    version,
    about = "Two-spin Heisenberg quantum Otto engine"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one cycle and print heats, work, efficiencies and regime flags.
    Cycle(CycleArgs),
    /// Sweep one parameter over a uniform grid and write CSV.
    Sweep(SweepArgs),
    /// Check every invariant on seeded random parameter points.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CycleArgs {
    /// Exchange constant J (>= 0)
    #[arg(long = "j", value_parser = finite, allow_negative_numbers = true)]
    pub j: f64,
    /// Field during the hot stroke (> 0)
    #[arg(long = "b1", value_parser = finite, allow_negative_numbers = true)]
    pub b1: f64,
    /// Field during the cold stroke (> 0)
    #[arg(long = "b2", value_parser = finite, allow_negative_numbers = true)]
    pub b2: f64,
    /// Hot bath temperature (> T2)
    #[arg(long = "t1", value_parser = finite, allow_negative_numbers = true)]
    pub t1: f64,
    /// Cold bath temperature (> 0)
    #[arg(long = "t2", value_parser = finite, allow_negative_numbers = true)]
    pub t2: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept parameter: J, B1, B2, T1 or T2
    #[arg(long = "var")]
    pub var: SweepVariable,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub hi: f64,
    /// Number of grid points (>= 2)
    #[arg(long)]
    pub steps: usize,
    /// Fixed parameters; the swept one may be omitted.
    #[arg(long = "j", value_parser = finite, allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long = "b1", value_parser = finite, allow_negative_numbers = true)]
    pub b1: Option<f64>,
    #[arg(long = "b2", value_parser = finite, allow_negative_numbers = true)]
    pub b2: Option<f64>,
    #[arg(long = "t1", value_parser = finite, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    #[arg(long = "t2", value_parser = finite, allow_negative_numbers = true)]
    pub t2: Option<f64>,
    /// CSV destination
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a decimal number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Why a command failed; each variant maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    Violation(String),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(failure) = configure_threads() {
        eprintln!("error: {}", failure.message());
        return ExitCode::from(failure.exit_code());
    }
    let stdout = io::stdout();
    match execute(&cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    // A global pool may already exist when running inside a test harness.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn execute<W: Write>(command: &Command, out: &mut W) -> Result<(), Failure> {
    match command {
        Command::Cycle(args) => cmd_cycle(args, out),
        Command::Sweep(args) => cmd_sweep(args, out),
        Command::Verify(args) => cmd_verify(args, out),
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn flag_name(param: &str) -> &'static str {
    match param {
        "J" => "--j",
        "B1" => "--b1",
        "B2" => "--b2",
        "T1" => "--t1",
        _ => "--t2",
    }
}

fn usage_from(err: Error) -> Failure {
    match &err {
        Error::Domain { param, .. } => Failure::Usage(format!("{}: {err}", flag_name(param))),
        Error::TemperatureOrder { .. } => Failure::Usage(format!("--t1/--t2: {err}")),
        _ => Failure::Usage(err.to_string()),
    }
}

pub fn cmd_cycle<W: Write>(args: &CycleArgs, out: &mut W) -> Result<(), Failure> {
    let params =
        CycleParams::new(args.j, args.b1, args.b2, args.t1, args.t2).map_err(usage_from)?;
    out.write_all(cycle_report(&params).as_bytes())
        .map_err(io_failure)
}

/// Human-readable report with a fixed field order and 12 significant digits.
pub fn cycle_report(params: &CycleParams) -> String {
    let r = run_cycle(params);
    let report = classify(params, &r);
    let audit = bound_audit(params, &r);

    let mut s = String::new();
    let mut line = |name: &str, value: String| {
        let _ = writeln!(s, "{name:<18} = {value}");
    };
    line("J", sig(params.j()));
    line("B1", sig(params.b1()));
    line("B2", sig(params.b2()));
    line("T1", sig(params.t1()));
    line("T2", sig(params.t2()));
    let [p1, p2, p3, p4] = r.hot.as_array();
    line(
        "p",
        format!("{} {} {} {}", sig(p1), sig(p2), sig(p3), sig(p4)),
    );
    let [p1, p2, p3, p4] = r.cold.as_array();
    line(
        "p'",
        format!("{} {} {} {}", sig(p1), sig(p2), sig(p3), sig(p4)),
    );
    line("Q1", sig(r.heat_hot));
    line("Q2", sig(r.heat_cold));
    line("W", sig(r.work));
    line("q1", sig(r.spin_heat_hot));
    line("q2", sig(r.spin_heat_cold));
    line("w", sig(r.spin_work));
    line("leak", sig(r.leak));
    line("eta", opt_sig(r.eta));
    line("eta_local", opt_sig(r.eta_local));
    line("eta0", sig(r.eta0));
    line("eta_carnot", sig(r.eta_carnot));
    line("bound", opt_sig(r.bound));
    line("t1_local", opt_sig(r.t1_local));
    line("t2_local", opt_sig(r.t2_local));
    line("case", report.case.label().to_string());
    line("is_engine", report.is_engine.to_string());
    line("beats_uncoupled", report.beats_uncoupled.to_string());
    line("local_counterflow", report.local_counterflow.to_string());
    line("bound_ok", opt_flag(report.bound_ok));
    line("carnot_ok", opt_flag(report.carnot_ok));
    line("pwc_condition", report.pwc_condition.to_string());
    line("appendix_ok", report.appendix_ok.to_string());
    let link = sign_link(params, &r).map(|l| match l.sign() {
        Some(std::cmp::Ordering::Less) => "negative",
        Some(std::cmp::Ordering::Equal) => "zero",
        Some(std::cmp::Ordering::Greater) => "positive",
        None => "inconsistent",
    });
    line("sign_link", link.unwrap_or("n/a").to_string());

    let scope = match audit.scope {
        AuditScope::NotApplicable => "not applicable",
        AuditScope::FieldDecrease => "field-decrease chain",
        AuditScope::FieldIncrease => "field-increase conditions",
    };
    let _ = writeln!(s, "audit: {scope}");
    for l in &audit.links {
        let _ = writeln!(
            s,
            "  {:<36} {}",
            l.label,
            if l.holds { "holds" } else { "FAILS" }
        );
    }
    if let Some(b) = audit.informational_bound {
        let _ = writeln!(s, "  {:<36} {}", "eta0/(1-4J/B1) (informational)", sig(b));
    }
    s
}

pub fn cmd_sweep<W: Write>(args: &SweepArgs, out: &mut W) -> Result<(), Failure> {
    let pick = |value: Option<f64>, var: SweepVariable, flag: &str| -> Result<f64, Failure> {
        match value {
            Some(v) => Ok(v),
            None if var == args.var => Ok(args.lo),
            None => Err(Failure::Usage(format!(
                "{flag} is required unless it is the swept variable"
            ))),
        }
    };
    let j = pick(args.j, SweepVariable::J, "--j")?;
    let b1 = pick(args.b1, SweepVariable::B1, "--b1")?;
    let b2 = pick(args.b2, SweepVariable::B2, "--b2")?;
    let t1 = pick(args.t1, SweepVariable::T1, "--t1")?;
    let t2 = pick(args.t2, SweepVariable::T2, "--t2")?;

    let mut raw = [j, b1, b2, t1, t2];
    // The base value of the swept variable is replaced on every grid point;
    // use the lower endpoint so that validation reports the grid instead.
    let slot = match args.var {
        SweepVariable::J => 0,
        SweepVariable::B1 => 1,
        SweepVariable::B2 => 2,
        SweepVariable::T1 => 3,
        SweepVariable::T2 => 4,
    };
    raw[slot] = args.lo;
    let base = CycleParams::new(raw[0], raw[1], raw[2], raw[3], raw[4]).map_err(usage_from)?;
    let spec = SweepSpec::new(base, args.var, args.lo, args.hi, args.steps).map_err(usage_from)?;
    let rows = run_sweep(&spec);

    write_atomically(&args.output, |w| write_csv(&rows, w))
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", args.output.display())))?;
    writeln!(
        out,
        "wrote {} rows ({} from {} to {}) to {}",
        rows.len(),
        args.var,
        args.lo,
        args.hi,
        args.output.display()
    )
    .map_err(io_failure)
}

/// Writes to a temporary file next to `path` and renames it into place.
fn write_atomically<F>(path: &Path, write: F) -> io::Result<()>
where
    F: FnOnce(&mut io::BufWriter<&mut tempfile::NamedTempFile>) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = io::BufWriter::new(&mut tmp);
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn cmd_verify<W: Write>(args: &VerifyArgs, out: &mut W) -> Result<(), Failure> {
    if args.samples == 0 {
        return Err(Failure::Usage("--samples requires N >= 1".into()));
    }
    let report = run_verification(args.samples, args.seed);
    out.write_all(report.render().as_bytes())
        .map_err(io_failure)?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "invariant violations found (seed {})",
            args.seed
        )))
    }
}

/// Formats `x` with 12 significant digits, trimming trailing zeros, in fixed
/// notation for moderate exponents and scientific notation otherwise.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..12).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt_sig(x: Option<f64>) -> String {
    x.map(sig).unwrap_or_else(|| "undefined".into())
}

fn opt_flag(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_else(|| "n/a".into())
}
