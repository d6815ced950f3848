use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ch_spectral::config::{parse_config, SimConfig};
use ch_spectral::harness::{
    run_simulation, spatial_convergence, stability_audit, temporal_convergence, AuditReport, ConvergenceReport,
    ConvergenceStatus, SPATIAL_RATIO_MAX, TEMPORAL_ORDER_BAND,
};
use ch_spectral::io::{read_trace, write_trace};
use ch_spectral::selftest::run_selftest;
use ch_spectral::Error;

const EXIT_OK: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

const CONFIG_FILE: &str = "config.cfg";
const TRACE_FILE: &str = "diagnostics.csv";

/// Cahn-Hilliard simulations with a Fourier spectral exponential integrator.
#[derive(Parser)]
#[command(name = "chsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Only print errors.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation, writing diagnostics and snapshots.
    Run(Common),
    /// Self-convergence study in time over `tau_list`.
    ConvergeTime(Common),
    /// Spectral convergence study over `n_list`.
    ConvergeSpace(Common),
    /// Audit the diagnostics of a finished run directory.
    Audit {
        /// Run directory; defaults to `--out-dir`.
        run_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in property suite.
    Selftest(Common),
}

enum Failure {
    Error(Error),
    Acceptance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigParse { .. } | Error::ConfigValue { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Diverged { .. } | Error::KappaExhausted { .. } => EXIT_DIVERGED,
        _ => EXIT_FAILURE,
    }
}

struct Out {
    quiet: bool,
}

impl Out {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn load(common: &Common) -> Result<SimConfig, Failure> {
    let path = common.config.as_deref().ok_or_else(|| {
        Failure::Error(Error::ConfigValue {
            key: "--config".into(),
            message: "a configuration file is required".into(),
        })
    })?;
    let mut cfg = parse_config(path).map_err(|e| match e {
        Error::Io(io) => Error::ConfigValue {
            key: "--config".into(),
            message: format!("{}: {io}", path.display()),
        },
        other => other,
    })?;
    if let Some(dir) = &common.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn missing(key: &str) -> Failure {
    Failure::Error(Error::ConfigValue {
        key: key.into(),
        message: "required by this subcommand".into(),
    })
}

fn run(common: &Common) -> Result<(), Failure> {
    let out = Out { quiet: common.quiet };
    let cfg = load(common)?;
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join(CONFIG_FILE), cfg.to_config_string())?;
    let outcome = run_simulation(&cfg, Some(&cfg.out_dir))?;
    write_trace(&outcome.trace, &cfg.out_dir.join(TRACE_FILE))?;
    let last = outcome.trace.records.last().expect("initial record");
    out.say(format!(
        "{} of {} steps, t = {}, energy {:.10e}, mass {:.3e}, max |u| {:.6}",
        outcome.steps_completed,
        cfg.steps(),
        last.t,
        last.energy,
        last.mass,
        last.linf
    ));
    out.say(format!("wrote {}", cfg.out_dir.join(TRACE_FILE).display()));
    match outcome.aborted {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn write_report(report: &ConvergenceReport, path: &Path) -> Result<(), Failure> {
    let mut text = String::from("parameter,error,linf_error,observed_order\n");
    for (i, level) in report.levels.iter().enumerate() {
        let order = match i.checked_sub(1).and_then(|j| report.observed_orders[j]) {
            Some(p) => format!("{p:.16e}"),
            None => String::new(),
        };
        text += &format!("{},{:.16e},{:.16e},{order}\n", level.parameter, level.error, level.linf_error);
    }
    fs::write(path, text)?;
    Ok(())
}

fn summarize(out: &Out, report: &ConvergenceReport, label: &str) {
    out.say(format!("{label} (reference {}, kappa {})", report.reference, report.kappa));
    for (i, level) in report.levels.iter().enumerate() {
        let order = i
            .checked_sub(1)
            .and_then(|j| report.observed_orders[j])
            .map_or("-".to_string(), |p| format!("{p:.3}"));
        out.say(format!("  {:>10}  error {:.3e}  order {order}", level.parameter, level.error));
    }
}

fn converge_time(common: &Common) -> Result<(), Failure> {
    let out = Out { quiet: common.quiet };
    let cfg = load(common)?;
    cfg.validate()?;
    let taus = cfg.tau_list.clone().ok_or_else(|| missing("tau_list"))?;
    let report = temporal_convergence(&cfg, &taus, cfg.tau_ref)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_report(&report, &cfg.out_dir.join("convergence_time.csv"))?;
    summarize(&out, &report, "temporal convergence");
    let (lo, hi) = TEMPORAL_ORDER_BAND;
    if report.status == ConvergenceStatus::AtFloor {
        out.say("errors at roundoff floor: scheme exact for this problem");
    }
    if report.orders_within(TEMPORAL_ORDER_BAND) {
        out.say(format!("PASS: every observed order in [{lo}, {hi}]"));
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("observed order outside [{lo}, {hi}]")))
    }
}

fn converge_space(common: &Common) -> Result<(), Failure> {
    let out = Out { quiet: common.quiet };
    let cfg = load(common)?;
    cfg.validate()?;
    let ns = cfg.n_list.clone().ok_or_else(|| missing("n_list"))?;
    let report = spatial_convergence(&cfg, &ns)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_report(&report, &cfg.out_dir.join("convergence_space.csv"))?;
    summarize(&out, &report, "spatial convergence");
    if report.status == ConvergenceStatus::NonSmooth {
        out.say("non-smooth initial data: ratio test waived");
    }
    if report.ratios_within(SPATIAL_RATIO_MAX) {
        out.say(format!("PASS: error ratio per doubling <= {SPATIAL_RATIO_MAX} above the floor"));
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("error ratio above {SPATIAL_RATIO_MAX}")))
    }
}

fn print_audit(out: &Out, report: &AuditReport) {
    out.say(format!("records checked      {}", report.records_checked));
    out.say(format!("violations           {}", report.violations.len()));
    out.say(format!("sup ||grad u||       {:.6e} (limit {:.6e})", report.sup_h1, report.h1_limit));
    out.say(format!("sup ||Lap u||        {:.6e}", report.sup_h2));
    out.say(format!("sup ||u||_inf        {:.6e}", report.sup_linf));
    out.say(format!("max mass drift       {:.3e}", report.max_mass_drift));
    for v in &report.violations {
        out.say(format!(
            "  record {} (step {}): {:?} {:.6e} > {:.6e}",
            v.record, v.step, v.check, v.value, v.limit
        ));
    }
}

fn audit(run_dir: Option<&Path>, common: &Common) -> Result<(), Failure> {
    let out = Out { quiet: common.quiet };
    let dir = run_dir
        .or(common.out_dir.as_deref())
        .ok_or_else(|| missing("run directory"))?;
    let cfg_path = common.config.clone().unwrap_or_else(|| dir.join(CONFIG_FILE));
    let cfg = parse_config(&cfg_path)?;
    cfg.validate()?;
    let trace = read_trace(&dir.join(TRACE_FILE))?;
    let first = trace
        .records
        .first()
        .ok_or_else(|| Failure::Error(Error::Trace("empty trace".into())))?;
    let report = stability_audit(&trace, cfg.epsilon, first.energy, &cfg.grid()?);
    print_audit(&out, &report);
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("{} audit violations", report.violations.len())))
    }
}

fn selftest(common: &Common) -> Result<(), Failure> {
    let out = Out { quiet: common.quiet };
    let results = run_selftest();
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        let tag = if r.passed { "ok  " } else { "FAIL" };
        out.say(format!("{tag} {}/{}: {}", r.module, r.name, r.detail));
    }
    out.say(format!("{} checks, {failed} failed", results.len()));
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("{failed} selftest checks failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::ConvergeTime(c) => converge_time(c),
        Command::ConvergeSpace(c) => converge_space(c),
        Command::Audit { run_dir, common } => audit(run_dir.as_deref(), common),
        Command::Selftest(c) => selftest(c),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(Failure::Acceptance(msg)) => {
            eprintln!("chsim: {msg}");
            ExitCode::from(EXIT_ACCEPTANCE)
        }
        Err(Failure::Error(e)) => {
            eprintln!("chsim: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
