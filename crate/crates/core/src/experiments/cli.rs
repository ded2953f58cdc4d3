//! Command-line front end. Exit codes: 0 success, 1 other failure, 2 usage
//! or configuration error, 3 capacity exceeded, 4 a `--check` failed.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::{
    giant_checks, hypertree_checks, run_giant, run_hypertree, run_shadow, run_smoothness, run_sprinkling,
    run_subcritical, run_survival_mc, shadow_checks, smoothness_checks, sprinkle_checks, subcritical_checks,
    survival_checks, Check, ExperimentConfig, Format, Regime, Report,
};
use crate::combinatorics::{critical_p0, Params, Universe};
use crate::components::census;
use crate::sampling::EdgeSet;
use crate::smoothness::write_profiles_csv;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hypergiant", version, about = "Giant j-components of random k-uniform hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Largest components of supercritical samples.
    Giant(RunArgs),
    /// Largest component of subcritical samples against the size bound.
    Subcritical(RunArgs),
    /// Branching-process survival Monte Carlo.
    Survival(RunArgs),
    /// Boundary degree profiles of explorations.
    Smoothness(RunArgs),
    /// Two-round exposure merging large components.
    Sprinkle(RunArgs),
    /// ℓ-set shadows of the largest component.
    Shadow(RunArgs),
    /// Tree searches from random roots.
    Hypertree(RunArgs),
    /// Component census of an edge-set file.
    Census(CensusArgs),
    /// Prints the critical probability.
    P0(ModelArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    j: u32,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Probability {
    /// Distance from criticality; the subcommand fixes the side.
    #[arg(long)]
    eps: Option<f64>,
    /// Explicit edge probability.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    prob: Probability,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    /// Query budget fraction, default 4 rho1.
    #[arg(long)]
    alpha: Option<f64>,
    /// Second-round probability for `sprinkle`.
    #[arg(long)]
    p2: Option<f64>,
    /// Exit with code 4 unless the report meets its expected behaviour.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct CensusArgs {
    /// Edge-set file: a `n k seed` header line, then one k-set rank per line.
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    j: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also list components without edges.
    #[arg(long)]
    singletons: bool,
}

impl RunArgs {
    fn config(&self, regime: Regime) -> Result<ExperimentConfig> {
        let ModelArgs { n, k, j } = self.model;
        let mut cfg = match (self.prob.eps, self.prob.p) {
            (Some(eps), None) => ExperimentConfig::new(n, k, j, eps, regime, self.trials, self.seed)?,
            (None, Some(p)) => ExperimentConfig::with_p(n, k, j, p, self.trials, self.seed)?,
            _ => return Err(Error::Config("give exactly one of --eps and --p".into())),
        };
        let s = &mut cfg.schedule;
        for (slot, value) in [
            (&mut s.delta, self.delta),
            (&mut s.rho1, self.rho1),
            (&mut s.gamma, self.gamma),
            (&mut s.lambda0, self.lambda0),
            (&mut s.lambda, self.lambda),
            (&mut s.delta0, self.delta0),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        cfg.alpha = self.alpha;
        cfg.sprinkle_p2 = self.p2;
        Ok(cfg)
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<R: Serialize>(args: &RunArgs, report: &Report<R>, checks: Vec<Check>) -> Result<i32> {
    let mut w = open_out(args.out.as_deref())?;
    report.write(&mut w, args.format())?;
    w.flush()?;
    if !args.check {
        return Ok(EXIT_OK);
    }
    let mut code = EXIT_OK;
    for c in checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.passed {
            code = EXIT_CHECK;
        }
    }
    Ok(code)
}

fn profiles_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("smoothness");
    out.with_file_name(format!("{stem}_profiles.csv"))
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::P0(m) => {
            let params = Params::new(m.n, m.k, m.j, 0.0)?;
            println!("{}", critical_p0(&params)?);
            Ok(EXIT_OK)
        }
        Command::Census(a) => {
            let (edges, _seed) = EdgeSet::read_from(BufReader::new(File::open(&a.edges)?))?;
            let u = Universe::new(edges.n, edges.k, a.j)?;
            let c = census(&u, &edges)?;
            let mut w = open_out(a.out.as_deref())?;
            c.write_csv(&mut w, a.singletons)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Giant(a) => {
            let r = run_giant(&a.config(Regime::Super)?)?;
            emit(&a, &r, giant_checks(&r))
        }
        Command::Subcritical(a) => {
            let r = run_subcritical(&a.config(Regime::Sub)?)?;
            emit(&a, &r, subcritical_checks(&r))
        }
        Command::Survival(a) => {
            let out = run_survival_mc(&a.config(Regime::Super)?)?;
            emit(&a, &out.report, survival_checks(&out))
        }
        Command::Smoothness(a) => {
            let out = run_smoothness(&a.config(Regime::Super)?)?;
            if let Some(path) = a.out.as_deref() {
                let mut w = BufWriter::new(File::create(profiles_path(path))?);
                write_profiles_csv(&out.profiles, &mut w)?;
                w.flush()?;
            }
            emit(&a, &out.report, smoothness_checks(&out))
        }
        Command::Sprinkle(a) => {
            let r = run_sprinkling(&a.config(Regime::Super)?)?;
            emit(&a, &r, sprinkle_checks(&r))
        }
        Command::Shadow(a) => {
            let r = run_shadow(&a.config(Regime::Super)?)?;
            emit(&a, &r, shadow_checks(&r))
        }
        Command::Hypertree(a) => {
            let r = run_hypertree(&a.config(Regime::Super)?)?;
            emit(&a, &r, hypertree_checks(&r))
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Capacity(_) => EXIT_CAPACITY,
                Error::Config(_) | Error::Validation(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}
