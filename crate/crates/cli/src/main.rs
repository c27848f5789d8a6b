//! `fractal-zeta`: batch front-end for the fractal Ihara zeta library.
//!
//! Exit codes: 0 success, 1 usage or IO error, 2 guard rejection only,
//! 3 consistency failure.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fractal_zeta::fractal_builders::Family;
use num_complex::Complex64;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fractal-zeta", version, about = "Ihara zeta functions of self-similar fractal graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build levels 1..=N, write edge lists and level descriptors.
    Build(BuildArgs),
    /// Spectral path-count table with an oracle comparison where affordable.
    Counts(RunArgs),
    /// Evaluate Z by every method at each grid point.
    Zeta(RunArgs),
    /// Functional-equation residuals for an essentially regular family.
    Funceq(RunArgs),
    /// Finite-graph approximation gap per level against the series.
    Converge(RunArgs),
    /// Spectral counts against brute-force enumeration on the given levels.
    Oracle(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Deepest level, or a range `a..b` of which only the end matters here.
    #[arg(long, default_value = "4", value_parser = parse_levels)]
    pub levels: Levels,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Deepest level `N`, or a range `a..b` (levels reported by converge and oracle).
    #[arg(long, value_parser = parse_levels)]
    pub levels: Option<Levels>,
    /// Series order `M`, at most 64.
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    /// Path budget for brute-force enumeration.
    #[arg(long, default_value_t = 50_000_000)]
    pub budget: u64,
    /// File of complex points, one `re,im` per line.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Extra points `re,im` (repeatable).
    #[arg(long = "u", value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Vec<Complex64>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Inclusive level range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Levels {
    pub first: usize,
    pub last: usize,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: fractal_zeta::Error| e.to_string())
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    let bad = || format!("expected `N` or `a..b` with 1 <= a <= b, got `{s}`");
    let (first, last) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (1, n)
        }
    };
    if first == 0 || first > last {
        return Err(bad());
    }
    Ok(Levels { first, last })
}

pub fn parse_point(s: &str) -> Result<Complex64, String> {
    let bad = || format!("expected `re,im` or `re`, got `{s}`");
    let (re, im) = match s.split_once(',') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => (s.trim().parse().map_err(|_| bad())?, 0.0),
    };
    let u = Complex64::new(re, im);
    if !u.is_finite() {
        return Err(bad());
    }
    Ok(u)
}

fn main() -> ExitCode {
    // clap would exit with 2, which is reserved for guard rejections
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Build(a) => commands::build(a),
        Command::Counts(a) => commands::counts(a),
        Command::Zeta(a) => commands::zeta(a),
        Command::Funceq(a) => commands::funceq(a),
        Command::Converge(a) => commands::converge(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match outcome {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::error_code(&e))
        }
    }
}
