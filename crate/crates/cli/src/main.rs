use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperbounds::Error;
use hyperbounds::cache::SeriesCache;
use hyperbounds::conjecture::{self, EXACT_CUTOFF};
use hyperbounds::report::{self, Command, ModeChoice, RunConfig, Status};

const EXIT_CLAIM: u8 = 1;
const EXIT_RESOURCE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "hyperbounds", version, about = "Exact checks for degree bounds of generic hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute CA = I0/I0-tilde over an n range and r values.
    VerifyConjecture(Common),
    /// Degree-bound gates, root bounds and the effective thresholds.
    DegreeBounds(Common),
    /// Majorant, pole, Cauchy and evaluation estimates.
    Estimates(Common),
    /// Maximum-modulus scans and positivity checks on circles; writes CSV plot data.
    Circle(Common),
    /// Every suite, with one overall status.
    All(Common),
    /// Manage the coefficient-table cache.
    Cache {
        #[command(subcommand)]
        action: CacheCmd,
    },
}

#[derive(Subcommand)]
enum CacheCmd {
    /// Precompute the C tables for an n range.
    Warm(Common),
    /// List cache entries with sizes and checksums.
    Inspect(Common),
    /// Remove every cache entry.
    Purge(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Certified,
}

#[derive(Args, Clone)]
struct Common {
    /// n or an inclusive range A..B
    #[arg(long = "n", value_parser = parse_range)]
    n: Option<(usize, usize)>,
    /// r value(s), comma separated
    #[arg(long = "r", value_delimiter = ',', conflicts_with = "r_sweep")]
    r: Option<Vec<u64>>,
    /// inclusive range of r values A..B
    #[arg(long = "r-sweep", value_parser = parse_range)]
    r_sweep: Option<(usize, usize)>,
    /// total-degree truncation for certified mode
    #[arg(long, default_value_t = 20)]
    trunc: u32,
    /// bits for high-precision evaluation
    #[arg(long, default_value_t = 128)]
    precision: usize,
    /// sample count for circle scans
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// circle radius
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    /// largest coefficient table allowed
    #[arg(long, default_value_t = conjecture::DEFAULT_BUDGET)]
    budget: u64,
    /// worker threads, 0 for one per core
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// cache directory; HYPERBOUNDS_CACHE is used when absent
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    /// JSON report path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// directory for circle CSV files
    #[arg(long, default_value = "plots")]
    plot_dir: PathBuf,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?)),
        None => parse(s).map(|v| (v, v)),
    }
}

impl Common {
    fn cache_dir(&self) -> Option<PathBuf> {
        if self.no_cache {
            return None;
        }
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os("HYPERBOUNDS_CACHE").map(PathBuf::from))
            .or_else(|| Some(PathBuf::from(".hyperbounds-cache")))
    }

    fn config(&self, command: Command) -> RunConfig {
        let mut c = RunConfig::new(command);
        c.n_range = self.n;
        c.r_values = match (&self.r, self.r_sweep) {
            (Some(rs), _) => Some(rs.clone()),
            (None, Some((a, b))) => Some((a as u64..=b as u64).collect()),
            (None, None) => None,
        };
        c.trunc = self.trunc;
        c.precision = self.precision;
        c.samples = self.samples;
        c.rho = self.rho;
        c.mode = match self.mode {
            ModeArg::Auto => ModeChoice::Auto,
            ModeArg::Exact => ModeChoice::Exact,
            ModeArg::Certified => ModeChoice::Certified,
        };
        c.budget = self.budget;
        c.workers = self.workers;
        c.cache_dir = self.cache_dir();
        if matches!(command, Command::Circle | Command::All) {
            c.plot_dir = Some(self.plot_dir.clone());
        }
        c
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::ResourceLimit { .. } => EXIT_RESOURCE,
        _ => EXIT_CONFIG,
    }
}

fn emit(json: &serde_json::Value, out: Option<&PathBuf>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(json)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_suite(common: &Common, command: Command) -> Result<u8, Error> {
    let cfg = common.config(command);
    let rep = report::run(&cfg)?;
    emit(&rep.to_json(true), common.out.as_ref())?;
    let count = |s: Status| rep.checks.iter().filter(|c| c.status == s).count();
    eprintln!(
        "{} pass, {} fail, {} info in {:.2}s",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Info),
        rep.timing.elapsed_seconds
    );
    for f in rep.failures() {
        eprintln!("FAIL {} [{}] {}: {}", f.id, f.anchor, f.name, f.witness.as_deref().or(f.value.as_deref()).unwrap_or(""));
    }
    Ok(if rep.passed() { 0 } else { EXIT_CLAIM })
}

fn run_cache(action: &CacheCmd) -> Result<u8, Error> {
    let (CacheCmd::Warm(common) | CacheCmd::Inspect(common) | CacheCmd::Purge(common)) = action;
    let dir = common.cache_dir().ok_or_else(|| Error::invalid("cache commands need a cache directory"))?;
    let cache = SeriesCache::new(&dir);
    match action {
        CacheCmd::Warm(_) => {
            let cfg = common.config(Command::VerifyConjecture);
            cfg.validate()?;
            let opts = cfg.options();
            let (lo, hi) = common.n.unwrap_or((2, 5));
            for n in lo..=hi {
                let exact = match cfg.mode {
                    ModeChoice::Auto => n <= EXACT_CUTOFF,
                    ModeChoice::Exact => true,
                    ModeChoice::Certified => false,
                };
                let hit = conjecture::warm_table(n, (!exact).then_some(cfg.trunc), &opts)?;
                eprintln!("n={n}: {}", if hit { "already cached" } else { "built" });
            }
            Ok(0)
        }
        CacheCmd::Inspect(_) => {
            let entries = cache.entries()?;
            emit(&serde_json::json!({ "schema": report::SCHEMA, "dir": dir, "entries": entries }), common.out.as_ref())?;
            Ok(0)
        }
        CacheCmd::Purge(_) => {
            let removed = cache.purge()?;
            eprintln!("removed {removed} entries from {}", dir.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Cmd::VerifyConjecture(c) => run_suite(c, Command::VerifyConjecture),
        Cmd::DegreeBounds(c) => run_suite(c, Command::DegreeBounds),
        Cmd::Estimates(c) => run_suite(c, Command::Estimates),
        Cmd::Circle(c) => run_suite(c, Command::Circle),
        Cmd::All(c) => run_suite(c, Command::All),
        Cmd::Cache { action } => run_cache(action),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
