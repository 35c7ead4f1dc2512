//! Command-line front end. [`run`] returns the process exit code so the whole
//! interface can be driven in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checkpoint;
use crate::config::{RunConfig, CONFIG_REFERENCE};
use crate::diagnostics::{self, iterate_local_bound, read_series, write_csv, fit_power_law};
use crate::error::ZakharovError;
use crate::solver::{duhamel_check, simulate, simulate_resume, SimulationError, Trajectory};
use crate::xsb::{run_probe, write_probe_csv, write_probe_meta, ProbeVariant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;

/// Caps the worker threads used by the probes.
pub const THREADS_ENV: &str = "ZKLB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "zakharov", version, about = "2D Zakharov simulator, growth diagnostics and estimate probes")]
#[command(after_long_help = CONFIG_REFERENCE)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration (see --help for keys and defaults)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides data.seed and probe.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides output.dir
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Continue `simulate` from a checkpoint file
    #[arg(long, global = true)]
    pub resume: Option<PathBuf>,
    /// Overrides solver.dt
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Overrides solver.t_final
    #[arg(long = "t-final", global = true)]
    pub t_final: Option<f64>,
    /// Overrides grid.n
    #[arg(long, global = true)]
    pub n: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the initial data; writes diagnostics.csv and checkpoints
    Simulate,
    /// Fit C·t^alpha to one H^s column of a diagnostics CSV
    FitGrowth {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        s: f64,
        /// Defaults to diagnostics.t_min_fraction times the last time
        #[arg(long = "t-min")]
        t_min: Option<f64>,
    },
    /// Simulate and write the Duhamel residual series to duhamel.csv
    CheckDuhamel,
    /// Run a ratio probe at every configured resolution
    Probe {
        #[arg(value_enum)]
        variant: ProbeKind,
        /// Move the complex conjugate to the first factor (prop1/prop2)
        #[arg(long)]
        swapped: bool,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        s1: Option<i32>,
        #[arg(long)]
        s2: Option<i32>,
    },
    /// Iterate the local bound recurrences and fit their growth
    IterateBound {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Strichartz,
    Prop1,
    Prop2,
    Lemma,
}

enum Failure {
    Usage(String),
    Error(ZakharovError),
    Unstable(String),
}

impl From<ZakharovError> for Failure {
    fn from(e: ZakharovError) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (program name first) and executes; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
        Err(Failure::Unstable(msg)) => {
            eprintln!("unstable: {msg}");
            EXIT_UNSTABLE
        }
    }
}

fn require_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("input file {} does not exist", path.display())))
    }
}

fn load_config(g: &GlobalArgs) -> std::result::Result<RunConfig, Failure> {
    let mut config = match &g.config {
        Some(path) => {
            require_file(path)?;
            RunConfig::parse_config(path)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        config.data.seed = seed;
        config.probe.seed = seed;
    }
    if let Some(out) = &g.out {
        config.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(dt) = g.dt {
        config.solver.dt = Some(dt);
    }
    if let Some(t) = g.t_final {
        config.solver.t_final = Some(t);
    }
    if let Some(n) = g.n {
        config.grid.n = n;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(config: &RunConfig) -> std::result::Result<PathBuf, Failure> {
    let dir = PathBuf::from(&config.output.dir);
    fs::create_dir_all(&dir).map_err(ZakharovError::from)?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Error(e.into()))
}

fn stamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("written at unix time {secs}")
}

fn execute(cli: Cli) -> Outcome {
    let g = &cli.global;
    if g.resume.is_some() && !matches!(cli.command, Command::Simulate) {
        return Err(Failure::Usage("--resume only applies to simulate".into()));
    }
    match cli.command {
        Command::Simulate => {
            let config = load_config(g)?;
            let traj = evolve(&config, g.resume.as_deref())?;
            let dir = out_dir(&config)?;
            write(&dir.join("diagnostics.csv"), &write_csv(&traj.records, &stamp()))?;
            if config.output.checkpoints {
                write_checkpoints(&dir, &traj)?;
            }
            let last = traj.checkpoints.last().expect("initial state is always kept");
            println!("simulated to t = {}; {} records, {} checkpoints", last.t, traj.records.len(), traj.checkpoints.len());
            Ok(())
        }
        Command::CheckDuhamel => {
            let config = load_config(g)?;
            let traj = evolve(&config, None)?;
            let series = duhamel_check(&traj)?;
            let mut out = format!("# zakharov duhamel residual; {}\nt,residual\n", stamp());
            for (t, r) in &series {
                writeln!(out, "{t:.17e},{r:.17e}").unwrap();
            }
            write(&out_dir(&config)?.join("duhamel.csv"), &out)?;
            let worst = series.iter().map(|p| p.1).fold(0.0, f64::max);
            println!("max normalized Duhamel residual {worst:.3e} over {} checkpoints", series.len());
            Ok(())
        }
        Command::FitGrowth { csv, s, t_min } => {
            let config = load_config(g)?;
            require_file(&csv)?;
            let file = fs::File::open(&csv).map_err(ZakharovError::from)?;
            let series = read_series(file, &diagnostics::hs_column(s))?;
            let t_last = series.last().map(|p| p.0).unwrap_or(0.0);
            let t_min = t_min.unwrap_or(config.diagnostics.t_min_fraction * t_last);
            let fit = fit_power_law(&series, s, t_min)?;
            println!(
                "s={} t_min={} alpha={:.6} C={:.6} residual={:.3e}",
                fit.s, fit.t_min, fit.exponent_alpha, fit.prefactor_c, fit.residual
            );
            Ok(())
        }
        Command::Probe { variant, swapped, trials, s1, s2 } => {
            let mut config = load_config(g)?;
            if let Some(t) = trials {
                config.probe.trials = t;
            }
            if let Some(s) = s1 {
                config.probe.s1 = s;
            }
            if let Some(s) = s2 {
                config.probe.s2 = s;
            }
            let variant = match variant {
                ProbeKind::Strichartz => ProbeVariant::Strichartz,
                ProbeKind::Prop1 => ProbeVariant::Prop1 { swapped },
                ProbeKind::Prop2 => ProbeVariant::Prop2 { swapped },
                ProbeKind::Lemma => ProbeVariant::Lemma,
            };
            if swapped && matches!(variant, ProbeVariant::Strichartz | ProbeVariant::Lemma) {
                return Err(Failure::Usage("--swapped applies to prop1 and prop2 only".into()));
            }
            let report = with_thread_cap(|| run_probe(variant, &config.probe))??;
            let dir = out_dir(&config)?;
            for res in &report.resolutions {
                let base = dir.join(format!("probe_{}_N{}", variant.name(), res.n));
                write(&base.with_extension("csv"), &write_probe_csv(res))?;
                write(&base.with_extension("meta"), &write_probe_meta(&report, res))?;
                println!(
                    "{} N={} M={} trials={} discarded={} max_ratio={:.6e}",
                    variant.name(),
                    res.n,
                    res.m,
                    res.trials.len(),
                    res.discarded,
                    res.max_ratio
                );
            }
            if let Some(growth) = report.growth() {
                println!("growth(max ratio, finest/coarsest) = {growth:.4}");
            }
            Ok(())
        }
        Command::IterateBound { delta, c, steps, x0 } => {
            let config = load_config(g)?;
            let it = iterate_local_bound(c, delta, x0, steps)?;
            let mut out = String::from("n,additive,multiplicative\n");
            for n in table_rows(steps) {
                let mult = it.multiplicative.get(n).map(|v| format!("{v:.17e}")).unwrap_or_default();
                writeln!(out, "{n},{:.17e},{mult}", it.additive[n]).unwrap();
            }
            write(&out_dir(&config)?.join("iterate_bound.csv"), &out)?;
            println!(
                "additive exponent={:.6} (1/delta={:.6}); multiplicative log-rate={:.6} residual={:.3e}",
                it.additive_exponent,
                1.0 / delta,
                it.multiplicative_rate,
                it.multiplicative_residual
            );
            Ok(())
        }
    }
}

/// About 200 rows, geometrically spaced, always including the first and last.
fn table_rows(steps: usize) -> Vec<usize> {
    let mut rows = vec![0];
    let ratio = (steps as f64).powf(1.0 / 200.0);
    let mut x = 1.0f64;
    while (x as usize) < steps {
        let n = x as usize;
        if n > *rows.last().unwrap() {
            rows.push(n);
        }
        x *= ratio;
    }
    rows.push(steps);
    rows
}

fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> std::result::Result<R, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v
                .parse()
                .ok()
                .filter(|t| *t > 0)
                .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Failure::Error(ZakharovError::Config(e.to_string())))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn evolve(config: &RunConfig, resume: Option<&Path>) -> std::result::Result<Trajectory, Failure> {
    let (dt, t_final) = config.time_span()?;
    let data = config.initial_data()?;
    let step = config.split_step(dt);
    let schedule = config.schedule()?;
    let result = match resume {
        Some(path) => {
            require_file(path)?;
            let start = checkpoint::load(path, config.grid.dealias)?;
            if start.grid().n() != config.grid.n || start.grid().period() != config.grid.period {
                return Err(Failure::Error(ZakharovError::GridMismatch(format!(
                    "checkpoint grid N={} L={} differs from the config",
                    start.grid().n(),
                    start.grid().period()
                ))));
            }
            simulate_resume(start, &data.wave(), t_final, &step, &schedule)
        }
        None => simulate(&data, t_final, &step, &schedule),
    };
    match result {
        Ok(t) => Ok(t),
        Err(SimulationError::Invalid(e)) => Err(e.into()),
        Err(SimulationError::Unstable { t, last_good }) => {
            let dir = out_dir(config)?;
            let path = dir.join("last_good.zklb");
            checkpoint::save(&last_good, &path)?;
            Err(Failure::Unstable(format!(
                "non-finite field at t = {t}; last good state (t = {}) saved to {}",
                last_good.t,
                path.display()
            )))
        }
    }
}

fn write_checkpoints(dir: &Path, traj: &Trajectory) -> Outcome {
    for state in &traj.checkpoints {
        let step = (state.t / traj.dt).round() as usize;
        checkpoint::save(state, &dir.join(format!("checkpoint_{step:08}.zklb")))?;
    }
    Ok(())
}
