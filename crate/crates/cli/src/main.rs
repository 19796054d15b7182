use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rrsgd_core::analysis::sweep::{read_csv, write_csv};
use rrsgd_core::engine::{run_sgd, Sampling};
use rrsgd_core::{sweep, Error, ExperimentConfig, ProblemSpec, StepSchedule};

mod fit;
mod progress;
mod recurrences;
mod svg;

/// Shuffled SGD experiments: problem generation, runs, sweeps, bound checks and rate fits.
#[derive(Parser, Debug)]
#[command(name = "rrsgd", version, about)]
struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one problem JSON per n in an experiment config
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run shuffled (or with-replacement) SGD once and print the result as JSON
    Run {
        /// Problem JSON as written by `generate`
        #[arg(long)]
        config: PathBuf,
        /// Schedule JSON, e.g. '{"variant":"two_phase","alpha":3}'
        #[arg(long)]
        schedule: String,
        /// Number of epochs
        #[arg(long = "epochs", short = 'K')]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_sampling, default_value = "without_replacement")]
        sampling: Sampling,
        /// Keep every inner iterate in the output
        #[arg(long)]
        record_iterates: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo sweep over an experiment grid, written as CSV
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output path; falls back to the config's output_path, then stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare closed-form recurrence bounds against their equality recursions
    VerifyRecurrences {
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest epoch count per draw
        #[arg(long, default_value_t = 64)]
        max_epochs: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo checks of the per-iteration and per-epoch progress bounds
    VerifyProgressBounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Log-log rate fits of a sweep CSV
    Fit {
        /// Sweep CSV
        #[arg(long)]
        input: PathBuf,
        /// Scale column: K or n
        #[arg(long, default_value = "K")]
        scale: String,
        /// Comma-separated grouping columns (default: every key column except the scale)
        #[arg(long, value_delimiter = ',')]
        group_by: Option<Vec<String>>,
        #[command(flatten)]
        output: Output,
    },
    /// Log-log SVG chart of a sweep CSV
    Report {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_sampling(s: &str) -> Result<Sampling, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!("unknown sampling `{s}` (expected without_replacement or with_replacement)")
    })
}

/// Failure with a process exit code attached.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

fn is_divergence(e: &Error) -> bool {
    match e {
        Error::Diverged { .. } => true,
        Error::TrialFailed { source, .. } => is_divergence(source),
        _ => false,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if is_divergence(&e) {
            4
        } else {
            match e {
                Error::Io(_) => 1,
                _ => 3,
            }
        };
        Self { code, message: e.to_string() }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let cfg = with_path(path, ExperimentConfig::from_json(&read_file(path)?))?;
    with_path(path, cfg.validate())?;
    Ok(cfg)
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(Error::from)?;
            }
            let mut file = io::BufWriter::new(fs::File::create(p).map_err(Error::from)?);
            write(&mut file)?;
            file.flush().map_err(Error::from)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn generate(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    fs::create_dir_all(out).map_err(Error::from)?;
    for &n in &cfg.n_grid {
        let spec = cfg.problem_spec(n);
        spec.build()?;
        let path = out.join(format!("problem_{}_n{n}.json", cfg.family));
        fs::write(&path, serde_json::to_string_pretty(&spec).map_err(Error::from)? + "\n").map_err(Error::from)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(
    config: &Path,
    schedule: &str,
    epochs: usize,
    seed: u64,
    sampling: Sampling,
    record_iterates: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let spec: ProblemSpec = with_path(config, serde_json::from_str(&read_file(config)?).map_err(Error::from))?;
    let schedule: StepSchedule =
        serde_json::from_str(schedule).map_err(|e| Failure::config(format!("--schedule: {e}")))?;
    schedule.validate()?;
    let problem = spec.build()?;
    let x0 = problem.default_start(spec.seed);
    let result = run_sgd(&problem, &schedule, &x0, epochs, seed, sampling, record_iterates)?;
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, &result)?;
        writeln!(w)?;
        Ok(())
    })
}

fn run_sweep(config: &Path, seed: Option<u64>, trials: Option<usize>, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = with_path(config, ExperimentConfig::from_json(&read_file(config)?))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    with_path(config, cfg.validate())?;
    let rows = sweep(&cfg)?;
    let target = out.or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    emit(target.as_deref(), |w| write_csv(w, &rows, cfg.master_seed))
}

fn report(input: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let file = fs::File::open(input).map_err(|e| Failure::config(format!("{}: {e}", input.display())))?;
    let rows = with_path(input, read_csv(BufReader::new(file)))?;
    let chart = svg::render(&rows).map_err(Failure::config)?;
    emit(out, |w| Ok(w.write_all(chart.as_bytes())?))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon_threads(t)?;
    }
    match cli.command {
        Command::Generate { config, out, seed } => generate(&config, &out, seed),
        Command::Run {
            config,
            schedule,
            epochs,
            seed,
            sampling,
            record_iterates,
            output,
        } => run(&config, &schedule, epochs, seed, sampling, record_iterates, output.out.as_deref()),
        Command::Sweep { config, seed, trials, out } => run_sweep(&config, seed, trials, out),
        Command::VerifyRecurrences {
            draws,
            seed,
            max_epochs,
            output,
        } => recurrences::verify(draws, seed, max_epochs, output.out.as_deref()),
        Command::VerifyProgressBounds {
            config,
            seed,
            trials,
            output,
        } => {
            let mut cfg = with_path(&config, ExperimentConfig::from_json(&read_file(&config)?))?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            with_path(&config, cfg.validate())?;
            progress::verify(&cfg, output.out.as_deref())
        }
        Command::Fit {
            input,
            scale,
            group_by,
            output,
        } => fit::fit_csv(&input, &scale, group_by, output.out.as_deref()),
        Command::Report { input, output } => report(&input, output.out.as_deref()),
    }
}

fn rayon_threads(threads: usize) -> Result<(), Failure> {
    if threads == 0 {
        return Err(Failure::config("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::config(format!("--threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
