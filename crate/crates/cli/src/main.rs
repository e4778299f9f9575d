use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qsl_cli::{parse_config, run_scenario, CliError, ConfigError, Mode};

/// Projected quantum speed limits for Jaynes-Cummings sensors.
#[derive(Debug, Parser)]
#[command(name = "qsl", version)]
struct Args {
    /// Scenario to run.
    #[arg(value_enum)]
    mode: Mode,
    /// TOML scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to QSL_THREADS, then to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("QSL_THREADS") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| invalid_threads(format!("QSL_THREADS is not a count: {s:?}")))?,
            Err(_) => return Ok(None),
        },
    };
    if n == 0 {
        return Err(invalid_threads("thread count must be positive".into()));
    }
    Ok(Some(n))
}

fn invalid_threads(reason: String) -> CliError {
    CliError::Config(ConfigError::InvalidValue {
        field: "threads".into(),
        line: None,
        reason,
    })
}

fn run(args: Args) -> Result<i32, CliError> {
    if let Some(n) = thread_count(args.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let text =
        std::fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text, Some(args.mode))?;
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let summary = run_scenario(&cfg)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(report) = &summary.verify {
        println!("{report}");
    }
    for f in &summary.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
