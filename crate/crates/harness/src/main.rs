use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};

use ags_harness::experiment::{compare, run_experiment, Overrides, Summary};
use ags_harness::verify::{verify_suite, Level, VerifyOptions};
use ags_harness::{parse_config, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "ags", version, about = "Adaptive Gaussian smoothing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write records.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every module invariant and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        /// Forward-difference coefficient of the estimator checks.
        #[arg(long, hide = true)]
        forward_coefficient: Option<f64>,
    },
    /// Run several configs (plus a derivative-free baseline each) and merge their records.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let doc = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&doc).inspect_err(|_| error!("{}: invalid config", path.display()))
}

fn print_summary(s: &Summary) {
    println!("{}", serde_json::to_string(s).expect("summary serializes"));
}

fn run_verb(config: &Path, overrides: Overrides) -> Result<bool, HarnessError> {
    let cfg = overrides.apply(load(config)?);
    let summary = run_experiment(&cfg)?;
    info!("wrote {}", cfg.output_dir().display());
    print_summary(&summary);
    Ok(!summary.aborted)
}

fn compare_verb(paths: &[PathBuf], out: &Path) -> Result<bool, HarnessError> {
    let mut configs = Vec::with_capacity(paths.len());
    for p in paths {
        let cfg = load(p)?;
        let name = cfg
            .name
            .clone()
            .or_else(|| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| cfg.function.name.clone());
        configs.push((name, cfg));
    }
    let summaries = compare(&configs, out)?;
    for s in &summaries {
        if s.aborted {
            warn!("{} aborted: {}", s.name, s.abort_reason.as_deref().unwrap_or("unknown"));
        }
        print_summary(s);
    }
    Ok(summaries.iter().all(|s| !s.aborted))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => run_verb(&config, Overrides { seed, out }),
        Command::Verify {
            level,
            forward_coefficient,
        } => {
            let mut opts = VerifyOptions::new(level);
            if let Some(c) = forward_coefficient {
                opts.forward_coefficient = c;
            }
            let report = verify_suite(&opts);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            for c in report.failures() {
                error!("{} failed: measured {} against {} ({})", c.name, c.measured, c.limit, c.detail);
            }
            Ok(report.passed())
        }
        Command::Compare { configs, out } => compare_verb(&configs, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
