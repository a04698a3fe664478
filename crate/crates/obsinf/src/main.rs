use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use obsinf::config::{parse_config, Format};
use obsinf::report::{schema, to_csv, to_json};
use obsinf::runner::{run, RunOptions};

#[derive(Parser)]
#[command(name = "obsinf", version, about = "Finite-volume experiments on observables at infinity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        config: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the largest matrix dimension handled densely.
        #[arg(long)]
        dense_cap: Option<usize>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Record wall time per point.
        #[arg(long)]
        timings: bool,
    },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
    /// Print the JSON schema of reports.
    Schema,
}

fn load(path: &PathBuf) -> Result<obsinf::ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&schema()).expect("schema serializes"));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {} experiment over {} volumes", cfg.kind.as_str(), cfg.schedule.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, format, seed, dense_cap, out, jobs, timings } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(c) = dense_cap {
                if c == 0 {
                    eprintln!("--dense-cap must be positive");
                    return ExitCode::from(1);
                }
                cfg.dense_cap = c;
            }
            if jobs == Some(0) {
                eprintln!("--jobs must be positive");
                return ExitCode::from(1);
            }
            let outcome = match run(&cfg, &RunOptions { jobs, timings }) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            };
            let format = match format {
                Some(FormatArg::Json) => Format::Json,
                Some(FormatArg::Csv) => Format::Csv,
                None => cfg.format,
            };
            let text = match format {
                Format::Json => to_json(&outcome.report),
                Format::Csv => to_csv(&outcome.report),
            };
            match out.or_else(|| cfg.output_path.as_ref().map(PathBuf::from)) {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        eprintln!("{}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                }
                None => print!("{text}"),
            }
            for a in outcome.report.meta.assertions.iter().filter(|a| !a.passed) {
                eprintln!("assertion failed: {}: {}", a.name, a.detail);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
    }
}
