use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wendland_bench::config::ExperimentKind;
use wendland_bench::{default_config_text, gradcheck, run_experiment, BenchError, ExperimentConfig};
use wendland_core::ActivationKind;

#[derive(Parser)]
#[command(name = "wendbench", version, about = "Compare activation functions on small deterministic benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Write outputs here instead of the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Suppress per-run progress on stderr.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Finite-difference check of every activation inside a small network.
    GradCheck {
        #[arg(long, default_value_t = 1000)]
        probes: usize,
        #[arg(long, default_value_t = 20240)]
        seed: u64,
    },
    /// Print every activation kind with its parameters.
    ListActivations,
    /// Print (or write) a commented starter config.
    EmitDefaultConfig {
        /// sine, moons, circles, mnist or fashion
        experiment: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn list_activations() {
    for kind in ActivationKind::ALL {
        let schema = kind.schema();
        println!("{:<8} {}", kind.token(), kind.label());
        for p in schema {
            println!(
                "    {:<8} default {:<10} {}  {}",
                p.key,
                p.default,
                if p.trainable { "trainable" } else { "fixed    " },
                p.doc
            );
        }
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run { config, output_dir, quiet } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let summary = run_experiment(&cfg, !quiet)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            if summary.diverged.is_empty() {
                Ok(())
            } else {
                Err(BenchError::Numerical(summary.diverged.join("; ")))
            }
        }
        Command::GradCheck { probes, seed } => {
            let lines = gradcheck::run_suite(seed, probes);
            let mut failed = 0;
            for l in &lines {
                println!(
                    "{} max_rel_error={:.3e} probes={} skipped={} {}",
                    if l.passed { "PASS" } else { "FAIL" },
                    l.max_rel_error,
                    l.probes_run,
                    l.probes_skipped,
                    l.name
                );
                failed += usize::from(!l.passed);
            }
            if failed == 0 {
                Ok(())
            } else {
                Err(BenchError::Numerical(format!("{failed} of {} gradient checks failed", lines.len())))
            }
        }
        Command::ListActivations => {
            list_activations();
            Ok(())
        }
        Command::EmitDefaultConfig { experiment, output } => {
            let kind = ExperimentKind::from_name(&experiment).ok_or_else(|| {
                BenchError::Usage(format!(
                    "unknown experiment `{experiment}` (expected sine, moons, circles, mnist or fashion)"
                ))
            })?;
            let text = default_config_text(kind);
            match output {
                Some(path) => std::fs::write(&path, text).map_err(|source| BenchError::Io {
                    path: path.display().to_string(),
                    source,
                }),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wendbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
