use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jaguar::dataio::{load_libsvm, normalize, write_libsvm, Normalization};
use jaguar::theory_checks::validate_all;
use jaguar_bench::config::ExperimentSpec;
use jaguar_bench::error::{BenchError, Result};
use jaguar_bench::output::{write_bundle, write_partial};
use jaguar_bench::runner::run_experiment;

#[derive(Parser)]
#[command(name = "jaguar-bench", version, about = "Zero-order optimization experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        budget_override: Option<u64>,
        /// Replaces the config's output_dir.
        #[arg(long, alias = "output_dir")]
        output_dir: Option<PathBuf>,
    },
    /// Run several estimators on the config's problem at one budget.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated estimators, e.g. jaguar,full,l2smooth.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long, alias = "output_dir")]
        output_dir: Option<PathBuf>,
    },
    /// Run the numeric theory validators.
    ValidateTheory {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse a LIBSVM file and print its shape.
    ParseData {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "none")]
        normalize: Normalization,
        /// Writes the (normalized) dataset back in LIBSVM format.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn experiment(
    config: &Path,
    methods: &[String],
    seed: Option<u64>,
    budget: Option<u64>,
    output_dir: Option<PathBuf>,
) -> Result<()> {
    let spec = ExperimentSpec::load(config)?.with_overrides(seed, budget)?;
    let dir = output_dir.unwrap_or_else(|| spec.output_dir.clone());
    match run_experiment(&spec, methods, &dir) {
        Ok(bundle) => {
            for path in write_bundle(&bundle, &dir)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Err(BenchError::Run { seed, error, trace }) => {
            let method = methods.first().cloned().unwrap_or_else(|| spec.method.estimator.clone());
            let path = write_partial(&spec.name, &spec.config_hash(), &dir, &method, seed, &trace)?;
            eprintln!("partial trace written to {}", path.display());
            Err(BenchError::Run { seed, error, trace })
        }
        Err(e) => Err(e),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed_override,
            budget_override,
            output_dir,
        } => experiment(&config, &[], seed_override, budget_override, output_dir),
        Command::Compare {
            config,
            methods,
            budget,
            seed_override,
            output_dir,
        } => experiment(&config, &methods, seed_override, budget, output_dir),
        Command::ValidateTheory { seed } => {
            let checks = validate_all(seed)?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            match checks.iter().find(|c| !c.passed) {
                Some(c) => Err(BenchError::TheoryCheck(c.name)),
                None => Ok(()),
            }
        }
        Command::ParseData {
            input,
            normalize: mode,
            output,
        } => {
            if !input.is_file() {
                return Err(BenchError::Config(format!("input {} does not exist", input.display())));
            }
            let ds = normalize(&load_libsvm(&input)?, mode);
            let pos = ds.labels().iter().filter(|&&y| y > 0.0).count();
            println!(
                "rows={} features={} nnz={} positive={} negative={}",
                ds.len(),
                ds.n_features(),
                ds.nnz(),
                pos,
                ds.len() - pos
            );
            if let Some(out) = output {
                let file = std::fs::File::create(&out).map_err(BenchError::io(&out))?;
                write_libsvm(&ds, std::io::BufWriter::new(file)).map_err(BenchError::io(&out))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
