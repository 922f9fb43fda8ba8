//! Pipeline CLI: generate task datasets, compile instructions, build folds,
//! run inference, and score the results.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use procbench::config::PipelineConfig;
use procbench::pipeline;
use procbench::taskgen::GroupKind;

#[derive(Parser)]
#[command(name = "procbench", version, about = "Benchmark toolchain for semantics-aware process mining with language models")]
struct Cli {
    /// Pipeline config file (TOML). Defaults to ./procbench.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output root directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the configuration, then print the resolved values.
    ValidateConfig,
    /// Derive labeled task instances from the process-model corpus.
    GenTasks {
        /// Corpus file override.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Use the bundled toy corpus instead of a corpus file.
        #[arg(long)]
        toy: bool,
    },
    /// Compile task instances into the instruction dataset.
    BuildInstructions,
    /// Build leave-one-group-out folds from the instruction dataset.
    MakeFolds {
        /// Build only the fold holding out this group.
        #[arg(long, value_parser = parse_group)]
        held_out: Option<GroupKind>,
    },
    /// Run a fold's test split against a backend.
    RunInference {
        #[arg(long, value_parser = parse_group)]
        held_out: GroupKind,
        /// Backend name from the config (oracle and random are built in).
        #[arg(long)]
        backend: String,
    },
    /// Score responses against a fold's test split.
    Evaluate {
        #[arg(long, value_parser = parse_group)]
        held_out: GroupKind,
        #[arg(long)]
        backend: String,
        /// Response file override.
        #[arg(long)]
        responses: Option<PathBuf>,
        /// Parse-failure threshold override.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print the stored evaluation reports.
    Report {
        /// Only reports produced with this backend.
        #[arg(long)]
        backend: Option<String>,
    },
}

fn parse_group(value: &str) -> Result<GroupKind, String> {
    GroupKind::from_slug(value)
        .ok_or_else(|| format!("unknown group {value:?}; use anomaly, prediction, or discovery"))
}

fn load_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let default_path = PathBuf::from("procbench.toml");
            if default_path.exists() {
                PipelineConfig::load(&default_path)?
            } else {
                PipelineConfig::default()
            }
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(output) = &cli.output {
        config.output_root = output.clone();
    }
    config.validate()?;
    Ok(config)
}

fn print_outcome(outcome: &pipeline::StageOutcome) {
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for (key, count) in &outcome.manifest.counts {
        println!("{key}: {count}");
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::ValidateConfig => {
            println!("{}", toml::to_string_pretty(&config).context("rendering config")?);
            println!("# configuration is valid; params digest {}", config.params_digest());
        }
        Command::GenTasks { corpus, toy } => {
            if let Some(corpus) = corpus {
                config.corpus = corpus;
            }
            let outcome = pipeline::stage_gen_tasks(&config, toy)?;
            print_outcome(&outcome);
        }
        Command::BuildInstructions => {
            let outcome = pipeline::stage_build_instructions(&config)?;
            print_outcome(&outcome);
        }
        Command::MakeFolds { held_out } => {
            let outcome = pipeline::stage_make_folds(&config, held_out)?;
            print_outcome(&outcome);
        }
        Command::RunInference { held_out, backend } => {
            let outcome = pipeline::stage_run_inference(&config, held_out, &backend)?;
            print_outcome(&outcome);
        }
        Command::Evaluate {
            held_out,
            backend,
            responses,
            threshold,
        } => {
            if let Some(threshold) = threshold {
                if !(0.0..=1.0).contains(&threshold) {
                    bail!("threshold must lie in [0, 1]");
                }
                config.parse_failure_threshold = threshold;
            }
            let (report, json_path) =
                pipeline::stage_evaluate(&config, held_out, &backend, responses)?;
            print!("{}", procbench::eval::render_report_text(&report));
            println!("report written to {}", json_path.display());
            if report.threshold_exceeded {
                eprintln!(
                    "error: a task exceeded the parse-failure threshold {:.2}",
                    report.parse_failure_threshold
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { backend } => {
            print!("{}", pipeline::stage_report(&config, backend.as_deref())?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
