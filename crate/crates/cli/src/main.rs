//! Batch front-end: parses a TOML config, runs the requested studies, and
//! writes deterministic data files.

mod config;
mod studies;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{RunConfig, Study};
use studies::{convergence_study, graph_summary, oracle_check, StudyContext};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("resource cap: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Numeric(_) | CliError::Runtime(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "timebin",
    version,
    about = "Tensor-network simulation of time-bin fiber-loop interferometers"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Overrides the seed from the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Maximum number of studies run concurrently.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every study requested in the config's outputs.
    Simulate,
    /// Entanglement entropy at every cut.
    Entropy,
    /// Two-point correlation series at the configured anchor.
    Correlations,
    /// Schmidt spectrum at the configured cut.
    Schmidt,
    /// Draw photon-count samples.
    Sample,
    /// Compare the factorized state against the dense reference.
    OracleCheck,
    /// Emit the tensor-network graph and its treewidth report.
    Graph {
        /// Analyze an edge-list file instead of the configured architecture.
        #[arg(long, value_name = "PATH")]
        edges: Option<PathBuf>,
    },
    /// Grow (d, chi) until the tracked observables stop moving.
    Converge,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cli.out.display())))?;

    // The only mode that works without a config: analyzing a bare edge list.
    if let Command::Graph { edges: Some(path) } = &cli.command {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let graph = timebin_core::graph::TnGraph::parse_edge_list(&text)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let body = graph_summary(&graph, None)?;
        let out = cli.out.join("graph_report.txt");
        std::fs::write(&out, &body)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
        print!("{body}");
        return Ok(());
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let resolved = RunConfig::parse(&text)?.resolve(cli.seed)?;

    let studies: Vec<Study> = match &cli.command {
        Command::Simulate => {
            let studies = resolved.outputs.studies.clone();
            if studies.is_empty() {
                return Err(CliError::Config(
                    "outputs.studies is empty; nothing to simulate".into(),
                ));
            }
            studies
        }
        Command::Entropy => vec![Study::EntropyProfile],
        Command::Correlations => vec![Study::Correlations],
        Command::Schmidt => vec![Study::Schmidt],
        Command::Sample => vec![Study::Samples],
        Command::Graph { .. } => vec![Study::GraphReport],
        Command::OracleCheck | Command::Converge => Vec::new(),
    };

    match &cli.command {
        Command::OracleCheck => {
            let ctx = StudyContext::new(resolved, cli.out.clone(), &[])?;
            let (path, pass, worst) = oracle_check(&ctx)?;
            println!(
                "oracle-check: {} (max deviation {worst:.3e}) -> {}",
                if pass { "PASS" } else { "FAIL" },
                path.display()
            );
            if !pass {
                return Err(CliError::Numeric(format!(
                    "factorized state deviates from the dense reference by {worst:.3e}"
                )));
            }
            Ok(())
        }
        Command::Converge => {
            let ctx = StudyContext::new(resolved, cli.out.clone(), &[])?;
            let (path, converged) = convergence_study(&ctx)?;
            println!(
                "converge: {} -> {}",
                if converged { "converged" } else { "not converged" },
                path.display()
            );
            Ok(())
        }
        _ => {
            let ctx = StudyContext::new(resolved, cli.out.clone(), &studies)?;
            run_studies(&ctx, &studies, cli.threads.max(1))?;
            Ok(())
        }
    }
}

fn run_studies(ctx: &StudyContext, studies: &[Study], threads: usize) -> Result<(), CliError> {
    if threads <= 1 || studies.len() <= 1 {
        for &study in studies {
            let paths = ctx.run(study)?;
            report(study, &paths);
        }
        return Ok(());
    }
    // Studies write disjoint files, so batches of them can run in parallel.
    for chunk in studies.chunks(threads) {
        let results: Vec<(Study, Result<Vec<PathBuf>, CliError>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&study| (study, scope.spawn(move || ctx.run(study))))
                    .collect();
                handles
                    .into_iter()
                    .map(|(study, handle)| (study, handle.join().expect("study thread panicked")))
                    .collect()
            });
        for (study, result) in results {
            let paths = result?;
            report(study, &paths);
        }
    }
    Ok(())
}

fn report(study: Study, paths: &[PathBuf]) {
    let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    println!("{}: {}", study.name(), names.join(", "));
}
