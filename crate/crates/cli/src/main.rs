use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use provthreads_cli::{run_pipeline, RunSettings};
use provthreads_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "provthreads", version, about = "Topic threads from analyst interaction logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model, label and segment the log, and write JSON/SVG artifacts.
    Run(RunArgs),
    /// Serve the HTTP API for the sessions in a config file.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `listen` from the config.
        #[arg(long)]
        listen: Option<String>,
        /// Overrides `data_dir` from the config.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    tau_count: Option<usize>,
    #[arg(long)]
    tau_gap_ms: Option<u64>,
}

impl RunArgs {
    fn settings(self) -> Result<RunSettings> {
        let file = match &self.config {
            Some(path) => RunSettings::load(path)?,
            None => RunSettings::default(),
        };
        let flags = RunSettings {
            corpus: self.corpus,
            log: self.log,
            out: self.out,
            topics: self.topics,
            seed: self.seed,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            tau_count: self.tau_count,
            tau_gap_ms: self.tau_gap_ms,
        };
        Ok(flags.or(file))
    }
}

fn run(args: RunArgs) -> Result<()> {
    let opts = args.settings()?.resolve()?;
    for path in run_pipeline(&opts)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn serve(config: PathBuf, listen: Option<String>, data_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = ServiceConfig::load(&config)?;
    if let Some(listen) = listen {
        cfg.listen = listen;
    }
    if let Some(dir) = data_dir {
        cfg.data_dir = dir;
    }
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let runtime = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
    runtime.block_on(provthreads_service::serve(cfg))?;
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Serve {
            config,
            listen,
            data_dir,
        } => serve(config, listen, data_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
