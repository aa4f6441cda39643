use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{Result, ServiceError};
use crate::pipeline;
use crate::store::{Store, DATA_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "drjudge", version, about = "Score and rank 2D projections of high-dimensional data")]
pub struct Cli {
    /// Pipeline config, TOML or JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Artifact root.
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = "drjudge-data")]
    pub out: PathBuf,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load datasets and trials listed in the config.
    Ingest,
    /// Run the generator manifest on stored datasets.
    Project {
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Compute raw and normalized metric vectors.
    Measure {
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Fit the forest, pairwise and ranking models on all trials.
    Train,
    /// Leave-one-dataset-out and leave-one-technique-out cross-validation.
    Evaluate,
    /// Rank a dataset's projections with a trained model.
    Rank {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value = "ranker")]
        model: String,
    },
    /// Lay out projections by their metrics with the score field.
    Metamap {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value = "ranker")]
        model: String,
    },
    /// Every batch stage from ingest to metamap.
    Run {
        #[arg(long, default_value = "ranker")]
        model: String,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

impl Cli {
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match (&self.config, self.seed) {
            (Some(path), _) => PipelineConfig::load(path)?,
            (None, Some(seed)) => PipelineConfig::with_seed(seed),
            (None, None) => return Err(ServiceError::Config("a seed is required: pass --config or --seed".into())),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised");
        }
    }
    let cfg = cli.pipeline_config()?;
    let store = Store::open(&cli.out)?;
    let manifests = match &cli.command {
        Command::Ingest => vec![pipeline::ingest(&store, &cfg)?],
        Command::Project { dataset } => vec![pipeline::project(&store, &cfg, dataset.as_deref())?],
        Command::Measure { dataset } => vec![pipeline::measure_stage(&store, &cfg, dataset.as_deref())?],
        Command::Train => vec![pipeline::train(&store, &cfg)?],
        Command::Evaluate => vec![pipeline::evaluate(&store, &cfg)?],
        Command::Rank { dataset, model } => vec![pipeline::rank(&store, &cfg, dataset.as_deref(), model)?],
        Command::Metamap { dataset, model } => vec![pipeline::metamap(&store, &cfg, dataset.as_deref(), model)?],
        Command::Run { model } => pipeline::run_all(&store, &cfg, model)?,
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| ServiceError::io("tokio runtime", e))?;
            rt.block_on(crate::http::serve(addr, store, cfg))?;
            return Ok(());
        }
    };
    for m in manifests {
        println!("{}: {} outputs, {} skipped", m.command, m.outputs.len(), m.skipped.len());
        for (what, why) in &m.skipped {
            println!("  skipped {what}: {why}");
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
