//! `old`: opinion-leader detection pipeline.
//!
//! Stages run one subcommand at a time against a shared output directory:
//! `ingest`, `embed`, `rank`, `sir`, `combine`, `report`.

pub mod cache;
pub mod config;
pub mod error;
pub mod report;
pub mod stages;
pub mod store;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::PipelineConfig;
pub use error::{CliError, EXIT_IO, EXIT_NONCONVERGENCE, EXIT_OK, EXIT_VALIDATION};
use stages::Context;

#[derive(Debug, Parser)]
#[command(name = "old", version, about = "Opinion-leader detection with graph embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Named parameter preset: twitter-style or twitch-style.
    #[arg(long, global = true)]
    pub preset: Option<String>,

    /// Overrides rng_seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; 1 makes every stage deterministic.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Replace artifacts whose contents changed.
    #[arg(long, global = true)]
    pub force: bool,

    /// Output directory; overrides output_dir from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Record per-stage wall-clock seconds in the manifest.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Load edge lists and attributes into the graph cache.
    Ingest,
    /// Train the configured embeddings.
    Embed,
    /// Rank nodes for every (embedding, ranker) pair.
    Rank,
    /// Evaluate each ranking's top nodes as SIR seeds.
    Sir,
    /// Merge rankings into the combined leader list.
    Combine,
    /// Summarise all artifacts.
    Report,
}

const DEFAULT_OUT: &str = "old-out";

fn load_config(cli: &Cli) -> Result<(PipelineConfig, PathBuf), CliError> {
    let Some(path) = &cli.config else {
        return Err(CliError::Validation("--config <path> is required".into()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = PipelineConfig::from_toml_str(&text, cli.preset.as_deref())
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_owned();
    Ok((cfg, dir))
}

fn output_dir(cli: &Cli, cfg: Option<&PipelineConfig>, config_dir: &Path) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    match cfg.and_then(|c| c.output_dir.as_ref()) {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => config_dir.join(p),
        None => config_dir.join(DEFAULT_OUT),
    }
}

fn dispatch(cli: &Cli, workers: usize) -> Result<(), CliError> {
    if cli.command == Command::Report {
        let out = match (&cli.out, &cli.config) {
            (Some(out), _) => out.clone(),
            (None, Some(_)) => {
                let (cfg, dir) = load_config(cli)?;
                output_dir(cli, Some(&cfg), &dir)
            }
            (None, None) => return Err(CliError::Validation("report needs --out or --config".into())),
        };
        return report::report(&out, cli.force, cli.timings);
    }
    let (cfg, config_dir) = load_config(cli)?;
    let ctx = Context {
        out: output_dir(cli, Some(&cfg), &config_dir),
        cfg,
        config_dir,
        force: cli.force,
        timings: cli.timings,
        workers,
    };
    match cli.command {
        Command::Ingest => stages::ingest(&ctx),
        Command::Embed => stages::embed(&ctx),
        Command::Rank => stages::rank(&ctx),
        Command::Sir => stages::sir(&ctx),
        Command::Combine => stages::combine(&ctx),
        Command::Report => unreachable!(),
    }
}

/// Parses `args` (including the program name) and runs one stage.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli, n))),
        None => dispatch(&cli, rayon::current_num_threads()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
