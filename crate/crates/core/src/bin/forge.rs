use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use ilforge::config::PipelineConfig;
use ilforge::dom::PruneRules;
use ilforge::pipeline::{run_pipeline, warc_stats, PipelineStage};

#[derive(Parser)]
#[command(name = "forge", version, about = "Curate web archives into interleaved image-text documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// All stages, then corpus statistics.
    Run(StageArgs),
    /// Read archives, keep HTML responses, deduplicate URLs.
    Ingest(StageArgs),
    /// Parse, prune, assemble and route by language.
    Refine(StageArgs),
    /// Image, paragraph and document filters.
    Filter(StageArgs),
    /// Download images and re-check their sizes.
    Fetch(StageArgs),
    /// Extract alt-text caption pairs.
    Cap(StageArgs),
    /// Corpus statistics (runs any missing earlier stage).
    Stats(StageArgs),
    /// Print record counters for archives as key=value lines.
    WarcStats { files: Vec<PathBuf> },
}

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    /// Pruning rules file, overriding the config.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Eight-word paragraph minimum.
    #[arg(long = "strict-8")]
    strict_8: bool,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long = "timeout-ms")]
    timeout_ms: Option<u64>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
    /// Serve images from the cache only.
    #[arg(long)]
    offline: bool,
}

fn load(args: &StageArgs) -> Result<PipelineConfig, String> {
    let mut config = PipelineConfig::load(&args.config, std::env::vars()).map_err(|e| e.to_string())?;
    if let Some(path) = &args.rules {
        config.rules = PruneRules::load(path).map_err(|e| e.to_string())?;
    }
    if args.strict_8 {
        config.thresholds.para_min_words = 8;
        config.thresholds.validate().map_err(|e| e.to_string())?;
    }
    if let Some(n) = args.parallelism {
        if n == 0 {
            return Err("--parallelism must be at least 1".into());
        }
        config.fetch.parallelism = n;
    }
    if let Some(ms) = args.timeout_ms {
        config.fetch.timeout = Duration::from_millis(ms);
    }
    if let Some(n) = args.retries {
        config.fetch.max_retries = n;
    }
    if let Some(dir) = &args.cache_dir {
        config.fetch.cache_dir = Some(dir.clone());
    }
    config.fetch.offline |= args.offline;
    config.refresh_fingerprint();
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, until) = match &cli.command {
        Command::Run(a) | Command::Stats(a) => (a, PipelineStage::Stats),
        Command::Ingest(a) => (a, PipelineStage::Ingest),
        Command::Refine(a) => (a, PipelineStage::Refine),
        Command::Filter(a) => (a, PipelineStage::Filter),
        Command::Fetch(a) => (a, PipelineStage::Revalidate),
        Command::Cap(a) => (a, PipelineStage::Cap),
        Command::WarcStats { files } => {
            return match warc_stats(files) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("forge: {e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let config = match load(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("forge: config: {e}");
            return ExitCode::from(2);
        }
    };
    let summary = match run_pipeline(&config, until) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("forge: {e}");
            return ExitCode::from(2);
        }
    };
    for b in &summary.batches {
        println!(
            "batch={} records_in={} skipped={} rejects={} docs_out={}{}",
            b.batch_id,
            b.records_in,
            b.skipped,
            b.rejects_total(),
            b.docs_out,
            b.failed.as_ref().map_or(String::new(), |f| format!(" failed={f:?}"))
        );
    }
    ExitCode::from(summary.exit_code() as u8)
}
