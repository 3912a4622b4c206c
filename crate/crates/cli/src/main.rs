//! `i2s`: turn an infographic image into an editable slide.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use i2s_core::config::{ConfigOverrides, PipelineConfig};
use tracing_subscriber::EnvFilter;

/// Stable exit codes.
pub mod exit {
    pub const GENERIC: u8 = 1;
    pub const IO: u8 = 2;
    pub const VALIDATION: u8 = 3;
    pub const SERVICE: u8 = 4;
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "i2s", version, about = "Reconstruct infographic images as editable slides")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Flat JSON config file; flags override it and environment variables override flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Slide page size in points, e.g. 720x405.
    #[arg(long, global = true, value_name = "WxH")]
    pub page_size: Option<String>,
    /// Ask the backend for a background sample and place a synthesized background.
    #[arg(long, global = true)]
    pub synthesize_background: bool,
    /// Widen text boxes into free space to the right.
    #[arg(long, global = true)]
    pub expand_widths: bool,
    /// Join vertically stacked text fragments before building.
    #[arg(long, global = true)]
    pub merge_adjacent_text: bool,
    /// Right/bottom padding for image crops, in pixels.
    #[arg(long, global = true, value_name = "N")]
    pub pad_px: Option<u32>,
    /// Replay backend replies from numbered files in this directory.
    #[arg(long, global = true)]
    pub fixture_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model_id: Option<String>,
    #[arg(long, global = true)]
    pub backend_url: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            cache_dir: self.cache_dir.clone(),
            page_size: self.page_size.clone(),
            synthesize_background: self.synthesize_background.then_some(true),
            expand_widths: self.expand_widths.then_some(true),
            merge_adjacent_text: self.merge_adjacent_text.then_some(true),
            pad_px: self.pad_px,
            backend_url: self.backend_url.clone(),
            model_id: self.model_id.clone(),
            fixture_dir: self.fixture_dir.clone(),
            presentation_id: None,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract a layout from an image and cache raw, validated and overlay artifacts.
    Extract {
        image: PathBuf,
    },
    /// Build the slide request batch for an image and run it, or write it with --dry-run.
    Build {
        image: PathBuf,
        /// Use this layout file instead of running extraction.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Write the batch to a file instead of calling the service. No network access.
        #[arg(long)]
        dry_run: bool,
        /// Batch output path for --dry-run (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        presentation_id: Option<String>,
        /// Delete existing objects with the same ids before creating them.
        #[arg(long)]
        replace_existing: bool,
    },
    /// Score predicted layouts against ground truth.
    Eval {
        #[arg(long, requires = "pred", conflicts_with = "run_dir")]
        gt: Option<PathBuf>,
        #[arg(long, requires = "gt")]
        pred: Option<PathBuf>,
        /// A run directory, or a directory of run directories, holding
        /// gt_region.json, pred_region.json and optionally timings.json.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        /// Report path (default: eval_report.json in the run directory or the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw region boxes and ids over an image.
    Overlay {
        image: PathBuf,
        layout: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs, presentation_id: Option<String>) -> Result<PipelineConfig, Failure> {
    let mut flags = common.overrides();
    flags.presentation_id = presentation_id;
    PipelineConfig::resolve(common.config.as_deref(), &flags, |k| std::env::var(k).ok()).map_err(|e| {
        let code = match e {
            i2s_core::config::ConfigError::Io { .. } => exit::IO,
            _ => exit::VALIDATION,
        };
        Failure::new(code, e.to_string())
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { image } => {
            let cfg = load_config(&cli.common, None)?;
            commands::extract(&cfg, &image)
        }
        Command::Build { image, layout, dry_run, out, presentation_id, replace_existing } => {
            let cfg = load_config(&cli.common, presentation_id)?;
            commands::build(&cfg, &image, layout.as_deref(), dry_run, out.as_deref(), replace_existing)
        }
        Command::Eval { gt, pred, run_dir, out } => {
            let cfg = load_config(&cli.common, None)?;
            let source = match (gt, pred, run_dir) {
                (Some(gt), Some(pred), None) => commands::EvalSource::Pair { gt, pred },
                (None, None, Some(dir)) => commands::EvalSource::RunDir(dir),
                _ => return Err(Failure::new(exit::GENERIC, "give either --gt and --pred, or --run-dir")),
            };
            commands::eval(&cfg, &source, out.as_deref())
        }
        Command::Overlay { image, layout, out } => commands::overlay(&image, &layout, out.as_deref()),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("I2S_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
