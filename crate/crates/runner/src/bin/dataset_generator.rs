//! Converts datasets to `.slam` files, or renders the synthetic room.
//!
//! ```text
//! dataset-generator --format tum|icl-nuim|euroc|synthetic --input <dir>|--config <file> --output <file.slam>
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use slambench_core::ingest::{
    convert_euroc, convert_icl_nuim, convert_tum, generate_synthetic, IngestError, SyntheticSceneConfig, TumIntrinsics, TumOptions,
};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Tum,
    IclNuim,
    Euroc,
    Synthetic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Auto,
    Freiburg1,
    Freiburg2,
    Freiburg3,
    Ros,
}

#[derive(Parser)]
#[command(name = "dataset-generator", about = "Build .slam datafiles from dataset directories or the synthetic room")]
struct Cli {
    #[arg(long, value_enum)]
    format: Format,
    /// Dataset directory (tum, icl-nuim, euroc).
    #[arg(long, conflicts_with = "config")]
    input: Option<PathBuf>,
    /// `key = value` scene description (synthetic); defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    /// TUM camera intrinsics.
    #[arg(long, value_enum, default_value = "auto")]
    intrinsics: Preset,
}

fn run(cli: &Cli) -> Result<slambench_core::ingest::ConversionSummary, IngestError> {
    let input = || {
        cli.input
            .as_deref()
            .ok_or_else(|| IngestError::InvalidConfig("--input <dir> is required for this format".into()))
    };
    match cli.format {
        Format::Tum => {
            let intrinsics = match cli.intrinsics {
                Preset::Auto => TumIntrinsics::Auto,
                Preset::Freiburg1 => TumIntrinsics::Freiburg1,
                Preset::Freiburg2 => TumIntrinsics::Freiburg2,
                Preset::Freiburg3 => TumIntrinsics::Freiburg3,
                Preset::Ros => TumIntrinsics::RosDefault,
            };
            let options = TumOptions {
                intrinsics,
                ..TumOptions::default()
            };
            convert_tum(input()?, &cli.output, &options)
        }
        Format::IclNuim => convert_icl_nuim(input()?, &cli.output, None),
        Format::Euroc => convert_euroc(input()?, &cli.output),
        Format::Synthetic => {
            let cfg = match &cli.config {
                Some(path) => SyntheticSceneConfig::load(path)?,
                None => SyntheticSceneConfig::default(),
            };
            generate_synthetic(&cfg, &cli.output)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            for note in &summary.notes {
                eprintln!("note: {note}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dataset-generator: {e}");
            ExitCode::FAILURE
        }
    }
}
