//! Runs a parameter sweep described by a JSON `SweepSpec` and prints every
//! sample, marking the Pareto-optimal ones.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use slambench_runner::{run_sweep, SweepSpec};

#[derive(Parser)]
#[command(name = "sb_sweep", about = "Accuracy/speed parameter sweep")]
struct Cli {
    /// Sweep description (JSON).
    spec: PathBuf,
    /// Write samples and front as JSON here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Overrides the worker count of the spec.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("sb_sweep: {}: {e}", cli.spec.display());
            return ExitCode::FAILURE;
        }
    };
    let mut spec: SweepSpec = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("sb_sweep: {}: {e}", cli.spec.display());
            return ExitCode::from(2);
        }
    };
    if let Some(w) = cli.workers {
        spec.workers = w;
    }
    let outcome = match run_sweep(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("sb_sweep: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("sample\tpareto\tmean_duration\tate_rmse\tparameters");
    for s in &outcome.samples {
        let params: Vec<String> = s.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let on_front = outcome.front.indices.contains(&s.index);
        match (&s.objectives, &s.failure) {
            (Some(o), _) => println!("{}\t{}\t{:.6}\t{:.10}\t{}", s.index, if on_front { "*" } else { "" }, o.duration, o.ate, params.join(" ")),
            (None, f) => println!("{}\t\tnan\tnan\t{}\t# failed: {}", s.index, params.join(" "), f.as_deref().unwrap_or("?")),
        }
    }
    if outcome.samples.iter().any(|s| !s.timing_reliable) {
        eprintln!("note: configurations ran concurrently; durations are not comparable to sequential runs");
    }
    if let Some(path) = cli.output {
        let json = serde_json::to_string_pretty(&outcome).expect("sweep outcome serialises");
        if let Err(e) = std::fs::write(&path, json + "\n") {
            eprintln!("sb_sweep: {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}
