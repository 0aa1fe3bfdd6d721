//! Text-only benchmark front end.
//!
//! ```text
//! sb_loader -i <file.slam> -load <library> [-load <library>]... [--<algo>-<param> <val>]...
//!           [--frame-limit N] [--max-dt S] [--memory-probe alloc|rss] [--power-trace <file>]
//!           [-o <report>] [--format json|csv] [--serve <addr>] [--test-mode] [--ui] [--seed N]
//! ```
//!
//! The argument grammar (single-dash long options and per-algorithm
//! parameter flags) is parsed by hand.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use slambench_core::metrics::MemoryProbeKind;
use slambench_runner::overrides::{describe_library, resolve_overrides, AlgorithmDescription};
use slambench_runner::service::{AppState, BackgroundService, ServiceConfig};
use slambench_runner::table::Table;
use slambench_runner::{export_reports, run_benchmark_with, AlgorithmSpec, ReportFormat, RunReport, RunSpec};

const USAGE: &str = "usage: sb_loader -i <file.slam> -load <library> [-load <library>]... [--<algo>-<param> <value>]...
                 [--frame-limit N] [--max-dt S] [--memory-probe alloc|rss] [--power-trace <file>]
                 [-o <report>] [--format json|csv] [--serve <addr>] [--test-mode] [--ui] [--seed N]

  --test-mode   also deliver ground-truth frames to the algorithms
  --ui          tell algorithms a viewer is attached
  --no-rer      skip the reconstruction error at the end of the run";

#[derive(Default)]
struct Options {
    input: Option<PathBuf>,
    libraries: Vec<PathBuf>,
    overrides: Vec<(String, String)>,
    frame_limit: Option<usize>,
    max_dt: Option<f64>,
    memory_probe: Option<MemoryProbeKind>,
    power_trace: Option<PathBuf>,
    output: Option<PathBuf>,
    format: Option<ReportFormat>,
    serve: Option<SocketAddr>,
    test_mode: bool,
    ui: bool,
    no_rer: bool,
    seed: u64,
}

fn parse_args(args: impl IntoIterator<Item = String>) -> Result<Option<Options>, String> {
    let mut opts = Options::default();
    let mut it = args.into_iter();
    fn value(it: &mut impl Iterator<Item = String>, flag: &str) -> Result<String, String> {
        it.next().ok_or_else(|| format!("{flag} needs a value"))
    }
    fn parsed<T: std::str::FromStr>(it: &mut impl Iterator<Item = String>, flag: &str) -> Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        let v = value(it, flag)?;
        v.parse().map_err(|e| format!("{flag} {v}: {e}"))
    }
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "-h" | "--help" => return Ok(None),
            "-i" | "--input" => opts.input = Some(value(&mut it, &arg)?.into()),
            "-load" | "--load" => opts.libraries.push(value(&mut it, &arg)?.into()),
            "-o" | "--output" => opts.output = Some(value(&mut it, &arg)?.into()),
            "--frame-limit" => opts.frame_limit = Some(parsed(&mut it, &arg)?),
            "--max-dt" => opts.max_dt = Some(parsed(&mut it, &arg)?),
            "--memory-probe" => opts.memory_probe = Some(parsed(&mut it, &arg)?),
            "--power-trace" => opts.power_trace = Some(value(&mut it, &arg)?.into()),
            "--format" => opts.format = Some(parsed(&mut it, &arg)?),
            "--serve" => opts.serve = Some(parsed(&mut it, &arg)?),
            "--seed" => opts.seed = parsed(&mut it, &arg)?,
            "--test-mode" => opts.test_mode = true,
            "--ui" => opts.ui = true,
            "--no-rer" => opts.no_rer = true,
            other => match other.strip_prefix("--") {
                Some(key) if !key.is_empty() => {
                    let (key, v) = match key.split_once('=') {
                        Some((k, v)) => (k.to_string(), v.to_string()),
                        None => (key.to_string(), value(&mut it, other)?),
                    };
                    opts.overrides.push((key, v));
                }
                _ => return Err(format!("unexpected argument `{other}`")),
            },
        }
    }
    Ok(Some(opts))
}

fn build_spec(opts: &Options) -> Result<RunSpec, String> {
    let input = opts.input.clone().ok_or("missing -i <file.slam>")?;
    if opts.libraries.is_empty() {
        return Err("missing -load <library>".into());
    }
    // a library that cannot be described still gets its (failing) run
    let described: Vec<AlgorithmDescription> = opts
        .libraries
        .iter()
        .map(|lib| {
            describe_library(lib).unwrap_or_else(|e| {
                log::warn!("{e}");
                AlgorithmDescription {
                    name: slambench_core::api::library_name(lib),
                    library: lib.clone(),
                    parameters: Vec::new(),
                }
            })
        })
        .collect();
    let params = resolve_overrides(&described, &opts.overrides).map_err(|e| e.to_string())?;
    let mut spec = RunSpec::new(
        input,
        described
            .into_iter()
            .zip(params)
            .map(|(d, p)| AlgorithmSpec {
                library: d.library,
                name: None,
                parameters: p,
            })
            .collect(),
    );
    spec.frame_limit = opts.frame_limit;
    if let Some(dt) = opts.max_dt {
        spec.max_dt = dt;
    }
    if let Some(kind) = opts.memory_probe {
        spec.memory_probe = kind;
    }
    spec.power_trace = opts.power_trace.clone();
    spec.forward_ground_truth = opts.test_mode;
    spec.ui_enabled = opts.ui;
    spec.reconstruction_error = !opts.no_rer;
    spec.seed = opts.seed;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn print_summary(reports: &[RunReport]) {
    for r in reports {
        let s = &r.summary;
        let f = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        match &r.metadata.failure {
            Some(cause) => eprintln!("{}: FAILED: {cause}", r.metadata.algorithm),
            None => eprintln!(
                "{}: frames {} processed {} ATE rmse {} mean {} max {} aligned {} RPE {} m / {} rad, fps {}, peak memory {} B{}{}",
                r.metadata.algorithm,
                s.rows.frames,
                s.rows.processed_frames,
                f(s.rows.ate_rmse),
                f(s.rows.ate_mean),
                f(s.rows.ate_max),
                f(s.ate_aligned_rmse),
                f(s.rpe_translation_rmse),
                f(s.rpe_rotation_rmse),
                f(s.rows.mean_fps),
                s.rows.peak_memory.map_or("n/a".into(), |m| m.to_string()),
                s.rows.mean_power.map_or(String::new(), |p| format!(", power {p:.3} W")),
                s.rer.map_or(String::new(), |v| format!(", RER {v:.6} m")),
            ),
        }
    }
}

fn serve(spec: RunSpec, addr: SocketAddr) -> ExitCode {
    let state = AppState::new(ServiceConfig {
        libraries: spec.algorithms.iter().map(|a| a.library.clone()).collect(),
        datasets: vec![spec.datafile.clone()],
    });
    let id = match state.create_session(spec) {
        Ok(id) => id,
        Err(e) => {
            eprintln!("sb_loader: {e}");
            return ExitCode::FAILURE;
        }
    };
    let service = match BackgroundService::start(addr, state) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("sb_loader: cannot serve on {addr}: {e}");
            return ExitCode::FAILURE;
        }
    };
    eprintln!("serving on {} (session {id}, paused)", service.url(""));
    loop {
        std::thread::park();
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let opts = match parse_args(std::env::args().skip(1)) {
        Ok(Some(o)) => o,
        Ok(None) => {
            println!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("sb_loader: {e}\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    let spec = match build_spec(&opts) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("sb_loader: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(addr) = opts.serve {
        return serve(spec, addr);
    }

    let table = Table::new(spec.algorithms.iter().map(AlgorithmSpec::display_name).collect());
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "{}", table.header());
    let reports = run_benchmark_with(spec, |_, step| {
        let _ = writeln!(out, "{}", table.row(step));
    });
    let _ = out.flush();
    drop(out);
    let reports = match reports {
        Ok(r) => r,
        Err(e) => {
            eprintln!("sb_loader: {e}");
            return ExitCode::FAILURE;
        }
    };
    print_summary(&reports);
    if let Some(path) = &opts.output {
        let format = opts.format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        });
        if let Err(e) = export_reports(&reports, path, format) {
            eprintln!("sb_loader: {e}");
            return ExitCode::FAILURE;
        }
    }
    if reports.iter().any(|r| r.metadata.failure.is_some()) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
