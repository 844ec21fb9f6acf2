//! Command-line front end: run experiments, resume interrupted segments,
//! merge worker checkpoints, analyze histograms, export data, and self-test
//! against the built-in reference vectors.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime fault, 3 selftest failure.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use pw32::orchestrator::checkpoint::Checkpoint;
use pw32::{
    analyze, resume_segment, run, Analysis, ExtremesRecord, Histogram, RunConfig, RunOutput,
    SplitStrategy, WaringCandidate, WaringConfirmation,
};

mod selftest;

#[derive(Parser)]
#[command(name = "pw32", version, about = "Exact binary stream of the fractional parts of (3/2)^n with uniformity analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write histogram, analysis, runtime and
    /// monitor files into the output directory
    Run {
        /// Last exponent to bin (the run covers 1..=n)
        #[arg(long)]
        n: u64,
        /// Histogram bins as a power of two: 2^k bins
        #[arg(long = "bins-log2")]
        bins_log2: u32,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Iterations between checkpoint writes
        #[arg(long = "checkpoint-interval", default_value_t = 1_000_000)]
        checkpoint_interval: u64,
        /// Prior probability of the uniformity hypothesis
        #[arg(long, default_value_t = 0.5)]
        psi0: f64,
        /// Balance segment lengths by quadratic work instead of evenly
        #[arg(long)]
        balanced: bool,
        /// Skip the finite-n Bayes bound (the asymptotic bound is still
        /// computed)
        #[arg(long = "no-finite")]
        no_finite: bool,
        /// Output directory (PW32_OUT overrides the default)
        #[arg(long, env = "PW32_OUT", default_value = "pw32-out")]
        out: PathBuf,
    },
    /// Continue an interrupted segment from its checkpoint file
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "checkpoint-interval", default_value_t = 1_000_000)]
        checkpoint_interval: u64,
        /// Expected bins-log2; refused if it disagrees with the checkpoint
        #[arg(long = "bins-log2")]
        bins_log2: Option<u32>,
        /// Optional directory for the completed segment's histogram files
        #[arg(long, env = "PW32_OUT")]
        out: Option<PathBuf>,
    },
    /// Merge completed worker checkpoints into one histogram
    Merge {
        /// Output directory (PW32_OUT overrides the default)
        #[arg(long, env = "PW32_OUT", default_value = "pw32-out")]
        out: PathBuf,
        /// Checkpoint files of adjacent completed segments
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
    },
    /// Run the statistical analysis over an exported histogram JSON
    Analyze {
        #[arg(long)]
        histogram: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        psi0: f64,
        #[arg(long = "no-finite")]
        no_finite: bool,
        /// Write the analysis JSON here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the histogram inside a checkpoint as CSV or JSON
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Write here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the built-in reference vectors and print a pass/fail table
    Selftest,
}

enum CliError {
    Usage(String),
    Runtime(String),
    SelftestFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::SelftestFailed => 3,
        }
    }
}

fn usage(msg: impl Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn runtime(msg: impl Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("usage error: {msg}"),
                CliError::Runtime(msg) => eprintln!("error: {msg}"),
                CliError::SelftestFailed => eprintln!("selftest failed"),
            }
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            n,
            bins_log2,
            workers,
            checkpoint_interval,
            psi0,
            balanced,
            no_finite,
            out,
        } => cmd_run(
            n,
            bins_log2,
            workers,
            checkpoint_interval,
            psi0,
            balanced,
            no_finite,
            &out,
        ),
        Command::Resume {
            checkpoint,
            checkpoint_interval,
            bins_log2,
            out,
        } => cmd_resume(&checkpoint, checkpoint_interval, bins_log2, out.as_deref()),
        Command::Merge { out, checkpoints } => cmd_merge(&out, &checkpoints),
        Command::Analyze {
            histogram,
            psi0,
            no_finite,
            out,
        } => cmd_analyze(&histogram, psi0, no_finite, out.as_deref()),
        Command::Export {
            checkpoint,
            format,
            out,
        } => cmd_export(&checkpoint, format, out.as_deref()),
        Command::Selftest => {
            if selftest::run_all() {
                Ok(())
            } else {
                Err(CliError::SelftestFailed)
            }
        }
    }
}

/// Six significant digits for console output; the JSON files keep full
/// double precision.
fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    n: u64,
    bins_log2: u32,
    workers: usize,
    checkpoint_interval: u64,
    psi0: f64,
    balanced: bool,
    no_finite: bool,
    out: &Path,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new(n, bins_log2);
    cfg.workers = workers;
    cfg.checkpoint_interval = checkpoint_interval;
    cfg.psi0 = psi0;
    cfg.split = if balanced {
        SplitStrategy::Balanced
    } else {
        SplitStrategy::Even
    };
    cfg.validate().map_err(usage)?;
    fs::create_dir_all(out).map_err(runtime)?;
    cfg.checkpoint_dir = Some(out.join("checkpoints"));

    let output = run(&cfg).map_err(runtime)?;
    let analysis = analyze(&output.histogram, psi0, !no_finite).map_err(runtime)?;

    write_histogram_files(out, &output.histogram)?;
    write_text(&out.join("analysis.json"), &analysis.to_json())?;
    write_text(&out.join("runtime.json"), &runtime_json(&cfg, &output))?;
    write_text(
        &out.join("monitors.json"),
        &monitors_json(&output.extremes, &output.waring),
    )?;

    print_summary(&analysis);
    let secs = output.elapsed.as_secs_f64();
    println!(
        "elapsed = {:.3} s over {} segment(s); t/n^2 = {}",
        secs,
        output.segments.len(),
        sig6(secs / (n as f64) / (n as f64)),
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_resume(
    checkpoint: &Path,
    checkpoint_interval: u64,
    bins_log2: Option<u32>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if checkpoint_interval < 1 {
        return Err(usage("checkpoint interval must be at least 1"));
    }
    let ck = Checkpoint::read(checkpoint)
        .map_err(|e| runtime(format!("{}: {e}", checkpoint.display())))?;
    if let Some(k) = bins_log2 {
        if k != ck.k {
            return Err(usage(format!(
                "checkpoint has bins-log2 {} but {k} was requested",
                ck.k
            )));
        }
    }
    let already_done = ck.exponent + 1 == ck.j_end;
    let result = resume_segment(checkpoint, checkpoint_interval).map_err(runtime)?;
    let (j_start, j_end) = result.histogram.range();
    println!(
        "segment [{j_start}, {j_end}) {} at exponent {}",
        if already_done { "was already complete" } else { "completed" },
        j_end - 1
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(runtime)?;
        write_histogram_files(dir, &result.histogram)?;
        write_text(
            &dir.join("monitors.json"),
            &monitors_json(&result.extremes, &result.waring),
        )?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn cmd_merge(out: &Path, paths: &[PathBuf]) -> Result<(), CliError> {
    let mut checkpoints = Vec::with_capacity(paths.len());
    for path in paths {
        let ck =
            Checkpoint::read(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        if ck.exponent + 1 != ck.j_end {
            return Err(runtime(format!(
                "{}: segment [{}, {}) stopped at exponent {}; resume it before merging",
                path.display(),
                ck.histogram.range().0,
                ck.j_end,
                ck.exponent
            )));
        }
        checkpoints.push(ck);
    }
    checkpoints.sort_by_key(|ck| ck.histogram.range().0);

    let mut iter = checkpoints.into_iter();
    let first = iter.next().expect("clap enforces at least one checkpoint");
    let mut histogram = first.histogram;
    let mut extremes = first.extremes;
    let mut waring = first.waring;
    for ck in iter {
        histogram = histogram.merge(&ck.histogram).map_err(runtime)?;
        extremes.absorb(&ck.extremes);
        waring.extend(ck.waring);
    }

    fs::create_dir_all(out).map_err(runtime)?;
    write_histogram_files(out, &histogram)?;
    write_text(&out.join("monitors.json"), &monitors_json(&extremes, &waring))?;
    let (j_start, j_end) = histogram.range();
    println!(
        "merged [{j_start}, {j_end}): {} observations in 2^{} bins",
        histogram.total(),
        histogram.k()
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_analyze(
    histogram_path: &Path,
    psi0: f64,
    no_finite: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !(psi0 > 0.0 && psi0 < 1.0) {
        return Err(usage(format!("psi0 {psi0} outside (0, 1)")));
    }
    let text = fs::read_to_string(histogram_path)
        .map_err(|e| runtime(format!("{}: {e}", histogram_path.display())))?;
    let histogram = Histogram::from_json(&text).map_err(runtime)?;
    let analysis = analyze(&histogram, psi0, !no_finite).map_err(runtime)?;
    print_summary(&analysis);
    match out {
        Some(path) => write_text(path, &analysis.to_json())?,
        None => println!("{}", analysis.to_json()),
    }
    Ok(())
}

fn cmd_export(
    checkpoint: &Path,
    format: ExportFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let ck = Checkpoint::read(checkpoint)
        .map_err(|e| runtime(format!("{}: {e}", checkpoint.display())))?;
    let payload = match format {
        ExportFormat::Csv => {
            let mut buf = Vec::new();
            ck.histogram.write_csv(&mut buf).map_err(runtime)?;
            String::from_utf8(buf).expect("csv is ascii")
        }
        ExportFormat::Json => ck.histogram.to_json(),
    };
    match out {
        Some(path) => write_text(path, &payload)?,
        None => print!("{payload}"),
    }
    Ok(())
}

fn write_histogram_files(dir: &Path, histogram: &Histogram) -> Result<(), CliError> {
    let mut csv = Vec::new();
    histogram.write_csv(&mut csv).map_err(runtime)?;
    let mut f = fs::File::create(dir.join("histogram.csv")).map_err(runtime)?;
    f.write_all(&csv).map_err(runtime)?;
    write_text(&dir.join("histogram.json"), &histogram.to_json())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut data = text.to_owned();
    if !data.ends_with('\n') {
        data.push('\n');
    }
    fs::write(path, data).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn runtime_json(cfg: &RunConfig, output: &RunOutput) -> String {
    let secs = output.elapsed.as_secs_f64();
    let n = cfg.n_total as f64;
    serde_json::json!({
        "n": cfg.n_total,
        "bins_log2": cfg.k,
        "workers": cfg.workers,
        "segments": output.segments.len(),
        "elapsed_seconds": secs,
        "quadratic_coefficient": secs / (n * n),
    })
    .to_string()
}

fn monitors_json(extremes: &ExtremesRecord, waring: &[WaringCandidate]) -> String {
    let scale = 2f64.powi(64);
    let confirmed = waring
        .iter()
        .filter(|c| c.confirmed == WaringConfirmation::Violation)
        .count();
    serde_json::json!({
        "extremes": {
            "min_prefix": extremes.min_prefix,
            "max_prefix": extremes.max_prefix,
            "argmin_j": extremes.argmin_j,
            "argmax_j": extremes.argmax_j,
            "min_fraction": extremes.min_prefix as f64 / scale,
            "max_fraction": extremes.max_prefix as f64 / scale,
            "gap": extremes.gap() as f64 / scale,
        },
        "waring": {
            "screened": waring.len(),
            "confirmed_violations": confirmed,
            "candidates": waring,
        },
    })
    .to_string()
}

fn print_summary(analysis: &Analysis) {
    println!(
        "n = {}, bins = 2^{} = {}, df = {}",
        analysis.n,
        analysis.r.trailing_zeros(),
        analysis.r,
        analysis.df
    );
    println!("tau = {}", sig6(analysis.tau));
    println!(
        "p-value = {} ({})",
        sig6(analysis.p_value),
        match analysis.method {
            pw32::PValueMethod::ExactGamma => "exact-gamma",
            pw32::PValueMethod::WilsonHilferty => "wilson-hilferty",
        }
    );
    println!(
        "asymptotic Bayes lower bound = {} at rho* = {}",
        sig6(analysis.b_star),
        sig6(analysis.rho_star)
    );
    if let (Some(b), Some(c)) = (analysis.b_finite, analysis.c_star) {
        println!("finite-n Bayes lower bound = {} at c* = {}", sig6(b), sig6(c));
    }
    println!(
        "posterior lower bound = {} (psi0 = {})",
        sig6(analysis.posterior_lb),
        sig6(analysis.psi0)
    );
}
