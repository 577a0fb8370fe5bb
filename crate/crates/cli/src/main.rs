use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use germflow_core::document::{bundled, DocumentError, GermSpecDocument};
use germflow_core::dynamics::write_orbit_csv;
use germflow_core::pipeline::{analyze, Check, PipelineError, Settings};
use serde::Serialize;

const EXIT_STRICT: u8 = 4;

#[derive(Parser)]
#[command(name = "germflow", version, about = "Analyze and simulate multi-resonant germs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonance structure, normal form and resonant coefficient table.
    Analyze(RunArgs),
    /// Characteristic directions, directors and attraction flags.
    Certify(RunArgs),
    /// Basin statistics, Fatou estimate and orbit CSV dumps.
    Simulate(RunArgs),
    /// Fatou coordinate estimate.
    Fatou(RunArgs),
    /// Leau-Fatou flower coverage for one-resonant normal forms.
    Flower(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Germ document (JSON), or `@name` for a bundled example.
    spec: String,
    /// Degree bound for the resonance monoid.
    #[arg(long)]
    bound: Option<usize>,
    /// Jet order used for normalization.
    #[arg(long)]
    order: Option<usize>,
    /// Petal index (1-based).
    #[arg(long)]
    petal: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 4 when a numerical check fails.
    #[arg(long)]
    strict: bool,
    /// Directory for CSV and JSON output files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> Settings {
        Settings {
            bound: self.bound,
            order: self.order,
            petal: self.petal,
            samples: self.samples,
            seed: self.seed,
            max_iter: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error[{}]: {err}", err.code());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("GERMFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load(spec: &str) -> Result<GermSpecDocument, PipelineError> {
    let doc = match spec.strip_prefix('@') {
        Some(name) => GermSpecDocument::from_json(
            bundled(name).ok_or_else(|| PipelineError::Usage(format!("no bundled example named {name}")))?,
        )?,
        None => GermSpecDocument::load(Path::new(spec))?,
    };
    Ok(doc)
}

fn run(command: Command) -> Result<u8, PipelineError> {
    let (args, kind) = match &command {
        Command::Analyze(a) => (a, "analyze"),
        Command::Certify(a) => (a, "certify"),
        Command::Simulate(a) => (a, "simulate"),
        Command::Fatou(a) => (a, "fatou"),
        Command::Flower(a) => (a, "flower"),
    };
    let analysis = analyze(load(&args.spec)?, &args.settings())?;
    match kind {
        "analyze" => emit(args, &analysis.report(), &[]),
        "certify" => {
            let report = analysis.certify()?;
            let checks = [Check {
                name: "parabolically attracting".into(),
                passed: report.certification.parabolically_attracting,
                value: None,
                threshold: None,
            }];
            emit(args, &report, &checks)
        }
        "simulate" => {
            let report = analysis.simulate()?;
            if let Some(dir) = &args.out {
                create_dir(dir)?;
                for (k, trace) in report.orbits.iter().enumerate() {
                    let path = dir.join(format!("orbit_{}.csv", k + 1));
                    let file = fs::File::create(&path).map_err(|e| io_error(&path, e))?;
                    let stride = (trace.len() / 2000).max(1);
                    write_orbit_csv(trace, stride, BufWriter::new(file)).map_err(|e| io_error(&path, e))?;
                }
            }
            emit(args, &report, &report.checks)
        }
        "fatou" => {
            let report = analysis.fatou()?;
            emit(args, &report, &report.checks)
        }
        _ => {
            let run = analysis.flower()?;
            emit(args, &run, &run.checks)
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn io_error(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Document(DocumentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Prints the report, mirrors it to `--out/report.json`, and applies
/// `--strict` to the checks.
fn emit<T: Serialize>(args: &RunArgs, report: &T, checks: &[Check]) -> Result<u8, PipelineError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join("report.json");
        fs::write(&path, format!("{text}\n")).map_err(|e| io_error(&path, e))?;
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        eprintln!("check failed: {}", c.name);
    }
    if args.strict && !failed.is_empty() {
        return Ok(EXIT_STRICT);
    }
    Ok(0)
}
