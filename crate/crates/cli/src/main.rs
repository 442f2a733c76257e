//! `sumlab`: run summability functionals or theorem suites from a JSON job file.

mod job;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use sumlab_core::report::{write_csv, write_json, write_trace};
use sumlab_core::SuiteResult;

use job::{ConfigError, Format, Job};

#[derive(Debug, Parser)]
#[command(name = "sumlab", version, about = "Finite-grid summability functionals and theorem checks")]
struct Args {
    /// JSON job file.
    #[arg(long)]
    job: PathBuf,
    /// Output directory; overrides `output.path` in the job.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; overrides `output.format` in the job.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Suite id; overrides the job's task.
    #[arg(long)]
    suite: Option<String>,
    /// Accepted for interface stability. Runs are deterministic and draw no randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Write sweep traces next to the report.
    #[arg(long)]
    trace: bool,
    /// Check uniformity over every n instead of the geometric starts.
    #[arg(long)]
    full_scan: bool,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(result) => {
            let s = result.summary;
            println!(
                "{}: {} pass, {} fail, {} inconclusive, {} premise not satisfied",
                result.suite, s.pass, s.fail, s.inconclusive, s.vacuous
            );
            if s.fail > 0 {
                ExitCode::from(EXIT_FAIL)
            } else if s.inconclusive > 0 {
                ExitCode::from(EXIT_INCONCLUSIVE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn execute(args: &Args) -> Result<SuiteResult, ConfigError> {
    let job = Job::load(&args.job)?;
    let base = args.job.parent().unwrap_or(Path::new("."));
    let mut input = job.input(base)?;
    if args.full_scan {
        input.discrete_grid.full_scan = true;
    }
    let result = job::run(&job, &input, args.suite.as_deref())?;

    let out_dir = args
        .out
        .clone()
        .or_else(|| job.output.path.clone().map(|p| base.join(p)))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match args.format.as_deref() {
        Some("json") => Format::Json,
        Some(_) => Format::Csv,
        None => job.output.format,
    };
    write_outputs(&result, &out_dir, format, args.trace).map_err(|e| ConfigError(format!("output.path: {e}")))?;
    Ok(result)
}

fn write_outputs(result: &SuiteResult, dir: &Path, format: Format, traces: bool) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    match format {
        Format::Csv => write_csv(&result.reports, BufWriter::new(File::create(dir.join("report.csv"))?))?,
        Format::Json => write_json(result, BufWriter::new(File::create(dir.join("report.json"))?))?,
    }
    if traces {
        let tdir = dir.join("traces");
        std::fs::create_dir_all(&tdir)?;
        for (i, r) in result.reports.iter().enumerate() {
            for t in &r.traces {
                let name = format!("{i:03}_{}_{}.csv", sanitize(&r.theorem_id), sanitize(&t.name));
                write_trace(&t.points, BufWriter::new(File::create(tdir.join(name))?))?;
            }
        }
    }
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}
