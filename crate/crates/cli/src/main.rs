//! `escnav`: run scenarios, export level sets, sweep parameters and run the
//! validation suites.
//!
//! Exit codes: 0 success (for `run`, converged without collision), 1 bad
//! input or a failed validation suite, 2 collision, 3 no convergence.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use escnav_core::batch::{sweep, SweepParam, SweepRow};
use escnav_core::export::{self, gradient_grid_size, num, summary_fields, SUMMARY_HEADER};
use escnav_core::scenario::{resolve, BUNDLED};
use escnav_core::validate::Suite;
use escnav_core::{run, Scenario, ScenarioError};

const THREADS_VAR: &str = "ESCNAV_THREADS";

#[derive(Parser)]
#[command(name = "escnav", version, about = "Extremum seeking source search over navigation functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv, events.csv and summary.csv.
    Run {
        /// Scenario file, or `bundled:<name>`.
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the navigation function on a grid, plus a coarser gradient grid.
    Levelset {
        scenario: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Level-set CSV; the gradient grid goes next to it as `<stem>_gradient.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a validation suite and print a JSON report.
    Validate {
        /// gradients, averaging, repulsion or safety.
        #[arg(long)]
        suite: String,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per parameter value and write sweep.csv.
    Sweep {
        scenario: String,
        /// omega, alpha, gain, hpf_cutoff, sample_rate, v_max or inflation.
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run { scenario, out } => cmd_run(&load(&scenario)?, &out),
        Command::Levelset { scenario, grid, out } => cmd_levelset(&load(&scenario)?, grid, &out),
        Command::Validate { suite, out } => cmd_validate(&suite, out.as_deref()),
        Command::Sweep {
            scenario,
            param,
            values,
            out,
        } => cmd_sweep(&scenario, &param, &values, &out),
    }
}

fn load(spec: &str) -> Result<Scenario> {
    resolve(spec).map_err(|e| match e {
        ScenarioError::UnknownBundled(name) => {
            let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
            anyhow::anyhow!("no bundled scenario {name:?}; available: {}", names.join(", "))
        }
        other => anyhow::Error::new(other).context(format!("invalid scenario {spec}")),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_run(scenario: &Scenario, out: &Path) -> Result<u8> {
    let output = run(scenario).with_context(|| format!("scenario {}", scenario.name))?;
    export::write_run(out, &output).with_context(|| format!("writing {}", out.display()))?;
    let s = &output.summary;
    eprintln!(
        "{}: t={:.3} distance={:.6} min_clearance={:.6} converged={} collided={}",
        scenario.name, s.final_t, s.final_distance, s.min_clearance, s.converged, s.collided
    );
    Ok(if s.collided {
        2
    } else if s.converged {
        0
    } else {
        3
    })
}

fn gradient_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("levelset");
    out.with_file_name(format!("{stem}_gradient.csv"))
}

fn cmd_levelset(scenario: &Scenario, n: usize, out: &Path) -> Result<u8> {
    if n < 2 {
        bail!("--grid must be at least 2, got {n}");
    }
    let nav = scenario.full_nav();
    export::write_levelset(create(out)?, &export::levelset(&nav, 0.0, n))?;
    let gradient = gradient_path(out);
    export::write_gradient(create(&gradient)?, &export::gradient_field(&nav, 0.0, gradient_grid_size(n)))?;
    Ok(0)
}

fn cmd_validate(suite: &str, out: Option<&Path>) -> Result<u8> {
    let suite: Suite = suite.parse()?;
    let report = suite.run();
    for c in &report.checks {
        eprintln!("{c}");
    }
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(path) = out {
        let mut w = create(path)?;
        writeln!(w, "{json}")?;
        w.flush()?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_VAR} must be a positive integer, got {v:?}"),
        },
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad --values entry {s:?}")))
        .collect()
}

fn cmd_sweep(scenario: &str, param: &str, values: &str, out: &Path) -> Result<u8> {
    let scenario = load(scenario)?;
    let param: SweepParam = param.parse()?;
    let values = parse_values(values)?;
    let rows = sweep(&scenario, param, &values, threads()?);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("sweep.csv");
    write_sweep(create(&path)?, param, &rows).with_context(|| format!("writing {}", path.display()))?;
    Ok(0)
}

fn write_sweep<W: Write>(w: W, param: SweepParam, rows: &[SweepRow]) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let mut header = vec!["param", "value", "status"];
    header.extend(SUMMARY_HEADER);
    header.push("error");
    out.write_record(&header)?;
    for row in rows {
        let mut record = vec![param.name().to_string(), num(row.value)];
        match &row.outcome {
            Ok(s) => {
                let status = if s.collided {
                    "collision"
                } else if s.converged {
                    "converged"
                } else {
                    "not_converged"
                };
                record.push(status.to_string());
                record.extend(summary_fields(s));
                record.push(String::new());
            }
            Err(e) => {
                record.push("error".to_string());
                record.extend(std::iter::repeat_n(String::new(), SUMMARY_HEADER.len()));
                record.push(e.to_string());
            }
        }
        out.write_record(&record)?;
    }
    out.flush()
}
