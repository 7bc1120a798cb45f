use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uam_corridor::engine::{run, RunOptions};
use uam_corridor::scenario::ScenarioConfig;
use uam_corridor::sweep::{
    parse_rate_grid, run_sweep, write_events_csv, write_positions_csv, write_samples_csv, write_sweep_csv,
    write_trace_csv, ModeSpec, ScenarioSpec, SweepRow,
};

#[derive(Parser)]
#[command(name = "uam-corridor", version, about = "Single-corridor UAM traffic simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario file; writes samples.csv, summary.csv and events.csv.
    Run {
        #[command(flatten)]
        io: Io,
        /// Also write trace.csv (ETA snapshots) and positions.csv.
        #[arg(long)]
        trace: bool,
    },
    /// Write only the schedule and position traces of one scenario file.
    Trace {
        #[command(flatten)]
        io: Io,
    },
    /// Run the scenario × mode × rate matrix; writes sweep.csv.
    Sweep {
        /// Base scenario file; built-in defaults when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "0.01:0.25:0.01")]
        rates: String,
        #[arg(long, value_delimiter = ',', default_value = "VFR1,VFR2,DFR1,DFR2")]
        modes: Vec<ModeSpec>,
        /// Disturbance patterns by label or letter (a-d).
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "none,tinv100_tau25,tinv40_tau25,tinv40_tau15"
        )]
        scenarios: Vec<ScenarioSpec>,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    cfg.validate()
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "scenario".to_string(), |s| s.to_string_lossy().into_owned())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            load(&scenario)?;
            println!("{}: ok", scenario.display());
        }
        Command::Run { io, trace } => {
            let cfg = load(&io.scenario)?;
            let opts = RunOptions {
                samples: true,
                positions: trace,
                trace,
            };
            let result = run(&cfg, opts);
            write_samples_csv(create(&io.out, "samples.csv")?, &result.samples, &cfg)?;
            let row = SweepRow::from_result(&label(&io.scenario), &cfg.mode.to_string(), &cfg, &result);
            write_sweep_csv(create(&io.out, "summary.csv")?, std::slice::from_ref(&row))?;
            write_events_csv(create(&io.out, "events.csv")?, &result.events)?;
            if trace {
                write_trace_csv(create(&io.out, "trace.csv")?, &result.eta_trace)?;
                write_positions_csv(create(&io.out, "positions.csv")?, &result.positions)?;
            }
            println!(
                "{} at t={} | admitted {} | throughput {:.4} | min TTC {:.2} s | min separation {:.2} m",
                row.termination,
                result.end_time,
                result.admitted(),
                row.throughput,
                row.min_ttc,
                row.min_separation
            );
        }
        Command::Trace { io } => {
            let cfg = load(&io.scenario)?;
            let opts = RunOptions {
                samples: false,
                positions: true,
                trace: true,
            };
            let result = run(&cfg, opts);
            write_trace_csv(create(&io.out, "trace.csv")?, &result.eta_trace)?;
            write_positions_csv(create(&io.out, "positions.csv")?, &result.positions)?;
            println!(
                "{} trace rows, {} position rows",
                result.eta_trace.len(),
                result.positions.len()
            );
        }
        Command::Sweep {
            scenario,
            out,
            rates,
            modes,
            scenarios,
            jobs,
        } => {
            let base = match &scenario {
                Some(p) => load(p)?,
                None => ScenarioConfig::default(),
            };
            let rates = parse_rate_grid(&rates).map_err(anyhow::Error::msg)?;
            if jobs == Some(0) {
                bail!("--jobs must be at least 1");
            }
            let rows = run_sweep(&base, &scenarios, &modes, &rates, jobs)?;
            write_sweep_csv(create(&out, "sweep.csv")?, &rows)?;
            println!(
                "{} cells ({} scenarios x {} modes x {} rates) -> {}",
                rows.len(),
                scenarios.len(),
                modes.len(),
                rates.len(),
                out.join("sweep.csv").display()
            );
        }
    }
    Ok(())
}
