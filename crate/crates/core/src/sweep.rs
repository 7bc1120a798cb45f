//! Experiment matrix: disturbance scenarios × coordination modes × arrival
//! rates, and the CSV outputs shared by the CLI.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run, Event, EventKind, PositionRow, RunOptions, SimulationResult, TraceRow};
use crate::metrics::{actual_arrival_rate, throughput, MetricSample};
use crate::scenario::{ConfigError, Mode, ScenarioConfig};

/// A named coordination setup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec {
    pub label: &'static str,
    pub mode: Mode,
    /// Spatial buffer for VFR setups.
    pub d_s: Option<f64>,
    /// Propagation delay for DFR setups.
    pub d_prop: Option<f64>,
}

pub const MODES: [ModeSpec; 4] = [
    ModeSpec {
        label: "VFR1",
        mode: Mode::Vfr,
        d_s: Some(20.0),
        d_prop: None,
    },
    ModeSpec {
        label: "VFR2",
        mode: Mode::Vfr,
        d_s: Some(67.0),
        d_prop: None,
    },
    ModeSpec {
        label: "DFR1",
        mode: Mode::Dfr,
        d_s: None,
        d_prop: Some(3.0),
    },
    ModeSpec {
        label: "DFR2",
        mode: Mode::Dfr,
        d_s: None,
        d_prop: Some(0.2),
    },
];

impl FromStr for ModeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MODES
            .iter()
            .find(|m| m.label.eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| format!("unknown mode '{s}' (expected one of VFR1, VFR2, DFR1, DFR2)"))
    }
}

/// A named disturbance pattern. `None` disables disturbances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub label: &'static str,
    pub alias: &'static str,
    /// `(t_inv, tau)` of the recurring disturbance.
    pub recurring: Option<(f64, f64)>,
}

pub const SCENARIOS: [ScenarioSpec; 4] = [
    ScenarioSpec {
        label: "none",
        alias: "a",
        recurring: None,
    },
    ScenarioSpec {
        label: "tinv100_tau25",
        alias: "b",
        recurring: Some((100.0, 25.0)),
    },
    ScenarioSpec {
        label: "tinv40_tau25",
        alias: "c",
        recurring: Some((40.0, 25.0)),
    },
    ScenarioSpec {
        label: "tinv40_tau15",
        alias: "d",
        recurring: Some((40.0, 15.0)),
    },
];

impl FromStr for ScenarioSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        SCENARIOS
            .iter()
            .find(|c| c.label.eq_ignore_ascii_case(s) || c.alias.eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| {
                format!("unknown scenario '{s}' (expected none, tinv100_tau25, tinv40_tau25, tinv40_tau15 or a-d)")
            })
    }
}

/// Configuration of one sweep cell derived from `base`.
pub fn cell_config(base: &ScenarioConfig, scenario: &ScenarioSpec, mode: &ModeSpec, rate: f64) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.mode = mode.mode;
    cfg.arrival_rate = rate;
    if let Some(d_s) = mode.d_s {
        cfg.vfr.d_s = d_s;
    }
    if let Some(d_prop) = mode.d_prop {
        cfg.dfr.d_prop = d_prop;
    }
    match scenario.recurring {
        None => cfg.disturbance.enabled = false,
        Some((t_inv, tau)) => {
            cfg.disturbance.enabled = true;
            cfg.disturbance.t_inv = Some(t_inv);
            cfg.disturbance.tau = tau;
        }
    }
    cfg
}

/// Parses `start:stop:step` into an inclusive grid.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn parse_rate_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("rate grid '{spec}' must look like start:stop:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("rate grid '{spec}': '{s}' is not a number"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(format!("rate grid '{spec}': step must be positive and bounds finite"));
    }
    if start < 0.0 {
        return Err(format!("rate grid '{spec}': rates must be non-negative"));
    }
    Ok(rate_grid(start, stop, step))
}

/// Inclusive grid with values snapped to 1e-9 so that decimal steps land on
/// their decimal values.
pub fn rate_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: String,
    pub mode: String,
    pub arrival_rate: f64,
    pub actual_rate: f64,
    pub throughput: f64,
    pub min_ttc: f64,
    pub min_separation: f64,
    pub termination: String,
}

impl SweepRow {
    pub fn from_result(scenario: &str, mode: &str, cfg: &ScenarioConfig, result: &SimulationResult) -> Self {
        Self {
            scenario: scenario.to_string(),
            mode: mode.to_string(),
            arrival_rate: cfg.arrival_rate,
            actual_rate: actual_arrival_rate(result),
            throughput: throughput(result, cfg),
            min_ttc: result.min_ttc.min(cfg.report.ttc_cap),
            min_separation: result.min_separation.min(cfg.report.separation_cap),
            termination: result.termination.as_str().to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("cell {scenario}/{mode}/{rate}: {source}")]
    Config {
        scenario: String,
        mode: String,
        rate: f64,
        source: ConfigError,
    },
    #[error("failed to start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs every cell and returns rows in canonical order (scenario, mode,
/// rate as given). `jobs` bounds the worker count; `None` uses every core.
pub fn run_sweep(
    base: &ScenarioConfig,
    scenarios: &[ScenarioSpec],
    modes: &[ModeSpec],
    rates: &[f64],
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>, SweepError> {
    let mut cells = Vec::new();
    for s in scenarios {
        for m in modes {
            for &r in rates {
                let cfg = cell_config(base, s, m, r);
                cfg.validate().map_err(|source| SweepError::Config {
                    scenario: s.label.to_string(),
                    mode: m.label.to_string(),
                    rate: r,
                    source,
                })?;
                cells.push((s.label, m.label, cfg));
            }
        }
    }
    let work = || -> Vec<SweepRow> {
        cells
            .par_iter()
            .map(|(s, m, cfg)| SweepRow::from_result(s, m, cfg, &run(cfg, RunOptions::default())))
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?.install(work))
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "scenario",
            "mode",
            "arrival_rate",
            "actual_rate",
            "throughput",
            "min_ttc",
            "min_separation",
            "termination",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples_csv<W: Write>(out: W, samples: &[MetricSample], cfg: &ScenarioConfig) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "kind", "follower", "leader", "value"])?;
    for s in samples {
        w.write_record([
            fmt_num(s.t),
            s.kind.as_str().to_string(),
            s.follower.to_string(),
            s.leader.to_string(),
            fmt_num(s.reported(cfg)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "vehicle", "cwp", "eta"])?;
    for r in rows {
        w.write_record([fmt_num(r.t), r.vehicle.to_string(), r.cwp.to_string(), fmt_num(r.eta)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_positions_csv<W: Write>(out: W, rows: &[PositionRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "vehicle", "x", "v"])?;
    for r in rows {
        w.write_record([fmt_num(r.t), r.vehicle.to_string(), fmt_num(r.x), fmt_num(r.v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Event log as `t,event,vehicle,other,detail`; unused columns stay empty.
pub fn write_events_csv<W: Write>(out: W, events: &[Event]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "event", "vehicle", "other", "detail"])?;
    for e in events {
        let (name, vehicle, other, detail) = match &e.kind {
            EventKind::Collision {
                follower,
                leader,
                separation,
            } => (
                "COLLISION",
                follower.to_string(),
                leader.to_string(),
                fmt_num(*separation),
            ),
            EventKind::DisturbanceEntry {
                vehicle,
                disturbance,
                x,
            } => (
                "DISTURBANCE_ENTRY",
                vehicle.to_string(),
                format!("d{disturbance}"),
                fmt_num(*x),
            ),
            EventKind::ForecastReleased { disturbance, queued } => {
                ("FORECAST", String::new(), format!("d{disturbance}"), queued.to_string())
            }
            EventKind::EtaUpdate {
                vehicle,
                disturbance,
                branch,
            } => (
                "ETA_UPDATE",
                vehicle.to_string(),
                format!("d{disturbance}"),
                branch.map_or("ADOPT", |b| b.as_str()).to_string(),
            ),
            EventKind::EntryReplan {
                vehicle,
                disturbance,
                branch,
            } => (
                "ENTRY_REPLAN",
                vehicle.to_string(),
                format!("d{disturbance}"),
                branch.as_str().to_string(),
            ),
            EventKind::BufferRelaxation { vehicle, gap } => {
                ("BUFFER_RELAXATION", vehicle.to_string(), String::new(), fmt_num(*gap))
            }
            EventKind::Emergency { vehicle } => ("EMERGENCY", vehicle.to_string(), String::new(), String::new()),
            EventKind::ModeChange {
                vehicle,
                mode,
                disturbance,
            } => (
                "MODE",
                vehicle.to_string(),
                disturbance.map_or_else(String::new, |d| format!("d{d}")),
                mode.as_str().to_string(),
            ),
        };
        w.write_record([fmt_num(e.t), name.to_string(), vehicle, other, detail])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation.
fn fmt_num(x: f64) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_rate_grid("0.01:0.25:0.01").unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[6], 0.07);
        assert_eq!(g[24], 0.25);
        assert!(parse_rate_grid("0.2:0.1:0.01").unwrap().is_empty());
        assert!(parse_rate_grid("0.1:0.2").is_err());
        assert!(parse_rate_grid("0.1:0.2:0").is_err());
    }

    #[test]
    fn labels_and_aliases() {
        assert_eq!("c".parse::<ScenarioSpec>().unwrap().label, "tinv40_tau25");
        assert_eq!("dfr2".parse::<ModeSpec>().unwrap().d_prop, Some(0.2));
        assert!("VFR3".parse::<ModeSpec>().is_err());
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scenario,mode,arrival_rate,actual_rate,throughput,min_ttc,min_separation,termination\n"
        );
    }
}
