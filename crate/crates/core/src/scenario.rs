//! Scenario configuration, the flat `key = value` scenario file format, and
//! the deterministic disturbance timeline.
//!
//! A scenario file is UTF-8 text with one `key = value` pair per line. `#`
//! starts a comment, blank lines are ignored, and section parameters use
//! dotted keys (`vfr.d_S`, `dfr.t_buffer`, `disturbance.t_inv`). Keys are
//! matched case-insensitively. Unknown or repeated keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// Coordination paradigm driving every vehicle of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Vfr,
    Dfr,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Vfr => f.write_str("VFR"),
            Mode::Dfr => f.write_str("DFR"),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "VFR" => Ok(Mode::Vfr),
            "DFR" => Ok(Mode::Dfr),
            other => Err(format!("unknown mode `{other}` (expected VFR or DFR)")),
        }
    }
}

/// Helly vehicle-following and foresight parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct VfrParams {
    /// Desired minimum spacing `d_S`, meters.
    pub d_s: f64,
    /// Foresight range within which disturbances can be perceived, meters.
    pub r_foresight: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Desired time gap, seconds.
    pub t_des: f64,
}

impl Default for VfrParams {
    fn default() -> Self {
        Self {
            d_s: 67.0,
            r_foresight: 800.0,
            lambda1: 0.4,
            lambda2: 0.6,
            t_des: 1.9,
        }
    }
}

/// PSU scheduling parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DfrParams {
    /// Nominal minimum time gap between successive CWP reservations, seconds.
    pub t_buffer: f64,
    /// Gap the PSU may relax to when the nominal buffer cannot be kept.
    pub t_buffer_min: f64,
    /// Delay between successive vehicles applying an ETA update, seconds.
    pub d_prop: f64,
}

impl Default for DfrParams {
    fn default() -> Self {
        Self {
            t_buffer: 3.0,
            t_buffer_min: 1.5,
            d_prop: 0.2,
        }
    }
}

/// Disturbance geometry and recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceParams {
    pub enabled: bool,
    pub x_s: f64,
    pub x_d: f64,
    pub duration: f64,
    /// Onset-to-onset period. `None` produces a single disturbance.
    pub t_inv: Option<f64>,
    /// Forecast horizon: how long before onset the disturbance is announced.
    pub tau: f64,
    pub first_onset: f64,
}

impl Default for DisturbanceParams {
    fn default() -> Self {
        Self {
            enabled: false,
            x_s: 2000.0,
            x_d: 2050.0,
            duration: 10.0,
            t_inv: None,
            tau: 15.0,
            first_onset: 120.0,
        }
    }
}

/// Caps applied to reported metric values (raw values are kept for analysis).
#[derive(Clone, Debug, PartialEq)]
pub struct ReportParams {
    pub ttc_cap: f64,
    pub separation_cap: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            ttc_cap: 100.0,
            separation_cap: 400.0,
        }
    }
}

/// Everything a single run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub corridor_length: f64,
    pub cwp_positions: Vec<f64>,
    pub v_avg: f64,
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub dt: f64,
    pub sim_end: f64,
    /// Demanded vehicles per second at the corridor entrance.
    pub arrival_rate: f64,
    pub mode: Mode,
    pub vfr: VfrParams,
    pub dfr: DfrParams,
    pub disturbance: DisturbanceParams,
    pub throughput_warmup: f64,
    pub report: ReportParams,
}

const DEFAULT_CWP_SPACING: f64 = 300.0;

fn evenly_spaced_cwps(corridor_length: f64, spacing: f64) -> Vec<f64> {
    let n = (corridor_length / spacing + 1e-9).floor() as usize;
    (1..=n).map(|k| k as f64 * spacing).collect()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            corridor_length: 3000.0,
            cwp_positions: evenly_spaced_cwps(3000.0, DEFAULT_CWP_SPACING),
            v_avg: 20.0,
            v_max: 30.0,
            a_min: -3.0,
            a_max: 3.0,
            dt: 0.1,
            sim_end: 2000.0,
            arrival_rate: 0.1,
            mode: Mode::Vfr,
            vfr: VfrParams::default(),
            dfr: DfrParams::default(),
            disturbance: DisturbanceParams::default(),
            throughput_warmup: 300.0,
            report: ReportParams::default(),
        }
    }
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub value: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}: {}", self.field, self.value, self.reason)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    /// Fields named by a validation failure, empty for other errors.
    pub fn fields(&self) -> Vec<&'static str> {
        match self {
            ConfigError::Invalid(v) => v.iter().map(|x| x.field).collect(),
            _ => Vec::new(),
        }
    }
}

/// A single disruption of the corridor segment `[x_start, x_end]` during
/// `[t_start, t_end]`, announced at `forecast_time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disturbance {
    pub index: usize,
    pub x_start: f64,
    pub x_end: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub forecast_time: f64,
}

impl Disturbance {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end
    }

    pub fn is_forecast(&self, t: f64) -> bool {
        t >= self.forecast_time
    }

    /// Whether a point vehicle at `x` is inside the blocked region at `t`.
    pub fn blocks(&self, x: f64, t: f64) -> bool {
        self.is_active(t) && x >= self.x_start && x <= self.x_end
    }
}

impl ScenarioConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut out = Vec::new();
        let mut bad = |field: &'static str, value: String, reason: &str| {
            out.push(Violation {
                field,
                value,
                reason: reason.to_string(),
            })
        };

        if !(self.dt > 0.0) {
            bad("dt", self.dt.to_string(), "must be positive");
        }
        if !(self.a_min < 0.0) {
            bad("a_min", self.a_min.to_string(), "must be negative");
        }
        if !(self.a_max > 0.0) {
            bad("a_max", self.a_max.to_string(), "must be positive");
        }
        if !(self.v_avg > 0.0) {
            bad("v_avg", self.v_avg.to_string(), "must be positive");
        }
        if !(self.v_avg <= self.v_max) {
            bad("v_max", self.v_max.to_string(), "must be at least v_avg");
        }
        if !(self.corridor_length > 0.0) {
            bad("corridor_length", self.corridor_length.to_string(), "must be positive");
        }
        if !(self.sim_end >= 0.0) {
            bad("sim_end", self.sim_end.to_string(), "must be non-negative");
        }
        if !(self.arrival_rate >= 0.0) {
            bad("arrival_rate", self.arrival_rate.to_string(), "must be non-negative");
        }
        if !(self.throughput_warmup >= 0.0) {
            bad(
                "throughput_warmup",
                self.throughput_warmup.to_string(),
                "must be non-negative",
            );
        }

        if self.cwp_positions.is_empty() {
            bad("cwp_positions", "[]".into(), "at least one CWP is required");
        }
        let cwps = format!("{:?}", self.cwp_positions);
        if self.cwp_positions.windows(2).any(|w| !(w[0] < w[1])) {
            bad("cwp_positions", cwps.clone(), "must be strictly increasing");
        }
        if self
            .cwp_positions
            .iter()
            .any(|&p| !(p > 0.0 && p <= self.corridor_length))
        {
            bad("cwp_positions", cwps, "each position must lie in (0, corridor_length]");
        }

        let vfr = &self.vfr;
        if !(vfr.d_s > 0.0) {
            bad("vfr.d_S", vfr.d_s.to_string(), "must be positive");
        }
        if !(vfr.r_foresight > 0.0) {
            bad("vfr.R_foresight", vfr.r_foresight.to_string(), "must be positive");
        }
        if !(vfr.t_des >= 0.0) {
            bad("vfr.T_des", vfr.t_des.to_string(), "must be non-negative");
        }

        let dfr = &self.dfr;
        if !(dfr.t_buffer_min > 0.0) {
            bad("dfr.t_buffer_min", dfr.t_buffer_min.to_string(), "must be positive");
        }
        if !(dfr.t_buffer_min <= dfr.t_buffer) {
            bad(
                "dfr.t_buffer_min",
                dfr.t_buffer_min.to_string(),
                "must not exceed dfr.t_buffer",
            );
        }
        if !(dfr.d_prop >= 0.0) {
            bad("dfr.d_prop", dfr.d_prop.to_string(), "must be non-negative");
        }

        let d = &self.disturbance;
        if d.enabled {
            if !(d.x_s >= 0.0) {
                bad("disturbance.x_s", d.x_s.to_string(), "must be non-negative");
            }
            if !(d.x_s < d.x_d) {
                bad("disturbance.x_d", d.x_d.to_string(), "must exceed disturbance.x_s");
            }
            if !(d.x_d <= self.corridor_length) {
                bad("disturbance.x_d", d.x_d.to_string(), "must lie within the corridor");
            }
            if !(d.duration > 0.0) {
                bad("disturbance.duration", d.duration.to_string(), "must be positive");
            }
            if !(d.tau > 0.0) {
                bad("disturbance.tau", d.tau.to_string(), "must be positive");
            }
            if let Some(t_inv) = d.t_inv {
                if !(t_inv > d.duration) {
                    bad(
                        "disturbance.t_inv",
                        t_inv.to_string(),
                        "must exceed disturbance.duration",
                    );
                }
            }
            if !(d.first_onset - d.tau >= 0.0) {
                bad(
                    "disturbance.first_onset",
                    d.first_onset.to_string(),
                    "forecast time (first_onset - tau) would be negative",
                );
            }
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(out))
        }
    }

    /// The ordered list of disturbances for this run; empty when disabled.
    pub fn disturbance_timeline(&self) -> Vec<Disturbance> {
        let d = &self.disturbance;
        if !d.enabled {
            return Vec::new();
        }
        let make = |index: usize, onset: f64| Disturbance {
            index,
            x_start: d.x_s,
            x_end: d.x_d,
            t_start: onset,
            t_end: onset + d.duration,
            forecast_time: onset - d.tau,
        };
        match d.t_inv {
            None => {
                if d.first_onset < self.sim_end {
                    vec![make(0, d.first_onset)]
                } else {
                    Vec::new()
                }
            }
            Some(period) => (0..)
                .map(|i| (i, d.first_onset + i as f64 * period))
                .take_while(|&(_, onset)| onset < self.sim_end)
                .map(|(i, onset)| make(i, onset))
                .collect(),
        }
    }

    /// Tick `k` starts at this time. Uses exact division when `dt` is the
    /// reciprocal of an integer so that tick times match decimal literals.
    pub fn tick_time(&self, k: u64) -> f64 {
        let per_second = (1.0 / self.dt).round();
        if per_second > 0.0 && (per_second * self.dt - 1.0).abs() < 1e-12 {
            k as f64 / per_second
        } else {
            k as f64 * self.dt
        }
    }

    /// Index of the tick nearest to `t`.
    pub fn tick_index(&self, t: f64) -> u64 {
        (t / self.dt).round().max(0.0) as u64
    }

    /// Number of whole ticks in the run.
    pub fn tick_count(&self) -> u64 {
        (self.sim_end / self.dt - 1e-9).ceil().max(0.0) as u64
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        load_scenario(&text)
    }

    /// Renders the config back to the scenario file format.
    pub fn to_document(&self) -> String {
        let d = &self.disturbance;
        let cwps = self
            .cwp_positions
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        let t_inv = d.t_inv.map_or_else(|| "none".to_string(), |v| v.to_string());
        format!(
            "mode = {}\n\
             arrival_rate = {}\n\
             corridor_length = {}\n\
             cwp_positions = {}\n\
             v_avg = {}\nv_max = {}\na_min = {}\na_max = {}\n\
             dt = {}\nsim_end = {}\nthroughput_warmup = {}\n\
             \n\
             vfr.d_S = {}\nvfr.R_foresight = {}\nvfr.lambda1 = {}\nvfr.lambda2 = {}\nvfr.T_des = {}\n\
             \n\
             dfr.t_buffer = {}\ndfr.t_buffer_min = {}\ndfr.d_prop = {}\n\
             \n\
             disturbance.enabled = {}\ndisturbance.x_s = {}\ndisturbance.x_d = {}\n\
             disturbance.duration = {}\ndisturbance.t_inv = {}\ndisturbance.tau = {}\n\
             disturbance.first_onset = {}\n\
             \n\
             report.ttc_cap = {}\nreport.separation_cap = {}\n",
            self.mode,
            self.arrival_rate,
            self.corridor_length,
            cwps,
            self.v_avg,
            self.v_max,
            self.a_min,
            self.a_max,
            self.dt,
            self.sim_end,
            self.throughput_warmup,
            self.vfr.d_s,
            self.vfr.r_foresight,
            self.vfr.lambda1,
            self.vfr.lambda2,
            self.vfr.t_des,
            self.dfr.t_buffer,
            self.dfr.t_buffer_min,
            self.dfr.d_prop,
            d.enabled,
            d.x_s,
            d.x_d,
            d.duration,
            t_inv,
            d.tau,
            d.first_onset,
            self.report.ttc_cap,
            self.report.separation_cap,
        )
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("`{key}` expects a number, got `{value}`"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Parse {
            line,
            message: format!("`{key}` expects true or false, got `{value}`"),
        }),
    }
}

/// Parses a scenario document, applies defaults, and validates the result.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut explicit_cwps = false;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = text.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{text}`"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: "empty key".into(),
            });
        }
        if seen.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(key.clone());

        let num = |v: &str| parse_f64(line, &key, v);
        match key.as_str() {
            "mode" => cfg.mode = value.parse().map_err(|message| ConfigError::Parse { line, message })?,
            "corridor_length" => cfg.corridor_length = num(value)?,
            "cwp_positions" => {
                cfg.cwp_positions = value.split(',').map(|p| num(p.trim())).collect::<Result<_, _>>()?;
                explicit_cwps = true;
            }
            "v_avg" => cfg.v_avg = num(value)?,
            "v_max" => cfg.v_max = num(value)?,
            "a_min" => cfg.a_min = num(value)?,
            "a_max" => cfg.a_max = num(value)?,
            "dt" => cfg.dt = num(value)?,
            "sim_end" => cfg.sim_end = num(value)?,
            "arrival_rate" => cfg.arrival_rate = num(value)?,
            "throughput_warmup" => cfg.throughput_warmup = num(value)?,
            "vfr.d_s" => cfg.vfr.d_s = num(value)?,
            "vfr.r_foresight" => cfg.vfr.r_foresight = num(value)?,
            "vfr.lambda1" => cfg.vfr.lambda1 = num(value)?,
            "vfr.lambda2" => cfg.vfr.lambda2 = num(value)?,
            "vfr.t_des" => cfg.vfr.t_des = num(value)?,
            "dfr.t_buffer" => cfg.dfr.t_buffer = num(value)?,
            "dfr.t_buffer_min" => cfg.dfr.t_buffer_min = num(value)?,
            "dfr.d_prop" => cfg.dfr.d_prop = num(value)?,
            "disturbance.enabled" => cfg.disturbance.enabled = parse_bool(line, &key, value)?,
            "disturbance.x_s" => cfg.disturbance.x_s = num(value)?,
            "disturbance.x_d" => cfg.disturbance.x_d = num(value)?,
            "disturbance.duration" => cfg.disturbance.duration = num(value)?,
            "disturbance.t_inv" => {
                cfg.disturbance.t_inv = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(num(value)?)
                }
            }
            "disturbance.tau" => cfg.disturbance.tau = num(value)?,
            "disturbance.first_onset" => cfg.disturbance.first_onset = num(value)?,
            "report.ttc_cap" => cfg.report.ttc_cap = num(value)?,
            "report.separation_cap" => cfg.report.separation_cap = num(value)?,
            _ => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
    }

    if !explicit_cwps {
        cfg.cwp_positions = evenly_spaced_cwps(cfg.corridor_length, DEFAULT_CWP_SPACING);
    }
    cfg.validate()?;
    Ok(cfg)
}
