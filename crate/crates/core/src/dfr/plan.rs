//! ETA schedules and the motion profiles they are derived from.
//!
//! A schedule is a chain of time-stamped knots along the corridor. CWP knots
//! carry the reserved ETAs; the remaining knots mark profile breakpoints
//! (end of an acceleration phase, disturbance edges) so that the tracker and
//! the conflict check see the intended motion between CWPs.

use crate::kinematics::{latest_arrival, min_time_to_reach, step, KinematicState, Limits};
use crate::scenario::{Disturbance, ScenarioConfig};
use crate::VehicleId;

/// Positions closer than this are treated as the same point.
pub const KNOT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub t: f64,
    pub cwp: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaSchedule {
    pub vehicle: VehicleId,
    knots: Vec<Knot>,
    /// Set when the PSU could not produce a plan satisfying every constraint.
    pub emergency: bool,
}

impl EtaSchedule {
    pub fn from_knots(vehicle: VehicleId, knots: Vec<Knot>) -> Self {
        debug_assert!(knots.windows(2).all(|w| w[0].x < w[1].x && w[0].t < w[1].t));
        Self {
            vehicle,
            knots,
            emergency: false,
        }
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// `(cwp_index, eta)` pairs in corridor order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.knots.iter().filter_map(|k| k.cwp.map(|c| (c, k.t)))
    }

    pub fn eta(&self, cwp: usize) -> Option<f64> {
        self.knots.iter().find(|k| k.cwp == Some(cwp)).map(|k| k.t)
    }

    /// First time the interpolated plan is at `x`. Positions before the first
    /// knot map to its time; positions past the last knot have no time.
    pub fn time_at(&self, x: f64) -> Option<f64> {
        let first = self.knots.first()?;
        if x <= first.x {
            return Some(first.t);
        }
        self.knots.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            (x <= b.x).then(|| a.t + (b.t - a.t) * (x - a.x) / (b.x - a.x))
        })
    }

    /// Like [`time_at`](Self::time_at) but `None` outside the planned span.
    pub fn time_at_within(&self, x: f64) -> Option<f64> {
        let (first, last) = (self.knots.first()?, self.knots.last()?);
        if x < first.x - KNOT_TOL || x > last.x + KNOT_TOL {
            return None;
        }
        self.time_at(x.min(last.x))
    }

    pub fn position_at(&self, t: f64) -> f64 {
        let Some(first) = self.knots.first() else {
            return 0.0;
        };
        if t <= first.t {
            return first.x;
        }
        for w in self.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if t <= b.t {
                return a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t);
            }
        }
        self.knots.last().map_or(first.x, |k| k.x)
    }

    /// Average speed of the plan segment containing `t`.
    pub fn speed_at(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if n < 2 {
            return 0.0;
        }
        let idx = self.knots.windows(2).position(|w| t < w[1].t).unwrap_or(n - 2);
        let (a, b) = (self.knots[idx], self.knots[idx + 1]);
        (b.x - a.x) / (b.t - a.t)
    }

    /// Predicted state when tracking this plan.
    pub fn state_at(&self, t: f64) -> KinematicState {
        KinematicState::new(self.position_at(t), self.speed_at(t))
    }

    /// The knot the vehicle at `x` is heading for.
    pub fn next_knot(&self, x: f64) -> Option<Knot> {
        self.knots.iter().find(|k| k.x > x + KNOT_TOL).copied()
    }

    /// Time interval over which the plan occupies `[x_start, x_end]`.
    pub fn crossing_interval(&self, x_start: f64, x_end: f64) -> Option<(f64, f64)> {
        Some((self.time_at(x_start)?, self.time_at(x_end)?))
    }

    /// ETAs strictly increasing and every CWP-to-CWP average speed in `(0, v_max]`.
    pub fn is_valid(&self, cwp_positions: &[f64], v_max: f64) -> bool {
        let entries: Vec<(usize, f64)> = self.entries().collect();
        entries.windows(2).all(|w| {
            let (ka, ta) = w[0];
            let (kb, tb) = w[1];
            if !(kb > ka && tb > ta) {
                return false;
            }
            let speed = (cwp_positions[kb] - cwp_positions[ka]) / (tb - ta);
            speed > 0.0 && speed <= v_max * (1.0 + 1e-9)
        })
    }
}

/// Whether the plan occupies any point of the disturbance region while it
/// is active.
pub fn detect_conflict(schedule: &EtaSchedule, d: &Disturbance) -> bool {
    match schedule.crossing_interval(d.x_start, d.x_end) {
        Some((enter, leave)) => enter <= d.t_end && leave >= d.t_start,
        None => false,
    }
}

/// Constant-acceleration phase.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Phase {
    accel: f64,
    duration: f64,
}

/// Piecewise constant-acceleration motion followed by an open-ended cruise.
#[derive(Clone, Debug)]
struct Profile {
    t0: f64,
    x0: f64,
    v0: f64,
    phases: Vec<Phase>,
}

impl Profile {
    fn new(t0: f64, kin: KinematicState) -> Self {
        Self {
            t0,
            x0: kin.x,
            v0: kin.v,
            phases: Vec::new(),
        }
    }

    fn push(&mut self, accel: f64, duration: f64) -> &mut Self {
        if duration > 0.0 {
            self.phases.push(Phase { accel, duration });
        }
        self
    }

    /// `(x, t, v)` at the start and at the end of every phase.
    fn breakpoints(&self) -> Vec<(f64, f64, f64)> {
        let mut out = vec![(self.x0, self.t0, self.v0)];
        let (mut x, mut t, mut v) = (self.x0, self.t0, self.v0);
        for p in &self.phases {
            x += v * p.duration + 0.5 * p.accel * p.duration * p.duration;
            v = (v + p.accel * p.duration).max(0.0);
            t += p.duration;
            out.push((x, t, v));
        }
        out
    }

    fn end_speed(&self) -> f64 {
        self.breakpoints().last().map_or(self.v0, |b| b.2)
    }

    /// Appends a phase bringing the end speed to `target`.
    fn settle_to(&mut self, target: f64, cfg: &ScenarioConfig) -> &mut Self {
        let v = self.end_speed();
        if target > v {
            self.push(cfg.a_max, (target - v) / cfg.a_max);
        } else if target < v {
            self.push(cfg.a_min, (target - v) / cfg.a_min);
        }
        self
    }

    /// First time the profile reaches `x`.
    fn time_at(&self, x: f64) -> Option<f64> {
        let bps = self.breakpoints();
        for (i, p) in self.phases.iter().enumerate() {
            let (xs, ts, vs) = bps[i];
            let (xe, _, _) = bps[i + 1];
            if x <= xe + KNOT_TOL && xe > xs {
                let dx = (x - xs).max(0.0);
                let tau = if p.accel.abs() < 1e-12 {
                    dx / vs
                } else {
                    let disc = (vs * vs + 2.0 * p.accel * dx).max(0.0);
                    (-vs + disc.sqrt()) / p.accel
                };
                return Some(ts + tau.clamp(0.0, p.duration));
            }
        }
        let (xe, te, ve) = *bps.last()?;
        (ve > 0.0).then(|| te + (x - xe).max(0.0) / ve)
    }

    /// Converts to a schedule. `history` supplies the already-passed CWP
    /// knots of the previous plan; `marks` are extra positions to pin.
    fn to_schedule(&self, vehicle: VehicleId, cfg: &ScenarioConfig, history: &[Knot], marks: &[f64]) -> EtaSchedule {
        let cwps = &cfg.cwp_positions;
        let cwp_at = |x: f64| cwps.iter().position(|&p| (p - x).abs() <= KNOT_TOL);

        let mut knots: Vec<Knot> = history
            .iter()
            .filter(|k| k.cwp.is_some() && k.x < self.x0 - KNOT_TOL && k.t < self.t0)
            .copied()
            .collect();
        knots.push(Knot {
            x: self.x0,
            t: self.t0,
            cwp: cwp_at(self.x0),
        });

        let mut ahead: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .skip(1)
            .map(|b| b.0)
            .chain(cwps.iter().copied())
            .chain(marks.iter().copied())
            .chain(std::iter::once(cfg.corridor_length))
            .filter(|&x| x > self.x0 + KNOT_TOL && x <= cfg.corridor_length + KNOT_TOL)
            .collect();
        ahead.sort_by(f64::total_cmp);
        for x in ahead {
            let last = knots.last().expect("start knot present");
            if x - last.x <= KNOT_TOL {
                if last.cwp.is_none() {
                    let c = cwp_at(x);
                    knots.last_mut().unwrap().cwp = c;
                }
                continue;
            }
            let Some(t) = self.time_at(x) else { continue };
            if t <= last.t {
                continue;
            }
            knots.push(Knot { x, t, cwp: cwp_at(x) });
        }
        EtaSchedule::from_knots(vehicle, knots)
    }
}

/// Strategic plan: constant cruise at `v_avg` from the entrance.
pub fn initial_eta_schedule(vehicle: VehicleId, entry_time: f64, cfg: &ScenarioConfig) -> EtaSchedule {
    Profile::new(entry_time, KinematicState::new(0.0, cfg.v_avg)).to_schedule(vehicle, cfg, &[], &[])
}

/// Which branch a replan took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplanKind {
    Unchanged,
    Pass,
    Delay,
}

impl ReplanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReplanKind::Unchanged => "UNCHANGED",
            ReplanKind::Pass => "PASS",
            ReplanKind::Delay => "DELAY",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Replan {
    pub kind: ReplanKind,
    pub schedule: EtaSchedule,
}

/// Slack added after the disturbance clears before a delayed plan may reach
/// the region, in ticks.
const DELAY_MARGIN_TICKS: f64 = 2.0;

/// Minimum-time profile to `x_end`, then back to cruise at `v_avg`.
pub fn pass_plan(
    schedule: &EtaSchedule,
    kin: KinematicState,
    d: &Disturbance,
    t: f64,
    cfg: &ScenarioConfig,
) -> EtaSchedule {
    let mut p = Profile::new(t, kin);
    let dist = d.x_end - kin.x;
    let t_reach = min_time_to_reach(kin.x, kin.v, d.x_end, cfg.a_max, cfg.v_max);
    let t_acc = ((cfg.v_max - kin.v) / cfg.a_max).max(0.0);
    if t_acc >= t_reach {
        p.push(cfg.a_max, t_reach);
    } else {
        p.push(cfg.a_max, t_acc);
        p.push(0.0, t_reach - t_acc);
    }
    debug_assert!(dist >= 0.0);
    p.settle_to(cfg.v_avg, cfg);
    p.to_schedule(schedule.vehicle, cfg, schedule.knots(), &[d.x_start, d.x_end])
}

/// Single accelerate-or-brake phase to `v_c` followed by cruise, covering
/// `dist` in exactly `time`. Returns `(accel, phase_duration, v_c)`.
fn reach_exactly(dist: f64, time: f64, v: f64, cfg: &ScenarioConfig) -> Option<(f64, f64, f64)> {
    if dist <= 0.0 || time <= 0.0 {
        return None;
    }
    if v * time >= dist {
        let a = -cfg.a_min;
        let b = a * time - v;
        let disc = b * b - (v * v - 2.0 * a * dist);
        if disc < 0.0 {
            return None;
        }
        let v_c = -b + disc.sqrt();
        let dur = (v - v_c) / a;
        (v_c >= 0.0 && v_c <= v + 1e-9 && dur <= time + 1e-9).then_some((cfg.a_min, dur.max(0.0), v_c.max(0.0)))
    } else {
        let a = cfg.a_max;
        let b = v + a * time;
        let disc = b * b - (v * v + 2.0 * a * dist);
        if disc < 0.0 {
            return None;
        }
        let v_c = b - disc.sqrt();
        let dur = (v_c - v) / a;
        (v_c <= cfg.v_max && dur <= time + 1e-9).then_some((cfg.a_max, dur.max(0.0), v_c))
    }
}

/// Plan reaching `x_start` shortly after the disturbance clears. `None` when
/// even full braking reaches the region too early.
pub fn delay_plan(
    schedule: &EtaSchedule,
    kin: KinematicState,
    d: &Disturbance,
    t: f64,
    cfg: &ScenarioConfig,
) -> Option<EtaSchedule> {
    let dist = d.x_start - kin.x;
    let target = d.t_end + DELAY_MARGIN_TICKS * cfg.dt;
    if dist <= 0.0 || latest_arrival(kin.v, dist, cfg.a_min) < target - t {
        return None;
    }
    let (accel, dur, v_c) = reach_exactly(dist, target - t, kin.v, cfg)?;
    if v_c <= 0.0 {
        return None;
    }
    let mut p = Profile::new(t, kin);
    p.push(accel, dur);
    let x_after = p.breakpoints().last().map_or(kin.x, |b| b.0);
    p.push(0.0, (d.x_start - x_after).max(0.0) / v_c);
    p.settle_to(cfg.v_avg, cfg);
    Some(p.to_schedule(schedule.vehicle, cfg, schedule.knots(), &[d.x_start, d.x_end]))
}

/// Best-effort plan when neither branch works: brake to rest, wait for the
/// region to clear, then resume.
pub fn emergency_plan(
    schedule: &EtaSchedule,
    kin: KinematicState,
    d: &Disturbance,
    t: f64,
    cfg: &ScenarioConfig,
) -> EtaSchedule {
    let mut p = Profile::new(t, kin);
    let t_rest = kin.v / -cfg.a_min;
    p.push(cfg.a_min, t_rest);
    p.push(0.0, (d.t_end - t - t_rest).max(0.0));
    p.settle_to(cfg.v_avg, cfg);
    let mut s = p.to_schedule(schedule.vehicle, cfg, schedule.knots(), &[]);
    s.emergency = true;
    s
}

/// Replans a vehicle whose schedule conflicts with `d`: accelerate through
/// if the region can be cleared before onset, otherwise slow down to arrive
/// after it clears. A DELAY that full braking cannot achieve comes back with
/// the emergency flag set.
pub fn replan_etas(
    schedule: &EtaSchedule,
    kin: KinematicState,
    d: &Disturbance,
    t_apply: f64,
    cfg: &ScenarioConfig,
) -> Replan {
    if kin.x > d.x_end || !detect_conflict(schedule, d) {
        return Replan {
            kind: ReplanKind::Unchanged,
            schedule: schedule.clone(),
        };
    }
    let t_min = min_time_to_reach(kin.x, kin.v, d.x_end, cfg.a_max, cfg.v_max);
    if t_apply + t_min < d.t_start {
        return Replan {
            kind: ReplanKind::Pass,
            schedule: pass_plan(schedule, kin, d, t_apply, cfg),
        };
    }
    match delay_plan(schedule, kin, d, t_apply, cfg) {
        Some(s) => Replan {
            kind: ReplanKind::Delay,
            schedule: s,
        },
        None => Replan {
            kind: ReplanKind::Delay,
            schedule: emergency_plan(schedule, kin, d, t_apply, cfg),
        },
    }
}

/// Required-average-speed tracking of the next knot.
pub fn dfr_tracking_acceleration(kin: KinematicState, schedule: &EtaSchedule, t: f64, cfg: &ScenarioConfig) -> f64 {
    let Some(next) = schedule.next_knot(kin.x) else {
        return 0.0;
    };
    let remaining = next.t - t;
    if remaining <= 1e-9 {
        return cfg.a_max;
    }
    let v_req = ((next.x - kin.x) / remaining).clamp(0.0, cfg.v_max);
    ((v_req - kin.v) / cfg.dt).clamp(cfg.a_min, cfg.a_max)
}

/// Outcome of flying a plan ahead of time with the tracking law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlightCheck {
    /// First listed disturbance the vehicle would be inside while it is active.
    pub entered: Option<Disturbance>,
    /// Largest delay behind the plan at a CWP (negative when early).
    pub max_late: f64,
}

/// Steps a vehicle from `kin` at `t` under `accel`, calling `visit` with the
/// start and end of every tick until it returns false, the vehicle leaves
/// the corridor, or `horizon` seconds pass.
fn track<A, F>(kin: KinematicState, t: f64, horizon: f64, cfg: &ScenarioConfig, accel: A, mut visit: F)
where
    A: Fn(KinematicState, f64) -> f64,
    F: FnMut((f64, KinematicState), (f64, KinematicState)) -> bool,
{
    let limits = Limits::from_config(cfg);
    let k0 = cfg.tick_index(t);
    let (mut now, mut state) = (t, kin);
    let steps = (horizon / cfg.dt).ceil() as u64;
    for k in k0 + 1..=k0 + steps {
        if state.x >= cfg.corridor_length {
            break;
        }
        let a = accel(state, now);
        let next = step(state, |_, _| a, now, cfg.dt, &limits);
        let later = cfg.tick_time(k);
        if !visit((now, state), (later, next)) {
            break;
        }
        now = later;
        state = next;
    }
}

/// Dry-runs the tracker on `plan` from `kin` at `t` for at most `horizon`
/// seconds or until the vehicle leaves the corridor.
pub fn fly(
    plan: &EtaSchedule,
    kin: KinematicState,
    t: f64,
    hazards: &[Disturbance],
    horizon: f64,
    cfg: &ScenarioConfig,
) -> FlightCheck {
    let mut check = FlightCheck {
        entered: None,
        max_late: f64::NEG_INFINITY,
    };
    let cwp_knots: Vec<Knot> = plan.knots().iter().filter(|k| k.cwp.is_some()).copied().collect();
    let accel = |s: KinematicState, now: f64| dfr_tracking_acceleration(s, plan, now, cfg);
    track(kin, t, horizon, cfg, accel, |(t0, s0), (t1, s1)| {
        for k in cwp_knots.iter().filter(|k| s0.x < k.x && s1.x >= k.x) {
            let at = t0 + (t1 - t0) * (k.x - s0.x) / (s1.x - s0.x);
            check.max_late = check.max_late.max(at - k.t);
        }
        check.entered = hazards.iter().find(|d| d.blocks(s1.x, t1)).copied();
        check.entered.is_none()
    });
    check
}

/// Share of the braking limit a realized plan may use; the rest is left to
/// the tracker for catching up.
const PLAN_BRAKE_SHARE: f64 = 0.75;

/// Tracking command, reduced where needed so that braking at a share of
/// `a_min` from the next state would still keep the vehicle behind the plan.
fn guarded_acceleration(kin: KinematicState, plan: &EtaSchedule, t: f64, cfg: &ScenarioConfig, limits: &Limits) -> f64 {
    let cmd = dfr_tracking_acceleration(kin, plan, t, cfg);
    let brake = PLAN_BRAKE_SHARE * cfg.a_min;
    let safe = |a: f64| stays_behind(step(kin, |_, _| a, t, cfg.dt, limits), t + cfg.dt, plan, brake);
    if safe(cmd) {
        return cmd;
    }
    let (mut lo, mut hi) = (brake, cmd);
    if cmd <= brake || !safe(lo) {
        return cfg.a_min;
    }
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if safe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Whether a vehicle in state `kin` at `t` that brakes at `decel` (negative)
/// from now on never gets ahead of the plan's position curve.
fn stays_behind(kin: KinematicState, t: f64, plan: &EtaSchedule, decel: f64) -> bool {
    const EPS: f64 = 1e-9;
    if kin.x > plan.position_at(t) + EPS {
        return false;
    }
    let brake = -decel;
    let stop = kin.v / brake;
    let braking = |tau: f64| kin.x + kin.v * tau - 0.5 * brake * tau * tau;
    let start = plan.knots.partition_point(|k| k.t <= t).saturating_sub(1);
    for w in plan.knots[start..].windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.t >= t + stop {
            break;
        }
        let u = (b.x - a.x) / (b.t - a.t);
        let lo = (a.t - t).max(0.0);
        let hi = (b.t - t).min(stop);
        let gap = |tau: f64| a.x + u * (t + tau - a.t) - braking(tau);
        let turn = (kin.v - u) / brake;
        let worst = [lo, hi, turn.clamp(lo, hi)]
            .into_iter()
            .map(gap)
            .fold(f64::INFINITY, f64::min);
        if worst < -EPS {
            return false;
        }
    }
    true
}

/// Longest dry run used to turn a plan into a flown trajectory.
const REALIZE_HORIZON: f64 = 1000.0;

/// Largest time error, in seconds, when thinning a flown trajectory to knots.
const REALIZE_TOL: f64 = 0.02;

/// The earliest trajectory from `kin` at `t` that tracks `plan` but never
/// runs ahead of it, as a schedule. Past knots are kept; the rest is a dry
/// run thinned to a few knots plus exact CWP crossings. Unlike `plan` itself
/// it respects the acceleration limits, so it can be flown as written.
pub fn realize(plan: &EtaSchedule, kin: KinematicState, t: f64, cfg: &ScenarioConfig) -> EtaSchedule {
    let mut knots: Vec<Knot> = plan
        .knots
        .iter()
        .filter(|k| k.x <= kin.x + KNOT_TOL && k.t <= t)
        .copied()
        .collect();
    if knots.last().is_none_or(|k| kin.x > k.x + KNOT_TOL && t > k.t) {
        knots.push(Knot { x: kin.x, t, cwp: None });
    }
    // Flown points, with forced ones marked.
    let mut points: Vec<(Knot, bool)> = Vec::new();
    let cwps = &cfg.cwp_positions;
    let limits = Limits::from_config(cfg);
    let accel = |s: KinematicState, now: f64| guarded_acceleration(s, plan, now, cfg, &limits);
    track(kin, t, REALIZE_HORIZON, cfg, accel, |(t0, s0), (t1, s1)| {
        for (c, &p) in cwps.iter().enumerate().filter(|(_, &p)| s0.x < p && s1.x >= p) {
            let at = t0 + (t1 - t0) * (p - s0.x) / (s1.x - s0.x);
            points.push((
                Knot {
                    x: p,
                    t: at,
                    cwp: Some(c),
                },
                true,
            ));
        }
        if s1.x > cfg.corridor_length {
            let at = t0 + (t1 - t0) * (cfg.corridor_length - s0.x) / (s1.x - s0.x);
            points.push((
                Knot {
                    x: cfg.corridor_length,
                    t: at,
                    cwp: None,
                },
                true,
            ));
        } else {
            points.push((
                Knot {
                    x: s1.x,
                    t: t1,
                    cwp: None,
                },
                false,
            ));
        }
        true
    });
    let anchor = *knots.last().expect("start knot");
    let mut anchor = anchor;
    let mut pending: Vec<Knot> = Vec::new();
    for (p, forced) in points {
        if p.x <= anchor.x + KNOT_TOL || p.t <= anchor.t {
            continue;
        }
        let fits = pending.iter().all(|q| {
            let on_chord = anchor.t + (p.t - anchor.t) * (q.x - anchor.x) / (p.x - anchor.x);
            (q.t - on_chord).abs() <= REALIZE_TOL
        });
        if !fits {
            let keep = *pending.last().expect("a chord through no points always fits");
            knots.push(keep);
            anchor = keep;
            pending.clear();
        }
        if forced {
            knots.push(p);
            anchor = p;
            pending.clear();
        } else {
            pending.push(p);
        }
    }
    if let Some(&last) = pending.last() {
        knots.push(last);
    }
    // Unfinished within the horizon: carry the rest of the plan, delayed by
    // the lag at the last flown point.
    if let Some(&end) = knots.last() {
        if let Some(lag) = plan.time_at_within(end.x).map(|tp| end.t - tp) {
            let rest = plan.knots.iter().filter(|k| k.x > end.x + KNOT_TOL);
            knots.extend(rest.map(|k| Knot {
                t: k.t + lag.max(0.0),
                ..*k
            }));
        }
    }
    knots.dedup_by(|b, a| b.x <= a.x + KNOT_TOL || b.t <= a.t);
    EtaSchedule {
        vehicle: plan.vehicle,
        knots,
        emergency: plan.emergency,
    }
}
