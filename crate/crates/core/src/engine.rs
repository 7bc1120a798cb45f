//! Fixed-step simulation loop.
//!
//! Each tick, in order: release forecasts, apply due schedule updates, admit
//! at most one queued vehicle, compute commands from start-of-tick states,
//! integrate, retire finishers, then check for collisions and disturbance
//! entries at the post-step time.

use std::collections::VecDeque;

use crate::dfr::{dfr_tracking_acceleration, Psu, ReplanKind};
use crate::kinematics::{step, KinematicState, Limits};
use crate::metrics::{separation_samples, ttc, MetricSample};
use crate::scenario::{Disturbance, Mode, ScenarioConfig};
use crate::vfr::{vfr_acceleration, vfr_entry_check, EntryDecision, VfrMode, VfrVehicleState};
use crate::VehicleId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    TimeLimit,
    Collision,
    DisturbanceEntry,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::TimeLimit => "TIME_LIMIT",
            Termination::Collision => "COLLISION",
            Termination::DisturbanceEntry => "DISTURBANCE_ENTRY",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    Collision {
        follower: VehicleId,
        leader: VehicleId,
        separation: f64,
    },
    DisturbanceEntry {
        vehicle: VehicleId,
        disturbance: usize,
        x: f64,
    },
    ForecastReleased {
        disturbance: usize,
        queued: usize,
    },
    /// A queued schedule update took effect. `branch` is set when the
    /// vehicle replanned from its actual state rather than adopting the
    /// plan already approved for it.
    EtaUpdate {
        vehicle: VehicleId,
        disturbance: usize,
        branch: Option<ReplanKind>,
    },
    /// A vehicle entering after a forecast was planned around it directly.
    EntryReplan {
        vehicle: VehicleId,
        disturbance: usize,
        branch: ReplanKind,
    },
    BufferRelaxation {
        vehicle: VehicleId,
        gap: f64,
    },
    Emergency {
        vehicle: VehicleId,
    },
    ModeChange {
        vehicle: VehicleId,
        mode: VfrMode,
        disturbance: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VehicleStatus {
    Queued,
    Active,
    Finished,
    Collided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleRecord {
    pub id: VehicleId,
    pub request_time: f64,
    pub entry_time: Option<f64>,
    pub finish_time: Option<f64>,
    pub status: VehicleStatus,
}

/// One reserved ETA in a schedule snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub vehicle: VehicleId,
    pub cwp: usize,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionRow {
    pub t: f64,
    pub vehicle: VehicleId,
    pub x: f64,
    pub v: f64,
}

/// Realized passage of a CWP, interpolated within the tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CwpCrossing {
    pub vehicle: VehicleId,
    pub cwp: usize,
    pub t: f64,
}

/// Optional per-tick outputs; the summary is always computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub samples: bool,
    pub positions: bool,
    pub trace: bool,
}

impl RunOptions {
    pub fn everything() -> Self {
        Self {
            samples: true,
            positions: true,
            trace: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub termination: Termination,
    pub end_time: f64,
    pub events: Vec<Event>,
    pub vehicles: Vec<VehicleRecord>,
    /// Smallest TTC over all adjacent pairs and ticks, capped.
    pub min_ttc: f64,
    /// Smallest raw separation over vehicle pairs and disturbance edges;
    /// infinite if nothing was ever measured.
    pub min_separation: f64,
    pub crossings: Vec<CwpCrossing>,
    pub samples: Vec<MetricSample>,
    pub positions: Vec<PositionRow>,
    pub eta_trace: Vec<TraceRow>,
}

impl SimulationResult {
    pub fn admitted(&self) -> usize {
        self.vehicles.iter().filter(|v| v.entry_time.is_some()).count()
    }
}

#[derive(Clone, Debug)]
struct Active {
    id: VehicleId,
    vfr: VfrVehicleState,
}

struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    opts: RunOptions,
    limits: Limits,
    timeline: Vec<Disturbance>,
    released: Vec<bool>,
    psu: Option<Psu>,
    /// Active vehicles, downstream first.
    active: Vec<Active>,
    waiting: VecDeque<VehicleId>,
    next_request: u64,
    result: SimulationResult,
}

/// Runs one scenario to completion.
pub fn run(cfg: &ScenarioConfig, opts: RunOptions) -> SimulationResult {
    let mut sim = Simulation::new(cfg, opts);
    let ticks = cfg.tick_count();
    for k in 0..ticks {
        if let Some(cause) = sim.tick(k) {
            sim.result.termination = cause;
            sim.result.end_time = sim.time(k + 1);
            return sim.finish();
        }
    }
    sim.result.end_time = sim.time(ticks);
    sim.finish()
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a ScenarioConfig, opts: RunOptions) -> Self {
        let timeline = cfg.disturbance_timeline();
        let psu = (cfg.mode == Mode::Dfr).then(|| Psu::new(cfg, timeline.clone()));
        Self {
            cfg,
            opts,
            limits: Limits::from_config(cfg),
            released: vec![false; timeline.len()],
            timeline,
            psu,
            active: Vec::new(),
            waiting: VecDeque::new(),
            next_request: 0,
            result: SimulationResult {
                termination: Termination::TimeLimit,
                end_time: 0.0,
                events: Vec::new(),
                vehicles: Vec::new(),
                min_ttc: cfg.report.ttc_cap,
                min_separation: f64::INFINITY,
                crossings: Vec::new(),
                samples: Vec::new(),
                positions: Vec::new(),
                eta_trace: Vec::new(),
            },
        }
    }

    fn time(&self, k: u64) -> f64 {
        self.cfg.tick_time(k)
    }

    fn event(&mut self, t: f64, kind: EventKind) {
        self.result.events.push(Event { t, kind });
    }

    fn finish(mut self) -> SimulationResult {
        for a in &self.active {
            let rec = &mut self.result.vehicles[a.id as usize];
            if rec.status == VehicleStatus::Queued {
                rec.status = VehicleStatus::Active;
            }
        }
        self.result
    }

    fn states(&self) -> Vec<(VehicleId, KinematicState)> {
        self.active.iter().map(|a| (a.id, a.vfr.kin)).collect()
    }

    fn tick(&mut self, k: u64) -> Option<Termination> {
        let t = self.time(k);
        self.request_arrivals(t);
        self.release_forecasts(t);
        self.apply_updates(t);
        self.admit(t);

        let start = self.states();
        let next = match self.cfg.mode {
            Mode::Vfr => self.vfr_step(t, &start),
            Mode::Dfr => self.dfr_step(t, &start),
        };
        let t_next = self.time(k + 1);
        self.advance(t, &start, next);
        self.detect_events(t_next)
    }

    fn request_arrivals(&mut self, t: f64) {
        let rate = self.cfg.arrival_rate;
        if rate <= 0.0 {
            return;
        }
        loop {
            let at = self.next_request as f64 / rate;
            if at > t + 1e-9 || at >= self.cfg.sim_end {
                break;
            }
            let id = self.result.vehicles.len() as VehicleId;
            self.result.vehicles.push(VehicleRecord {
                id,
                request_time: at,
                entry_time: None,
                finish_time: None,
                status: VehicleStatus::Queued,
            });
            self.waiting.push_back(id);
            self.next_request += 1;
        }
    }

    fn release_forecasts(&mut self, t: f64) {
        for i in 0..self.timeline.len() {
            if self.released[i] || self.timeline[i].forecast_time > t + 1e-9 {
                continue;
            }
            self.released[i] = true;
            let states = self.states();
            let queued = match self.psu.as_mut() {
                Some(psu) => {
                    let lookup = |v: VehicleId| states.iter().find(|s| s.0 == v).map(|s| s.1);
                    psu.on_forecast(i, t, &lookup).len()
                }
                None => 0,
            };
            self.event(t, EventKind::ForecastReleased { disturbance: i, queued });
        }
    }

    fn apply_updates(&mut self, t: f64) {
        let states = self.states();
        let Some(psu) = self.psu.as_mut() else {
            return;
        };
        let lookup = |v: VehicleId| states.iter().find(|s| s.0 == v).map(|s| s.1);
        let reports = psu.process_due(t, &lookup);
        if reports.is_empty() {
            return;
        }
        let mut events = Vec::new();
        for r in &reports {
            events.push(EventKind::EtaUpdate {
                vehicle: r.update.vehicle,
                disturbance: r.update.cause,
                branch: r.replan,
            });
            if r.emergency {
                events.push(EventKind::Emergency {
                    vehicle: r.update.vehicle,
                });
            }
            push_adjustment_events(&mut events, &r.adjustments);
        }
        if self.opts.trace {
            for plan in psu.active_plans() {
                for (cwp, eta) in plan.entries() {
                    self.result.eta_trace.push(TraceRow {
                        t,
                        vehicle: plan.vehicle,
                        cwp,
                        eta,
                    });
                }
            }
        }
        for e in events {
            self.event(t, e);
        }
    }

    fn admit(&mut self, t: f64) {
        let Some(&id) = self.waiting.front() else {
            return;
        };
        let speed = match self.cfg.mode {
            Mode::Vfr => {
                let last = self.active.last().map(|a| a.vfr.kin);
                match vfr_entry_check(last.map(|s| s.x), last.map(|s| s.v), self.cfg) {
                    EntryDecision::Admit { speed } => speed,
                    EntryDecision::Hold => return,
                }
            }
            Mode::Dfr => {
                let psu = self.psu.as_mut().expect("scheduler present in DFR mode");
                let requested = self.result.vehicles[id as usize].request_time;
                if psu.entry_time(requested) > t + 1e-9 {
                    return;
                }
                let report = psu.admit(id, t);
                let mut events: Vec<EventKind> = report
                    .replans
                    .iter()
                    .map(|&(disturbance, branch)| EventKind::EntryReplan {
                        vehicle: id,
                        disturbance,
                        branch,
                    })
                    .collect();
                if report.emergency {
                    events.push(EventKind::Emergency { vehicle: id });
                }
                push_adjustment_events(&mut events, &report.adjustments);
                for e in events {
                    self.event(t, e);
                }
                self.cfg.v_avg
            }
        };
        self.waiting.pop_front();
        let rec = &mut self.result.vehicles[id as usize];
        rec.entry_time = Some(t);
        rec.status = VehicleStatus::Active;
        self.active.push(Active {
            id,
            vfr: VfrVehicleState::new(KinematicState::new(0.0, speed)),
        });
    }

    fn vfr_step(&mut self, t: f64, start: &[(VehicleId, KinematicState)]) -> Vec<KinematicState> {
        let mut changes = Vec::new();
        for i in 0..self.active.len() {
            let leader_speed = (i > 0).then(|| start[i - 1].1.v);
            let a = &mut self.active[i];
            let before = (a.vfr.mode, a.vfr.committed.map(|d| d.index));
            a.vfr.update_mode(leader_speed, &self.timeline, t, self.cfg);
            let after = (a.vfr.mode, a.vfr.committed.map(|d| d.index));
            if before != after {
                changes.push(EventKind::ModeChange {
                    vehicle: a.id,
                    mode: after.0,
                    disturbance: after.1,
                });
            }
        }
        for e in changes {
            self.event(t, e);
        }
        self.active
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let leader = (i > 0).then(|| start[i - 1].1);
                // Within the step the leader is extrapolated at its tick-start speed.
                let leader_at = |ts: f64| leader.map(|l| KinematicState::new(l.x + l.v * (ts - t), l.v));
                step(
                    a.vfr.kin,
                    |ts, s| vfr_acceleration(&a.vfr, s, leader_at(ts), ts, self.cfg),
                    t,
                    self.cfg.dt,
                    &self.limits,
                )
            })
            .collect()
    }

    fn dfr_step(&self, t: f64, start: &[(VehicleId, KinematicState)]) -> Vec<KinematicState> {
        let psu = self.psu.as_ref().expect("scheduler present in DFR mode");
        start
            .iter()
            .map(|&(id, kin)| {
                let a = psu
                    .active(id)
                    .map_or(0.0, |plan| dfr_tracking_acceleration(kin, plan, t, self.cfg));
                step(kin, |_, _| a, t, self.cfg.dt, &self.limits)
            })
            .collect()
    }

    /// Commits the integrated states, records CWP crossings and finishers.
    fn advance(&mut self, t: f64, start: &[(VehicleId, KinematicState)], next: Vec<KinematicState>) {
        let dt = self.cfg.dt;
        let length = self.cfg.corridor_length;
        let mut finished = Vec::new();
        for (i, new) in next.into_iter().enumerate() {
            let (id, old) = start[i];
            let at = |p: f64| t + dt * (p - old.x) / (new.x - old.x);
            for (cwp, &p) in self.cfg.cwp_positions.iter().enumerate() {
                if old.x < p && new.x >= p {
                    self.result.crossings.push(CwpCrossing {
                        vehicle: id,
                        cwp,
                        t: at(p),
                    });
                }
            }
            if new.x >= length {
                let rec = &mut self.result.vehicles[id as usize];
                rec.finish_time = Some(at(length));
                rec.status = VehicleStatus::Finished;
                finished.push(id);
            }
            self.active[i].vfr.kin = new;
        }
        if !finished.is_empty() {
            self.active.retain(|a| !finished.contains(&a.id));
            if let Some(psu) = self.psu.as_mut() {
                for id in finished {
                    psu.remove(id);
                }
            }
        }
    }

    fn detect_events(&mut self, t: f64) -> Option<Termination> {
        let states = self.states();
        if self.opts.positions {
            self.result
                .positions
                .extend(states.iter().map(|&(vehicle, s)| PositionRow {
                    t,
                    vehicle,
                    x: s.x,
                    v: s.v,
                }));
        }
        self.record_metrics(t, &states);

        for w in states.windows(2) {
            let ((leader, l), (follower, f)) = (w[0], w[1]);
            let separation = l.x - f.x;
            if separation <= 0.0 {
                self.event(
                    t,
                    EventKind::Collision {
                        follower,
                        leader,
                        separation,
                    },
                );
                for id in [leader, follower] {
                    self.result.vehicles[id as usize].status = VehicleStatus::Collided;
                }
                return Some(Termination::Collision);
            }
        }
        for &(vehicle, s) in &states {
            if let Some(d) = self.timeline.iter().find(|d| d.blocks(s.x, t)) {
                let disturbance = d.index;
                self.event(
                    t,
                    EventKind::DisturbanceEntry {
                        vehicle,
                        disturbance,
                        x: s.x,
                    },
                );
                return Some(Termination::DisturbanceEntry);
            }
        }
        None
    }

    fn record_metrics(&mut self, t: f64, states: &[(VehicleId, KinematicState)]) {
        if self.opts.samples {
            let samples = separation_samples(t, states, &self.timeline, self.cfg);
            for s in &samples {
                self.absorb(s.kind, s.value);
            }
            self.result.samples.extend(samples);
            return;
        }
        // Same minima without materializing samples.
        for w in states.windows(2) {
            let (l, f) = (w[0].1, w[1].1);
            self.result.min_separation = self.result.min_separation.min(l.x - f.x);
            self.result.min_ttc = self.result.min_ttc.min(ttc(f, l, self.cfg.report.ttc_cap));
        }
        for &(_, s) in states {
            for d in &self.timeline {
                if let Some(dist) = crate::metrics::disturbance_distance(s.x, d, t) {
                    self.result.min_separation = self.result.min_separation.min(dist);
                }
            }
        }
    }

    fn absorb(&mut self, kind: crate::metrics::SampleKind, value: f64) {
        match kind {
            crate::metrics::SampleKind::Separation => {
                self.result.min_separation = self.result.min_separation.min(value)
            }
            crate::metrics::SampleKind::Ttc => self.result.min_ttc = self.result.min_ttc.min(value),
        }
    }
}

fn push_adjustment_events(events: &mut Vec<EventKind>, adjustments: &[crate::dfr::Adjustment]) {
    for adj in adjustments {
        if let Some(gap) = adj.relaxed_gap {
            events.push(EventKind::BufferRelaxation {
                vehicle: adj.vehicle,
                gap,
            });
        }
        if adj.emergency {
            events.push(EventKind::Emergency { vehicle: adj.vehicle });
        }
    }
}
