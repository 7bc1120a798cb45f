//! The scheduling authority: admission, forecast handling, staggered update
//! application, and buffer enforcement.
//!
//! Every vehicle has two plans. `approved` is the PSU's current reservation;
//! `active` is what the vehicle flies. They differ only while an update is
//! queued for the vehicle and its propagation delay has not elapsed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ledger::{dfr_entry_check, min_future_gap, trail, CwpLedger};
use super::plan::{
    delay_plan, detect_conflict, fly, initial_eta_schedule, realize, replan_etas, EtaSchedule, FlightCheck, ReplanKind,
};
use crate::kinematics::KinematicState;
use crate::scenario::{Disturbance, ScenarioConfig};
use crate::VehicleId;

/// Tolerance when comparing apply times against the tick clock.
const TIME_TOL: f64 = 1e-6;

/// Seconds a dry run continues past the end of the last known disturbance.
const HORIZON: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendingUpdate {
    pub vehicle: VehicleId,
    pub apply_time: f64,
    /// Index of the causing disturbance in the timeline.
    pub cause: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct Plans {
    active: EtaSchedule,
    approved: EtaSchedule,
}

/// Follow-on change to another vehicle's approved plan.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjustment {
    pub vehicle: VehicleId,
    /// Smallest remaining gap when the buffer had to be relaxed.
    pub relaxed_gap: Option<f64>,
    pub emergency: bool,
    /// The shifted plan ran into a disturbance and was replaced by a delay plan.
    pub delayed: bool,
}

/// Outcome of applying one queued update.
#[derive(Clone, Debug, PartialEq)]
pub struct ApplyReport {
    pub update: PendingUpdate,
    /// Branch taken when the vehicle had to replan from its actual state;
    /// `None` when it adopted the already-approved plan.
    pub replan: Option<ReplanKind>,
    pub emergency: bool,
    pub adjustments: Vec<Adjustment>,
    pub appended: Vec<PendingUpdate>,
}

/// Outcome of admitting a vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmitReport {
    pub replans: Vec<(usize, ReplanKind)>,
    pub emergency: bool,
    pub adjustments: Vec<Adjustment>,
}

#[derive(Clone, Debug)]
pub struct Psu {
    cfg: ScenarioConfig,
    timeline: Vec<Disturbance>,
    plans: BTreeMap<VehicleId, Plans>,
    queue: Vec<PendingUpdate>,
    tails: HashMap<usize, f64>,
}

impl Psu {
    pub fn new(cfg: &ScenarioConfig, timeline: Vec<Disturbance>) -> Self {
        Self {
            cfg: cfg.clone(),
            timeline,
            plans: BTreeMap::new(),
            queue: Vec::new(),
            tails: HashMap::new(),
        }
    }

    pub fn ledger(&self) -> CwpLedger {
        CwpLedger::from_schedules(self.cfg.cwp_positions.len(), self.plans.values().map(|p| &p.approved))
    }

    /// Ledger of the plans the vehicles are currently flying.
    pub fn active_ledger(&self) -> CwpLedger {
        CwpLedger::from_schedules(self.cfg.cwp_positions.len(), self.plans.values().map(|p| &p.active))
    }

    pub fn entry_time(&self, requested: f64) -> f64 {
        dfr_entry_check(requested, &self.ledger(), &self.cfg)
    }

    pub fn active(&self, vehicle: VehicleId) -> Option<&EtaSchedule> {
        self.plans.get(&vehicle).map(|p| &p.active)
    }

    pub fn approved(&self, vehicle: VehicleId) -> Option<&EtaSchedule> {
        self.plans.get(&vehicle).map(|p| &p.approved)
    }

    pub fn active_plans(&self) -> impl Iterator<Item = &EtaSchedule> {
        self.plans.values().map(|p| &p.active)
    }

    pub fn pending(&self) -> &[PendingUpdate] {
        &self.queue
    }

    pub fn remove(&mut self, vehicle: VehicleId) {
        self.plans.remove(&vehicle);
    }

    /// Disturbances announced by `t` that have not yet ended.
    fn known(&self, t: f64) -> impl Iterator<Item = &Disturbance> {
        self.timeline.iter().filter(move |d| d.is_forecast(t) && t <= d.t_end)
    }

    /// Registers a vehicle entering at `t`. Its cruise plan is replanned at
    /// once against any disturbance already announced.
    pub fn admit(&mut self, vehicle: VehicleId, t: f64) -> AdmitReport {
        let kin = KinematicState::new(0.0, self.cfg.v_avg);
        let mut plan = initial_eta_schedule(vehicle, t, &self.cfg);
        let mut replans = Vec::new();
        let known: Vec<Disturbance> = self.known(t).copied().collect();
        for d in &known {
            if detect_conflict(&plan, d) {
                let r = replan_etas(&plan, kin, d, t, &self.cfg);
                replans.push((d.index, r.kind));
                plan = r.schedule;
            }
        }
        let emergency = plan.emergency;
        self.plans.insert(
            vehicle,
            Plans {
                active: plan.clone(),
                approved: plan,
            },
        );
        let states = |v: VehicleId| (v == vehicle).then_some(kin);
        let adjustments = self.enforce_from(vehicle, t, &states);
        if let Some(p) = self.plans.get_mut(&vehicle) {
            p.active = p.approved.clone();
        }
        AdmitReport {
            replans,
            emergency,
            adjustments,
        }
    }

    /// Builds and enqueues the staggered updates for disturbance `cause`,
    /// announced at `t`. Vehicles are ordered by proximity to the region; the
    /// set grows until it also covers every vehicle whose buffer the earlier
    /// replans would disturb.
    pub fn on_forecast<S>(&mut self, cause: usize, t: f64, states: &S) -> Vec<PendingUpdate>
    where
        S: Fn(VehicleId) -> Option<KinematicState>,
    {
        let queue = self.build_update_queue(cause, t, states);
        if let Some(last) = queue.last() {
            self.tails.insert(cause, last.apply_time);
        }
        for u in &queue {
            self.enqueue(*u);
        }
        queue
    }

    pub fn build_update_queue<S>(&self, cause: usize, t: f64, states: &S) -> Vec<PendingUpdate>
    where
        S: Fn(VehicleId) -> Option<KinematicState>,
    {
        let d = self.timeline[cause];
        let mut set: BTreeSet<VehicleId> = self
            .plans
            .iter()
            .filter(|(v, p)| {
                states(**v).is_some_and(|s| {
                    s.x <= d.x_end && (detect_conflict(&p.approved, &d) || self.enters(&p.approved, s, t, &d))
                })
            })
            .map(|(v, _)| *v)
            .collect();
        loop {
            let order = self.proximity_order(&set, &d, states);
            let mut sim = self.clone();
            sim.queue.clear();
            sim.tails
                .insert(cause, t + self.cfg.dfr.d_prop * (order.len() as f64 - 1.0));
            let mut newly = BTreeSet::new();
            for (k, &v) in order.iter().enumerate() {
                let t_k = t + k as f64 * self.cfg.dfr.d_prop;
                let snapshot: HashMap<VehicleId, KinematicState> = sim
                    .plans
                    .iter()
                    .filter_map(|(&u, p)| {
                        let s = if k == 0 {
                            states(u)
                        } else {
                            Some(p.active.state_at(t_k))
                        };
                        s.map(|s| (u, s))
                    })
                    .collect();
                let update = PendingUpdate {
                    vehicle: v,
                    apply_time: t_k,
                    cause,
                };
                let report = sim.apply(update, t_k, &|u| snapshot.get(&u).copied());
                newly.extend(report.appended.iter().map(|u| u.vehicle).filter(|u| !set.contains(u)));
            }
            if newly.is_empty() {
                return order
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| PendingUpdate {
                        vehicle: v,
                        apply_time: t + k as f64 * self.cfg.dfr.d_prop,
                        cause,
                    })
                    .collect();
            }
            set.extend(newly);
        }
    }

    fn proximity_order<S>(&self, set: &BTreeSet<VehicleId>, d: &Disturbance, states: &S) -> Vec<VehicleId>
    where
        S: Fn(VehicleId) -> Option<KinematicState>,
    {
        let mut order: Vec<(f64, VehicleId)> = set
            .iter()
            .map(|&v| (states(v).map_or(f64::INFINITY, |s| (d.x_start - s.x).abs()), v))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order.into_iter().map(|(_, v)| v).collect()
    }

    fn enqueue(&mut self, u: PendingUpdate) {
        let at = self
            .queue
            .iter()
            .position(|q| q.apply_time > u.apply_time + TIME_TOL)
            .unwrap_or(self.queue.len());
        self.queue.insert(at, u);
    }

    /// Applies every queued update due at `t`, in queue order, including any
    /// follow-on updates that fall due within the same instant.
    pub fn process_due<S>(&mut self, t: f64, states: &S) -> Vec<ApplyReport>
    where
        S: Fn(VehicleId) -> Option<KinematicState>,
    {
        let mut out = Vec::new();
        while self.queue.first().is_some_and(|u| u.apply_time <= t + TIME_TOL) {
            let u = self.queue.remove(0);
            if !self.plans.contains_key(&u.vehicle) {
                continue;
            }
            out.push(self.apply(u, t, states));
        }
        out
    }

    fn apply<S>(&mut self, u: PendingUpdate, t: f64, states: &S) -> ApplyReport
    where
        S: Fn(VehicleId) -> Option<KinematicState>,
    {
        let d = self.timeline[u.cause];
        let mut replan = None;
        let mut emergency = false;
        if let (Some(kin), Some(p)) = (states(u.vehicle), self.plans.get_mut(&u.vehicle)) {
            if kin.x <= d.x_end && detect_conflict(&p.approved, &d) {
                let r = replan_etas(&p.approved, kin, &d, t, &self.cfg);
                replan = Some(r.kind);
                emergency = r.schedule.emergency;
                p.approved = r.schedule;
            }
        }
        let adjustments = self.enforce_from(u.vehicle, t, states);
        if let Some(p) = self.plans.get_mut(&u.vehicle) {
            p.active = p.approved.clone();
        }

        let mut appended = Vec::new();
        for adj in adjustments.iter().filter(|a| a.vehicle != u.vehicle) {
            let queued = self
                .queue
                .iter()
                .any(|q| q.vehicle == adj.vehicle && q.apply_time + TIME_TOL >= t);
            if queued || appended.iter().any(|q: &PendingUpdate| q.vehicle == adj.vehicle) {
                continue;
            }
            let tail = self.tails.get(&u.cause).copied().unwrap_or(t).max(t);
            let next = PendingUpdate {
                vehicle: adj.vehicle,
                apply_time: tail + self.cfg.dfr.d_prop,
                cause: u.cause,
            };
            self.tails.insert(u.cause, next.apply_time);
            self.enqueue(next);
            appended.push(next);
        }
        ApplyReport {
            update: u,
            replan,
            emergency,
            adjustments,
            appended,
        }
    }

    /// Dry-runs `plan` from `kin` against the disturbances known at `t`.
    fn flight(&self, plan: &EtaSchedule, kin: KinematicState, t: f64) -> FlightCheck {
        let hazards: Vec<Disturbance> = self.known(t).copied().collect();
        let until = hazards.iter().map(|d| d.t_end).fold(t, f64::max);
        fly(plan, kin, t, &hazards, until - t + HORIZON, &self.cfg)
    }

    /// Whether flying `plan` from `kin` would take the vehicle into `d`.
    fn enters(&self, plan: &EtaSchedule, kin: KinematicState, t: f64, d: &Disturbance) -> bool {
        fly(
            plan,
            kin,
            t,
            std::slice::from_ref(d),
            d.t_end - t + self.cfg.dt,
            &self.cfg,
        )
        .entered
        .is_some()
    }

    /// Whether the tracker can fly `plan` from `kin` at `t` without entering
    /// a known disturbance or falling behind its reservations.
    fn feasible(&self, plan: &EtaSchedule, kin: Option<KinematicState>, t: f64) -> bool {
        let Some(kin) = kin else {
            return true;
        };
        if self.conflicting(plan, kin, t).is_some() {
            return false;
        }
        let check = self.flight(plan, kin, t);
        check.entered.is_none() && check.max_late <= self.late_tolerance()
    }

    fn late_tolerance(&self) -> f64 {
        (self.cfg.dfr.t_buffer - self.cfg.dfr.t_buffer_min).max(2.0 * self.cfg.dt)
    }

    /// Disturbance the plan runs into, by schedule or by dry run.
    fn conflicting(&self, plan: &EtaSchedule, kin: KinematicState, t: f64) -> Option<Disturbance> {
        self.known(t)
            .find(|d| kin.x <= d.x_end && detect_conflict(plan, d))
            .copied()
    }

    /// Restores the buffer behind `start` and cascades to its followers in
    /// entry order. Stops at the first follower needing no change.
    fn enforce_from<S>(&mut self, start: VehicleId, t: f64, states: &S) -> Vec<Adjustment>
    where
        S: Fn(VehicleId) -> Option<KinematicState>,
    {
        let ids: Vec<VehicleId> = self.plans.keys().copied().collect();
        let Some(first) = ids.iter().position(|&v| v == start) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for i in first..ids.len() {
            let v = ids[i];
            let leader = (i > 0).then(|| self.plans[&ids[i - 1]].approved.clone());
            let current = self.plans[&v].approved.clone();
            let short = leader
                .as_ref()
                .is_some_and(|l| trail(&current, l, self.cfg.dfr.t_buffer, t).is_some());
            let kin = states(v);
            if !short {
                if i > first {
                    break;
                }
                if self.feasible(&current, kin, t) {
                    continue;
                }
            }
            let (plan, adj) = self.resolve(&current, leader.as_ref(), kin, t);
            out.push(adj);
            self.plans.get_mut(&v).expect("id from keys").approved = plan;
        }
        out
    }

    /// New plan for a vehicle that is too close to `leader` or cannot fly
    /// `current`. In order: push back behind the leader, delay behind a
    /// disturbance the push-back runs into, relax to the minimum buffer, and
    /// finally keep the push-back with an emergency flag.
    fn resolve(
        &self,
        current: &EtaSchedule,
        leader: Option<&EtaSchedule>,
        kin: Option<KinematicState>,
        t: f64,
    ) -> (EtaSchedule, Adjustment) {
        let v = current.vehicle;
        let (full, min) = (self.cfg.dfr.t_buffer, self.cfg.dfr.t_buffer_min);
        let Some(kin) = kin else {
            return (self.behind(current, leader, full, t), Adjustment::plain(v));
        };
        let flown = self.flown(current, leader, full, kin, t);
        if self.feasible(&flown, Some(kin), t) {
            return (flown, Adjustment::plain(v));
        }
        let hit = self
            .conflicting(&flown, kin, t)
            .or_else(|| self.flight(&flown, kin, t).entered)
            .or_else(|| self.conflicting(current, kin, t));
        if let Some(delayed) = hit.and_then(|d| delay_plan(current, kin, &d, t, &self.cfg)) {
            for gap in [full, min] {
                let plan = self.flown(&delayed, leader, gap, kin, t);
                if self.feasible(&plan, Some(kin), t) {
                    let adj = Adjustment {
                        delayed: true,
                        ..self.relaxation(v, &plan, leader, t)
                    };
                    return (plan, adj);
                }
            }
        }
        let relaxed = self.flown(current, leader, min, kin, t);
        if self.feasible(&relaxed, Some(kin), t) {
            let adj = self.relaxation(v, &relaxed, leader, t);
            return (relaxed, adj);
        }
        let mut plan = flown;
        plan.emergency = true;
        (
            plan,
            Adjustment {
                emergency: true,
                ..Adjustment::plain(v)
            },
        )
    }

    /// `plan` pushed back to trail `leader` by `gap`, then made flyable.
    /// The final push only absorbs tick-level rounding.
    fn flown(
        &self,
        plan: &EtaSchedule,
        leader: Option<&EtaSchedule>,
        gap: f64,
        kin: KinematicState,
        t: f64,
    ) -> EtaSchedule {
        let pushed = self.behind(plan, leader, gap, t);
        self.behind(&realize(&pushed, kin, t, &self.cfg), leader, gap, t)
    }

    /// Adjustment for `plan`, recording the gap if it fell below the full buffer.
    fn relaxation(&self, v: VehicleId, plan: &EtaSchedule, leader: Option<&EtaSchedule>, t: f64) -> Adjustment {
        let gap = leader.and_then(|l| min_future_gap(plan, l, t));
        Adjustment {
            relaxed_gap: gap.filter(|g| *g < self.cfg.dfr.t_buffer - 1e-9),
            ..Adjustment::plain(v)
        }
    }

    /// `plan` pushed back to trail `leader` by `gap` at every future CWP.
    fn behind(&self, plan: &EtaSchedule, leader: Option<&EtaSchedule>, gap: f64, t: f64) -> EtaSchedule {
        leader
            .and_then(|l| trail(plan, l, gap, t))
            .unwrap_or_else(|| plan.clone())
    }
}

impl Adjustment {
    fn plain(vehicle: VehicleId) -> Self {
        Self {
            vehicle,
            relaxed_gap: None,
            emergency: false,
            delayed: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_disturbance() -> Disturbance {
        Disturbance {
            index: 0,
            x_start: 2000.0,
            x_end: 2050.0,
            t_start: 120.0,
            t_end: 130.0,
            forecast_time: 105.0,
        }
    }

    fn cfg(d_prop: f64) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.dfr.d_prop = d_prop;
        c
    }

    /// Admits vehicles at the given entry times and returns states at `t`
    /// assuming each flies its plan exactly.
    fn populate(psu: &mut Psu, entries: &[f64]) {
        for (i, &e) in entries.iter().enumerate() {
            psu.admit(i as VehicleId, e);
        }
    }

    fn plan_states(psu: &Psu) -> impl Fn(VehicleId) -> Option<KinematicState> + '_ {
        move |v| psu.active(v).map(|p| p.state_at(105.0))
    }

    #[test]
    fn three_affected_vehicles_are_staggered() {
        let c = cfg(0.2);
        let mut psu = Psu::new(&c, vec![sample_disturbance()]);
        // Entries in [17.5, 30] cross the region during [120, 130].
        populate(&mut psu, &[18.0, 22.0, 26.0]);
        let frozen = psu.clone();
        let q = psu.on_forecast(0, 105.0, &plan_states(&frozen));
        let times: Vec<f64> = q.iter().map(|u| u.apply_time).collect();
        assert_eq!(q.iter().map(|u| u.vehicle).collect::<Vec<_>>(), vec![0, 1, 2]);
        for (got, want) in times.iter().zip([105.0, 105.2, 105.4]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn large_propagation_delay_spacing() {
        let c = cfg(3.0);
        let mut psu = Psu::new(&c, vec![sample_disturbance()]);
        populate(&mut psu, &[18.0, 22.0]);
        let frozen = psu.clone();
        let q = psu.on_forecast(0, 105.0, &plan_states(&frozen));
        let times: Vec<f64> = q.iter().map(|u| u.apply_time).collect();
        assert_eq!(times.len(), 2);
        assert!((times[0] - 105.0).abs() < 1e-9 && (times[1] - 108.0).abs() < 1e-9);
    }

    #[test]
    fn unaffected_fleet_gives_empty_queue() {
        let c = cfg(0.2);
        let mut psu = Psu::new(&c, vec![sample_disturbance()]);
        // Clears 2050 at 112.5.
        populate(&mut psu, &[10.0 - 7.5]);
        let frozen = psu.clone();
        assert!(psu.on_forecast(0, 105.0, &plan_states(&frozen)).is_empty());
    }

    #[test]
    fn active_plan_changes_only_at_apply_time() {
        let c = cfg(0.2);
        let mut psu = Psu::new(&c, vec![sample_disturbance()]);
        populate(&mut psu, &[18.0, 22.0, 26.0]);
        let before: Vec<EtaSchedule> = psu.active_plans().cloned().collect();
        let frozen = psu.clone();
        let states = plan_states(&frozen);
        psu.on_forecast(0, 105.0, &states);
        let r = psu.process_due(105.0, &states);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].replan, Some(ReplanKind::Pass));
        assert_ne!(psu.active(0).unwrap(), &before[0]);
        assert_eq!(psu.active(1).unwrap(), &before[1]);
        assert_eq!(psu.active(2).unwrap(), &before[2]);
        assert_eq!(psu.process_due(105.2, &states).len(), 1);
        assert_eq!(psu.process_due(105.4, &states).len(), 1);
        assert!(psu.pending().is_empty());
        for s in psu.active_plans() {
            assert!(!detect_conflict(s, &sample_disturbance()));
        }
        assert!(psu.ledger().min_gap().unwrap() >= c.dfr.t_buffer - 1e-9);
    }

    #[test]
    fn delayed_leader_pushes_follower() {
        let c = cfg(0.0);
        let d = Disturbance {
            forecast_time: 115.0,
            ..sample_disturbance()
        };
        let mut psu = Psu::new(&c, vec![d]);
        // At 115 vehicle 0 is at 1880 and can no longer clear 2050 before
        // onset; vehicle 1 trails by 4 s and also crosses during the window.
        populate(&mut psu, &[21.0, 25.0]);
        let frozen = psu.clone();
        let states = |v: VehicleId| frozen.active(v).map(|p| p.state_at(115.0));
        psu.on_forecast(0, 115.0, &states);
        let reports = psu.process_due(115.0, &states);
        assert_eq!(reports[0].update.vehicle, 0);
        assert_eq!(reports[0].replan, Some(ReplanKind::Delay));
        assert!(reports[0].adjustments.iter().any(|a| a.vehicle == 1));
        let ledger = psu.ledger();
        assert!(ledger.min_gap().unwrap() >= c.dfr.t_buffer - 1e-9);
        for s in psu.active_plans() {
            assert!(!detect_conflict(s, &d), "{:?}", s.vehicle);
        }
    }

    #[test]
    fn entry_after_forecast_replans_immediately() {
        let c = cfg(0.2);
        let mut psu = Psu::new(&c, vec![sample_disturbance()]);
        // Entering at 20.5 would cross 2000 at 120.5.
        let report = psu.admit(0, 20.5);
        assert!(report.replans.is_empty(), "not yet announced at entry");
        let mut psu = Psu::new(
            &c,
            vec![Disturbance {
                forecast_time: 0.0,
                ..sample_disturbance()
            }],
        );
        // From the entrance there is ample time to clear the region first.
        let report = psu.admit(0, 20.5);
        assert_eq!(report.replans, vec![(0, ReplanKind::Pass)]);
        assert!(!detect_conflict(psu.active(0).unwrap(), &sample_disturbance()));
    }
}
