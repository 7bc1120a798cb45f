//! Spatially reactive control: entry gating, foresight-limited disturbance
//! perception, Helly following, and the pass/stop maneuver.

use crate::kinematics::{can_stop_before, helly_acceleration, KinematicState};
use crate::scenario::{Disturbance, ScenarioConfig};

/// Distance short of the region start that a stopping vehicle aims for, so
/// that rounding in the integration never parks it on the boundary.
pub const STOP_STANDOFF: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VfrMode {
    Follow,
    Pass,
    Stop,
}

impl VfrMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VfrMode::Follow => "FOLLOW",
            VfrMode::Pass => "PASS",
            VfrMode::Stop => "STOP",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VfrVehicleState {
    pub kin: KinematicState,
    pub mode: VfrMode,
    /// The disturbance the current PASS/STOP decision refers to.
    pub committed: Option<Disturbance>,
}

impl VfrVehicleState {
    pub fn new(kin: KinematicState) -> Self {
        Self {
            kin,
            mode: VfrMode::Follow,
            committed: None,
        }
    }

    /// Re-decides the disturbance response for this tick. Returns the new mode.
    pub fn update_mode(
        &mut self,
        leader_speed: Option<f64>,
        timeline: &[Disturbance],
        t: f64,
        cfg: &ScenarioConfig,
    ) -> VfrMode {
        match perceive_disturbance(self.kin.x, timeline, t, cfg.vfr.r_foresight) {
            Some(d) if self.kin.x <= d.x_end => {
                self.mode = decide_disturbance_response(self.kin, leader_speed, &d, t);
                self.committed = Some(d);
            }
            _ => {
                self.mode = VfrMode::Follow;
                self.committed = None;
            }
        }
        self.mode
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntryDecision {
    Admit { speed: f64 },
    Hold,
}

/// Gap-based admission at the corridor entrance.
pub fn vfr_entry_check(gap_ahead: Option<f64>, leader_speed: Option<f64>, cfg: &ScenarioConfig) -> EntryDecision {
    match (gap_ahead, leader_speed) {
        (None, _) => EntryDecision::Admit { speed: cfg.v_avg },
        (Some(gap), speed) if gap >= cfg.vfr.d_s => EntryDecision::Admit {
            speed: speed.unwrap_or(cfg.v_avg),
        },
        _ => EntryDecision::Hold,
    }
}

/// Nearest not-yet-ended disturbance ahead that is both announced (or active)
/// and within foresight range of `x`.
pub fn perceive_disturbance(x: f64, timeline: &[Disturbance], t: f64, r_foresight: f64) -> Option<Disturbance> {
    timeline
        .iter()
        .filter(|d| t < d.t_end && d.is_forecast(t))
        .filter(|d| x <= d.x_end && d.x_start - x <= r_foresight)
        .min_by(|a, b| {
            (a.x_start - x)
                .total_cmp(&(b.x_start - x))
                .then(a.t_start.total_cmp(&b.t_start))
        })
        .copied()
}

/// PASS iff the vehicle clears `x_end` at the crossing speed
/// `min(v_self, v_front)` strictly before onset; otherwise STOP.
pub fn decide_disturbance_response(kin: KinematicState, leader_speed: Option<f64>, d: &Disturbance, t: f64) -> VfrMode {
    if kin.x > d.x_end {
        return VfrMode::Follow;
    }
    let v_front = leader_speed.unwrap_or(kin.v);
    let v_c = kin.v.min(v_front);
    if v_c <= 0.0 {
        return VfrMode::Stop;
    }
    if (d.x_end - kin.x) / v_c + t < d.t_start {
        VfrMode::Pass
    } else {
        VfrMode::Stop
    }
}

/// Following command: Helly toward the leader, or a proportional speed hold
/// at `v_avg` when nobody is ahead.
pub fn follow_acceleration(own: KinematicState, leader: Option<KinematicState>, cfg: &ScenarioConfig) -> f64 {
    match leader {
        Some(l) => helly_acceleration(l.x - own.x, l.v - own.v, own.v, &cfg.vfr),
        None => (cfg.vfr.lambda1 * (cfg.v_avg - own.v)).clamp(cfg.a_min, cfg.a_max),
    }
}

/// Deadline used by the stop maneuver: be at rest by onset while the
/// disturbance is pending; once active, only the distance matters.
fn stop_deadline(d: &Disturbance, t: f64) -> f64 {
    if t < d.t_start {
        d.t_start
    } else {
        f64::INFINITY
    }
}

/// Commanded acceleration for `own` (which may be an intermediate RK4 stage
/// state) under the mode decided for this tick.
pub fn vfr_acceleration(
    vehicle: &VfrVehicleState,
    own: KinematicState,
    leader: Option<KinematicState>,
    t: f64,
    cfg: &ScenarioConfig,
) -> f64 {
    let follow = follow_acceleration(own, leader, cfg);
    match (vehicle.mode, vehicle.committed) {
        (VfrMode::Stop, Some(d)) if t < d.t_end => {
            let target = d.x_start - STOP_STANDOFF;
            let check = can_stop_before(own.x, own.v, target, stop_deadline(&d, t), t, cfg.a_min);
            let stop = if check.feasible { check.accel } else { cfg.a_min };
            follow.min(stop)
        }
        _ => follow,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d_s: f64) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.vfr.d_s = d_s;
        c
    }

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

    #[test]
    fn entry_gating() {
        let c = cfg(20.0);
        assert_eq!(vfr_entry_check(None, None, &c), EntryDecision::Admit { speed: 20.0 });
        assert_eq!(vfr_entry_check(Some(15.0), Some(20.0), &c), EntryDecision::Hold);
        let c = cfg(67.0);
        assert_eq!(
            vfr_entry_check(Some(70.0), Some(18.5), &c),
            EntryDecision::Admit { speed: 18.5 }
        );
        assert_eq!(
            vfr_entry_check(Some(67.0), Some(3.0), &c),
            EntryDecision::Admit { speed: 3.0 }
        );
    }

    #[test]
    fn perception_is_gated_by_range_and_forecast() {
        let tl = [sample_disturbance()];
        assert!(perceive_disturbance(1300.0, &tl, 105.0, 800.0).is_some());
        assert!(perceive_disturbance(1100.0, &tl, 105.0, 800.0).is_none());
        assert!(perceive_disturbance(1300.0, &tl, 104.9, 800.0).is_none());
        // Ended disturbances are forgotten.
        assert!(perceive_disturbance(1900.0, &tl, 130.0, 800.0).is_none());
        // Past the region.
        assert!(perceive_disturbance(2060.0, &tl, 110.0, 800.0).is_none());
    }

    #[test]
    fn perception_picks_earliest_pending_disturbance() {
        let first = sample_disturbance();
        let second = Disturbance {
            index: 1,
            t_start: 160.0,
            t_end: 170.0,
            forecast_time: 145.0,
            ..first
        };
        let tl = [first, second];
        assert_eq!(perceive_disturbance(1500.0, &tl, 150.0, 800.0).unwrap().index, 1);
        assert_eq!(perceive_disturbance(1500.0, &tl, 125.0, 800.0).unwrap().index, 0);
    }

    #[test]
    fn pass_stop_predicate() {
        let d = sample_disturbance();
        let kin = KinematicState::new(1900.0, 20.0);
        assert_eq!(decide_disturbance_response(kin, Some(20.0), &d, 105.0), VfrMode::Pass);
        assert_eq!(decide_disturbance_response(kin, None, &d, 105.0), VfrMode::Pass);
        // 150/10 + 105 = 120, not strictly less than 120.
        assert_eq!(decide_disturbance_response(kin, Some(10.0), &d, 105.0), VfrMode::Stop);
        let past = KinematicState::new(2060.0, 20.0);
        assert_eq!(decide_disturbance_response(past, Some(5.0), &d, 105.0), VfrMode::Follow);
        let parked = KinematicState::new(1900.0, 0.0);
        assert_eq!(decide_disturbance_response(parked, None, &d, 105.0), VfrMode::Stop);
    }

    #[test]
    fn follow_command_at_equilibrium_is_zero() {
        let c = cfg(67.0);
        let v = VfrVehicleState::new(KinematicState::new(1395.0, 20.0));
        let a = vfr_acceleration(&v, v.kin, Some(KinematicState::new(1500.0, 20.0)), 0.0, &c);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn stop_command_is_gentlest_stop() {
        let c = cfg(67.0);
        let d = Disturbance {
            t_start: 200.0,
            t_end: 210.0,
            forecast_time: 185.0,
            ..sample_disturbance()
        };
        let kin = KinematicState::new(d.x_start - STOP_STANDOFF - 100.0, 20.0);
        let v = VfrVehicleState {
            kin,
            mode: VfrMode::Stop,
            committed: Some(d),
        };
        let a = vfr_acceleration(&v, kin, None, 186.0, &c);
        assert!((a + 2.0).abs() < 1e-12, "{a}");
    }

    #[test]
    fn stop_command_defers_to_harder_helly_braking() {
        let c = cfg(67.0);
        let d = Disturbance {
            t_start: 200.0,
            t_end: 210.0,
            forecast_time: 185.0,
            ..sample_disturbance()
        };
        let kin = KinematicState::new(d.x_start - STOP_STANDOFF - 100.0, 20.0);
        let v = VfrVehicleState {
            kin,
            mode: VfrMode::Stop,
            committed: Some(d),
        };
        let leader = KinematicState::new(kin.x + 40.0, 5.0);
        let helly = follow_acceleration(kin, Some(leader), &c);
        assert!(helly < -2.0);
        assert_eq!(vfr_acceleration(&v, kin, Some(leader), 186.0, &c), helly);
    }

    #[test]
    fn infeasible_stop_brakes_at_a_min() {
        let c = cfg(67.0);
        let d = sample_disturbance();
        let kin = KinematicState::new(1960.0, 20.0);
        let v = VfrVehicleState {
            kin,
            mode: VfrMode::Stop,
            committed: Some(d),
        };
        assert_eq!(vfr_acceleration(&v, kin, None, 110.0, &c), -3.0);
    }

    #[test]
    fn leaderless_cruise_converges_to_v_avg() {
        let c = cfg(67.0);
        let limits = crate::kinematics::Limits::from_config(&c);
        let mut s = KinematicState::new(0.0, 12.0);
        let v = VfrVehicleState::new(s);
        for k in 0..600 {
            let t = k as f64 * c.dt;
            s = crate::kinematics::step(s, |t, st| vfr_acceleration(&v, st, None, t, &c), t, c.dt, &limits);
        }
        assert!((s.v - c.v_avg).abs() < 0.01, "{}", s.v);
    }
}
