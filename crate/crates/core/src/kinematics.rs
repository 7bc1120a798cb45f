//! Longitudinal point-mass motion: the Helly following law, a clipped RK4
//! step, and closed-form reachability / stopping checks.

use crate::scenario::{ScenarioConfig, VfrParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicState {
    pub x: f64,
    pub v: f64,
}

impl KinematicState {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }
}

/// Acceleration and speed envelope shared by every vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    pub a_min: f64,
    pub a_max: f64,
    pub v_max: f64,
}

impl Limits {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            a_min: cfg.a_min,
            a_max: cfg.a_max,
            v_max: cfg.v_max,
        }
    }

    pub fn clamp_accel(&self, a: f64) -> f64 {
        a.clamp(self.a_min, self.a_max)
    }
}

/// Desired spacing `d_S + T_des * v`.
pub fn desired_spacing(v: f64, params: &VfrParams) -> f64 {
    params.d_s + params.t_des * v
}

/// Raw (unclamped) Helly acceleration for headway `dx`, relative speed
/// `dv = v_leader - v`, and own speed `v`.
pub fn helly_acceleration(dx: f64, dv: f64, v: f64, params: &VfrParams) -> f64 {
    params.lambda1 * (dx - desired_spacing(v, params)) + params.lambda2 * dv
}

/// One classic RK4 step of `x' = v, v' = a(t, state)` with each stage's
/// acceleration clamped to the envelope, followed by clipping the speed to
/// `[0, v_max]`. When the clip engages, position is recomputed along the
/// clipped profile (constant acceleration up to the bound, then hold).
pub fn step<F>(state: KinematicState, accel_fn: F, t: f64, dt: f64, limits: &Limits) -> KinematicState
where
    F: Fn(f64, KinematicState) -> f64,
{
    let accel = |t: f64, s: KinematicState| limits.clamp_accel(accel_fn(t, s));
    let half = 0.5 * dt;

    let k1v = state.v;
    let k1a = accel(t, state);
    let s2 = KinematicState::new(state.x + half * k1v, state.v + half * k1a);
    let k2v = s2.v;
    let k2a = accel(t + half, s2);
    let s3 = KinematicState::new(state.x + half * k2v, state.v + half * k2a);
    let k3v = s3.v;
    let k3a = accel(t + half, s3);
    let s4 = KinematicState::new(state.x + dt * k3v, state.v + dt * k3a);
    let k4v = s4.v;
    let k4a = accel(t + dt, s4);

    let x_rk = state.x + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    let v_rk = state.v + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);

    let v_new = v_rk.max(0.0).min(limits.v_max);
    if v_new == v_rk {
        return KinematicState::new(x_rk.max(state.x), v_new);
    }

    // Clip engaged: replay the step as constant average acceleration until
    // the bound is hit, then hold the bound.
    let a_eff = (v_rk - state.v) / dt;
    let x_new = if a_eff == 0.0 {
        state.x + v_new * dt
    } else {
        let t_hit = ((v_new - state.v) / a_eff).clamp(0.0, dt);
        state.x + state.v * t_hit + 0.5 * a_eff * t_hit * t_hit + v_new * (dt - t_hit)
    };
    KinematicState::new(x_new.max(state.x), v_new)
}

/// Minimum time to cover `x_target - x0` starting at `v0` when accelerating at
/// `a_max` until `v_max` and cruising afterwards.
pub fn min_time_to_reach(x0: f64, v0: f64, x_target: f64, a_max: f64, v_max: f64) -> f64 {
    let dist = x_target - x0;
    if dist <= 0.0 {
        return 0.0;
    }
    let v0 = v0.clamp(0.0, v_max);
    if v0 >= v_max {
        return dist / v_max;
    }
    let t_acc = (v_max - v0) / a_max;
    let d_acc = v0 * t_acc + 0.5 * a_max * t_acc * t_acc;
    if d_acc >= dist {
        // Target reached while still accelerating.
        (-v0 + (v0 * v0 + 2.0 * a_max * dist).sqrt()) / a_max
    } else {
        t_acc + (dist - d_acc) / v_max
    }
}

/// Latest time (relative to now) at which a vehicle braking at `a_min` can
/// first reach a point `dist` ahead; infinite if it can stop short of it.
pub fn latest_arrival(v0: f64, dist: f64, a_min: f64) -> f64 {
    if dist <= 0.0 {
        return 0.0;
    }
    let decel = -a_min;
    if v0 <= 0.0 || v0 * v0 <= 2.0 * decel * dist {
        return f64::INFINITY;
    }
    (v0 - (v0 * v0 - 2.0 * decel * dist).sqrt()) / decel
}

/// Result of a stopping-feasibility query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopCheck {
    pub feasible: bool,
    /// Gentlest constant acceleration (<= 0) that satisfies both the distance
    /// and the deadline. When infeasible this is the required value, which is
    /// below `a_min`.
    pub accel: f64,
}

/// Whether a constant deceleration within `[a_min, 0]` brings the vehicle to
/// rest at or before `x_stop` no later than `t_deadline`.
pub fn can_stop_before(x0: f64, v0: f64, x_stop: f64, t_deadline: f64, t_now: f64, a_min: f64) -> StopCheck {
    if v0 <= 0.0 {
        return StopCheck {
            feasible: true,
            accel: 0.0,
        };
    }
    let dist = x_stop - x0;
    let time = t_deadline - t_now;
    let by_distance = if dist > 0.0 {
        v0 * v0 / (2.0 * dist)
    } else {
        f64::INFINITY
    };
    let by_time = if time > 0.0 { v0 / time } else { f64::INFINITY };
    let required = by_distance.max(by_time);
    StopCheck {
        feasible: required <= -a_min * (1.0 + 1e-12),
        accel: -required,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> Limits {
        Limits {
            a_min: -3.0,
            a_max: 3.0,
            v_max: 30.0,
        }
    }

    fn vfr(d_s: f64) -> VfrParams {
        VfrParams {
            d_s,
            ..VfrParams::default()
        }
    }

    #[test]
    fn helly_equilibrium_values() {
        assert_eq!(helly_acceleration(105.0, 0.0, 20.0, &vfr(67.0)), 0.0);
        assert_eq!(helly_acceleration(58.0, 0.0, 20.0, &vfr(20.0)), 0.0);
        let a = helly_acceleration(125.0, -2.0, 20.0, &vfr(67.0));
        assert!((a - 6.8).abs() < 1e-12, "{a}");
    }

    #[test]
    fn zero_accel_conserves_speed() {
        let s = step(KinematicState::new(100.0, 20.0), |_, _| 0.0, 0.0, 0.1, &limits());
        assert_eq!(s.v, 20.0);
        assert!((s.x - 102.0).abs() < 1e-12);
    }

    #[test]
    fn over_limit_accel_is_clamped() {
        let s = step(KinematicState::new(0.0, 20.0), |_, _| 5.0, 0.0, 0.1, &limits());
        assert!((s.v - 20.3).abs() < 1e-12);
        assert!((s.x - 2.015).abs() < 1e-12);
    }

    #[test]
    fn speed_clips_at_v_max_with_consistent_position() {
        let s = step(KinematicState::new(0.0, 29.9), |_, _| 3.0, 0.0, 0.1, &limits());
        assert_eq!(s.v, 30.0);
        // 1/30 s accelerating from 29.9 to 30, then holding 30.
        let t_hit = 0.1 / 3.0;
        let expect = 29.9 * t_hit + 1.5 * t_hit * t_hit + 30.0 * (0.1 - t_hit);
        assert!((s.x - expect).abs() < 1e-12);
    }

    #[test]
    fn speed_clips_at_zero() {
        let s = step(KinematicState::new(10.0, 0.1), |_, _| -3.0, 0.0, 0.1, &limits());
        assert_eq!(s.v, 0.0);
        let t_hit = 0.1 / 3.0;
        assert!((s.x - (10.0 + 0.1 * t_hit - 1.5 * t_hit * t_hit)).abs() < 1e-12);
        let rest = step(s, |_, _| -3.0, 0.1, 0.1, &limits());
        assert_eq!(rest, s);
    }

    #[test]
    fn min_time_examples() {
        let t = min_time_to_reach(1900.0, 20.0, 2050.0, 3.0, 30.0);
        let expect = 10.0 / 3.0 + (150.0 - 250.0 / 3.0) / 30.0;
        assert!((t - expect).abs() < 1e-12);
        assert!((t - 5.5556).abs() < 1e-3);
        assert_eq!(min_time_to_reach(5.0, 12.0, 5.0, 3.0, 30.0), 0.0);
        assert_eq!(min_time_to_reach(0.0, 30.0, 300.0, 3.0, 30.0), 10.0);
        // Short hop reached before v_max: 0.5*3*t^2 = 6 -> t = 2.
        assert!((min_time_to_reach(0.0, 0.0, 6.0, 3.0, 30.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stopping_examples() {
        let ok = can_stop_before(0.0, 20.0, 100.0, f64::INFINITY, 0.0, -3.0);
        assert!(ok.feasible);
        assert!((ok.accel + 2.0).abs() < 1e-12);
        let rest = can_stop_before(0.0, 0.0, 0.0, 0.0, 0.0, -3.0);
        assert!(rest.feasible);
        assert_eq!(rest.accel, 0.0);
        assert!(!can_stop_before(0.0, 20.0, 50.0, f64::INFINITY, 0.0, -3.0).feasible);
        // Deadline binds: 20 m/s to rest within 5 s needs 4 m/s^2.
        let late = can_stop_before(0.0, 20.0, 1000.0, 5.0, 0.0, -3.0);
        assert!(!late.feasible);
        assert!((late.accel + 4.0).abs() < 1e-12);
    }

    #[test]
    fn latest_arrival_cases() {
        assert!(latest_arrival(20.0, 100.0, -3.0).is_infinite());
        // 20 m/s, 50 m, braking at 3: 50 = 20t - 1.5t^2 -> t = (20 - sqrt(100))/3.
        assert!((latest_arrival(20.0, 50.0, -3.0) - 10.0 / 3.0).abs() < 1e-12);
    }
}
