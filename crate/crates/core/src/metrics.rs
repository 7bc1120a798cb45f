//! Safety and flow metrics: separations, time to collision, throughput.

use crate::engine::{SimulationResult, Termination};
use crate::kinematics::KinematicState;
use crate::scenario::{Disturbance, ScenarioConfig};
use crate::VehicleId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SampleKind {
    Separation,
    Ttc,
}

impl SampleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleKind::Separation => "SEPARATION",
            SampleKind::Ttc => "TTC",
        }
    }
}

/// The other end of a measured pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Counterpart {
    Vehicle(VehicleId),
    Disturbance(usize),
}

impl std::fmt::Display for Counterpart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Counterpart::Vehicle(id) => write!(f, "{id}"),
            Counterpart::Disturbance(idx) => write!(f, "d{idx}"),
        }
    }
}

/// One per-tick measurement. `value` is raw; caps apply when reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    pub t: f64,
    pub kind: SampleKind,
    pub follower: VehicleId,
    pub leader: Counterpart,
    pub value: f64,
}

impl MetricSample {
    /// Value as written to reports: separations truncated at the
    /// separation cap, TTC already capped at computation.
    pub fn reported(&self, cfg: &ScenarioConfig) -> f64 {
        match self.kind {
            SampleKind::Separation => self.value.min(cfg.report.separation_cap),
            SampleKind::Ttc => self.value,
        }
    }
}

/// Time to collision of `follower` closing on `leader`, capped at `cap`.
/// Zero once the pair has met.
pub fn ttc(follower: KinematicState, leader: KinematicState, cap: f64) -> f64 {
    let sep = leader.x - follower.x;
    if sep <= 0.0 {
        return 0.0;
    }
    let closing = follower.v - leader.v;
    if closing <= 0.0 {
        cap
    } else {
        (sep / closing).min(cap)
    }
}

/// Distance from `x` to the near edge of `d` if it is active at `t` and not
/// yet behind the vehicle; zero inside the region.
pub fn disturbance_distance(x: f64, d: &Disturbance, t: f64) -> Option<f64> {
    (d.is_active(t) && x <= d.x_end).then(|| (d.x_start - x).max(0.0))
}

/// Separation and TTC samples for one snapshot. `vehicles` is ordered
/// downstream first.
pub fn separation_samples(
    t: f64,
    vehicles: &[(VehicleId, KinematicState)],
    timeline: &[Disturbance],
    cfg: &ScenarioConfig,
) -> Vec<MetricSample> {
    let mut out = Vec::with_capacity(vehicles.len() * 2);
    for (i, &(id, kin)) in vehicles.iter().enumerate() {
        if i > 0 {
            let (lead_id, lead) = vehicles[i - 1];
            out.push(MetricSample {
                t,
                kind: SampleKind::Separation,
                follower: id,
                leader: Counterpart::Vehicle(lead_id),
                value: lead.x - kin.x,
            });
            out.push(MetricSample {
                t,
                kind: SampleKind::Ttc,
                follower: id,
                leader: Counterpart::Vehicle(lead_id),
                value: ttc(kin, lead, cfg.report.ttc_cap),
            });
        }
        let nearest = timeline
            .iter()
            .filter_map(|d| disturbance_distance(kin.x, d, t).map(|dist| (d.index, dist)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((idx, dist)) = nearest {
            out.push(MetricSample {
                t,
                kind: SampleKind::Separation,
                follower: id,
                leader: Counterpart::Disturbance(idx),
                value: dist,
            });
        }
    }
    out
}

/// Exit flow after warm-up; zero for runs that ended in a collision or a
/// disturbance entry.
pub fn throughput(result: &SimulationResult, cfg: &ScenarioConfig) -> f64 {
    if result.termination != Termination::TimeLimit {
        return 0.0;
    }
    let window = cfg.sim_end - cfg.throughput_warmup;
    if window <= 0.0 {
        return 0.0;
    }
    let count = result
        .vehicles
        .iter()
        .filter_map(|v| v.finish_time)
        .filter(|&f| f > cfg.throughput_warmup && f <= cfg.sim_end)
        .count();
    count as f64 / window
}

/// Admitted vehicles per second of simulated time.
pub fn actual_arrival_rate(result: &SimulationResult) -> f64 {
    if result.end_time <= 0.0 {
        return 0.0;
    }
    result.vehicles.iter().filter(|v| v.entry_time.is_some()).count() as f64 / result.end_time
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(x: f64, v: f64) -> KinematicState {
        KinematicState::new(x, v)
    }

    #[test]
    fn ttc_cases() {
        assert_eq!(ttc(k(0.0, 25.0), k(50.0, 20.0), 100.0), 10.0);
        assert_eq!(ttc(k(0.0, 20.0), k(50.0, 20.0), 100.0), 100.0);
        assert_eq!(ttc(k(0.0, 18.0), k(50.0, 20.0), 100.0), 100.0);
        assert_eq!(ttc(k(0.0, 20.1), k(50.0, 20.0), 100.0), 100.0);
        assert_eq!(ttc(k(50.0, 20.1), k(50.0, 20.0), 100.0), 0.0);
    }

    #[test]
    fn separation_cases() {
        let cfg = ScenarioConfig::default();
        let d = Disturbance {
            index: 0,
            x_start: 2000.0,
            x_end: 2050.0,
            t_start: 120.0,
            t_end: 130.0,
            forecast_time: 105.0,
        };
        let s = separation_samples(0.0, &[(0, k(1500.0, 20.0)), (1, k(1395.0, 20.0))], &[d], &cfg);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].value, 105.0);

        let s = separation_samples(0.0, &[(0, k(1650.0, 20.0)), (1, k(1000.0, 20.0))], &[], &cfg);
        assert_eq!(s[0].value, 650.0);
        assert_eq!(s[0].reported(&cfg), 400.0);

        let s = separation_samples(125.0, &[(0, k(1980.0, 0.0))], &[d], &cfg);
        assert_eq!(s[0].leader, Counterpart::Disturbance(0));
        assert_eq!(s[0].value, 20.0);
        assert!(separation_samples(119.0, &[(0, k(1980.0, 0.0))], &[d], &cfg).is_empty());
    }
}
