//! Per-CWP reservation book and the buffer arithmetic built on it.

use super::plan::{EtaSchedule, Knot, KNOT_TOL};
use crate::scenario::ScenarioConfig;
use crate::VehicleId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reservation {
    pub eta: f64,
    pub vehicle: VehicleId,
}

/// Time-ordered reservations at every CWP.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CwpLedger {
    slots: Vec<Vec<Reservation>>,
}

impl CwpLedger {
    pub fn from_schedules<'a, I>(cwp_count: usize, schedules: I) -> Self
    where
        I: IntoIterator<Item = &'a EtaSchedule>,
    {
        let mut slots = vec![Vec::new(); cwp_count];
        for s in schedules {
            for (k, eta) in s.entries() {
                slots[k].push(Reservation {
                    eta,
                    vehicle: s.vehicle,
                });
            }
        }
        for slot in &mut slots {
            slot.sort_by(|a, b| a.eta.total_cmp(&b.eta).then(a.vehicle.cmp(&b.vehicle)));
        }
        Self { slots }
    }

    pub fn slot(&self, cwp: usize) -> &[Reservation] {
        &self.slots[cwp]
    }

    pub fn cwp_count(&self) -> usize {
        self.slots.len()
    }

    /// `(cwp, leader, follower, gap)` for every consecutive reservation pair.
    pub fn gaps(&self) -> impl Iterator<Item = (usize, VehicleId, VehicleId, f64)> + '_ {
        self.slots.iter().enumerate().flat_map(|(k, slot)| {
            slot.windows(2)
                .map(move |w| (k, w[0].vehicle, w[1].vehicle, w[1].eta - w[0].eta))
        })
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.gaps().map(|g| g.3).min_by(f64::total_cmp)
    }
}

/// Earliest entry time at or after `requested` whose cruise schedule trails
/// every reservation by at least `t_buffer` at every CWP.
pub fn dfr_entry_check(requested: f64, ledger: &CwpLedger, cfg: &ScenarioConfig) -> f64 {
    let mut earliest = requested;
    for (k, &p) in cfg.cwp_positions.iter().enumerate().take(ledger.cwp_count()) {
        if let Some(last) = ledger.slot(k).last() {
            earliest = earliest.max(last.eta + cfg.dfr.t_buffer - p / cfg.v_avg);
        }
    }
    earliest
}

/// Distance the leader must have moved past a point before its follower may
/// reach it. Only binds at crawl speeds, where the time gap alone would
/// leave the two vehicles almost touching.
pub const TRAIL_STANDOFF: f64 = 10.0;

/// `follower` pushed back until it trails `leader` by at least `gap` at
/// every point still ahead of it at `t_now`, not only at CWPs: the new plan
/// is the later of its own time and the leader's time plus `gap` at each
/// position, and never reaches a point before the leader is
/// [`TRAIL_STANDOFF`] past it. At CWPs this is the smallest push restoring
/// `gap`. Returns `None` when no push is needed.
pub fn trail(follower: &EtaSchedule, leader: &EtaSchedule, gap: f64, t_now: f64) -> Option<EtaSchedule> {
    let knots = follower.knots();
    let x_now = follower.position_at(t_now);
    let bound = |x: f64| {
        let timed = leader.time_at_within(x).map(|tl| tl + gap);
        match leader.time_at_within(x + TRAIL_STANDOFF) {
            Some(spaced) => timed.map(|t| t.max(spaced)),
            None => timed,
        }
    };
    let late = |x: f64, t: f64| bound(x).is_some_and(|b| b - t > 1e-9);
    let ahead = knots.iter().filter(|k| k.x > x_now + KNOT_TOL);
    if !ahead.clone().any(|k| late(k.x, k.t))
        && !leader
            .knots()
            .iter()
            .flat_map(|k| [k.x, k.x - TRAIL_STANDOFF])
            .filter(|&x| x > x_now + KNOT_TOL)
            .any(|x| follower.time_at_within(x).is_some_and(|t| late(x, t)))
    {
        return None;
    }

    let mut out: Vec<Knot> = knots.iter().filter(|k| k.x <= x_now + KNOT_TOL).copied().collect();
    if out.last().is_none_or(|k| x_now > k.x + KNOT_TOL) {
        out.push(Knot {
            x: x_now,
            t: t_now,
            cwp: None,
        });
    }
    let mut xs: Vec<(f64, Option<usize>)> = ahead.map(|k| (k.x, k.cwp)).collect();
    let last_x = knots.last().map_or(x_now, |k| k.x);
    xs.extend(
        leader
            .knots()
            .iter()
            .flat_map(|k| [k.x, k.x - TRAIL_STANDOFF])
            .filter(|&x| x > x_now + KNOT_TOL && x < last_x - KNOT_TOL)
            .map(|x| (x, None)),
    );
    xs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.is_some().cmp(&a.1.is_some())));
    xs.dedup_by(|b, a| b.0 - a.0 <= KNOT_TOL);

    let own = |x: f64| follower.time_at(x).expect("inside the plan");
    let envelope = |x: f64| {
        let t = own(x);
        bound(x).map_or(t, |b| t.max(b))
    };
    let (mut px, mut pd) = (x_now, bound(x_now).map(|b| own(x_now) - b));
    for (x, cwp) in xs {
        let d = bound(x).map(|b| own(x) - b);
        // The binding plan changes between the two positions: add the kink.
        if let (Some(d0), Some(d1)) = (pd, d) {
            if (d0 > 0.0) != (d1 > 0.0) && (d0 - d1).abs() > 1e-12 {
                let xc = px + (x - px) * d0 / (d0 - d1);
                if xc > px + KNOT_TOL && xc < x - KNOT_TOL {
                    out.push(Knot {
                        x: xc,
                        t: envelope(xc),
                        cwp: None,
                    });
                }
            }
        }
        let t = envelope(x);
        if t > out.last().map_or(f64::NEG_INFINITY, |k| k.t) {
            out.push(Knot { x, t, cwp });
        }
        px = x;
        pd = d;
    }
    let mut plan = EtaSchedule::from_knots(follower.vehicle, prune(out));
    plan.emergency = follower.emergency;
    Some(plan)
}

/// Drops plain knots lying on the chord between their neighbours.
fn prune(knots: Vec<Knot>) -> Vec<Knot> {
    let mut out: Vec<Knot> = Vec::with_capacity(knots.len());
    for (i, k) in knots.iter().enumerate() {
        if let (Some(&a), Some(b)) = (out.last(), knots.get(i + 1)) {
            let on_chord = a.t + (b.t - a.t) * (k.x - a.x) / (b.x - a.x);
            if k.cwp.is_none() && (k.t - on_chord).abs() <= 1e-9 {
                continue;
            }
        }
        out.push(*k);
    }
    out
}

/// Smallest gap behind `leader` over the CWPs `follower` has yet to reach.
pub fn min_future_gap(follower: &EtaSchedule, leader: &EtaSchedule, t_now: f64) -> Option<f64> {
    follower
        .entries()
        .filter(|&(_, ef)| ef > t_now)
        .filter_map(|(k, ef)| leader.eta(k).map(|el| ef - el))
        .min_by(f64::total_cmp)
}
