//! Time-based coordination: ETA schedules reserved at CWPs, temporal
//! buffers, and staggered propagation of disturbance-driven updates.

pub mod ledger;
pub mod plan;
pub mod psu;

pub use ledger::{dfr_entry_check, trail, CwpLedger, Reservation, TRAIL_STANDOFF};
pub use plan::{
    detect_conflict, dfr_tracking_acceleration, initial_eta_schedule, replan_etas, EtaSchedule, Knot, Replan,
    ReplanKind,
};
pub use psu::{Adjustment, AdmitReport, ApplyReport, PendingUpdate, Psu};
