//! Single-corridor UAM traffic simulator comparing spatially reactive (VFR)
//! and time-scheduled (DFR) coordination under recurring disturbances.

pub mod dfr;
pub mod engine;
pub mod kinematics;
pub mod metrics;
pub mod scenario;
pub mod sweep;
pub mod vfr;

/// Vehicles are numbered in order of corridor entry.
pub type VehicleId = u32;
