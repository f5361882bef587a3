//! Pulse protocol and measurement drivers.

mod calibrate;
mod efficiency;
mod experiments;
mod schedule;

pub use calibrate::{calibrate_input, empty_cavity_content, Calibration, IntracavityReading};
pub use efficiency::{efficiency_budget, transfer_efficiency};
pub use experiments::{
    absorption_trajectories, flux_peak_time, fringe_point, incoherent_reference, overlap_fields, prepare_fringe,
    run_absorption, run_fringe, run_fringe_windows, run_single_photon, scan_from_series, sweep_arrival, sweep_point,
    trajectory_stream, transfer_probability, AbsorptionPlan, AbsorptionRecord, EmissionRecord, FringeBranch,
    FringeResult, FringeScan, OverlapFields, Setup, SweepPoint, SweepResult,
};
pub use schedule::{
    lambda_peak_for, lambda_shape, lambda_shape_energy, make_schedule, PulseSchedule, ScheduleConfig, ScheduleWarning,
    LAMBDA_SUPPORT_FWHM,
};
