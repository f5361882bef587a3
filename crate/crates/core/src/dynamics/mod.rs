//! Master-equation and quantum-trajectory dynamics.

pub mod master;
pub mod model;
pub mod ode;
pub mod trajectory;
pub mod validate;

pub use master::{integrate_master, sample_grid, MasterRun, SolverOptions, TimeSeries};
pub use model::{hamiltonian_at, lindblad_rhs, Channel, Controls, Drive, FnDrive, Model};
pub use ode::Tolerances;
pub use trajectory::{
    run_trajectories, Jump, MeanEstimate, TrajectoryEnsemble, TrajectoryOptions, TrajectoryRecord, TrajectoryRunner,
};
pub use validate::{validate_analytic, AnalyticCase, ValidationReport};
