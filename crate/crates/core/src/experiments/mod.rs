//! Scenario registry, parameter sweeps and on-disk runs.

pub mod params;
pub mod registry;
pub mod run;
pub mod sweep;

pub use params::{key_kind, ParamValue, RunParams, ValueKind, PARAMETER_KEYS};
pub use registry::{registry, scenario, scenario_names, Resolution, Scenario, Variant, CI_MAX_POINTS, CI_MAX_TIME};
pub use run::{
    build_system, execute, initial, noiseless_reference, prepare, run_scenario, simulate, simulate_replayed, Mode, PreparedRun, RunOptions,
    RunReport, FAILED_MARKER,
};
pub use sweep::{run_sweep, time_to_threshold, Axis, Execution, Reducer, SweepGrid, SweepResult, TIME_AXIS};
