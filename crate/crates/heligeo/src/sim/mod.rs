//! Fixed-step closed-loop simulation, configuration and CSV output.

pub mod config;
pub mod integrator;
pub mod runner;
pub mod trace;

pub use config::{AccelFeedback, ConfigFile, ControlLaw, ControllerMode, InitialCondition, SimConfig};
pub use integrator::{dexp_inv, rkmk4_step};
pub use runner::{configured_control, run, run_with_law, step, step_by, sweep, ControlLawFn, Simulator, DIVERGENCE_RATE};
pub use trace::{emit_csv, format_sig9, Sample, Trace, TraceRow, BASE_COLUMNS, CERTIFICATE_COLUMNS};
