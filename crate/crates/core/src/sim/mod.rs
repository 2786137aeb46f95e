//! Multirate simulation harness: scenario files, noise, the closed loop of
//! vehicle, arm, camera and task machine, telemetry, metrics and batch
//! experiments.
//!
//! One physics tick runs, in order: task machine, navigation sample,
//! camera, position loop, arm loop, attitude loop, plant step, then torch
//! and metric bookkeeping. Each stage runs only on ticks that are multiples
//! of its divider, so its outputs are held between its own ticks.

mod batch;
mod config;
mod guidance;
mod metrics;
mod noise;
mod runner;
mod sweep;
mod telemetry;
mod vehicle;

pub use batch::{run_batch, BatchCell, BatchTable};
pub use config::{
    BaseMode, CameraSpec, Compensation, ControlSpec, GuidanceSpec, InertiaSpec, LoopRates, ManipulatorSpec,
    MarkerSpec, PlatformSpec, Scenario, ScenarioConfig, SensorNoise, TargetSpec, TaskSpec, WindSpec,
    WorkspaceSpec, SCHEMA_VERSION,
};
pub use guidance::{PointTracker, ReferenceShaper};
pub use metrics::{
    max_pairwise_distance, AxisAccumulator, AxisStats, RunMetrics, RunOutcome, ScalarAccumulator, ScalarStats,
};
pub use noise::{GaussMarkov, NoiseStreams};
pub use runner::{run_scenario, run_scenario_with, RunOptions, RunOutput, STOW_POSE};
pub use sweep::{compensation_sweep, ArmSweep, SweepResult};
pub use telemetry::{export_metrics, write_csv, TelemetryRecord, TelemetrySummary, TELEMETRY_COLUMNS};
pub use vehicle::Vehicle;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("numerical divergence: {0}")]
    NumericalDivergence(String),
    #[error("telemetry stream is empty")]
    EmptyRun,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
