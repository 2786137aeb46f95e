use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{AxisAccumulator, AxisStats};
use super::SimError;
use crate::task::TaskState;

/// One physics tick. Σ_I quantities are NED, body quantities FRD; SI units,
/// angles in rad.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub t: f64,
    pub state: TaskState,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub qd1: f64,
    pub qd2: f64,
    pub qd3: f64,
    /// Shaped position reference.
    pub pdx: f64,
    pub pdy: f64,
    pub pdz: f64,
    pub psi_d: f64,
    /// Reference minus true position.
    pub epx: f64,
    pub epy: f64,
    pub epz: f64,
    pub erx: f64,
    pub ery: f64,
    pub erz: f64,
    pub thrust: f64,
    pub taux: f64,
    pub tauy: f64,
    pub tauz: f64,
    /// Coupling force, Σ_I.
    pub fdx: f64,
    pub fdy: f64,
    pub fdz: f64,
    /// Coupling torque, Σ_B.
    pub tdx: f64,
    pub tdy: f64,
    pub tdz: f64,
    /// Torch tip.
    pub endx: f64,
    pub endy: f64,
    pub endz: f64,
    /// True fire point.
    pub firex: f64,
    pub firey: f64,
    pub firez: f64,
    /// Tip minus fire point.
    pub eex: f64,
    pub eey: f64,
    pub eez: f64,
    pub ee_norm: f64,
    pub obs_valid: bool,
    /// Reprojection RMS of the latest frame, px; empty before the first
    /// frame or when the frame gave no estimate.
    pub obs_rms: Option<f64>,
    pub lit: bool,
    pub temperature: f64,
    pub gas: f64,
}

/// Column order of the telemetry CSV.
pub const TELEMETRY_COLUMNS: [&str; 55] = [
    "t", "state", "px", "py", "pz", "vx", "vy", "vz", "roll", "pitch", "yaw", "wx", "wy", "wz", "q1",
    "q2", "q3", "qd1", "qd2", "qd3", "pdx", "pdy", "pdz", "psi_d", "epx", "epy", "epz", "erx", "ery",
    "erz", "thrust", "taux", "tauy", "tauz", "fdx", "fdy", "fdz", "tdx", "tdy", "tdz", "endx", "endy",
    "endz", "firex", "firey", "firez", "eex", "eey", "eez", "ee_norm", "obs_valid", "obs_rms", "lit",
    "temperature", "gas",
];

/// Writes the records as CSV with a header row.
pub fn write_csv<W: Write>(records: &[TelemetryRecord], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(TELEMETRY_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Error bars over the operation phases of a telemetry stream.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TelemetrySummary {
    pub records: usize,
    pub duration: f64,
    /// Vehicle position error over VisualServo and Lighting.
    pub position_error: AxisStats,
    /// Endpoint error over Lighting.
    pub endpoint_error: AxisStats,
}

impl TelemetrySummary {
    pub fn from_records(records: &[TelemetryRecord]) -> Result<Self, SimError> {
        let (first, last) = match (records.first(), records.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(SimError::EmptyRun),
        };
        let mut pos = AxisAccumulator::default();
        let mut end = AxisAccumulator::default();
        for r in records {
            if r.state.is_operating() {
                pos.push(&[r.epx, r.epy, r.epz].into());
            }
            if r.state == TaskState::Lighting {
                end.push(&[r.eex, r.eey, r.eez].into());
            }
        }
        Ok(Self {
            records: records.len(),
            duration: last.t - first.t,
            position_error: pos.stats(),
            endpoint_error: end.stats(),
        })
    }
}

impl fmt::Display for TelemetrySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}  span: {:.3} s", self.records, self.duration)?;
        let rows = [
            ("position error (visual servo + lighting)", &self.position_error),
            ("endpoint error (lighting)", &self.endpoint_error),
        ];
        for (title, s) in rows {
            writeln!(f, "{title}, {} samples", s.samples)?;
            for (i, axis) in ["x", "y", "z"].iter().enumerate() {
                writeln!(
                    f,
                    "  {axis}: {:+.2} +/- {:.2} cm  (max |e| {:.2} cm)",
                    s.mean[i] * 100.0,
                    s.std[i] * 100.0,
                    s.max_abs[i] * 100.0
                )?;
            }
        }
        Ok(())
    }
}

/// CSV of the records plus a plain-text error-bar summary.
pub fn export_metrics(records: &[TelemetryRecord]) -> Result<(String, String), SimError> {
    let summary = TelemetrySummary::from_records(records)?;
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    let csv = String::from_utf8(buf).expect("csv output is UTF-8");
    Ok((csv, summary.to_string()))
}
