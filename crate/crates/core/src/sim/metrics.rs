use serde::Serialize;

use super::config::BaseMode;
use crate::spatial::Vec3;
use crate::task::{FireMode, TaskState};

/// Running mean/variance/extreme of a scalar (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarAccumulator {
    n: usize,
    mean: f64,
    m2: f64,
    max_abs: f64,
}

impl ScalarAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.max_abs = self.max_abs.max(x.abs());
    }

    pub fn stats(&self) -> ScalarStats {
        let std = if self.n > 0 { (self.m2 / self.n as f64).sqrt() } else { 0.0 };
        ScalarStats { mean: self.mean, std, max_abs: self.max_abs, samples: self.n }
    }
}

/// Population statistics of a scalar signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ScalarStats {
    pub mean: f64,
    pub std: f64,
    pub max_abs: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxisAccumulator {
    axes: [ScalarAccumulator; 3],
}

impl AxisAccumulator {
    pub fn push(&mut self, v: &Vec3) {
        for i in 0..3 {
            self.axes[i].push(v[i]);
        }
    }

    pub fn stats(&self) -> AxisStats {
        let s = self.axes.map(|a| a.stats());
        AxisStats {
            mean: s.map(|a| a.mean),
            std: s.map(|a| a.std),
            max_abs: s.map(|a| a.max_abs),
            samples: s[0].samples,
        }
    }
}

/// Per-axis population statistics of a vector signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AxisStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
    pub max_abs: [f64; 3],
    pub samples: usize,
}

impl AxisStats {
    pub fn worst_axis(&self) -> f64 {
        self.max_abs.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    /// Torch lit within the lighting window.
    Success,
    /// Task aborted, or the run ended before the torch was lit.
    Aborted,
    /// The plant state became non-finite or left its valid range.
    Diverged,
}

impl RunOutcome {
    /// Process exit status for this outcome.
    pub fn exit_code(self) -> i32 {
        match self {
            RunOutcome::Success => 0,
            RunOutcome::Aborted => 2,
            RunOutcome::Diverged => 4,
        }
    }
}

/// Summary of one run. Vehicle errors cover the VisualServo and Lighting
/// phases; endpoint errors and the relative target span cover Lighting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub base: BaseMode,
    pub fire: FireMode,
    pub outcome: RunOutcome,
    /// Lit within the lighting window.
    pub success: bool,
    /// Landed after the full sequence.
    pub completed: bool,
    /// From VisualServo entry to ignition, s.
    pub time_to_light: Option<f64>,
    /// From Lighting entry to ignition, s.
    pub lighting_time: Option<f64>,
    pub final_state: TaskState,
    pub states: Vec<(TaskState, f64)>,
    /// Simulated time, s.
    pub sim_time: f64,
    pub initial_gas: f64,
    /// Reference minus true position, Σ_I, m.
    pub position_error: AxisStats,
    /// rad
    pub yaw_error: ScalarStats,
    /// Tip minus fire point, Σ_I, m.
    pub endpoint_error: AxisStats,
    pub endpoint_error_norm: ScalarStats,
    /// Largest distance between two fire-point positions seen from the
    /// vehicle (Σ_B) during Lighting, m.
    pub relative_span: f64,
    pub diagnostic: Option<String>,
}

/// Largest pairwise distance in a point set.
pub fn max_pairwise_distance(points: &[Vec3]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}
