//! Scenario file format. Lengths and angles that mirror the arm and
//! workspace tables are in mm and deg; everything else is SI. Field names
//! carry their unit when it is not SI.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::control::{AttitudeConstruction, AttitudeGains, ControlLimits, PositionGains};
use crate::dynamics::{InertiaModel, LinkInertia, TorqueForm, STANDARD_GRAVITY};
use crate::kinematics::{DampingConfig, ManipulatorConfig, Workspace};
use crate::spatial::{Mat3, Vec3};
use crate::task::{FireMode, OperatingReference, TaskTiming, TorchParams};
use crate::vision::{CameraModel, MarkerSet, VisionConfig};

/// Version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMode {
    Fixed,
    #[default]
    Floating,
}

/// Coupling feed-forward used by both control loops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// The disturbance computed by the plant on the previous physics step.
    #[default]
    Exact,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopRates {
    pub physics_hz: u32,
    pub attitude_hz: u32,
    pub position_hz: u32,
    pub manipulator_hz: u32,
    pub vision_hz: u32,
    pub task_hz: u32,
}

impl Default for LoopRates {
    fn default() -> Self {
        Self {
            physics_hz: 500,
            attitude_hz: 500,
            position_hz: 100,
            manipulator_hz: 100,
            vision_hz: 25,
            task_hz: 10,
        }
    }
}

impl LoopRates {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.physics_hz,
            self.attitude_hz,
            self.position_hz,
            self.manipulator_hz,
            self.vision_hz,
            self.task_hz,
        ];
        if all.contains(&0) {
            return Err("loop rates must be positive".into());
        }
        if (self.physics_hz as f64) < 1.0 / crate::dynamics::MAX_STEP {
            return Err(format!("physics rate must be at least {} Hz", 1.0 / crate::dynamics::MAX_STEP));
        }
        let chain = [
            ("vision", self.vision_hz, "position", self.position_hz),
            ("position", self.position_hz, "attitude", self.attitude_hz),
            ("attitude", self.attitude_hz, "physics", self.physics_hz),
            ("manipulator", self.manipulator_hz, "physics", self.physics_hz),
            ("task", self.task_hz, "physics", self.physics_hz),
        ];
        for (a, ra, b, rb) in chain {
            if rb % ra != 0 {
                return Err(format!("{a} rate {ra} Hz must divide {b} rate {rb} Hz"));
            }
        }
        Ok(())
    }

    /// Physics ticks per period of a loop running at `hz`.
    pub fn divider(&self, hz: u32) -> u64 {
        (self.physics_hz / hz) as u64
    }
}

/// Arm geometry in table units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulatorSpec {
    pub base_offset_mm: f64,
    pub link_lengths_mm: [f64; 4],
    pub torch_angle_deg: f64,
    pub camera_pitch_deg: f64,
    pub camera_yaw_deg: f64,
    pub joint_limits_deg: [[f64; 2]; 3],
    /// rad/s per joint.
    pub rate_limits: [f64; 3],
    /// rad/s^2 per joint.
    pub accel_limit: f64,
}

impl Default for ManipulatorSpec {
    fn default() -> Self {
        Self {
            base_offset_mm: 300.0,
            link_lengths_mm: [100.0, 400.0, 200.0, 530.0],
            torch_angle_deg: 135.0,
            camera_pitch_deg: -30.0,
            camera_yaw_deg: -60.0,
            joint_limits_deg: [[-90.0, 90.0]; 3],
            rate_limits: [2.0; 3],
            accel_limit: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkspaceSpec {
    pub height_mm: f64,
    pub yaw_angle_deg: f64,
    pub r_min_mm: f64,
    pub r_max_mm: f64,
}

impl Default for WorkspaceSpec {
    fn default() -> Self {
        Self { height_mm: 700.0, yaw_angle_deg: 40.0, r_min_mm: 650.0, r_max_mm: 950.0 }
    }
}

/// Mass properties. Arm links are uniform rods; links 1-3 share
/// `arm_link_mass` in proportion to their length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InertiaSpec {
    /// kg, whole system.
    pub total_mass: f64,
    /// kg m^2, diagonal.
    pub body_inertia: [f64; 3],
    /// kg
    pub arm_link_mass: f64,
    /// kg
    pub torch_mass: f64,
    /// m
    pub link_radius: f64,
    /// m/s^2
    pub gravity: f64,
}

impl Default for InertiaSpec {
    fn default() -> Self {
        Self {
            total_mass: 35.0,
            body_inertia: [1.2, 1.2, 2.0],
            arm_link_mass: 2.0,
            torch_mass: 1.5,
            link_radius: 0.02,
            gravity: STANDARD_GRAVITY,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSpec {
    pub position: PositionGains,
    pub attitude: AttitudeGains,
    pub limits: ControlLimits,
    pub construction: AttitudeConstruction,
    pub compensation: Compensation,
    pub torque_form: TorqueForm,
}

/// Endpoint tracking and reference shaping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceSpec {
    /// Endpoint position gain, 1/s.
    pub endpoint_gain: f64,
    /// Joint-space gain for stow/ready moves, 1/s.
    pub joint_gain: f64,
    /// Fire-point filter position and rate gains.
    pub filter_alpha: f64,
    pub filter_beta: f64,
    /// Reference pull toward the goal, 1/s.
    pub reference_gain: f64,
    /// m/s
    pub cruise_speed: f64,
    /// m/s while servoing on vision.
    pub servo_speed: f64,
    /// m/s^2
    pub reference_accel: f64,
    /// rad/s
    pub yaw_rate: f64,
    /// Distance short of the ideal hover point where the approach ends, m.
    pub approach_standoff: f64,
    /// Backward and upward retreat distances, m.
    pub retreat_back: f64,
    pub retreat_up: f64,
    /// Retreat waypoint capture radius, m.
    pub waypoint_radius: f64,
    /// m/s
    pub descent_speed: f64,
    /// Feed the reference acceleration forward to the position loop.
    pub accel_feedforward: bool,
}

impl Default for GuidanceSpec {
    fn default() -> Self {
        Self {
            endpoint_gain: 6.0,
            joint_gain: 2.0,
            filter_alpha: 0.5,
            filter_beta: 0.1,
            reference_gain: 1.0,
            cruise_speed: 0.8,
            servo_speed: 0.3,
            reference_accel: 0.5,
            yaw_rate: 0.35,
            approach_standoff: 0.5,
            retreat_back: 1.5,
            retreat_up: 0.5,
            waypoint_radius: 0.15,
            descent_speed: 0.5,
            accel_feedforward: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Optical centre in Σ_B.
    pub position_mm: [f64; 3],
    pub pixel_noise_px: f64,
    pub near_plane_mm: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        let c = CameraModel::default();
        Self {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            position_mm: [700.0, 600.0, 200.0],
            pixel_noise_px: c.pixel_noise,
            near_plane_mm: c.near_plane * 1e3,
        }
    }
}

/// Marker layout in the target frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSpec {
    pub points_mm: Vec<[f64; 3]>,
}

impl Default for MarkerSpec {
    fn default() -> Self {
        Self { points_mm: MarkerSet::default().points.iter().map(|p| [p.x * 1e3, p.y * 1e3, p.z * 1e3]).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorNoise {
    /// RTK position error, m (first-order Gauss-Markov).
    pub position_sigma: f64,
    /// s
    pub position_tau: f64,
    /// Velocity white noise, m/s.
    pub velocity_sigma: f64,
    /// Gyro white noise, rad/s.
    pub gyro_sigma: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self { position_sigma: 0.01, position_tau: 2.0, velocity_sigma: 0.01, gyro_sigma: 0.005 }
    }
}

impl SensorNoise {
    pub fn none() -> Self {
        Self { position_sigma: 0.0, velocity_sigma: 0.0, gyro_sigma: 0.0, ..Self::default() }
    }
}

/// Mean wind force plus Ornstein-Uhlenbeck gusts, Σ_I.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindSpec {
    /// N
    pub mean: [f64; 3],
    /// Stationary gust standard deviation per axis, N.
    pub gust_sigma: f64,
    /// s
    pub gust_tau: f64,
}

impl Default for WindSpec {
    fn default() -> Self {
        Self { mean: [2.0, 1.0, 0.0], gust_sigma: 2.0, gust_tau: 3.0 }
    }
}

impl WindSpec {
    pub fn calm() -> Self {
        Self { mean: [0.0; 3], gust_sigma: 0.0, ..Self::default() }
    }
}

/// Where the target torch stands and how well the vehicle knows it before
/// vision takes over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSpec {
    /// Target torch tip at rest, Σ_I, m.
    pub tip_position: [f64; 3],
    pub yaw_deg: f64,
    /// Per-seed uniform jitter on the target heading, deg.
    pub yaw_jitter_deg: f64,
    /// Per-seed uniform error of the prior horizontal target position, m.
    pub prior_error: f64,
    /// Vehicle start position on the ground, Σ_I, m.
    pub start_position: [f64; 3],
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            tip_position: [6.0, 0.0, -2.1],
            yaw_deg: 0.0,
            yaw_jitter_deg: 10.0,
            prior_error: 0.2,
            start_position: [0.0, 0.0, 0.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlatformSpec {
    /// m
    pub amplitude: f64,
    /// rad/s
    pub angular_frequency: f64,
    /// rad per m of height offset.
    pub swing_gain: f64,
    /// Swing axis in the target frame.
    pub swing_axis: [f64; 3],
    /// m
    pub pivot_depth: f64,
}

impl Default for PlatformSpec {
    fn default() -> Self {
        Self {
            amplitude: 0.05,
            angular_frequency: PI / 5.0,
            swing_gain: 2.5,
            swing_axis: [1.0, 0.0, 0.0],
            pivot_depth: 0.8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSpec {
    pub timing: TaskTiming,
    pub torch: TorchParams,
    /// Ideal target tip in Σ_B.
    pub target_body_mm: [f64; 3],
    pub target_yaw_deg: f64,
    pub h_off_get_mm: f64,
    pub h_off_make_mm: f64,
    /// Per-seed gas level is drawn uniformly from this range.
    pub gas_range: [f64; 2],
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            timing: TaskTiming::default(),
            torch: TorchParams::default(),
            target_body_mm: [1050.0, 0.0, 400.0],
            target_yaw_deg: 0.0,
            h_off_get_mm: 100.0,
            h_off_make_mm: 50.0,
            gas_range: [0.3, 1.0],
        }
    }
}

/// One simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Simulated time limit, s.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub base: BaseMode,
    #[serde(default = "default_fire")]
    pub fire: FireMode,
    #[serde(default)]
    pub rates: LoopRates,
    #[serde(default)]
    pub manipulator: ManipulatorSpec,
    #[serde(default)]
    pub workspace: WorkspaceSpec,
    #[serde(default)]
    pub inertia: InertiaSpec,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default)]
    pub guidance: GuidanceSpec,
    #[serde(default)]
    pub camera: CameraSpec,
    #[serde(default)]
    pub markers: MarkerSpec,
    #[serde(default)]
    pub vision: VisionConfig,
    #[serde(default)]
    pub sensors: SensorNoise,
    #[serde(default)]
    pub wind: WindSpec,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub platform: PlatformSpec,
    #[serde(default)]
    pub task: TaskSpec,
}

fn default_duration() -> f64 {
    120.0
}

fn default_fire() -> FireMode {
    FireMode::GetFire
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: "nominal".into(),
            seed: 0,
            duration: default_duration(),
            base: BaseMode::default(),
            fire: default_fire(),
            rates: LoopRates::default(),
            manipulator: ManipulatorSpec::default(),
            workspace: WorkspaceSpec::default(),
            inertia: InertiaSpec::default(),
            control: ControlSpec::default(),
            guidance: GuidanceSpec::default(),
            camera: CameraSpec::default(),
            markers: MarkerSpec::default(),
            vision: VisionConfig::default(),
            sensors: SensorNoise::default(),
            wind: WindSpec::default(),
            target: TargetSpec::default(),
            platform: PlatformSpec::default(),
            task: TaskSpec::default(),
        }
    }
}

/// Validated configuration in internal units.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub manipulator: ManipulatorConfig,
    pub workspace: Workspace,
    pub inertia: InertiaModel,
    pub camera: CameraModel,
    pub markers: MarkerSet,
    pub reference: OperatingReference,
    /// Radians per joint.
    pub accel_limit: f64,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn mm(a: [f64; 3]) -> Vec3 {
    vec3(a) * 1e-3
}

fn check(cond: bool, msg: &str) -> Result<(), SimError> {
    if cond {
        Ok(())
    } else {
        Err(SimError::ConfigInvalid(msg.to_string()))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn h_off(&self) -> f64 {
        match self.fire {
            FireMode::GetFire => self.task.h_off_get_mm * 1e-3,
            FireMode::MakeFire => self.task.h_off_make_mm * 1e-3,
        }
    }

    /// Validates every section and converts to internal units.
    pub fn resolve(&self) -> Result<Scenario, SimError> {
        let invalid = |m: String| SimError::ConfigInvalid(m);
        check(
            self.schema_version == SCHEMA_VERSION,
            &format!("schema_version {} unsupported, expected {SCHEMA_VERSION}", self.schema_version),
        )?;
        check(self.duration > 0.0 && self.duration.is_finite(), "duration must be positive")?;
        self.rates.validate().map_err(invalid)?;

        let m = &self.manipulator;
        check(m.link_lengths_mm.iter().all(|l| *l > 0.0), "link lengths must be positive")?;
        check(m.base_offset_mm >= 0.0, "base offset must be >= 0")?;
        check(m.torch_angle_deg > 0.0 && m.torch_angle_deg < 180.0, "torch angle must lie in (0, 180) deg")?;
        check(m.rate_limits.iter().all(|r| *r > 0.0) && m.accel_limit > 0.0, "arm rate and accel limits must be positive")?;
        check(m.joint_limits_deg.iter().all(|[lo, hi]| lo < hi), "joint limits must satisfy lo < hi")?;
        let ws = Workspace::from_table(
            self.workspace.height_mm,
            self.workspace.yaw_angle_deg,
            self.workspace.r_min_mm,
            self.workspace.r_max_mm,
        );
        check(ws.is_valid(), "workspace needs 0 < r_min < r_max, height > 0, 0 < angle < 180 deg")?;
        let mut manipulator = ManipulatorConfig::from_table(
            m.base_offset_mm,
            m.link_lengths_mm,
            m.torch_angle_deg,
            m.camera_pitch_deg,
            m.camera_yaw_deg,
            self.workspace.r_max_mm,
        );
        manipulator.joint_limits = m.joint_limits_deg.map(|[lo, hi]| (lo.to_radians(), hi.to_radians()));
        manipulator.rate_limits = vec3(m.rate_limits);
        manipulator.damping = DampingConfig { lambda: 0.01 * ws.r_max, sigma_threshold: 1e-3 };

        let i = &self.inertia;
        let [l1, l2, l3, l4] = manipulator.link_lengths;
        let per_metre = i.arm_link_mass / (l1 + l2 + l3);
        let inertia = InertiaModel {
            total_mass: i.total_mass,
            body_inertia: Mat3::from_diagonal(&vec3(i.body_inertia)),
            links: [
                LinkInertia::uniform_rod(per_metre * l1, l1, i.link_radius),
                LinkInertia::uniform_rod(per_metre * l2, l2, i.link_radius),
                LinkInertia::uniform_rod(per_metre * l3, l3, i.link_radius),
                LinkInertia::uniform_rod(i.torch_mass, l4, i.link_radius),
            ],
            gravity: i.gravity,
        };
        check(i.link_radius > 0.0, "link radius must be positive")?;
        inertia.validate().map_err(invalid)?;

        let c = &self.control;
        c.position.validate().map_err(|e| invalid(e.to_string()))?;
        c.attitude.validate().map_err(|e| invalid(e.to_string()))?;
        let l = &c.limits;
        check(
            l.max_thrust > i.total_mass * i.gravity && l.max_torque.iter().all(|t| *t > 0.0),
            "thrust limit must exceed weight and torque limits must be positive",
        )?;
        check(l.min_accel > 0.0 && l.max_tilt > 0.0 && l.max_tilt < PI / 2.0, "need min_accel > 0 and 0 < max_tilt < 90 deg")?;

        let g = &self.guidance;
        let positive = [
            g.endpoint_gain,
            g.joint_gain,
            g.reference_gain,
            g.cruise_speed,
            g.servo_speed,
            g.reference_accel,
            g.yaw_rate,
            g.waypoint_radius,
            g.descent_speed,
        ];
        check(positive.iter().all(|v| *v > 0.0), "guidance gains and speeds must be positive")?;
        check(
            g.filter_alpha > 0.0 && g.filter_alpha <= 1.0 && g.filter_beta >= 0.0 && g.filter_beta < 2.0,
            "filter gains need 0 < alpha <= 1 and 0 <= beta < 2",
        )?;

        let cs = &self.camera;
        let camera = CameraModel {
            fx: cs.fx,
            fy: cs.fy,
            cx: cs.cx,
            cy: cs.cy,
            width: cs.width,
            height: cs.height,
            pitch: m.camera_pitch_deg.to_radians(),
            yaw: m.camera_yaw_deg.to_radians(),
            position: mm(cs.position_mm),
            pixel_noise: cs.pixel_noise_px,
            near_plane: cs.near_plane_mm * 1e-3,
        };
        camera.validate().map_err(invalid)?;
        let markers = MarkerSet { points: self.markers.points_mm.iter().map(|p| mm(*p)).collect() };
        markers.validate().map_err(invalid)?;
        check(
            self.vision.rms_threshold > 0.0 && (0.0..=1.0).contains(&self.vision.swap_probability),
            "vision threshold must be positive and swap probability in [0, 1]",
        )?;

        let s = &self.sensors;
        check(
            s.position_sigma >= 0.0 && s.velocity_sigma >= 0.0 && s.gyro_sigma >= 0.0 && s.position_tau > 0.0,
            "sensor noise must be >= 0 with a positive time constant",
        )?;
        check(self.wind.gust_sigma >= 0.0 && self.wind.gust_tau > 0.0, "wind gusts need sigma >= 0 and tau > 0")?;
        let t = &self.target;
        check(t.yaw_jitter_deg >= 0.0 && t.prior_error >= 0.0, "target jitter and prior error must be >= 0")?;
        check(t.tip_position[2] < 0.0, "target tip must be above ground (negative z)")?;
        check(t.start_position[2] == 0.0, "vehicle must start on the ground (z = 0)")?;
        let p = &self.platform;
        check(
            p.amplitude >= 0.0 && p.angular_frequency >= 0.0 && p.pivot_depth >= 0.0,
            "platform amplitude, frequency and pivot depth must be >= 0",
        )?;
        check(vec3(p.swing_axis).norm() > 0.0, "platform swing axis must be non-zero")?;

        let k = &self.task;
        k.timing.validate().map_err(invalid)?;
        k.torch.validate().map_err(invalid)?;
        check(
            0.0 <= k.gas_range[0] && k.gas_range[0] <= k.gas_range[1] && k.gas_range[1] <= 1.0,
            "gas range must satisfy 0 <= lo <= hi <= 1",
        )?;
        check(k.h_off_get_mm >= 0.0 && k.h_off_make_mm >= 0.0, "h_off must be >= 0")?;
        let reference = OperatingReference {
            p_t_star: mm(k.target_body_mm),
            psi_t_star: k.target_yaw_deg.to_radians(),
            h_off: self.h_off(),
        };
        check(
            ws.contains(&manipulator.body_to_manip(&reference.p_t_star)),
            "ideal target position must lie inside the workspace",
        )?;
        Ok(Scenario { manipulator, workspace: ws, inertia, camera, markers, reference, accel_limit: m.accel_limit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_resolves() {
        let s = ScenarioConfig::default().resolve().unwrap();
        assert!((s.inertia.arm_mass() - 3.5).abs() < 1e-12);
        assert!((s.camera.position - Vec3::new(0.7, 0.6, 0.2)).norm() < 1e-15);
        assert!((s.reference.h_off - 0.10).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ScenarioConfig { seed: 17, fire: FireMode::MakeFire, ..ScenarioConfig::default() };
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!((back.h_off() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"schema_version": 1, "seed": 3}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.rates, LoopRates::default());
    }

    #[test]
    fn rejects_bad_files() {
        let missing = ScenarioConfig::from_json(r#"{"seed": 3}"#);
        assert!(matches!(missing, Err(SimError::ConfigInvalid(_))));
        let unknown = ScenarioConfig::from_json(r#"{"schema_version": 1, "sede": 3}"#);
        assert!(matches!(unknown, Err(SimError::ConfigInvalid(_))));
        let version = ScenarioConfig::from_json(r#"{"schema_version": 2}"#);
        assert!(matches!(version, Err(SimError::ConfigInvalid(_))));
    }

    #[test]
    fn rate_divisibility() {
        let mut r = LoopRates::default();
        r.validate().unwrap();
        r.vision_hz = 30;
        assert!(r.validate().unwrap_err().contains("vision rate 30"));
        r = LoopRates { position_hz: 120, ..LoopRates::default() };
        assert!(r.validate().is_err());
        r = LoopRates { physics_hz: 50, attitude_hz: 50, position_hz: 50, manipulator_hz: 50, vision_hz: 25, task_hz: 10 };
        assert!(r.validate().is_err());
    }

    #[test]
    fn rejects_non_physical_values() {
        let mut cfg = ScenarioConfig::default();
        cfg.inertia.total_mass = -1.0;
        assert!(cfg.resolve().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.task.target_body_mm = [300.0, 0.0, 400.0];
        assert!(cfg.resolve().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.platform.amplitude = -0.1;
        assert!(cfg.resolve().is_err());
    }
}
