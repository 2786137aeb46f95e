use serde::{Deserialize, Serialize};

use super::config::{Compensation, ScenarioConfig};
use super::noise::{NoiseStreams, Sensors, Wind};
use super::vehicle::Vehicle;
use super::SimError;
use crate::dynamics::{ArmMotion, QuadrotorState};
use crate::kinematics::JointState;
use crate::spatial::Vec3;

/// Scripted sinusoidal arm motion about a centre pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSweep {
    /// rad
    pub center: [f64; 3],
    /// rad
    pub amplitude: [f64; 3],
    /// Hz
    pub frequency: f64,
    /// Hover time before the sweep starts, s.
    pub settle: f64,
    /// Sweep time over which the error is measured, s.
    pub duration: f64,
    /// Hover point, Σ_I.
    pub hover: [f64; 3],
}

impl Default for ArmSweep {
    fn default() -> Self {
        Self {
            center: [0.0, 0.4, 0.6],
            amplitude: [0.4, 0.5, 0.5],
            frequency: 0.5,
            settle: 10.0,
            duration: 20.0,
            hover: [0.0, 0.0, -2.5],
        }
    }
}

impl ArmSweep {
    /// Joint trajectory `s` seconds into the sweep.
    pub fn motion(&self, s: f64) -> ArmMotion {
        let c = Vec3::from(self.center);
        let a = Vec3::from(self.amplitude);
        if s <= 0.0 {
            return ArmMotion::stationary(JointState { angles: c });
        }
        let w = 2.0 * std::f64::consts::PI * self.frequency;
        let (sin, cos) = (w * s).sin_cos();
        ArmMotion { q: JointState { angles: c + a * sin }, qd: a * (w * cos), qdd: a * (-w * w * sin) }
    }
}

/// Hover error while the arm sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub compensation: Compensation,
    /// RMS of the 3D position error over the sweep, m.
    pub rms: f64,
    pub rms_axis: [f64; 3],
    pub max_abs: f64,
}

/// Hovers at a fixed point under the scenario's controller, noise and wind
/// while the arm follows `sweep`, and reports the position error.
pub fn compensation_sweep(
    config: &ScenarioConfig,
    compensation: Compensation,
    sweep: &ArmSweep,
) -> Result<SweepResult, SimError> {
    let scenario = config.resolve()?;
    let rates = &config.rates;
    let dt = 1.0 / rates.physics_hz as f64;
    let [att, pos] = [rates.attitude_hz, rates.position_hz].map(|hz| rates.divider(hz));
    let mut streams = NoiseStreams::new(config.seed);
    let mut sensors = Sensors::new(config.sensors, dt * pos as f64, &mut streams.navigation);
    let mut wind = Wind::new(&config.wind, dt, &mut streams.wind);

    let hover = Vec3::from(sweep.hover);
    let mut control = config.control;
    control.compensation = compensation;
    let q0 = sweep.motion(0.0).q;
    scenario.manipulator.check_limits(&q0).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
    let mut vehicle = Vehicle::new(&scenario, &control, QuadrotorState::at_rest(hover, 0.0), q0);

    let steps = ((sweep.settle + sweep.duration) / dt).round() as u64;
    let mut sq = Vec3::zeros();
    let mut max_abs = 0.0f64;
    let mut n = 0usize;
    for k in 0..steps {
        let t = k as f64 * dt;
        vehicle.arm = sweep.motion(t - sweep.settle);
        let limits = scenario.manipulator.joint_limits;
        if vehicle.arm.q.angles.iter().zip(limits.iter()).any(|(a, (lo, hi))| a < lo || a > hi) {
            return Err(SimError::ConfigInvalid("sweep leaves the joint limits".into()));
        }
        if k % pos == 0 {
            sensors.advance(&mut streams.navigation);
            let s = vehicle.state;
            let p = s.position + sensors.position_error();
            let v = s.velocity + sensors.velocity_noise(&mut streams.navigation);
            vehicle
                .position_tick(&p, &v, &hover, &Vec3::zeros(), &Vec3::zeros(), 0.0, dt * pos as f64)
                .map_err(|e| SimError::NumericalDivergence(e.to_string()))?;
        }
        if k % att == 0 {
            let omega = vehicle.state.body_rate + sensors.gyro_noise(&mut streams.gyro);
            vehicle.attitude_tick(&omega);
        }
        vehicle
            .physics_step(&wind.force(), dt)
            .map_err(|e| SimError::NumericalDivergence(format!("t = {t:.3} s: {e}")))?;
        wind.step(&mut streams.wind);
        if t >= sweep.settle {
            let e = vehicle.state.position - hover;
            sq += e.component_mul(&e);
            max_abs = max_abs.max(e.abs().max());
            n += 1;
        }
    }
    let mean = sq / n.max(1) as f64;
    Ok(SweepResult {
        compensation,
        rms: mean.sum().sqrt(),
        rms_axis: [mean.x.sqrt(), mean.y.sqrt(), mean.z.sqrt()],
        max_abs,
    })
}
