use rand::Rng;

use super::config::{BaseMode, GuidanceSpec, Scenario, ScenarioConfig};
use super::guidance::{PointTracker, ReferenceShaper};
use super::metrics::{
    max_pairwise_distance, AxisAccumulator, RunMetrics, RunOutcome, ScalarAccumulator,
};
use super::noise::{NoiseStreams, Sensors, Wind};
use super::telemetry::TelemetryRecord;
use super::vehicle::Vehicle;
use super::SimError;
use crate::dynamics::QuadrotorState;
use crate::kinematics::JointState;
use crate::spatial::{e1, e3, euler_zyx, rot_yaw, wrap_angle, yaw_of, RotationMatrix, Vec3};
use crate::task::{
    hovering_setpoint, ignition_check, ignition_idle, level_pose, platform_pose, step_task,
    ArmCommand, Directive, FloatingPlatform, HoverSetpoint, TaskMachine, TaskSensors, TaskState,
    TorchModel, VehicleCommand,
};
use crate::vision::{observe, TargetObservation, VisionConfig};

/// Arm pose while flying between tasks.
pub const STOW_POSE: [f64; 3] = [0.0, -1.2, 1.2];

/// Observations older than this no longer count as seeing the target, s.
const OBSERVATION_MAX_AGE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every n-th physics tick in the telemetry; 0 keeps none.
    pub record_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_every: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub metrics: RunMetrics,
}

/// Navigation solution used alongside an image.
#[derive(Clone, Copy, Debug)]
struct NavSample {
    position: Vec3,
    attitude: RotationMatrix,
}

struct Schedule {
    dt: f64,
    attitude: u64,
    position: u64,
    manipulator: u64,
    vision: u64,
    task: u64,
}

struct Simulation {
    guidance: GuidanceSpec,
    vision: VisionConfig,
    scenario: Scenario,
    schedule: Schedule,
    vehicle: Vehicle,
    streams: NoiseStreams,
    sensors: Sensors,
    wind: Wind,
    platform: FloatingPlatform,
    h_off: f64,
    machine: TaskMachine,
    directive: Directive,
    torch: TorchModel,
    initial_gas: f64,
    shaper: ReferenceShaper,
    goal: Vec3,
    yaw_goal: f64,
    takeoff_goal: Vec3,
    approach_goal: Vec3,
    approach_yaw: f64,
    retreat_goal: Vec3,
    servo: Option<HoverSetpoint>,
    pending: Option<(TargetObservation, NavSample)>,
    delivered: Option<TargetObservation>,
    last_valid: Option<TargetObservation>,
    fire_tracker: PointTracker,
    measured_position: Vec3,
    measured_velocity: Vec3,
    measured_rate: Vec3,
    q_stow: JointState,
    q_ready: JointState,
    lit_at: Option<f64>,
    position_error: AxisAccumulator,
    yaw_error: ScalarAccumulator,
    endpoint_error: AxisAccumulator,
    endpoint_norm: ScalarAccumulator,
    span_samples: Vec<Vec3>,
}

/// Runs one scenario with full telemetry.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, SimError> {
    run_scenario_with(config, &RunOptions::default())
}

/// Runs one scenario. Configuration problems are errors; a diverging plant
/// ends the run early with [`RunOutcome::Diverged`].
pub fn run_scenario_with(config: &ScenarioConfig, options: &RunOptions) -> Result<RunOutput, SimError> {
    let scenario = config.resolve()?;
    let mut sim = Simulation::new(config, scenario)?;
    Ok(sim.run(config, options))
}

impl Simulation {
    fn new(config: &ScenarioConfig, scenario: Scenario) -> Result<Self, SimError> {
        let rates = &config.rates;
        let schedule = Schedule {
            dt: 1.0 / rates.physics_hz as f64,
            attitude: rates.divider(rates.attitude_hz),
            position: rates.divider(rates.position_hz),
            manipulator: rates.divider(rates.manipulator_hz),
            vision: rates.divider(rates.vision_hz),
            task: rates.divider(rates.task_hz),
        };
        let mut streams = NoiseStreams::new(config.seed);

        let t = &config.target;
        let [glo, ghi] = config.task.gas_range;
        let gas = if ghi > glo { streams.scenario.random_range(glo..=ghi) } else { glo };
        let jitter = config.target.yaw_jitter_deg.to_radians();
        let target_yaw =
            t.yaw_deg.to_radians() + if jitter > 0.0 { streams.scenario.random_range(-jitter..=jitter) } else { 0.0 };
        let prior_offset = if t.prior_error > 0.0 {
            let e = t.prior_error;
            Vec3::new(streams.scenario.random_range(-e..=e), streams.scenario.random_range(-e..=e), 0.0)
        } else {
            Vec3::zeros()
        };
        let tip = Vec3::from(t.tip_position);
        let base = level_pose(tip, target_yaw);
        let platform = match config.base {
            BaseMode::Fixed => FloatingPlatform::fixed(base),
            BaseMode::Floating => FloatingPlatform {
                amplitude: config.platform.amplitude,
                angular_frequency: config.platform.angular_frequency,
                swing_gain: config.platform.swing_gain,
                swing_axis: Vec3::from(config.platform.swing_axis),
                pivot_depth: config.platform.pivot_depth,
                base,
            },
        };
        platform.validate().map_err(SimError::ConfigInvalid)?;

        let reference = scenario.reference;
        let approach_yaw = wrap_angle(t.yaw_deg.to_radians() - reference.psi_t_star);
        let standoff = config.guidance.approach_standoff;
        let approach_goal =
            tip + prior_offset - rot_yaw(approach_yaw) * (reference.p_t_star + e1() * standoff);

        let q_stow = JointState::new(STOW_POSE[0], STOW_POSE[1], STOW_POSE[2]);
        let fire_in_manip = scenario.manipulator.body_to_manip(&(reference.p_t_star - e3() * reference.h_off));
        let q_ready = scenario
            .manipulator
            .solve_position(&fire_in_manip, &JointState::new(0.0, 0.3, 0.3))
            .map_err(|e| SimError::ConfigInvalid(format!("ideal fire point unreachable: {e}")))?;

        let start = Vec3::from(t.start_position);
        let state = QuadrotorState::at_rest(start, 0.0);
        let vehicle = Vehicle::new(&scenario, &config.control, state, q_stow);
        let position_dt = schedule.dt * schedule.position as f64;
        let sensors = Sensors::new(config.sensors, position_dt, &mut streams.navigation);
        let wind = Wind::new(&config.wind, schedule.dt, &mut streams.wind);
        let torch = TorchModel::new(config.task.torch, config.fire, gas);
        let mut machine = TaskMachine::new(config.task.timing);
        machine.timing.global_timeout = machine.timing.global_timeout.min(config.duration);
        let directive = machine.directive();
        let takeoff_goal = start - e3() * config.task.timing.takeoff_altitude;

        Ok(Self {
            guidance: config.guidance,
            vision: config.vision,
            scenario,
            schedule,
            vehicle,
            streams,
            sensors,
            wind,
            platform,
            h_off: reference.h_off,
            machine,
            directive,
            torch,
            initial_gas: gas,
            shaper: ReferenceShaper::at(start, 0.0),
            goal: start,
            yaw_goal: 0.0,
            takeoff_goal,
            approach_goal,
            approach_yaw,
            retreat_goal: start,
            servo: None,
            pending: None,
            delivered: None,
            last_valid: None,
            fire_tracker: PointTracker::new(config.guidance.filter_alpha, config.guidance.filter_beta),
            measured_position: start,
            measured_velocity: Vec3::zeros(),
            measured_rate: Vec3::zeros(),
            q_stow,
            q_ready,
            lit_at: None,
            position_error: AxisAccumulator::default(),
            yaw_error: ScalarAccumulator::default(),
            endpoint_error: AxisAccumulator::default(),
            endpoint_norm: ScalarAccumulator::default(),
            span_samples: Vec::new(),
        })
    }

    fn run(&mut self, config: &ScenarioConfig, options: &RunOptions) -> RunOutput {
        let s = &self.schedule;
        let (dt, div) = (s.dt, [s.task, s.position, s.vision, s.manipulator, s.attitude]);
        let steps = (config.duration / dt).round() as u64;
        let mut records = Vec::new();
        let mut diagnostic = None;
        let mut sim_time = 0.0;
        if options.record_every > 0 {
            records.push(self.record(0.0));
        }
        for k in 0..steps {
            let t = k as f64 * dt;
            if k % div[0] == 0 {
                self.task_tick(t);
                if self.machine.is_terminal() {
                    break;
                }
            }
            if k % div[1] == 0 {
                self.measure_navigation();
            }
            if k % div[2] == 0 {
                self.vision_tick(t);
            }
            if k % div[1] == 0 {
                if let Err(e) = self.position_tick(dt * div[1] as f64) {
                    diagnostic = Some(format!("t = {t:.3} s: {e}"));
                    break;
                }
            }
            if k % div[3] == 0 {
                self.manipulator_tick(t, dt * div[3] as f64);
            }
            if k % div[4] == 0 {
                let omega = self.vehicle.state.body_rate + self.sensors.gyro_noise(&mut self.streams.gyro);
                self.measured_rate = omega;
                self.vehicle.attitude_tick(&omega);
            }
            let wind = self.wind.force();
            if let Err(e) = self.vehicle.physics_step(&wind, dt) {
                diagnostic = Some(format!("t = {t:.3} s: {e}"));
                break;
            }
            self.wind.step(&mut self.streams.wind);
            let t1 = (k + 1) as f64 * dt;
            sim_time = t1;
            self.after_step(t1, k % div[0] == 0);
            if options.record_every > 0 && (k + 1) % options.record_every as u64 == 0 {
                records.push(self.record(t1));
            }
        }
        let metrics = self.metrics(config, sim_time, diagnostic);
        RunOutput { records, metrics }
    }

    fn observation_fresh(&self, t: f64) -> Option<&TargetObservation> {
        self.last_valid.as_ref().filter(|o| t - o.timestamp <= OBSERVATION_MAX_AGE)
    }

    fn target_in_workspace(&self, t: f64) -> bool {
        self.observation_fresh(t).is_some_and(|o| {
            let p_m = self.scenario.manipulator.body_to_manip(&o.p_t_body);
            self.scenario.workspace.contains(&p_m)
        })
    }

    fn task_tick(&mut self, t: f64) {
        let sensors = TaskSensors {
            altitude: -self.measured_position.z,
            on_ground: self.vehicle.on_ground,
            observation_valid: self.delivered.is_some_and(|o| o.valid),
            target_in_workspace: self.target_in_workspace(t),
            lit: self.torch.lit,
            temperature: self.torch.temperature,
            retreat_done: (self.measured_position - self.retreat_goal).norm() <= self.guidance.waypoint_radius,
        };
        let before = self.machine.state();
        let (state, directive) = step_task(&mut self.machine, &sensors, t);
        self.directive = directive;
        if state == before {
            return;
        }
        match state {
            TaskState::Takeoff => {
                self.goal = self.takeoff_goal;
            }
            TaskState::Approach => {
                self.goal = self.approach_goal;
                self.yaw_goal = self.approach_yaw;
            }
            TaskState::Retreat => {
                let yaw = self.shaper.yaw;
                let g = &self.guidance;
                self.goal = self.shaper.position - rot_yaw(yaw) * e1() * g.retreat_back - e3() * g.retreat_up;
                self.retreat_goal = self.goal;
            }
            _ => {}
        }
    }

    fn measure_navigation(&mut self) {
        self.sensors.advance(&mut self.streams.navigation);
        let s = &self.vehicle.state;
        self.measured_position = s.position + self.sensors.position_error();
        self.measured_velocity = s.velocity + self.sensors.velocity_noise(&mut self.streams.navigation);
    }

    /// Delivers the frame captured one vision period ago, then captures a
    /// new one.
    fn vision_tick(&mut self, t: f64) {
        if let Some((obs, nav)) = self.pending.take() {
            self.delivered = Some(obs);
            if obs.valid {
                self.last_valid = Some(obs);
                let capture = QuadrotorState {
                    position: nav.position,
                    attitude: nav.attitude,
                    ..self.vehicle.state
                };
                if let Ok(sp) = hovering_setpoint(&obs, &capture, &self.scenario.reference) {
                    self.fire_tracker.update(&sp.p_end_d, obs.timestamp);
                    self.servo = Some(sp);
                }
            }
        }
        let target = platform_pose(t, &self.platform);
        let obs = observe(
            &target,
            &self.vehicle.state,
            &self.scenario.camera,
            &self.scenario.markers,
            &self.vision,
            t,
            &mut self.streams.vision,
        );
        let nav = NavSample { position: self.measured_position, attitude: self.vehicle.state.attitude };
        self.pending = Some((obs, nav));
    }

    fn position_tick(&mut self, dt: f64) -> Result<(), SimError> {
        let g = self.guidance;
        let speed = match self.directive.vehicle {
            VehicleCommand::Ground => {
                self.shaper = ReferenceShaper::at(self.measured_position, yaw_of(&self.vehicle.state.attitude));
                self.goal = self.shaper.position;
                self.yaw_goal = self.shaper.yaw;
                self.vehicle.idle();
                return Ok(());
            }
            VehicleCommand::Climb | VehicleCommand::Approach | VehicleCommand::Retreat => g.cruise_speed,
            VehicleCommand::Servo => {
                if let Some(sp) = self.servo {
                    self.goal = sp.p_b_d;
                    self.yaw_goal = sp.psi_d;
                }
                g.servo_speed
            }
            VehicleCommand::Hold => g.servo_speed,
            VehicleCommand::Descend => {
                self.goal = Vec3::new(self.shaper.position.x, self.shaper.position.y, 1.0);
                g.descent_speed
            }
        };
        self.shaper.step(&self.goal, self.yaw_goal, g.reference_gain, speed, g.reference_accel, g.yaw_rate, dt);
        let (p, v) = (self.measured_position, self.measured_velocity);
        let (p_d, v_d, psi_d) = (self.shaper.position, self.shaper.velocity, self.shaper.yaw);
        let a_ref = if g.accel_feedforward { self.shaper.acceleration } else { Vec3::zeros() };
        self.vehicle.position_tick(&p, &v, &p_d, &v_d, &a_ref, psi_d, dt).map_err(|e| SimError::NumericalDivergence(e.to_string()))
    }

    fn manipulator_tick(&mut self, t: f64, dt: f64) {
        let cfg = &self.scenario.manipulator;
        let arm = self.vehicle.arm;
        let q = arm.q;
        let tracking = self.directive.arm == ArmCommand::Track
            && self.fire_tracker.is_initialised()
            && (self.machine.state() == TaskState::Lighting || self.target_in_workspace(t));
        let qd_cmd = if tracking {
            let s = &self.vehicle.state;
            let fire = self.fire_tracker.predict(t);
            let p_end = cfg.endpoint_world(&self.measured_position, &s.attitude, &q);
            let v_end_d = self.fire_tracker.velocity + (fire - p_end) * self.guidance.endpoint_gain;
            let v_m = cfg.desired_endpoint_body_velocity(
                &v_end_d,
                &self.measured_velocity,
                &s.attitude,
                &self.measured_rate,
                &q,
            );
            cfg.inverse_velocity(&q, &v_m).qdot
        } else {
            let goal = match self.directive.arm {
                ArmCommand::Stow => self.q_stow,
                ArmCommand::Ready | ArmCommand::Track => self.q_ready,
            };
            let raw = (goal.angles - q.angles) * self.guidance.joint_gain;
            let ratio = raw.component_div(&cfg.rate_limits).abs().max();
            if ratio > 1.0 {
                raw / ratio
            } else {
                raw
            }
        };
        let mut qd_cmd = qd_cmd;
        for (i, &(lo, hi)) in cfg.joint_limits.iter().enumerate() {
            if (q.angles[i] <= lo && qd_cmd[i] < 0.0) || (q.angles[i] >= hi && qd_cmd[i] > 0.0) {
                qd_cmd[i] = 0.0;
            }
        }
        let a_max = self.scenario.accel_limit;
        let qdd = ((qd_cmd - arm.qd) / dt).map(|a| a.clamp(-a_max, a_max));
        self.vehicle.arm.qdd = qdd;
    }

    fn fire_point(&self, t: f64) -> Vec3 {
        platform_pose(t, &self.platform).translation - e3() * self.h_off
    }

    fn endpoint(&self) -> Vec3 {
        let s = &self.vehicle.state;
        self.scenario.manipulator.endpoint_world(&s.position, &s.attitude, &self.vehicle.arm.q)
    }

    fn after_step(&mut self, t: f64, task_tick: bool) {
        let dt = self.schedule.dt;
        let fire = self.fire_point(t);
        let p_end = self.endpoint();
        let state = self.machine.state();
        self.torch = if state == TaskState::Lighting {
            ignition_check(&p_end, &fire, &self.torch, dt)
        } else {
            ignition_idle(&fire, &self.torch, dt)
        };
        if self.torch.lit && self.lit_at.is_none() {
            self.lit_at = Some(t);
        }
        if state.is_operating() {
            let s = &self.vehicle.state;
            self.position_error.push(&(self.shaper.position - s.position));
            self.yaw_error.push(wrap_angle(self.shaper.yaw - yaw_of(&s.attitude)));
        }
        if state == TaskState::Lighting {
            let e = p_end - fire;
            self.endpoint_error.push(&e);
            self.endpoint_norm.push(e.norm());
            if task_tick {
                let s = &self.vehicle.state;
                self.span_samples.push(s.attitude.transpose() * (fire - s.position));
            }
        }
    }

    fn record(&self, t: f64) -> TelemetryRecord {
        let s = &self.vehicle.state;
        let euler = euler_zyx(&s.attitude);
        let arm = &self.vehicle.arm;
        let ep = self.shaper.position - s.position;
        let er = self.vehicle.attitude_error;
        let cmd = &self.vehicle.command;
        let d = &self.vehicle.disturbance;
        let end = self.endpoint();
        let fire = self.fire_point(t);
        let ee = end - fire;
        let obs = self.delivered;
        TelemetryRecord {
            t,
            state: self.machine.state(),
            px: s.position.x,
            py: s.position.y,
            pz: s.position.z,
            vx: s.velocity.x,
            vy: s.velocity.y,
            vz: s.velocity.z,
            roll: euler.z,
            pitch: euler.y,
            yaw: euler.x,
            wx: s.body_rate.x,
            wy: s.body_rate.y,
            wz: s.body_rate.z,
            q1: arm.q.angles.x,
            q2: arm.q.angles.y,
            q3: arm.q.angles.z,
            qd1: arm.qd.x,
            qd2: arm.qd.y,
            qd3: arm.qd.z,
            pdx: self.shaper.position.x,
            pdy: self.shaper.position.y,
            pdz: self.shaper.position.z,
            psi_d: self.shaper.yaw,
            epx: ep.x,
            epy: ep.y,
            epz: ep.z,
            erx: er.x,
            ery: er.y,
            erz: er.z,
            thrust: cmd.thrust,
            taux: cmd.torque.x,
            tauy: cmd.torque.y,
            tauz: cmd.torque.z,
            fdx: d.force.x,
            fdy: d.force.y,
            fdz: d.force.z,
            tdx: d.torque.x,
            tdy: d.torque.y,
            tdz: d.torque.z,
            endx: end.x,
            endy: end.y,
            endz: end.z,
            firex: fire.x,
            firey: fire.y,
            firez: fire.z,
            eex: ee.x,
            eey: ee.y,
            eez: ee.z,
            ee_norm: ee.norm(),
            obs_valid: obs.is_some_and(|o| o.valid),
            obs_rms: obs.map(|o| o.reprojection_rms).filter(|r| r.is_finite()),
            lit: self.torch.lit,
            temperature: self.torch.temperature,
            gas: self.torch.gas_level,
        }
    }

    fn metrics(&self, config: &ScenarioConfig, sim_time: f64, diagnostic: Option<String>) -> RunMetrics {
        let lit_in_window = self.machine.history().iter().any(|(s, _)| *s == TaskState::ConfirmLit)
            || (self.machine.state() == TaskState::Lighting && self.torch.lit);
        let success = diagnostic.is_none() && lit_in_window;
        let outcome = if diagnostic.is_some() {
            RunOutcome::Diverged
        } else if success {
            RunOutcome::Success
        } else {
            RunOutcome::Aborted
        };
        let lit_at = self.lit_at.filter(|_| lit_in_window);
        RunMetrics {
            seed: config.seed,
            base: config.base,
            fire: config.fire,
            outcome,
            success,
            completed: self.machine.completed(),
            time_to_light: lit_at.zip(self.machine.entry_time(TaskState::VisualServo)).map(|(l, v)| l - v),
            lighting_time: lit_at.zip(self.machine.entry_time(TaskState::Lighting)).map(|(l, v)| l - v),
            final_state: self.machine.state(),
            states: self.machine.history().to_vec(),
            sim_time,
            initial_gas: self.initial_gas,
            position_error: self.position_error.stats(),
            yaw_error: self.yaw_error.stats(),
            endpoint_error: self.endpoint_error.stats(),
            endpoint_error_norm: self.endpoint_norm.stats(),
            relative_span: max_pairwise_distance(&self.span_samples),
            diagnostic,
        }
    }
}
