use serde::{Deserialize, Serialize};

/// Mission phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Idle,
    Takeoff,
    Approach,
    VisualServo,
    Lighting,
    ConfirmLit,
    Retreat,
    Land,
    Aborted,
}

impl TaskState {
    pub fn name(self) -> &'static str {
        match self {
            TaskState::Idle => "idle",
            TaskState::Takeoff => "takeoff",
            TaskState::Approach => "approach",
            TaskState::VisualServo => "visual_servo",
            TaskState::Lighting => "lighting",
            TaskState::ConfirmLit => "confirm_lit",
            TaskState::Retreat => "retreat",
            TaskState::Land => "land",
            TaskState::Aborted => "aborted",
        }
    }

    /// The single forward successor, if any.
    pub fn successor(self) -> Option<TaskState> {
        use TaskState::*;
        match self {
            Idle => Some(Takeoff),
            Takeoff => Some(Approach),
            Approach => Some(VisualServo),
            VisualServo => Some(Lighting),
            Lighting => Some(ConfirmLit),
            ConfirmLit => Some(Retreat),
            Retreat => Some(Land),
            Land | Aborted => None,
        }
    }

    /// Phases used for operation metrics.
    pub fn is_operating(self) -> bool {
        matches!(self, TaskState::VisualServo | TaskState::Lighting)
    }
}

/// Transition thresholds and timeouts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskTiming {
    /// s on the ground before takeoff.
    pub idle_time: f64,
    /// Height above ground that ends takeoff, m.
    pub takeoff_altitude: f64,
    /// m
    pub altitude_band: f64,
    /// Continuous valid vision needed to start servoing, s.
    pub observation_hold: f64,
    /// Continuous in-workspace time needed to start lighting, s.
    pub workspace_hold: f64,
    /// s
    pub lighting_timeout: f64,
    /// Thermocouple reading that confirms a flame, deg C.
    pub lit_temperature: f64,
    /// s
    pub confirm_hold: f64,
    /// s
    pub confirm_timeout: f64,
    /// Whole-mission limit, s.
    pub global_timeout: f64,
}

impl Default for TaskTiming {
    fn default() -> Self {
        Self {
            idle_time: 1.0,
            takeoff_altitude: 2.5,
            altitude_band: 0.1,
            observation_hold: 1.0,
            workspace_hold: 2.0,
            lighting_timeout: 30.0,
            lit_temperature: 200.0,
            confirm_hold: 1.0,
            confirm_timeout: 10.0,
            global_timeout: 120.0,
        }
    }
}

impl TaskTiming {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.idle_time,
            self.altitude_band,
            self.observation_hold,
            self.workspace_hold,
            self.confirm_hold,
        ];
        if all.iter().any(|v| !(*v >= 0.0)) {
            return Err("task hold times must be >= 0".into());
        }
        if !(self.takeoff_altitude > 0.0
            && self.lighting_timeout > 0.0
            && self.confirm_timeout > 0.0
            && self.global_timeout > 0.0)
        {
            return Err("task altitude and timeouts must be positive".into());
        }
        Ok(())
    }
}

/// What the machine reads each task tick.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaskSensors {
    /// Height above ground, m.
    pub altitude: f64,
    pub on_ground: bool,
    pub observation_valid: bool,
    pub target_in_workspace: bool,
    pub lit: bool,
    /// deg C
    pub temperature: f64,
    /// Retreat waypoint reached.
    pub retreat_done: bool,
}

/// Vehicle behaviour requested by the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleCommand {
    /// Motors idle on the ground.
    Ground,
    /// Climb straight up to the takeoff altitude.
    Climb,
    /// Fly to the prior target standoff waypoint.
    Approach,
    /// Track the hovering setpoint from vision.
    Servo,
    /// Hold the last servo goal.
    Hold,
    Retreat,
    Descend,
}

/// Arm behaviour requested by the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmCommand {
    Stow,
    Ready,
    /// Endpoint tracking of the fire point once the target is reachable.
    Track,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Directive {
    pub vehicle: VehicleCommand,
    pub arm: ArmCommand,
}

/// Deterministic mission executive.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskMachine {
    pub timing: TaskTiming,
    state: TaskState,
    entered_at: f64,
    /// Start of the current run of the guard condition, if it holds.
    held_since: Option<f64>,
    /// (state, entry time) in visiting order.
    history: Vec<(TaskState, f64)>,
    finished: bool,
}

impl TaskMachine {
    pub fn new(timing: TaskTiming) -> Self {
        Self {
            timing,
            state: TaskState::Idle,
            entered_at: 0.0,
            held_since: None,
            history: vec![(TaskState::Idle, 0.0)],
            finished: false,
        }
    }

    pub fn state(&self) -> TaskState {
        self.state
    }

    pub fn entered_at(&self) -> f64 {
        self.entered_at
    }

    pub fn history(&self) -> &[(TaskState, f64)] {
        &self.history
    }

    /// Entry time of the first visit to `state`.
    pub fn entry_time(&self, state: TaskState) -> Option<f64> {
        self.history.iter().find(|(s, _)| *s == state).map(|(_, t)| *t)
    }

    /// On the ground after landing or aborting.
    pub fn is_terminal(&self) -> bool {
        self.finished
    }

    /// Landed after the full sequence.
    pub fn completed(&self) -> bool {
        self.finished && self.state == TaskState::Land
    }

    fn enter(&mut self, next: TaskState, t: f64) {
        self.state = next;
        self.entered_at = t;
        self.held_since = None;
        self.history.push((next, t));
    }

    /// True once `cond` has held continuously for `hold` seconds.
    fn held(&mut self, cond: bool, hold: f64, t: f64) -> bool {
        if !cond {
            self.held_since = None;
            return false;
        }
        let since = *self.held_since.get_or_insert(t);
        t - since >= hold - 1e-9
    }

    pub fn directive(&self) -> Directive {
        use ArmCommand::*;
        use VehicleCommand::*;
        let (vehicle, arm) = match self.state {
            TaskState::Idle => (Ground, Stow),
            TaskState::Takeoff => (Climb, Stow),
            TaskState::Approach => (VehicleCommand::Approach, Stow),
            TaskState::VisualServo => (Servo, Track),
            TaskState::Lighting => (Hold, Track),
            TaskState::ConfirmLit => (Hold, Ready),
            TaskState::Retreat => (VehicleCommand::Retreat, Stow),
            TaskState::Land | TaskState::Aborted if self.finished => (Ground, Stow),
            TaskState::Land | TaskState::Aborted => (Descend, Stow),
        };
        Directive { vehicle, arm }
    }
}

/// Advances the machine at time `t` and returns the state with the
/// commands for the next task period.
pub fn step_task(machine: &mut TaskMachine, sensors: &TaskSensors, t: f64) -> (TaskState, Directive) {
    let timing = machine.timing;
    let since = t - machine.entered_at;
    let state = machine.state;
    let live = !matches!(state, TaskState::Land | TaskState::Aborted);
    if live && t >= timing.global_timeout {
        machine.enter(TaskState::Aborted, t);
        return (machine.state, machine.directive());
    }
    let next = match state {
        TaskState::Idle => (since >= timing.idle_time - 1e-9).then_some(TaskState::Takeoff),
        TaskState::Takeoff => {
            let reached = (sensors.altitude - timing.takeoff_altitude).abs() <= timing.altitude_band;
            reached.then_some(TaskState::Approach)
        }
        TaskState::Approach => machine
            .held(sensors.observation_valid, timing.observation_hold, t)
            .then_some(TaskState::VisualServo),
        TaskState::VisualServo => machine
            .held(sensors.target_in_workspace, timing.workspace_hold, t)
            .then_some(TaskState::Lighting),
        TaskState::Lighting => {
            if sensors.lit {
                Some(TaskState::ConfirmLit)
            } else if since >= timing.lighting_timeout - 1e-9 {
                Some(TaskState::Aborted)
            } else {
                None
            }
        }
        TaskState::ConfirmLit => {
            if machine.held(sensors.temperature >= timing.lit_temperature, timing.confirm_hold, t) {
                Some(TaskState::Retreat)
            } else if since >= timing.confirm_timeout - 1e-9 {
                Some(TaskState::Aborted)
            } else {
                None
            }
        }
        TaskState::Retreat => sensors.retreat_done.then_some(TaskState::Land),
        TaskState::Land | TaskState::Aborted => {
            machine.finished |= sensors.on_ground;
            None
        }
    };
    if let Some(next) = next {
        machine.enter(next, t);
    }
    (machine.state, machine.directive())
}
