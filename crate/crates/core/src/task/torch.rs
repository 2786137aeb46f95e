use serde::{Deserialize, Serialize};

use crate::spatial::Vec3;

/// Which torch is being lit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FireMode {
    /// Light the vehicle's own torch from the burning target.
    GetFire,
    /// Light the target's torch with the vehicle's flame.
    MakeFire,
}

/// Ignition surrogate parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorchParams {
    /// m
    pub ignition_radius: f64,
    /// Effective in-range time needed to light, s.
    pub dwell_required: f64,
    /// Dwell rate multiplier in make-fire mode (flame rises away from the
    /// target nozzle).
    pub make_fire_factor: f64,
    /// Gas level drop per second.
    pub burn_rate: f64,
    /// Steady thermocouple reading with a flame, deg C.
    pub flame_temperature: f64,
    /// deg C
    pub ambient_temperature: f64,
    /// Thermocouple time constant, s.
    pub temperature_tau: f64,
}

impl Default for TorchParams {
    fn default() -> Self {
        Self {
            ignition_radius: 0.03,
            dwell_required: 1.5,
            make_fire_factor: 0.1,
            burn_rate: 0.002,
            flame_temperature: 600.0,
            ambient_temperature: -20.0,
            temperature_tau: 0.5,
        }
    }
}

impl TorchParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.ignition_radius > 0.0 && self.dwell_required > 0.0 && self.temperature_tau > 0.0) {
            return Err("ignition radius, dwell and temperature time constant must be positive".into());
        }
        if !(self.make_fire_factor > 0.0 && self.make_fire_factor <= 1.0) {
            return Err("make-fire factor must lie in (0, 1]".into());
        }
        if !(self.burn_rate >= 0.0) {
            return Err("burn rate must be non-negative".into());
        }
        Ok(())
    }
}

/// Flame-transfer state of the torch being lit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorchModel {
    /// Σ_I, m.
    pub fire_point: Vec3,
    pub lit: bool,
    /// Fraction of a full gas supply in [0, 1]; scales the dwell rate.
    pub gas_level: f64,
    /// Accumulated effective dwell, s.
    pub dwell: f64,
    /// Thermocouple reading, deg C.
    pub temperature: f64,
    pub mode: FireMode,
    pub params: TorchParams,
}

impl TorchModel {
    pub fn new(params: TorchParams, mode: FireMode, gas_level: f64) -> Self {
        Self {
            fire_point: Vec3::zeros(),
            lit: false,
            gas_level: gas_level.clamp(0.0, 1.0),
            dwell: 0.0,
            temperature: params.ambient_temperature,
            mode,
            params,
        }
    }

    fn dwell_rate(&self) -> f64 {
        let factor = match self.mode {
            FireMode::GetFire => 1.0,
            FireMode::MakeFire => self.params.make_fire_factor,
        };
        factor * self.gas_level
    }
}

/// Advances the thermocouple and gas supply by `dt` and, while unlit,
/// accumulates dwell whenever the endpoint is within the ignition radius.
pub fn ignition_check(p_end: &Vec3, fire_point: &Vec3, torch: &TorchModel, dt: f64) -> TorchModel {
    let in_range = (p_end - fire_point).norm() <= torch.params.ignition_radius;
    advance(torch, fire_point, in_range, dt)
}

/// Same as [`ignition_check`] with ignition disabled: only the gas supply
/// and thermocouple evolve.
pub fn ignition_idle(fire_point: &Vec3, torch: &TorchModel, dt: f64) -> TorchModel {
    advance(torch, fire_point, false, dt)
}

fn advance(torch: &TorchModel, fire_point: &Vec3, in_range: bool, dt: f64) -> TorchModel {
    let mut next = *torch;
    next.fire_point = *fire_point;
    next.gas_level = (torch.gas_level - torch.params.burn_rate * dt).max(0.0);
    if !torch.lit && in_range {
        next.dwell += torch.dwell_rate() * dt;
        if next.dwell >= torch.params.dwell_required {
            next.lit = true;
        }
    }
    let goal = if next.lit { torch.params.flame_temperature } else { torch.params.ambient_temperature };
    let k = 1.0 - (-dt / torch.params.temperature_tau).exp();
    next.temperature = torch.temperature + (goal - torch.temperature) * k;
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hold(torch: TorchModel, offset: Vec3, seconds: f64, dt: f64) -> TorchModel {
        let fp = Vec3::new(1.0, 2.0, -3.0);
        let steps = (seconds / dt).round() as usize;
        (0..steps).fold(torch, |t, _| ignition_check(&(fp + offset), &fp, &t, dt))
    }

    #[test]
    fn held_at_fire_point_lights_after_dwell() {
        let p = TorchParams { burn_rate: 0.0, ..TorchParams::default() };
        let t = TorchModel::new(p, FireMode::GetFire, 1.0);
        assert!(!hold(t, Vec3::zeros(), 1.4, 0.002).lit);
        let lit = hold(t, Vec3::zeros(), 1.5, 0.002);
        assert!(lit.lit);
        assert!((lit.dwell - 1.5).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_never_lights() {
        let t = TorchModel::new(TorchParams::default(), FireMode::GetFire, 1.0);
        let out = hold(t, Vec3::new(0.031, 0.0, 0.0), 30.0, 0.01);
        assert!(!out.lit);
        assert_eq!(out.dwell, 0.0);
        assert!((out.temperature + 20.0).abs() < 1e-9);
    }

    #[test]
    fn make_fire_needs_longer_dwell() {
        let p = TorchParams { burn_rate: 0.0, ..TorchParams::default() };
        let t = TorchModel::new(p, FireMode::MakeFire, 1.0);
        assert!(!hold(t, Vec3::zeros(), 14.9, 0.01).lit);
        assert!(hold(t, Vec3::zeros(), 15.1, 0.01).lit);
    }

    #[test]
    fn lit_is_monotone_and_temperature_rises() {
        let t = TorchModel::new(TorchParams::default(), FireMode::GetFire, 1.0);
        let lit = hold(t, Vec3::zeros(), 2.0, 0.01);
        assert!(lit.lit);
        let later = hold(lit, Vec3::new(5.0, 0.0, 0.0), 5.0, 0.01);
        assert!(later.lit);
        assert!(later.temperature > 590.0);
        assert!(later.gas_level < lit.gas_level);
    }

    #[test]
    fn gas_level_floors_at_zero() {
        let p = TorchParams { burn_rate: 1.0, ..TorchParams::default() };
        let t = TorchModel::new(p, FireMode::GetFire, 0.3);
        let out = hold(t, Vec3::zeros(), 1.0, 0.01);
        assert_eq!(out.gas_level, 0.0);
        assert!(!out.lit);
    }
}
