use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{SensorNoise, WindSpec};
use crate::spatial::Vec3;

/// Independent random streams derived from one seed, so that changing how
/// often one subsystem draws never shifts another's samples.
#[derive(Clone, Debug)]
pub struct NoiseStreams {
    pub navigation: ChaCha8Rng,
    pub gyro: ChaCha8Rng,
    pub vision: ChaCha8Rng,
    pub wind: ChaCha8Rng,
    pub scenario: ChaCha8Rng,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl NoiseStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            navigation: stream(seed, 1),
            gyro: stream(seed, 2),
            vision: stream(seed, 3),
            wind: stream(seed, 4),
            scenario: stream(seed, 5),
        }
    }
}

pub fn gaussian3<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec3 {
    if sigma == 0.0 {
        return Vec3::zeros();
    }
    Vec3::from_fn(|_, _| { let z: f64 = StandardNormal.sample(rng); sigma * z })
}

/// Exact discretisation of a first-order Gauss-Markov process with
/// stationary standard deviation `sigma` and time constant `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussMarkov {
    pub value: Vec3,
    decay: f64,
    drive: f64,
}

impl GaussMarkov {
    /// Starts from a draw of the stationary distribution.
    pub fn new<R: Rng + ?Sized>(sigma: f64, tau: f64, dt: f64, rng: &mut R) -> Self {
        let decay = (-dt / tau).exp();
        let drive = sigma * (1.0 - decay * decay).sqrt();
        Self { value: gaussian3(rng, sigma), decay, drive }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec3 {
        self.value = self.value * self.decay + gaussian3(rng, self.drive);
        self.value
    }
}

/// Noisy navigation outputs.
#[derive(Clone, Debug)]
pub struct Sensors {
    pub noise: SensorNoise,
    position_error: GaussMarkov,
}

impl Sensors {
    pub fn new<R: Rng + ?Sized>(noise: SensorNoise, dt: f64, rng: &mut R) -> Self {
        let position_error = GaussMarkov::new(noise.position_sigma, noise.position_tau, dt, rng);
        Self { noise, position_error }
    }

    /// Advances the correlated position error by one of its periods.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.position_error.step(rng);
    }

    pub fn position_error(&self) -> Vec3 {
        self.position_error.value
    }

    pub fn velocity_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        gaussian3(rng, self.noise.velocity_sigma)
    }

    pub fn gyro_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        gaussian3(rng, self.noise.gyro_sigma)
    }
}

/// Mean force plus Gauss-Markov gusts, Σ_I.
#[derive(Clone, Debug)]
pub struct Wind {
    mean: Vec3,
    gust: GaussMarkov,
}

impl Wind {
    pub fn new<R: Rng + ?Sized>(spec: &WindSpec, dt: f64, rng: &mut R) -> Self {
        Self {
            mean: Vec3::new(spec.mean[0], spec.mean[1], spec.mean[2]),
            gust: GaussMarkov::new(spec.gust_sigma, spec.gust_tau, dt, rng),
        }
    }

    pub fn force(&self) -> Vec3 {
        self.mean + self.gust.value
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.gust.step(rng);
    }
}
