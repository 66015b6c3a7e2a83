use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SimState;
use nalgebra::Vector3;

/// Raw sensor readings: gyro, accelerometer, joint encoders, torques and
/// foot force sensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorVector {
    /// Base-frame angular velocity.
    pub omega: Vector3<f64>,
    /// Base-frame specific force (acceleration minus gravity).
    pub accel: Vector3<f64>,
    pub q: [f64; 12],
    pub qd: [f64; 12],
    pub tau: [f64; 12],
    pub f_grf: [f64; 4],
}

impl SensorVector {
    pub const LEN: usize = 46;

    pub fn flatten(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        out[0..3].copy_from_slice(self.omega.as_slice());
        out[3..6].copy_from_slice(self.accel.as_slice());
        out[6..18].copy_from_slice(&self.q);
        out[18..30].copy_from_slice(&self.qd);
        out[30..42].copy_from_slice(&self.tau);
        out[42..46].copy_from_slice(&self.f_grf);
        out
    }
}

/// Standard deviation of additive Gaussian noise per sensor channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub omega: f64,
    pub accel: f64,
    pub q: f64,
    pub qd: f64,
    pub tau: f64,
    pub f_grf: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            omega: 0.015,
            accel: 0.015,
            q: 0.005,
            qd: 0.15,
            tau: 1.0,
            f_grf: 1.0,
        }
    }
}

impl NoiseConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}

/// Samples the sensors. The accelerometer reads `Rᵀ (a + g ẑ)` with `a` the
/// base acceleration over the last step.
pub fn read_sensors<R: Rng + ?Sized>(
    state: &SimState,
    gravity: f64,
    noise: &NoiseConfig,
    rng: &mut R,
) -> SensorVector {
    let accel = state.rotation.transpose() * (state.lin_acc + Vector3::new(0.0, 0.0, gravity));
    let mut out = SensorVector {
        omega: state.ang_vel,
        accel,
        q: state.q,
        qd: state.qd,
        tau: state.tau,
        f_grf: state.f_grf,
    };
    if noise.enabled {
        let mut n = |std: f64| -> f64 { std * rng.sample::<f64, _>(StandardNormal) };
        for v in out.omega.iter_mut() {
            *v += n(noise.omega);
        }
        for v in out.accel.iter_mut() {
            *v += n(noise.accel);
        }
        for v in out.q.iter_mut() {
            *v += n(noise.q);
        }
        for v in out.qd.iter_mut() {
            *v += n(noise.qd);
        }
        for v in out.tau.iter_mut() {
            *v += n(noise.tau);
        }
        for v in out.f_grf.iter_mut() {
            *v += n(noise.f_grf);
        }
    }
    out
}
