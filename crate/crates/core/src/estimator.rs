//! State estimation from proprioception: a complementary attitude filter and
//! stance-leg odometry blended with accelerometer integration.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::NUM_LEGS;
use crate::sim::{leg_fk, leg_jacobian, RobotModel, SensorVector, SimState};
use crate::GRAVITY;

/// The robot state vector consumed by the policies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotStateS {
    /// World up axis expressed in the base frame (unit vector).
    pub gravity_axis: Vector3<f64>,
    pub q: [f64; 12],
    pub omega: Vector3<f64>,
    pub qd: [f64; 12],
    /// Estimated world-frame base linear velocity.
    pub lin_vel: Vector3<f64>,
    pub height: f64,
    pub tau: [f64; 12],
    pub contact: [bool; NUM_LEGS],
}

impl RobotStateS {
    pub const LEN: usize = 50;

    /// `[gravity axis, q, ω, q̇, v, z, τ, c]`.
    pub fn flatten(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        out[0..3].copy_from_slice(self.gravity_axis.as_slice());
        out[3..15].copy_from_slice(&self.q);
        out[15..18].copy_from_slice(self.omega.as_slice());
        out[18..30].copy_from_slice(&self.qd);
        out[30..33].copy_from_slice(self.lin_vel.as_slice());
        out[33] = self.height;
        out[34..46].copy_from_slice(&self.tau);
        for i in 0..NUM_LEGS {
            out[46 + i] = if self.contact[i] { 1.0 } else { 0.0 };
        }
        out
    }

    /// Exact state read from the simulator, bypassing estimation.
    pub fn from_sim(state: &SimState, contact_threshold: f64) -> Self {
        Self {
            gravity_axis: state.rotation.transpose() * Vector3::z(),
            q: state.q,
            omega: state.ang_vel,
            qd: state.qd,
            lin_vel: state.lin_vel,
            height: state.position.z,
            tau: state.tau,
            contact: std::array::from_fn(|i| state.f_grf[i] > contact_threshold),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Fraction of the gyro/accelerometer attitude disagreement removed per update.
    pub orientation_gain: f64,
    /// Weight of leg odometry against accelerometer integration.
    pub odometry_blend: f64,
    pub contact_threshold: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            orientation_gain: 0.02,
            odometry_blend: 0.98,
            contact_threshold: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEstimator {
    pub config: EstimatorConfig,
    pub rotation: Matrix3<f64>,
    pub lin_vel: Vector3<f64>,
    pub height: f64,
}

impl StateEstimator {
    /// Level, at rest, at `height`.
    pub fn new(config: EstimatorConfig, height: f64) -> Self {
        Self {
            config,
            rotation: Matrix3::identity(),
            lin_vel: Vector3::zeros(),
            height,
        }
    }

    /// Initialises from a known state.
    pub fn reset_to(&mut self, state: &SimState) {
        self.rotation = state.rotation;
        self.lin_vel = state.lin_vel;
        self.height = state.position.z;
    }

    pub fn update(
        &mut self,
        sensors: &SensorVector,
        dt: f64,
        model: &RobotModel,
    ) -> Result<RobotStateS> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("estimator step must be positive, got {dt}")));
        }
        let cfg = &self.config;

        // attitude: integrate the gyro, then pull the predicted up axis
        // toward the measured specific force
        let omega = sensors.omega;
        let mut rot = self.rotation * Rotation3::new(omega * dt).matrix();
        let up_pred = rot.transpose() * Vector3::z();
        let accel_norm = sensors.accel.norm();
        if accel_norm > 1e-6 {
            let up_meas = sensors.accel / accel_norm;
            let axis = up_pred.cross(&up_meas);
            let sin = axis.norm();
            if sin > 1e-12 {
                let angle = sin.atan2(up_pred.dot(&up_meas));
                let correction = Rotation3::new(-axis / sin * angle * cfg.orientation_gain);
                rot *= correction.matrix();
            }
        }
        let rot = Rotation3::from_matrix_eps(&rot, 1e-12, 20, Rotation3::identity()).into_inner();
        self.rotation = rot;

        let contact: [bool; NUM_LEGS] =
            std::array::from_fn(|i| sensors.f_grf[i] > cfg.contact_threshold);

        // leg odometry over stance feet
        let mut v_odo = Vector3::zeros();
        let mut z_kin = 0.0;
        let mut n = 0usize;
        for leg in 0..NUM_LEGS {
            if !contact[leg] {
                continue;
            }
            let q = Vector3::new(sensors.q[3 * leg], sensors.q[3 * leg + 1], sensors.q[3 * leg + 2]);
            let qd = Vector3::new(sensors.qd[3 * leg], sensors.qd[3 * leg + 1], sensors.qd[3 * leg + 2]);
            let r_body = model.hip(leg) + leg_fk(&q, leg, model);
            let foot_rate = leg_jacobian(&q, leg, model) * qd + omega.cross(&r_body);
            v_odo -= rot * foot_rate;
            z_kin -= (rot * r_body).z;
            n += 1;
        }

        let acc_world = rot * sensors.accel - Vector3::new(0.0, 0.0, GRAVITY);
        let v_acc = self.lin_vel + acc_world * dt;
        let z_pred = self.height + self.lin_vel.z * dt;
        if n > 0 {
            let w = cfg.odometry_blend;
            let n = n as f64;
            self.lin_vel = w * (v_odo / n) + (1.0 - w) * v_acc;
            self.height = w * (z_kin / n) + (1.0 - w) * z_pred;
        } else {
            self.lin_vel = v_acc;
            self.height = z_pred;
        }

        Ok(RobotStateS {
            gravity_axis: rot.transpose() * Vector3::z(),
            q: sensors.q,
            omega,
            qd: sensors.qd,
            lin_vel: self.lin_vel,
            height: self.height,
            tau: sensors.tau,
            contact,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level_sensors(model: &RobotModel) -> SensorVector {
        SensorVector {
            omega: Vector3::zeros(),
            accel: Vector3::new(0.0, 0.0, GRAVITY),
            q: model.nominal_joints(),
            qd: [0.0; 12],
            tau: [0.0; 12],
            f_grf: [29.43; 4],
        }
    }

    #[test]
    fn level_attitude_is_fixed_point() {
        let model = RobotModel::default();
        let mut est = StateEstimator::new(EstimatorConfig::default(), 0.3);
        let sensors = level_sensors(&model);
        for _ in 0..100 {
            let s = est.update(&sensors, 0.002, &model).unwrap();
            assert!((s.gravity_axis - Vector3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn tilted_estimate_converges_to_accelerometer() {
        let model = RobotModel::default();
        let mut est = StateEstimator::new(EstimatorConfig::default(), 0.28);
        est.rotation = *Rotation3::new(Vector3::new(0.2, -0.1, 0.0)).matrix();
        let sensors = level_sensors(&model);
        let mut s = est.update(&sensors, 0.002, &model).unwrap();
        for _ in 0..1000 {
            s = est.update(&sensors, 0.002, &model).unwrap();
        }
        assert!((s.gravity_axis - Vector3::z()).norm() < 1e-6);
        assert!((s.gravity_axis.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn passthrough_and_contacts() {
        let model = RobotModel::default();
        let mut est = StateEstimator::new(EstimatorConfig::default(), 0.28);
        let mut sensors = level_sensors(&model);
        sensors.f_grf = [0.5, 1.0, 1.01, 40.0];
        sensors.tau[3] = 4.2;
        sensors.qd[7] = -0.3;
        let s = est.update(&sensors, 0.002, &model).unwrap();
        assert_eq!(s.contact, [false, false, true, true]);
        assert_eq!(s.q, sensors.q);
        assert_eq!(s.qd, sensors.qd);
        assert_eq!(s.tau, sensors.tau);
        assert_eq!(s.omega, sensors.omega);
        assert_eq!(s.flatten().len(), 50);
    }

    #[test]
    fn flight_integrates_accelerometer_drift() {
        let model = RobotModel::default();
        let mut est = StateEstimator::new(EstimatorConfig::default(), 0.28);
        let mut sensors = level_sensors(&model);
        sensors.f_grf = [0.0; 4];
        sensors.accel.x = 0.05;
        let mut prev = 0.0;
        for _ in 0..50 {
            let s = est.update(&sensors, 0.002, &model).unwrap();
            assert!(s.lin_vel.x > prev);
            prev = s.lin_vel.x;
        }
    }

    #[test]
    fn stance_height_from_kinematics() {
        let model = RobotModel::default();
        let mut est = StateEstimator::new(EstimatorConfig::default(), 0.5);
        let sensors = level_sensors(&model);
        let mut s = est.update(&sensors, 0.002, &model).unwrap();
        for _ in 0..500 {
            s = est.update(&sensors, 0.002, &model).unwrap();
        }
        assert!((s.height - model.nominal_height).abs() < 1e-6);
        assert!(s.lin_vel.norm() < 1e-9);
    }
}
