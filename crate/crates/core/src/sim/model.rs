use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::NUM_LEGS;

/// Contact reporting constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Normal force above which a pinned foot reports contact, N.
    pub threshold: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { threshold: 1.0 }
    }
}

/// Robot geometry, inertia, gains and limits. Defaults approximate a 12 kg
/// quadruped with 0.2 m thigh and calf links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotModel {
    pub base_mass: f64,
    /// Diagonal of the base inertia in the base frame, kg·m².
    pub base_inertia: [f64; 3],
    /// Hip joint positions in the base frame, FL, FR, RL, RR.
    pub hip_offsets: [[f64; 3]; NUM_LEGS],
    /// Abduction offset, thigh and calf lengths.
    pub link_lengths: [f64; 3],
    /// Lumped rotational inertia of every leg joint, kg·m².
    pub joint_inertia: f64,
    pub torque_limit: [f64; 12],
    pub nominal_height: f64,
    pub hip_height: f64,
    pub kp: f64,
    pub kd: f64,
    pub contact: ContactParams,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            base_mass: 12.0,
            base_inertia: [0.07, 0.26, 0.24],
            hip_offsets: [
                [0.183, 0.047, -0.03],
                [0.183, -0.047, -0.03],
                [-0.183, 0.047, -0.03],
                [-0.183, -0.047, -0.03],
            ],
            link_lengths: [0.0838, 0.2, 0.2],
            joint_inertia: 0.05,
            torque_limit: [33.5; 12],
            nominal_height: 0.28,
            hip_height: 0.25,
            kp: 25.0,
            kd: 1.0,
            contact: ContactParams::default(),
        }
    }
}

impl RobotModel {
    /// +1 for left legs, -1 for right legs.
    pub const SIDE: [f64; NUM_LEGS] = [1.0, -1.0, 1.0, -1.0];

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if !(self.base_mass.is_finite() && self.base_mass > 0.0) {
            return bad(format!("base mass must be positive, got {}", self.base_mass));
        }
        if self.base_inertia.iter().any(|&v| !(v > 0.0)) {
            return bad(format!("base inertia must be positive, got {:?}", self.base_inertia));
        }
        if self.torque_limit.iter().any(|&v| !(v > 0.0)) {
            return bad("torque limits must be positive".into());
        }
        if !(self.kp >= 0.0 && self.kd >= 0.0) {
            return bad(format!("gains must be non-negative, got kp={} kd={}", self.kp, self.kd));
        }
        if self.link_lengths.iter().any(|&v| !(v > 0.0)) || !(self.joint_inertia > 0.0) {
            return bad("link lengths and joint inertia must be positive".into());
        }
        if !(self.hip_height > 0.0 && self.nominal_height > 0.0) {
            return bad("heights must be positive".into());
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model: Self = toml::from_str(text).map_err(|e| Error::Parse {
            source_name: "robot model".into(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.base_inertia))
    }

    pub fn hip(&self, leg: usize) -> Vector3<f64> {
        Vector3::from(self.hip_offsets[leg])
    }

    /// Hip-frame foot position for the nominal stance: straight below the
    /// abduction offset, `nominal_height + hip z offset` down.
    pub fn nominal_foot_hip(&self, leg: usize) -> Vector3<f64> {
        let hip = self.hip(leg);
        Vector3::new(
            0.0,
            Self::SIDE[leg] * self.link_lengths[0],
            -(self.nominal_height + hip.z),
        )
    }

    /// Base-frame nominal foot positions.
    pub fn nominal_feet(&self) -> [Vector3<f64>; NUM_LEGS] {
        std::array::from_fn(|i| self.hip(i) + self.nominal_foot_hip(i))
    }

    /// Joint angles of the nominal stance.
    pub fn nominal_joints(&self) -> [f64; 12] {
        let mut q = [0.0; 12];
        for leg in 0..NUM_LEGS {
            let (angles, _) = super::leg_ik(&self.nominal_foot_hip(leg), leg, self);
            q[3 * leg..3 * leg + 3].copy_from_slice(angles.as_slice());
        }
        q
    }

    /// PD targets that hold the nominal stance under the robot's weight:
    /// nominal joints plus the static load torque divided by `kp`.
    pub fn standing_targets(&self, gravity: f64) -> [f64; 12] {
        let mut q = self.nominal_joints();
        if self.kp <= 0.0 {
            return q;
        }
        let load = Vector3::new(0.0, 0.0, self.base_mass * gravity / NUM_LEGS as f64);
        for leg in 0..NUM_LEGS {
            let joints = Vector3::new(q[3 * leg], q[3 * leg + 1], q[3 * leg + 2]);
            let tau = -super::leg_jacobian(&joints, leg, self).transpose() * load;
            for k in 0..3 {
                q[3 * leg + k] += tau[k] / self.kp;
            }
        }
        q
    }
}
