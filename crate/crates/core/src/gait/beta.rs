use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GaitId, NUM_LEGS};

/// High-level command: planar base velocity, yaw rate and requested gait.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandU {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    pub gait: GaitId,
}

impl Default for CommandU {
    fn default() -> Self {
        Self {
            vx: 0.0,
            vy: 0.0,
            yaw_rate: 0.0,
            gait: GaitId::Stand,
        }
    }
}

impl CommandU {
    /// Magnitude of the linear velocity command.
    pub fn linear_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    /// True when the whole velocity command (linear and yaw) is zero.
    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0 && self.yaw_rate == 0.0
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.yaw_rate)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Reference for the locomotion controller: contact states and world-frame
/// foot targets.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaL {
    pub c_ref: [bool; NUM_LEGS],
    pub p_ref: [Vector3<f64>; NUM_LEGS],
}

impl BetaL {
    pub const LEN: usize = 16;

    /// `[c_ref, p_x_ref, p_y_ref, p_z_ref]`, contacts encoded 0/1.
    pub fn flatten(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        for i in 0..NUM_LEGS {
            out[i] = flag(self.c_ref[i]);
            out[4 + i] = self.p_ref[i].x;
            out[8 + i] = self.p_ref[i].y;
            out[12 + i] = self.p_ref[i].z;
        }
        out
    }
}

/// Reference for the gait selector.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaG {
    pub c_ref: [bool; NUM_LEGS],
    pub pz_ref: [f64; NUM_LEGS],
    pub omega_stab: f64,
    pub kappa: bool,
}

impl BetaG {
    pub const LEN: usize = 10;

    /// `[c_ref, p_z_ref, Ω_stab, κ]`.
    pub fn flatten(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        for i in 0..NUM_LEGS {
            out[i] = flag(self.c_ref[i]);
            out[4 + i] = self.pz_ref[i];
        }
        out[8] = self.omega_stab;
        out[9] = flag(self.kappa);
        out
    }
}
