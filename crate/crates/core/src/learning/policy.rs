//! Trained networks deployed as controllers.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::normalize::RunningNorm;
use super::obs::{beta_l_in_base, obs_l};
use super::ppo::ActorCritic;
use crate::control::ControlContext;
use crate::error::Result;
use crate::estimator::RobotStateS;
use crate::gait::{BetaL, CommandU, NUM_LEGS};
use crate::sim::{leg_ik, leg_jacobian, RobotModel, Terrain};
use crate::{CONTROL_RATE_HZ, SELECT_RATE_HZ};

/// Joint-offset range of one unit of locomotion action, rad.
pub const ACTION_SCALE: f64 = 0.25;

/// Network together with the frozen observation statistics it was trained
/// with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    pub model: ActorCritic,
    pub norm: RunningNorm,
}

impl PolicyNet {
    /// Deterministic action: the actor mean of the normalised observation.
    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.model.mean_actions(&self.norm.normalize(obs), 1)
    }
}

/// Locomotion observation from the rig quantities the policy sees.
pub fn locomotion_observation(
    beta_l: &BetaL,
    position: &Vector3<f64>,
    rotation: &Matrix3<f64>,
    estimate: &RobotStateS,
    command: &CommandU,
) -> Vec<f64> {
    obs_l(&beta_l_in_base(beta_l, position, rotation), estimate, &command.velocity())
}

/// Joint targets that place every foot on its reference with the base level
/// at nominal height above the ground, plus a weight-sharing preload on the
/// stance legs.
pub fn reference_targets(
    beta_l: &BetaL,
    position: &Vector3<f64>,
    yaw: f64,
    model: &RobotModel,
    terrain: &Terrain,
    gravity: f64,
) -> [f64; 12] {
    let base = Vector3::new(
        position.x,
        position.y,
        terrain.height(position.x, position.y) + model.nominal_height,
    );
    let heading = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
    let stance = beta_l.c_ref.iter().filter(|&&c| c).count().max(1) as f64;
    let load = Vector3::new(0.0, 0.0, model.base_mass * gravity / stance);
    let mut q = [0.0; 12];
    for leg in 0..NUM_LEGS {
        let rel = heading.inverse() * (beta_l.p_ref[leg] - base) - model.hip(leg);
        let (mut q_leg, _) = leg_ik(&rel, leg, model);
        if beta_l.c_ref[leg] && model.kp > 0.0 {
            q_leg -= leg_jacobian(&q_leg, leg, model).transpose() * load / model.kp;
        }
        q[3 * leg..3 * leg + 3].copy_from_slice(q_leg.as_slice());
    }
    q
}

/// Locomotion policy controller. The action offsets the reference joint
/// targets; a trained network refreshes it at the selection rate, otherwise
/// it is written from outside (during training).
#[derive(Clone, Debug, PartialEq)]
pub struct LocoPolicy {
    pub net: Option<PolicyNet>,
    pub action: [f64; 12],
    ticks: u64,
}

impl LocoPolicy {
    /// Policy whose action is set by the caller.
    pub fn external() -> Self {
        Self {
            net: None,
            action: [0.0; 12],
            ticks: 0,
        }
    }

    pub fn trained(net: PolicyNet) -> Self {
        Self {
            net: Some(net),
            ..Self::external()
        }
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> Result<[f64; 12]> {
        let decimation = (CONTROL_RATE_HZ / SELECT_RATE_HZ).round() as u64;
        if let Some(net) = &self.net {
            if self.ticks % decimation == 0 {
                let obs = locomotion_observation(
                    ctx.beta_l,
                    &ctx.sim.position,
                    &ctx.sim.rotation,
                    ctx.estimate,
                    ctx.command,
                );
                let a = net.mean_action(&obs)?;
                for (dst, src) in self.action.iter_mut().zip(a) {
                    *dst = src;
                }
            }
        }
        self.ticks += 1;
        let mut q = reference_targets(
            ctx.beta_l,
            &ctx.sim.position,
            ctx.sim.yaw(),
            ctx.model,
            ctx.terrain,
            ctx.gravity,
        );
        for (t, a) in q.iter_mut().zip(&self.action) {
            *t += ACTION_SCALE * a;
        }
        Ok(q)
    }
}
