//! Reward algebra for the locomotion and gait-selection policies.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::gait::{GaitId, NUM_LEGS};
use crate::metrics::MetricsSample;

/// `1 − tanh(x²)`: maps any error onto (0, 1], one at zero.
pub fn psi(x: f64) -> f64 {
    // 2 / (1 + e^{2x²}), written so it stays positive where tanh rounds to 1
    let e = (-2.0 * x * x).exp();
    2.0 * e / (1.0 + e)
}

/// Locomotion reward weights: jerk/effort, velocity tracking, reference
/// tracking, stability.
pub const LOCO_WEIGHTS: [f64; 4] = [-1.5, 15.0, -10.0, -5.0];
/// Weight of the command-following group in the gait-selection reward.
pub const SELECT_COMMAND_WEIGHT: f64 = 0.4;
/// `r_stand` value when stand is misused.
pub const STAND_PENALTY: f64 = -10.0;

/// Everything the locomotion reward reads at one control step.
#[derive(Clone, Debug, PartialEq)]
pub struct LocoRewardInputs {
    /// Actual `[v_x, v_y, ω_z]` in the heading frame.
    pub velocity: Vector3<f64>,
    /// Commanded `[v_x, v_y, ω_z]`.
    pub command: Vector3<f64>,
    pub contact: [bool; NUM_LEGS],
    pub contact_ref: [bool; NUM_LEGS],
    pub feet: [Vector3<f64>; NUM_LEGS],
    pub feet_ref: [Vector3<f64>; NUM_LEGS],
    pub foot_vel: [Vector3<f64>; NUM_LEGS],
    /// Base-frame angular velocity.
    pub ang_vel: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub rotation_des: Matrix3<f64>,
    pub height: f64,
    pub nominal_height: f64,
    /// Abduction joint angles.
    pub hip_abduction: [f64; NUM_LEGS],
    pub jerk: [f64; 12],
    pub tau: [f64; 12],
    pub q_star: [f64; 12],
    pub q_star_prev: [f64; 12],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdownL {
    pub r_eta: f64,
    pub r_v: f64,
    pub r_f: f64,
    pub r_stab: f64,
    pub total: f64,
}

impl RewardBreakdownL {
    pub fn combine(r_eta: f64, r_v: f64, r_f: f64, r_stab: f64) -> Self {
        let [w_eta, w_v, w_f, w_stab] = LOCO_WEIGHTS;
        Self {
            r_eta,
            r_v,
            r_f,
            r_stab,
            total: w_eta * r_eta + w_v * r_v + w_f * r_f + w_stab * r_stab,
        }
    }
}

fn up_axis(r: &Matrix3<f64>) -> Vector3<f64> {
    r.transpose() * Vector3::z()
}

/// Locomotion reward. With `stab_sign_corrected` the orientation and height
/// ψ terms inside the stability group swap signs.
pub fn reward_locomotion(inp: &LocoRewardInputs, stab_sign_corrected: bool) -> RewardBreakdownL {
    let sq = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>();
    let dq_star: f64 = inp
        .q_star
        .iter()
        .zip(&inp.q_star_prev)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let r_eta = sq(&inp.jerk) + sq(&inp.tau) + dq_star;

    let r_v = psi((inp.velocity - inp.command).norm_squared());

    let mismatches = (0..NUM_LEGS).filter(|&i| inp.contact[i] != inp.contact_ref[i]).count();
    let foot_err: f64 = (0..NUM_LEGS)
        .map(|i| (inp.feet[i] - inp.feet_ref[i]).norm_squared())
        .sum();
    let r_f = mismatches as f64 + foot_err;

    let slip: f64 = (0..NUM_LEGS)
        .filter(|&i| inp.contact[i])
        .map(|i| inp.foot_vel[i].norm_squared())
        .sum();
    let tilt_rate = inp.ang_vel.x.powi(2) + inp.ang_vel.y.powi(2);
    let orient = psi((up_axis(&inp.rotation) - up_axis(&inp.rotation_des)).norm_squared());
    let height = psi((inp.height - inp.nominal_height).powi(2));
    let sign = if stab_sign_corrected { -1.0 } else { 1.0 };
    let r_stab = slip + tilt_rate + sign * (orient - height) + sq(&inp.hip_abduction);

    RewardBreakdownL::combine(r_eta, r_v, r_f, r_stab)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdownG {
    pub r_v: f64,
    pub r_stand: f64,
    pub r_smooth: f64,
    pub r_u: f64,
    pub psi_cot: f64,
    pub psi_tau: f64,
    pub psi_c: f64,
    pub psi_w: f64,
    pub total: f64,
}

impl RewardBreakdownG {
    pub fn combine(
        r_v: f64,
        r_stand: f64,
        r_smooth: f64,
        psi_cot: f64,
        psi_tau: f64,
        psi_c: f64,
        psi_w: f64,
    ) -> Self {
        let r_u = r_v + r_stand + r_smooth;
        Self {
            r_v,
            r_stand,
            r_smooth,
            r_u,
            psi_cot,
            psi_tau,
            psi_c,
            psi_w,
            total: SELECT_COMMAND_WEIGHT * r_u + psi_cot + psi_tau + psi_c + psi_w,
        }
    }
}

/// −10 when stand is chosen under a nonzero command or a moving gait under a
/// zero command.
pub fn stand_penalty(gait: GaitId, command: &Vector3<f64>) -> f64 {
    let moving = command.norm() > 0.0;
    if gait.is_stand() == moving {
        STAND_PENALTY
    } else {
        0.0
    }
}

/// `−ψ(CoT + τ_% + c_avg_err + W_ext)` on a gait change, else zero.
pub fn smoothness_penalty(metrics: &MetricsSample, changed: bool) -> f64 {
    if changed {
        -psi(metrics.sum())
    } else {
        0.0
    }
}

/// Gait-selection reward. `velocity` and `command` are `[v_x, v_y, ω_z]`.
pub fn reward_gait_selection(
    metrics: &MetricsSample,
    command: &Vector3<f64>,
    velocity: &Vector3<f64>,
    gait: GaitId,
    gait_prev: GaitId,
) -> RewardBreakdownG {
    RewardBreakdownG::combine(
        psi((velocity - command).norm_squared()),
        stand_penalty(gait, command),
        smoothness_penalty(metrics, gait != gait_prev),
        psi(metrics.cot.unwrap_or(0.0)),
        psi(metrics.tau_pct),
        psi(metrics.c_avg_err),
        psi(metrics.w_ext),
    )
}
