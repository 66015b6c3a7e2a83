//! Policy observations.
//!
//! Locomotion: `β_L (16) ∥ s (50) ∥ v_cmd (3)`, 69 values.
//! Gait selection: `s (50) ∥ β_G (10) ∥ v_cmd (3) ∥ v̇_cmd (3) ∥ Γ_prev (1)`,
//! 67 values.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::estimator::RobotStateS;
use crate::gait::{BetaG, BetaL};

pub const OBS_L_LEN: usize = BetaL::LEN + RobotStateS::LEN + 3;
pub const OBS_G_LEN: usize = RobotStateS::LEN + BetaG::LEN + 3 + 3 + 1;

fn check(name: &str, values: &[f64], len: usize) -> Result<()> {
    if values.len() != len {
        return Err(Error::Contract(format!(
            "{name} has {} values, expected {len}",
            values.len()
        )));
    }
    Ok(())
}

/// Concatenates flattened locomotion observation parts.
pub fn build_obs_l(beta_l: &[f64], state: &[f64], v_cmd: &[f64]) -> Result<Vec<f64>> {
    check("beta_L", beta_l, BetaL::LEN)?;
    check("robot state", state, RobotStateS::LEN)?;
    check("velocity command", v_cmd, 3)?;
    Ok([beta_l, state, v_cmd].concat())
}

/// Splits a locomotion observation back into `(β_L, s, v_cmd)`.
pub fn split_obs_l(obs: &[f64]) -> Result<(&[f64], &[f64], &[f64])> {
    check("locomotion observation", obs, OBS_L_LEN)?;
    let (beta, rest) = obs.split_at(BetaL::LEN);
    let (state, cmd) = rest.split_at(RobotStateS::LEN);
    Ok((beta, state, cmd))
}

/// Concatenates flattened gait-selection observation parts.
pub fn build_obs_g(
    state: &[f64],
    beta_g: &[f64],
    v_cmd: &[f64],
    a_cmd: &[f64],
    gait_prev: f64,
) -> Result<Vec<f64>> {
    check("robot state", state, RobotStateS::LEN)?;
    check("beta_G", beta_g, BetaG::LEN)?;
    check("velocity command", v_cmd, 3)?;
    check("command rate", a_cmd, 3)?;
    Ok([state, beta_g, v_cmd, a_cmd, &[gait_prev]].concat())
}

/// Foot references expressed in the base frame, relative to the base.
pub fn beta_l_in_base(beta: &BetaL, position: &Vector3<f64>, rotation: &Matrix3<f64>) -> BetaL {
    BetaL {
        c_ref: beta.c_ref,
        p_ref: beta.p_ref.map(|p| rotation.transpose() * (p - position)),
    }
}

/// Foot height references relative to the base height.
pub fn beta_g_in_base(beta: &BetaG, base_height: f64) -> BetaG {
    BetaG {
        pz_ref: beta.pz_ref.map(|z| z - base_height),
        ..beta.clone()
    }
}

/// Locomotion observation from typed parts. `beta_l` should already be
/// base-relative (see [`beta_l_in_base`]).
pub fn obs_l(beta_l: &BetaL, state: &RobotStateS, v_cmd: &Vector3<f64>) -> Vec<f64> {
    build_obs_l(&beta_l.flatten(), &state.flatten(), v_cmd.as_slice()).expect("fixed-size parts")
}

pub fn obs_g(
    state: &RobotStateS,
    beta_g: &BetaG,
    v_cmd: &Vector3<f64>,
    a_cmd: &Vector3<f64>,
    gait_prev: f64,
) -> Vec<f64> {
    build_obs_g(&state.flatten(), &beta_g.flatten(), v_cmd.as_slice(), a_cmd.as_slice(), gait_prev)
        .expect("fixed-size parts")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::NUM_LEGS;

    fn zero_state() -> RobotStateS {
        RobotStateS {
            gravity_axis: Vector3::z(),
            q: [0.0; 12],
            omega: Vector3::zeros(),
            qd: [0.0; 12],
            lin_vel: Vector3::zeros(),
            height: 0.0,
            tau: [0.0; 12],
            contact: [false; NUM_LEGS],
        }
    }

    #[test]
    fn zero_locomotion_observation() {
        let beta = BetaL {
            c_ref: [true, false, false, true],
            p_ref: [Vector3::zeros(); NUM_LEGS],
        };
        let obs = obs_l(&beta, &zero_state(), &Vector3::zeros());
        assert_eq!(obs.len(), 69);
        let nonzero: Vec<usize> = (0..69).filter(|&i| obs[i] != 0.0).collect();
        // c_ref of legs 0 and 3, then the z entry of the gravity axis
        let gz = BetaL::LEN + 2;
        assert_eq!(nonzero, vec![0, 3, gz]);
        assert_eq!(obs[gz], 1.0);
    }

    #[test]
    fn locomotion_round_trip() {
        let beta: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let state: Vec<f64> = (0..50).map(|i| -(i as f64)).collect();
        let obs = build_obs_l(&beta, &state, &[0.5, 0.0, -0.2]).unwrap();
        let (b, s, c) = split_obs_l(&obs).unwrap();
        assert_eq!(b, beta.as_slice());
        assert_eq!(s, state.as_slice());
        assert_eq!(c, &[0.5, 0.0, -0.2]);
        assert!(matches!(build_obs_l(&beta[..15], &state, &[0.0; 3]), Err(Error::Contract(_))));
    }

    #[test]
    fn gait_observation_layout() {
        let beta = BetaG {
            c_ref: [true; NUM_LEGS],
            pz_ref: [0.0; NUM_LEGS],
            omega_stab: 6.0,
            kappa: true,
        };
        let obs = obs_g(&zero_state(), &beta, &Vector3::new(1.0, 0.0, 0.0), &Vector3::zeros(), 2.7);
        assert_eq!(obs.len(), OBS_G_LEN);
        assert_eq!(OBS_G_LEN, 67);
        assert_eq!(obs[66], 2.7);
        assert_eq!(&obs[63..66], &[0.0; 3]);
        assert_eq!(obs[60], 1.0);
    }
}
