//! Single-rigid-body base with four kinematic legs.
//!
//! A foot that reaches the ground is pinned there. While pinned, the leg is
//! massless: its joint angles follow from the base pose and its joint
//! torques map to a ground reaction through the Jacobian transpose. The foot
//! is released when that reaction would pull on the ground or the base moves
//! out of reach. Free legs integrate their joints under the lumped inertia.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{leg_fk, leg_ik, leg_jacobian, RobotModel, Terrain};
use crate::error::{Error, Result};
use crate::gait::{BaseSnapshot, NUM_LEGS};
use crate::GRAVITY;

/// Full simulator state. `lin_vel` is in the world frame, `ang_vel` in the
/// base frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub lin_vel: Vector3<f64>,
    pub ang_vel: Vector3<f64>,
    pub q: [f64; 12],
    pub qd: [f64; 12],
    /// Torques applied during the last step, after clamping.
    pub tau: [f64; 12],
    pub feet: [Vector3<f64>; NUM_LEGS],
    pub foot_vel: [Vector3<f64>; NUM_LEGS],
    pub contact: [bool; NUM_LEGS],
    pub f_grf: [f64; NUM_LEGS],
    /// World-frame contact force on each foot during the last step.
    pub foot_forces: [Vector3<f64>; NUM_LEGS],
    /// World-frame base acceleration over the last step.
    pub lin_acc: Vector3<f64>,
    pub time: f64,
    /// World point each pinned foot is held at.
    anchors: [Option<Vector3<f64>>; NUM_LEGS],
}

fn leg_q(q: &[f64; 12], leg: usize) -> Vector3<f64> {
    Vector3::new(q[3 * leg], q[3 * leg + 1], q[3 * leg + 2])
}

fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let x = r.column(0).normalize();
    let y = (r.column(1) - x * x.dot(&r.column(1))).normalize();
    let z = x.cross(&y);
    Matrix3::from_columns(&[x, y, z])
}

impl SimState {
    /// Level base at `nominal_height` above the ground under `(x, y)`, joints
    /// at the nominal stance, at rest.
    pub fn standing(model: &RobotModel, terrain: &Terrain, x: f64, y: f64) -> Self {
        let ground = terrain.height(x, y);
        let mut state = Self {
            position: Vector3::new(x, y, ground + model.nominal_height),
            rotation: Matrix3::identity(),
            lin_vel: Vector3::zeros(),
            ang_vel: Vector3::zeros(),
            q: model.nominal_joints(),
            qd: [0.0; 12],
            tau: [0.0; 12],
            feet: [Vector3::zeros(); NUM_LEGS],
            foot_vel: [Vector3::zeros(); NUM_LEGS],
            contact: [false; NUM_LEGS],
            f_grf: [0.0; NUM_LEGS],
            foot_forces: [Vector3::zeros(); NUM_LEGS],
            lin_acc: Vector3::zeros(),
            time: 0.0,
            anchors: [None; NUM_LEGS],
        };
        state.update_feet(model);
        for leg in 0..NUM_LEGS {
            let p = state.feet[leg];
            if p.z <= terrain.height(p.x, p.y) + 1e-9 {
                state.anchors[leg] = Some(p);
            }
        }
        state
    }

    /// Offsets the joint angles, then lowers or raises the base until the
    /// lowest foot rests on the ground. Only that foot starts pinned.
    pub fn perturb_joints(&mut self, delta: &[f64; 12], model: &RobotModel, terrain: &Terrain) {
        for (q, d) in self.q.iter_mut().zip(delta) {
            *q += d;
        }
        self.qd = [0.0; 12];
        self.update_feet(model);
        let clearance = self
            .feet
            .iter()
            .map(|p| p.z - terrain.height(p.x, p.y))
            .fold(f64::INFINITY, f64::min);
        self.position.z -= clearance;
        self.update_feet(model);
        for leg in 0..NUM_LEGS {
            let p = self.feet[leg];
            self.anchors[leg] = (p.z <= terrain.height(p.x, p.y) + 1e-9).then_some(p);
        }
    }

    /// True while the foot of `leg` is pinned to the ground.
    pub fn is_pinned(&self, leg: usize) -> bool {
        self.anchors[leg].is_some()
    }

    /// Recomputes foot positions and velocities from base and joint state.
    pub fn update_feet(&mut self, model: &RobotModel) {
        let omega_world = self.rotation * self.ang_vel;
        for leg in 0..NUM_LEGS {
            let q = leg_q(&self.q, leg);
            let qd = leg_q(&self.qd, leg);
            let r_body = model.hip(leg) + leg_fk(&q, leg, model);
            let r_world = self.rotation * r_body;
            self.feet[leg] = self.position + r_world;
            self.foot_vel[leg] = self.lin_vel
                + omega_world.cross(&r_world)
                + self.rotation * (leg_jacobian(&q, leg, model) * qd);
        }
    }

    pub fn leg_joints(&self, leg: usize) -> Vector3<f64> {
        leg_q(&self.q, leg)
    }

    pub fn leg_rates(&self, leg: usize) -> Vector3<f64> {
        leg_q(&self.qd, leg)
    }

    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    /// Roll and pitch magnitudes from the base z axis tilt.
    pub fn roll_pitch(&self) -> (f64, f64) {
        let r = &self.rotation;
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        (roll, pitch)
    }

    /// Base linear velocity in the heading (yaw-only) frame.
    pub fn heading_velocity(&self) -> Vector3<f64> {
        let (s, c) = self.yaw().sin_cos();
        let v = self.lin_vel;
        Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }

    /// World-frame yaw rate.
    pub fn yaw_rate(&self) -> f64 {
        (self.rotation * self.ang_vel).z
    }

    pub fn snapshot(&self) -> BaseSnapshot {
        BaseSnapshot {
            position: self.position,
            rotation: self.rotation,
            lin_vel: self.lin_vel,
            ang_vel: self.ang_vel,
            feet: self.feet,
        }
    }

    /// Kinetic (linear plus rotational) and potential energy of the base.
    pub fn base_energy(&self, model: &RobotModel, gravity: f64) -> (f64, f64) {
        let kin = 0.5 * model.base_mass * self.lin_vel.norm_squared()
            + 0.5 * self.ang_vel.dot(&(model.inertia() * self.ang_vel));
        (kin, model.base_mass * gravity * self.position.z)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.rotation.iter().all(|v| v.is_finite())
            && self.lin_vel.iter().all(|v| v.is_finite())
            && self.ang_vel.iter().all(|v| v.is_finite())
            && self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
    }
}

/// `τ = K_p (q* − q) − K_d q̇`, clamped to the torque limits.
pub fn pd_torques(q_star: &[f64; 12], q: &[f64; 12], qd: &[f64; 12], model: &RobotModel) -> [f64; 12] {
    std::array::from_fn(|j| {
        let lim = model.torque_limit[j];
        (model.kp * (q_star[j] - q[j]) - model.kd * qd[j]).clamp(-lim, lim)
    })
}

/// Joint rates that keep a pinned foot at rest in the world.
fn pinned_rates(state: &SimState, leg: usize, q: &Vector3<f64>, model: &RobotModel) -> Vector3<f64> {
    let r_body = model.hip(leg) + leg_fk(q, leg, model);
    let v_body = -state.rotation.transpose() * state.lin_vel - state.ang_vel.cross(&r_body);
    leg_jacobian(q, leg, model)
        .try_inverse()
        .map(|ji| (ji * v_body).map(|v| v.clamp(-MAX_PINNED_RATE, MAX_PINNED_RATE)))
        .unwrap_or_else(Vector3::zeros)
}

const MAX_PINNED_RATE: f64 = 50.0;

/// Ground reaction (world frame) of every pinned leg under `tau`. Releases
/// feet whose reaction would pull on the ground and caps the tangential part
/// at the friction limit.
pub fn contact_forces(
    state: &mut SimState,
    tau: &[f64; 12],
    model: &RobotModel,
    terrain: &Terrain,
) -> [Vector3<f64>; NUM_LEGS] {
    let mut forces = [Vector3::zeros(); NUM_LEGS];
    for leg in 0..NUM_LEGS {
        if state.anchors[leg].is_none() {
            continue;
        }
        let q = leg_q(&state.q, leg);
        let tau_leg = leg_q(tau, leg);
        let Some(jt_inv) = leg_jacobian(&q, leg, model).transpose().try_inverse() else {
            state.anchors[leg] = None;
            continue;
        };
        let mut f = state.rotation * -(jt_inv * tau_leg);
        if !(f.z > 0.0) {
            state.anchors[leg] = None;
            continue;
        }
        let cap = terrain.friction * f.z;
        let tangential = f.xy().norm();
        if tangential > cap {
            let scale = cap / tangential;
            f.x *= scale;
            f.y *= scale;
        }
        forces[leg] = f;
    }
    forces
}

/// Advances `state` by `dt` under joint torques `tau`.
///
/// Base: Newton-Euler with the pinned-leg reactions and gravity (`gravity`
/// is the magnitude, acting along −z). Free legs: `I q̈ = τ`, integrated
/// semi-implicitly.
pub fn step_dynamics(
    state: &mut SimState,
    tau: &[f64; 12],
    dt: f64,
    model: &RobotModel,
    terrain: &Terrain,
    gravity: f64,
) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let tau: [f64; 12] = std::array::from_fn(|j| {
        let lim = model.torque_limit[j];
        if tau[j].is_nan() {
            0.0
        } else {
            tau[j].clamp(-lim, lim)
        }
    });

    let forces = contact_forces(state, &tau, model, terrain);
    let r = state.rotation;

    // base translation; the position update is exact for constant force
    let mut total = Vector3::new(0.0, 0.0, -gravity * model.base_mass);
    let mut torque = Vector3::zeros();
    for leg in 0..NUM_LEGS {
        total += forces[leg];
        torque += (state.feet[leg] - state.position).cross(&forces[leg]);
    }
    let v_old = state.lin_vel;
    let v_new = v_old + total / model.base_mass * dt;
    state.position += 0.5 * (v_old + v_new) * dt;
    state.lin_vel = v_new;
    state.lin_acc = (v_new - v_old) / dt;

    // base rotation through world angular momentum
    let inertia = model.inertia();
    let inertia_inv = Matrix3::from_diagonal(&inertia.diagonal().map(|v| 1.0 / v));
    let momentum = r * (inertia * state.ang_vel) + torque * dt;
    let omega_world = r * inertia_inv * r.transpose() * momentum;
    // midpoint attitude for the angular velocity used over the step
    let r_mid = orthonormalize(&(Rotation3::new(omega_world * 0.5 * dt).matrix() * r));
    let omega_world = r_mid * inertia_inv * r_mid.transpose() * momentum;
    let r_new = orthonormalize(&(Rotation3::new(omega_world * dt).matrix() * r));
    state.rotation = r_new;
    state.ang_vel = inertia_inv * (r_new.transpose() * momentum);

    // legs
    for leg in 0..NUM_LEGS {
        if let Some(anchor) = state.anchors[leg] {
            let rel = r_new.transpose() * (anchor - state.position) - model.hip(leg);
            let (q, reachable) = leg_ik(&rel, leg, model);
            if reachable {
                let qd = pinned_rates(state, leg, &q, model);
                for k in 0..3 {
                    state.q[3 * leg + k] = q[k];
                    state.qd[3 * leg + k] = qd[k];
                }
                continue;
            }
            state.anchors[leg] = None;
        }
        for k in 0..3 {
            let j = 3 * leg + k;
            state.qd[j] += tau[j] / model.joint_inertia * dt;
            state.q[j] += state.qd[j] * dt;
        }
    }
    state.update_feet(model);

    // touchdown: pin free feet that reached the ground
    for leg in 0..NUM_LEGS {
        let p = state.feet[leg];
        let ground = terrain.height(p.x, p.y);
        if state.anchors[leg].is_some() || p.z > ground {
            continue;
        }
        let anchor = Vector3::new(p.x, p.y, ground);
        let rel = r_new.transpose() * (anchor - state.position) - model.hip(leg);
        let (q, reachable) = leg_ik(&rel, leg, model);
        if !reachable {
            continue;
        }
        let qd = pinned_rates(state, leg, &q, model);
        for k in 0..3 {
            state.q[3 * leg + k] = q[k];
            state.qd[3 * leg + k] = qd[k];
        }
        state.anchors[leg] = Some(anchor);
    }
    state.update_feet(model);

    state.tau = tau;
    state.foot_forces = forces;
    for leg in 0..NUM_LEGS {
        state.f_grf[leg] = forces[leg].z;
        state.contact[leg] = state.anchors[leg].is_some() && forces[leg].z > model.contact.threshold;
    }
    state.time += dt;

    if !state.is_finite() {
        return Err(Error::SimulationDiverged { time: state.time });
    }
    Ok(())
}

/// A robot on a terrain.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub model: RobotModel,
    pub terrain: Terrain,
    /// Gravity magnitude, m/s².
    pub gravity: f64,
    pub state: SimState,
}

impl Simulator {
    /// Robot standing at the origin.
    pub fn new(model: RobotModel, terrain: Terrain) -> Result<Self> {
        model.validate()?;
        let state = SimState::standing(&model, &terrain, 0.0, 0.0);
        Ok(Self {
            model,
            terrain,
            gravity: GRAVITY,
            state,
        })
    }

    pub fn step(&mut self, tau: &[f64; 12], dt: f64) -> Result<()> {
        step_dynamics(&mut self.state, tau, dt, &self.model, &self.terrain, self.gravity)
    }

    /// Applies the joint PD law toward `q_star` for one step.
    pub fn step_pd(&mut self, q_star: &[f64; 12], dt: f64) -> Result<()> {
        let tau = pd_torques(q_star, &self.state.q, &self.state.qd, &self.model);
        self.step(&tau, dt)
    }

    pub fn ground(&self, x: f64, y: f64) -> f64 {
        self.terrain.height(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pd_examples() {
        let m = RobotModel::default();
        let q = [0.3; 12];
        assert_eq!(pd_torques(&q, &q, &[0.0; 12], &m), [0.0; 12]);
        let tau = pd_torques(&[0.4; 12], &q, &[0.0; 12], &m);
        assert!(tau.iter().all(|t| (t - 2.5).abs() < 1e-12));
        let tau = pd_torques(&[10.3; 12], &q, &[0.0; 12], &m);
        assert!(tau.iter().all(|&t| t == 33.5));
        let tau = pd_torques(&[-10.0; 12], &q, &[0.0; 12], &m);
        assert!(tau.iter().all(|&t| t == -33.5));
    }
}
