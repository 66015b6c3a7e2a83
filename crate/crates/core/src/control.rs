//! Locomotion controllers producing joint targets `q*` at the control rate.
//!
//! Every controller talks to the robot only through `q*`; the joint PD law
//! inside the simulator turns targets into torques. A desired torque is
//! expressed as a target through `q* = q + (τ + K_d q̇) / K_p`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::gait::{
    BetaL, CommandU, GaitParams, SchedulerState, FOOTHOLD_CLAMP, NUM_LEGS, SWING_PEAK_FRACTION,
};
use crate::learning::LocoPolicy;
use crate::sim::{leg_ik, leg_jacobian, RobotModel, SimState, Terrain};
use crate::estimator::RobotStateS;
use crate::error::Result;

/// Fraction of the swing after which ground contact counts as touchdown.
const EARLY_TOUCHDOWN: f64 = 0.6;
/// Flight height deficit below which swing feet reach for the ground, m.
const LANDING_SAG: f64 = 0.01;

/// Inputs available to a controller at one control tick.
pub struct ControlContext<'a> {
    pub sim: &'a SimState,
    pub estimate: &'a RobotStateS,
    pub model: &'a RobotModel,
    pub terrain: &'a Terrain,
    pub gravity: f64,
    pub scheduler: &'a SchedulerState,
    pub beta_l: &'a BetaL,
    pub command: &'a CommandU,
    pub dt: f64,
}

/// Joint target that makes the PD law output `tau` at the current state.
pub fn encode_torque(tau: f64, q: f64, qd: f64, kp: f64, kd: f64) -> f64 {
    if kp > 0.0 {
        q + (tau + kd * qd) / kp
    } else {
        q
    }
}

/// Vertical base motion for gaits with flight phases, at master phase
/// `phase`: acceleration, velocity and height offsets.
///
/// While any leg is in stance the support carries `g / σ`, `σ` being the
/// fraction of the cycle with support; in flight the base is ballistic.
/// Velocity and height are the zero-mean integrals of that acceleration.
pub fn vertical_profile(gait: &GaitParams, phase: f64, gravity: f64) -> (f64, f64, f64) {
    const N: usize = 200;
    if gait.is_static() {
        return (0.0, 0.0, 0.0);
    }
    let supported = |phi: f64| {
        gait.phase_offsets.iter().any(|o| {
            let p = phi + o;
            p - p.floor() < gait.duty_factor
        })
    };
    let support: Vec<bool> = (0..N).map(|k| supported((k as f64 + 0.5) / N as f64)).collect();
    let sigma = support.iter().filter(|&&s| s).count() as f64 / N as f64;
    if sigma >= 1.0 || sigma <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let dt = gait.period / N as f64;
    let acc: Vec<f64> = support
        .iter()
        .map(|&s| if s { gravity * (1.0 - sigma) / sigma } else { -gravity })
        .collect();
    let mut vel = vec![0.0; N];
    for k in 1..N {
        vel[k] = vel[k - 1] + acc[k - 1] * dt;
    }
    let v_mean = vel.iter().sum::<f64>() / N as f64;
    vel.iter_mut().for_each(|v| *v -= v_mean);
    let mut z = vec![0.0; N];
    for k in 1..N {
        z[k] = z[k - 1] + vel[k - 1] * dt;
    }
    let z_mean = z.iter().sum::<f64>() / N as f64;
    z.iter_mut().for_each(|v| *v -= z_mean);
    let k = ((phase - phase.floor()) * N as f64) as usize % N;
    (acc[k], vel[k], z[k])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerGains {
    /// Horizontal velocity feedback, 1/s.
    pub velocity: f64,
    /// Integral gains on velocity, height and attitude errors.
    pub velocity_integral: f64,
    pub height_integral: f64,
    pub attitude_integral: f64,
    pub height: f64,
    pub height_rate: f64,
    /// Attitude stiffness and damping per unit inertia.
    pub attitude: f64,
    pub attitude_rate: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    /// Weight of the moment rows against the force rows in the force split.
    pub moment_weight: f64,
    pub regularization: f64,
    /// Fraction of the friction cone used.
    pub friction_margin: f64,
    /// Swing joint stiffness and damping.
    pub swing_kp: f64,
    pub swing_kd: f64,
    /// Depth below ground that the swing target reaches at touchdown, m.
    pub touchdown_depth: f64,
    /// Downward foot speed while a stance leg searches for the ground, m/s.
    pub search_speed: f64,
}

impl Default for TrackerGains {
    fn default() -> Self {
        Self {
            velocity: 4.0,
            velocity_integral: 4.0,
            height_integral: 100.0,
            attitude_integral: 100.0,
            height: 100.0,
            height_rate: 20.0,
            attitude: 150.0,
            attitude_rate: 25.0,
            yaw: 20.0,
            yaw_rate: 8.0,
            moment_weight: 10.0,
            regularization: 1e-3,
            friction_margin: 0.7,
            swing_kp: 60.0,
            swing_kd: 2.0,
            touchdown_depth: 0.01,
            search_speed: 2.0,
        }
    }
}

/// Model-based tracker: stance legs realise a base wrench through their
/// Jacobians, swing legs follow a foot trajectory through inverse
/// kinematics. Reads simulator state directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedTracker {
    pub gains: TrackerGains,
    liftoff: [Vector3<f64>; NUM_LEGS],
    liftoff_time: [f64; NUM_LEGS],
    prev_c_ref: [bool; NUM_LEGS],
    /// The foot has touched down since its stance reference began.
    touched: [bool; NUM_LEGS],
    yaw_target: Option<f64>,
    /// Integrated velocity (x, y), height and tilt (x, y) errors.
    integral: [f64; 5],
}

impl Default for ScriptedTracker {
    fn default() -> Self {
        Self::new(TrackerGains::default())
    }
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    (a + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI
}

impl ScriptedTracker {
    pub fn new(gains: TrackerGains) -> Self {
        Self {
            gains,
            liftoff: [Vector3::zeros(); NUM_LEGS],
            liftoff_time: [0.0; NUM_LEGS],
            prev_c_ref: [true; NUM_LEGS],
            touched: [false; NUM_LEGS],
            yaw_target: None,
            integral: [0.0; 5],
        }
    }

    /// Splits a world wrench over stance feet by weighted regularised least
    /// squares, then clips each force into the friction cone.
    fn distribute(
        &self,
        wrench: &[f64; 6],
        arms: &[(usize, Vector3<f64>)],
        friction: f64,
    ) -> Vec<Vector3<f64>> {
        let n = arms.len();
        let g = &self.gains;
        let mut a = DMatrix::<f64>::zeros(6, 3 * n);
        for (j, (_, r)) in arms.iter().enumerate() {
            for k in 0..3 {
                a[(k, 3 * j + k)] = 1.0;
            }
            let skew = Matrix3::new(0.0, -r.z, r.y, r.z, 0.0, -r.x, -r.y, r.x, 0.0);
            a.view_mut((3, 3 * j), (3, 3)).copy_from(&skew);
        }
        let w = DVector::from_vec(vec![1.0, 1.0, 1.0, g.moment_weight, g.moment_weight, g.moment_weight]);
        let aw = DMatrix::from_fn(6, 3 * n, |i, j| a[(i, j)] * w[i]);
        let mut h = a.transpose() * &aw;
        for i in 0..3 * n {
            h[(i, i)] += g.regularization;
        }
        let rhs = aw.transpose() * DVector::from_column_slice(wrench);
        let f = h
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|| DVector::zeros(3 * n));
        (0..n)
            .map(|j| {
                let mut fj = Vector3::new(f[3 * j], f[3 * j + 1], f[3 * j + 2]);
                fj.z = fj.z.max(0.0);
                let cap = g.friction_margin * friction * fj.z;
                let t = fj.x.hypot(fj.y);
                if t > cap {
                    let s = if t > 0.0 { cap / t } else { 0.0 };
                    fj.x *= s;
                    fj.y *= s;
                }
                fj
            })
            .collect()
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> [f64; 12] {
        let s = ctx.sim;
        let m = ctx.model;
        let g = &self.gains;
        let gait = ctx.scheduler.effective_gait();
        let c_ref = ctx.beta_l.c_ref;
        let rot = s.rotation;
        let omega_w = rot * s.ang_vel;
        let mass = m.base_mass;

        for leg in 0..NUM_LEGS {
            if self.prev_c_ref[leg] && !c_ref[leg] {
                self.liftoff[leg] = s.feet[leg];
                self.liftoff_time[leg] = s.time;
            }
            if !c_ref[leg] {
                self.touched[leg] = false;
            } else if s.contact[leg] {
                self.touched[leg] = true;
            }
        }
        self.prev_c_ref = c_ref;
        // during a transition the blended duty factor understates the swing
        let swing_of = |p: &GaitParams| (1.0 - p.duty_factor) * p.period;
        let swing_time = ctx
            .scheduler
            .target
            .iter()
            .chain([&ctx.scheduler.active])
            .map(swing_of)
            .fold(swing_of(&gait), f64::max)
            .max(1e-3);
        let swing_progress =
            |leg: usize| ((s.time - self.liftoff_time[leg]) / swing_time).clamp(0.0, 1.0);
        // force control for stance legs that have found the ground, and for
        // swing feet that land late in their swing
        let loaded: [bool; NUM_LEGS] = std::array::from_fn(|i| {
            if c_ref[i] {
                self.touched[i]
            } else {
                s.contact[i] && swing_progress(i) >= EARLY_TOUCHDOWN
            }
        });

        // desired base wrench
        let yaw = s.yaw();
        let yaw_target = self.yaw_target.get_or_insert(yaw);
        *yaw_target = wrap_angle(*yaw_target + ctx.command.yaw_rate * ctx.dt);
        let (sy, cy) = yaw.sin_cos();
        // a standing robot holds its place whatever speed is commanded
        let moving = if gait.is_static() { 0.0 } else { 1.0 };
        let v_des = moving * Vector3::new(
            cy * ctx.command.vx - sy * ctx.command.vy,
            sy * ctx.command.vx + cy * ctx.command.vy,
            0.0,
        );
        let (a_ff, v_ff, z_ff) = vertical_profile(&gait, ctx.scheduler.master_phase, ctx.gravity);
        let ground = ctx.terrain.height(s.position.x, s.position.y);
        let z_des = ground + m.nominal_height + z_ff;
        let body_up = rot.column(2).into_owned();
        let tilt = body_up.cross(&Vector3::z());
        let errors = [
            v_des.x - s.lin_vel.x,
            v_des.y - s.lin_vel.y,
            z_des - s.position.z,
            tilt.x,
            tilt.y,
        ];
        let limits = [0.5, 0.5, 0.05, 0.1, 0.1];
        for k in 0..5 {
            self.integral[k] = (self.integral[k] + errors[k] * ctx.dt).clamp(-limits[k], limits[k]);
        }
        let ie = self.integral;
        let force = Vector3::new(
            mass * (g.velocity * errors[0] + g.velocity_integral * ie[0]),
            mass * (g.velocity * errors[1] + g.velocity_integral * ie[1]),
            mass * (ctx.gravity + a_ff)
                + mass
                    * (g.height * errors[2]
                        + g.height_integral * ie[2]
                        + g.height_rate * (v_ff - s.lin_vel.z)),
        );
        let yaw_err = wrap_angle(*yaw_target - yaw);
        let ang_acc = Vector3::new(
            g.attitude * tilt.x + g.attitude_integral * ie[3] - g.attitude_rate * omega_w.x,
            g.attitude * tilt.y + g.attitude_integral * ie[4] - g.attitude_rate * omega_w.y,
            g.yaw * yaw_err + g.yaw_rate * (ctx.command.yaw_rate - omega_w.z),
        );
        let inertia_w = rot * m.inertia() * rot.transpose();
        let torque = inertia_w * ang_acc;
        let wrench = [force.x, force.y, force.z, torque.x, torque.y, torque.z];

        let arms: Vec<(usize, Vector3<f64>)> = (0..NUM_LEGS)
            .filter(|&i| loaded[i])
            .map(|i| (i, s.feet[i] - s.position))
            .collect();
        let forces = if arms.is_empty() {
            Vec::new()
        } else {
            self.distribute(&wrench, &arms, ctx.terrain.friction)
        };

        let mut q_star = s.q;
        for (j, (leg, _)) in arms.iter().enumerate() {
            let q = s.leg_joints(*leg);
            let jac = leg_jacobian(&q, *leg, m);
            let tau = -jac.transpose() * (rot.transpose() * forces[j]);
            for k in 0..3 {
                let idx = 3 * leg + k;
                q_star[idx] = encode_torque(tau[k], s.q[idx], s.qd[idx], m.kp, m.kd);
            }
        }

        // a flight that ends early lands on the swing footholds
        let falling = arms.is_empty()
            && s.lin_vel.z < 0.0
            && s.position.z < z_des - LANDING_SAG;
        // swing legs, and stance legs still reaching for the ground
        let peak = (SWING_PEAK_FRACTION * m.nominal_height).min(FOOTHOLD_CLAMP[2]);
        for leg in (0..NUM_LEGS).filter(|&i| !loaded[i]) {
            let (pos, vel) = if c_ref[leg] {
                let foot = s.feet[leg];
                (
                    Vector3::new(foot.x, foot.y, foot.z - g.touchdown_depth),
                    Vector3::new(0.0, 0.0, -g.search_speed),
                )
            } else {
                // timed from liftoff: the phase is unreliable while a
                // transition blends duty factors
                let progress = if falling { 1.0 } else { swing_progress(leg) };
                let ease = progress * progress * (3.0 - 2.0 * progress);
                let ease_rate = 6.0 * progress * (1.0 - progress) / swing_time;
                let start = self.liftoff[leg];
                let target = ctx.beta_l.p_ref[leg];
                let ground = ctx.terrain.height(target.x, target.y);
                let bump = (std::f64::consts::PI * progress).sin().powi(2);
                let bump_rate = std::f64::consts::PI
                    * (2.0 * std::f64::consts::PI * progress).sin()
                    / swing_time;
                let d = target - start;
                (
                    Vector3::new(
                        start.x + d.x * ease,
                        start.y + d.y * ease,
                        start.z + (ground - start.z) * ease + peak * bump,
                    ),
                    Vector3::new(
                        d.x * ease_rate,
                        d.y * ease_rate,
                        (ground - start.z) * ease_rate + peak * bump_rate,
                    ),
                )
            };
            let rel = rot.transpose() * (pos - s.position) - m.hip(leg);
            let (q_des, _) = leg_ik(&rel, leg, m);
            let q = s.leg_joints(leg);
            let qd = s.leg_rates(leg);
            let arm = pos - s.position;
            let v_rel = rot.transpose() * (vel - s.lin_vel - omega_w.cross(&arm));
            let qd_des = leg_jacobian(&q, leg, m)
                .try_inverse()
                .map(|ji| ji * v_rel)
                .unwrap_or_else(Vector3::zeros)
                .map(|v| v.clamp(-30.0, 30.0));
            for k in 0..3 {
                let idx = 3 * leg + k;
                let mut err = q_des[k] - q[k];
                if k == 0 {
                    err = wrap_angle(err);
                }
                let tau = g.swing_kp * err + g.swing_kd * (qd_des[k] - qd[k]);
                q_star[idx] = encode_torque(tau, s.q[idx], s.qd[idx], m.kp, m.kd);
            }
        }
        q_star
    }
}

/// A locomotion controller.
#[derive(Clone, Debug)]
pub enum Controller {
    Scripted(ScriptedTracker),
    Policy(Box<LocoPolicy>),
}

impl Controller {
    pub fn scripted() -> Self {
        Controller::Scripted(ScriptedTracker::default())
    }

    pub fn compute(&mut self, ctx: &ControlContext<'_>) -> Result<[f64; 12]> {
        match self {
            Controller::Scripted(t) => Ok(t.compute(ctx)),
            Controller::Policy(p) => p.compute(ctx),
        }
    }
}
