//! The control loop: simulator at 1 kHz, estimator and locomotion controller
//! at 500 Hz, gait selection ticks at 100 Hz.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{ControlContext, Controller};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, RobotStateS, StateEstimator};
use crate::gait::{BetaG, BetaL, CommandU, GaitId, GaitScheduler, GaitTable, NUM_LEGS};
use crate::metrics::{contact_error, cost_of_transport, torque_saturation, EnergyAccumulator, MetricsSample};
use crate::rewards::{reward_locomotion, LocoRewardInputs, RewardBreakdownL};
use crate::sim::{read_sensors, NoiseConfig, RobotModel, Simulator, Terrain, TerrainConfig};
use crate::{SIM_RATE_HZ, SIM_STEPS_PER_CONTROL, SIM_STEPS_PER_SELECT};

/// Base height above ground below which the robot counts as fallen, m.
pub const FALL_HEIGHT: f64 = 0.12;
/// Roll or pitch beyond which the robot counts as fallen, rad.
pub const FALL_TILT: f64 = 1.0;

/// Everything needed to build a [`Rig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigConfig {
    pub model: RobotModel,
    pub gaits: GaitTable,
    pub terrain: TerrainConfig,
    pub terrain_level: u8,
    pub terrain_seed: u64,
    pub noise: NoiseConfig,
    pub estimator: EstimatorConfig,
    pub initial_gait: GaitId,
    /// Flips the ψ terms of the stability reward.
    pub stab_sign_corrected: bool,
    pub seed: u64,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            model: RobotModel::default(),
            gaits: GaitTable::default(),
            terrain: TerrainConfig::default(),
            terrain_level: 0,
            terrain_seed: 0,
            noise: NoiseConfig::default(),
            estimator: EstimatorConfig::default(),
            initial_gait: GaitId::Stand,
            stab_sign_corrected: false,
            seed: 0,
        }
    }
}

/// Sums over the control ticks of the current selection interval.
#[derive(Clone, Debug, Default, PartialEq)]
struct Interval {
    ticks: u32,
    cot_sum: f64,
    cot_n: u32,
    tau_sum: f64,
    cerr_sum: f64,
    reward: RewardBreakdownL,
}

/// One robot with its scheduler, estimator and controller.
#[derive(Clone, Debug)]
pub struct Rig {
    pub sim: Simulator,
    pub scheduler: GaitScheduler,
    pub estimator: StateEstimator,
    pub noise: NoiseConfig,
    pub controller: Controller,
    pub command: CommandU,
    pub estimate: RobotStateS,
    pub beta_l: BetaL,
    pub beta_g: BetaG,
    pub q_star: [f64; 12],
    pub q_star_prev: [f64; 12],
    pub energy: EnergyAccumulator,
    pub stab_sign_corrected: bool,
    /// Actual touchdown times per leg.
    pub touchdowns: [Vec<f64>; NUM_LEGS],
    pub sim_steps: u64,
    pub control_ticks: u64,
    /// Locomotion reward of the latest control tick.
    pub loco_reward: RewardBreakdownL,
    rng: ChaCha8Rng,
    qd_history: [[f64; 12]; 2],
    jerk: [f64; 12],
    prev_contact: [bool; NUM_LEGS],
    interval: Interval,
}

impl Rig {
    pub fn new(cfg: &RigConfig, controller: Controller) -> Result<Self> {
        let terrain = Terrain::generate(cfg.terrain_level, cfg.terrain_seed, &cfg.terrain)?;
        Self::with_terrain(cfg, terrain, controller)
    }

    /// Builds a rig on an existing terrain (shares its grid).
    pub fn with_terrain(cfg: &RigConfig, terrain: Terrain, controller: Controller) -> Result<Self> {
        let mut sim = Simulator::new(cfg.model.clone(), terrain)?;
        sim.terrain.friction = cfg.terrain.friction;
        let model = &sim.model;
        let scheduler = GaitScheduler::new(
            cfg.gaits.clone(),
            cfg.initial_gait,
            model.hip_height,
            model.nominal_height,
            model.nominal_feet(),
        );
        let mut estimator = StateEstimator::new(cfg.estimator.clone(), model.nominal_height);
        estimator.reset_to(&sim.state);
        let estimate = RobotStateS::from_sim(&sim.state, cfg.estimator.contact_threshold);
        let q_star = model.standing_targets(sim.gravity);
        let energy = EnergyAccumulator::new(model.base_mass, model.inertia());
        let feet = sim.state.feet;
        let mut rig = Self {
            scheduler,
            estimator,
            noise: cfg.noise.clone(),
            controller,
            command: CommandU {
                gait: cfg.initial_gait,
                ..CommandU::default()
            },
            estimate,
            beta_l: BetaL {
                c_ref: [true; NUM_LEGS],
                p_ref: feet,
            },
            beta_g: BetaG {
                c_ref: [true; NUM_LEGS],
                pz_ref: feet.map(|f| f.z),
                omega_stab: 0.0,
                kappa: false,
            },
            q_star,
            q_star_prev: q_star,
            energy,
            stab_sign_corrected: cfg.stab_sign_corrected,
            touchdowns: Default::default(),
            sim_steps: 0,
            control_ticks: 0,
            loco_reward: RewardBreakdownL::default(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            qd_history: [sim.state.qd; 2],
            jerk: [0.0; 12],
            prev_contact: [false; NUM_LEGS],
            interval: Interval::default(),
            sim,
        };
        rig.refresh_references()?;
        Ok(rig)
    }

    pub fn time(&self) -> f64 {
        self.sim.state.time
    }

    /// Sets the command; a new gait starts a scheduler transition.
    pub fn set_command(&mut self, cmd: CommandU) -> Result<()> {
        for v in [cmd.vx, cmd.vy, cmd.yaw_rate] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite command {cmd:?}")));
            }
        }
        if cmd.gait != self.scheduler.state.commanded_gait() {
            self.scheduler.request_gait(cmd.gait, cmd.linear_speed())?;
        }
        self.command = cmd;
        Ok(())
    }

    fn refresh_references(&mut self) -> Result<()> {
        let terrain = &self.sim.terrain;
        let (bl, bg) = self.scheduler.compute_beta(
            &self.sim.state.snapshot(),
            &self.command,
            &|x, y| terrain.height(x, y),
        )?;
        self.beta_l = bl;
        self.beta_g = bg;
        Ok(())
    }

    /// Heading-frame `[v_x, v_y, ω_z]` of the base.
    pub fn tracking_velocity(&self) -> Vector3<f64> {
        let v = self.sim.state.heading_velocity();
        Vector3::new(v.x, v.y, self.sim.state.yaw_rate())
    }

    /// Base below the fall height or tilted past the fall angle.
    pub fn fallen(&self) -> bool {
        let s = &self.sim.state;
        let ground = self.sim.terrain.height(s.position.x, s.position.y);
        let (roll, pitch) = s.roll_pitch();
        s.position.z - ground < FALL_HEIGHT || roll.abs() > FALL_TILT || pitch.abs() > FALL_TILT
    }

    fn control_tick(&mut self) -> Result<()> {
        let dt = SIM_STEPS_PER_CONTROL as f64 / SIM_RATE_HZ;
        let t = self.sim.state.time;
        if self.scheduler.advance(t)? {
            self.energy.close_cycle(t);
        }
        let sensors = read_sensors(&self.sim.state, self.sim.gravity, &self.noise, &mut self.rng);
        self.estimate = self.estimator.update(&sensors, dt, &self.sim.model)?;
        self.refresh_references()?;

        let ctx = ControlContext {
            sim: &self.sim.state,
            estimate: &self.estimate,
            model: &self.sim.model,
            terrain: &self.sim.terrain,
            gravity: self.sim.gravity,
            scheduler: &self.scheduler.state,
            beta_l: &self.beta_l,
            command: &self.command,
            dt,
        };
        let q_star = self.controller.compute(&ctx)?;
        self.q_star_prev = self.q_star;
        self.q_star = q_star;
        self.control_ticks += 1;
        self.record_tick();
        Ok(())
    }

    fn record_tick(&mut self) {
        let s = &self.sim.state;
        let m = &self.sim.model;
        let threshold = self.estimator.config.contact_threshold;
        let contact: [bool; NUM_LEGS] = std::array::from_fn(|i| s.f_grf[i] > threshold);
        for leg in 0..NUM_LEGS {
            if contact[leg] && !self.prev_contact[leg] {
                self.touchdowns[leg].push(s.time);
            }
        }
        self.prev_contact = contact;

        let speed = self.command.linear_speed();
        let iv = &mut self.interval;
        iv.ticks += 1;
        if let Some(c) = cost_of_transport(&s.tau, &s.qd, m.base_mass, speed) {
            iv.cot_sum += c;
            iv.cot_n += 1;
        }
        iv.tau_sum += torque_saturation(&s.tau, &m.torque_limit);
        iv.cerr_sum += contact_error(&contact, &self.beta_l.c_ref).1;
        self.energy.step(&s.lin_vel, &s.ang_vel, s.position.z);

        // jerk from joint rates sampled at the policy rate
        let policy_ticks = SIM_STEPS_PER_SELECT / SIM_STEPS_PER_CONTROL;
        if self.control_ticks % policy_ticks == 0 {
            let h = SIM_STEPS_PER_SELECT as f64 / SIM_RATE_HZ;
            self.jerk = std::array::from_fn(|j| {
                (s.qd[j] - 2.0 * self.qd_history[1][j] + self.qd_history[0][j]) / (h * h)
            });
            self.qd_history = [self.qd_history[1], s.qd];
        }
        let jerk = self.jerk;
        let velocity = {
            let v = s.heading_velocity();
            Vector3::new(v.x, v.y, s.yaw_rate())
        };
        let inputs = LocoRewardInputs {
            velocity,
            command: self.command.velocity(),
            contact,
            contact_ref: self.beta_l.c_ref,
            feet: s.feet,
            feet_ref: self.beta_l.p_ref,
            foot_vel: s.foot_vel,
            ang_vel: s.ang_vel,
            rotation: s.rotation,
            rotation_des: Matrix3::identity(),
            height: s.position.z - self.sim.terrain.height(s.position.x, s.position.y),
            nominal_height: m.nominal_height,
            hip_abduction: std::array::from_fn(|i| s.q[3 * i]),
            jerk,
            tau: s.tau,
            q_star: self.q_star,
            q_star_prev: self.q_star_prev,
        };
        let r = reward_locomotion(&inputs, self.stab_sign_corrected);
        self.loco_reward = r;
        let acc = &mut self.interval.reward;
        acc.r_eta += r.r_eta;
        acc.r_v += r.r_v;
        acc.r_f += r.r_f;
        acc.r_stab += r.r_stab;
        acc.total += r.total;
    }

    /// One 1 kHz step; the controller runs on every second step.
    pub fn step(&mut self) -> Result<()> {
        if self.sim_steps % SIM_STEPS_PER_CONTROL == 0 {
            self.control_tick()?;
        }
        let dt = 1.0 / SIM_RATE_HZ;
        self.sim.step_pd(&self.q_star, dt)?;
        self.sim_steps += 1;
        Ok(())
    }

    /// Runs one selection interval (10 simulator steps) and returns the
    /// interval's mean metrics and mean locomotion reward.
    pub fn step_interval(&mut self) -> Result<(MetricsSample, RewardBreakdownL)> {
        for _ in 0..SIM_STEPS_PER_SELECT {
            self.step()?;
        }
        Ok(self.take_interval())
    }

    fn take_interval(&mut self) -> (MetricsSample, RewardBreakdownL) {
        let iv = std::mem::take(&mut self.interval);
        let n = iv.ticks.max(1) as f64;
        let sample = MetricsSample {
            time: self.time(),
            cot: (iv.cot_n > 0).then(|| iv.cot_sum / iv.cot_n as f64),
            tau_pct: iv.tau_sum / n,
            w_ext: self.energy.last_cycle.unwrap_or(0.0),
            c_avg_err: iv.cerr_sum / n,
            stride_cv: None,
        };
        let r = iv.reward;
        let reward = RewardBreakdownL {
            r_eta: r.r_eta / n,
            r_v: r.r_v / n,
            r_f: r.r_f / n,
            r_stab: r.r_stab / n,
            total: r.total / n,
        };
        (sample, reward)
    }
}
