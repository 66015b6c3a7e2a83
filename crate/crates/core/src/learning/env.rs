//! Training environments: the toy bandit, locomotion and gait selection.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::obs::{beta_g_in_base, obs_g, OBS_G_LEN, OBS_L_LEN};
use super::policy::{locomotion_observation, LocoPolicy};
use super::ppo::EpisodeEnd;
use super::randomize::{sample_episode_config, EpisodeConfig, RandomizationConfig};
use crate::control::Controller;
use crate::error::{Error, Result};
use crate::gait::{CommandU, GaitId};
use crate::metrics::MetricsSample;
use crate::rewards::reward_gait_selection;
use crate::runtime::{Rig, RigConfig};
use crate::sim::{Terrain, LEVEL_HEIGHTS};
use crate::SELECT_RATE_HZ;

/// Outcome of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub end: EpisodeEnd,
    /// Diagnostics named by [`Env::info_names`].
    pub info: Vec<f64>,
}

pub trait Env {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn info_names(&self) -> &'static [&'static str];
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64], rng: &mut ChaCha8Rng) -> Result<StepResult>;
}

/// One-step episodes with reward `−(a − target)²` and a constant
/// observation. The optimal policy mean is `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyBandit {
    pub target: f64,
}

impl Env for ToyBandit {
    fn obs_dim(&self) -> usize {
        1
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn info_names(&self) -> &'static [&'static str] {
        &["action"]
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }

    fn step(&mut self, action: &[f64], _rng: &mut ChaCha8Rng) -> Result<StepResult> {
        let a = action[0];
        Ok(StepResult {
            obs: vec![1.0],
            reward: -(a - self.target).powi(2),
            end: EpisodeEnd::Terminal,
            info: vec![a],
        })
    }
}

fn metric_values(m: &MetricsSample) -> [f64; 4] {
    [m.cot.unwrap_or(0.0), m.tau_pct, m.c_avg_err, m.w_ext]
}

/// Episode bookkeeping shared by both robot environments.
#[derive(Clone, Debug)]
struct Episode {
    rig: Rig,
    config: EpisodeConfig,
}

fn start_episode(
    base: &RigConfig,
    terrain: Terrain,
    rcfg: &RandomizationConfig,
    duration: f64,
    controller: Controller,
    rng: &mut ChaCha8Rng,
) -> Result<Episode> {
    let config = sample_episode_config(rng, rcfg, duration);
    let mut cfg = config.apply(base);
    cfg.noise = rcfg.noise.clone();
    cfg.seed = rng.random();
    let mut rig = Rig::with_terrain(&cfg, terrain, controller)?;
    let model = rig.sim.model.clone();
    rig.sim.state.perturb_joints(&config.q_init_offset, &model, &rig.sim.terrain);
    rig.estimator.reset_to(&rig.sim.state);
    Ok(Episode { rig, config })
}

/// Ends the episode on a fall or divergence, truncates at the time limit.
fn episode_end(rig: &Rig, stepped: &Result<()>, duration: f64) -> Result<EpisodeEnd> {
    match stepped {
        Err(Error::SimulationDiverged { .. }) => return Ok(EpisodeEnd::Terminal),
        Err(e) => return Err(Error::Contract(format!("environment step failed: {e}"))),
        Ok(()) => {}
    }
    Ok(if rig.fallen() || !rig.sim.state.is_finite() {
        EpisodeEnd::Terminal
    } else if rig.time() >= duration - 1e-9 {
        EpisodeEnd::Truncated
    } else {
        EpisodeEnd::Continue
    })
}

/// Locomotion training on flat ground. The action (12 values) offsets the
/// reference joint targets; the reward is the mean locomotion reward over
/// the selection interval.
#[derive(Clone, Debug)]
pub struct LocoEnv {
    pub base: RigConfig,
    pub randomization: RandomizationConfig,
    pub episode_seconds: f64,
    terrain: Terrain,
    episode: Option<Episode>,
}

impl LocoEnv {
    pub fn new(base: RigConfig, randomization: RandomizationConfig, episode_seconds: f64) -> Self {
        Self {
            base,
            randomization,
            episode_seconds,
            terrain: Terrain::flat(),
            episode: None,
        }
    }

    fn observation(rig: &Rig) -> Vec<f64> {
        let s = &rig.sim.state;
        locomotion_observation(&rig.beta_l, &s.position, &s.rotation, &rig.estimate, &rig.command)
    }

    pub fn rig(&self) -> Option<&Rig> {
        self.episode.as_ref().map(|e| &e.rig)
    }
}

impl Env for LocoEnv {
    fn obs_dim(&self) -> usize {
        OBS_L_LEN
    }

    fn act_dim(&self) -> usize {
        12
    }

    fn info_names(&self) -> &'static [&'static str] {
        &["r_eta", "r_v_cmd", "r_f", "r_stab", "cot", "tau_pct", "c_avg_err", "w_ext"]
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let controller = Controller::Policy(Box::new(LocoPolicy::external()));
        let mut ep = start_episode(
            &self.base,
            self.terrain.clone(),
            &self.randomization,
            self.episode_seconds,
            controller,
            rng,
        )?;
        ep.rig.set_command(ep.config.schedule.command_at(0.0))?;
        let obs = Self::observation(&ep.rig);
        self.episode = Some(ep);
        Ok(obs)
    }

    fn step(&mut self, action: &[f64], _rng: &mut ChaCha8Rng) -> Result<StepResult> {
        let ep = self
            .episode
            .as_mut()
            .ok_or_else(|| Error::Contract("step before reset".into()))?;
        if action.len() != 12 {
            return Err(Error::Contract(format!("expected 12 actions, got {}", action.len())));
        }
        if let Controller::Policy(p) = &mut ep.rig.controller {
            p.action.copy_from_slice(action);
        }
        let cmd = ep.config.schedule.command_at(ep.rig.time());
        ep.rig.set_command(cmd)?;
        let mut out = None;
        let stepped = ep.rig.step_interval().map(|r| out = Some(r));
        let end = episode_end(&ep.rig, &stepped, self.episode_seconds)?;
        let (metrics, reward) = out.unwrap_or_default();
        let mut info = vec![reward.r_eta, reward.r_v, reward.r_f, reward.r_stab];
        info.extend(metric_values(&metrics));
        let obs = if ep.rig.sim.state.is_finite() {
            Self::observation(&ep.rig)
        } else {
            vec![0.0; OBS_L_LEN]
        };
        Ok(StepResult {
            obs,
            reward: if reward.total.is_finite() { reward.total } else { 0.0 },
            end,
            info,
        })
    }
}

/// Gait-selection training over terrain levels 0–3. The single action is a
/// continuous gait id, clamped and rounded; the reward is the gait-selection
/// reward of the interval.
#[derive(Clone, Debug)]
pub struct GaitEnv {
    pub base: RigConfig,
    pub randomization: RandomizationConfig,
    pub episode_seconds: f64,
    /// Locomotion controller the selector drives (cloned per episode).
    pub controller: Controller,
    episode: Option<Episode>,
    prev_action: f64,
    prev_gait: GaitId,
    prev_command: Vector3<f64>,
}

impl GaitEnv {
    pub fn new(
        base: RigConfig,
        randomization: RandomizationConfig,
        episode_seconds: f64,
        controller: Controller,
    ) -> Self {
        Self {
            base,
            randomization,
            episode_seconds,
            controller,
            episode: None,
            prev_action: 0.0,
            prev_gait: GaitId::Stand,
            prev_command: Vector3::zeros(),
        }
    }

    fn observation(&self, rig: &Rig, command: &Vector3<f64>) -> Vec<f64> {
        let rate = (command - self.prev_command) * SELECT_RATE_HZ;
        let beta = beta_g_in_base(&rig.beta_g, rig.sim.state.position.z);
        obs_g(&rig.estimate, &beta, command, &rate, self.prev_action)
    }
}

impl Env for GaitEnv {
    fn obs_dim(&self) -> usize {
        OBS_G_LEN
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn info_names(&self) -> &'static [&'static str] {
        &["r_v_cmd", "r_stand", "r_smooth", "psi_cot", "psi_tau", "psi_c", "psi_w", "cot", "tau_pct", "c_avg_err", "w_ext"]
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let level = rng.random_range(0..LEVEL_HEIGHTS.len()) as u8;
        let terrain = Terrain::generate(level, rng.random(), &self.base.terrain)?;
        let ep = start_episode(
            &self.base,
            terrain,
            &self.randomization,
            self.episode_seconds,
            self.controller.clone(),
            rng,
        )?;
        self.prev_action = 0.0;
        self.prev_gait = GaitId::Stand;
        self.prev_command = Vector3::zeros();
        let cmd = ep.config.schedule.command_at(0.0).velocity();
        let obs = self.observation(&ep.rig, &cmd);
        self.episode = Some(ep);
        Ok(obs)
    }

    fn step(&mut self, action: &[f64], _rng: &mut ChaCha8Rng) -> Result<StepResult> {
        let raw = *action
            .first()
            .ok_or_else(|| Error::Contract("gait action is empty".into()))?;
        let gait = GaitId::from_action(raw);
        let mut ep = self
            .episode
            .take()
            .ok_or_else(|| Error::Contract("step before reset".into()))?;
        let scheduled = ep.config.schedule.command_at(ep.rig.time());
        let cmd = CommandU { gait, ..scheduled };
        ep.rig.set_command(cmd)?;
        let mut out = None;
        let stepped = ep.rig.step_interval().map(|r| out = Some(r));
        let end = episode_end(&ep.rig, &stepped, self.episode_seconds)?;
        let (metrics, _) = out.unwrap_or_default();
        let velocity = ep.rig.tracking_velocity();
        let r = reward_gait_selection(&metrics, &cmd.velocity(), &velocity, gait, self.prev_gait);
        let mut info = vec![r.r_v, r.r_stand, r.r_smooth, r.psi_cot, r.psi_tau, r.psi_c, r.psi_w];
        info.extend(metric_values(&metrics));
        let command = cmd.velocity();
        let obs = if ep.rig.sim.state.is_finite() {
            self.observation(&ep.rig, &command)
        } else {
            vec![0.0; OBS_G_LEN]
        };
        self.prev_action = raw;
        self.prev_gait = gait;
        self.prev_command = command;
        self.episode = Some(ep);
        Ok(StepResult {
            obs,
            reward: if r.total.is_finite() { r.total } else { 0.0 },
            end,
            info,
        })
    }
}
