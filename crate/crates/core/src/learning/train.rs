//! On-policy training loop, checkpoints and training logs.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::Env;
use super::normalize::{RunningNorm, NORM_EPSILON};
use super::policy::PolicyNet;
use super::ppo::{gae, ppo_update, ActorCritic, Adam, Batch, EpisodeEnd, PpoHypers, PpoLoss};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hypers: PpoHypers,
    pub iterations: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub init_std: f64,
    /// Divide rewards by the running std of the discounted return.
    pub normalize_rewards: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hypers: PpoHypers::desk(),
            iterations: 500,
            seed: 0,
            hidden: vec![512, 256, 128],
            init_std: 1.0,
            normalize_rewards: true,
        }
    }
}

/// Statistics of one training iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Mean raw reward per step.
    pub mean_reward: f64,
    /// Mean undiscounted return of episodes finished this iteration; NaN
    /// when none finished.
    pub mean_return: f64,
    pub episodes: usize,
    /// Means of the environment's diagnostic values, in `info_names` order.
    pub info: Vec<f64>,
    pub loss: PpoLoss,
    pub mean_std: f64,
}

/// Result of a training run that ended early.
#[derive(Clone, Debug, PartialEq)]
pub struct Aborted {
    pub iteration: usize,
    pub reason: String,
}

/// Samples per environment within one iteration.
struct Trajectory {
    obs: Vec<f64>,
    actions: Vec<f64>,
    log_probs: Vec<f64>,
    values: Vec<f64>,
    rewards: Vec<f64>,
    ends: Vec<EpisodeEnd>,
    /// Raw observation following each truncated step.
    truncated_next: Vec<(usize, Vec<f64>)>,
}

pub struct Trainer<E: Env> {
    pub envs: Vec<E>,
    pub model: ActorCritic,
    pub obs_norm: RunningNorm,
    pub config: TrainConfig,
    pub log: Vec<IterationLog>,
    return_norm: RunningNorm,
    discounted: Vec<f64>,
    episode_return: Vec<f64>,
    current_obs: Vec<Vec<f64>>,
    adam: Adam,
    rng: ChaCha8Rng,
}

impl<E: Env> Trainer<E> {
    pub fn new(mut envs: Vec<E>, config: TrainConfig) -> Result<Self> {
        let first = envs
            .first()
            .ok_or_else(|| Error::InvalidInput("training needs at least one environment".into()))?;
        let (obs_dim, act_dim) = (first.obs_dim(), first.act_dim());
        if envs.iter().any(|e| e.obs_dim() != obs_dim || e.act_dim() != act_dim) {
            return Err(Error::InvalidInput("environments disagree on dimensions".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = ActorCritic::new(obs_dim, act_dim, &config.hidden, config.init_std, &mut rng)?;
        let current_obs = envs.iter_mut().map(|e| e.reset(&mut rng)).collect::<Result<_>>()?;
        let n = envs.len();
        Ok(Self {
            adam: Adam::new(model.num_params()),
            obs_norm: RunningNorm::new(obs_dim),
            return_norm: RunningNorm::new(1),
            discounted: vec![0.0; n],
            episode_return: vec![0.0; n],
            current_obs,
            envs,
            model,
            config,
            log: Vec::new(),
            rng,
        })
    }

    /// Deployable policy with frozen observation statistics.
    pub fn policy(&self) -> PolicyNet {
        let mut norm = self.obs_norm.clone();
        norm.frozen = true;
        PolicyNet {
            model: self.model.clone(),
            norm,
        }
    }

    fn reward_scale(&self) -> f64 {
        if !self.config.normalize_rewards || self.return_norm.count < 2 {
            return 1.0;
        }
        1.0 / self.return_norm.std()[0].max(NORM_EPSILON)
    }

    fn collect(&mut self) -> Result<(Vec<Trajectory>, Vec<f64>, Vec<f64>, usize)> {
        let n_envs = self.envs.len();
        let (od, ad) = (self.model.obs_dim(), self.model.act_dim());
        let steps = self.config.hypers.steps_per_batch.max(1);
        let gamma = self.config.hypers.gamma;
        let mut trajs: Vec<Trajectory> = (0..n_envs)
            .map(|_| Trajectory {
                obs: Vec::with_capacity(steps * od),
                actions: Vec::with_capacity(steps * ad),
                log_probs: Vec::with_capacity(steps),
                values: Vec::with_capacity(steps),
                rewards: Vec::with_capacity(steps),
                ends: Vec::with_capacity(steps),
                truncated_next: Vec::new(),
            })
            .collect();
        let mut raw_rewards = Vec::with_capacity(steps * n_envs);
        let mut returns = Vec::new();
        let mut info_sum: Vec<f64> = Vec::new();
        let mut info_n = 0usize;
        for _ in 0..steps {
            let mut obs = Vec::with_capacity(n_envs * od);
            for o in &self.current_obs {
                obs.extend(self.obs_norm.observe(o));
            }
            let (actions, log_probs, values) = self.model.act(&obs, n_envs, &mut self.rng)?;
            for e in 0..n_envs {
                let action = &actions[e * ad..(e + 1) * ad];
                let result = self.envs[e].step(action, &mut self.rng)?;
                raw_rewards.push(result.reward);
                if info_sum.is_empty() {
                    info_sum = vec![0.0; result.info.len()];
                }
                for (s, v) in info_sum.iter_mut().zip(&result.info) {
                    *s += v;
                }
                info_n += 1;
                self.discounted[e] = self.discounted[e] * gamma + result.reward;
                self.return_norm.update(&[self.discounted[e]]);
                self.episode_return[e] += result.reward;
                let t = &mut trajs[e];
                t.obs.extend_from_slice(&obs[e * od..(e + 1) * od]);
                t.actions.extend_from_slice(action);
                t.log_probs.push(log_probs[e]);
                t.values.push(values[e]);
                t.rewards.push(result.reward);
                t.ends.push(result.end);
                if result.end == EpisodeEnd::Continue {
                    self.current_obs[e] = result.obs;
                } else {
                    if result.end == EpisodeEnd::Truncated {
                        t.truncated_next.push((t.ends.len() - 1, result.obs));
                    }
                    returns.push(self.episode_return[e]);
                    self.episode_return[e] = 0.0;
                    self.discounted[e] = 0.0;
                    self.current_obs[e] = self.envs[e].reset(&mut self.rng)?;
                }
            }
        }
        let info = info_sum.iter().map(|s| s / info_n.max(1) as f64).collect();
        let n_returns = returns.len();
        let mean_return = if returns.is_empty() {
            f64::NAN
        } else {
            returns.iter().sum::<f64>() / n_returns as f64
        };
        let mean_reward = raw_rewards.iter().sum::<f64>() / raw_rewards.len().max(1) as f64;
        Ok((trajs, vec![mean_reward, mean_return], info, n_returns))
    }

    fn build_batch(&self, trajs: &[Trajectory]) -> Result<Batch> {
        let (od, ad) = (self.model.obs_dim(), self.model.act_dim());
        let hy = &self.config.hypers;
        let scale = self.reward_scale();
        let mut batch = Batch {
            obs_dim: od,
            act_dim: ad,
            ..Batch::default()
        };
        for (e, t) in trajs.iter().enumerate() {
            let n = t.rewards.len();
            let mut next_values = vec![0.0; n];
            for k in 0..n.saturating_sub(1) {
                next_values[k] = t.values[k + 1];
            }
            if n > 0 {
                let last = self.obs_norm.normalize(&self.current_obs[e]);
                next_values[n - 1] = self.model.values(&last, 1)?[0];
            }
            for (k, raw) in &t.truncated_next {
                let o = self.obs_norm.normalize(raw);
                next_values[*k] = self.model.values(&o, 1)?[0];
            }
            let rewards: Vec<f64> = t.rewards.iter().map(|r| r * scale).collect();
            let (adv, ret) = gae(&rewards, &t.values, &next_values, &t.ends, hy.gamma, hy.gae_lambda)?;
            batch.obs.extend_from_slice(&t.obs);
            batch.actions.extend_from_slice(&t.actions);
            batch.log_probs.extend_from_slice(&t.log_probs);
            batch.advantages.extend(adv);
            batch.returns.extend(ret);
        }
        Ok(batch)
    }

    /// One rollout plus update. On a diverged update the parameters are
    /// rolled back to the start of the iteration and the error returned.
    pub fn iterate(&mut self) -> Result<IterationLog> {
        let (trajs, means, info, episodes) = self.collect()?;
        let mut batch = self.build_batch(&trajs)?;
        let snapshot = (self.model.clone(), self.adam.clone());
        let hypers = self.config.hypers.clone();
        let stats = match ppo_update(&mut self.model, &mut self.adam, &mut batch, &hypers, &mut self.rng) {
            Ok(s) => s,
            Err(e) => {
                (self.model, self.adam) = snapshot;
                return Err(e);
            }
        };
        let std = self.model.std();
        let entry = IterationLog {
            iteration: self.log.len(),
            mean_reward: means[0],
            mean_return: means[1],
            episodes,
            info,
            loss: stats.loss,
            mean_std: std.iter().sum::<f64>() / std.len().max(1) as f64,
        };
        self.log.push(entry.clone());
        Ok(entry)
    }

    /// Runs `iterations` iterations, calling `on_iteration` after each.
    /// Returns `Some` when training stopped early on divergence.
    pub fn run(
        &mut self,
        iterations: usize,
        mut on_iteration: impl FnMut(&IterationLog),
    ) -> Result<Option<Aborted>> {
        for _ in 0..iterations {
            match self.iterate() {
                Ok(entry) => on_iteration(&entry),
                Err(Error::TrainingDiverged(reason)) => {
                    return Ok(Some(Aborted {
                        iteration: self.log.len(),
                        reason,
                    }))
                }
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }
}

/// Which policy a checkpoint holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Locomotion,
    GaitSelection,
    Bandit,
}

pub const CHECKPOINT_FORMAT: &str = "quadgait-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON checkpoint: network dimensions, weights and observation statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: PolicyKind,
    pub iterations: usize,
    pub policy: PolicyNet,
}

impl Checkpoint {
    pub fn new(kind: PolicyKind, iterations: usize, policy: PolicyNet) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kind,
            iterations,
            policy,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let ck: Self = serde_json::from_str(&text)?;
        let source_name = path.display().to_string();
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Parse {
                source_name,
                message: format!("unsupported checkpoint {} v{}", ck.format, ck.version),
            });
        }
        let model = &ck.policy.model;
        if model.actor.params.len() != model.actor.num_params()
            || model.critic.input_dim() != model.obs_dim()
            || ck.policy.norm.dim() != model.obs_dim()
        {
            return Err(Error::Parse {
                source_name,
                message: "checkpoint dimensions are inconsistent".into(),
            });
        }
        Ok(ck)
    }
}

/// Writes the per-iteration training log as CSV.
pub fn write_training_log(
    path: impl AsRef<Path>,
    info_names: &[&str],
    log: &[IterationLog],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["iteration", "mean_return", "mean_reward", "episodes"];
    header.extend_from_slice(info_names);
    header.extend_from_slice(&["policy_loss", "value_loss", "approx_kl", "clip_fraction", "mean_std"]);
    w.write_record(&header)?;
    for e in log {
        let mut row = vec![
            e.iteration.to_string(),
            e.mean_return.to_string(),
            e.mean_reward.to_string(),
            e.episodes.to_string(),
        ];
        row.extend(e.info.iter().map(|v| v.to_string()));
        row.extend(
            [e.loss.policy, e.loss.value, e.loss.approx_kl, e.loss.clip_fraction, e.mean_std]
                .iter()
                .map(|v| v.to_string()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Trained network, its log, and how the run ended.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub policy: PolicyNet,
    pub log: Vec<IterationLog>,
    pub aborted: Option<Aborted>,
}

/// Builds a trainer over `envs` and runs `config.iterations` iterations.
pub fn train<E: Env>(
    envs: Vec<E>,
    config: TrainConfig,
    on_iteration: impl FnMut(&IterationLog),
) -> Result<TrainOutcome> {
    let iterations = config.iterations;
    let mut trainer = Trainer::new(envs, config)?;
    let aborted = trainer.run(iterations, on_iteration)?;
    Ok(TrainOutcome {
        policy: trainer.policy(),
        log: trainer.log,
        aborted,
    })
}
