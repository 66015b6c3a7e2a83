//! Gaussian actor-critic, advantage estimation and the clipped-surrogate
//! policy update.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoHypers {
    pub n_envs: usize,
    pub clip: f64,
    /// Environment steps per env per iteration.
    pub steps_per_batch: usize,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub minibatches: usize,
    pub min_std: f64,
    pub gamma: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient norm cap; zero disables clipping.
    pub max_grad_norm: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for PpoHypers {
    fn default() -> Self {
        Self {
            n_envs: 240,
            clip: 0.2,
            steps_per_batch: 400,
            gae_lambda: 0.95,
            epochs: 4,
            learning_rate: 5e-4,
            minibatches: 4,
            min_std: 0.2,
            gamma: 0.99,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl PpoHypers {
    /// Defaults with a laptop-sized number of environments.
    pub fn desk() -> Self {
        Self {
            n_envs: 8,
            ..Self::default()
        }
    }
}

/// Separate actor and critic networks plus a state-independent log-std.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub log_std: Vec<f64>,
}

/// Log-density of `action` under a diagonal Gaussian.
pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

impl ActorCritic {
    /// Actor and critic with the given hidden layer widths.
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        init_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(init_std > 0.0) {
            return Err(Error::InvalidInput(format!("initial std must be positive, got {init_std}")));
        }
        let sizes = |out: usize| [&[obs_dim][..], hidden, &[out]].concat();
        Ok(Self {
            actor: Mlp::new(&sizes(act_dim), 0.01, rng)?,
            critic: Mlp::new(&sizes(1), 1.0, rng)?,
            log_std: vec![init_std.ln(); act_dim],
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    /// Actor parameters, then log-std, then critic parameters.
    pub fn num_params(&self) -> usize {
        self.actor.num_params() + self.log_std.len() + self.critic.num_params()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        [&self.actor.params[..], &self.log_std, &self.critic.params].concat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Contract(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let (a, rest) = flat.split_at(self.actor.num_params());
        let (s, c) = rest.split_at(self.log_std.len());
        self.actor.params.copy_from_slice(a);
        self.log_std.copy_from_slice(s);
        self.critic.params.copy_from_slice(c);
        Ok(())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.actor
            .params
            .iter_mut()
            .chain(self.log_std.iter_mut())
            .chain(self.critic.params.iter_mut())
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|v| v.exp()).collect()
    }

    /// Raises every standard deviation to at least `min_std`.
    pub fn clamp_std(&mut self, min_std: f64) {
        let floor = min_std.ln();
        self.log_std.iter_mut().for_each(|v| *v = v.max(floor));
    }

    /// Action means for a batch of (normalised) observations.
    pub fn mean_actions(&self, obs: &[f64], batch: usize) -> Result<Vec<f64>> {
        Ok(self.actor.forward(obs, batch)?.layers.pop().unwrap_or_default())
    }

    pub fn values(&self, obs: &[f64], batch: usize) -> Result<Vec<f64>> {
        Ok(self.critic.forward(obs, batch)?.layers.pop().unwrap_or_default())
    }

    /// Samples actions for a batch: `(actions, log-probabilities, values)`.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        batch: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mean = self.mean_actions(obs, batch)?;
        let values = self.values(obs, batch)?;
        let std = self.std();
        let n = self.act_dim();
        let actions: Vec<f64> = mean
            .iter()
            .enumerate()
            .map(|(k, m)| m + std[k % n] * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let log_probs = (0..batch)
            .map(|r| {
                let s = r * n..(r + 1) * n;
                gaussian_log_prob(&actions[s.clone()], &mean[s], &self.log_std)
            })
            .collect();
        Ok((actions, log_probs, values))
    }
}

/// How an environment step ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpisodeEnd {
    Continue,
    /// Episode failed; no value beyond this step.
    Terminal,
    /// Episode cut by the time limit; the successor value is bootstrapped.
    Truncated,
}

/// Generalised advantage estimation over one environment's trajectory.
///
/// `next_values[t]` is the critic's value of the state reached by step `t`;
/// it is ignored after a terminal step. Returns `(advantages, returns)`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    ends: &[EpisodeEnd],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || next_values.len() != n || ends.len() != n {
        return Err(Error::Contract("gae inputs must have equal lengths".into()));
    }
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let (bootstrap, carry) = match ends[t] {
            EpisodeEnd::Continue => (next_values[t], 1.0),
            EpisodeEnd::Truncated => (next_values[t], 0.0),
            EpisodeEnd::Terminal => (0.0, 0.0),
        };
        let delta = rewards[t] + gamma * bootstrap - values[t];
        running = delta + gamma * lambda * carry * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// On-policy samples gathered with one parameter version.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    /// Rescales advantages to zero mean and unit variance.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len();
        if n < 2 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n as f64;
        let var = self.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt().max(1e-8);
        self.advantages.iter_mut().for_each(|a| *a = (*a - mean) / std);
    }
}

/// Loss terms of one minibatch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoLoss {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    /// Share of samples whose ratio left the clip range.
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Clipped-surrogate loss over the samples `idx` of `batch` and its
/// gradient in [`ActorCritic::flat_params`] layout.
pub fn loss_and_grad(
    ac: &ActorCritic,
    batch: &Batch,
    idx: &[usize],
    hypers: &PpoHypers,
) -> Result<(PpoLoss, Vec<f64>)> {
    let m = idx.len();
    let (od, ad) = (batch.obs_dim, batch.act_dim);
    if m == 0 || od != ac.obs_dim() || ad != ac.act_dim() {
        return Err(Error::Contract("minibatch does not match the network".into()));
    }
    let mut obs = Vec::with_capacity(m * od);
    for &i in idx {
        obs.extend_from_slice(&batch.obs[i * od..(i + 1) * od]);
    }
    let actor_cache = ac.actor.forward(&obs, m)?;
    let critic_cache = ac.critic.forward(&obs, m)?;
    let mean = actor_cache.output();
    let value = critic_cache.output();
    let inv_var: Vec<f64> = ac.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();

    let mut loss = PpoLoss::default();
    let mut grad_mean = vec![0.0; m * ad];
    let mut grad_log_std = vec![0.0; ad];
    let mut grad_value = vec![0.0; m];
    let scale = 1.0 / m as f64;
    for (r, &i) in idx.iter().enumerate() {
        let action = &batch.actions[i * ad..(i + 1) * ad];
        let mu = &mean[r * ad..(r + 1) * ad];
        let log_prob = gaussian_log_prob(action, mu, &ac.log_std);
        let log_ratio = log_prob - batch.log_probs[i];
        let ratio = log_ratio.exp();
        let adv = batch.advantages[i];
        let clipped = ratio.clamp(1.0 - hypers.clip, 1.0 + hypers.clip);
        let surrogate = (ratio * adv).min(clipped * adv);
        loss.policy -= surrogate * scale;
        loss.approx_kl += ((ratio - 1.0) - log_ratio) * scale;
        if (ratio - 1.0).abs() > hypers.clip {
            loss.clip_fraction += scale;
        }
        // the unclipped branch is active unless the ratio sits on the plateau
        let on_plateau = (adv > 0.0 && ratio > 1.0 + hypers.clip)
            || (adv < 0.0 && ratio < 1.0 - hypers.clip);
        if !on_plateau {
            let d_log_prob = -ratio * adv * scale;
            for j in 0..ad {
                let diff = action[j] - mu[j];
                grad_mean[r * ad + j] += d_log_prob * diff * inv_var[j];
                grad_log_std[j] += d_log_prob * (diff * diff * inv_var[j] - 1.0);
            }
        }
        let err = value[r] - batch.returns[i];
        loss.value += err * err * scale;
        grad_value[r] = 2.0 * hypers.value_coef * err * scale;
    }
    loss.entropy = ac.log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum();
    for g in &mut grad_log_std {
        *g -= hypers.entropy_coef;
    }
    loss.total = loss.policy + hypers.value_coef * loss.value - hypers.entropy_coef * loss.entropy;
    if !loss.total.is_finite() {
        return Err(Error::TrainingDiverged(format!("non-finite loss {loss:?}")));
    }

    let mut grad = vec![0.0; ac.num_params()];
    let na = ac.actor.num_params();
    ac.actor.backward(&actor_cache, &grad_mean, &mut grad[..na]);
    grad[na..na + ad].copy_from_slice(&grad_log_std);
    ac.critic.backward(&critic_cache, &grad_value, &mut grad[na + ad..]);
    Ok((loss, grad))
}

/// Adam moments for every parameter of an [`ActorCritic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, ac: &mut ActorCritic, grad: &[f64], hypers: &PpoHypers) {
        self.t += 1;
        let (b1, b2) = (hypers.adam_beta1, hypers.adam_beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for (((p, g), m), v) in ac.params_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= hypers.learning_rate * (*m / c1) / ((*v / c2).sqrt() + hypers.adam_epsilon);
        }
    }
}

/// Means over all minibatch updates of one iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub loss: PpoLoss,
    pub grad_norm: f64,
    pub updates: usize,
}

/// Runs `epochs × minibatches` clipped-surrogate steps on `batch`.
pub fn ppo_update<R: Rng + ?Sized>(
    ac: &mut ActorCritic,
    adam: &mut Adam,
    batch: &mut Batch,
    hypers: &PpoHypers,
    rng: &mut R,
) -> Result<PpoStats> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    batch.normalize_advantages();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let chunk = batch.len().div_ceil(hypers.minibatches.max(1));
    let mut stats = PpoStats::default();
    for _ in 0..hypers.epochs {
        order.shuffle(rng);
        for idx in order.chunks(chunk) {
            let (loss, mut grad) = loss_and_grad(ac, batch, idx, hypers)?;
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::TrainingDiverged("non-finite gradient".into()));
            }
            if hypers.max_grad_norm > 0.0 && norm > hypers.max_grad_norm {
                let s = hypers.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            adam.step(ac, &grad, hypers);
            ac.clamp_std(hypers.min_std);
            stats.updates += 1;
            let k = stats.updates as f64;
            let l = &mut stats.loss;
            l.policy += (loss.policy - l.policy) / k;
            l.value += (loss.value - l.value) / k;
            l.entropy += (loss.entropy - l.entropy) / k;
            l.total += (loss.total - l.total) / k;
            l.clip_fraction += (loss.clip_fraction - l.clip_fraction) / k;
            l.approx_kl += (loss.approx_kl - l.approx_kl) / k;
            stats.grad_norm += (norm - stats.grad_norm) / k;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_step_advantage_without_discount() {
        let r = [1.0, -2.0, 0.5];
        let v = [0.2, 0.4, -0.1];
        let (adv, ret) = gae(&r, &v, &[9.0; 3], &[EpisodeEnd::Continue; 3], 0.0, 0.95).unwrap();
        for t in 0..3 {
            assert_eq!(adv[t], r[t] - v[t]);
            assert_eq!(ret[t], r[t]);
        }
    }

    #[test]
    fn undiscounted_advantage_is_suffix_sum() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let ends = [
            EpisodeEnd::Continue,
            EpisodeEnd::Terminal,
            EpisodeEnd::Continue,
            EpisodeEnd::Terminal,
        ];
        let (adv, _) = gae(&r, &[0.0; 4], &[0.0; 4], &ends, 1.0, 1.0).unwrap();
        assert_eq!(adv, vec![3.0, 2.0, 7.0, 4.0]);
    }

    #[test]
    fn terminal_does_not_bootstrap_but_truncation_does() {
        let (adv, _) = gae(&[1.0], &[0.0], &[5.0], &[EpisodeEnd::Terminal], 0.9, 0.95).unwrap();
        assert_eq!(adv[0], 1.0);
        let (adv, _) = gae(&[1.0], &[0.0], &[5.0], &[EpisodeEnd::Truncated], 0.9, 0.95).unwrap();
        assert!((adv[0] - 5.5).abs() < 1e-12);
    }

    #[test]
    fn unchanged_params_give_unit_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ac = ActorCritic::new(3, 2, &[8], 0.5, &mut rng).unwrap();
        let obs: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let (actions, log_probs, _) = ac.act(&obs, 4, &mut rng).unwrap();
        let batch = Batch {
            obs_dim: 3,
            act_dim: 2,
            obs,
            actions,
            log_probs,
            advantages: vec![1.0, -1.0, 0.5, 2.0],
            returns: vec![0.0; 4],
        };
        let (loss, _) = loss_and_grad(&ac, &batch, &[0, 1, 2, 3], &PpoHypers::default()).unwrap();
        assert_eq!(loss.clip_fraction, 0.0);
        assert!(loss.approx_kl.abs() < 1e-15);
        // ratio one: the surrogate is minus the mean advantage
        assert!((loss.policy + 0.625).abs() < 1e-12);
    }

    #[test]
    fn clipped_sample_has_no_policy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ac = ActorCritic::new(2, 1, &[4], 0.5, &mut rng).unwrap();
        let obs = vec![0.3, -0.6];
        let mean = ac.mean_actions(&obs, 1).unwrap();
        let action = vec![mean[0] + 0.2];
        let lp = gaussian_log_prob(&action, &mean, &ac.log_std);
        // old policy much less likely: ratio far above 1 + clip
        let batch = Batch {
            obs_dim: 2,
            act_dim: 1,
            obs,
            actions: action,
            log_probs: vec![lp - 1.0],
            advantages: vec![1.0],
            returns: vec![ac.values(&[0.3, -0.6], 1).unwrap()[0]],
        };
        let (loss, grad) = loss_and_grad(&ac, &batch, &[0], &PpoHypers::default()).unwrap();
        assert_eq!(loss.clip_fraction, 1.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }
}
