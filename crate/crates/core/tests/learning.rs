use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use quadgait::control::Controller;
use quadgait::learning::mlp::Mlp;
use quadgait::learning::ppo::{gae, gaussian_log_prob, loss_and_grad, Batch, EpisodeEnd};
use quadgait::learning::randomize::sample_episode_config;
use quadgait::learning::{
    train, ActorCritic, Checkpoint, GaitEnv, LocoEnv, PolicyKind, PpoHypers, RandomizationConfig,
    RunningNorm, ToyBandit, TrainConfig,
};
use quadgait::runtime::RigConfig;

fn small_config(iterations: usize) -> TrainConfig {
    TrainConfig {
        hypers: PpoHypers { steps_per_batch: 32, ..PpoHypers::desk() },
        iterations,
        seed: 7,
        hidden: vec![16, 16],
        ..TrainConfig::default()
    }
}

#[test]
fn normalizer_examples() {
    let mut n = RunningNorm::new(1);
    for _ in 0..100 {
        assert_eq!(n.observe(&[3.0]), vec![0.0]);
    }
    let mut n = RunningNorm::new(1);
    let dist = Normal::new(5.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let out: Vec<f64> = (0..100_000).map(|_| n.observe(&[dist.sample(&mut rng)])[0]).collect();
    let tail = &out[1000..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let std = (tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((0.95..=1.05).contains(&std), "{std}");
}

#[test]
fn gae_examples() {
    let r = [1.0, 2.0, 3.0];
    let v = [0.5, 0.5, 0.5];
    let cont = [EpisodeEnd::Continue; 3];
    let (adv, _) = gae(&r, &v, &[0.7; 3], &cont, 0.0, 0.95).unwrap();
    for t in 0..3 {
        assert!((adv[t] - (r[t] - v[t])).abs() < 1e-12);
    }
    let ends = [EpisodeEnd::Continue, EpisodeEnd::Continue, EpisodeEnd::Terminal];
    let (adv, ret) = gae(&r, &[0.0; 3], &[0.0, 0.0, 9.0], &ends, 1.0, 1.0).unwrap();
    assert_eq!(adv, vec![6.0, 5.0, 3.0]);
    assert_eq!(ret, adv);
    let truncated = [EpisodeEnd::Continue, EpisodeEnd::Continue, EpisodeEnd::Truncated];
    let (adv, _) = gae(&r, &[0.0; 3], &[0.0, 0.0, 9.0], &truncated, 1.0, 1.0).unwrap();
    assert_eq!(adv[2], 12.0);
    assert!(gae(&r, &v, &[0.0; 2], &cont, 0.9, 0.9).is_err());
}

#[test]
fn zero_network_outputs_zero() {
    let net = Mlp::zeros(&[4, 8, 2]).unwrap();
    assert_eq!(net.predict(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0, 0.0]);
}

fn toy_model() -> (ActorCritic, Batch, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ac = ActorCritic {
        actor: Mlp::new(&[1, 3, 1], 1.0, &mut rng).unwrap(),
        critic: Mlp::new(&[1, 3, 1], 1.0, &mut rng).unwrap(),
        log_std: vec![-0.5],
    };
    let obs = vec![-1.0, -0.3, 0.2, 0.9];
    let means = ac.mean_actions(&obs, 4).unwrap();
    let actions: Vec<f64> = means.iter().map(|m| m + 0.3).collect();
    let log_probs = (0..4)
        .map(|i| gaussian_log_prob(&actions[i..i + 1], &means[i..i + 1], &ac.log_std))
        .collect();
    let batch = Batch {
        obs_dim: 1,
        act_dim: 1,
        obs,
        actions,
        log_probs,
        advantages: vec![1.0, -0.5, 0.7, 2.0],
        returns: vec![0.1, 0.2, 0.3, 0.4],
    };
    (ac, batch, (0..4).collect())
}

#[test]
fn unchanged_policy_has_unit_ratio() {
    let (ac, batch, idx) = toy_model();
    let (loss, _) = loss_and_grad(&ac, &batch, &idx, &PpoHypers::desk()).unwrap();
    assert_eq!(loss.clip_fraction, 0.0);
    assert!(loss.approx_kl.abs() < 1e-12);
}

#[test]
fn clipped_samples_carry_no_policy_gradient() {
    let (ac, mut batch, _) = toy_model();
    // every sample far past 1 + clip with positive advantage
    for (lp, a) in batch.log_probs.iter_mut().zip(batch.advantages.iter_mut()) {
        *lp -= 1.0;
        *a = a.abs() + 0.1;
    }
    let hypers = PpoHypers { value_coef: 0.0, entropy_coef: 0.0, ..PpoHypers::desk() };
    let (loss, grad) = loss_and_grad(&ac, &batch, &[0, 1, 2, 3], &hypers).unwrap();
    assert_eq!(loss.clip_fraction, 1.0);
    assert!(grad.iter().all(|g| *g == 0.0));
}

#[test]
fn smoke_run_logs_every_iteration() {
    let envs: Vec<LocoEnv> = (0..2)
        .map(|_| LocoEnv::new(RigConfig::default(), RandomizationConfig::default(), 1.0))
        .collect();
    let mut seen = Vec::new();
    let out = train(envs, small_config(10), |l| seen.push(l.iteration)).unwrap();
    assert_eq!(seen, (0..10).collect::<Vec<_>>());
    assert_eq!(out.log.len(), 10);
    assert!(out.aborted.is_none());
    for l in &out.log {
        assert!(l.mean_std >= 0.2 - 1e-12);
    }
}

#[test]
fn gait_env_smoke_run() {
    let envs: Vec<GaitEnv> = (0..2)
        .map(|_| GaitEnv::new(RigConfig::default(), RandomizationConfig::default(), 0.5, Controller::scripted()))
        .collect();
    let out = train(envs, small_config(2), |_| {}).unwrap();
    assert_eq!(out.log.len(), 2);
    let g = out.policy.mean_action(&vec![0.0; out.policy.norm.dim()]).unwrap();
    assert_eq!(g.len(), 1);
}

#[test]
fn training_is_deterministic() {
    let run = || train(vec![ToyBandit { target: 0.3 }; 2], small_config(5), |_| {}).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log, b.log);
    assert_eq!(a.policy, b.policy);
}

#[test]
fn checkpoint_round_trip() {
    let out = train(vec![ToyBandit { target: 0.3 }; 2], small_config(3), |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bandit.json");
    Checkpoint::new(PolicyKind::Bandit, 3, out.policy.clone()).save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.policy, out.policy);
    assert_eq!(back.kind, PolicyKind::Bandit);
    assert_eq!(back.policy.mean_action(&[1.0]).unwrap(), out.policy.mean_action(&[1.0]).unwrap());

    std::fs::write(&path, "{\"format\": \"other\"}").unwrap();
    assert!(Checkpoint::load(&path).is_err());
}

#[test]
fn randomization_examples() {
    let cfg = RandomizationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut t_acc = 0.0;
    let n = 100_000;
    for _ in 0..n {
        let e = sample_episode_config(&mut rng, &cfg, cfg.segment_seconds);
        assert!((0.4..=1.0).contains(&e.friction));
        assert!((0.9..=1.1).contains(&e.kp_scale));
        let s = e.schedule.segments[0];
        assert!((0.0..=0.5).contains(&s.t_acc));
        t_acc += s.t_acc;
    }
    assert!((t_acc / n as f64 - 0.25).abs() < 0.01);
}

proptest! {
    #[test]
    fn schedules_cover_the_episode(seed in any::<u64>(), duration in 0.5..20.0f64) {
        let cfg = RandomizationConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = sample_episode_config(&mut rng, &cfg, duration);
        let segs = &e.schedule.segments;
        prop_assert!(!segs.is_empty());
        prop_assert_eq!(segs[0].start, 0.0);
        prop_assert!(segs.windows(2).all(|w| w[1].start > w[0].start));
        prop_assert!(segs.last().unwrap().start < duration);
        for s in segs {
            prop_assert!((-1.0..=1.0).contains(&s.yaw_rate));
            prop_assert!(s.gait.index() <= 6);
        }
    }

    #[test]
    fn std_floor_holds(log_std in -10.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ac = ActorCritic {
            actor: Mlp::new(&[1, 1], 1.0, &mut rng).unwrap(),
            critic: Mlp::new(&[1, 1], 1.0, &mut rng).unwrap(),
            log_std: vec![log_std],
        };
        ac.clamp_std(0.2);
        prop_assert!(ac.std()[0] >= 0.2 - 1e-12);
    }
}
