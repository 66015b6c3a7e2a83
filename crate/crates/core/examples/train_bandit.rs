//! Trains PPO on a one-step bandit whose best action is known.

use quadgait::learning::{train, PpoHypers, ToyBandit, TrainConfig};

fn main() -> quadgait::Result<()> {
    let target = 0.7;
    let cfg = TrainConfig {
        hypers: PpoHypers { steps_per_batch: 64, ..PpoHypers::desk() },
        iterations: 150,
        hidden: vec![8],
        ..TrainConfig::default()
    };
    let out = train(vec![ToyBandit { target }; 4], cfg, |l| {
        if l.iteration % 25 == 0 {
            println!("iter {:3}  mean reward {:8.4}  std {:.3}", l.iteration, l.mean_reward, l.mean_std);
        }
    })?;
    let a = out.policy.mean_action(&[1.0])?[0];
    println!("learned action {a:.3}, target {target}");
    Ok(())
}
