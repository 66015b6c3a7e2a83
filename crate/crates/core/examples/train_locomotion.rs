//! Short locomotion training run on randomised episodes. Pass an iteration
//! count to train longer; the checkpoint goes to the system temp directory.

use quadgait::learning::train::write_training_log;
use quadgait::learning::{train, Checkpoint, Env, LocoEnv, PolicyKind, RandomizationConfig, TrainConfig};
use quadgait::runtime::RigConfig;

fn main() -> quadgait::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let envs: Vec<LocoEnv> = (0..4)
        .map(|_| LocoEnv::new(RigConfig::default(), RandomizationConfig::default(), 4.0))
        .collect();
    let names = envs[0].info_names();
    let cfg = TrainConfig { iterations, ..TrainConfig::default() };
    let out = train(envs, cfg, |l| {
        println!("iter {:4}  reward {:7.4}  episodes {:3}  std {:.3}", l.iteration, l.mean_reward, l.episodes, l.mean_std);
    })?;
    if let Some(a) = &out.aborted {
        eprintln!("aborted: {a:?}");
        std::process::exit(1);
    }
    let dir = std::env::temp_dir();
    Checkpoint::new(PolicyKind::Locomotion, iterations, out.policy).save(dir.join("loco.json"))?;
    write_training_log(dir.join("loco_log.csv"), names, &out.log)?;
    println!("checkpoint and log written to {}", dir.display());
    Ok(())
}
