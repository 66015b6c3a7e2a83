//! Policy learning: networks, PPO, environments and domain randomisation.

pub mod env;
pub mod mlp;
pub mod normalize;
pub mod obs;
pub mod policy;
pub mod ppo;
pub mod randomize;
pub mod train;

pub use env::{Env, GaitEnv, LocoEnv, StepResult, ToyBandit};
pub use mlp::Mlp;
pub use normalize::RunningNorm;
pub use policy::{LocoPolicy, PolicyNet};
pub use ppo::{ActorCritic, PpoHypers};
pub use randomize::{RandomizationConfig, CommandSchedule, EpisodeConfig};
pub use train::{train, Checkpoint, IterationLog, PolicyKind, TrainConfig, TrainOutcome, Trainer};
