//! Domain randomisation and training command schedules.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gait::{CommandU, GaitId};
use crate::runtime::RigConfig;
use crate::sim::NoiseConfig;

/// Sampling laws for one training episode. Every clamped channel is
/// `max(lo, min(center + scale · N(0, 1), hi))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizationConfig {
    pub noise: NoiseConfig,
    pub friction: ClampedNormal,
    /// Additive base-mass offset, kg.
    pub mass_offset: ClampedNormal,
    pub kp_scale: ClampedNormal,
    pub kd_scale: ClampedNormal,
    /// Standard deviation of the initial joint-angle perturbation, rad.
    pub q_init_std: f64,
    pub vx_range: (f64, f64),
    pub yaw_rate_range: (f64, f64),
    /// Continuous gait draw, rounded to the nearest id.
    pub gait_range: (f64, f64),
    pub t_acc_range: (f64, f64),
    /// Time between command changes, s.
    pub segment_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClampedNormal {
    pub center: f64,
    pub scale: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ClampedNormal {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n: f64 = rng.sample(StandardNormal);
        (self.center + self.scale * n).min(self.hi).max(self.lo)
    }
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        Self {
            noise: NoiseConfig::default(),
            friction: ClampedNormal { center: 0.6, scale: 0.5, lo: 0.4, hi: 1.0 },
            mass_offset: ClampedNormal { center: 0.0, scale: 1.0, lo: -1.0, hi: 3.0 },
            kp_scale: ClampedNormal { center: 1.0, scale: 0.05, lo: 0.9, hi: 1.1 },
            kd_scale: ClampedNormal { center: 1.0, scale: 0.05, lo: 0.9, hi: 1.1 },
            q_init_std: 0.1,
            vx_range: (0.0, 1.5),
            yaw_rate_range: (-1.0, 1.0),
            gait_range: (0.0, 6.0),
            t_acc_range: (0.0, 0.5),
            segment_seconds: 2.0,
        }
    }
}

/// One command target, reached by a linear ramp of `t_acc` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandSegment {
    pub start: f64,
    pub vx: f64,
    pub yaw_rate: f64,
    pub gait: GaitId,
    pub t_acc: f64,
}

/// Piecewise command with linear velocity ramps between targets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandSchedule {
    pub segments: Vec<CommandSegment>,
}

impl CommandSchedule {
    /// Command at time `t`. Before the first segment the robot stands.
    pub fn command_at(&self, t: f64) -> CommandU {
        let k = self.segments.partition_point(|s| s.start <= t);
        if k == 0 {
            return CommandU::default();
        }
        let seg = &self.segments[k - 1];
        let (pvx, pyaw) = if k >= 2 {
            let p = &self.segments[k - 2];
            (p.vx, p.yaw_rate)
        } else {
            (0.0, 0.0)
        };
        let frac = if seg.t_acc > 0.0 {
            ((t - seg.start) / seg.t_acc).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let lerp = |a: f64, b: f64| if frac >= 1.0 { b } else { a + frac * (b - a) };
        CommandU {
            vx: lerp(pvx, seg.vx),
            vy: 0.0,
            yaw_rate: lerp(pyaw, seg.yaw_rate),
            gait: seg.gait,
        }
    }
}

/// Everything drawn at the start of an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub friction: f64,
    pub mass_offset: f64,
    pub kp_scale: f64,
    pub kd_scale: f64,
    pub q_init_offset: [f64; 12],
    pub schedule: CommandSchedule,
}

impl EpisodeConfig {
    /// `base` with this episode's physical parameters.
    pub fn apply(&self, base: &RigConfig) -> RigConfig {
        let mut cfg = base.clone();
        cfg.terrain.friction = self.friction;
        cfg.model.base_mass += self.mass_offset;
        cfg.model.kp *= self.kp_scale;
        cfg.model.kd *= self.kd_scale;
        cfg
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws one episode's physical parameters and a command schedule covering
/// `duration` seconds.
pub fn sample_episode_config<R: Rng + ?Sized>(
    rng: &mut R,
    rcfg: &RandomizationConfig,
    duration: f64,
) -> EpisodeConfig {
    let friction = rcfg.friction.sample(rng);
    let mass_offset = rcfg.mass_offset.sample(rng);
    let kp_scale = rcfg.kp_scale.sample(rng);
    let kd_scale = rcfg.kd_scale.sample(rng);
    let q_init_offset =
        std::array::from_fn(|_| rcfg.q_init_std * rng.sample::<f64, _>(StandardNormal));
    let mut segments = Vec::new();
    let step = rcfg.segment_seconds.max(1e-3);
    let mut start = 0.0;
    while start < duration.max(step) {
        let gait = GaitId::from_action(uniform(rng, rcfg.gait_range));
        let (vx, yaw_rate) = if gait.is_stand() {
            (0.0, 0.0)
        } else {
            (uniform(rng, rcfg.vx_range), uniform(rng, rcfg.yaw_rate_range))
        };
        segments.push(CommandSegment {
            start,
            vx,
            yaw_rate,
            gait,
            t_acc: uniform(rng, rcfg.t_acc_range),
        });
        start += step;
    }
    EpisodeConfig {
        friction,
        mass_offset,
        kp_scale,
        kd_scale,
        q_init_offset,
        schedule: CommandSchedule { segments },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_ramps_linearly() {
        let seg = |start, vx, t_acc| CommandSegment {
            start,
            vx,
            yaw_rate: 0.0,
            gait: GaitId::Trot,
            t_acc,
        };
        let s = CommandSchedule {
            segments: vec![seg(0.0, 1.0, 0.5), seg(2.0, 0.2, 0.4)],
        };
        assert!((s.command_at(0.25).vx - 0.5).abs() < 1e-12);
        assert_eq!(s.command_at(1.0).vx, 1.0);
        assert!((s.command_at(2.2).vx - 0.6).abs() < 1e-12);
        assert_eq!(s.command_at(3.0).vx, 0.2);
        assert_eq!(s.command_at(-1.0), CommandU::default());
    }

    #[test]
    fn episode_draws_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rcfg = RandomizationConfig::default();
        for _ in 0..200 {
            let ep = sample_episode_config(&mut rng, &rcfg, 10.0);
            assert!((0.4..=1.0).contains(&ep.friction));
            assert!((-1.0..=3.0).contains(&ep.mass_offset));
            assert_eq!(ep.schedule.segments.len(), 5);
            for s in &ep.schedule.segments {
                assert!((0.0..1.5).contains(&s.vx));
                assert!(s.gait.index() <= 6);
                assert!((0.0..0.5).contains(&s.t_acc));
            }
        }
    }
}
