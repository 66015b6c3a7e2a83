//! Scenario files: terrain, controller, selector and a command script.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{CommandU, GaitId};
use crate::runtime::RigConfig;
use crate::selector::SelectorConfig;

/// One timed command target of a piecewise script.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    #[serde(default)]
    pub yaw_rate: f64,
    pub gait: GaitId,
    /// Linear ramp from the previous velocity, s.
    #[serde(default)]
    pub ramp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandScript {
    /// Held targets with optional linear ramps.
    Piecewise { points: Vec<Waypoint> },
    /// Constant speed while the gait cycles through a list.
    GaitCycle {
        vx: f64,
        gaits: Vec<GaitId>,
        switch_every: f64,
    },
    /// `v_x = mean + amplitude · sin(2πt / period)`, gaits cycling as above.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        period: f64,
        gaits: Vec<GaitId>,
        switch_every: f64,
    },
    /// Zero command for `hold` seconds, then a linear speed ramp.
    Sweep {
        v_start: f64,
        v_end: f64,
        hold: f64,
        ramp_seconds: f64,
        /// Gait used when the selector is fixed.
        #[serde(default = "default_sweep_gait")]
        gait: GaitId,
    },
}

fn default_sweep_gait() -> GaitId {
    GaitId::Trot
}

fn cycle(gaits: &[GaitId], switch_every: f64, t: f64) -> GaitId {
    let k = (t / switch_every).floor().max(0.0) as usize;
    gaits[k % gaits.len()]
}

impl CommandScript {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        match self {
            CommandScript::Piecewise { points } => {
                if points.is_empty() {
                    return bad("piecewise script has no points");
                }
                if points.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return bad("waypoint times must be strictly increasing");
                }
                if points.iter().any(|p| p.ramp < 0.0 || !p.t.is_finite()) {
                    return bad("waypoint times and ramps must be finite and non-negative");
                }
            }
            CommandScript::GaitCycle {
                gaits, switch_every, ..
            }
            | CommandScript::Sinusoid {
                gaits, switch_every, ..
            } => {
                if gaits.is_empty() || !(*switch_every > 0.0) {
                    return bad("gait list must be non-empty with a positive switch interval");
                }
                if let CommandScript::Sinusoid { period, .. } = self {
                    if !(*period > 0.0) {
                        return bad("sinusoid period must be positive");
                    }
                }
            }
            CommandScript::Sweep {
                hold, ramp_seconds, ..
            } => {
                if *hold < 0.0 || !(*ramp_seconds > 0.0) {
                    return bad("sweep needs hold >= 0 and a positive ramp");
                }
            }
        }
        Ok(())
    }

    /// Command at time `t`. The gait field is the scripted gait.
    pub fn command_at(&self, t: f64) -> CommandU {
        match self {
            CommandScript::Piecewise { points } => {
                let k = points.partition_point(|p| p.t <= t);
                if k == 0 {
                    return CommandU::default();
                }
                let p = &points[k - 1];
                let (pvx, pvy, pyaw) = if k >= 2 {
                    let q = &points[k - 2];
                    (q.vx, q.vy, q.yaw_rate)
                } else {
                    (0.0, 0.0, 0.0)
                };
                let frac = if p.ramp > 0.0 {
                    ((t - p.t) / p.ramp).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                let lerp = |a: f64, b: f64| if frac >= 1.0 { b } else { a + frac * (b - a) };
                CommandU {
                    vx: lerp(pvx, p.vx),
                    vy: lerp(pvy, p.vy),
                    yaw_rate: lerp(pyaw, p.yaw_rate),
                    gait: p.gait,
                }
            }
            CommandScript::GaitCycle {
                vx,
                gaits,
                switch_every,
            } => {
                let gait = cycle(gaits, *switch_every, t);
                CommandU {
                    vx: if gait.is_stand() { 0.0 } else { *vx },
                    gait,
                    ..CommandU::default()
                }
            }
            CommandScript::Sinusoid {
                mean,
                amplitude,
                period,
                gaits,
                switch_every,
            } => CommandU {
                vx: mean + amplitude * (std::f64::consts::TAU * t / period).sin(),
                gait: cycle(gaits, *switch_every, t),
                ..CommandU::default()
            },
            CommandScript::Sweep {
                v_start,
                v_end,
                hold,
                ramp_seconds,
                gait,
            } => {
                if t < *hold {
                    return CommandU::default();
                }
                let frac = ((t - hold) / ramp_seconds).clamp(0.0, 1.0);
                CommandU {
                    vx: v_start + frac * (v_end - v_start),
                    gait: *gait,
                    ..CommandU::default()
                }
            }
        }
    }

    /// Scripted length of the command, when the script defines one.
    pub fn natural_duration(&self) -> Option<f64> {
        match self {
            CommandScript::Sweep {
                hold, ramp_seconds, ..
            } => Some(hold + ramp_seconds),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    Scripted,
    Policy { checkpoint: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorSpec {
    /// Use the gait written in the command script.
    Fixed,
    Oracle(SelectorConfig),
    Policy { checkpoint: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrainSpec {
    #[serde(default)]
    pub level: u8,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    #[serde(default = "default_terrain")]
    pub terrain: TerrainSpec,
    #[serde(default = "default_controller")]
    pub controller: ControllerSpec,
    #[serde(default = "default_selector")]
    pub selector: SelectorSpec,
    pub command: CommandScript,
    /// Output directory relative to the run's base directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Overrides of the robot, terrain and estimator settings.
    #[serde(default)]
    pub rig: Option<RigConfig>,
}

fn default_terrain() -> TerrainSpec {
    TerrainSpec { level: 0, seed: 0 }
}

fn default_controller() -> ControllerSpec {
    ControllerSpec::Scripted
}

fn default_selector() -> SelectorSpec {
    SelectorSpec::Fixed
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidInput(format!(
                "scenario duration must be positive, got {}",
                self.duration
            )));
        }
        self.command.validate()?;
        for path in self.checkpoints() {
            if !path.exists() {
                return Err(Error::InvalidInput(format!(
                    "checkpoint {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn checkpoints(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        if let ControllerSpec::Policy { checkpoint } = &self.controller {
            out.push(checkpoint.as_path());
        }
        if let SelectorSpec::Policy { checkpoint } = &self.selector {
            out.push(checkpoint.as_path());
        }
        out
    }

    /// Parses TOML text; errors carry the line and column of the problem.
    pub fn from_toml_str(text: &str, source_name: &str) -> Result<Self> {
        let parsed: Self = toml::from_str(text).map_err(|e| {
            let location = e
                .span()
                .map(|span| {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    format!("line {line}, column {col}: ")
                })
                .unwrap_or_default();
            Error::Parse {
                source_name: source_name.to_string(),
                message: format!("{location}{}", e.message()),
            }
        })?;
        Ok(parsed)
    }

    /// Loads and validates a scenario. Relative checkpoint paths resolve
    /// against the scenario file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_toml_str(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ControllerSpec::Policy { checkpoint } = &mut s.controller {
            resolve(checkpoint);
        }
        if let SelectorSpec::Policy { checkpoint } = &mut s.selector {
            resolve(checkpoint);
        }
        s.validate()?;
        Ok(s)
    }

    /// Velocity sweep from rest on flat ground under the oracle selector.
    pub fn oracle_sweep(v_end: f64, ramp_seconds: f64) -> Self {
        Self {
            name: "oracle_sweep".into(),
            seed: 0,
            duration: 2.0 + ramp_seconds,
            terrain: default_terrain(),
            controller: ControllerSpec::Scripted,
            selector: SelectorSpec::Oracle(SelectorConfig::default()),
            command: CommandScript::Sweep {
                v_start: 0.0,
                v_end,
                hold: 2.0,
                ramp_seconds,
                gait: GaitId::Trot,
            },
            output: None,
            rig: None,
        }
    }
}
