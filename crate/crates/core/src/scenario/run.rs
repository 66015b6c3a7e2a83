//! Running a scenario and writing its artefacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::script::{CommandScript, ControllerSpec, Scenario, SelectorSpec};
use crate::control::Controller;
use crate::error::{Error, Result};
use crate::gait::{CommandU, GaitId, NUM_LEGS};
use crate::learning::train::{Checkpoint, PolicyKind};
use crate::learning::{LocoPolicy, PolicyNet};
use crate::metrics::{stride_cv, SpeedBins};
use crate::rewards::reward_gait_selection;
use crate::runtime::{Rig, RigConfig};
use crate::selector::{write_selection_trace, SelectionRecord, Selector};
use crate::SELECT_RATE_HZ;

/// First line of every time-series CSV.
pub const TIMESERIES_SCHEMA: &str = "# quadgait-timeseries v1";
pub const SUMMARY_FORMAT: &str = "quadgait-summary";
pub const SUMMARY_VERSION: u32 = 1;
/// Width of the speed bins of sweep summaries, m/s.
pub const SPEED_BIN_WIDTH: f64 = 0.1;

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub terrain_level: Option<u8>,
    /// Base rig settings, used when the scenario has none of its own.
    pub rig: Option<RigConfig>,
    /// Skip writing files.
    pub dry_run: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub cot: Option<f64>,
    pub tau_pct: f64,
    pub c_avg_err: f64,
    pub w_ext: f64,
    /// Planar velocity tracking error, m/s.
    pub velocity_error: f64,
    pub reward_locomotion: f64,
    pub reward_selection: f64,
    pub stride_cv: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitMeans {
    pub gait: GaitId,
    pub samples: u64,
    pub c_avg_err: f64,
    pub cot: Option<f64>,
    pub velocity_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub speed: f64,
    /// Selection counts by gait id.
    pub counts: [u64; 8],
    pub dominant: Option<GaitId>,
    pub transition_phase: Option<bool>,
    pub run_fraction: Option<f64>,
    /// Mean CoT by gait id: from the oracle's rollouts when the oracle
    /// selects, otherwise from the executed gait.
    pub cot: [Option<f64>; 8],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub seed: u64,
    pub terrain_level: u8,
    pub terrain_seed: u64,
    pub duration: f64,
    /// Simulated time actually reached, s.
    pub simulated: f64,
    pub failed: bool,
    pub failure: Option<String>,
    pub means: MetricMeans,
    pub per_gait: Vec<GaitMeans>,
    pub gait_switches: u64,
    /// Oracle decisions where every candidate failed.
    pub emergencies: u64,
    pub speed_bins: Option<Vec<BinSummary>>,
}

impl RunSummary {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if s.format != SUMMARY_FORMAT || s.version != SUMMARY_VERSION {
            return Err(Error::Parse {
                source_name: path.display().to_string(),
                message: format!("unsupported summary {} v{}", s.format, s.version),
            });
        }
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    /// Directory holding `timeseries.csv`, `summary.json` and, with a
    /// selector, `selection.csv`. `None` on a dry run.
    pub dir: Option<PathBuf>,
    pub selections: Vec<SelectionRecord>,
}

fn load_policy(path: &Path, expected: PolicyKind) -> Result<PolicyNet> {
    let ck = Checkpoint::load(path)?;
    if ck.kind != expected {
        return Err(Error::InvalidInput(format!(
            "{} holds a {:?} policy, expected {:?}",
            path.display(),
            ck.kind,
            expected
        )));
    }
    Ok(ck.policy)
}

fn timeseries_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "time", "cmd_vx", "cmd_vy", "cmd_yaw_rate", "gait", "active_gait", "kappa", "x", "y", "z",
        "vx", "vy", "yaw_rate", "roll", "pitch",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for leg in 0..NUM_LEGS {
        h.push(format!("c_ref_{leg}"));
    }
    for leg in 0..NUM_LEGS {
        h.push(format!("contact_{leg}"));
    }
    for leg in 0..NUM_LEGS {
        for axis in ["x", "y", "z"] {
            h.push(format!("p_ref_{leg}_{axis}"));
        }
    }
    h.extend(
        [
            "omega_stab", "cot", "tau_pct", "c_avg_err", "w_ext", "r_eta", "r_v_cmd", "r_f",
            "r_stab", "r_l", "r_g",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

#[derive(Default)]
struct Means {
    n: u64,
    cot: f64,
    cot_n: u64,
    tau: f64,
    cerr: f64,
    w: f64,
    verr: f64,
    r_l: f64,
    r_g: f64,
}

#[derive(Default, Clone, Copy)]
struct GaitAcc {
    n: u64,
    cerr: f64,
    cot: f64,
    cot_n: u64,
    verr: f64,
}

/// Runs `scenario` at the fixed simulator, controller and selector rates and
/// writes its artefacts. A fall or divergence ends the run early and marks
/// the summary as failed; it is not an `Err`.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunArtifacts> {
    scenario.validate()?;
    let mut cfg = scenario
        .rig
        .clone()
        .or_else(|| opts.rig.clone())
        .unwrap_or_default();
    let seed = opts.seed.unwrap_or(scenario.seed);
    cfg.seed = seed;
    cfg.terrain_level = opts.terrain_level.unwrap_or(scenario.terrain.level);
    cfg.terrain_seed = scenario.terrain.seed;

    let controller = match &scenario.controller {
        ControllerSpec::Scripted => Controller::scripted(),
        ControllerSpec::Policy { checkpoint } => Controller::Policy(Box::new(LocoPolicy::trained(
            load_policy(checkpoint, PolicyKind::Locomotion)?,
        ))),
    };
    let mut selector = match &scenario.selector {
        SelectorSpec::Fixed => Selector::Fixed,
        SelectorSpec::Oracle(c) => {
            c.validate(&cfg.gaits)?;
            Selector::Oracle(c.clone())
        }
        SelectorSpec::Policy { checkpoint } => {
            Selector::policy(load_policy(checkpoint, PolicyKind::GaitSelection)?)
        }
    };
    let mut rig = Rig::new(&cfg, controller)?;

    let dir = if opts.dry_run {
        None
    } else {
        let base = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
        let d = base.join(scenario.output.clone().unwrap_or_else(|| PathBuf::from(&scenario.name)));
        std::fs::create_dir_all(&d)?;
        Some(d)
    };
    let mut csv_out = match &dir {
        Some(d) => {
            let mut f = BufWriter::new(File::create(d.join("timeseries.csv"))?);
            writeln!(f, "{TIMESERIES_SCHEMA}")?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record(timeseries_header())?;
            Some(w)
        }
        None => None,
    };

    let sweep = matches!(scenario.command, CommandScript::Sweep { .. });
    let mut bins = sweep.then(|| {
        let top = match &scenario.command {
            CommandScript::Sweep { v_start, v_end, .. } => v_start.max(*v_end),
            _ => 0.0,
        };
        SpeedBins::new(top, SPEED_BIN_WIDTH)
    });
    let ticks = (scenario.duration * SELECT_RATE_HZ).round() as u64;
    let mut held = cfg.initial_gait;
    let mut prev_gait = held;
    let mut means = Means::default();
    let mut per_gait = [GaitAcc::default(); 8];
    let mut selections = Vec::new();
    let (mut switches, mut emergencies) = (0u64, 0u64);
    let mut failure = None;

    for tick in 0..ticks {
        let scripted = scenario.command.command_at(rig.time());
        let speed = scripted.linear_speed();
        let gait = match selector.select(&rig, &scripted, tick)? {
            Some((g, decision)) => {
                emergencies += u64::from(decision.emergency);
                if let (Selector::Oracle(_), Some(b)) = (&selector, bins.as_mut()) {
                    for g in GaitId::ALL {
                        if let Some(c) = decision.rollouts[g.index()].cot {
                            b.record_cot(speed, g, c);
                        }
                    }
                }
                selections.push(SelectionRecord {
                    time: rig.time(),
                    costs: decision.rollouts.map(|r| r.cost),
                    gait: g,
                    kappa: rig.scheduler.state.kappa(),
                    emergency: decision.emergency,
                });
                held = g;
                g
            }
            None if matches!(selector, Selector::Fixed) => scripted.gait,
            None => held,
        };
        let cmd = CommandU { gait, ..scripted };
        rig.set_command(cmd)?;
        let (metrics, reward) = match rig.step_interval() {
            Ok(r) => r,
            Err(Error::SimulationDiverged { time }) => {
                failure = Some(format!("simulation diverged at t = {time:.3} s"));
                break;
            }
            Err(e) => return Err(e),
        };
        let velocity = rig.tracking_velocity();
        let r_g = reward_gait_selection(&metrics, &cmd.velocity(), &velocity, gait, prev_gait);
        switches += u64::from(gait != prev_gait);
        prev_gait = gait;

        let verr = (velocity.x - cmd.vx).hypot(velocity.y - cmd.vy);
        means.n += 1;
        if let Some(c) = metrics.cot {
            means.cot += c;
            means.cot_n += 1;
        }
        means.tau += metrics.tau_pct;
        means.cerr += metrics.c_avg_err;
        means.w += metrics.w_ext;
        means.verr += verr;
        means.r_l += reward.total;
        means.r_g += r_g.total;
        let pg = &mut per_gait[gait.index()];
        pg.n += 1;
        pg.cerr += metrics.c_avg_err;
        pg.verr += verr;
        if let Some(c) = metrics.cot {
            pg.cot += c;
            pg.cot_n += 1;
        }
        if let Some(b) = bins.as_mut() {
            b.record(speed, gait, None);
            if matches!(selector, Selector::Fixed) {
                if let Some(c) = metrics.cot {
                    b.record_cot(speed, gait, c);
                }
            }
        }

        if let Some(w) = csv_out.as_mut() {
            let s = &rig.sim.state;
            let (roll, pitch) = s.roll_pitch();
            let f = |v: f64| v.to_string();
            let mut row = vec![
                f(rig.time()),
                f(cmd.vx),
                f(cmd.vy),
                f(cmd.yaw_rate),
                gait.index().to_string(),
                rig.scheduler.state.active_id.index().to_string(),
                u8::from(rig.scheduler.state.kappa()).to_string(),
                f(s.position.x),
                f(s.position.y),
                f(s.position.z),
                f(velocity.x),
                f(velocity.y),
                f(velocity.z),
                f(roll),
                f(pitch),
            ];
            row.extend(rig.beta_l.c_ref.iter().map(|&c| u8::from(c).to_string()));
            row.extend(s.contact.iter().map(|&c| u8::from(c).to_string()));
            for p in &rig.beta_l.p_ref {
                row.extend(p.iter().map(|&v| f(v)));
            }
            row.extend([
                f(rig.beta_g.omega_stab),
                metrics.cot.map(f).unwrap_or_default(),
                f(metrics.tau_pct),
                f(metrics.c_avg_err),
                f(metrics.w_ext),
                f(reward.r_eta),
                f(reward.r_v),
                f(reward.r_f),
                f(reward.r_stab),
                f(reward.total),
                f(r_g.total),
            ]);
            w.write_record(&row)?;
        }
        if rig.fallen() {
            failure = Some(format!("robot fell at t = {:.3} s", rig.time()));
            break;
        }
    }
    if let Some(mut w) = csv_out {
        w.flush()?;
    }

    let n = means.n.max(1) as f64;
    let summary = RunSummary {
        format: SUMMARY_FORMAT.into(),
        version: SUMMARY_VERSION,
        name: scenario.name.clone(),
        seed,
        terrain_level: cfg.terrain_level,
        terrain_seed: cfg.terrain_seed,
        duration: scenario.duration,
        simulated: rig.time(),
        failed: failure.is_some(),
        failure,
        means: MetricMeans {
            cot: (means.cot_n > 0).then(|| means.cot / means.cot_n as f64),
            tau_pct: means.tau / n,
            c_avg_err: means.cerr / n,
            w_ext: means.w / n,
            velocity_error: means.verr / n,
            reward_locomotion: means.r_l / n,
            reward_selection: means.r_g / n,
            stride_cv: stride_cv(&rig.touchdowns, None),
        },
        per_gait: GaitId::ALL
            .iter()
            .filter(|g| per_gait[g.index()].n > 0)
            .map(|&g| {
                let a = per_gait[g.index()];
                GaitMeans {
                    gait: g,
                    samples: a.n,
                    c_avg_err: a.cerr / a.n as f64,
                    cot: (a.cot_n > 0).then(|| a.cot / a.cot_n as f64),
                    velocity_error: a.verr / a.n as f64,
                }
            })
            .collect(),
        gait_switches: switches,
        emergencies,
        speed_bins: bins.map(|b| summarize_bins(&b)),
    };
    if let Some(d) = &dir {
        summary.save(d.join("summary.json"))?;
        if !matches!(selector, Selector::Fixed) {
            write_selection_trace(&selections, BufWriter::new(File::create(d.join("selection.csv"))?))?;
        }
    }
    Ok(RunArtifacts {
        summary,
        dir,
        selections,
    })
}

pub fn summarize_bins(b: &SpeedBins) -> Vec<BinSummary> {
    (0..b.counts.len())
        .map(|i| BinSummary {
            speed: b.bin_center(i),
            counts: b.counts[i],
            dominant: b.dominant(i),
            transition_phase: b.transition_phase(i),
            run_fraction: b.share(i, GaitId::Run),
            cot: std::array::from_fn(|g| b.mean_cot(i, GaitId::ALL[g])),
        })
        .collect()
}
