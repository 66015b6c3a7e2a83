//! Gait selection: a trained policy head, or a receding-horizon oracle that
//! rolls every candidate gait forward on a copy of the rig and keeps the one
//! with the lowest unified cost.

use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{CommandU, GaitId, GaitTable};
use crate::learning::obs::{beta_g_in_base, obs_g};
use crate::learning::PolicyNet;
use crate::metrics::MetricsSample;
use crate::rewards::{psi, reward_gait_selection, smoothness_penalty, SELECT_COMMAND_WEIGHT};
use crate::runtime::Rig;
use crate::SELECT_RATE_HZ;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    /// Rollout length, s.
    pub horizon: f64,
    pub candidates: Vec<GaitId>,
    /// Weight of the gait-change penalty, matching the command-reward weight.
    pub smoothness_weight: f64,
    /// Time between oracle decisions, s.
    pub replan_interval: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            candidates: GaitId::ALL.to_vec(),
            smoothness_weight: SELECT_COMMAND_WEIGHT,
            replan_interval: 0.1,
        }
    }
}

impl SelectorConfig {
    /// Checks that the horizon covers a full period of every candidate.
    pub fn validate(&self, table: &GaitTable) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidInput("oracle needs at least one candidate".into()));
        }
        if !(self.replan_interval > 0.0) {
            return Err(Error::InvalidInput("replan interval must be positive".into()));
        }
        for &g in &self.candidates {
            let period = table.get(g).period;
            if self.horizon <= period {
                return Err(Error::InvalidInput(format!(
                    "horizon {} s does not cover the {g} period {period} s",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    fn intervals(&self) -> usize {
        (self.horizon * SELECT_RATE_HZ).round().max(1.0) as usize
    }
}

/// Metric portion of the gait-selection objective as a cost, plus the
/// weighted penalty for changing gait.
pub fn unified_cost(metrics: &MetricsSample, changed: bool, smoothness_weight: f64) -> f64 {
    let metric = psi(metrics.cot.unwrap_or(0.0))
        + psi(metrics.tau_pct)
        + psi(metrics.c_avg_err)
        + psi(metrics.w_ext);
    -(metric + smoothness_weight * smoothness_penalty(metrics, changed))
}

/// Outcome of one candidate rollout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    /// Summed per-interval cost; `None` when the rollout diverged or fell.
    pub cost: Option<f64>,
    /// Mean CoT over the rollout.
    pub cot: Option<f64>,
}

/// One oracle decision with the evidence behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDecision {
    pub gait: GaitId,
    /// Indexed by gait id; default for gaits outside the candidate set.
    pub rollouts: [Rollout; 8],
    /// Every candidate failed and the robot was sent to stand.
    pub emergency: bool,
}

fn rollout(rig: &Rig, command: &CommandU, incumbent: GaitId, intervals: usize) -> Rollout {
    let mut sim = rig.clone();
    if sim.set_command(*command).is_err() {
        return Rollout::default();
    }
    let v_cmd = command.velocity();
    let mut prev = incumbent;
    let (mut cost, mut cot_sum, mut cot_n) = (0.0, 0.0, 0usize);
    for _ in 0..intervals {
        let Ok((metrics, _)) = sim.step_interval() else {
            return Rollout::default();
        };
        if sim.fallen() {
            return Rollout::default();
        }
        let r = reward_gait_selection(&metrics, &v_cmd, &sim.tracking_velocity(), command.gait, prev);
        cost -= r.total;
        if let Some(c) = metrics.cot {
            cot_sum += c;
            cot_n += 1;
        }
        prev = command.gait;
    }
    Rollout {
        cost: cost.is_finite().then_some(cost),
        cot: (cot_n > 0).then(|| cot_sum / cot_n as f64),
    }
}

/// Rolls out every candidate for the horizon and returns the cheapest,
/// keeping `incumbent` on ties. `command` supplies the velocity; its gait
/// field is ignored.
pub fn oracle_select(
    rig: &Rig,
    command: &CommandU,
    incumbent: GaitId,
    cfg: &SelectorConfig,
) -> Result<OracleDecision> {
    cfg.validate(&rig.scheduler.table)?;
    let n = cfg.intervals();
    let mut rollouts = [Rollout::default(); 8];
    for &g in &cfg.candidates {
        let cmd = CommandU { gait: g, ..*command };
        rollouts[g.index()] = rollout(rig, &cmd, incumbent, n);
    }
    let mut best: Option<(GaitId, f64)> = rollouts[incumbent.index()]
        .cost
        .filter(|_| cfg.candidates.contains(&incumbent))
        .map(|c| (incumbent, c));
    for &g in &cfg.candidates {
        if let Some(c) = rollouts[g.index()].cost {
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((g, c));
            }
        }
    }
    Ok(match best {
        Some((gait, _)) => OracleDecision {
            gait,
            rollouts,
            emergency: false,
        },
        None => OracleDecision {
            gait: GaitId::Stand,
            rollouts,
            emergency: true,
        },
    })
}

/// Trained selector head: forward pass, clamp to `[0, 7]`, round.
pub fn policy_select(net: &PolicyNet, obs: &[f64]) -> Result<(GaitId, f64)> {
    let raw = net.mean_action(obs)?[0];
    Ok((GaitId::from_action(raw), raw))
}

/// How a run picks its gait.
#[derive(Clone, Debug)]
pub enum Selector {
    Fixed,
    Oracle(SelectorConfig),
    Policy {
        net: Box<PolicyNet>,
        prev_action: f64,
        prev_command: Vector3<f64>,
    },
}

/// One selection tick for the trace log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub time: f64,
    /// Candidate costs by gait id (oracle only).
    pub costs: [Option<f64>; 8],
    pub gait: GaitId,
    pub kappa: bool,
    pub emergency: bool,
}

impl Selector {
    pub fn policy(net: PolicyNet) -> Self {
        Selector::Policy {
            net: Box::new(net),
            prev_action: 0.0,
            prev_command: Vector3::zeros(),
        }
    }

    /// Picks the gait for the next selection interval. `command.gait` is the
    /// scripted gait, used by [`Selector::Fixed`]. The oracle only re-plans
    /// every `replan_interval` and otherwise returns `None`, as does the
    /// fixed selector.
    pub fn select(
        &mut self,
        rig: &Rig,
        command: &CommandU,
        tick: u64,
    ) -> Result<Option<(GaitId, OracleDecision)>> {
        let incumbent = rig.scheduler.state.commanded_gait();
        match self {
            Selector::Fixed => Ok(None),
            Selector::Oracle(cfg) => {
                let stride = (cfg.replan_interval * SELECT_RATE_HZ).round().max(1.0) as u64;
                if tick % stride != 0 {
                    return Ok(None);
                }
                let d = oracle_select(rig, command, incumbent, cfg)?;
                Ok(Some((d.gait, d)))
            }
            Selector::Policy {
                net,
                prev_action,
                prev_command,
            } => {
                let v_cmd = command.velocity();
                let rate = (v_cmd - *prev_command) * SELECT_RATE_HZ;
                let beta = beta_g_in_base(&rig.beta_g, rig.sim.state.position.z);
                let obs = obs_g(&rig.estimate, &beta, &v_cmd, &rate, *prev_action);
                let (gait, raw) = policy_select(net, &obs)?;
                *prev_action = raw;
                *prev_command = v_cmd;
                let d = OracleDecision {
                    gait,
                    rollouts: [Rollout::default(); 8],
                    emergency: false,
                };
                Ok(Some((gait, d)))
            }
        }
    }
}

/// Writes the selection trace: time, eight candidate costs, chosen gait id
/// and the transition flag. Missing costs are empty cells.
pub fn write_selection_trace(records: &[SelectionRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend(GaitId::ALL.iter().map(|g| format!("cost_{g}")));
    header.extend(["gait".into(), "kappa".into()]);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![format!("{:.3}", r.time)];
        row.extend(r.costs.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
        row.push(r.gait.index().to_string());
        row.push(u8::from(r.kappa).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unified_cost_examples() {
        let zero = MetricsSample::default();
        assert_eq!(unified_cost(&zero, false, 0.4), -4.0);
        let m = MetricsSample {
            cot: Some(0.25),
            tau_pct: 0.25,
            c_avg_err: 0.25,
            w_ext: 0.25,
            ..Default::default()
        };
        let extra = unified_cost(&m, true, 0.4) - unified_cost(&m, false, 0.4);
        assert!((extra - 0.4 * psi(1.0)).abs() < 1e-12);
        assert!((extra - 0.0954).abs() < 1e-4);
    }

    #[test]
    fn horizon_must_cover_periods() {
        let table = GaitTable::default();
        assert!(SelectorConfig::default().validate(&table).is_ok());
        let short = SelectorConfig {
            horizon: 0.45,
            ..Default::default()
        };
        assert!(short.validate(&table).is_err());
    }
}
