use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::beta::{BetaG, BetaL, CommandU};
use super::footholds::{raibert_footholds, swing_height_reference, BaseSnapshot, FOOTHOLD_CLAMP};
use super::transition::{
    froude_number, omega_stab, stand_omega_stab, transition_cycles, transition_resolution,
};
use super::{GaitId, GaitParams, GaitTable, NUM_LEGS};
use crate::error::{Error, Result};

/// Stance iff the leg phase is below the duty factor. The static stand gait
/// (duty factor one) is all-stance for every phase.
pub fn contact_reference(phases: &[f64; NUM_LEGS], gait: &GaitParams) -> [bool; NUM_LEGS] {
    std::array::from_fn(|i| gait.is_static() || phases[i] < gait.duty_factor)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Rounds away float residue so phases on a 1e-9 grid land exactly on it.
fn snap(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if (x - r).abs() < 1e-12 {
        r
    } else {
        x
    }
}

fn wrap_unit(x: f64) -> f64 {
    let x = snap(x);
    let w = snap(x - x.floor());
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Linear blend of two gaits. Offsets move along the shorter way round the
/// unit circle; a static gait borrows the period of the other side.
pub(crate) fn blend_gaits(from: &GaitParams, to: &GaitParams, eta: f64) -> GaitParams {
    let period = match (from.is_static(), to.is_static()) {
        (true, false) => to.period,
        (false, true) => from.period,
        _ => lerp(from.period, to.period, eta),
    };
    let phase_offsets = std::array::from_fn(|i| {
        let a = from.phase_offsets[i];
        let mut diff = to.phase_offsets[i] - a;
        diff -= diff.round();
        wrap_unit(a + eta * diff)
    });
    GaitParams {
        period,
        duty_factor: lerp(from.duty_factor, to.duty_factor, eta),
        phase_offsets,
    }
}

/// Gait clock, per-leg phases and transition bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub time: f64,
    /// Phase of the master clock that every leg is slaved to.
    pub master_phase: f64,
    pub phases: [f64; NUM_LEGS],
    /// Start time of each leg's current gait period.
    pub period_starts: [f64; NUM_LEGS],
    pub active_id: GaitId,
    pub active: GaitParams,
    pub target_id: Option<GaitId>,
    pub target: Option<GaitParams>,
    /// η, progress of the current transition in [0, 1].
    pub transition_progress: f64,
    /// C, gait cycles over which the current transition runs.
    pub transition_cycles: f64,
    /// δ, rate multiplier of the current transition.
    pub resolution: f64,
    /// Completed master-clock cycles.
    pub cycle_count: u64,
    anchor: f64,
    anchor_cycles: u64,
}

impl SchedulerState {
    pub fn new(id: GaitId, params: GaitParams, start_time: f64) -> Self {
        let mut state = Self {
            time: start_time,
            master_phase: 0.0,
            phases: [0.0; NUM_LEGS],
            period_starts: [start_time; NUM_LEGS],
            active_id: id,
            active: params,
            target_id: None,
            target: None,
            transition_progress: 0.0,
            transition_cycles: 1.0,
            resolution: 1.0,
            cycle_count: 0,
            anchor: start_time,
            anchor_cycles: 0,
        };
        state.refresh_legs();
        state
    }

    /// κ: a transition is in progress.
    pub fn kappa(&self) -> bool {
        self.target.is_some()
    }

    /// Gait parameters currently in force (blended during a transition).
    pub fn effective_gait(&self) -> GaitParams {
        match &self.target {
            Some(target) => blend_gaits(&self.active, target, self.transition_progress),
            None => self.active,
        }
    }

    /// The gait the robot is heading to: the target during a transition,
    /// otherwise the active gait.
    pub fn commanded_gait(&self) -> GaitId {
        self.target_id.unwrap_or(self.active_id)
    }

    fn refresh_legs(&mut self) {
        let g = self.effective_gait();
        for i in 0..NUM_LEGS {
            self.phases[i] = wrap_unit(self.master_phase + g.phase_offsets[i]);
            self.period_starts[i] = self.time - self.phases[i] * g.period;
        }
    }

    fn reanchor(&mut self) {
        let period = self.effective_gait().period;
        self.anchor = self.time - self.master_phase * period;
        self.anchor_cycles = 0;
    }

    /// Moves the gait clock to time `t`. Returns true when the master clock
    /// wrapped (a gait cycle completed).
    pub fn update_phases(&mut self, t: f64) -> Result<bool> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite time {t}")));
        }
        if t < self.time - 1e-12 {
            return Err(Error::InvalidInput(format!(
                "time {t} precedes scheduler time {}",
                self.time
            )));
        }
        let period = self.effective_gait().period;
        if !(period > 0.0) {
            return Err(Error::InvalidInput("gait period must be positive".into()));
        }
        let mut wrapped = false;
        if self.kappa() {
            self.master_phase += (t - self.time) / period;
            while self.master_phase >= 1.0 {
                self.master_phase -= 1.0;
                self.cycle_count += 1;
                wrapped = true;
            }
            self.time = t;
            self.reanchor();
        } else {
            let anchor = self.anchor;
            let start = |k: u64| anchor + k as f64 * period;
            let mut k = self.anchor_cycles;
            while snap((t - start(k + 1)) / period) >= 0.0 {
                k += 1;
                self.cycle_count += 1;
                wrapped = true;
            }
            self.anchor_cycles = k;
            self.master_phase = snap((t - start(k)) / period).clamp(0.0, 1.0 - f64::EPSILON);
            self.time = t;
        }
        self.refresh_legs();
        Ok(wrapped)
    }

    /// Advances the transition by `dt`: `η += δ dt / (C T_active)`.
    pub fn step_transition(&mut self, dt: f64) {
        let Some(target) = self.target else {
            return;
        };
        if dt <= 0.0 {
            return;
        }
        let period = if self.active.is_static() {
            target.period
        } else {
            self.active.period
        };
        self.transition_progress +=
            self.resolution * dt / (self.transition_cycles * period);
        if self.transition_progress >= 1.0 {
            self.active = target;
            self.active_id = self.target_id.take().unwrap_or(self.active_id);
            self.target = None;
            self.transition_progress = 1.0;
            self.reanchor();
        }
        self.refresh_legs();
    }

    /// Starts a transition toward `target_id` at Froude number `froude`.
    pub fn begin_transition(
        &mut self,
        target_id: GaitId,
        table: &GaitTable,
        froude: f64,
        hip_height: f64,
    ) -> Result<()> {
        if !(froude.is_finite() && froude >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid Froude number {froude}")));
        }
        let target = *table.get(target_id);
        if self.target_id == Some(target_id) {
            return Ok(());
        }
        if self.target.is_some() {
            // retarget mid-transition: freeze the blend as the new start
            let frozen = self.effective_gait();
            if self.transition_progress >= 0.5 {
                self.active_id = self.target_id.unwrap_or(self.active_id);
            }
            self.active = frozen;
            self.target = None;
            self.target_id = None;
            self.reanchor();
        } else if target_id == self.active_id && self.active == target {
            return Ok(());
        }
        self.transition_cycles = transition_cycles(froude);
        self.resolution = transition_resolution(&self.active, &target, hip_height);
        self.transition_progress = 0.0;
        self.target = Some(target);
        self.target_id = Some(target_id);
        self.reanchor();
        Ok(())
    }
}

/// Gait scheduler: the gait table plus the robot constants the references
/// depend on, and the evolving [`SchedulerState`].
#[derive(Clone, Debug)]
pub struct GaitScheduler {
    pub table: GaitTable,
    pub hip_height: f64,
    pub nominal_height: f64,
    /// Velocity-error feedback gain of the foothold heuristic, seconds.
    pub raibert_gain: f64,
    /// Nominal foot positions in the base frame.
    pub nominal_feet: [Vector3<f64>; NUM_LEGS],
    pub state: SchedulerState,
}

impl GaitScheduler {
    pub fn new(
        table: GaitTable,
        initial: GaitId,
        hip_height: f64,
        nominal_height: f64,
        nominal_feet: [Vector3<f64>; NUM_LEGS],
    ) -> Self {
        let params = *table.get(initial);
        Self {
            table,
            hip_height,
            nominal_height,
            raibert_gain: 0.03,
            nominal_feet,
            state: SchedulerState::new(initial, params, 0.0),
        }
    }

    /// Requests `gait` while travelling at commanded planar speed `speed`.
    pub fn request_gait(&mut self, gait: GaitId, speed: f64) -> Result<()> {
        let froude = froude_number(speed, self.hip_height)?;
        self.state
            .begin_transition(gait, &self.table, froude, self.hip_height)
    }

    /// Same as [`Self::request_gait`] for a raw integer gait id.
    pub fn request_gait_id(&mut self, id: i64, speed: f64) -> Result<()> {
        let gait = GaitId::from_index(id)
            .map_err(|_| Error::InvalidInput(format!("unknown gait id {id}")))?;
        self.request_gait(gait, speed)
    }

    /// Moves the clock to `t`, progressing any transition. Returns true when
    /// a gait cycle completed.
    pub fn advance(&mut self, t: f64) -> Result<bool> {
        let dt = t - self.state.time;
        let wrapped = self.state.update_phases(t)?;
        self.state.step_transition(dt);
        Ok(wrapped)
    }

    pub fn contact_reference(&self) -> [bool; NUM_LEGS] {
        contact_reference(&self.state.phases, &self.state.effective_gait())
    }

    /// Stability indicator of the gait in force; the stand sentinel when static.
    pub fn current_omega_stab(&self) -> f64 {
        omega_stab(&self.state.effective_gait(), self.hip_height)
            .unwrap_or_else(|| stand_omega_stab(&self.table, self.hip_height))
    }

    /// Builds the locomotion and selection references for the current clock.
    pub fn compute_beta(
        &self,
        robot: &BaseSnapshot,
        cmd: &CommandU,
        ground: &dyn Fn(f64, f64) -> f64,
    ) -> Result<(BetaL, BetaG)> {
        let gait = self.state.effective_gait();
        let c_ref = contact_reference(&self.state.phases, &gait);
        let v_cmd = Vector3::new(cmd.vx, cmd.vy, cmd.yaw_rate);
        let (px, py) = raibert_footholds(
            robot,
            &v_cmd,
            &gait,
            &self.nominal_feet,
            &c_ref,
            self.raibert_gain,
        );
        let mut pz = [0.0; NUM_LEGS];
        for i in 0..NUM_LEGS {
            pz[i] = if c_ref[i] {
                robot.feet[i].z
            } else {
                let ground_z = ground(px[i], py[i]);
                swing_height_reference(self.state.phases[i], &gait, self.nominal_height, ground_z)?
                    .clamp(ground_z - FOOTHOLD_CLAMP[2], ground_z + FOOTHOLD_CLAMP[2])
            };
        }
        let beta_l = BetaL {
            c_ref,
            p_ref: std::array::from_fn(|i| Vector3::new(px[i], py[i], pz[i])),
        };
        let beta_g = BetaG {
            c_ref,
            pz_ref: pz,
            omega_stab: self.current_omega_stab(),
            kappa: self.state.kappa(),
        };
        Ok((beta_l, beta_g))
    }
}
