//! Biomechanics gait-transition metrics: cost of transport, torque
//! saturation, external work per gait cycle, contact tracking error and
//! stride-duration variability.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gait::{GaitId, NUM_LEGS};
use crate::GRAVITY;

/// Share above which one gait dominates a speed bin.
pub const DOMINANT_SHARE: f64 = 0.75;

/// `Σ max(τ q̇ + 0.3 τ², 0) / (m g |v_cmd|)`. `None` when the commanded speed
/// is zero, where the quantity is undefined.
pub fn cost_of_transport(tau: &[f64], qd: &[f64], mass: f64, cmd_speed: f64) -> Option<f64> {
    if !(cmd_speed > 0.0) {
        return None;
    }
    let power: f64 = tau
        .iter()
        .zip(qd)
        .map(|(&t, &w)| (t * w + 0.3 * t * t).max(0.0))
        .sum();
    Some(power / (mass * GRAVITY * cmd_speed))
}

/// Mean of `|τ_i / τ_lim,i|`.
pub fn torque_saturation(tau: &[f64], limits: &[f64]) -> f64 {
    let n = tau.len().min(limits.len());
    if n == 0 {
        return 0.0;
    }
    tau.iter().zip(limits).map(|(t, l)| (t / l).abs()).sum::<f64>() / n as f64
}

/// Per-leg contact mismatch and its mean over the four legs.
pub fn contact_error(
    contact: &[bool; NUM_LEGS],
    reference: &[bool; NUM_LEGS],
) -> ([bool; NUM_LEGS], f64) {
    let err: [bool; NUM_LEGS] = std::array::from_fn(|i| contact[i] != reference[i]);
    let count = err.iter().filter(|&&e| e).count();
    (err, count as f64 / NUM_LEGS as f64)
}

/// Coefficient of variation (population std over mean) of stride durations.
/// `None` with fewer than three strides.
pub fn stride_cv_from_durations(durations: &[f64]) -> Option<f64> {
    if durations.len() < 3 {
        return None;
    }
    let n = durations.len() as f64;
    // shift by the first stride so identical durations give exactly zero
    let first = durations[0];
    let shift = durations.iter().map(|d| d - first).sum::<f64>() / n;
    let mean = first + shift;
    if !(mean > 0.0) {
        return None;
    }
    let var = durations.iter().map(|d| (d - first - shift).powi(2)).sum::<f64>() / n;
    Some(var.sqrt() / mean)
}

/// Stride CV pooled over legs from per-leg touchdown times. Only strides
/// that start and end inside `window` (inclusive) count.
pub fn stride_cv(touchdowns: &[Vec<f64>], window: Option<(f64, f64)>) -> Option<f64> {
    let inside = |t: f64| window.is_none_or(|(a, b)| t >= a && t <= b);
    let durations: Vec<f64> = touchdowns
        .iter()
        .flat_map(|times| {
            times
                .windows(2)
                .filter(|w| inside(w[0]) && inside(w[1]))
                .map(|w| w[1] - w[0])
                .collect::<Vec<_>>()
        })
        .collect();
    stride_cv_from_durations(&durations)
}

/// `Some(true)` when no gait reaches more than 75% of the bin, `None` for an
/// empty bin.
pub fn detect_transition_phase(histogram: &[f64]) -> Option<bool> {
    let total: f64 = histogram.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let max = histogram.iter().copied().fold(0.0, f64::max);
    Some(max / total <= DOMINANT_SHARE)
}

/// How energy increments are combined into external work.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkConvention {
    /// `Σ (ΔE_k − ΔE_p)`.
    #[default]
    Signed,
    /// `Σ (|ΔE_k| + |ΔE_p|)`.
    Absolute,
}

/// Running external-work sum over the current gait cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAccumulator {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub convention: WorkConvention,
    pub cycle_start: f64,
    pub sum: f64,
    prev: Option<(f64, f64)>,
    /// Work over the last completed cycle.
    pub last_cycle: Option<f64>,
}

impl EnergyAccumulator {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Self {
        Self {
            mass,
            inertia,
            convention: WorkConvention::Signed,
            cycle_start: 0.0,
            sum: 0.0,
            prev: None,
            last_cycle: None,
        }
    }

    /// `(E_k, E_p)` with rotational kinetic energy included.
    pub fn energies(&self, lin_vel: &Vector3<f64>, ang_vel: &Vector3<f64>, height: f64) -> (f64, f64) {
        let kin = 0.5 * self.mass * lin_vel.norm_squared()
            + 0.5 * ang_vel.dot(&(self.inertia * ang_vel));
        (kin, self.mass * GRAVITY * height)
    }

    /// Adds the energy change since the previous call.
    pub fn step(&mut self, lin_vel: &Vector3<f64>, ang_vel: &Vector3<f64>, height: f64) {
        let (kin, pot) = self.energies(lin_vel, ang_vel, height);
        if let Some((k0, p0)) = self.prev {
            let (dk, dp) = (kin - k0, pot - p0);
            self.sum += match self.convention {
                WorkConvention::Signed => dk - dp,
                WorkConvention::Absolute => dk.abs() + dp.abs(),
            };
        }
        self.prev = Some((kin, pot));
    }

    /// Ends the cycle at `time`: stores and returns the cycle sum, restarts.
    pub fn close_cycle(&mut self, time: f64) -> f64 {
        let w = self.sum;
        self.last_cycle = Some(w);
        self.sum = 0.0;
        self.cycle_start = time;
        w
    }
}

/// Metrics at one selection step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub time: f64,
    pub cot: Option<f64>,
    pub tau_pct: f64,
    pub w_ext: f64,
    pub c_avg_err: f64,
    pub stride_cv: Option<f64>,
}

impl MetricsSample {
    /// `CoT + τ_% + c_avg_err + W_ext`, with an undefined CoT counted as 0.
    pub fn sum(&self) -> f64 {
        self.cot.unwrap_or(0.0) + self.tau_pct + self.c_avg_err + self.w_ext
    }
}

/// Writes samples as CSV with columns
/// `time,cot,tau_pct,w_ext,c_avg_err,stride_cv`; undefined values are empty.
pub fn write_metrics_csv(samples: &[MetricsSample], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "cot", "tau_pct", "w_ext", "c_avg_err", "stride_cv"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in samples {
        w.write_record([
            s.time.to_string(),
            opt(s.cot),
            s.tau_pct.to_string(),
            s.w_ext.to_string(),
            s.c_avg_err.to_string(),
            opt(s.stride_cv),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Gait usage and per-gait CoT, binned by commanded speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedBins {
    pub width: f64,
    pub counts: Vec<[u64; 8]>,
    pub cot_sum: Vec<[f64; 8]>,
    pub cot_n: Vec<[u64; 8]>,
}

impl SpeedBins {
    pub fn new(max_speed: f64, width: f64) -> Self {
        let n = (max_speed / width).round() as usize + 1;
        Self {
            width,
            counts: vec![[0; 8]; n],
            cot_sum: vec![[0.0; 8]; n],
            cot_n: vec![[0; 8]; n],
        }
    }

    pub fn bin_of(&self, speed: f64) -> usize {
        ((speed / self.width).round().max(0.0) as usize).min(self.counts.len() - 1)
    }

    pub fn bin_center(&self, bin: usize) -> f64 {
        bin as f64 * self.width
    }

    pub fn record(&mut self, speed: f64, gait: GaitId, cot: Option<f64>) {
        let b = self.bin_of(speed);
        self.counts[b][gait.index()] += 1;
        if let Some(c) = cot {
            self.cot_sum[b][gait.index()] += c;
            self.cot_n[b][gait.index()] += 1;
        }
    }

    /// Adds a CoT observation without counting a selection.
    pub fn record_cot(&mut self, speed: f64, gait: GaitId, cot: f64) {
        let b = self.bin_of(speed);
        self.cot_sum[b][gait.index()] += cot;
        self.cot_n[b][gait.index()] += 1;
    }

    pub fn share(&self, bin: usize, gait: GaitId) -> Option<f64> {
        let total: u64 = self.counts[bin].iter().sum();
        (total > 0).then(|| self.counts[bin][gait.index()] as f64 / total as f64)
    }

    pub fn transition_phase(&self, bin: usize) -> Option<bool> {
        let h: Vec<f64> = self.counts[bin].iter().map(|&c| c as f64).collect();
        detect_transition_phase(&h)
    }

    pub fn dominant(&self, bin: usize) -> Option<GaitId> {
        let total: u64 = self.counts[bin].iter().sum();
        if total == 0 {
            return None;
        }
        let (i, _) = self.counts[bin]
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .expect("eight gaits");
        Some(GaitId::ALL[i])
    }

    pub fn mean_cot(&self, bin: usize, gait: GaitId) -> Option<f64> {
        let n = self.cot_n[bin][gait.index()];
        (n > 0).then(|| self.cot_sum[bin][gait.index()] / n as f64)
    }
}
