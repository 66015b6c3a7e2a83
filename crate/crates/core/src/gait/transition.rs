//! Froude-number based transition timing.

use super::{GaitParams, GaitTable};
use crate::error::{Error, Result};
use crate::GRAVITY;

/// Froude number `v² / (g h)` for speed `v` and hip height `h`.
pub fn froude_number(speed: f64, hip_height: f64) -> Result<f64> {
    if !(hip_height.is_finite() && hip_height > 0.0) {
        return Err(Error::InvalidModel(format!(
            "hip height must be positive, got {hip_height}"
        )));
    }
    if !speed.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite speed {speed}")));
    }
    Ok(speed * speed / (GRAVITY * hip_height))
}

/// Number of gait cycles a transition spans: `C = exp(-2 Ω)`.
pub fn transition_cycles(froude: f64) -> f64 {
    (-2.0 * froude.max(0.0)).exp()
}

/// Gait stability indicator `g / (h f²)`. `None` for the static stand gait,
/// which has no stepping frequency.
pub fn omega_stab(gait: &GaitParams, hip_height: f64) -> Option<f64> {
    if gait.is_static() {
        return None;
    }
    let f = gait.frequency();
    Some(GRAVITY / (hip_height * f * f))
}

/// Value reported for the stand gait where a number is required: the
/// largest indicator among the moving gaits of `table`.
pub fn stand_omega_stab(table: &GaitTable, hip_height: f64) -> f64 {
    table
        .iter()
        .filter_map(|(_, g)| omega_stab(g, hip_height))
        .fold(0.0, f64::max)
}

/// Transition resolution `δ = 1 + Ω_stab(current) / Ω_stab(next)`.
///
/// When either side is the stand gait its indicator is taken equal to the
/// other side's, so any transition involving stand has `δ = 2`.
pub fn transition_resolution(current: &GaitParams, next: &GaitParams, hip_height: f64) -> f64 {
    match (omega_stab(current, hip_height), omega_stab(next, hip_height)) {
        (Some(a), Some(b)) => 1.0 + a / b,
        _ => 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::GaitId;

    const H: f64 = 0.25;

    #[test]
    fn froude_values() {
        assert_eq!(froude_number(0.0, H).unwrap(), 0.0);
        assert!((froude_number(1.0, H).unwrap() - 0.40775).abs() < 1e-4);
        assert!((froude_number(2.215, H).unwrap() - 2.0).abs() < 1e-3);
        assert!(matches!(froude_number(1.0, 0.0), Err(Error::InvalidModel(_))));
        assert!(froude_number(1.0, -0.2).is_err());
    }

    #[test]
    fn cycles_values() {
        assert_eq!(transition_cycles(0.0), 1.0);
        assert!((transition_cycles(2.0) - 0.018315638888734).abs() < 1e-12);
        assert!((transition_cycles(1.0) - 0.135335283236613).abs() < 1e-12);
    }

    #[test]
    fn omega_stab_values() {
        let t = GaitTable::default();
        let trot = omega_stab(t.get(GaitId::Trot), H).unwrap();
        let run = omega_stab(t.get(GaitId::Run), H).unwrap();
        assert!((trot - 6.2784).abs() < 1e-4);
        assert!((run - 3.5316).abs() < 1e-4);
        assert!(omega_stab(t.get(GaitId::Stand), H).is_none());

        let mut fast = *t.get(GaitId::Trot);
        fast.period /= 2.0;
        let quartered = omega_stab(&fast, H).unwrap();
        assert!((quartered - trot / 4.0).abs() < 1e-12);
    }

    #[test]
    fn resolution_values() {
        let t = GaitTable::default();
        let trot = t.get(GaitId::Trot);
        let run = t.get(GaitId::Run);
        assert!((transition_resolution(trot, trot, H) - 2.0).abs() < 1e-15);
        let up = transition_resolution(trot, run, H);
        let down = transition_resolution(run, trot, H);
        assert!((up - (1.0 + 0.30f64.powi(2).recip() * 0.40f64.powi(2))).abs() < 1e-12);
        assert!((up - 2.7778).abs() < 1e-4);
        assert!((down - 1.5625).abs() < 1e-9);
        assert_eq!(transition_resolution(t.get(GaitId::Stand), trot, H), 2.0);
        assert_eq!(transition_resolution(run, t.get(GaitId::Stand), H), 2.0);
    }

    #[test]
    fn stand_sentinel_is_largest_indicator() {
        let t = GaitTable::default();
        // slowest gaits (0.5 s period) have f = 2 Hz
        assert!((stand_omega_stab(&t, H) - GRAVITY / (H * 4.0)).abs() < 1e-12);
    }
}
