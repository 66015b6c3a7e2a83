use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use quadgait::gait::GaitId;
use quadgait::metrics::{
    contact_error, cost_of_transport, stride_cv, torque_saturation, write_metrics_csv,
    EnergyAccumulator, MetricsSample, SpeedBins, WorkConvention,
};

fn inertia() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(0.07, 0.26, 0.24))
}

#[test]
fn pooled_stride_cv_respects_window() {
    // leg 0 periodic at 0.4 s, leg 1 periodic at 0.5 s
    let legs = vec![vec![0.0, 0.4, 0.8, 1.2], vec![0.1, 0.6, 1.1, 1.6]];
    let cv = stride_cv(&legs, None).unwrap();
    assert!((cv - 0.05 / 0.45).abs() < 1e-12);
    let only_first = stride_cv(&legs, Some((0.0, 1.2))).unwrap();
    // the window keeps three 0.4 s strides and two 0.5 s strides
    let mean = (3.0 * 0.4 + 2.0 * 0.5) / 5.0;
    let var = (3.0 * (0.4f64 - mean).powi(2) + 2.0 * (0.5f64 - mean).powi(2)) / 5.0;
    assert!((only_first - var.sqrt() / mean).abs() < 1e-12);
    assert!(stride_cv(&[vec![0.0, 0.4]], None).is_none());
}

#[test]
fn absolute_convention_counts_both_directions() {
    let mut acc = EnergyAccumulator::new(12.0, inertia());
    acc.convention = WorkConvention::Absolute;
    for z in [0.28, 0.29, 0.28] {
        acc.step(&Vector3::x(), &Vector3::zeros(), z);
    }
    let w = acc.close_cycle(0.4);
    assert!((w - 2.0 * 12.0 * quadgait::GRAVITY * 0.01).abs() < 1e-9);
    assert_eq!(acc.last_cycle, Some(w));
    assert_eq!(acc.sum, 0.0);
}

#[test]
fn rotational_energy_counts() {
    let acc = EnergyAccumulator::new(12.0, inertia());
    let (k, p) = acc.energies(&Vector3::zeros(), &Vector3::new(0.0, 2.0, 0.0), 0.0);
    assert!((k - 0.5 * 0.26 * 4.0).abs() < 1e-12);
    assert_eq!(p, 0.0);
}

#[test]
fn speed_bins_report_shares() {
    let mut bins = SpeedBins::new(1.5, 0.1);
    assert_eq!(bins.counts.len(), 16);
    assert_eq!(bins.bin_of(0.34), 3);
    assert_eq!(bins.bin_of(9.0), 15);
    for _ in 0..4 {
        bins.record(0.3, GaitId::Trot, Some(2.0));
    }
    bins.record(0.31, GaitId::Run, Some(4.0));
    assert_eq!(bins.dominant(3), Some(GaitId::Trot));
    assert_eq!(bins.share(3, GaitId::Run), Some(0.2));
    assert_eq!(bins.transition_phase(3), Some(false));
    bins.record(0.3, GaitId::Run, None);
    assert_eq!(bins.transition_phase(3), Some(true));
    assert_eq!(bins.mean_cot(3, GaitId::Trot), Some(2.0));
    assert_eq!(bins.mean_cot(3, GaitId::Run), Some(4.0));
    assert_eq!(bins.dominant(0), None);
    assert_eq!(bins.transition_phase(0), None);
}

#[test]
fn metrics_csv_leaves_undefined_cells_empty() {
    let rows = [
        MetricsSample { time: 0.01, cot: None, tau_pct: 0.2, ..MetricsSample::default() },
        MetricsSample { time: 0.02, cot: Some(1.5), stride_cv: Some(0.1), ..MetricsSample::default() },
    ];
    let mut out = Vec::new();
    write_metrics_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,cot,tau_pct,w_ext,c_avg_err,stride_cv");
    assert_eq!(lines[1], "0.01,,0.2,0,0,");
    assert_eq!(lines[2], "0.02,1.5,0,0,0,0.1");
}

proptest! {
    #[test]
    fn cot_is_nonnegative(tau in prop::array::uniform12(-33.5..33.5f64), qd in prop::array::uniform12(-20.0..20.0f64), v in 0.01..3.0f64) {
        let cot = cost_of_transport(&tau, &qd, 12.0, v).unwrap();
        prop_assert!(cot >= 0.0);
    }

    #[test]
    fn saturation_in_unit_interval(tau in prop::array::uniform12(-33.5..33.5f64)) {
        let s = torque_saturation(&tau, &[33.5; 12]);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn contact_error_is_symmetric(a in prop::array::uniform4(any::<bool>()), b in prop::array::uniform4(any::<bool>())) {
        let (e_ab, m_ab) = contact_error(&a, &b);
        let (e_ba, m_ba) = contact_error(&b, &a);
        prop_assert_eq!(e_ab, e_ba);
        prop_assert_eq!(m_ab, m_ba);
        prop_assert!((0.0..=1.0).contains(&m_ab));
    }

    #[test]
    fn signed_work_telescopes(path in prop::collection::vec((0.0..2.0f64, 0.2..0.35f64), 2..50)) {
        let mut acc = EnergyAccumulator::new(12.0, inertia());
        for &(v, z) in &path {
            acc.step(&Vector3::new(v, 0.0, 0.0), &Vector3::zeros(), z);
        }
        let (v0, z0) = path[0];
        let (v1, z1) = *path.last().unwrap();
        let g = quadgait::GRAVITY;
        let want = 6.0 * (v1 * v1 - v0 * v0) - 12.0 * g * (z1 - z0);
        prop_assert!((acc.close_cycle(1.0) - want).abs() < 1e-9);
    }
}
