use proptest::prelude::*;

use quadgait::control::Controller;
use quadgait::gait::{CommandU, GaitId};
use quadgait::metrics::MetricsSample;
use quadgait::rewards::psi;
use quadgait::runtime::{Rig, RigConfig};
use quadgait::selector::{oracle_select, unified_cost, SelectorConfig};

fn settled_rig(cmd: CommandU, seconds: f64) -> Rig {
    let mut rig = Rig::new(&RigConfig::default(), Controller::scripted()).unwrap();
    rig.set_command(cmd).unwrap();
    for _ in 0..(seconds * 100.0) as usize {
        rig.step_interval().unwrap();
    }
    rig
}

#[test]
fn action_rounding() {
    assert_eq!(GaitId::from_action(1.4), GaitId::Trot);
    assert_eq!(GaitId::from_action(-0.2), GaitId::Stand);
    assert_eq!(GaitId::from_action(7.6), GaitId::Hop);
    assert_eq!(GaitId::from_action(f64::NAN), GaitId::Stand);
}

#[test]
fn cost_examples() {
    let zero = MetricsSample::default();
    assert_eq!(unified_cost(&zero, false, 0.4), -4.0);
    let unit = MetricsSample { tau_pct: 1.0, ..MetricsSample::default() };
    let extra = unified_cost(&unit, true, 0.4) - unified_cost(&unit, false, 0.4);
    assert!((extra - 0.4 * psi(1.0)).abs() < 1e-12);
    assert!((extra - 0.0954).abs() < 1e-4);
}

#[test]
fn zero_command_selects_stand() {
    let rest = CommandU::default();
    let rig = settled_rig(rest, 0.5);
    let d = oracle_select(&rig, &rest, GaitId::Stand, &SelectorConfig::default()).unwrap();
    assert_eq!(d.gait, GaitId::Stand);
    assert!(!d.emergency);
}

#[test]
fn slow_trot_beats_run() {
    let cmd = CommandU { vx: 0.4, gait: GaitId::Trot, ..CommandU::default() };
    let rig = settled_rig(cmd, 2.0);
    let cfg = SelectorConfig { candidates: vec![GaitId::Trot, GaitId::Run], ..SelectorConfig::default() };
    for incumbent in [GaitId::Trot, GaitId::Run] {
        let d = oracle_select(&rig, &cmd, incumbent, &cfg).unwrap();
        let trot = d.rollouts[GaitId::Trot.index()];
        let run = d.rollouts[GaitId::Run.index()];
        assert!(trot.cot.unwrap() < run.cot.unwrap());
        if incumbent == GaitId::Trot {
            assert_eq!(d.gait, GaitId::Trot);
        }
    }
}

#[test]
fn identical_gaits_keep_the_incumbent() {
    let cmd = CommandU { vx: 0.4, gait: GaitId::Trot, ..CommandU::default() };
    let mut rig = settled_rig(cmd, 1.0);
    let trot = *rig.scheduler.table.get(GaitId::Trot);
    rig.scheduler.table.set(GaitId::Limp, trot).unwrap();
    for incumbent in [GaitId::Trot, GaitId::Limp] {
        for order in [[GaitId::Trot, GaitId::Limp], [GaitId::Limp, GaitId::Trot]] {
            let cfg = SelectorConfig { candidates: order.to_vec(), ..SelectorConfig::default() };
            assert_eq!(oracle_select(&rig, &cmd, incumbent, &cfg).unwrap().gait, incumbent);
        }
    }
}

#[test]
fn oracle_is_deterministic() {
    let cmd = CommandU { vx: 0.6, gait: GaitId::Trot, ..CommandU::default() };
    let rig = settled_rig(cmd, 1.0);
    let cfg = SelectorConfig { candidates: vec![GaitId::Trot, GaitId::Run, GaitId::Amble], ..SelectorConfig::default() };
    let a = oracle_select(&rig, &cmd, GaitId::Trot, &cfg).unwrap();
    let b = oracle_select(&rig, &cmd, GaitId::Trot, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn short_horizon_is_rejected() {
    let rig = settled_rig(CommandU::default(), 0.1);
    let cfg = SelectorConfig { horizon: 0.4, ..SelectorConfig::default() };
    assert!(oracle_select(&rig, &CommandU::default(), GaitId::Stand, &cfg).is_err());
}

fn metric() -> impl Strategy<Value = f64> {
    0.0..3.0f64
}

proptest! {
    #[test]
    fn cost_grows_with_each_metric(base in prop::array::uniform4(metric()), k in 0usize..4, bump in 0.01..2.0f64, changed in any::<bool>()) {
        let make = |v: [f64; 4]| MetricsSample { cot: Some(v[0]), tau_pct: v[1], c_avg_err: v[2], w_ext: v[3], ..MetricsSample::default() };
        let mut more = base;
        more[k] += bump;
        let (a, b) = (unified_cost(&make(base), changed, 0.4), unified_cost(&make(more), changed, 0.4));
        prop_assert!(b >= a);
        // strict while the affected ψ is not already flat
        if psi(base[k]) > 1e-12 {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn rounding_always_lands_on_a_gait(raw in -100.0..100.0f64) {
        let g = GaitId::from_action(raw);
        let want = raw.clamp(0.0, 7.0).round() as usize;
        prop_assert_eq!(g.index(), want);
    }
}
