//! Shows how the selection reward scores stand and run under a forward
//! command, and how a gait change is penalised.

use nalgebra::Vector3;
use quadgait::gait::GaitId;
use quadgait::metrics::MetricsSample;
use quadgait::rewards::{psi, reward_gait_selection};

fn main() {
    for x in [0.0, 0.5, 1.0, 2.0, 4.0] {
        println!("psi({x}) = {:.4}", psi(x));
    }
    let m = MetricsSample { cot: Some(1.2), tau_pct: 0.3, c_avg_err: 0.1, w_ext: 0.4, ..MetricsSample::default() };
    let cmd = Vector3::new(0.8, 0.0, 0.0);
    let actual = Vector3::new(0.7, 0.0, 0.0);
    for (gait, prev) in [(GaitId::Stand, GaitId::Stand), (GaitId::Run, GaitId::Run), (GaitId::Run, GaitId::Trot)] {
        let r = reward_gait_selection(&m, &cmd, &actual, gait, prev);
        println!(
            "{:>5} after {:<5} r_v {:.3} r_stand {:6.2} r_smooth {:.3} psi [{:.3} {:.3} {:.3} {:.3}] total {:.3}",
            gait.name(), prev.name(), r.r_v, r.r_stand, r.r_smooth,
            r.psi_cot, r.psi_tau, r.psi_c, r.psi_w, r.total
        );
    }
}
