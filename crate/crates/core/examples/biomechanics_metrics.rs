//! Runs each moving gait at 0.5 m/s and reports its transition metrics.

use quadgait::control::Controller;
use quadgait::gait::{CommandU, GaitId};
use quadgait::metrics::stride_cv;
use quadgait::runtime::{Rig, RigConfig};

fn main() -> quadgait::Result<()> {
    println!("{:<6} {:>7} {:>7} {:>7} {:>8} {:>7}", "gait", "CoT", "tau%", "c_err", "W_ext", "CV");
    for gait in [GaitId::Trot, GaitId::Run, GaitId::Pronk, GaitId::Limp, GaitId::Amble, GaitId::Hop] {
        let mut rig = Rig::new(&RigConfig::default(), Controller::scripted())?;
        rig.set_command(CommandU { vx: 0.5, gait, ..CommandU::default() })?;
        let (mut cot, mut tau, mut cerr, mut w, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for step in 0..400 {
            let (m, _) = rig.step_interval()?;
            // skip the first second while the gait settles
            if step >= 100 {
                cot += m.cot.unwrap_or(0.0);
                tau += m.tau_pct;
                cerr += m.c_avg_err;
                w += m.w_ext;
                n += 1.0;
            }
        }
        let cv = stride_cv(&rig.touchdowns, Some((1.0, rig.time())));
        println!(
            "{:<6} {:7.3} {:7.3} {:7.3} {:8.3} {:>7}",
            gait.name(), cot / n, tau / n, cerr / n, w / n,
            cv.map_or("-".into(), |c| format!("{c:.3}"))
        );
    }
    Ok(())
}
