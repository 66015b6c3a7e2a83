//! Stands for a second, then trots at 0.5 m/s with the scripted tracker.

use quadgait::control::Controller;
use quadgait::gait::{CommandU, GaitId};
use quadgait::runtime::{Rig, RigConfig};

fn main() -> quadgait::Result<()> {
    let mut rig = Rig::new(&RigConfig::default(), Controller::scripted())?;
    for step in 0..500 {
        if step == 100 {
            rig.set_command(CommandU { vx: 0.5, gait: GaitId::Trot, ..CommandU::default() })?;
        }
        let (m, r) = rig.step_interval()?;
        if step % 50 == 49 {
            let v = rig.tracking_velocity();
            let p = rig.sim.state.position;
            println!(
                "t {:4.1}  x {:6.3}  z {:.3}  vx {:6.3}  tau% {:.3}  c_err {:.3}  r_v {:.3}",
                rig.time(), p.x, p.z, v.x, m.tau_pct, m.c_avg_err, r.r_v
            );
        }
        if rig.fallen() {
            eprintln!("fell at t = {:.2}", rig.time());
            std::process::exit(1);
        }
    }
    Ok(())
}
