//! Compares the estimator's output with the simulator's true state while
//! the robot trots on noisy sensors.

use quadgait::control::Controller;
use quadgait::gait::{CommandU, GaitId};
use quadgait::runtime::{Rig, RigConfig};

fn main() -> quadgait::Result<()> {
    let mut rig = Rig::new(&RigConfig::default(), Controller::scripted())?;
    rig.set_command(CommandU { vx: 0.4, gait: GaitId::Trot, ..CommandU::default() })?;
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}  contact est / true", "t", "vx true", "vx est", "z true", "z est");
    for step in 0..300 {
        rig.step_interval()?;
        if step % 25 == 24 {
            let s = &rig.sim.state;
            let e = &rig.estimate;
            let truth: Vec<bool> = (0..4).map(|leg| s.is_pinned(leg)).collect();
            println!(
                "{:5.2} {:8.3} {:8.3} {:8.3} {:8.3}  {:?} / {:?}",
                rig.time(), s.lin_vel.x, e.lin_vel.x, s.position.z, e.height, e.contact, truth
            );
        }
    }
    Ok(())
}
