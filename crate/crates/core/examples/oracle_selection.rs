//! Asks the rollout oracle for a gait at a few commanded speeds and prints
//! each candidate's cost.

use quadgait::control::Controller;
use quadgait::gait::{CommandU, GaitId};
use quadgait::runtime::{Rig, RigConfig};
use quadgait::selector::{oracle_select, SelectorConfig};

fn main() -> quadgait::Result<()> {
    let cfg = SelectorConfig::default();
    for vx in [0.0, 0.3, 0.8, 1.3] {
        let cmd = CommandU { vx, gait: if vx > 0.0 { GaitId::Trot } else { GaitId::Stand }, ..CommandU::default() };
        let mut rig = Rig::new(&RigConfig::default(), Controller::scripted())?;
        rig.set_command(cmd)?;
        for _ in 0..150 {
            rig.step_interval()?;
        }
        let d = oracle_select(&rig, &cmd, cmd.gait, &cfg)?;
        println!("vx {vx:.1}: picked {}{}", d.gait.name(), if d.emergency { " (emergency)" } else { "" });
        for g in &cfg.candidates {
            let r = d.rollouts[g.index()];
            let show = |x: Option<f64>| x.map_or("failed".to_string(), |c| format!("{c:.3}"));
            println!("    {:<6} cost {:>8}  CoT {:>8}", g.name(), show(r.cost), show(r.cot));
        }
    }
    Ok(())
}
