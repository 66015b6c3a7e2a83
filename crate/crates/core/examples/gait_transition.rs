//! Blends trot into bound and prints the transition progress.

use nalgebra::Vector3;
use quadgait::gait::{froude_number, transition_cycles, GaitId, GaitScheduler, GaitTable};

fn main() -> quadgait::Result<()> {
    let speed = 0.8;
    let feet = [Vector3::zeros(); 4];
    let mut s = GaitScheduler::new(GaitTable::default(), GaitId::Trot, 0.25, 0.28, feet);
    let fr = froude_number(speed, s.hip_height)?;
    println!("Froude {fr:.3}, nominal transition cycles {:.2}", transition_cycles(fr));
    s.request_gait(GaitId::Bound, speed)?;
    println!("resolution {:.4}, cycles {:.2}", s.state.resolution, s.state.transition_cycles);
    let dt = 0.002;
    let mut t = 0.0;
    while s.state.kappa() {
        t += dt;
        s.advance(t)?;
        if (t * 1000.0).round() as u64 % 50 == 0 {
            let g = s.state.effective_gait();
            println!(
                "t {t:.2}  progress {:.3}  duty {:.3}  offsets {:.2?}",
                s.state.transition_progress, g.duty_factor, g.phase_offsets
            );
        }
    }
    println!("now {} after {t:.3} s", s.state.active_id.name());
    Ok(())
}
