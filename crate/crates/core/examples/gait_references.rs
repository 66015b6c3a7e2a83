//! Prints the gait table and a contact timeline for each gait.

use quadgait::gait::{contact_reference, GaitId, GaitTable, SchedulerState};

fn main() -> quadgait::Result<()> {
    let table = GaitTable::default();
    println!("{:<6} {:>6} {:>5}  offsets", "gait", "period", "duty");
    for (id, g) in table.iter() {
        println!("{:<6} {:>6.2} {:>5.2}  {:?}", id.name(), g.period, g.duty_factor, g.phase_offsets);
    }
    for id in GaitId::ALL.into_iter().filter(|g| !g.is_stand()) {
        let g = *table.get(id);
        let mut s = SchedulerState::new(id, g, 0.0);
        let mut rows = [String::new(), String::new(), String::new(), String::new()];
        for k in 0..40 {
            s.update_phases(k as f64 * 0.02)?;
            for (row, c) in rows.iter_mut().zip(contact_reference(&s.phases, &g)) {
                row.push(if c { '#' } else { '.' });
            }
        }
        println!("\n{} (0.8 s, 20 ms per column)", id.name());
        for (leg, row) in rows.iter().enumerate() {
            println!("  leg {leg} {row}");
        }
    }
    Ok(())
}
