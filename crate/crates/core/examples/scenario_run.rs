//! Runs a bundled scenario file and prints its summary. Defaults to the
//! steady trot; pass another scenario path to run it instead.

use std::path::PathBuf;

use quadgait::scenario::{export_summary, run_scenario, RunOptions, Scenario};

fn main() -> quadgait::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/trot.toml")
    });
    let scenario = Scenario::load(&path)?;
    let opts = RunOptions { out_dir: Some(std::env::temp_dir().join("quadgait-runs")), ..RunOptions::default() };
    let art = run_scenario(&scenario, &opts)?;
    let s = &art.summary;
    println!("{}: {:.1} s simulated, failed {}", s.name, s.simulated, s.failed);
    println!("means {:#?}", s.means);
    for g in &s.per_gait {
        println!("  {:<6} samples {:5}  c_err {:.3}  v_err {:.3}", g.gait.name(), g.samples, g.c_avg_err, g.velocity_error);
    }
    let table = export_summary(std::slice::from_ref(s))?;
    table.write_csv(std::io::stdout())?;
    if let Some(d) = art.dir {
        println!("artefacts in {}", d.display());
    }
    Ok(())
}
