use std::path::Path;

use quadgait::gait::GaitId;
use quadgait::scenario::{
    export_summary, run_scenario, RunOptions, RunSummary, Scenario, TIMESERIES_SCHEMA,
};

fn scenario_file(name: &str) -> Scenario {
    Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
}

fn short(name: &str, duration: f64) -> Scenario {
    Scenario { duration, ..scenario_file(name) }
}

fn dry() -> RunOptions {
    RunOptions { dry_run: true, ..RunOptions::default() }
}

#[test]
fn bundled_scenarios_parse() {
    for name in ["trot.toml", "gait_cycle.toml", "sinusoid.toml", "sweep.toml"] {
        scenario_file(name);
    }
}

#[test]
fn parse_errors_name_the_line() {
    let text = "name = \"bad\"\n\nduration = \"long\"\n";
    let err = Scenario::from_toml_str(text, "bad.toml").unwrap_err().to_string();
    assert!(err.contains("bad.toml"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    let err = Scenario::from_toml_str("name = \"x\"\nduration = = 1\n", "t").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn rejects_nonpositive_duration() {
    assert!(run_scenario(&short("trot.toml", 0.0), &dry()).is_err());
}

#[test]
fn runs_replay_bit_exactly() {
    let s = short("trot.toml", 1.0);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let runs: Vec<_> = dirs
        .iter()
        .map(|d| {
            let opts = RunOptions { out_dir: Some(d.path().to_path_buf()), seed: Some(11), ..RunOptions::default() };
            run_scenario(&s, &opts).unwrap()
        })
        .collect();
    assert_eq!(runs[0].summary, runs[1].summary);
    let read = |r: &quadgait::scenario::RunArtifacts| std::fs::read(r.dir.as_ref().unwrap().join("timeseries.csv")).unwrap();
    assert_eq!(read(&runs[0]), read(&runs[1]));
}

#[test]
fn artefacts_are_written() {
    let d = tempfile::tempdir().unwrap();
    let opts = RunOptions { out_dir: Some(d.path().to_path_buf()), ..RunOptions::default() };
    let art = run_scenario(&short("trot.toml", 0.5), &opts).unwrap();
    let dir = art.dir.unwrap();
    let text = std::fs::read_to_string(dir.join("timeseries.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TIMESERIES_SCHEMA));
    assert!(lines.next().unwrap().starts_with("time,cmd_vx"));
    // one row per selection tick
    assert_eq!(lines.count(), 50);
    let back = RunSummary::load(dir.join("summary.json")).unwrap();
    assert_eq!(back, art.summary);
}

#[test]
fn seed_and_terrain_overrides_apply() {
    let opts = RunOptions { seed: Some(4), terrain_level: Some(2), ..dry() };
    let s = run_scenario(&short("trot.toml", 0.2), &opts).unwrap().summary;
    assert_eq!(s.seed, 4);
    assert_eq!(s.terrain_level, 2);
}

#[test]
fn gait_cycle_reports_each_gait() {
    let s = run_scenario(&short("gait_cycle.toml", 3.0), &dry()).unwrap().summary;
    assert!(!s.failed, "{:?}", s.failure);
    let gaits: Vec<GaitId> = s.per_gait.iter().map(|g| g.gait).collect();
    for g in [GaitId::Trot, GaitId::Run, GaitId::Pronk] {
        assert!(gaits.contains(&g), "{gaits:?}");
    }
    for g in &s.per_gait {
        assert!(g.samples > 0);
        assert!((0.0..=1.0).contains(&g.c_avg_err));
    }
    assert!(s.gait_switches >= 2);
}

#[test]
fn comparison_normalizes_to_best() {
    let base = run_scenario(&short("trot.toml", 0.5), &dry()).unwrap().summary;
    let one = export_summary(std::slice::from_ref(&base)).unwrap();
    assert_eq!(one.failures, 0);
    let n = one.rows[0].normalized.unwrap();
    assert_eq!(n[1], Some(1.0));
    assert_eq!(n[3], Some(1.0));

    let mut worse = base.clone();
    worse.name = "worse".into();
    worse.means.tau_pct *= 2.0;
    let mut broken = base.clone();
    broken.name = "broken".into();
    broken.failed = true;
    broken.means.tau_pct = 0.0;
    let t = export_summary(&[base, worse, broken]).unwrap();
    assert_eq!(t.failures, 1);
    assert_eq!(t.rows[0].normalized.unwrap()[1], Some(1.0));
    assert!((t.rows[1].normalized.unwrap()[1].unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(t.rows[2].normalized, None);

    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 4);
    assert!(export_summary(&[]).is_err());
}
