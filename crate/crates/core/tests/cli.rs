use std::process::Command;

fn quadgait(args: &[&str], out: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_quadgait"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn gait_refs_writes_a_table() {
    let d = tempfile::tempdir().unwrap();
    let o = quadgait(&["gait-refs", "trot", "--duration", "0.1"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_then_report() {
    let d = tempfile::tempdir().unwrap();
    let scenario = d.path().join("short.toml");
    std::fs::write(
        &scenario,
        "name = \"short\"\nduration = 0.3\n[command]\nkind = \"piecewise\"\npoints = [{ t = 0.0, vx = 0.3, gait = \"trot\" }]\n",
    )
    .unwrap();
    let o = quadgait(&["simulate", scenario.to_str().unwrap(), "--seed", "3"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = d.path().join("short");
    assert!(run.join("summary.json").exists());
    let o = quadgait(&["report", run.to_str().unwrap()], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failures_exit_nonzero() {
    let d = tempfile::tempdir().unwrap();
    assert!(!quadgait(&["simulate", "/nonexistent.toml"], d.path()).status.success());
    assert!(!quadgait(&["gait-refs", "gallop"], d.path()).status.success());
    assert!(!quadgait(&["gait-refs", "trot", "--terrain-level", "9"], d.path()).status.success());
}
