use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quadgait::config::AppConfig;
use quadgait::control::Controller;
use quadgait::gait::{contact_reference, GaitId, SchedulerState, NUM_LEGS};
use quadgait::learning::{
    train, Checkpoint, Env, GaitEnv, LocoEnv, LocoPolicy, PolicyKind, TrainOutcome,
};
use quadgait::learning::train::write_training_log;
use quadgait::scenario::{
    export_summary, run_scenario, CommandScript, ControllerSpec, RunArtifacts, RunOptions,
    RunSummary, Scenario, SelectorSpec, Waypoint,
};
use quadgait::{Error, Result};

#[derive(Parser)]
#[command(name = "quadgait", version, about = "Multi-gait quadruped experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Random seed (overrides the scenario's)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Terrain roughness level 0-3
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=3))]
    terrain_level: Option<u8>,
    /// Directory for run artefacts
    #[arg(long, global = true, default_value = "runs")]
    out_dir: PathBuf,
    /// TOML settings file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump scheduler phases and contact references for one gait
    GaitRefs {
        gait: GaitId,
        /// Length of the dump, s
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        /// Sample interval, s
        #[arg(long, default_value_t = 0.001)]
        dt: f64,
    },
    /// Run a scenario file
    Simulate { scenario: PathBuf },
    /// Oracle gait selection over a linear speed ramp on flat ground
    Sweep {
        #[arg(long, default_value_t = 1.5)]
        v_end: f64,
        /// Ramp length, s
        #[arg(long, default_value_t = 60.0)]
        ramp: f64,
    },
    /// Oracle selection trace at a constant command
    Select {
        #[arg(long, default_value_t = 0.8)]
        vx: f64,
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
    },
    /// Train a locomotion or gait-selection policy
    Train {
        which: Which,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        envs: Option<usize>,
        /// Locomotion checkpoint driving the robot while training the selector
        /// (scripted tracker when absent)
        #[arg(long)]
        locomotion: Option<PathBuf>,
    },
    /// Run a scenario with a trained policy in place of its controller or
    /// selector
    Eval { checkpoint: PathBuf, scenario: PathBuf },
    /// Compare finished runs (run directories or summary files)
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Loco,
    Gait,
}

fn load_config(common: &Common) -> Result<AppConfig> {
    match &common.config {
        Some(p) => AppConfig::load(p),
        None => Ok(AppConfig::default()),
    }
}

fn run_options(common: &Common, cfg: &AppConfig) -> RunOptions {
    RunOptions {
        out_dir: Some(common.out_dir.clone()),
        seed: common.seed,
        terrain_level: common.terrain_level,
        rig: Some(cfg.rig.clone()),
        dry_run: false,
    }
}

/// Prints a one-line account of a run; false when it failed.
fn report_run(a: &RunArtifacts) -> bool {
    let s = &a.summary;
    let m = &s.means;
    println!(
        "{}: {:.2} s simulated, v_err {:.3} m/s, c_avg_err {:.3}, CoT {}, tau% {:.3}, W_ext {:.3}, {} gait switches",
        s.name,
        s.simulated,
        m.velocity_error,
        m.c_avg_err,
        m.cot.map_or("-".into(), |c| format!("{c:.3}")),
        m.tau_pct,
        m.w_ext,
        s.gait_switches,
    );
    if let Some(dir) = &a.dir {
        println!("artefacts in {}", dir.display());
    }
    if let Some(f) = &s.failure {
        eprintln!("run failed: {f}");
    }
    !s.failed
}

fn gait_refs(gait: GaitId, duration: f64, dt: f64, cfg: &AppConfig, out: &Path) -> Result<()> {
    if !(dt > 0.0 && duration > 0.0) {
        return Err(Error::InvalidInput("duration and dt must be positive".into()));
    }
    let mut state = SchedulerState::new(gait, *cfg.rig.gaits.get(gait), 0.0);
    std::fs::create_dir_all(out)?;
    let path = out.join(format!("gait_refs_{gait}.csv"));
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["time".to_string(), "master_phase".to_string()];
    header.extend((0..NUM_LEGS).map(|l| format!("phase_{l}")));
    header.extend((0..NUM_LEGS).map(|l| format!("c_ref_{l}")));
    w.write_record(&header)?;
    let n = (duration / dt).round() as u64;
    for k in 0..=n {
        let t = k as f64 * dt;
        state.update_phases(t)?;
        let mut row = vec![format!("{t:.6}"), state.master_phase.to_string()];
        row.extend(state.phases.iter().map(|p| p.to_string()));
        row.extend(contact_reference(&state.phases, &state.effective_gait()).iter().map(|&c| u8::from(c).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep(v_end: f64, ramp: f64, common: &Common, cfg: &AppConfig) -> Result<bool> {
    let mut sc = Scenario::oracle_sweep(v_end, ramp);
    sc.selector = SelectorSpec::Oracle(cfg.selector.clone());
    let a = run_scenario(&sc, &run_options(common, cfg))?;
    let ok = report_run(&a);
    println!("speed  dominant  transition  run-share  CoT(trot)  CoT(run)");
    for b in a.summary.speed_bins.iter().flatten() {
        let f = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:.3}"));
        println!(
            "{:5.2}  {:8}  {:10}  {:9}  {:9}  {:8}",
            b.speed,
            b.dominant.map_or("-".into(), |g| g.to_string()),
            b.transition_phase.map_or("-".into(), |t| t.to_string()),
            f(b.run_fraction),
            f(b.cot[GaitId::Trot.index()]),
            f(b.cot[GaitId::Run.index()]),
        );
    }
    Ok(ok)
}

fn select(vx: f64, duration: f64, common: &Common, cfg: &AppConfig) -> Result<bool> {
    let sc = Scenario {
        name: "oracle_select".into(),
        seed: 0,
        duration,
        terrain: quadgait::scenario::TerrainSpec { level: 0, seed: 0 },
        controller: ControllerSpec::Scripted,
        selector: SelectorSpec::Oracle(cfg.selector.clone()),
        command: CommandScript::Piecewise {
            points: vec![Waypoint {
                t: 0.0,
                vx,
                vy: 0.0,
                yaw_rate: 0.0,
                gait: GaitId::Trot,
                ramp: 0.5,
            }],
        },
        output: None,
        rig: None,
    };
    let a = run_scenario(&sc, &run_options(common, cfg))?;
    for r in &a.selections {
        println!("{:6.2}  {}", r.time, r.gait);
    }
    Ok(report_run(&a))
}

fn finish_training(
    outcome: TrainOutcome,
    kind: PolicyKind,
    info_names: &[&str],
    out: &Path,
) -> Result<bool> {
    std::fs::create_dir_all(out)?;
    let ck_path = out.join("checkpoint.json");
    Checkpoint::new(kind, outcome.log.len(), outcome.policy).save(&ck_path)?;
    write_training_log(out.join("training_log.csv"), info_names, &outcome.log)?;
    println!("wrote {} and training_log.csv", ck_path.display());
    if let Some(a) = outcome.aborted {
        eprintln!("training aborted at iteration {}: {}", a.iteration, a.reason);
        return Ok(false);
    }
    Ok(true)
}

fn train_cmd(
    which: Which,
    iterations: Option<usize>,
    envs: Option<usize>,
    locomotion: Option<PathBuf>,
    common: &Common,
    cfg: &AppConfig,
) -> Result<bool> {
    let mut tcfg = cfg.train.clone();
    if let Some(i) = iterations {
        tcfg.iterations = i;
    }
    if let Some(n) = envs {
        tcfg.hypers.n_envs = n;
    }
    if let Some(s) = common.seed {
        tcfg.seed = s;
    }
    let n = tcfg.hypers.n_envs.max(1);
    let progress = |l: &quadgait::learning::IterationLog| {
        println!(
            "iter {:5}  reward {:12.4e}  episodes {:4}  std {:.3}",
            l.iteration, l.mean_reward, l.episodes, l.mean_std
        );
    };
    match which {
        Which::Loco => {
            let envs: Vec<LocoEnv> = (0..n)
                .map(|_| LocoEnv::new(cfg.rig.clone(), cfg.randomization.clone(), cfg.episode.seconds))
                .collect();
            let names = envs[0].info_names();
            let outcome = train(envs, tcfg, progress)?;
            finish_training(outcome, PolicyKind::Locomotion, names, &common.out_dir.join("loco"))
        }
        Which::Gait => {
            let controller = match locomotion {
                Some(p) => {
                    let ck = Checkpoint::load(&p)?;
                    if ck.kind != PolicyKind::Locomotion {
                        return Err(Error::InvalidInput(format!(
                            "{} is not a locomotion checkpoint",
                            p.display()
                        )));
                    }
                    Controller::Policy(Box::new(LocoPolicy::trained(ck.policy)))
                }
                None => Controller::scripted(),
            };
            let envs: Vec<GaitEnv> = (0..n)
                .map(|_| {
                    GaitEnv::new(
                        cfg.rig.clone(),
                        cfg.randomization.clone(),
                        cfg.episode.seconds,
                        controller.clone(),
                    )
                })
                .collect();
            let names = envs[0].info_names();
            let outcome = train(envs, tcfg, progress)?;
            finish_training(outcome, PolicyKind::GaitSelection, names, &common.out_dir.join("gait"))
        }
    }
}

fn eval(checkpoint: &Path, scenario: &Path, common: &Common, cfg: &AppConfig) -> Result<bool> {
    let ck = Checkpoint::load(checkpoint)?;
    let mut sc = Scenario::load(scenario)?;
    let path = checkpoint.to_path_buf();
    match ck.kind {
        PolicyKind::Locomotion => sc.controller = ControllerSpec::Policy { checkpoint: path },
        PolicyKind::GaitSelection => sc.selector = SelectorSpec::Policy { checkpoint: path },
        PolicyKind::Bandit => {
            return Err(Error::InvalidInput("bandit checkpoints cannot drive a robot".into()))
        }
    }
    let a = run_scenario(&sc, &run_options(common, cfg))?;
    Ok(report_run(&a))
}

fn report(runs: &[PathBuf], common: &Common) -> Result<bool> {
    let summaries = runs
        .iter()
        .map(|p| {
            if p.is_dir() {
                RunSummary::load(p.join("summary.json"))
            } else {
                RunSummary::load(p)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let table = export_summary(&summaries)?;
    std::fs::create_dir_all(&common.out_dir)?;
    let path = common.out_dir.join("comparison.csv");
    table.write_csv(std::fs::File::create(&path)?)?;
    table.write_csv(std::io::stdout())?;
    println!("{} failed run(s); table written to {}", table.failures, path.display());
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool> {
    let common = cli.common;
    let cfg = load_config(&common)?;
    match cli.command {
        Command::GaitRefs { gait, duration, dt } => {
            gait_refs(gait, duration, dt, &cfg, &common.out_dir).map(|_| true)
        }
        Command::Simulate { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let a = run_scenario(&sc, &run_options(&common, &cfg))?;
            Ok(report_run(&a))
        }
        Command::Sweep { v_end, ramp } => sweep(v_end, ramp, &common, &cfg),
        Command::Select { vx, duration } => select(vx, duration, &common, &cfg),
        Command::Train {
            which,
            iterations,
            envs,
            locomotion,
        } => train_cmd(which, iterations, envs, locomotion, &common, &cfg),
        Command::Eval {
            checkpoint,
            scenario,
        } => eval(&checkpoint, &scenario, &common, &cfg),
        Command::Report { runs } => report(&runs, &common),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
