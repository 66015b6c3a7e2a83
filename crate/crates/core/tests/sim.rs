use nalgebra::Vector3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadgait::sim::{
    leg_fk, leg_ik, pd_torques, read_sensors, NoiseConfig, RobotModel, SimState, Simulator,
    Terrain, TerrainConfig,
};
use quadgait::GRAVITY;

fn airborne(model: &RobotModel, height: f64) -> Simulator {
    let mut sim = Simulator::new(model.clone(), Terrain::flat()).unwrap();
    sim.state.position.z = height;
    sim.state.update_feet(model);
    sim
}

#[test]
fn pd_law_examples() {
    let m = RobotModel::default();
    let q = [0.1; 12];
    let tau = pd_torques(&[0.2; 12], &q, &[0.0; 12], &m);
    assert!(tau.iter().all(|t| (t - 2.5).abs() < 1e-12));
    let tau = pd_torques(&[10.1; 12], &q, &[0.0; 12], &m);
    assert!(tau.iter().all(|&t| t == 33.5));
    let tau = pd_torques(&[-9.9; 12], &q, &[0.0; 12], &m);
    assert!(tau.iter().all(|&t| t == -33.5));
}

#[test]
fn bent_knee_reach() {
    let m = RobotModel::default();
    let foot = leg_fk(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2), 0, &m);
    // distance in the sagittal plane from the hip pitch axis
    let reach = foot.x.hypot(foot.z);
    assert!((reach - 0.08f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ik_inverts_nominal_stance() {
    let m = RobotModel::default();
    let q = m.nominal_joints();
    for leg in 0..4 {
        let angles = Vector3::new(q[3 * leg], q[3 * leg + 1], q[3 * leg + 2]);
        let foot = leg_fk(&angles, leg, &m);
        assert!((foot - m.nominal_foot_hip(leg)).norm() < 1e-9);
        let (back, ok) = leg_ik(&foot, leg, &m);
        assert!(ok);
        assert!((back - angles).norm() < 1e-9);
    }
    let straight = leg_fk(&Vector3::zeros(), 0, &m);
    let (q, _) = leg_ik(&straight, 0, &m);
    assert!(q[2].abs() < 1e-6);
    let (_, ok) = leg_ik(&Vector3::new(0.0, 0.0838, -1.0), 0, &m);
    assert!(!ok);
}

#[test]
fn zero_gravity_body_at_rest_stays_put() {
    let m = RobotModel::default();
    let mut sim = airborne(&m, 2.0);
    sim.gravity = 0.0;
    let before = sim.state.clone();
    for _ in 0..100 {
        sim.step(&[0.0; 12], 0.001).unwrap();
    }
    assert_eq!(sim.state.position, before.position);
    assert_eq!(sim.state.rotation, before.rotation);
    assert_eq!(sim.state.q, before.q);
    assert!((sim.state.time - 0.1).abs() < 1e-12);
}

#[test]
fn free_fall_drop() {
    let m = RobotModel::default();
    let mut sim = airborne(&m, 5.0);
    for _ in 0..100 {
        sim.step(&[0.0; 12], 0.001).unwrap();
    }
    let dz = sim.state.position.z - 5.0;
    assert!((dz + 0.5 * GRAVITY * 0.01).abs() < 1e-9);
    assert!((dz + 0.049).abs() < 1e-3);
    assert_eq!(sim.state.f_grf, [0.0; 4]);
    assert_eq!(sim.state.contact, [false; 4]);
}

#[test]
fn standing_robot_carries_its_weight() {
    let m = RobotModel::default();
    let mut sim = Simulator::new(m.clone(), Terrain::flat()).unwrap();
    let hold = m.standing_targets(GRAVITY);
    for _ in 0..1000 {
        sim.step_pd(&hold, 0.001).unwrap();
    }
    let total: f64 = sim.state.f_grf.iter().sum();
    assert!((total - m.base_mass * GRAVITY).abs() < 0.02 * m.base_mass * GRAVITY);
    assert_eq!(sim.state.contact, [true; 4]);
    for f in sim.state.foot_forces {
        assert!(f.xy().norm() <= sim.terrain.friction * f.z + 1e-9);
    }
}

#[test]
fn pulling_feet_release() {
    let m = RobotModel::default();
    let mut sim = Simulator::new(m.clone(), Terrain::flat()).unwrap();
    // torques that would pull the feet into the air
    let hold = pd_torques(&m.standing_targets(GRAVITY), &sim.state.q, &sim.state.qd, &m);
    sim.step(&hold.map(|t| -t), 0.001).unwrap();
    assert_eq!(sim.state.contact, [false; 4]);
    for leg in 0..4 {
        assert!(sim.state.f_grf[leg] >= 0.0);
    }
}

#[test]
fn clean_sensors_read_state() {
    let m = RobotModel::default();
    let state = SimState::standing(&m, &Terrain::flat(), 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s = read_sensors(&state, GRAVITY, &NoiseConfig::disabled(), &mut rng);
    assert_eq!(s.q, state.q);
    assert_eq!(s.qd, state.qd);
    assert_eq!(s.omega, state.ang_vel);
    assert!((s.accel - Vector3::new(0.0, 0.0, GRAVITY)).norm() < 1e-12);
}

#[test]
fn tilted_static_accelerometer_sees_gravity_in_base_frame() {
    let m = RobotModel::default();
    let mut state = SimState::standing(&m, &Terrain::flat(), 0.0, 0.0);
    let roll = nalgebra::Rotation3::from_euler_angles(0.3, 0.0, 0.0);
    state.rotation = *roll.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s = read_sensors(&state, GRAVITY, &NoiseConfig::disabled(), &mut rng);
    let want = roll.transpose() * Vector3::new(0.0, 0.0, GRAVITY);
    assert!((s.accel - want).norm() < 1e-12);
}

#[test]
fn terrain_levels() {
    let cfg = TerrainConfig::default();
    let flat = Terrain::generate(0, 5, &cfg).unwrap();
    assert!(flat.heights().iter().all(|&h| h == 0.0));
    let rough = Terrain::generate(3, 5, &cfg).unwrap();
    assert!((rough.relief() - 0.20).abs() < 1e-6);
    let again = Terrain::generate(3, 5, &cfg).unwrap();
    assert_eq!(rough.heights(), again.heights());
    let other = Terrain::generate(3, 6, &cfg).unwrap();
    assert_ne!(rough.heights(), other.heights());
    assert!(Terrain::generate(4, 5, &cfg).is_err());
}

#[test]
fn replay_is_bit_identical() {
    let run = || {
        let m = RobotModel::default();
        let terrain = Terrain::generate(2, 9, &TerrainConfig::default()).unwrap();
        let mut sim = Simulator::new(m.clone(), terrain).unwrap();
        let hold = m.standing_targets(GRAVITY);
        for k in 0..500 {
            let mut q = hold;
            q[1] += 0.2 * (k as f64 * 0.02).sin();
            sim.step_pd(&q, 0.001).unwrap();
        }
        sim.state
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn fk_ik_round_trip(a in -0.4..0.4f64, h in -0.8..0.8f64, k in -2.4..-0.3f64, leg in 0usize..4) {
        let m = RobotModel::default();
        let q = Vector3::new(a, h, k);
        // the solver covers feet below the hip pitch axis
        let below = -0.2 * h.cos() - 0.2 * (h + k).cos();
        prop_assume!(below < -0.02);
        let (back, ok) = leg_ik(&leg_fk(&q, leg, &m), leg, &m);
        prop_assert!(ok);
        prop_assert!((back - q).norm() < 1e-6, "{back} vs {q}");
    }

    #[test]
    fn pd_torques_respect_limits(q_star in prop::array::uniform12(-20.0..20.0f64), qd in prop::array::uniform12(-50.0..50.0f64)) {
        let m = RobotModel::default();
        for t in pd_torques(&q_star, &[0.0; 12], &qd, &m) {
            prop_assert!(t.abs() <= 33.5);
        }
    }

    #[test]
    fn contact_forces_stay_in_cone(seed in 0u64..1000, amp in 0.0..0.5f64) {
        let m = RobotModel::default();
        let mut sim = Simulator::new(m.clone(), Terrain::flat()).unwrap();
        let hold = m.standing_targets(GRAVITY);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        for _ in 0..50 {
            let q: [f64; 12] = std::array::from_fn(|j| hold[j] + amp * rng.random_range(-1.0..1.0));
            if sim.step_pd(&q, 0.001).is_err() {
                break;
            }
            for f in sim.state.foot_forces {
                prop_assert!(f.z >= 0.0);
                prop_assert!(f.xy().norm() <= sim.terrain.friction * f.z + 1e-9);
            }
        }
    }
}
