//! Foothold placement and swing-height references.

use nalgebra::{Matrix3, Vector2, Vector3};

use super::{GaitParams, NUM_LEGS};
use crate::error::{Error, Result};

/// Allowed foothold deviation from the nominal local foot position (x, y, z), m.
pub const FOOTHOLD_CLAMP: [f64; 3] = [0.3, 0.2, 0.1];

/// Swing apex height as a fraction of the nominal base height.
pub const SWING_PEAK_FRACTION: f64 = 0.25;

/// The slice of robot state the scheduler needs.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseSnapshot {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    /// World-frame linear velocity.
    pub lin_vel: Vector3<f64>,
    /// Body-frame angular velocity.
    pub ang_vel: Vector3<f64>,
    /// World-frame foot positions.
    pub feet: [Vector3<f64>; NUM_LEGS],
}

impl BaseSnapshot {
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    pub fn yaw_rate(&self) -> f64 {
        (self.rotation * self.ang_vel).z
    }
}

fn rot2(yaw: f64) -> nalgebra::Matrix2<f64> {
    let (s, c) = yaw.sin_cos();
    nalgebra::Matrix2::new(c, -s, s, c)
}

/// Raibert touchdown targets for swing legs, world x and y.
///
/// Target = hip ground projection + (d T / 2) v_hip + k_r (v_B − v_cmd),
/// expressed in the heading frame and clamped to the foothold box around the
/// nominal foot position. Stance legs (`c_ref[i]`) keep their current
/// positions. `v_cmd` is (v_x, v_y, ω_z) in the heading frame.
pub fn raibert_footholds(
    robot: &BaseSnapshot,
    v_cmd: &Vector3<f64>,
    gait: &GaitParams,
    nominal_feet: &[Vector3<f64>; NUM_LEGS],
    c_ref: &[bool; NUM_LEGS],
    raibert_gain: f64,
) -> ([f64; NUM_LEGS], [f64; NUM_LEGS]) {
    let yaw = robot.yaw();
    let heading = rot2(yaw);
    let v_world = Vector2::new(robot.lin_vel.x, robot.lin_vel.y);
    let v_head = heading.transpose() * v_world;
    let yaw_rate = robot.yaw_rate();
    let stance_time = gait.duty_factor * gait.period;
    let base = Vector2::new(robot.position.x, robot.position.y);

    let mut px = [0.0; NUM_LEGS];
    let mut py = [0.0; NUM_LEGS];
    for i in 0..NUM_LEGS {
        if c_ref[i] {
            px[i] = robot.feet[i].x;
            py[i] = robot.feet[i].y;
            continue;
        }
        let nominal = Vector2::new(nominal_feet[i].x, nominal_feet[i].y);
        let v_hip = v_head + Vector2::new(-yaw_rate * nominal.y, yaw_rate * nominal.x);
        let mut offset = 0.5 * stance_time * v_hip
            + raibert_gain * (v_head - Vector2::new(v_cmd.x, v_cmd.y));
        if !offset.iter().all(|v| v.is_finite()) {
            offset = Vector2::zeros();
        }
        offset.x = offset.x.clamp(-FOOTHOLD_CLAMP[0], FOOTHOLD_CLAMP[0]);
        offset.y = offset.y.clamp(-FOOTHOLD_CLAMP[1], FOOTHOLD_CLAMP[1]);
        let target = base + heading * (nominal + offset);
        px[i] = target.x;
        py[i] = target.y;
    }
    (px, py)
}

/// Swing foot height: a half-sine over the swing interval peaking at
/// `0.25 z_nom` above `terrain_z`.
pub fn swing_height_reference(
    phase: f64,
    gait: &GaitParams,
    nominal_height: f64,
    terrain_z: f64,
) -> Result<f64> {
    let d = gait.duty_factor;
    if phase < d || d >= 1.0 {
        return Err(Error::Contract(format!(
            "swing height requested for a stance leg (phase {phase}, duty {d})"
        )));
    }
    let progress = ((phase - d) / (1.0 - d)).clamp(0.0, 1.0);
    let lift = SWING_PEAK_FRACTION * nominal_height * (std::f64::consts::PI * progress).sin();
    Ok(terrain_z + lift.min(FOOTHOLD_CLAMP[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{GaitId, GaitTable};

    fn nominal() -> [Vector3<f64>; NUM_LEGS] {
        [
            Vector3::new(0.183, 0.131, -0.28),
            Vector3::new(0.183, -0.131, -0.28),
            Vector3::new(-0.183, 0.131, -0.28),
            Vector3::new(-0.183, -0.131, -0.28),
        ]
    }

    fn robot(v: Vector3<f64>) -> BaseSnapshot {
        BaseSnapshot {
            position: Vector3::new(1.0, 2.0, 0.28),
            rotation: Matrix3::identity(),
            lin_vel: v,
            ang_vel: Vector3::zeros(),
            feet: [Vector3::new(9.0, 9.0, 0.0); NUM_LEGS],
        }
    }

    #[test]
    fn zero_velocity_lands_under_hip() {
        let trot = *GaitTable::default().get(GaitId::Trot);
        let (px, py) = raibert_footholds(
            &robot(Vector3::zeros()),
            &Vector3::zeros(),
            &trot,
            &nominal(),
            &[false; 4],
            0.03,
        );
        for i in 0..4 {
            assert!((px[i] - (1.0 + nominal()[i].x)).abs() < 1e-12);
            assert!((py[i] - (2.0 + nominal()[i].y)).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_trot_offset() {
        let trot = *GaitTable::default().get(GaitId::Trot);
        let v = Vector3::new(1.0, 0.0, 0.0);
        let (px, _) = raibert_footholds(&robot(v), &v, &trot, &nominal(), &[false; 4], 0.03);
        assert!((px[0] - (1.0 + 0.183 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn large_velocity_is_clamped() {
        let trot = *GaitTable::default().get(GaitId::Trot);
        let v = Vector3::new(10.0, -10.0, 0.0);
        let (px, py) =
            raibert_footholds(&robot(v), &Vector3::zeros(), &trot, &nominal(), &[false; 4], 0.03);
        assert!((px[0] - (1.0 + 0.183 + 0.3)).abs() < 1e-12);
        assert!((py[0] - (2.0 + 0.131 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn stance_legs_hold_position() {
        let trot = *GaitTable::default().get(GaitId::Trot);
        let (px, py) = raibert_footholds(
            &robot(Vector3::new(1.0, 0.0, 0.0)),
            &Vector3::zeros(),
            &trot,
            &nominal(),
            &[true, false, false, true],
            0.03,
        );
        assert_eq!((px[0], py[0]), (9.0, 9.0));
        assert_eq!((px[3], py[3]), (9.0, 9.0));
    }

    #[test]
    fn swing_profile_points() {
        let trot = *GaitTable::default().get(GaitId::Trot);
        assert!((swing_height_reference(0.5, &trot, 0.28, 0.1).unwrap() - 0.1).abs() < 1e-12);
        let mid = swing_height_reference(0.75, &trot, 0.28, 0.0).unwrap();
        assert!((mid - 0.07).abs() < 1e-12);
        let end = swing_height_reference(1.0 - 1e-12, &trot, 0.28, 0.0).unwrap();
        assert!(end.abs() < 1e-9);
        assert!(matches!(
            swing_height_reference(0.2, &trot, 0.28, 0.0),
            Err(Error::Contract(_))
        ));
    }
}
