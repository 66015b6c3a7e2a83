//! Abduction-hip-knee leg kinematics in the hip frame (x forward, z up).

use nalgebra::{Matrix3, Vector3};

use super::RobotModel;

/// Foot position in the hip frame for joint angles `[abduction, hip, knee]`.
pub fn leg_fk(q: &Vector3<f64>, leg: usize, model: &RobotModel) -> Vector3<f64> {
    let [l1, l2, l3] = model.link_lengths;
    let side = RobotModel::SIDE[leg];
    let (a, h, k) = (q[0], q[1], q[2]);
    let x = -l2 * h.sin() - l3 * (h + k).sin();
    let zp = -l2 * h.cos() - l3 * (h + k).cos();
    let yp = side * l1;
    let (sa, ca) = a.sin_cos();
    Vector3::new(x, yp * ca - zp * sa, yp * sa + zp * ca)
}

/// ∂p_foot/∂q in the hip frame, columns abduction, hip, knee.
pub fn leg_jacobian(q: &Vector3<f64>, leg: usize, model: &RobotModel) -> Matrix3<f64> {
    let [l1, l2, l3] = model.link_lengths;
    let side = RobotModel::SIDE[leg];
    let (a, h, k) = (q[0], q[1], q[2]);
    let (sa, ca) = a.sin_cos();
    let (shk, chk) = (h + k).sin_cos();
    let x = -l2 * h.sin() - l3 * shk;
    let zp = -l2 * h.cos() - l3 * chk;
    let yp = side * l1;
    let y = yp * ca - zp * sa;
    let z = yp * sa + zp * ca;
    Matrix3::new(
        0.0, zp, -l3 * chk, //
        -z, x * sa, -l3 * shk * sa, //
        y, -x * ca, l3 * shk * ca,
    )
}

/// Analytic inverse kinematics, knee-backward branch (knee ≤ 0).
///
/// Returns the joint angles and whether the target was reachable. An
/// unreachable target is projected onto the workspace boundary first.
pub fn leg_ik(p: &Vector3<f64>, leg: usize, model: &RobotModel) -> (Vector3<f64>, bool) {
    let [l1, l2, l3] = model.link_lengths;
    let side = RobotModel::SIDE[leg];
    let mut reachable = true;

    let mut r_yz = p.y.hypot(p.z);
    if r_yz < l1 {
        reachable = r_yz >= l1 - 1e-12;
        r_yz = l1;
    }
    let zp = -(r_yz * r_yz - l1 * l1).max(0.0).sqrt();
    let a = if p.y == 0.0 && p.z == 0.0 {
        0.0
    } else {
        p.z.atan2(p.y) - zp.atan2(side * l1)
    };
    let a = wrap_pi(a);

    let mut x = p.x;
    let mut zp = zp;
    let mut len = x.hypot(zp);
    let (min_len, max_len) = ((l2 - l3).abs(), l2 + l3);
    if len > max_len || len < min_len {
        reachable = len <= max_len + 1e-12 && len >= min_len - 1e-12;
        let target = len.clamp(min_len, max_len);
        if len > 0.0 {
            x *= target / len;
            zp *= target / len;
        } else {
            zp = -target;
        }
        len = target;
    }
    let cos_k = ((len * len - l2 * l2 - l3 * l3) / (2.0 * l2 * l3)).clamp(-1.0, 1.0);
    let k = -cos_k.acos();
    let big_a = l2 + l3 * k.cos();
    let big_b = l3 * k.sin();
    let h = (-x).atan2(-zp) - big_b.atan2(big_a);
    (Vector3::new(a, wrap_pi(h), k), reachable)
}

fn wrap_pi(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w.is_finite() {
        w
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_pose_is_straight_down() {
        let m = RobotModel::default();
        let p = leg_fk(&Vector3::zeros(), 0, &m);
        assert!((p - Vector3::new(0.0, 0.0838, -0.4)).norm() < 1e-15);
        let p = leg_fk(&Vector3::zeros(), 1, &m);
        assert!((p - Vector3::new(0.0, -0.0838, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn right_angle_knee_distance() {
        let m = RobotModel::default();
        let p = leg_fk(&Vector3::new(0.0, 0.3, -std::f64::consts::FRAC_PI_2), 2, &m);
        // distance from the hip pitch axis, measured in the leg plane
        let planar = (p.x * p.x + p.y * p.y + p.z * p.z - 0.0838f64.powi(2)).sqrt();
        assert!((planar - (0.2f64.powi(2) + 0.2f64.powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn full_extension_gives_straight_knee() {
        let m = RobotModel::default();
        let (q, ok) = leg_ik(&Vector3::new(0.0, 0.0838, -0.4), 0, &m);
        assert!(ok);
        assert!(q[2].abs() < 1e-7);
    }

    #[test]
    fn unreachable_is_flagged_and_clamped() {
        let m = RobotModel::default();
        let (q, ok) = leg_ik(&Vector3::new(0.0, 0.0838, -0.9), 0, &m);
        assert!(!ok);
        let p = leg_fk(&q, 0, &m);
        assert!((p - Vector3::new(0.0, 0.0838, -0.4)).norm() < 1e-9);
    }

    #[test]
    fn nominal_pose_round_trip() {
        let m = RobotModel::default();
        let q = m.nominal_joints();
        for leg in 0..4 {
            let qi = Vector3::new(q[3 * leg], q[3 * leg + 1], q[3 * leg + 2]);
            assert!(qi[2] < 0.0);
            assert!((leg_fk(&qi, leg, &m) - m.nominal_foot_hip(leg)).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn ik_inverts_fk(a in -0.6f64..0.6, h in -1.2f64..1.2, k in -2.6f64..-0.05, leg in 0usize..4) {
            let m = RobotModel::default();
            let p = leg_fk(&Vector3::new(a, h, k), leg, &m);
            let (q, ok) = leg_ik(&p, leg, &m);
            prop_assert!(ok);
            prop_assert!((leg_fk(&q, leg, &m) - p).norm() < 1e-9);
        }

        #[test]
        fn jacobian_matches_central_differences(a in -0.6f64..0.6, h in -1.2f64..1.2, k in -2.6f64..-0.05, leg in 0usize..4) {
            let m = RobotModel::default();
            let q = Vector3::new(a, h, k);
            let j = leg_jacobian(&q, leg, &m);
            let eps = 1e-6;
            for c in 0..3 {
                let mut qp = q;
                let mut qm = q;
                qp[c] += eps;
                qm[c] -= eps;
                let fd = (leg_fk(&qp, leg, &m) - leg_fk(&qm, leg, &m)) / (2.0 * eps);
                prop_assert!((fd - j.column(c)).norm() < 1e-8);
            }
        }
    }
}
