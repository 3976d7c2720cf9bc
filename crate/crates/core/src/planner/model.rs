use num_dual::DualNum;

use crate::error::{Error, Result};

/// Real or dual scalar used by code that is differentiated automatically.
pub trait Scalar: DualNum<Primitive = f64> + Copy {}
impl<T: DualNum<Primitive = f64> + Copy> Scalar for T {}

/// Box limits on joint rate, joint acceleration and each component of the
/// end-effector velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub qdot_max: f64,
    pub qddot_max: f64,
    pub v_max: f64,
}

/// A planar system with two coordinates q, inputs q̈, and an output point
/// that moves along the reference path.
pub trait PlanarSystem: Sync {
    fn bounds(&self) -> Bounds;

    fn position(&self, q: [f64; 2]) -> [f64; 2];

    fn velocity<D: Scalar>(&self, q: [D; 2], qd: [D; 2]) -> [D; 2];

    fn acceleration(&self, q: [f64; 2], qd: [f64; 2], qdd: [f64; 2]) -> [f64; 2];

    /// Configuration placing the output at `p`.
    fn inverse_position(&self, p: [f64; 2]) -> Result<[f64; 2]>;

    /// Joint rates producing output velocity `v` at `q`.
    fn inverse_velocity(&self, q: [f64; 2], v: [f64; 2]) -> Result<[f64; 2]>;
}

/// Two-link arm with absolute joint angles (each angle measured from the
/// x axis), unit links and the limits |θ̇| ≤ 1, |θ̈| ≤ 5, |vₓ|, |v_y| ≤ 1 by
/// default.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLinkManipulator {
    pub l1: f64,
    pub l2: f64,
    pub bounds: Bounds,
}

impl Default for TwoLinkManipulator {
    fn default() -> Self {
        TwoLinkManipulator { l1: 1.0, l2: 1.0, bounds: Bounds { qdot_max: 1.0, qddot_max: 5.0, v_max: 1.0 } }
    }
}

impl PlanarSystem for TwoLinkManipulator {
    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn position(&self, q: [f64; 2]) -> [f64; 2] {
        [
            self.l1 * q[0].cos() + self.l2 * q[1].cos(),
            self.l1 * q[0].sin() + self.l2 * q[1].sin(),
        ]
    }

    fn velocity<D: Scalar>(&self, q: [D; 2], qd: [D; 2]) -> [D; 2] {
        let (s1, c1) = (q[0].sin(), q[0].cos());
        let (s2, c2) = (q[1].sin(), q[1].cos());
        [
            -(qd[0] * s1 * self.l1 + qd[1] * s2 * self.l2),
            qd[0] * c1 * self.l1 + qd[1] * c2 * self.l2,
        ]
    }

    fn acceleration(&self, q: [f64; 2], qd: [f64; 2], qdd: [f64; 2]) -> [f64; 2] {
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        [
            -self.l1 * (qdd[0] * s1 + qd[0] * qd[0] * c1) - self.l2 * (qdd[1] * s2 + qd[1] * qd[1] * c2),
            self.l1 * (qdd[0] * c1 - qd[0] * qd[0] * s1) + self.l2 * (qdd[1] * c2 - qd[1] * qd[1] * s2),
        ]
    }

    /// Elbow-up branch: the relative elbow angle is taken negative.
    fn inverse_position(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let c = (r2 - self.l1 * self.l1 - self.l2 * self.l2) / (2.0 * self.l1 * self.l2);
        if !(-1.0..=1.0).contains(&c) {
            return Err(Error::Transcription(format!("point ({}, {}) is out of reach", p[0], p[1])));
        }
        let rel = -c.acos();
        let t1 = p[1].atan2(p[0]) - (self.l2 * rel.sin()).atan2(self.l1 + self.l2 * rel.cos());
        Ok([t1, t1 + rel])
    }

    fn inverse_velocity(&self, q: [f64; 2], v: [f64; 2]) -> Result<[f64; 2]> {
        let (s1, c1) = q[0].sin_cos();
        let (s2, c2) = q[1].sin_cos();
        let (a, b, c, d) = (-self.l1 * s1, -self.l2 * s2, self.l1 * c1, self.l2 * c2);
        let det = a * d - b * c;
        if det.abs() < 1e-9 {
            return Err(Error::Transcription("arm is at a kinematic singularity".into()));
        }
        Ok([(d * v[0] - b * v[1]) / det, (a * v[1] - c * v[0]) / det])
    }
}

/// Double integrator: the output point is q itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointMass {
    pub bounds: Bounds,
}

impl PlanarSystem for PointMass {
    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn position(&self, q: [f64; 2]) -> [f64; 2] {
        q
    }

    fn velocity<D: Scalar>(&self, _q: [D; 2], qd: [D; 2]) -> [D; 2] {
        qd
    }

    fn acceleration(&self, _q: [f64; 2], _qd: [f64; 2], qdd: [f64; 2]) -> [f64; 2] {
        qdd
    }

    fn inverse_position(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        Ok(p)
    }

    fn inverse_velocity(&self, _q: [f64; 2], v: [f64; 2]) -> Result<[f64; 2]> {
        Ok(v)
    }
}

/// End-effector velocity of the arm for state
/// `[ξ, η, ξ̇, η̇, θ₁, θ₂, θ̇₁, θ̇₂]`.
pub fn manipulator_velocity(model: &TwoLinkManipulator, state: &[f64; 8]) -> [f64; 2] {
    model.velocity([state[4], state[5]], [state[6], state[7]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn printed_velocity_formula() {
        let m = TwoLinkManipulator::default();
        let v = m.velocity([0.0, FRAC_PI_2], [1.0, 0.0]);
        assert!(v[0].abs() < 1e-16 && (v[1] - 1.0).abs() < 1e-16);
        assert_eq!(m.velocity([0.3, 0.2], [0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn inverse_kinematics_round_trip() {
        let m = TwoLinkManipulator::default();
        let q = m.inverse_position([0.25, 1.6]).unwrap();
        let p = m.position(q);
        assert!((p[0] - 0.25).abs() < 1e-14 && (p[1] - 1.6).abs() < 1e-14);
        assert!(m.inverse_position([2.5, 0.0]).is_err());
        let qd = m.inverse_velocity(q, [0.3, -0.2]).unwrap();
        let v = m.velocity(q, qd);
        assert!((v[0] - 0.3).abs() < 1e-14 && (v[1] + 0.2).abs() < 1e-14);
    }

    #[test]
    fn acceleration_matches_differentiated_velocity() {
        let m = TwoLinkManipulator::default();
        let (q, qd, qdd) = ([0.4, 1.3], [0.7, -0.2], [1.5, -2.0]);
        let h = 1e-6;
        let step = |s: f64| {
            let qq = [q[0] + qd[0] * s + 0.5 * qdd[0] * s * s, q[1] + qd[1] * s + 0.5 * qdd[1] * s * s];
            let qqd = [qd[0] + qdd[0] * s, qd[1] + qdd[1] * s];
            m.velocity(qq, qqd)
        };
        let (a, b) = (step(h), step(-h));
        let acc = m.acceleration(q, qd, qdd);
        for k in 0..2 {
            assert!(((a[k] - b[k]) / (2.0 * h) - acc[k]).abs() < 1e-8);
        }
    }
}
