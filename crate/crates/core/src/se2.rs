//! Planar rigid-body poses.
//!
//! `Pose2` is an element of SE(2) stored as (x, y, theta) with theta kept in
//! (-pi, pi]. Composition follows the usual convention: `a.compose(b)` applies
//! `b` in the frame of `a`, and `a.between(b)` is the relative pose such that
//! `a.compose(a.between(b)) == b`.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

/// Wraps an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn identity() -> Self {
        Self { x: 0.0, y: 0.0, theta: 0.0 }
    }

    /// `self * other`: `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)
    }

    /// Relative pose from `self` to `other`: `self^-1 * other`.
    pub fn between(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        Pose2::new(c * dx + s * dy, -s * dx + c * dy, other.theta - self.theta)
    }

    /// Euclidean distance between the translation parts.
    pub fn distance(&self, other: &Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn translation_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.theta)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Pose2::new(v.x, v.y, v.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wrap_covers_half_open_interval() {
        assert_abs_diff_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI);
        assert_abs_diff_eq!(wrap_angle(-3.0 * PI), PI);
        assert_abs_diff_eq!(wrap_angle(TAU + 0.25), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-TAU - 0.25), -0.25, epsilon = 1e-12);
    }

    #[test]
    fn compose_inverse_is_identity() {
        let a = Pose2::new(1.3, -2.1, 0.7);
        let id = a.compose(&a.inverse());
        assert_abs_diff_eq!(id.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.theta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn between_inverts_compose() {
        let a = Pose2::new(0.4, 1.0, -1.2);
        let d = Pose2::new(0.9, -0.3, 2.0);
        let b = a.compose(&d);
        let r = a.between(&b);
        assert_abs_diff_eq!(r.x, d.x, epsilon = 1e-12);
        assert_abs_diff_eq!(r.y, d.y, epsilon = 1e-12);
        assert_abs_diff_eq!(r.theta, d.theta, epsilon = 1e-12);
    }

    #[test]
    fn theta_always_normalized() {
        let p = Pose2::new(0.0, 0.0, 5.0 * PI + 0.1);
        assert!(p.theta > -PI && p.theta <= PI);
        let q = Pose2::new(1.0, 0.0, 3.0).compose(&Pose2::new(1.0, 0.0, 3.0));
        assert!(q.theta > -PI && q.theta <= PI);
    }
}
