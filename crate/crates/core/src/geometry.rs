//! Planar poses and angle helpers shared by every module.

use std::f64::consts::{PI, TAU};

/// Wraps an angle to `(-pi, pi]`. Angles already in range are returned
/// unchanged.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Planar pose `[x, y, theta]` in meters and radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// `self ⊕ other`: applies `other`, expressed in this pose's frame.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D {
            x: self.x + c * other.x - s * other.y,
            y: self.y + s * other.x + c * other.y,
            theta: wrap_angle(self.theta + other.theta),
        }
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D {
            x: -c * self.x - s * self.y,
            y: s * self.x - c * self.y,
            theta: wrap_angle(-self.theta),
        }
    }

    /// Pose of `to` expressed in the frame of `self`.
    pub fn between(&self, to: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        let dx = to.x - self.x;
        let dy = to.y - self.y;
        Pose2D {
            x: c * dx + s * dy,
            y: -s * dx + c * dy,
            theta: wrap_angle(to.theta - self.theta),
        }
    }

    pub fn distance(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rotates a planar vector by `angle`.
pub fn rotate(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(4.0) - (4.0 - TAU)).abs() < 1e-15);
        assert!((wrap_angle(4.0) + 2.28319).abs() < 1e-5);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_eq!(wrap_angle(-1.9180550743835336), -1.9180550743835336);
    }

    #[test]
    fn between_inverts_compose() {
        let a = Pose2D::new(1.0, -2.0, 0.7);
        let d = Pose2D::new(0.3, 0.1, -1.2);
        let b = a.compose(&d);
        let back = a.between(&b);
        assert!((back.x - d.x).abs() < 1e-12);
        assert!((back.y - d.y).abs() < 1e-12);
        assert!((back.theta - d.theta).abs() < 1e-12);
        let id = a.compose(&a.inverse());
        assert!(id.x.abs() < 1e-12 && id.y.abs() < 1e-12 && id.theta.abs() < 1e-12);
    }
}
