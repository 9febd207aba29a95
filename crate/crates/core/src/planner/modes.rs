use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::ExtendedVelocity;

/// Platform configuration under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlatformMode {
    /// Holonomic base, camera locked to the base.
    A,
    /// Holonomic base and independently rotating camera.
    HH,
    /// Base translates only; the camera does all rotation.
    OC,
    /// Base with no lateral velocity, steered by pure pursuit; camera free.
    Y0,
}

impl PlatformMode {
    pub const ALL: [PlatformMode; 4] = [PlatformMode::A, PlatformMode::HH, PlatformMode::OC, PlatformMode::Y0];

    pub fn camera_locked(self) -> bool {
        self == PlatformMode::A
    }
}

impl fmt::Display for PlatformMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlatformMode::A => "A",
            PlatformMode::HH => "HH",
            PlatformMode::OC => "OC",
            PlatformMode::Y0 => "Y0",
        })
    }
}

impl FromStr for PlatformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(PlatformMode::A),
            "HH" => Ok(PlatformMode::HH),
            "OC" => Ok(PlatformMode::OC),
            "Y0" => Ok(PlatformMode::Y0),
            other => Err(Error::Config(format!("unknown mode {other:?}, expected A, HH, OC or Y0"))),
        }
    }
}

/// A mode together with the estimate composition; the `_NC` suffix marks the
/// variant that ignores the camera uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Platform {
    pub mode: PlatformMode,
    pub merged: bool,
}

impl Platform {
    pub fn label(&self) -> String {
        if self.merged {
            self.mode.to_string()
        } else {
            format!("{}_NC", self.mode)
        }
    }

    /// All eight comparison cells.
    pub fn matrix() -> Vec<Platform> {
        PlatformMode::ALL.iter().flat_map(|&mode| [true, false].map(|merged| Platform { mode, merged })).collect()
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let upper = s.to_ascii_uppercase();
        match upper.strip_suffix("_NC") {
            Some(m) => Ok(Platform { mode: m.parse()?, merged: false }),
            None => Ok(Platform { mode: upper.parse()?, merged: true }),
        }
    }
}

/// Admissible set of controls for one mode. In `Y0` the translation
/// direction depends on the base heading at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub mode: PlatformMode,
    pub v_max: f64,
    pub omega_max: f64,
}

pub fn apply_mode_constraints(mode: PlatformMode, v_max: f64, omega_max: f64) -> Result<ConstraintSet> {
    if !(v_max > 0.0 && omega_max > 0.0) || !v_max.is_finite() || !omega_max.is_finite() {
        return Err(Error::InvalidParameter("speed limits must be positive and finite".into()));
    }
    Ok(ConstraintSet { mode, v_max, omega_max })
}

fn clamp_sym(v: f64, lim: f64) -> f64 {
    v.clamp(-lim, lim)
}

/// Euclidean projection onto `{|a| ≤ w, |b| ≤ w, |a + b| ≤ w}`.
fn project_hexagon(a: f64, b: f64, w: f64) -> (f64, f64) {
    if a.abs() <= w && b.abs() <= w && (a + b).abs() <= w {
        return (a, b);
    }
    let verts = [(w, 0.0), (0.0, w), (-w, w), (-w, 0.0), (0.0, -w), (w, -w)];
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in 0..6 {
        let (p, q) = (verts[i], verts[(i + 1) % 6]);
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let t = (((a - p.0) * dx + (b - p.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        let c = (p.0 + t * dx, p.1 + t * dy);
        let d = (a - c.0).powi(2) + (b - c.1).powi(2);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

impl ConstraintSet {
    /// Largest violation of the constraints by `u` at base heading `theta`.
    /// For `Y0`, `fixed_dtheta` is the pursuit rate the base must follow;
    /// `None` only checks the bounds.
    pub fn violation(&self, u: &ExtendedVelocity, theta: f64, fixed_dtheta: Option<f64>) -> f64 {
        let w = self.omega_max;
        let mut v = 0.0f64;
        let speed = u.vx.hypot(u.vy);
        v = v.max(speed - self.v_max);
        v = v.max(u.dtheta.abs() - w).max(u.dgamma.abs() - w).max((u.dtheta + u.dgamma).abs() - w);
        match self.mode {
            PlatformMode::A => v = v.max(u.dgamma.abs()),
            PlatformMode::HH => {}
            PlatformMode::OC => v = v.max(u.dtheta.abs()),
            PlatformMode::Y0 => {
                let (s, c) = theta.sin_cos();
                v = v.max((-s * u.vx + c * u.vy).abs());
                if let Some(d) = fixed_dtheta {
                    v = v.max((u.dtheta - d).abs());
                }
            }
        }
        v.max(0.0)
    }

    pub fn contains(&self, u: &ExtendedVelocity, theta: f64) -> bool {
        self.violation(u, theta, None) <= 1e-9
    }

    /// Rejects commands outside the set.
    pub fn check(&self, u: &ExtendedVelocity, theta: f64) -> Result<()> {
        let v = self.violation(u, theta, None);
        if v > 1e-9 {
            return Err(Error::ActuatorLimit { value: v, limit: 0.0 });
        }
        Ok(())
    }

    /// Euclidean projection onto the set. `Y0` translation is restricted to
    /// forward motion along `theta` and the base rate is pinned to
    /// `fixed_dtheta` when given.
    pub fn project(&self, u: &ExtendedVelocity, theta: f64, fixed_dtheta: Option<f64>) -> ExtendedVelocity {
        let w = self.omega_max;
        let mut out = *u;
        match self.mode {
            PlatformMode::Y0 => {
                let (s, c) = theta.sin_cos();
                let fwd = (c * u.vx + s * u.vy).clamp(0.0, self.v_max);
                out.vx = fwd * c;
                out.vy = fwd * s;
            }
            _ => {
                let speed = u.vx.hypot(u.vy);
                if speed > self.v_max {
                    let k = self.v_max / speed;
                    out.vx *= k;
                    out.vy *= k;
                }
            }
        }
        match self.mode {
            PlatformMode::A => {
                out.dtheta = clamp_sym(u.dtheta, w);
                out.dgamma = 0.0;
            }
            PlatformMode::HH => {
                let (a, b) = project_hexagon(u.dtheta, u.dgamma, w);
                out.dtheta = a;
                out.dgamma = b;
            }
            PlatformMode::OC => {
                out.dtheta = 0.0;
                out.dgamma = clamp_sym(u.dgamma, w);
            }
            PlatformMode::Y0 => {
                let d = clamp_sym(fixed_dtheta.unwrap_or(u.dtheta), w);
                out.dtheta = d;
                out.dgamma = u.dgamma.clamp((-w - d).max(-w), (w - d).min(w));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for p in Platform::matrix() {
            assert_eq!(p.label().parse::<Platform>().unwrap(), p);
        }
        assert_eq!(Platform::matrix().len(), 8);
        assert!("Z".parse::<PlatformMode>().is_err());
    }

    #[test]
    fn hh_rejects_summed_rate() {
        let c = apply_mode_constraints(PlatformMode::HH, 1.0, 1.0).unwrap();
        assert!(!c.contains(&ExtendedVelocity::new(0.0, 0.0, 0.8, 0.8), 0.0));
        assert!(c.contains(&ExtendedVelocity::new(0.0, 0.0, 0.8, -0.8), 0.0));
        let p = c.project(&ExtendedVelocity::new(0.0, 0.0, 0.8, 0.8), 0.0, None);
        assert!((p.dtheta - 0.5).abs() < 1e-12 && (p.dgamma - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projections_land_in_set() {
        let big = ExtendedVelocity::new(3.0, -4.0, 2.0, -3.0);
        for mode in PlatformMode::ALL {
            let c = apply_mode_constraints(mode, 1.0, 1.0).unwrap();
            let p = c.project(&big, 0.7, None);
            assert!(c.violation(&p, 0.7, None) <= 1e-12, "{mode}");
        }
    }

    #[test]
    fn y0_moves_along_heading() {
        let c = apply_mode_constraints(PlatformMode::Y0, 1.0, 1.0).unwrap();
        let p = c.project(&ExtendedVelocity::new(0.5, 0.5, 0.0, 0.0), 0.3, Some(0.2));
        let (s, co) = 0.3f64.sin_cos();
        assert!((-s * p.vx + co * p.vy).abs() < 1e-12);
        assert_eq!(p.dtheta, 0.2);
    }

    #[test]
    fn oc_and_a_pin_rates() {
        let u = ExtendedVelocity::new(0.0, 0.0, 0.5, 0.5);
        let oc = apply_mode_constraints(PlatformMode::OC, 1.0, 1.0).unwrap().project(&u, 0.0, None);
        assert_eq!(oc.dtheta, 0.0);
        let a = apply_mode_constraints(PlatformMode::A, 1.0, 1.0).unwrap().project(&u, 0.0, None);
        assert_eq!(a.dgamma, 0.0);
    }
}
