use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{Curve, Side};
use crate::error::{Error, Result};
use crate::jet::Jet;

type J = Jet<5>;

/// Closed-form test curves with derivatives to order 4.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticCurve {
    /// `origin + θ·direction` on `domain`.
    Line {
        origin: Vector3<f64>,
        direction: Vector3<f64>,
        domain: (f64, f64),
        planar: bool,
    },
    /// `r·[cos θ, sin θ]`, θ ∈ [0, 2π].
    Circle { radius: f64 },
    /// `[a cos θ, a sin θ, bθ]`, θ ∈ [0, 2π].
    Helix { a: f64, b: f64 },
    /// `[θ, sin 2πθ]`, θ ∈ [0, 1].
    Sinusoid,
    /// `(0.6 + 0.3 cos θ)(cos 2θ, sin 2θ), 0.3 sin 7θ`, θ ∈ [0, 2π].
    Coil,
    /// `[0.5 cos 9θ, exp(cos 1.8θ)]`, θ ∈ [0, 1].
    ContinuityTest,
    /// `[θ, 1 + 0.5 sin 2πθ]`, θ ∈ [0, 1]; reference for the manipulator.
    ManipulatorReference,
}

impl AnalyticCurve {
    /// Unit-speed line along x on [0, 1].
    pub fn unit_line() -> Self {
        AnalyticCurve::Line {
            origin: Vector3::zeros(),
            direction: Vector3::x(),
            domain: (0.0, 1.0),
            planar: false,
        }
    }

    /// Built-in curve by name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "line" => Self::unit_line(),
            "circle" => AnalyticCurve::Circle { radius: 1.0 },
            "helix" => AnalyticCurve::Helix { a: 1.0, b: 1.0 },
            "sin2d" => AnalyticCurve::Sinusoid,
            "coil3d" => AnalyticCurve::Coil,
            "continuity" => AnalyticCurve::ContinuityTest,
            "sin" => AnalyticCurve::ManipulatorReference,
            _ => return Err(Error::Parse(format!("unknown built-in curve '{name}'"))),
        })
    }

    pub const NAMES: [&'static str; 7] =
        ["line", "circle", "helix", "sin2d", "coil3d", "continuity", "sin"];

    fn jets(&self, theta: f64) -> [J; 3] {
        let t = J::variable(theta);
        let zero = J::constant(0.0);
        match self {
            AnalyticCurve::Line { origin, direction, .. } => [
                t * direction.x + origin.x,
                t * direction.y + origin.y,
                t * direction.z + origin.z,
            ],
            AnalyticCurve::Circle { radius } => {
                let (s, c) = t.sin_cos();
                [c * *radius, s * *radius, zero]
            }
            AnalyticCurve::Helix { a, b } => {
                let (s, c) = t.sin_cos();
                [c * *a, s * *a, t * *b]
            }
            AnalyticCurve::Sinusoid => [t, (t * (2.0 * PI)).sin(), zero],
            AnalyticCurve::Coil => {
                let f = t.cos() * 0.3 + 0.6;
                let (s2, c2) = (t * 2.0).sin_cos();
                [f * c2, f * s2, (t * 7.0).sin() * 0.3]
            }
            AnalyticCurve::ContinuityTest => {
                [(t * 9.0).cos() * 0.5, (t * 1.8).cos().exp(), zero]
            }
            AnalyticCurve::ManipulatorReference => {
                [t, (t * (2.0 * PI)).sin() * 0.5 + 1.0, zero]
            }
        }
    }
}

impl Curve for AnalyticCurve {
    fn dimension(&self) -> usize {
        match self {
            AnalyticCurve::Line { planar, .. } => {
                if *planar {
                    2
                } else {
                    3
                }
            }
            AnalyticCurve::Helix { .. } | AnalyticCurve::Coil => 3,
            _ => 2,
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            AnalyticCurve::Line { domain, .. } => *domain,
            AnalyticCurve::Circle { .. } | AnalyticCurve::Helix { .. } | AnalyticCurve::Coil => {
                (0.0, 2.0 * PI)
            }
            _ => (0.0, 1.0),
        }
    }

    fn continuity_class(&self) -> usize {
        usize::MAX
    }

    fn derivative(&self, theta: f64, order: usize, _side: Side) -> Vector3<f64> {
        let j = self.jets(theta);
        Vector3::new(j[0].derivative(order), j[1].derivative(order), j[2].derivative(order))
    }
}
