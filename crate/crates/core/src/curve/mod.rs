//! Parametric reference curves: evaluation, parametric speed and arc length.

mod analytic;
mod interpolate;
mod io;
mod piecewise;

pub use analytic::AnalyticCurve;
pub use interpolate::{interpolate, WaypointSet};
pub use io::{read_waypoints_csv, CurveDocument};
pub use piecewise::ParametricCurve;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::quadrature;

/// Highest derivative order any curve provides.
pub const MAX_ORDER: usize = 4;

const SPEED_FLOOR: f64 = 1e-12;
const ARC_TOL: f64 = 1e-10;

/// Which neighbouring segment to use when evaluating exactly at a knot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A regular parametric curve in the plane or in space.
///
/// Planar curves are lifted to space with a zero third coordinate, so every
/// derivative is returned as a 3-vector.
pub trait Curve: Send + Sync {
    /// 2 or 3.
    fn dimension(&self) -> usize;

    fn domain(&self) -> (f64, f64);

    /// Number of continuous derivatives across interior knots.
    fn continuity_class(&self) -> usize;

    /// Interior parameter values where the curve is only piecewise smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Derivative of the given order with no domain checks. At a breakpoint
    /// `side` selects the one-sided limit.
    fn derivative(&self, theta: f64, order: usize, side: Side) -> Vector3<f64>;

    /// Derivative of order 0..=4 at `theta`; right-continuous at knots.
    fn eval(&self, theta: f64, order: usize) -> Result<Vector3<f64>> {
        self.eval_side(theta, order, Side::Right)
    }

    fn eval_side(&self, theta: f64, order: usize, side: Side) -> Result<Vector3<f64>> {
        if order > MAX_ORDER {
            return Err(Error::Order(order));
        }
        let t = check_domain(self.domain(), theta)?;
        Ok(self.derivative(t, order, side))
    }

    fn is_planar(&self) -> bool {
        self.dimension() == 2
    }
}

/// Validates `theta` against a domain, absorbing round-off at the ends.
pub fn check_domain(domain: (f64, f64), theta: f64) -> Result<f64> {
    let (lo, hi) = domain;
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if !theta.is_finite() || theta < lo - slack || theta > hi + slack {
        return Err(Error::Domain { theta, lo, hi });
    }
    Ok(theta.clamp(lo, hi))
}

/// ‖γ′(θ)‖.
pub fn parametric_speed(curve: &dyn Curve, theta: f64) -> Result<f64> {
    let speed = curve.eval(theta, 1)?.norm();
    if speed < SPEED_FLOOR {
        return Err(Error::Degenerate { theta, speed });
    }
    Ok(speed)
}

/// Arc length from the start of the domain to `theta`.
pub fn arc_length(curve: &dyn Curve, theta: f64) -> Result<f64> {
    let t = check_domain(curve.domain(), theta)?;
    let lo = curve.domain().0;
    let mut cuts = vec![lo];
    cuts.extend(curve.breakpoints().into_iter().filter(|&k| k > lo && k < t));
    cuts.push(t);
    let pieces = (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        // Evaluate strictly inside each piece so knots never switch segment.
        let (a, b) = (w[0], w[1]);
        total += quadrature::integrate(
            |x| curve.derivative(x, 1, Side::Right).norm(),
            a,
            b,
            ARC_TOL / pieces,
        );
    }
    Ok(total)
}

/// `n + 1` evenly spaced parameter values spanning the domain, with the
/// last node pinned exactly to the upper end.
pub fn uniform_grid(domain: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = domain;
    let n = n.max(1);
    let mut g: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    g[n] = hi;
    g
}

/// Unit tangent γ′/σ.
pub fn unit_tangent(curve: &dyn Curve, theta: f64) -> Result<Vector3<f64>> {
    let d = curve.eval(theta, 1)?;
    let s = d.norm();
    if s < SPEED_FLOOR {
        return Err(Error::Degenerate { theta, speed: s });
    }
    Ok(d / s)
}

/// Derivatives γ′ … γ⁗ at `theta` on the chosen side.
pub fn derivative_stack(curve: &dyn Curve, theta: f64, side: Side) -> Result<[Vector3<f64>; 4]> {
    Ok([
        curve.eval_side(theta, 1, side)?,
        curve.eval_side(theta, 2, side)?,
        curve.eval_side(theta, 3, side)?,
        curve.eval_side(theta, 4, side)?,
    ])
}
