use crate::curve::{Curve, Side};
use crate::error::{Error, Result};
use crate::spatial::spatial_rates_planar;

use super::model::{PlanarSystem, Scalar};

/// Progress floor: the spatial transformation divides by ξ̇.
pub const XI_DOT_MIN: f64 = 1e-4;

/// Planar path geometry at ξ: e₂ is e₁ turned a quarter-turn
/// counter-clockwise, matching the parallel transport frame of a planar
/// curve.
#[derive(Clone, Copy, Debug)]
pub struct PlanarFrame<D> {
    pub sigma: D,
    pub omega3: D,
    pub e1: [D; 2],
    pub e2: [D; 2],
}

/// γ⁽ᵏ⁾ at a possibly dual ξ, extended to second order so that first and
/// second dual derivatives are exact.
fn lift<D: Scalar>(curve: &dyn Curve, xi: D, order: usize) -> [D; 2] {
    let re = xi.re();
    let g = curve.derivative(re, order, Side::Right);
    let dg = curve.derivative(re, order + 1, Side::Right);
    let ddg = curve.derivative(re, order + 2, Side::Right);
    let dx = xi - D::from(re);
    let half = dx * dx * 0.5;
    [D::from(g.x) + dx * dg.x + half * ddg.x, D::from(g.y) + dx * dg.y + half * ddg.y]
}

impl<D: Scalar> PlanarFrame<D> {
    pub fn at(curve: &dyn Curve, xi: D) -> Self {
        let g1 = lift(curve, xi, 1);
        let g2 = lift(curve, xi, 2);
        let s2 = g1[0] * g1[0] + g1[1] * g1[1];
        let sigma = s2.sqrt();
        let e1 = [g1[0] / sigma, g1[1] / sigma];
        PlanarFrame {
            sigma,
            omega3: (g1[0] * g2[1] - g1[1] * g2[0]) / s2,
            e1,
            e2: [-e1[1], e1[0]],
        }
    }
}

/// (ξ̇, η̇) of the output point moving with velocity `v`.
pub fn planar_rates<D: Scalar>(f: &PlanarFrame<D>, eta: D, v: [D; 2]) -> (D, D) {
    let den = f.sigma - f.omega3 * eta;
    ((f.e1[0] * v[0] + f.e1[1] * v[1]) / den, f.e2[0] * v[0] + f.e2[1] * v[1])
}

/// Time derivative of the full state `[ξ, η, ξ̇, η̇, θ₁, θ₂, θ̇₁, θ̇₂]`.
///
/// ξ and η advance with the state's own rates; ξ̈ and η̈ are the exact time
/// derivatives of the projected rates of the output point.
pub fn temporal_rates<M: PlanarSystem>(model: &M, curve: &dyn Curve, x: &[f64; 8], u: &[f64; 2]) -> Result<[f64; 8]> {
    let (xi, eta) = (x[0], x[1]);
    let q = [x[4], x[5]];
    let qd = [x[6], x[7]];
    let v = model.velocity(q, qd);
    let a = model.acceleration(q, qd, *u);
    // Integrator stages may step a little past the ends of the domain, so
    // the path is continued without domain checks.
    let d1 = curve.derivative(xi, 1, Side::Right);
    let d2 = curve.derivative(xi, 2, Side::Right);
    let d3 = curve.derivative(xi, 3, Side::Right);
    let sigma = d1.norm();
    let e1 = d1 / sigma;
    let e2 = nalgebra::Vector3::new(-e1.y, e1.x, 0.0);
    let c12 = d1.x * d2.y - d1.y * d2.x;
    let c13 = d1.x * d3.y - d1.y * d3.x;
    let omega3 = c12 / (sigma * sigma);
    let dsigma = d1.dot(&d2) / sigma;
    let domega3 = c13 / (sigma * sigma) - 2.0 * c12 * dsigma / sigma.powi(3);
    let vw = nalgebra::Vector3::new(v[0], v[1], 0.0);
    let (xi_dot, eta_dot) = spatial_rates_planar(sigma, omega3, &e1, &e2, eta, &vw)?;
    let (e1v, e2v) = (e1.x * v[0] + e1.y * v[1], e2.x * v[0] + e2.y * v[1]);
    let (e1a, e2a) = (e1.x * a[0] + e1.y * a[1], e2.x * a[0] + e2.y * a[1]);
    let den = sigma - omega3 * eta;
    let d_den = dsigma * xi_dot - domega3 * xi_dot * eta - omega3 * eta_dot;
    let xi_ddot = (xi_dot * omega3 * e2v + e1a - xi_dot * d_den) / den;
    let eta_ddot = -omega3 * xi_dot * e1v + e2a;
    Ok([x[2], x[3], xi_ddot, eta_ddot, x[6], x[7], u[0], u[1]])
}

/// State derivative per unit ξ: the temporal rates divided by ξ̇.
pub fn spatialize<M: PlanarSystem>(model: &M, curve: &dyn Curve, x: &[f64; 8], u: &[f64; 2]) -> Result<[f64; 8]> {
    if !(x[2] > XI_DOT_MIN) {
        return Err(Error::Stall(x[2]));
    }
    let f = temporal_rates(model, curve, x, u)?;
    Ok(f.map(|v| v / x[2]))
}
