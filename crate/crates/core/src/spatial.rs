//! Spatial coordinates: closest-point projection onto a framed path and
//! the equations of motion of (ξ, η₁, η₂).

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::curve::{check_domain, Curve};
use crate::error::{Error, Result};
use crate::frames::{frame_at_adapted, FrameField, FrameSample};

const TUBE: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-8;
const SEED_SAMPLES: usize = 256;

/// Progress along the path and transverse offsets along e₂, e₃.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialState {
    pub xi: f64,
    pub eta: Vector2<f64>,
}

impl SpatialState {
    pub fn new(xi: f64, eta1: f64, eta2: f64) -> Self {
        SpatialState { xi, eta: Vector2::new(eta1, eta2) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialRates {
    pub xi_dot: f64,
    pub eta1_dot: f64,
    pub eta2_dot: f64,
}

/// Result of [`project`]: the spatial state and the tangential component
/// e₁·(p − γ(ξ)) left by the closest-point solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub state: SpatialState,
    pub tangential_residual: f64,
}

/// f′(θ) and f″(θ) for f = ½‖p − γ(θ)‖², plus the convergence tolerance.
fn stationarity(curve: &dyn Curve, p: &Vector3<f64>, theta: f64) -> (f64, f64, f64) {
    let g = curve.derivative(theta, 0, crate::curve::Side::Right);
    let d1 = curve.derivative(theta, 1, crate::curve::Side::Right);
    let d2 = curve.derivative(theta, 2, crate::curve::Side::Right);
    let d = p - g;
    let sigma = d1.norm();
    (-d.dot(&d1), d1.norm_squared() - d.dot(&d2), 1e-10 * sigma * d.norm().max(1.0))
}

/// Local closest-point parameter of `p`, searched from `xi_guess`.
///
/// Safeguarded Newton on the first-order condition, falling back to a
/// downhill bracket and Newton-bisection. The result is a strict local
/// minimum of the distance; a minimum on the domain boundary is reported
/// as [`Error::Clamped`].
pub fn closest_point(curve: &dyn Curve, p: &Vector3<f64>, xi_guess: f64) -> Result<f64> {
    let (lo, hi) = curve.domain();
    let len = hi - lo;
    let mut x = check_domain((lo, hi), xi_guess)?;
    let h = |t: f64| stationarity(curve, p, t);

    for _ in 0..50 {
        let (g, gp, tol) = h(x);
        if g.abs() < tol {
            return finish(x, gp);
        }
        if gp <= 0.0 {
            break;
        }
        let step = (-g / gp).clamp(-0.25 * len, 0.25 * len);
        let next = (x + step).clamp(lo, hi);
        if next == x {
            break;
        }
        x = next;
    }

    // Walk downhill until the derivative changes sign.
    let (g0, _, _) = h(x);
    let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = 1e-3 * len;
    let mut far = x;
    loop {
        let cand = (far + dir * step).clamp(lo, hi);
        let (g, gp, tol) = h(cand);
        if g.abs() < tol {
            return finish(cand, gp);
        }
        if g * g0 < 0.0 {
            far = cand;
            break;
        }
        if cand == lo || cand == hi {
            return Err(Error::Clamped { xi: cand });
        }
        far = cand;
        step *= 2.0;
    }
    let (mut a, mut b) = if dir < 0.0 { (far, x) } else { (x, far) };

    // Newton-bisection on [a, b] with f′(a) < 0 < f′(b).
    let mut t = 0.5 * (a + b);
    for _ in 0..200 {
        let (g, gp, tol) = h(t);
        if g.abs() < tol {
            return finish(t, gp);
        }
        if g < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let newton = if gp > 0.0 { t - g / gp } else { f64::NAN };
        t = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            let (g, gp, tol) = h(t);
            if g.abs() < 1e3 * tol {
                return finish(t, gp);
            }
            break;
        }
    }
    Err(Error::NonConvergence { guess: xi_guess })
}

fn finish(xi: f64, second: f64) -> Result<f64> {
    if second <= 0.0 {
        return Err(Error::Saddle { xi });
    }
    Ok(xi)
}

/// Parameter of the nearest of 256 uniform samples, used as a seed.
pub fn coarse_seed(curve: &dyn Curve, p: &Vector3<f64>) -> f64 {
    let grid = crate::curve::uniform_grid(curve.domain(), SEED_SAMPLES - 1);
    let mut best = (f64::INFINITY, grid[0]);
    for &t in &grid {
        let d = (p - curve.derivative(t, 0, crate::curve::Side::Right)).norm_squared();
        if d < best.0 {
            best = (d, t);
        }
    }
    best.1
}

/// Spatial coordinates of `p` from a local closest-point search.
pub fn project(curve: &dyn Curve, frames: &FrameField, p: &Vector3<f64>, xi_guess: f64) -> Result<Projection> {
    let xi = closest_point(curve, p, xi_guess)?;
    let f = frame_at_adapted(frames, curve, xi)?;
    let d = p - curve.eval(xi, 0)?;
    let residual = f.e1().dot(&d);
    if residual.abs() >= RESIDUAL_TOL * d.norm().max(1.0) {
        return Err(Error::NonConvergence { guess: xi_guess });
    }
    Ok(Projection {
        state: SpatialState::new(xi, f.e2().dot(&d), f.e3().dot(&d)),
        tangential_residual: residual,
    })
}

/// [`project`] seeded from the coarse global argmin.
pub fn global_project(curve: &dyn Curve, frames: &FrameField, p: &Vector3<f64>) -> Result<Projection> {
    project(curve, frames, p, coarse_seed(curve, p))
}

/// Cartesian point γ(ξ) + R(ξ)[0, η₁, η₂].
pub fn reconstruct(curve: &dyn Curve, frames: &FrameField, s: &SpatialState) -> Result<Vector3<f64>> {
    let f = frame_at_adapted(frames, curve, s.xi)?;
    Ok(curve.eval(s.xi, 0)? + f.e2() * s.eta.x + f.e3() * s.eta.y)
}

/// Rates of (ξ, η₁, η₂) for world velocity `v` at a framed state.
pub fn spatial_rates(frame: &FrameSample, sigma: f64, s: &SpatialState, v: &Vector3<f64>) -> Result<SpatialRates> {
    let w = frame.omega_path;
    let den = sigma - w.z * s.eta.x + w.y * s.eta.y;
    if den.abs() <= TUBE * sigma {
        return Err(Error::TubeOfValidity { denominator: den });
    }
    let xi_dot = frame.e1().dot(v) / den;
    Ok(SpatialRates {
        xi_dot,
        eta1_dot: frame.e2().dot(v) + xi_dot * w.x * s.eta.y,
        eta2_dot: frame.e3().dot(v) - xi_dot * w.x * s.eta.x,
    })
}

/// Frenet-Serret form for an arc-length parameterized path.
pub fn spatial_rates_fsf(
    kappa: f64,
    tau: f64,
    r: &Matrix3<f64>,
    s: &SpatialState,
    v: &Vector3<f64>,
) -> Result<SpatialRates> {
    let den = 1.0 - kappa * s.eta.x;
    if den.abs() <= TUBE {
        return Err(Error::TubeOfValidity { denominator: den });
    }
    let xi_dot = r.column(0).dot(v) / den;
    Ok(SpatialRates {
        xi_dot,
        eta1_dot: r.column(1).dot(v) + xi_dot * tau * s.eta.y,
        eta2_dot: r.column(2).dot(v) - xi_dot * tau * s.eta.x,
    })
}

/// Planar form; returns (ξ̇, η̇₁).
pub fn spatial_rates_planar(
    sigma: f64,
    omega3: f64,
    e1: &Vector3<f64>,
    e2: &Vector3<f64>,
    eta1: f64,
    v: &Vector3<f64>,
) -> Result<(f64, f64)> {
    let den = sigma - omega3 * eta1;
    if den.abs() <= TUBE * sigma {
        return Err(Error::TubeOfValidity { denominator: den });
    }
    Ok((e1.dot(v) / den, e2.dot(v)))
}

/// ξ̇ = vᵀγ′ / (σ² − dᵀγ″) from curve derivatives alone.
pub fn xidot_optimality(curve: &dyn Curve, p: &Vector3<f64>, v: &Vector3<f64>, xi: f64) -> Result<f64> {
    let d = p - curve.eval(xi, 0)?;
    let d1 = curve.eval(xi, 1)?;
    let d2 = curve.eval(xi, 2)?;
    let s2 = d1.norm_squared();
    let den = s2 - d.dot(&d2);
    if den.abs() <= TUBE * s2 {
        return Err(Error::TubeOfValidity { denominator: den });
    }
    Ok(v.dot(&d1) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::AnalyticCurve;
    use crate::frames::ptf_field;

    #[test]
    fn on_path_point_projects_to_itself() {
        let c = AnalyticCurve::Helix { a: 1.0, b: 1.0 };
        let p = c.eval(0.4, 0).unwrap();
        assert!((closest_point(&c, &p, 0.35).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn circle_radial_point() {
        let c = AnalyticCurve::Circle { radius: 1.0 };
        let xi = closest_point(&c, &Vector3::new(2.0, 0.0, 0.0), 0.1).unwrap();
        assert!(xi.abs() < 1e-10);
    }

    #[test]
    fn maximum_is_reported_as_saddle_or_moved() {
        // The circle centre is equidistant from every point: f″ ≤ 0 there.
        let c = AnalyticCurve::Circle { radius: 1.0 };
        let r = closest_point(&c, &Vector3::zeros(), 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn clamped_beyond_end() {
        let c = AnalyticCurve::unit_line();
        assert!(matches!(
            closest_point(&c, &Vector3::new(1.5, 0.2, 0.0), 0.5),
            Err(Error::Clamped { .. })
        ));
    }

    #[test]
    fn offset_along_e2() {
        let c = AnalyticCurve::Coil;
        let f = ptf_field(&c, 2000).unwrap();
        let fr = frame_at_adapted(&f, &c, 2.0).unwrap();
        let p = c.eval(2.0, 0).unwrap() + fr.e2() * 0.3;
        let pr = project(&c, &f, &p, 1.95).unwrap();
        assert!((pr.state.xi - 2.0).abs() < 1e-9);
        assert!((pr.state.eta - Vector2::new(0.3, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn rates_simple_cases() {
        let c = AnalyticCurve::Circle { radius: 1.0 };
        let f = ptf_field(&c, 500).unwrap();
        let fr = frame_at_adapted(&f, &c, 0.0).unwrap();
        let s = SpatialState::new(0.0, 0.0, 0.0);
        let r = spatial_rates(&fr, 1.0, &s, &(fr.e1() * 2.0)).unwrap();
        assert!((r.xi_dot - 2.0).abs() < 1e-14 && r.eta1_dot.abs() < 1e-14);
        let r = spatial_rates(&fr, 1.0, &s, &(fr.e2() * 0.7)).unwrap();
        assert!(r.xi_dot.abs() < 1e-14 && (r.eta1_dot - 0.7).abs() < 1e-14);
        let (xd, _) = spatial_rates_planar(1.0, 1.0, &fr.e1(), &fr.e2(), 0.5, &fr.e1()).unwrap();
        assert!((xd - 2.0).abs() < 1e-14);
        assert!(spatial_rates_planar(1.0, 1.0, &fr.e1(), &fr.e2(), 1.0, &fr.e1()).is_err());
    }

    #[test]
    fn fsf_circle_offset() {
        let r = Matrix3::identity();
        let v = Vector3::x();
        let s = SpatialState::new(0.0, 0.5, 0.0);
        assert!((spatial_rates_fsf(1.0, 0.0, &r, &s, &v).unwrap().xi_dot - 2.0).abs() < 1e-15);
    }
}
