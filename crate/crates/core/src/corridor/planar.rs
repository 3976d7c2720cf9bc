use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ProjectedObstacle;
use crate::chebyshev::{basis, clenshaw, derivative_coeffs, normalize};
use crate::curve::{uniform_grid, Curve};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Keeps the path strictly inside: η̲ ≤ −margin and η̄ ≥ margin.
const PATH_MARGIN: f64 = 1e-9;
const ON_PATH: f64 = 1e-12;
const OUTSIDE_TOL: f64 = 1e-8;

/// Lower and upper transverse bounds η̲(ξ) < 0 < η̄(ξ) of a planar corridor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarCorridor {
    pub degree: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub domain: (f64, f64),
    pub wrapper_halfwidth: f64,
    #[serde(default)]
    pub samples: usize,
}

impl PlanarCorridor {
    /// Constant bounds `lower ≤ η ≤ upper`.
    pub fn constant(lower: f64, upper: f64, domain: (f64, f64)) -> Self {
        PlanarCorridor {
            degree: 0,
            lower: vec![lower],
            upper: vec![upper],
            domain,
            wrapper_halfwidth: lower.abs().max(upper.abs()),
            samples: 0,
        }
    }

    /// (η̲(ξ), η̄(ξ)).
    pub fn bounds_at(&self, xi: f64) -> (f64, f64) {
        let u = normalize(xi, self.domain);
        (clenshaw(&self.lower, u), clenshaw(&self.upper, u))
    }

    /// (dη̲/dξ, dη̄/dξ).
    pub fn derivative_at(&self, xi: f64) -> (f64, f64) {
        let u = normalize(xi, self.domain);
        let k = 2.0 / (self.domain.1 - self.domain.0);
        (
            clenshaw(&derivative_coeffs(&self.lower), u) * k,
            clenshaw(&derivative_coeffs(&self.upper), u) * k,
        )
    }

    /// Uniform generation grid.
    pub fn sample_grid(&self) -> Vec<f64> {
        uniform_grid(self.domain, self.samples.max(2) - 1)
    }

    /// Post-solve check computed from the coefficients alone: the path lies
    /// strictly inside on the sample grid and no obstacle is inside.
    pub fn certify(&self, obstacles: &[ProjectedObstacle]) -> Result<()> {
        for xi in self.sample_grid() {
            let (lo, hi) = self.bounds_at(xi);
            if !(lo < 0.0 && hi > 0.0) {
                return Err(Error::CorridorInvalid { xi, reason: format!("path outside [{lo}, {hi}]") });
            }
        }
        for o in obstacles {
            let (lo, hi) = self.bounds_at(o.xi);
            let eta = o.x_perp.x;
            let clearance = if eta > 0.0 { eta - hi } else { lo - eta };
            if clearance < -OUTSIDE_TOL {
                return Err(Error::Generation(format!("obstacle at ξ = {} is inside the corridor by {}", o.xi, -clearance)));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        if c.lower.len() != c.degree + 1 || c.upper.len() != c.degree + 1 {
            return Err(Error::Parse(format!("bounds must have {} coefficients", c.degree + 1)));
        }
        if !(c.domain.0 < c.domain.1) {
            return Err(Error::Parse("corridor domain must be increasing".into()));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// LP for polynomial bounds that clear every obstacle (only `x_perp.x`,
/// the in-plane offset, is used) and maximize the summed width.
pub fn generate_planar(
    curve: &dyn Curve,
    obstacles: &[ProjectedObstacle],
    degree: usize,
    samples: usize,
    wrapper_halfwidth: f64,
) -> Result<PlanarCorridor> {
    if !curve.is_planar() {
        return Err(Error::Precondition("planar corridor needs a planar curve".into()));
    }
    let nc = degree + 1;
    if samples < 2 * nc {
        return Err(Error::Precondition(format!("{samples} samples cannot support degree {degree}")));
    }
    if !(wrapper_halfwidth > PATH_MARGIN) || !wrapper_halfwidth.is_finite() {
        return Err(Error::Precondition("wrapper half-width must be positive".into()));
    }
    let domain = curve.domain();
    let grid = uniform_grid(domain, samples - 1);
    let nv = 2 * nc;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    let mut cost = vec![0.0; nv];
    // Row helper: sign·T·block ≤ b.
    let mut push = |block: usize, sign: f64, t: &[f64], b: f64| {
        let mut r = vec![0.0; nv];
        for k in 0..nc {
            r[block * nc + k] = sign * t[k];
        }
        rows.push(r);
        rhs.push(b);
    };
    for o in obstacles {
        crate::curve::check_domain(domain, o.xi)?;
        let eta = o.x_perp.x;
        if eta.abs() < ON_PATH {
            return Err(Error::Generation(format!("obstacle on the path at ξ = {}", o.xi)));
        }
        let t = basis(degree, normalize(o.xi, domain));
        if eta > 0.0 {
            push(1, 1.0, &t, eta);
        } else {
            push(0, -1.0, &t, -eta);
        }
    }
    for &xi in &grid {
        let t = basis(degree, normalize(xi, domain));
        push(1, 1.0, &t, wrapper_halfwidth);
        push(0, -1.0, &t, wrapper_halfwidth);
        push(0, 1.0, &t, -PATH_MARGIN);
        push(1, -1.0, &t, -PATH_MARGIN);
        for k in 0..nc {
            cost[k] += t[k];
            cost[nc + k] -= t[k];
        }
    }
    let a = DMatrix::from_fn(rows.len(), nv, |i, j| rows[i][j]);
    let sol = solve_lp(&LpProblem::new(DVector::from_vec(cost), a, DVector::from_vec(rhs)))?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Generation(format!("planar corridor LP is {:?}", sol.status)));
    }
    let x = sol.x.as_slice();
    let corridor = PlanarCorridor {
        degree,
        lower: x[..nc].to_vec(),
        upper: x[nc..].to_vec(),
        domain,
        wrapper_halfwidth,
        samples,
    };
    corridor.certify(obstacles)?;
    Ok(corridor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::AnalyticCurve;
    use nalgebra::{Vector2, Vector3};

    fn planar_line() -> AnalyticCurve {
        AnalyticCurve::Line { origin: Vector3::zeros(), direction: Vector3::x(), domain: (0.0, 1.0), planar: true }
    }

    fn walls(w: f64) -> Vec<ProjectedObstacle> {
        (0..=20)
            .flat_map(|i| {
                let xi = i as f64 / 20.0;
                [
                    ProjectedObstacle { xi, x_perp: Vector2::new(w, 0.0) },
                    ProjectedObstacle { xi, x_perp: Vector2::new(-w, 0.0) },
                ]
            })
            .collect()
    }

    #[test]
    fn walls_give_constant_bounds() {
        let c = generate_planar(&planar_line(), &walls(0.3), 0, 8, 1.0).unwrap();
        let (lo, hi) = c.bounds_at(0.37);
        assert!((lo + 0.3).abs() < 1e-6 && (hi - 0.3).abs() < 1e-6);
    }

    #[test]
    fn single_obstacle_bites() {
        let obs = [ProjectedObstacle { xi: 0.5, x_perp: Vector2::new(0.2, 0.0) }];
        let c = generate_planar(&planar_line(), &obs, 6, 28, 0.5).unwrap();
        assert!(c.bounds_at(0.5).1 <= 0.2 + 1e-9);
        assert!(c.bounds_at(0.0).1 > 0.45);
    }

    #[test]
    fn obstacle_on_path_rejected() {
        let obs = [ProjectedObstacle { xi: 0.5, x_perp: Vector2::zeros() }];
        assert!(matches!(generate_planar(&planar_line(), &obs, 2, 12, 0.5), Err(Error::Generation(_))));
    }
}
