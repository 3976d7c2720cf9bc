//! Collision-free corridors around a framed path.
//!
//! The cross-section at progress ξ is the off-centered ellipse
//! `xᵀE(ξ)x − d(ξ)ᵀx ≤ 1` in the (e₂, e₃) plane, with every entry of E and
//! d a Chebyshev series in normalized ξ. The coefficients come from one LP
//! that keeps every obstacle outside, replaces E ≻ 0 by diagonal dominance
//! and minimizes the summed trace of E over a sample grid.

mod planar;

pub use planar::{generate_planar, PlanarCorridor};

use std::io::Read;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{basis, clenshaw, derivative_coeffs, normalize};
use crate::curve::{parametric_speed, uniform_grid, Curve};
use crate::error::{Error, Result};
use crate::frames::FrameField;
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::spatial::global_project;

/// Strictness of the diagonal-dominance rows in the LP.
const LP_MARGIN: f64 = 2e-9;
/// Dominance margin certified after the solve.
pub const DOMINANCE_MARGIN: f64 = 1e-9;
const WRAPPER_POINTS: usize = 16;
const OUTSIDE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    /// `x,y[,z]` rows; a non-numeric first row is a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = crate::io::read_numeric_rows(reader)?;
        Self::from_rows(&rows)
    }

    /// A JSON array of 2- or 3-element arrays.
    pub fn from_json(s: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = serde_json::from_str(s)?;
        Self::from_rows(&rows)
    }

    fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mut points = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != 2 && r.len() != 3 || r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("point {} must have 2 or 3 finite coordinates", i + 1)));
            }
            points.push(Vector3::new(r[0], r[1], r.get(2).copied().unwrap_or(0.0)));
        }
        Ok(PointCloud { points })
    }
}

/// An obstacle in path coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedObstacle {
    pub xi: f64,
    pub x_perp: Vector2<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionOptions {
    /// Points farther than this from the path are ignored.
    pub max_radius: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { max_radius: f64::INFINITY }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CloudProjection {
    pub obstacles: Vec<ProjectedObstacle>,
    /// Points whose nearest path point is an end of the domain.
    pub dropped_clamped: usize,
    /// Points beyond `max_radius`.
    pub dropped_far: usize,
    /// Points where the projection failed (e.g. equidistant loci).
    pub dropped_failed: usize,
}

/// Projects every cloud point onto the path, dropping the ones that have
/// no perpendicular foot inside the domain or lie too far away.
pub fn project_cloud(
    curve: &dyn Curve,
    frames: &FrameField,
    cloud: &PointCloud,
    options: &ProjectionOptions,
) -> CloudProjection {
    let mut out = CloudProjection::default();
    for p in &cloud.points {
        match global_project(curve, frames, p) {
            Ok(pr) => {
                if pr.state.eta.norm() > options.max_radius {
                    out.dropped_far += 1;
                } else {
                    out.obstacles.push(ProjectedObstacle { xi: pr.state.xi, x_perp: pr.state.eta });
                }
            }
            Err(Error::Clamped { .. }) => out.dropped_clamped += 1,
            Err(_) => out.dropped_failed += 1,
        }
    }
    out
}

/// Swept ellipse corridor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseCorridor {
    pub degree: usize,
    /// Coefficients of E₁₁, E₁₂, E₂₂.
    #[serde(rename = "cE")]
    pub c_e: [Vec<f64>; 3],
    /// Coefficients of d₁, d₂.
    #[serde(rename = "dE")]
    pub d_e: [Vec<f64>; 2],
    pub domain: (f64, f64),
    pub wrapper_radius: f64,
    /// Size of the uniform generation grid.
    #[serde(default)]
    pub samples: usize,
}

/// Cross-section data at one ξ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseSection {
    pub e: Matrix2<f64>,
    pub d: Vector2<f64>,
    pub center: Vector2<f64>,
    /// Semi-axes, shortest first.
    pub axes: [f64; 2],
    /// Right-hand side of `(x − c)ᵀE(x − c) ≤ level`.
    pub level: f64,
}

impl EllipseSection {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.level / self.e.determinant().sqrt()
    }
}

/// Options for [`generate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorridorOptions {
    pub degree: usize,
    pub samples: usize,
    pub wrapper_radius: f64,
}

impl CorridorOptions {
    /// Sample grid of 4(n + 1) points.
    pub fn new(degree: usize, wrapper_radius: f64) -> Self {
        CorridorOptions { degree, samples: 4 * (degree + 1), wrapper_radius }
    }
}

impl EllipseCorridor {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        let n = c.degree + 1;
        if c.c_e.iter().any(|v| v.len() != n) || c.d_e.iter().any(|v| v.len() != n) {
            return Err(Error::Parse(format!("corridor coefficients must have {n} entries")));
        }
        if !(c.domain.0 < c.domain.1) || !(c.wrapper_radius > 0.0) {
            return Err(Error::Parse("corridor domain or wrapper radius invalid".into()));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Constant cross-section `xᵀEx − dᵀx ≤ 1`.
    pub fn constant(e: Matrix2<f64>, d: Vector2<f64>, domain: (f64, f64), wrapper_radius: f64) -> Self {
        EllipseCorridor {
            degree: 0,
            c_e: [vec![e[(0, 0)]], vec![e[(0, 1)]], vec![e[(1, 1)]]],
            d_e: [vec![d.x], vec![d.y]],
            domain,
            wrapper_radius,
            samples: 0,
        }
    }

    fn raw(&self, xi: f64) -> (Matrix2<f64>, Vector2<f64>) {
        let u = normalize(xi, self.domain);
        let e11 = clenshaw(&self.c_e[0], u);
        let e12 = clenshaw(&self.c_e[1], u);
        let e22 = clenshaw(&self.c_e[2], u);
        let d = Vector2::new(clenshaw(&self.d_e[0], u), clenshaw(&self.d_e[1], u));
        (Matrix2::new(e11, e12, e12, e22), d)
    }

    /// `xᵀE(ξ)x − d(ξ)ᵀx`; at most 1 inside the corridor.
    pub fn residual(&self, xi: f64, x: &Vector2<f64>) -> f64 {
        let (e, d) = self.raw(xi);
        x.dot(&(e * x)) - d.dot(x)
    }

    /// dE/dξ and dd/dξ.
    pub fn derivative_at(&self, xi: f64) -> (Matrix2<f64>, Vector2<f64>) {
        let u = normalize(xi, self.domain);
        let k = 2.0 / (self.domain.1 - self.domain.0);
        let ev = |c: &[f64]| clenshaw(&derivative_coeffs(c), u) * k;
        let (a, b, c) = (ev(&self.c_e[0]), ev(&self.c_e[1]), ev(&self.c_e[2]));
        (Matrix2::new(a, b, b, c), Vector2::new(ev(&self.d_e[0]), ev(&self.d_e[1])))
    }

    /// Uniform generation grid.
    pub fn sample_grid(&self) -> Vec<f64> {
        uniform_grid(self.domain, self.samples.max(2) - 1)
    }
}

/// Cross-section at ξ; fails unless E(ξ) is positive definite.
pub fn ellipse_at(c: &EllipseCorridor, xi: f64) -> Result<EllipseSection> {
    let (lo, hi) = c.domain;
    if !(xi >= lo && xi <= hi) {
        return Err(Error::Domain { theta: xi, lo, hi });
    }
    let (e, d) = c.raw(xi);
    let eig = SymmetricEigen::new(e);
    let (l0, l1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    if !(l0 > 0.0 && l1 > 0.0) {
        return Err(Error::CorridorInvalid { xi, reason: format!("E has eigenvalues {l0:e}, {l1:e}") });
    }
    let inv = e.try_inverse().ok_or_else(|| Error::CorridorInvalid { xi, reason: "E singular".into() })?;
    let center = inv * d * 0.5;
    let level = 1.0 + 0.25 * d.dot(&(inv * d));
    let mut axes = [(level / l0).sqrt(), (level / l1).sqrt()];
    axes.sort_by(f64::total_cmp);
    Ok(EllipseSection { e, d, center, axes, level })
}

/// Solves the corridor LP for the given obstacles.
pub fn generate(
    curve: &dyn Curve,
    obstacles: &[ProjectedObstacle],
    options: &CorridorOptions,
) -> Result<EllipseCorridor> {
    let n = options.degree;
    let nc = n + 1;
    if options.samples < 2 * nc {
        return Err(Error::Precondition(format!(
            "{} samples cannot support degree {n} (need at least {})",
            options.samples,
            2 * nc
        )));
    }
    if !(options.wrapper_radius > 0.0) || !options.wrapper_radius.is_finite() {
        return Err(Error::Precondition("wrapper radius must be positive".into()));
    }
    let domain = curve.domain();
    for o in obstacles {
        crate::curve::check_domain(domain, o.xi)?;
    }
    let grid = uniform_grid(domain, options.samples - 1);
    let nv = 5 * nc;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut cost = vec![0.0; nv];

    let mut outside_row = |t: &[f64], x: &Vector2<f64>| {
        let mut r = vec![0.0; nv];
        for k in 0..nc {
            r[k] = -x.x * x.x * t[k];
            r[nc + k] = -2.0 * x.x * x.y * t[k];
            r[2 * nc + k] = -x.y * x.y * t[k];
            r[3 * nc + k] = x.x * t[k];
            r[4 * nc + k] = x.y * t[k];
        }
        rows.push(r);
        rhs.push(-1.0);
    };
    for &xi in &grid {
        let t = basis(n, normalize(xi, domain));
        for k in 0..WRAPPER_POINTS {
            let a = 2.0 * std::f64::consts::PI * k as f64 / WRAPPER_POINTS as f64;
            outside_row(&t, &(Vector2::new(a.cos(), a.sin()) * options.wrapper_radius));
        }
    }
    for o in obstacles {
        let t = basis(n, normalize(o.xi, domain));
        outside_row(&t, &o.x_perp);
    }
    for &xi in &grid {
        let t = basis(n, normalize(xi, domain));
        for k in 0..nc {
            cost[k] += t[k];
            cost[2 * nc + k] += t[k];
        }
        for diag in [0, 2] {
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; nv];
                for k in 0..nc {
                    r[diag * nc + k] = -t[k];
                    r[nc + k] = s * t[k];
                }
                rows.push(r);
                rhs.push(-LP_MARGIN);
            }
        }
    }
    let a = DMatrix::from_fn(rows.len(), nv, |i, j| rows[i][j]);
    let lp = LpProblem::new(DVector::from_vec(cost), a, DVector::from_vec(rhs));
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            let inside = obstacles.iter().filter(|o| o.x_perp.norm() < 1e-12).count();
            return Err(Error::Generation(format!(
                "corridor LP infeasible ({inside} obstacle(s) on the path itself)"
            )));
        }
        LpStatus::Unbounded => return Err(Error::Generation("corridor LP unbounded".into())),
    }
    let x = sol.x.as_slice();
    let corridor = EllipseCorridor {
        degree: n,
        c_e: [x[0..nc].to_vec(), x[nc..2 * nc].to_vec(), x[2 * nc..3 * nc].to_vec()],
        d_e: [x[3 * nc..4 * nc].to_vec(), x[4 * nc..5 * nc].to_vec()],
        domain,
        wrapper_radius: options.wrapper_radius,
        samples: options.samples,
    };
    certify(&corridor, obstacles)?;
    Ok(corridor)
}

/// Post-solve check of dominance, definiteness and collision-freeness,
/// computed from the coefficients alone.
pub fn certify(c: &EllipseCorridor, obstacles: &[ProjectedObstacle]) -> Result<()> {
    for xi in c.sample_grid() {
        let (e, _) = c.raw(xi);
        let off = e[(0, 1)].abs() + DOMINANCE_MARGIN;
        if !(e[(0, 0)] > off && e[(1, 1)] > off) {
            return Err(Error::CorridorInvalid { xi, reason: "diagonal dominance lost".into() });
        }
        ellipse_at(c, xi)?;
    }
    for o in obstacles {
        let r = c.residual(o.xi, &o.x_perp);
        if r < 1.0 - OUTSIDE_TOL {
            return Err(Error::Generation(format!(
                "obstacle at ξ = {} is inside the corridor (residual {r})",
                o.xi
            )));
        }
    }
    Ok(())
}

/// ∫ area(ξ)·σ(ξ) dξ by the trapezoid rule on `n + 1` nodes.
pub fn volume(c: &EllipseCorridor, curve: &dyn Curve, n: usize) -> Result<f64> {
    let grid = uniform_grid(c.domain, n.max(1));
    let mut vals = Vec::with_capacity(grid.len());
    for &xi in &grid {
        let s = ellipse_at(c, xi)?;
        vals.push(s.area() * parametric_speed(curve, xi)?);
    }
    let h = (c.domain.1 - c.domain.0) / (grid.len() - 1) as f64;
    let inner: f64 = vals[1..vals.len() - 1].iter().sum();
    Ok(h * (inner + 0.5 * (vals[0] + vals[vals.len() - 1])))
}

/// Whether `p` lies inside the corridor at its projected ξ.
pub fn contains(c: &EllipseCorridor, curve: &dyn Curve, frames: &FrameField, p: &Vector3<f64>) -> Result<bool> {
    let pr = global_project(curve, frames, p)?;
    Ok(c.residual(pr.state.xi, &pr.state.eta) <= 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::AnalyticCurve;

    #[test]
    fn sections_of_constant_corridors() {
        let unit = EllipseCorridor::constant(Matrix2::identity(), Vector2::zeros(), (0.0, 1.0), 1.0);
        let s = ellipse_at(&unit, 0.3).unwrap();
        assert_eq!(s.axes, [1.0, 1.0]);
        assert_eq!(s.center, Vector2::zeros());
        let flat = EllipseCorridor::constant(Matrix2::new(4.0, 0.0, 0.0, 1.0), Vector2::zeros(), (0.0, 1.0), 1.0);
        let s = ellipse_at(&flat, 0.3).unwrap();
        assert!((s.axes[0] - 0.5).abs() < 1e-15 && (s.axes[1] - 1.0).abs() < 1e-15);
        let off = EllipseCorridor::constant(Matrix2::identity(), Vector2::new(1.0, 0.0), (0.0, 1.0), 1.0);
        let s = ellipse_at(&off, 0.3).unwrap();
        assert!((s.center - Vector2::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s.axes[0] - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_section_is_reported() {
        let bad = EllipseCorridor::constant(Matrix2::new(1.0, 2.0, 2.0, 1.0), Vector2::zeros(), (0.0, 1.0), 1.0);
        assert!(matches!(ellipse_at(&bad, 0.5), Err(Error::CorridorInvalid { .. })));
    }

    #[test]
    fn straight_volumes() {
        let line = AnalyticCurve::unit_line();
        let unit = EllipseCorridor::constant(Matrix2::identity(), Vector2::zeros(), (0.0, 1.0), 1.0);
        assert!((volume(&unit, &line, 10).unwrap() - std::f64::consts::PI).abs() < 1e-12);
        let flat = EllipseCorridor::constant(Matrix2::new(4.0, 0.0, 0.0, 1.0), Vector2::zeros(), (0.0, 1.0), 1.0);
        assert!((volume(&flat, &line, 10).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn wrapper_only_gives_circle() {
        let line = AnalyticCurve::unit_line();
        let c = generate(&line, &[], &CorridorOptions::new(3, 0.5)).unwrap();
        for i in 0..=20 {
            let s = ellipse_at(&c, i as f64 / 20.0).unwrap();
            for a in s.axes {
                assert!((a - 0.5).abs() < 0.01, "axis {a}");
            }
        }
    }

    #[test]
    fn obstacle_on_path_is_infeasible() {
        let line = AnalyticCurve::unit_line();
        let obs = [ProjectedObstacle { xi: 0.5, x_perp: Vector2::zeros() }];
        assert!(matches!(generate(&line, &obs, &CorridorOptions::new(2, 0.5)), Err(Error::Generation(_))));
    }

    #[test]
    fn json_round_trip() {
        let line = AnalyticCurve::unit_line();
        let obs = [ProjectedObstacle { xi: 0.4, x_perp: Vector2::new(0.2, 0.1) }];
        let c = generate(&line, &obs, &CorridorOptions::new(2, 0.5)).unwrap();
        let back = EllipseCorridor::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(c.residual(0.4, &obs[0].x_perp) >= 1.0 - 1e-8);
    }
}
