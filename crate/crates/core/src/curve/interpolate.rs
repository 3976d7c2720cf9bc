use nalgebra::{DMatrix, DVector, Vector3};

use super::ParametricCurve;
use crate::error::{Error, Result};

const STENCIL: usize = 5;

/// Ordered interpolation points, optionally with their parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct WaypointSet {
    dimension: usize,
    points: Vec<Vector3<f64>>,
    params: Option<Vec<f64>>,
}

impl WaypointSet {
    pub fn new(dimension: usize, points: Vec<Vector3<f64>>) -> Result<Self> {
        Self::build(dimension, points, None)
    }

    /// Waypoints with explicit, strictly increasing parameter values.
    pub fn with_params(dimension: usize, points: Vec<Vector3<f64>>, params: Vec<f64>) -> Result<Self> {
        if params.len() != points.len() {
            return Err(Error::Construction("one parameter value per waypoint is required".into()));
        }
        if params.iter().any(|t| !t.is_finite()) || params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Construction("parameter values must increase strictly".into()));
        }
        Self::build(dimension, points, Some(params))
    }

    /// Planar waypoints from `(x, y)` pairs.
    pub fn planar(xy: &[[f64; 2]]) -> Result<Self> {
        Self::new(2, xy.iter().map(|p| Vector3::new(p[0], p[1], 0.0)).collect())
    }

    fn build(dimension: usize, points: Vec<Vector3<f64>>, params: Option<Vec<f64>>) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::Construction(format!("dimension must be 2 or 3, got {dimension}")));
        }
        if points.len() < 2 {
            return Err(Error::Construction("at least two waypoints are required".into()));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::Construction("waypoints must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Construction("consecutive waypoints coincide".into()));
        }
        let mut points = points;
        if dimension == 2 {
            for p in &mut points {
                p.z = 0.0;
            }
        }
        Ok(WaypointSet { dimension, points, params })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Explicit parameters, or cumulative chord length scaled to [0, 1].
    pub fn parameters(&self) -> Vec<f64> {
        if let Some(p) = &self.params {
            return p.clone();
        }
        let mut t = vec![0.0];
        for w in self.points.windows(2) {
            t.push(t.last().unwrap() + (w[1] - w[0]).norm());
        }
        let total = *t.last().unwrap();
        let n = t.len() - 1;
        for v in &mut t {
            *v /= total;
        }
        t[n] = 1.0;
        t
    }
}

/// Derivatives `0..=max_order` at `t[at]` of the polynomial through the
/// waypoints with indices `idx`.
fn stencil_derivatives(
    t: &[f64],
    pts: &[Vector3<f64>],
    idx: &[usize],
    at: usize,
    max_order: usize,
) -> Vec<Vector3<f64>> {
    let n = idx.len();
    let mut out = vec![Vector3::zeros(); max_order + 1];
    if n == 1 {
        out[0] = pts[idx[0]];
        return out;
    }
    // Scale the local variable so the Vandermonde system stays well conditioned.
    let scale = idx.iter().map(|&i| (t[i] - t[at]).abs()).fold(0.0, f64::max);
    let v = DMatrix::from_fn(n, n, |r, c| ((t[idx[r]] - t[at]) / scale).powi(c as i32));
    let lu = v.lu();
    for axis in 0..3 {
        let rhs = DVector::from_iterator(n, idx.iter().map(|&i| pts[i][axis]));
        let a = lu.solve(&rhs).expect("distinct parameters give a regular Vandermonde matrix");
        let mut fact = 1.0;
        for j in 0..=max_order.min(n - 1) {
            if j > 0 {
                fact *= j as f64;
            }
            out[j][axis] = a[j] * fact / scale.powi(j as i32);
        }
    }
    out[0] = pts[at];
    out
}

/// Hermite segment of degree `2r + 1` matching `d0` at `s = 0` and `d1` at `s = h`.
fn hermite_segment(d0: &[Vector3<f64>], d1: &[Vector3<f64>], h: f64, dim: usize) -> Vec<Vec<f64>> {
    let r = d0.len() - 1;
    let deg = 2 * r + 1;
    let falling = |j: usize, i: usize| -> f64 { ((j - i + 1)..=j).map(|v| v as f64).product() };
    let m = DMatrix::from_fn(r + 1, r + 1, |i, c| {
        let j = r + 1 + c;
        falling(j, i)
    });
    let lu = m.lu();
    let mut seg = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut b = vec![0.0; deg + 1];
        let mut fact = 1.0;
        for j in 0..=r {
            if j > 0 {
                fact *= j as f64;
            }
            b[j] = d0[j][axis] * h.powi(j as i32) / fact;
        }
        let rhs = DVector::from_fn(r + 1, |i, _| {
            let known: f64 = (i..=r).map(|j| b[j] * falling(j, i)).sum();
            d1[i][axis] * h.powi(i as i32) - known
        });
        let x = lu.solve(&rhs).expect("Hermite system is regular");
        for c in 0..=r {
            b[r + 1 + c] = x[c];
        }
        seg.push(b.iter().enumerate().map(|(j, v)| v / h.powi(j as i32)).collect());
    }
    seg
}

/// Interpolates waypoints with a curve that is exactly C^continuity.
///
/// Segments are Hermite polynomials of degree `2·max(c, 2) + 1`. Derivatives
/// up to order `c` are shared at interior knots (centered local fits over up
/// to five waypoints); higher Hermite orders come from one-sided fits, so the
/// curve is smooth inside each segment but only C^c across knots.
pub fn interpolate(wps: &WaypointSet, continuity: usize) -> Result<ParametricCurve> {
    if continuity > 4 {
        return Err(Error::Construction(format!("continuity {continuity} exceeds 4")));
    }
    let t = wps.parameters();
    let pts = wps.points();
    let m = pts.len() - 1;
    let r = continuity.max(2);

    let centered = |k: usize| -> Vec<Vector3<f64>> {
        let width = STENCIL.min(m + 1);
        let start = k.saturating_sub(width / 2).min(m + 1 - width);
        let idx: Vec<usize> = (start..start + width).collect();
        stencil_derivatives(&t, pts, &idx, k, r)
    };
    let left = |k: usize| -> Vec<Vector3<f64>> {
        let idx: Vec<usize> = (k.saturating_sub(STENCIL - 1)..=k).collect();
        stencil_derivatives(&t, pts, &idx, k, r)
    };
    let right = |k: usize| -> Vec<Vector3<f64>> {
        let idx: Vec<usize> = (k..=(k + STENCIL - 1).min(m)).collect();
        stencil_derivatives(&t, pts, &idx, k, r)
    };

    let shared: Vec<_> = (0..=m).map(centered).collect();
    let mut segments = Vec::with_capacity(m);
    for k in 0..m {
        let mut d0 = right(k);
        let mut d1 = left(k + 1);
        d0[..=continuity].copy_from_slice(&shared[k][..=continuity]);
        d1[..=continuity].copy_from_slice(&shared[k + 1][..=continuity]);
        segments.push(hermite_segment(&d0, &d1, t[k + 1] - t[k], wps.dimension()));
    }
    ParametricCurve::new(wps.dimension(), t, segments, continuity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Curve;

    #[test]
    fn two_points_give_a_straight_segment() {
        let w = WaypointSet::planar(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let c = interpolate(&w, 1).unwrap();
        for i in 0..=10 {
            let th = i as f64 / 10.0;
            assert!((c.eval(th, 1).unwrap() - Vector3::x()).norm() < 1e-12);
            assert!(c.eval(th, 0).unwrap().y.abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_matches_end_data() {
        let d0 = vec![Vector3::new(0.0, 1.0, 0.0), Vector3::new(1.0, 0.5, 0.0), Vector3::new(0.0, 2.0, 0.0)];
        let d1 = vec![Vector3::new(2.0, -1.0, 0.0), Vector3::new(0.5, 0.0, 0.0), Vector3::new(1.0, 1.0, 0.0)];
        let seg = hermite_segment(&d0, &d1, 0.3, 2);
        let c = ParametricCurve::new(2, vec![0.0, 0.3], vec![seg], 0).unwrap();
        for i in 0..3 {
            assert!((c.eval(0.0, i).unwrap() - d0[i]).norm() < 1e-10);
            assert!((c.eval(0.3, i).unwrap() - d1[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn insufficient_points_rejected() {
        assert!(WaypointSet::planar(&[[0.0, 0.0]]).is_err());
        assert!(WaypointSet::planar(&[[0.0, 0.0], [0.0, 0.0]]).is_err());
        let w = WaypointSet::planar(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(interpolate(&w, 5).is_err());
    }
}
