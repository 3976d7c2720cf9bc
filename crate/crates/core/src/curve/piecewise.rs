use nalgebra::Vector3;

use super::{Curve, Side};
use crate::error::{Error, Result};

const KNOT_TOL: f64 = 1e-9;
const REGULARITY_SAMPLES: usize = 8;

/// Piecewise polynomial curve in power basis.
///
/// Segment `k` covers `[knots[k], knots[k+1]]` and is written in the local
/// offset `s = θ − knots[k]`, so `coeffs[k][axis][p]` multiplies `s^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametricCurve {
    dimension: usize,
    knots: Vec<f64>,
    coeffs: Vec<Vec<Vec<f64>>>,
    continuity: usize,
}

impl ParametricCurve {
    /// Builds a curve and certifies knot continuity and regularity.
    pub fn new(
        dimension: usize,
        knots: Vec<f64>,
        coeffs: Vec<Vec<Vec<f64>>>,
        continuity: usize,
    ) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::Construction(format!("dimension must be 2 or 3, got {dimension}")));
        }
        if knots.len() < 2 || coeffs.len() + 1 != knots.len() {
            return Err(Error::Construction(format!(
                "{} knots cannot bound {} segments",
                knots.len(),
                coeffs.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Construction("knots must be finite and strictly increasing".into()));
        }
        for (k, seg) in coeffs.iter().enumerate() {
            if seg.len() != dimension {
                return Err(Error::Construction(format!(
                    "segment {k} has {} axes, expected {dimension}",
                    seg.len()
                )));
            }
            if seg.iter().any(|a| a.is_empty() || a.iter().any(|c| !c.is_finite())) {
                return Err(Error::Construction(format!("segment {k} has empty or non-finite coefficients")));
            }
        }
        let curve = ParametricCurve { dimension, knots, coeffs, continuity };
        curve.certify()?;
        Ok(curve)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `coeffs[segment][axis][power]`.
    pub fn coefficients(&self) -> &[Vec<Vec<f64>>] {
        &self.coeffs
    }

    /// Largest mismatch, relative to `max(1, |value|)`, over derivative
    /// orders `0..=order` at every interior knot.
    pub fn knot_mismatch(&self, order: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..self.knots.len() - 1 {
            let h = self.knots[k] - self.knots[k - 1];
            for m in 0..=order {
                let l = self.segment_derivative(k - 1, h, m);
                let r = self.segment_derivative(k, 0.0, m);
                worst = worst.max((l - r).norm() / l.norm().max(1.0));
            }
        }
        worst
    }

    fn certify(&self) -> Result<()> {
        let mismatch = self.knot_mismatch(self.continuity.min(super::MAX_ORDER));
        if mismatch > KNOT_TOL {
            return Err(Error::Construction(format!(
                "knot mismatch {mismatch:e} violates declared C{} continuity",
                self.continuity
            )));
        }
        for k in 0..self.coeffs.len() {
            let h = self.knots[k + 1] - self.knots[k];
            for i in 0..=REGULARITY_SAMPLES {
                let s = h * i as f64 / REGULARITY_SAMPLES as f64;
                let speed = self.segment_derivative(k, s, 1).norm();
                if speed < 1e-12 {
                    return Err(Error::Degenerate { theta: self.knots[k] + s, speed });
                }
            }
        }
        Ok(())
    }

    fn segment_index(&self, theta: f64, side: Side) -> usize {
        let n = self.coeffs.len();
        // Index of the first knot strictly greater than theta.
        let upper = self.knots.partition_point(|&k| k <= theta);
        let mut idx = upper.saturating_sub(1).min(n - 1);
        if side == Side::Left && idx > 0 && theta == self.knots[idx] {
            idx -= 1;
        }
        idx
    }

    fn segment_derivative(&self, seg: usize, s: f64, order: usize) -> Vector3<f64> {
        let mut out = Vector3::zeros();
        for (axis, c) in self.coeffs[seg].iter().enumerate() {
            let mut acc = 0.0;
            for p in (order..c.len()).rev() {
                let falling: f64 = ((p - order + 1)..=p).map(|v| v as f64).product();
                acc = acc * s + c[p] * falling;
            }
            out[axis] = acc;
        }
        out
    }
}

impl Curve for ParametricCurve {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn continuity_class(&self) -> usize {
        self.continuity
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots[1..self.knots.len() - 1].to_vec()
    }

    fn derivative(&self, theta: f64, order: usize, side: Side) -> Vector3<f64> {
        let k = self.segment_index(theta, side);
        self.segment_derivative(k, theta - self.knots[k], order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite_unit() -> ParametricCurve {
        // y = 3s² − 2s³ joins (0,0) to (1,1) with zero end slopes; x = s.
        ParametricCurve::new(
            2,
            vec![0.0, 1.0],
            vec![vec![vec![0.0, 1.0], vec![0.0, 0.0, 3.0, -2.0]]],
            0,
        )
        .unwrap()
    }

    #[test]
    fn cubic_hermite_midpoint() {
        let c = hermite_unit();
        assert!((c.eval(0.5, 0).unwrap().y - 0.5).abs() < 1e-15);
        assert!((c.eval(0.5, 1).unwrap().y - 1.5).abs() < 1e-15);
        assert_eq!(c.eval(0.5, 4).unwrap().y, 0.0);
    }

    #[test]
    fn knot_uses_right_segment() {
        let c = ParametricCurve::new(
            2,
            vec![0.0, 1.0, 2.0],
            vec![
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
                vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            ],
            0,
        )
        .unwrap();
        assert_eq!(c.eval(1.0, 1).unwrap().y, -1.0);
        assert_eq!(c.eval_side(1.0, 1, Side::Left).unwrap().y, 1.0);
    }

    #[test]
    fn declared_continuity_is_certified() {
        let err = ParametricCurve::new(
            2,
            vec![0.0, 1.0, 2.0],
            vec![
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
                vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            ],
            1,
        );
        assert!(matches!(err, Err(Error::Construction(_))));
    }

    #[test]
    fn rejects_degenerate_and_bad_knots() {
        let flat = ParametricCurve::new(2, vec![0.0, 1.0], vec![vec![vec![1.0], vec![2.0]]], 0);
        assert!(matches!(flat, Err(Error::Degenerate { .. })));
        let bad = ParametricCurve::new(2, vec![1.0, 1.0], vec![vec![vec![0.0, 1.0], vec![0.0]]], 0);
        assert!(matches!(bad, Err(Error::Construction(_))));
    }

    #[test]
    fn domain_error_outside() {
        let c = hermite_unit();
        assert!(matches!(c.eval(1.5, 0), Err(Error::Domain { .. })));
        assert!(matches!(c.eval(0.5, 5), Err(Error::Order(5))));
    }
}
