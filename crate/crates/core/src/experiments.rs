//! Desk-scale frame experiments: Frenet-Serret against parallel transport
//! on the built-in test curves, and the continuity ladder of the PTF rates
//! across an interpolation knot.

use nalgebra::Vector3;
use serde::Serialize;

use crate::curve::{derivative_stack, interpolate, uniform_grid, AnalyticCurve, Curve, ParametricCurve, Side, WaypointSet};
use crate::error::{Error, Result};
use crate::frames::{fsf_frame, ptf_field, ptf_kinematics, ptfd_segmentwise, readapt, FrameField, FrameKind};

/// Jumps below this are continuous.
pub const CONTINUOUS_BELOW: f64 = 1e-6;
/// Jumps at or above this are discontinuous; anything between is ambiguous.
pub const DISCONTINUOUS_FROM: f64 = 1e-2;
/// Knot at which the continuity curve is split.
pub const JOINT: f64 = 0.5;
/// Waypoint spacing of the continuity experiment.
pub const WAYPOINT_SPACING: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameSummary {
    pub kind: String,
    pub max_omega: f64,
    /// θ values where the frame is undefined.
    pub singular_at: Vec<f64>,
    /// θ values where e₂ reverses between consecutive samples.
    pub flips_at: Vec<f64>,
}

impl FrameSummary {
    pub fn is_singular(&self) -> bool {
        !self.singular_at.is_empty() || !self.flips_at.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameComparison {
    pub curve: String,
    pub steps: usize,
    pub fsf: FrameSummary,
    pub ptf: FrameSummary,
}

/// FSF samples on `grid`, skipping (and listing) the singular nodes. The
/// field is empty on a straight line.
pub fn fsf_field(curve: &dyn Curve, grid: &[f64]) -> Result<(FrameField, Vec<f64>)> {
    let mut samples = Vec::with_capacity(grid.len());
    let mut singular = Vec::new();
    for &theta in grid {
        match fsf_frame(curve, theta) {
            Ok(s) => samples.push(s),
            Err(Error::FsfSingularity { theta }) => singular.push(theta),
            Err(e) => return Err(e),
        }
    }
    Ok((FrameField { kind: FrameKind::Fsf, samples, curve_domain: curve.domain() }, singular))
}

fn summarize(field: &FrameField, singular_at: Vec<f64>) -> FrameSummary {
    let flips_at = field
        .samples
        .windows(2)
        .filter(|w| w[0].e2().dot(&w[1].e2()) < 0.0)
        .map(|w| w[1].theta)
        .collect();
    FrameSummary {
        kind: match field.kind {
            FrameKind::Fsf => "fsf".into(),
            FrameKind::Ptf => "ptf".into(),
        },
        max_omega: field.max_omega(),
        singular_at,
        flips_at,
    }
}

/// Both frame kinds on a uniform grid of `steps` intervals.
pub fn compare_frames(name: &str, curve: &dyn Curve, steps: usize) -> Result<(FrameField, FrameField, FrameComparison)> {
    let grid = uniform_grid(curve.domain(), steps);
    let (fsf, singular) = fsf_field(curve, &grid)?;
    let ptf = ptf_field(curve, steps)?;
    let comparison = FrameComparison {
        curve: name.into(),
        steps,
        fsf: summarize(&fsf, singular),
        ptf: summarize(&ptf, Vec::new()),
    };
    Ok((fsf, ptf, comparison))
}

/// The continuity test curve sampled every [`WAYPOINT_SPACING`] and
/// re-interpolated at class `continuity`, with the samples' own θ as knots
/// so that one knot sits exactly at [`JOINT`].
pub fn continuity_curve(continuity: usize) -> Result<ParametricCurve> {
    let source = AnalyticCurve::ContinuityTest;
    let count = (1.0 / WAYPOINT_SPACING).round() as usize;
    let params: Vec<f64> = (0..=count).map(|k| k as f64 / count as f64).collect();
    let points = params.iter().map(|&t| source.eval(t, 0)).collect::<Result<Vec<_>>>()?;
    interpolate(&WaypointSet::with_params(2, points, params)?, continuity)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Continuous,
    Discontinuous,
    Ambiguous,
}

impl Verdict {
    pub fn classify(jump: f64) -> Self {
        if jump < CONTINUOUS_BELOW {
            Verdict::Continuous
        } else if jump >= DISCONTINUOUS_FROM {
            Verdict::Discontinuous
        } else {
            Verdict::Ambiguous
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub continuity: usize,
    /// Jumps of ω, α and j (world coordinates) across the joint.
    pub jumps: [f64; 3],
    pub verdicts: [Verdict; 3],
}

impl ContinuityRow {
    /// The expected pattern: ω continuous from C², α from C³, j from C⁴.
    pub fn expected(continuity: usize) -> [Verdict; 3] {
        std::array::from_fn(|k| if continuity >= k + 2 { Verdict::Continuous } else { Verdict::Discontinuous })
    }

    pub fn matches_expectation(&self) -> bool {
        self.verdicts == Self::expected(self.continuity)
    }
}

/// PTF rates across the joint of the class-`continuity` curve. Returns the
/// differentiated field (derivatives right-continuous at knots) and the
/// measured jumps.
pub fn continuity_study(continuity: usize, steps: usize) -> Result<(FrameField, ContinuityRow)> {
    let curve = continuity_curve(continuity)?;
    let field = ptfd_segmentwise(&ptf_field(&curve, steps)?, &curve)?;
    let node = field
        .samples
        .iter()
        .min_by(|a, b| (a.theta - JOINT).abs().total_cmp(&(b.theta - JOINT).abs()))
        .ok_or_else(|| Error::Precondition("empty frame field".into()))?;
    if (node.theta - JOINT).abs() > 1e-12 {
        return Err(Error::Precondition(format!("grid of {steps} steps misses the joint")));
    }
    let side = |s: Side| -> Result<[Vector3<f64>; 3]> {
        let d = derivative_stack(&curve, JOINT, s)?;
        let (r, _) = readapt(&node.r, &d[0].normalize());
        let (w_path, der) = ptf_kinematics(&d, &r);
        Ok([r * w_path, der.alpha_world, der.jerk_world])
    };
    let (left, right) = (side(Side::Left)?, side(Side::Right)?);
    let jumps: [f64; 3] = std::array::from_fn(|k| (left[k] - right[k]).norm());
    Ok((field, ContinuityRow { continuity, jumps, verdicts: jumps.map(Verdict::classify) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matches_the_pattern() {
        for c in 0..=4 {
            let (_, row) = continuity_study(c, 1000).unwrap();
            assert!(row.matches_expectation(), "{row:?}");
        }
    }

    #[test]
    fn sinusoid_fsf_flips_and_ptf_does_not() {
        let (_, _, cmp) = compare_frames("sin2d", &AnalyticCurve::Sinusoid, 1000).unwrap();
        assert!(cmp.fsf.is_singular());
        assert!(!cmp.ptf.is_singular());
    }
}
