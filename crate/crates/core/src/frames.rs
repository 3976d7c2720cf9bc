//! Adapted moving frames: Frenet-Serret frames and integrated parallel
//! transport frames with their angular rates and frame derivatives.
//!
//! Every rate is taken per unit path parameter θ, not per unit time.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};

use crate::curve::{check_domain, derivative_stack, unit_tangent, Curve, Side};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::jet::{self, Jet};

const FSF_SINGULAR: f64 = 1e-9;
const SMALL_ANGLE: f64 = 1e-8;
const ADAPTED_TOL: f64 = 1e-9;

/// Default number of PTF integration steps over the domain.
pub const DEFAULT_STEPS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Fsf,
    Ptf,
}

/// Frame derivatives available once the curve has been differentiated
/// to fourth order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameDerivatives {
    pub r_prime: Matrix3<f64>,
    pub r_dprime: Matrix3<f64>,
    pub alpha_world: Vector3<f64>,
    pub jerk_world: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSample {
    pub theta: f64,
    /// Columns are e₁, e₂, e₃.
    pub r: Matrix3<f64>,
    /// Angular rate in frame coordinates.
    pub omega_path: Vector3<f64>,
    pub omega_world: Vector3<f64>,
    pub derivatives: Option<FrameDerivatives>,
    /// Distance between the integrated first axis and the exact tangent
    /// before re-adaptation.
    pub drift: f64,
}

impl FrameSample {
    pub fn e1(&self) -> Vector3<f64> {
        self.r.column(0).into()
    }
    pub fn e2(&self) -> Vector3<f64> {
        self.r.column(1).into()
    }
    pub fn e3(&self) -> Vector3<f64> {
        self.r.column(2).into()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameField {
    pub kind: FrameKind,
    pub samples: Vec<FrameSample>,
    /// Domain of the curve the field was built on.
    pub curve_domain: (f64, f64),
}

impl FrameField {
    pub fn grid(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta).collect()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].theta, self.samples.last().unwrap().theta)
    }

    pub fn max_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.drift).fold(0.0, f64::max)
    }

    pub fn max_omega(&self) -> f64 {
        self.samples.iter().map(|s| s.omega_world.norm()).fold(0.0, f64::max)
    }

    /// θ, R row-major, ω^Γ, and world ω, α, j per sample. Missing
    /// derivatives are NaN.
    pub fn table(&self) -> Table {
        let mut columns = vec!["theta".to_string()];
        for i in 1..=3 {
            for j in 1..=3 {
                columns.push(format!("r{i}{j}"));
            }
        }
        for name in ["omega_path", "omega", "alpha", "jerk"] {
            for c in ["x", "y", "z"] {
                columns.push(format!("{name}_{c}"));
            }
        }
        let mut t = Table::new(&columns);
        for s in &self.samples {
            let mut row = vec![s.theta];
            for i in 0..3 {
                for j in 0..3 {
                    row.push(s.r[(i, j)]);
                }
            }
            row.extend(s.omega_path.iter());
            row.extend(s.omega_world.iter());
            match &s.derivatives {
                Some(d) => {
                    row.extend(d.alpha_world.iter());
                    row.extend(d.jerk_world.iter());
                }
                None => row.extend([f64::NAN; 6]),
            }
            t.push(row);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.table().write_csv(writer)
    }
}

/// Ω with Ωv = ω × v.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Unit tangent and its first three θ-derivatives from γ′ … γ⁗.
pub fn tangent_derivatives(d: &[Vector3<f64>; 4]) -> [Vector3<f64>; 4] {
    let g: jet::JetVec<4> = std::array::from_fn(|a| {
        Jet::<4>::from_derivatives(&[d[0][a], d[1][a], d[2][a], d[3][a]])
    });
    let inv_speed = jet::dot(&g, &g).sqrt().recip();
    let e1 = jet::scale(&g, inv_speed);
    std::array::from_fn(|k| Vector3::new(e1[0].derivative(k), e1[1].derivative(k), e1[2].derivative(k)))
}

/// Curvature and signed torsion.
pub fn curvature_torsion(curve: &dyn Curve, theta: f64) -> Result<(f64, f64)> {
    let d1 = curve.eval(theta, 1)?;
    let d2 = curve.eval(theta, 2)?;
    let d3 = curve.eval(theta, 3)?;
    let sigma = d1.norm();
    let b = d1.cross(&d2);
    let bn = b.norm();
    if bn < FSF_SINGULAR * sigma.powi(3) {
        return Err(Error::FsfSingularity { theta });
    }
    Ok((bn / sigma.powi(3), b.dot(&d3) / (bn * bn)))
}

/// Frenet-Serret frame with ω^Γ = σ[τ, 0, κ].
pub fn fsf_frame(curve: &dyn Curve, theta: f64) -> Result<FrameSample> {
    let (kappa, tau) = curvature_torsion(curve, theta)?;
    let d1 = curve.eval(theta, 1)?;
    let d2 = curve.eval(theta, 2)?;
    let sigma = d1.norm();
    let e1 = d1 / sigma;
    let e3 = d1.cross(&d2).normalize();
    let e2 = e3.cross(&e1);
    let r = Matrix3::from_columns(&[e1, e2, e3]);
    let omega_path = Vector3::new(sigma * tau, 0.0, sigma * kappa);
    Ok(FrameSample {
        theta,
        r,
        omega_path,
        omega_world: r * omega_path,
        derivatives: None,
        drift: 0.0,
    })
}

/// Twist-free angular rate `[0, −e₁′·e₃, e₁′·e₂]`.
pub fn ptf_angular_velocity(e1_prime: &Vector3<f64>, r: &Matrix3<f64>) -> Vector3<f64> {
    let e2 = r.column(1);
    let e3 = r.column(2);
    Vector3::new(0.0, -e1_prime.dot(&e3), e1_prime.dot(&e2))
}

/// `exp(Ω Δθ) R` with Ω built from a world-frame rate.
pub fn so3_exp_step(r: &Matrix3<f64>, omega_world: &Vector3<f64>, dtheta: f64) -> Result<Matrix3<f64>> {
    let phi = omega_world * dtheta;
    let angle = phi.norm();
    if angle >= std::f64::consts::PI {
        return Err(Error::StepTooLarge(angle));
    }
    let k = skew(&phi);
    let k2 = k * k;
    let exp = if angle < SMALL_ANGLE {
        Matrix3::identity() + k + k2 * 0.5
    } else {
        Matrix3::identity() + k * (angle.sin() / angle) + k2 * ((1.0 - angle.cos()) / (angle * angle))
    };
    Ok(exp * r)
}

/// Deterministic adapted frame at the start of the domain.
///
/// Space curves take e₂ from the world axis least aligned with e₁ (ties to
/// the lower index). Planar curves keep e₃ = ẑ so that e₂ stays in the
/// plane.
pub fn initial_frame(curve: &dyn Curve) -> Result<Matrix3<f64>> {
    let e1 = unit_tangent(curve, curve.domain().0)?;
    if curve.is_planar() {
        let e3 = Vector3::z();
        return Ok(Matrix3::from_columns(&[e1, e3.cross(&e1), e3]));
    }
    Ok(frame_from_tangent(&e1))
}

/// Completes a unit vector to a rotation by the least-aligned-axis rule.
pub fn frame_from_tangent(e1: &Vector3<f64>) -> Matrix3<f64> {
    let mut axis = 0;
    for i in 1..3 {
        if e1[i].abs() < e1[axis].abs() {
            axis = i;
        }
    }
    let a = Vector3::ith(axis, 1.0);
    let e2 = (a - e1 * a.dot(e1)).normalize();
    Matrix3::from_columns(&[*e1, e2, e1.cross(&e2)])
}

fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).norm()
}

/// Replaces the first axis by `e1` and re-orthonormalizes the other two.
pub(crate) fn readapt(r: &Matrix3<f64>, e1: &Vector3<f64>) -> (Matrix3<f64>, f64) {
    let drift = (r.column(0) - e1).norm();
    let mut e2: Vector3<f64> = r.column(1).into();
    e2 -= e1 * e2.dot(e1);
    let e2 = e2.normalize();
    (Matrix3::from_columns(&[*e1, e2, e1.cross(&e2)]), drift)
}

/// Integrates a parallel transport frame over `grid` from `r0`.
///
/// ω is held constant over each step; after every step the first axis is
/// reset to the exact tangent and the recorded drift measures the error
/// this removes.
pub fn ptfi(curve: &dyn Curve, grid: &[f64], r0: &Matrix3<f64>) -> Result<FrameField> {
    if grid.is_empty() {
        return Err(Error::Precondition("empty grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("grid must increase strictly".into()));
    }
    for &t in [grid[0], *grid.last().unwrap()].iter() {
        check_domain(curve.domain(), t)?;
    }
    let e1 = unit_tangent(curve, grid[0])?;
    if orthonormality_error(r0) > ADAPTED_TOL || r0.determinant() < 0.0 {
        return Err(Error::Precondition("initial frame is not a rotation".into()));
    }
    if (r0.column(0) - e1).norm() > ADAPTED_TOL {
        return Err(Error::Precondition("initial frame is not adapted to the tangent".into()));
    }
    let mut samples = Vec::with_capacity(grid.len());
    let mut r = *r0;
    let mut drift = 0.0;
    for (i, &theta) in grid.iter().enumerate() {
        let d = derivative_stack(curve, theta, Side::Right)?;
        let e1p = tangent_derivatives(&d)[1];
        let omega_path = ptf_angular_velocity(&e1p, &r);
        let omega_world = r * omega_path;
        samples.push(FrameSample { theta, r, omega_path, omega_world, derivatives: None, drift });
        if let Some(&next) = grid.get(i + 1) {
            let stepped = so3_exp_step(&r, &omega_world, next - theta)?;
            (r, drift) = readapt(&stepped, &unit_tangent(curve, next)?);
        }
    }
    Ok(FrameField { kind: FrameKind::Ptf, samples, curve_domain: curve.domain() })
}

/// PTF on a uniform grid of `steps` intervals from [`initial_frame`].
pub fn ptf_field(curve: &dyn Curve, steps: usize) -> Result<FrameField> {
    let grid = crate::curve::uniform_grid(curve.domain(), steps);
    ptfi(curve, &grid, &initial_frame(curve)?)
}

/// Pointwise PTF kinematics from curve derivatives γ′ … γ⁗ and the frame.
///
/// Returns ω^Γ and the derivative set (R′, R″, α, j in world coordinates).
pub fn ptf_kinematics(d: &[Vector3<f64>; 4], r: &Matrix3<f64>) -> (Vector3<f64>, FrameDerivatives) {
    let [_, e1p, e1pp, e1ppp] = tangent_derivatives(d);
    let e2 = r.column(1);
    let e3 = r.column(2);
    let w_path = ptf_angular_velocity(&e1p, r);
    let w = r * w_path;
    let rp = skew(&w) * r;
    let (e2p, e3p) = (rp.column(1), rp.column(2));
    let a_path = Vector3::new(0.0, -(e1pp.dot(&e3) + e1p.dot(&e3p)), e1pp.dot(&e2) + e1p.dot(&e2p));
    let alpha = r * a_path + rp * w_path;
    let rpp = skew(&alpha) * r + skew(&w) * rp;
    let (e2pp, e3pp) = (rpp.column(1), rpp.column(2));
    let j_path = Vector3::new(
        0.0,
        -(e1ppp.dot(&e3) + 2.0 * e1pp.dot(&e3p) + e1p.dot(&e3pp)),
        e1ppp.dot(&e2) + 2.0 * e1pp.dot(&e2p) + e1p.dot(&e2pp),
    );
    let jerk = r * j_path + rp * a_path * 2.0 + rpp * w_path;
    (
        w_path,
        FrameDerivatives { r_prime: rp, r_dprime: rpp, alpha_world: alpha, jerk_world: jerk },
    )
}

fn differentiate(field: &FrameField, curve: &dyn Curve) -> Result<FrameField> {
    let mut out = field.clone();
    for s in &mut out.samples {
        let d = derivative_stack(curve, s.theta, Side::Right)?;
        let (w_path, der) = ptf_kinematics(&d, &s.r);
        s.omega_path = w_path;
        s.omega_world = s.r * w_path;
        s.derivatives = Some(der);
    }
    Ok(out)
}

/// Adds R′, R″, α and j to every node of a PTF field.
///
/// α needs a C³ curve and j a C⁴ curve; lower classes are rejected with the
/// first deficient order named.
pub fn ptfd(field: &FrameField, curve: &dyn Curve) -> Result<FrameField> {
    let available = curve.continuity_class();
    for required in [3, 4] {
        if available < required {
            return Err(Error::Continuity { required, available });
        }
    }
    ptfd_segmentwise(field, curve)
}

/// As [`ptfd`] but for piecewise curves of any class: derivatives are
/// taken within each segment, right-continuous at knots.
pub fn ptfd_segmentwise(field: &FrameField, curve: &dyn Curve) -> Result<FrameField> {
    if field.kind != FrameKind::Ptf {
        return Err(Error::Precondition("frame derivatives need a PTF field".into()));
    }
    differentiate(field, curve)
}

/// Frame at θ by one exponential step from the nearest lower node.
pub fn frame_at(field: &FrameField, theta: f64) -> Result<FrameSample> {
    let (lo, hi) = field.span();
    if !(theta >= lo && theta <= hi) {
        return Err(Error::Domain { theta, lo, hi });
    }
    let k = field.samples.partition_point(|s| s.theta <= theta) - 1;
    let node = &field.samples[k];
    if node.theta == theta {
        return Ok(*node);
    }
    let r = so3_exp_step(&node.r, &node.omega_world, theta - node.theta)?;
    Ok(FrameSample {
        theta,
        r,
        omega_path: node.omega_path,
        omega_world: r * node.omega_path,
        derivatives: None,
        drift: 0.0,
    })
}

/// Frame at θ re-adapted to the exact tangent, with ω^Γ recomputed from
/// the curve. Used wherever the tangential component must vanish to
/// round-off (projection, spatial rates).
pub fn frame_at_adapted(field: &FrameField, curve: &dyn Curve, theta: f64) -> Result<FrameSample> {
    if field.kind == FrameKind::Fsf {
        return fsf_frame(curve, theta);
    }
    let s = frame_at(field, theta)?;
    let d = derivative_stack(curve, theta, Side::Right)?;
    let t = tangent_derivatives(&d);
    let (r, drift) = readapt(&s.r, &t[0]);
    let omega_path = ptf_angular_velocity(&t[1], &r);
    Ok(FrameSample { theta, r, omega_path, omega_world: r * omega_path, derivatives: None, drift })
}
