//! Minimum-time planning along a planar path inside a transverse corridor.

pub mod dynamics;
pub mod model;
pub mod solver;
pub mod transcription;

use std::io::Write;

use crate::corridor::{generate_planar, PlanarCorridor, ProjectedObstacle};
use crate::curve::{AnalyticCurve, Curve};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::spatial::spatial_rates_planar;

pub use model::{manipulator_velocity, Bounds, PlanarSystem, PointMass, TwoLinkManipulator};
pub use solver::{augmented_lagrangian, SolverOptions, SolverReport};
pub use transcription::{initial_guess, state_index, transcribe, NlpProblem, Tube};

use dynamics::temporal_rates;
use transcription::Y_SLOTS;

/// Planned motion sampled at the ξ grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub xi: Vec<f64>,
    /// `[ξ, η, ξ̇, η̇, θ₁, θ₂, θ̇₁, θ̇₂]` per node.
    pub states: Vec<[f64; 8]>,
    /// `[θ̈₁, θ̈₂]` per interval.
    pub inputs: Vec<[f64; 2]>,
    /// Time at each node.
    pub times: Vec<f64>,
    pub total_time: f64,
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
    pub report: SolverReport,
}

impl Trajectory {
    fn from_vector<M: PlanarSystem>(p: &NlpProblem<'_, M>, z: &[f64], report: SolverReport) -> Self {
        let nodes = p.grid.len();
        let states: Vec<[f64; 8]> = (0..nodes).map(|j| std::array::from_fn(|s| z[state_index(j, s)])).collect();
        let inputs = (0..nodes - 1).map(|i| [z[p.input_index(i, 0)], z[p.input_index(i, 1)]]).collect();
        let mut times = vec![0.0];
        for i in 0..nodes - 1 {
            times.push(times[i] + z[p.duration_index(i)]);
        }
        let positions = states.iter().map(|x| p.model.position([x[4], x[5]])).collect();
        let velocities = states.iter().map(|x| p.model.velocity([x[4], x[5]], [x[6], x[7]])).collect();
        Trajectory {
            xi: p.grid.clone(),
            total_time: *times.last().unwrap(),
            states,
            inputs,
            times,
            positions,
            velocities,
            report,
        }
    }

    /// Fraction of intervals where some joint acceleration has magnitude at
    /// least `level`.
    pub fn saturation(&self, level: f64) -> f64 {
        let hits = self.inputs.iter().filter(|u| u[0].abs().max(u[1].abs()) >= level).count();
        hits as f64 / self.inputs.len() as f64
    }

    /// One row per node; the last row repeats the last input.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "xi", "t", "eta", "xi_dot", "theta1", "theta2", "theta1_dot", "theta2_dot", "theta1_ddot",
            "theta2_ddot", "px", "py", "speed",
        ]);
        for (j, x) in self.states.iter().enumerate() {
            let u = self.inputs[j.min(self.inputs.len() - 1)];
            let v = self.velocities[j];
            t.push(vec![
                x[0],
                self.times[j],
                x[1],
                x[2],
                x[4],
                x[5],
                x[6],
                x[7],
                u[0],
                u[1],
                self.positions[j][0],
                self.positions[j][1],
                v[0].hypot(v[1]),
            ]);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.table().write_csv(w)
    }
}

/// Independent check of a trajectory against the transcribed constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validation {
    /// Largest mismatch between a node and one RK4 step of the transcribed
    /// dynamics from the previous node.
    pub max_defect: f64,
    /// Largest mismatch between a node and one RK4 step of the full 8-state
    /// temporal model. Both steps are 4th order, so this is discretization
    /// error rather than a constraint violation and shrinks as O(N⁻⁴).
    pub integration_error: f64,
    /// Largest mismatch between node rates and the projected output velocity.
    pub max_rate_mismatch: f64,
    /// Largest excess over any box or output velocity limit.
    pub max_bound_excess: f64,
    /// Largest distance from the output point to γ(ξ) + η e₂.
    pub max_position_drift: f64,
}

impl Validation {
    pub fn max_violation(&self) -> f64 {
        self.max_defect.max(self.max_rate_mismatch).max(self.max_bound_excess)
    }
}

/// Checks a trajectory from its samples alone: re-integrates each interval
/// with the transcribed dynamics and with the 8-state temporal model, and
/// re-evaluates every limit.
pub fn validate<M: PlanarSystem>(model: &M, curve: &dyn Curve, tube: &Tube, t: &Trajectory) -> Result<Validation> {
    let b = model.bounds();
    let mut v = Validation {
        max_defect: 0.0,
        integration_error: 0.0,
        max_rate_mismatch: 0.0, max_bound_excess: 0.0, max_position_drift: 0.0 };
    let excess = |x: f64, lim: f64| (x.abs() - lim).max(0.0);
    for (i, u) in t.inputs.iter().enumerate() {
        let (x0, x1) = (&t.states[i], &t.states[i + 1]);
        let dt = t.times[i + 1] - t.times[i];
        let f = |x: &[f64; 8]| temporal_rates(model, curve, x, u);
        let add = |x: &[f64; 8], k: &[f64; 8], h: f64| -> [f64; 8] { std::array::from_fn(|j| x[j] + h * k[j]) };
        let k1 = f(x0)?;
        let k2 = f(&add(x0, &k1, dt / 2.0))?;
        let k3 = f(&add(x0, &k2, dt / 2.0))?;
        let k4 = f(&add(x0, &k3, dt))?;
        // ξ̇ and η̇ are tied algebraically, so only the integrated slots count.
        for s in Y_SLOTS {
            let next = x0[s] + dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
            v.integration_error = v.integration_error.max((next - x1[s]).abs());
        }
        let y0 = Y_SLOTS.map(|s| x0[s]);
        let g = |y: &[f64; 6]| {
            let vel = model.velocity([y[2], y[3]], [y[4], y[5]]);
            let (xd, ed) = dynamics::planar_rates(&dynamics::PlanarFrame::at(curve, y[0]), y[1], vel);
            [xd, ed, y[4], y[5], u[0], u[1]]
        };
        let shift = |y: &[f64; 6], k: &[f64; 6], h: f64| -> [f64; 6] { std::array::from_fn(|j| y[j] + h * k[j]) };
        let k1 = g(&y0);
        let k2 = g(&shift(&y0, &k1, dt / 2.0));
        let k3 = g(&shift(&y0, &k2, dt / 2.0));
        let k4 = g(&shift(&y0, &k3, dt));
        for (j, s) in Y_SLOTS.iter().enumerate() {
            let next = y0[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            v.max_defect = v.max_defect.max((next - x1[*s]).abs());
        }
        v.max_bound_excess = v.max_bound_excess.max(excess(u[0], b.qddot_max)).max(excess(u[1], b.qddot_max));
    }
    let n = t.states.len() - 1;
    for (j, x) in t.states.iter().enumerate() {
        let d1 = curve.eval(x[0], 1)?;
        let d2 = curve.eval(x[0], 2)?;
        let sigma = d1.norm();
        let e1 = d1 / sigma;
        let e2 = nalgebra::Vector3::new(-e1.y, e1.x, 0.0);
        let omega3 = (d1.x * d2.y - d1.y * d2.x) / (sigma * sigma);
        let vel = model.velocity([x[4], x[5]], [x[6], x[7]]);
        let (xd, ed) = spatial_rates_planar(sigma, omega3, &e1, &e2, x[1], &nalgebra::Vector3::new(vel[0], vel[1], 0.0))?;
        v.max_rate_mismatch = v.max_rate_mismatch.max((xd - x[2]).abs()).max((ed - x[3]).abs());
        let (lo, hi) = if j == 0 || j == n { (0.0, 0.0) } else { tube.bounds_at(x[0]) };
        v.max_bound_excess = v
            .max_bound_excess
            .max(lo - x[1])
            .max(x[1] - hi)
            .max(excess(x[6], b.qdot_max))
            .max(excess(x[7], b.qdot_max))
            .max(excess(vel[0], b.v_max))
            .max(excess(vel[1], b.v_max));
        if j > 0 && j < n {
            v.max_bound_excess = v.max_bound_excess.max(dynamics::XI_DOT_MIN - x[2]);
        }
        let p = model.position([x[4], x[5]]);
        let g = curve.eval(x[0], 0)?;
        let target = g + e2 * x[1];
        v.max_position_drift = v.max_position_drift.max((p[0] - target.x).hypot(p[1] - target.y));
    }
    Ok(v)
}

/// Solves from the path-tracking initial guess. A non-converged solve still
/// returns the last iterate, flagged in the report.
pub fn solve<M: PlanarSystem>(p: &NlpProblem<'_, M>, opts: &SolverOptions) -> Result<Trajectory> {
    let z0 = initial_guess(p)?;
    solve_from(p, &z0, opts)
}

pub fn solve_from<M: PlanarSystem>(p: &NlpProblem<'_, M>, z0: &[f64], opts: &SolverOptions) -> Result<Trajectory> {
    if z0.len() != solver::Nlp::num_vars(p) || z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("initial guess must be finite and sized to the problem".into()));
    }
    let r = augmented_lagrangian(p, z0, opts);
    Ok(Trajectory::from_vector(p, &r.z, r.report))
}

/// Reference path of the two-link arm demonstration.
pub fn manipulator_reference() -> AnalyticCurve {
    AnalyticCurve::ManipulatorReference
}

/// Obstacles pinching the reference path from both sides: the free gap
/// narrows linearly from `wide` at ξ = 0 to `narrow` at ξ = 1.
pub fn narrowing_obstacles(wide: f64, narrow: f64, count: usize) -> Vec<ProjectedObstacle> {
    let mut out = Vec::with_capacity(2 * count);
    for k in 0..count {
        let xi = k as f64 / (count - 1) as f64;
        let w = wide + (narrow - wide) * xi;
        out.push(ProjectedObstacle { xi, x_perp: nalgebra::Vector2::new(w, 0.0) });
        out.push(ProjectedObstacle { xi, x_perp: nalgebra::Vector2::new(-w, 0.0) });
    }
    out
}

/// Corridor for the arm demonstration: a quadratic-degree LP corridor around
/// the reference path through a narrowing gap.
pub fn manipulator_corridor(curve: &dyn Curve) -> Result<PlanarCorridor> {
    generate_planar(curve, &narrowing_obstacles(0.2, 0.05, 21), 4, 40, 0.3)
}
