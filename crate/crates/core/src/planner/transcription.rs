use nalgebra::{Const, DMatrix, U1};
use num_dual::Dual2SVec64;

use crate::corridor::PlanarCorridor;
use crate::curve::{uniform_grid, Curve};
use crate::error::{Error, Result};

use super::dynamics::{planar_rates, PlanarFrame, XI_DOT_MIN};
use super::model::{PlanarSystem, Scalar};
use super::solver::{Block, BlockKind, Nlp, Values};

/// Variables of one interval: y at both nodes, the duration, the input and
/// ξ̇, η̇ at the right node.
pub const LOCAL: usize = 17;
/// Residuals of one interval: six integration defects and two rate ties.
pub const RESIDUALS: usize = 8;
/// Per node: componentwise output velocity limits.
pub const NODE_INEQ: usize = 4;

/// Integrated part of the state, `[ξ, η, θ₁, θ₂, θ̇₁, θ̇₂]`, as positions
/// in the full state vector.
/// Fraction of the distance to the centre of curvature that η may use.
pub const TUBE_FRACTION: f64 = 0.5;

pub(crate) const Y_SLOTS: [usize; 6] = [0, 1, 4, 5, 6, 7];

/// Direct transcription of the minimum-time problem on a fixed ξ grid.
///
/// Joint rate, joint acceleration, corridor and progress limits are simple
/// bounds; the output velocity limit is the only inequality residual.
///
/// Decision vector: states `[ξ, η, ξ̇, η̇, θ₁, θ₂, θ̇₁, θ̇₂]` at N+1 nodes
/// interleaved with `[θ̈₁, θ̈₂, Δt]` on N intervals, 8(N+1) + 3N values.
/// One RK4 step in time of `(ξ̇(y), η̇(y), θ̇, u)` over Δtᵢ links the nodes,
/// and since every ξᵢ is pinned to the grid this fixes how long the output
/// takes to cover each slice of path. The node rates ξ̇, η̇ are tied to the
/// projected velocity of the output point. Integrating in time rather than
/// in ξ keeps the rest states at both ends, where ξ̇ = 0, regular.
pub struct NlpProblem<'a, M: PlanarSystem> {
    pub model: M,
    pub curve: &'a dyn Curve,
    pub grid: Vec<f64>,
    pub eta_bounds: Vec<(f64, f64)>,
    pub regularization: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn state_index(node: usize, slot: usize) -> usize {
    STRIDE * node + slot
}

/// Node j's state starts at 11j and interval j's input and duration follow
/// it, which keeps the Hessian banded.
const STRIDE: usize = 11;

impl<'a, M: PlanarSystem> NlpProblem<'a, M> {
    pub fn intervals(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn input_index(&self, interval: usize, k: usize) -> usize {
        STRIDE * interval + 8 + k
    }

    pub fn duration_index(&self, interval: usize) -> usize {
        STRIDE * interval + 10
    }

    pub fn interval_columns(&self, i: usize) -> [usize; LOCAL] {
        let mut c = [0; LOCAL];
        for (k, s) in Y_SLOTS.iter().enumerate() {
            c[k] = state_index(i, *s);
            c[9 + k] = state_index(i + 1, *s);
        }
        c[6] = self.duration_index(i);
        c[7] = self.input_index(i, 0);
        c[8] = self.input_index(i, 1);
        c[15] = state_index(i + 1, 2);
        c[16] = state_index(i + 1, 3);
        c
    }

    fn node_columns(node: usize) -> [usize; 4] {
        [4, 5, 6, 7].map(|s| state_index(node, s))
    }

    fn rates<D: Scalar>(&self, y: &[D; 6]) -> (D, D) {
        let frame = PlanarFrame::at(self.curve, y[0]);
        let v = self.model.velocity([y[2], y[3]], [y[4], y[5]]);
        planar_rates(&frame, y[1], v)
    }

    fn flow<D: Scalar>(&self, y: &[D; 6], u: [D; 2]) -> [D; 6] {
        let (xd, ed) = self.rates(y);
        [xd, ed, y[4], y[5], u[0], u[1]]
    }

    /// Interval residuals on local variables laid out as in
    /// [`interval_columns`](Self::interval_columns).
    pub fn interval_residuals<D: Scalar>(&self, l: &[D; LOCAL]) -> [D; RESIDUALS] {
        let dt = l[6];
        let y0: [D; 6] = std::array::from_fn(|k| l[k]);
        let y1: [D; 6] = std::array::from_fn(|k| l[9 + k]);
        let u = [l[7], l[8]];
        let shift = |y: &[D; 6], k: &[D; 6], h: D| -> [D; 6] { std::array::from_fn(|j| y[j] + k[j] * h) };
        let half = dt * 0.5;
        let k1 = self.flow(&y0, u);
        let k2 = self.flow(&shift(&y0, &k1, half), u);
        let k3 = self.flow(&shift(&y0, &k2, half), u);
        let k4 = self.flow(&shift(&y0, &k3, dt), u);
        let mut r = [D::from(0.0); RESIDUALS];
        for j in 0..6 {
            let incr = (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (dt / 6.0);
            r[j] = y1[j] - (y0[j] + incr);
        }
        let (xd, ed) = self.rates(&y1);
        r[6] = l[15] - xd;
        r[7] = l[16] - ed;
        r
    }

    /// Componentwise output velocity limits `±v − v_max ≤ 0` on
    /// `[θ₁, θ₂, θ̇₁, θ̇₂]`.
    pub fn node_inequalities<D: Scalar>(&self, l: &[D; 4]) -> [D; NODE_INEQ] {
        let vm = self.model.bounds().v_max;
        let v = self.model.velocity([l[0], l[1]], [l[2], l[3]]);
        [v[0] - vm, -v[0] - vm, v[1] - vm, -v[1] - vm]
    }

    pub fn total_time(&self, z: &[f64]) -> f64 {
        (0..self.intervals()).map(|i| z[self.duration_index(i)]).sum()
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let reg: f64 = (0..self.intervals())
            .map(|i| z[self.input_index(i, 0)].powi(2) + z[self.input_index(i, 1)].powi(2))
            .sum();
        self.total_time(z) + 0.5 * self.regularization * reg
    }
}

fn gather<D: Scalar, const K: usize>(z: &[f64], cols: &[usize; K]) -> [D; K] {
    cols.map(|c| D::from(z[c]))
}

fn second_order<const K: usize, const R: usize>(
    z: &[f64],
    cols: &[usize; K],
    f: impl Fn(&[Dual2SVec64<K>; K]) -> [Dual2SVec64<K>; R],
) -> (Vec<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let l: [Dual2SVec64<K>; K] = std::array::from_fn(|k| Dual2SVec64::from_re(z[cols[k]]).derivative(k));
    let out = f(&l);
    let mut jac = DMatrix::zeros(R, K);
    let mut hess = Vec::with_capacity(R);
    let values = out.iter().map(|o| o.re).collect();
    for (r, o) in out.iter().enumerate() {
        let g = o.v1.unwrap_generic(U1, Const::<K>);
        for k in 0..K {
            jac[(r, k)] = g[k];
        }
        let h = o.v2.unwrap_generic(Const::<K>, Const::<K>);
        hess.push(DMatrix::from_fn(K, K, |a, b| h[(a, b)]));
    }
    (values, jac, hess)
}

impl<M: PlanarSystem> Nlp for NlpProblem<'_, M> {
    fn num_vars(&self) -> usize {
        8 * self.grid.len() + 3 * self.intervals()
    }

    fn num_eq(&self) -> usize {
        RESIDUALS * self.intervals()
    }

    fn num_ineq(&self) -> usize {
        NODE_INEQ * self.grid.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn values(&self, z: &[f64]) -> Values {
        let mut eq = Vec::with_capacity(self.num_eq());
        for i in 0..self.intervals() {
            let l = gather::<f64, LOCAL>(z, &self.interval_columns(i));
            eq.extend(self.interval_residuals(&l));
        }
        let mut ineq = Vec::with_capacity(self.num_ineq());
        for j in 0..self.grid.len() {
            ineq.extend(self.node_inequalities(&gather::<f64, 4>(z, &Self::node_columns(j))));
        }
        Values { cost: self.objective(z), eq, ineq }
    }

    fn blocks(&self, z: &[f64]) -> Vec<Block> {
        let mut out = Vec::with_capacity(2 * self.intervals() + self.grid.len());
        for i in 0..self.intervals() {
            let k = self.duration_index(i);
            let (u0, u1) = (self.input_index(i, 0), self.input_index(i, 1));
            let rho = self.regularization;
            out.push(Block {
                kind: BlockKind::Objective,
                rows: vec![0],
                cols: vec![k, u0, u1],
                values: vec![z[k] + 0.5 * rho * (z[u0] * z[u0] + z[u1] * z[u1])],
                jac: DMatrix::from_row_slice(1, 3, &[1.0, rho * z[u0], rho * z[u1]]),
                hess: vec![DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, rho, rho]))],
            });
            let cols = self.interval_columns(i);
            let (values, jac, hess) = second_order::<LOCAL, RESIDUALS>(z, &cols, |l| self.interval_residuals(l));
            out.push(Block {
                kind: BlockKind::Equality,
                rows: (RESIDUALS * i..RESIDUALS * (i + 1)).collect(),
                cols: cols.to_vec(),
                values,
                jac,
                hess,
            });
        }
        for j in 0..self.grid.len() {
            let cols = Self::node_columns(j);
            let (values, jac, hess) = second_order::<4, NODE_INEQ>(z, &cols, |l| self.node_inequalities(l));
            out.push(Block {
                kind: BlockKind::Inequality,
                rows: (NODE_INEQ * j..NODE_INEQ * (j + 1)).collect(),
                cols: cols.to_vec(),
                values,
                jac,
                hess,
            });
        }

        out
    }
}

/// Transverse limits for the planner.
#[derive(Clone, Debug, PartialEq)]
pub enum Tube {
    /// η ≡ 0: follow the path exactly.
    Path,
    Constant(f64, f64),
    Corridor(PlanarCorridor),
}

impl Tube {
    pub fn bounds_at(&self, xi: f64) -> (f64, f64) {
        match self {
            Tube::Path => (0.0, 0.0),
            Tube::Constant(lo, hi) => (*lo, *hi),
            Tube::Corridor(c) => c.bounds_at(xi),
        }
    }
}

/// Builds the transcription on N uniform intervals of the curve's domain.
pub fn transcribe<'a, M: PlanarSystem>(model: M, curve: &'a dyn Curve, tube: &Tube, n: usize) -> Result<NlpProblem<'a, M>> {
    if n < 10 {
        return Err(Error::Transcription(format!("need at least 10 intervals, got {n}")));
    }
    if !curve.is_planar() {
        return Err(Error::Transcription("the planner needs a planar path".into()));
    }
    let grid = uniform_grid(curve.domain(), n);
    let b = model.bounds();
    if !(b.qdot_max > 0.0 && b.qddot_max > 0.0 && b.v_max > 0.0) {
        return Err(Error::Transcription("limits must be positive".into()));
    }
    let mut eta_bounds = Vec::with_capacity(n + 1);
    for &xi in &grid {
        let (lo, hi) = tube.bounds_at(xi);
        if !(lo <= 1e-12 && hi >= -1e-12) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Transcription(format!("corridor [{lo}, {hi}] at ξ = {xi} excludes the path")));
        }
        // Keep η on the regular side of the centre of curvature: the rates
        // divide by σ − ω₃η.
        let d1 = curve.eval(xi, 1)?;
        let d2 = curve.eval(xi, 2)?;
        let omega3 = (d1.x * d2.y - d1.y * d2.x) / d1.norm_squared();
        let reach = TUBE_FRACTION * d1.norm() / omega3.abs();
        let (lo, hi) = if omega3 > 0.0 { (lo, hi.min(reach)) } else if omega3 < 0.0 { (lo.max(-reach), hi) } else { (lo, hi) };
        eta_bounds.push((lo.min(0.0), hi.max(0.0)));
    }
    let q_start = model.inverse_position(point(curve, grid[0])?)?;
    model.inverse_position(point(curve, grid[n])?)?;
    let nv = 8 * (n + 1) + 3 * n;
    let mut lower = vec![f64::NEG_INFINITY; nv];
    let mut upper = vec![f64::INFINITY; nv];
    let fix = |i: usize, v: f64, lower: &mut Vec<f64>, upper: &mut Vec<f64>| {
        lower[i] = v;
        upper[i] = v;
    };
    for (j, &xi) in grid.iter().enumerate() {
        let end = j == 0 || j == n;
        fix(state_index(j, 0), xi, &mut lower, &mut upper);
        if end {
            fix(state_index(j, 1), 0.0, &mut lower, &mut upper);
            fix(state_index(j, 2), 0.0, &mut lower, &mut upper);
            fix(state_index(j, 3), 0.0, &mut lower, &mut upper);
            fix(state_index(j, 6), 0.0, &mut lower, &mut upper);
            fix(state_index(j, 7), 0.0, &mut lower, &mut upper);
        } else {
            lower[state_index(j, 1)] = eta_bounds[j].0;
            upper[state_index(j, 1)] = eta_bounds[j].1;
            lower[state_index(j, 2)] = XI_DOT_MIN;
            for s in [6, 7] {
                lower[state_index(j, s)] = -b.qdot_max;
                upper[state_index(j, s)] = b.qdot_max;
            }
        }
    }
    fix(state_index(0, 4), q_start[0], &mut lower, &mut upper);
    fix(state_index(0, 5), q_start[1], &mut lower, &mut upper);
    for i in 0..n {
        for k in 8..10 {
            lower[STRIDE * i + k] = -b.qddot_max;
            upper[STRIDE * i + k] = b.qddot_max;
        }
        // The speed limit and the tube clip bound ξ̇ by 2√2·v_max/σ, so a
        // floor a little below Δξ·σ/(2√2·v_max) only removes the degenerate
        // point where Δt and ξ̇ vanish together.
        let sigma = [grid[i], 0.5 * (grid[i] + grid[i + 1]), grid[i + 1]]
            .iter()
            .map(|&xi| curve.eval(xi, 1).map(|d| d.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        lower[STRIDE * i + 10] = 0.25 * (grid[i + 1] - grid[i]) * sigma / b.v_max;
    }
    Ok(NlpProblem { model, curve, grid, eta_bounds, regularization: 0.0, lower, upper })
}

fn point(curve: &dyn Curve, xi: f64) -> Result<[f64; 2]> {
    let p = curve.eval(xi, 0)?;
    Ok([p.x, p.y])
}

/// Path tracking at the largest constant ξ̇ (scaled by 0.9) that keeps the
/// output and joint rates within limits, at rest on both end nodes.
pub fn initial_guess<M: PlanarSystem>(p: &NlpProblem<'_, M>) -> Result<Vec<f64>> {
    let n = p.intervals();
    let b = p.model.bounds();
    let mut qs = Vec::with_capacity(n + 1);
    let mut unit_rates = Vec::with_capacity(n + 1);
    let mut scale = f64::INFINITY;
    for &xi in &p.grid {
        let q = p.model.inverse_position(point(p.curve, xi)?)?;
        let d = p.curve.eval(xi, 1)?;
        let qd = p.model.inverse_velocity(q, [d.x, d.y])?;
        scale = scale
            .min(b.v_max / d.x.abs().max(d.y.abs()).max(1e-12))
            .min(b.qdot_max / qd[0].abs().max(qd[1].abs()).max(1e-12));
        qs.push(q);
        unit_rates.push(qd);
    }
    let speed = 0.9 * scale;
    let mut z = vec![0.0; p.num_vars()];
    for j in 0..=n {
        let s = if j == 0 || j == n { 0.0 } else { speed };
        z[state_index(j, 0)] = p.grid[j];
        z[state_index(j, 2)] = s;
        z[state_index(j, 4)] = qs[j][0];
        z[state_index(j, 5)] = qs[j][1];
        z[state_index(j, 6)] = unit_rates[j][0] * s;
        z[state_index(j, 7)] = unit_rates[j][1] * s;
    }
    for i in 0..n {
        let dt = 2.0 * (p.grid[i + 1] - p.grid[i]) / (z[state_index(i, 2)] + z[state_index(i + 1, 2)]);
        z[p.duration_index(i)] = dt;
        for k in 0..2 {
            let du = z[state_index(i + 1, 6 + k)] - z[state_index(i, 6 + k)];
            z[p.input_index(i, k)] = (du / dt).clamp(-b.qddot_max, b.qddot_max);
        }
    }
    Ok(z)
}
