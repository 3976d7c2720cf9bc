use nalgebra::{DMatrix, DVector};

/// Role of a block of functions inside an [`Nlp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Objective,
    Equality,
    Inequality,
}

/// A few scalar functions that depend on a few variables.
///
/// `rows` index into the equality or inequality vector (ignored for the
/// objective, whose block values are summed). `jac` is rows × cols and
/// `hess[k]` is the cols × cols Hessian of row k.
#[derive(Clone, Debug)]
pub struct Block {
    pub kind: BlockKind,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
    pub jac: DMatrix<f64>,
    pub hess: Vec<DMatrix<f64>>,
}

/// Values of objective, equalities c(z) = 0 and inequalities g(z) ≤ 0.
#[derive(Clone, Debug)]
pub struct Values {
    pub cost: f64,
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
}

impl Values {
    pub fn max_violation(&self) -> f64 {
        let e = self.eq.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.ineq.iter().fold(e, |m, v| m.max(*v))
    }
}

/// Box-constrained nonlinear program with block-sparse derivatives.
pub trait Nlp {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn values(&self, z: &[f64]) -> Values;
    /// All blocks with first and second derivatives.
    fn blocks(&self, z: &[f64]) -> Vec<Block>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    pub violation_tol: f64,
    pub gradient_tol: f64,
    pub mu0: f64,
    pub mu_factor: f64,
    pub mu_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer: 200,
            max_inner: 60,
            violation_tol: 1e-5,
            gradient_tol: 1e-4,
            mu0: 10.0,
            mu_factor: 10.0,
            mu_max: 1e10,
        }
    }
}

/// One accepted outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterRecord {
    pub cost: f64,
    pub violation: f64,
    pub projected_gradient: f64,
    pub mu: f64,
    pub inner_iterations: usize,
    /// Merit values before and after the inner solve; the inner line search
    /// only accepts decreasing steps.
    pub merit_start: f64,
    pub merit_end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub max_violation: f64,
    pub projected_gradient: f64,
    pub cost: f64,
    pub trace: Vec<OuterRecord>,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub z: Vec<f64>,
    pub multipliers_eq: Vec<f64>,
    pub multipliers_ineq: Vec<f64>,
    pub report: SolverReport,
}

fn project(z: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in z.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn projected_gradient(z: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    z.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((zi, gi), (l, h))| ((zi - gi).clamp(*l, *h) - zi).abs())
        .fold(0.0, f64::max)
}

struct Multipliers<'a> {
    lambda: &'a [f64],
    nu: &'a [f64],
    mu: f64,
}

impl Multipliers<'_> {
    fn merit(&self, v: &Values) -> f64 {
        let mut m = v.cost;
        for (c, l) in v.eq.iter().zip(self.lambda) {
            m += l * c + 0.5 * self.mu * c * c;
        }
        for (g, n) in v.ineq.iter().zip(self.nu) {
            let s = (n + self.mu * g).max(0.0);
            m += (s * s - n * n) / (2.0 * self.mu);
        }
        m
    }

    /// Gradient and Hessian of the merit function.
    fn derivatives(&self, n: usize, blocks: &[Block]) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for b in blocks {
            for (k, &value) in b.values.iter().enumerate() {
                let (w, curvature) = match b.kind {
                    BlockKind::Objective => (1.0, 0.0),
                    BlockKind::Equality => (self.lambda[b.rows[k]] + self.mu * value, self.mu),
                    BlockKind::Inequality => {
                        let s = self.nu[b.rows[k]] + self.mu * value;
                        if s <= 0.0 {
                            continue;
                        }
                        (s, self.mu)
                    }
                };
                for (a, &ia) in b.cols.iter().enumerate() {
                    let ja = b.jac[(k, a)];
                    grad[ia] += w * ja;
                    for (c, &ic) in b.cols.iter().enumerate() {
                        hess[(ia, ic)] += w * b.hess[k][(a, c)] + curvature * ja * b.jac[(k, c)];
                    }
                }
            }
        }
        (grad, hess)
    }
}

/// In-place Cholesky of a symmetric matrix with half-bandwidth `b`; the
/// lower triangle is overwritten by the factor.
fn band_cholesky(a: &mut DMatrix<f64>, b: usize) -> bool {
    let m = a.nrows();
    for j in 0..m {
        let lo = j.saturating_sub(b);
        let mut s = a[(j, j)];
        for k in lo..j {
            s -= a[(j, k)] * a[(j, k)];
        }
        if !(s > 0.0) || !s.is_finite() {
            return false;
        }
        let d = s.sqrt();
        a[(j, j)] = d;
        for i in j + 1..m.min(j + b + 1) {
            let mut t = a[(i, j)];
            for k in i.saturating_sub(b).max(lo)..j {
                t -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = t / d;
        }
    }
    true
}

fn band_solve(l: &DMatrix<f64>, b: usize, rhs: &mut [f64]) {
    let m = rhs.len();
    for i in 0..m {
        let mut t = rhs[i];
        for k in i.saturating_sub(b)..i {
            t -= l[(i, k)] * rhs[k];
        }
        rhs[i] = t / l[(i, i)];
    }
    for i in (0..m).rev() {
        let mut t = rhs[i];
        for k in i + 1..m.min(i + b + 1) {
            t -= l[(k, i)] * rhs[k];
        }
        rhs[i] = t / l[(i, i)];
    }
}

/// Reduced Hessian on the free variables and its half-bandwidth.
fn reduce(hess: &DMatrix<f64>, free: &[usize]) -> (DMatrix<f64>, usize) {
    let m = free.len();
    let h = DMatrix::from_fn(m, m, |a, b| hess[(free[a], free[b])]);
    let mut band = 0;
    for a in 0..m {
        for b in 0..a {
            if h[(a, b)] != 0.0 {
                band = band.max(a - b);
                break;
            }
        }
    }
    (h, band)
}

/// Minimizes g·d + ½ dᵀ(H + δI)d over lo ≤ d ≤ hi by primal-dual active-set
/// iterations started from `active` (−1 lower, 1 upper, 0 free; entries with
/// lo = hi are always held). `None` when a reduced matrix is not positive
/// definite.
fn box_step(hess: &DMatrix<f64>, grad: &DVector<f64>, lo: &[f64], hi: &[f64], active: &mut [i8], delta: f64) -> Option<DVector<f64>> {
    let n = grad.len();
    let mut d = DVector::zeros(n);
    for _ in 0..25 {
        for i in 0..n {
            d[i] = match active[i] {
                -1 => lo[i],
                1 => hi[i],
                _ => 0.0,
            };
        }
        let free: Vec<usize> = (0..n).filter(|&i| active[i] == 0).collect();
        let (mut l, bw) = reduce(hess, &free);
        for a in 0..free.len() {
            l[(a, a)] += delta;
        }
        if !band_cholesky(&mut l, bw) {
            return None;
        }
        let hd = hess * &d;
        let mut rhs: Vec<f64> = free.iter().map(|&i| -grad[i] - hd[i]).collect();
        band_solve(&l, bw, &mut rhs);
        for (a, &i) in free.iter().enumerate() {
            d[i] = rhs[a];
        }
        let r = hess * &d + &d * delta + grad;
        let mut changed = false;
        for i in 0..n {
            let next = if hi[i] <= lo[i] {
                active[i]
            } else if active[i] == 0 {
                if d[i] < lo[i] {
                    -1
                } else if d[i] > hi[i] {
                    1
                } else {
                    0
                }
            } else if active[i] == -1 {
                if r[i] > 0.0 { -1 } else { 0 }
            } else if r[i] < 0.0 {
                1
            } else {
                0
            };
            changed |= next != active[i];
            active[i] = next;
        }
        if !changed {
            break;
        }
    }
    for i in 0..n {
        d[i] = d[i].clamp(lo[i], hi[i]);
    }
    Some(d)
}

/// Projected Levenberg–Marquardt minimization of the merit function over the
/// box. Each step solves the damped quadratic model exactly on the box and
/// is accepted only when the merit decreases by a fraction of the predicted
/// decrease. Returns (iterations, merit at start, merit at end).
fn inner_solve<P: Nlp + ?Sized>(
    p: &P,
    z: &mut Vec<f64>,
    mult: &Multipliers,
    tol: f64,
    max_iter: usize,
    delta: &mut f64,
) -> (usize, f64, f64) {
    let (lo, hi) = (p.lower(), p.upper());
    let n = p.num_vars();
    let mut merit = mult.merit(&p.values(z));
    let start = merit;
    for it in 0..max_iter {
        let blocks = p.blocks(z);
        let (grad, hess) = mult.derivatives(n, &blocks);
        let pg = projected_gradient(z, grad.as_slice(), lo, hi);
        if pg <= tol {
            return (it, start, merit);
        }
        let dlo: Vec<f64> = (0..n).map(|i| lo[i] - z[i]).collect();
        let dhi: Vec<f64> = (0..n).map(|i| hi[i] - z[i]).collect();
        let guess: Vec<i8> = (0..n)
            .map(|i| {
                if hi[i] <= lo[i] || (dlo[i] >= 0.0 && grad[i] > 0.0) {
                    -1
                } else if dhi[i] <= 0.0 && grad[i] < 0.0 {
                    1
                } else {
                    0
                }
            })
            .collect();
        let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(1.0, f64::max);
        let floor = 1e-12 * scale;
        let mut accepted = false;
        for _ in 0..60 {
            let mut active = guess.clone();
            let Some(s) = box_step(&hess, &grad, &dlo, &dhi, &mut active, *delta) else {
                *delta = (*delta * 10.0).max(floor);
                continue;
            };
            let trial: Vec<f64> = z.iter().zip(s.iter()).map(|(a, b)| a + b).collect();
            let predicted = -(grad.dot(&s) + 0.5 * s.dot(&(&hess * &s)));
            let m = mult.merit(&p.values(&trial));
            let actual = merit - m;
            if m.is_finite() && predicted > 0.0 && actual >= 1e-4 * predicted {
                let rho = actual / predicted;
                if rho > 0.75 {
                    *delta = if *delta / 4.0 < floor { 0.0 } else { *delta / 4.0 };
                } else if rho < 0.25 {
                    *delta = (*delta * 2.0).max(floor);
                }
                *z = trial;
                merit = m;
                accepted = true;
                break;
            }
            *delta = (*delta * 8.0).max(floor);
            if *delta > 1e16 * scale {
                break;
            }
        }
        if !accepted {
            *delta = scale * 1e-6;
            return (it + 1, start, merit);
        }
    }
    (max_iter, start, merit)
}

/// Augmented Lagrangian method with Powell–Hestenes–Rockafellar treatment of
/// inequalities and projected Newton inner solves.
pub fn augmented_lagrangian<P: Nlp + ?Sized>(p: &P, z0: &[f64], opts: &SolverOptions) -> SolverResult {
    let (lo, hi) = (p.lower(), p.upper());
    let mut z = z0.to_vec();
    project(&mut z, lo, hi);
    let mut lambda = vec![0.0; p.num_eq()];
    let mut nu = vec![0.0; p.num_ineq()];
    let mut mu = opts.mu0;
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut prev_violation = f64::INFINITY;
    let mut report = None;
    let mut delta = 0.0;
    for outer in 0..opts.max_outer {
        let tol = (0.1f64.powi(outer as i32 + 1)).max(0.1 * opts.gradient_tol);
        let (iters, m0, m1) = inner_solve(p, &mut z, &Multipliers { lambda: &lambda, nu: &nu, mu }, tol, opts.max_inner, &mut delta);
        inner_total += iters;
        let v = p.values(&z);
        for (l, c) in lambda.iter_mut().zip(&v.eq) {
            *l += mu * c;
        }
        for (n, g) in nu.iter_mut().zip(&v.ineq) {
            *n = (*n + mu * g).max(0.0);
        }
        let violation = v.max_violation();
        let lagrangian = Multipliers { lambda: &lambda, nu: &nu, mu };
        let blocks = p.blocks(&z);
        let mut grad = vec![0.0; p.num_vars()];
        for b in &blocks {
            for (k, _) in b.values.iter().enumerate() {
                let w = match b.kind {
                    BlockKind::Objective => 1.0,
                    BlockKind::Equality => lagrangian.lambda[b.rows[k]],
                    BlockKind::Inequality => lagrangian.nu[b.rows[k]],
                };
                for (a, &i) in b.cols.iter().enumerate() {
                    grad[i] += w * b.jac[(k, a)];
                }
            }
        }
        let pg = projected_gradient(&z, &grad, lo, hi);
        trace.push(OuterRecord {
            cost: v.cost,
            violation,
            projected_gradient: pg,
            mu,
            inner_iterations: iters,
            merit_start: m0,
            merit_end: m1,
        });
        if violation <= opts.violation_tol && pg <= opts.gradient_tol {
            report = Some((true, outer + 1, violation, pg, v.cost));
            break;
        }
        if violation > opts.violation_tol && violation > 0.25 * prev_violation {
            mu = (mu * opts.mu_factor).min(opts.mu_max);
        }
        prev_violation = violation;
    }
    let (converged, outer, violation, pg, cost) = report.unwrap_or_else(|| {
        let last = trace.last().cloned();
        let (vi, pg, c) = last.map(|r| (r.violation, r.projected_gradient, r.cost)).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        (false, trace.len(), vi, pg, c)
    });
    SolverResult {
        z,
        multipliers_eq: lambda,
        multipliers_ineq: nu,
        report: SolverReport {
            converged,
            outer_iterations: outer,
            inner_iterations: inner_total,
            max_violation: violation,
            projected_gradient: pg,
            cost,
            trace,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min (x−2)² + (y−1)² s.t. x + y = 1, x ≤ 0.25, y ∈ [−5, 5].
    struct Toy {
        lo: Vec<f64>,
        hi: Vec<f64>,
    }

    impl Nlp for Toy {
        fn num_vars(&self) -> usize {
            2
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn num_ineq(&self) -> usize {
            1
        }
        fn lower(&self) -> &[f64] {
            &self.lo
        }
        fn upper(&self) -> &[f64] {
            &self.hi
        }
        fn values(&self, z: &[f64]) -> Values {
            Values {
                cost: (z[0] - 2.0).powi(2) + (z[1] - 1.0).powi(2),
                eq: vec![z[0] + z[1] - 1.0],
                ineq: vec![z[0] - 0.25],
            }
        }
        fn blocks(&self, z: &[f64]) -> Vec<Block> {
            let v = self.values(z);
            let zero = DMatrix::zeros(2, 2);
            vec![
                Block {
                    kind: BlockKind::Objective,
                    rows: vec![0],
                    cols: vec![0, 1],
                    values: vec![v.cost],
                    jac: DMatrix::from_row_slice(1, 2, &[2.0 * (z[0] - 2.0), 2.0 * (z[1] - 1.0)]),
                    hess: vec![DMatrix::identity(2, 2) * 2.0],
                },
                Block {
                    kind: BlockKind::Equality,
                    rows: vec![0],
                    cols: vec![0, 1],
                    values: v.eq,
                    jac: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                    hess: vec![zero.clone()],
                },
                Block {
                    kind: BlockKind::Inequality,
                    rows: vec![0],
                    cols: vec![0, 1],
                    values: v.ineq,
                    jac: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                    hess: vec![zero],
                },
            ]
        }
    }

    #[test]
    fn solves_small_constrained_problem() {
        let toy = Toy { lo: vec![-10.0, -5.0], hi: vec![10.0, 5.0] };
        let r = augmented_lagrangian(&toy, &[0.0, 0.0], &SolverOptions::default());
        assert!(r.report.converged, "{:?}", r.report);
        assert!((r.z[0] - 0.25).abs() < 1e-5 && (r.z[1] - 0.75).abs() < 1e-5, "{:?}", r.z);
        assert!(r.report.trace.iter().all(|t| t.merit_end <= t.merit_start));
    }

    #[test]
    fn respects_boxes() {
        let toy = Toy { lo: vec![-10.0, 0.9], hi: vec![10.0, 5.0] };
        let r = augmented_lagrangian(&toy, &[3.0, 3.0], &SolverOptions::default());
        assert!(r.report.converged);
        assert!((r.z[1] - 0.9).abs() < 1e-5 && (r.z[0] - 0.1).abs() < 1e-5, "{:?}", r.z);
    }
}
