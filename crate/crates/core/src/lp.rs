//! Dense linear programming.
//!
//! `min cᵀx  s.t.  A x ≤ b,  l ≤ x ≤ u`, with free or bounded variables.
//!
//! The problem is solved through its dual in standard form,
//! `min hᵀz  s.t.  Gᵀz = −c,  z ≥ 0`, where `G x ≤ h` stacks the inequality
//! rows and the finite bounds. A two-phase primal simplex with Bland's rule
//! runs on the dual; the primal solution is read off the simplex
//! multipliers. Every optimal answer is certified by primal feasibility,
//! dual feasibility and a duality-gap check.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const CERT_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;
const FEAS_TOL: f64 = 1e-9;
const STALL_LIMIT: usize = 50;
const REINVERT_EVERY: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub c: DVector<f64>,
    pub a_ub: DMatrix<f64>,
    pub b_ub: DVector<f64>,
    /// Per-variable `(lower, upper)`; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Multipliers of the inequality rows (nonnegative).
    pub duals_ub: DVector<f64>,
    /// Multipliers of the lower and upper bounds (nonnegative, zero where
    /// the bound is infinite).
    pub duals_lower: DVector<f64>,
    pub duals_upper: DVector<f64>,
}

impl LpSolution {
    /// Value of the dual objective `−bᵀy − Σ(uᵢ μᵢ − lᵢ λᵢ)`.
    pub fn dual_objective(&self, p: &LpProblem) -> f64 {
        let mut v = -p.b_ub.dot(&self.duals_ub);
        for (j, (l, u)) in p.bounds.iter().enumerate() {
            if self.duals_lower[j] != 0.0 {
                v += l * self.duals_lower[j];
            }
            if self.duals_upper[j] != 0.0 {
                v -= u * self.duals_upper[j];
            }
        }
        v
    }
}

impl LpProblem {
    /// Problem with free variables.
    pub fn new(c: DVector<f64>, a_ub: DMatrix<f64>, b_ub: DVector<f64>) -> Self {
        let n = c.len();
        LpProblem { c, a_ub, b_ub, bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n] }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.a_ub.ncols() != n && self.a_ub.nrows() > 0 {
            return Err(Error::Precondition(format!(
                "A has {} columns for {n} variables",
                self.a_ub.ncols()
            )));
        }
        if self.a_ub.nrows() != self.b_ub.len() || self.bounds.len() != n {
            return Err(Error::Precondition("inconsistent LP dimensions".into()));
        }
        let nan = self.c.iter().chain(self.a_ub.iter()).chain(self.b_ub.iter()).any(|v| !v.is_finite())
            || self.bounds.iter().any(|(l, u)| l.is_nan() || u.is_nan() || *l == f64::INFINITY || *u == f64::NEG_INFINITY);
        if nan {
            return Err(Error::Precondition("LP data must be finite (bounds may be infinite)".into()));
        }
        Ok(())
    }

    /// Stacked system `G x ≤ h` and the origin of each row.
    fn stacked(&self) -> (DMatrix<f64>, DVector<f64>, Vec<RowKind>) {
        let n = self.c.len();
        let mut rows: Vec<(Vec<f64>, f64, RowKind)> = Vec::new();
        for i in 0..self.a_ub.nrows() {
            rows.push((self.a_ub.row(i).iter().copied().collect(), self.b_ub[i], RowKind::Ub(i)));
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_finite() {
                let mut r = vec![0.0; n];
                r[j] = -1.0;
                rows.push((r, -l, RowKind::Lower(j)));
            }
            if u.is_finite() {
                let mut r = vec![0.0; n];
                r[j] = 1.0;
                rows.push((r, u, RowKind::Upper(j)));
            }
        }
        let m = rows.len();
        let g = DMatrix::from_fn(m, n, |i, j| rows[i].0[j]);
        let h = DVector::from_iterator(m, rows.iter().map(|r| r.1));
        (g, h, rows.into_iter().map(|r| r.2).collect())
    }

    /// Plain-text dump: one `OBJ` line, then `ROW i: a₁ … aₙ <= b`, then
    /// `BOUND j: l u`, each value in `{:e}` form.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "LP {} {}", self.num_vars(), self.a_ub.nrows())?;
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        writeln!(w, "OBJ {}", fmt(self.c.as_slice()))?;
        for i in 0..self.a_ub.nrows() {
            let r: Vec<f64> = self.a_ub.row(i).iter().copied().collect();
            writeln!(w, "ROW {i}: {} <= {:e}", fmt(&r), self.b_ub[i])?;
        }
        for (j, (l, u)) in self.bounds.iter().enumerate() {
            writeln!(w, "BOUND {j}: {l:e} {u:e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum RowKind {
    Ub(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, PartialEq, Eq)]
enum StdStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

struct StdSolution {
    status: StdStatus,
    z: DVector<f64>,
    y: DVector<f64>,
    objective: f64,
    pivots: usize,
}

/// Dense tableau for `min cᵀz, A z = b, z ≥ 0` with one artificial
/// column per row. The artificial block holds B⁻¹, which allows periodic
/// reinversion from the original data.
struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        if self.pivots >= MAX_PIVOTS {
            return Err(Error::Solver {
                message: "pivot limit reached".into(),
                trace: vec![format!("{} pivots", self.pivots)],
            });
        }
        self.pivots += 1;
        let w = self.width;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (x, pv) in row.iter_mut().zip(&prow) {
                    *x -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        Ok(())
    }

    /// Rebuilds every row from the original data and the current basis.
    fn reinvert(&mut self, cost: &[f64]) {
        let (m, n, w) = (self.m, self.n, self.width);
        let column = |j: usize, i: usize| -> f64 {
            if j < n {
                self.a[(i, j)]
            } else if j - n == i {
                1.0
            } else {
                0.0
            }
        };
        let bmat = DMatrix::from_fn(m, m, |i, k| column(self.basis[k], i));
        let Some(inv) = bmat.try_inverse() else {
            return;
        };
        let mut full = DMatrix::zeros(m, w);
        full.view_mut((0, 0), (m, n)).copy_from(&self.a);
        full.view_mut((0, n), (m, m)).fill_with_identity();
        full.column_mut(w - 1).copy_from(&self.b);
        let rows = inv * full;
        for i in 0..m {
            for j in 0..w {
                self.t[i * w + j] = rows[(i, j)];
            }
        }
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.t[i * w + j] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.price(cost);
    }

    /// Objective row `cost − c_Bᵀ B⁻¹[A | I | b]`.
    fn price(&mut self, cost: &[f64]) {
        let (m, w) = (self.m, self.width);
        let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        for j in 0..w {
            let s: f64 = (0..m).map(|i| cb[i] * self.t[i * w + j]).sum();
            let base = if j < w - 1 { cost[j] } else { 0.0 };
            self.t[m * w + j] = base - s;
        }
    }

    /// Simplex over columns `< allowed`. Dantzig pricing with a two-pass
    /// ratio test; after a run of degenerate pivots it switches to Bland's
    /// rule, which cannot cycle, until the objective moves again.
    fn run(&mut self, allowed: usize, cost: &[f64], cost_scale: f64) -> Result<bool> {
        let obj = self.m;
        let tol = COST_TOL * cost_scale;
        let mut stalled = 0usize;
        let mut since_reinvert = 0usize;
        loop {
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert(cost);
                since_reinvert = 0;
            }
            let bland = stalled >= STALL_LIMIT;
            let enter = if bland {
                (0..allowed).find(|&j| self.at(obj, j) < -tol)
            } else {
                (0..allowed)
                    .filter(|&j| self.at(obj, j) < -tol)
                    .min_by(|&x, &y| self.at(obj, x).total_cmp(&self.at(obj, y)))
            };
            let Some(enter) = enter else {
                return Ok(true);
            };
            let col_max = (0..self.m).map(|i| self.at(i, enter).abs()).fold(0.0, f64::max);
            let ptol = PIVOT_TOL * col_max.max(1.0);
            let candidates: Vec<usize> = (0..self.m).filter(|&i| self.at(i, enter) > ptol).collect();
            if candidates.is_empty() {
                return Ok(false);
            }
            let leave = if bland {
                let min = candidates
                    .iter()
                    .map(|&i| self.rhs(i).max(0.0) / self.at(i, enter))
                    .fold(f64::INFINITY, f64::min);
                *candidates
                    .iter()
                    .filter(|&&i| self.rhs(i).max(0.0) / self.at(i, enter) <= min + 1e-12 * min.abs().max(1.0))
                    .min_by_key(|&&i| self.basis[i])
                    .unwrap()
            } else {
                let bound = candidates
                    .iter()
                    .map(|&i| (self.rhs(i).max(0.0) + FEAS_TOL) / self.at(i, enter))
                    .fold(f64::INFINITY, f64::min);
                *candidates
                    .iter()
                    .filter(|&&i| self.rhs(i).max(0.0) / self.at(i, enter) <= bound)
                    .max_by(|&&x, &&y| self.at(x, enter).total_cmp(&self.at(y, enter)))
                    .unwrap()
            };
            let step = self.rhs(leave).max(0.0) / self.at(leave, enter);
            if step * self.at(obj, enter).abs() <= tol {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(leave, enter)?;
            since_reinvert += 1;
            // Clip the tiny negatives the two-pass test may create.
            let w = self.width;
            for i in 0..self.m {
                if self.t[i * w + w - 1] < 0.0 {
                    self.t[i * w + w - 1] = 0.0;
                }
            }
        }
    }
}

fn solve_standard(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<StdSolution> {
    let (m, n) = a.shape();
    let width = n + m + 1;
    let sign: Vec<f64> = b.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let af = DMatrix::from_fn(m, n, |i, j| sign[i] * a[(i, j)]);
    let bf = DVector::from_fn(m, |i, _| sign[i] * b[i]);
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = af[(i, j)];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = bf[i];
    }
    let mut tab = Tableau { m, n, width, t, basis: (n..n + m).collect(), pivots: 0, a: af, b: bf };

    let mut phase1 = vec![0.0; width];
    for v in &mut phase1[n..n + m] {
        *v = 1.0;
    }
    tab.price(&phase1);
    let b_scale = b.amax().max(1.0);
    tab.run(n, &phase1, 1.0)?;
    tab.reinvert(&phase1);
    let infeas = -tab.rhs(m);
    if infeas > 1e-9 * b_scale {
        return Ok(StdSolution {
            status: StdStatus::Infeasible,
            z: DVector::zeros(n),
            y: DVector::zeros(m),
            objective: f64::NAN,
            pivots: tab.pivots,
        });
    }
    // Drive artificials out of the basis where a structural pivot exists.
    for r in 0..m {
        if tab.basis[r] >= n {
            let best = (0..n)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&x, &y| tab.at(r, x).abs().total_cmp(&tab.at(r, y).abs()));
            if let Some(j) = best {
                if tab.at(r, j).abs() > PIVOT_TOL {
                    tab.pivot(r, j)?;
                }
            }
        }
    }
    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(c.as_slice());
    tab.reinvert(&phase2);
    let c_scale = c.amax().max(1.0);
    if !tab.run(n, &phase2, c_scale)? {
        return Ok(StdSolution {
            status: StdStatus::Unbounded,
            z: DVector::zeros(n),
            y: DVector::zeros(m),
            objective: f64::NEG_INFINITY,
            pivots: tab.pivots,
        });
    }
    tab.reinvert(&phase2);

    let mut z = DVector::zeros(n);
    for (k, &j) in tab.basis.iter().enumerate() {
        if j < n {
            z[j] = tab.rhs(k).max(0.0);
        }
    }
    // Multipliers: the artificial columns carry −y in the objective row.
    let y = DVector::from_fn(m, |i, _| -tab.at(m, n + i) * sign[i]);
    Ok(StdSolution { status: StdStatus::Optimal, objective: c.dot(&z), z, y, pivots: tab.pivots })
}

/// Solves the LP; see the module docs for the method.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();
    let (g, h, kinds) = p.stacked();
    let m = g.nrows();
    let gt = g.transpose();
    let rhs = -&p.c;
    let dual = solve_standard(&gt, &rhs, &h)?;
    let empty = |status, iterations| LpSolution {
        status,
        x: DVector::zeros(n),
        objective: f64::NAN,
        iterations,
        duals_ub: DVector::zeros(p.a_ub.nrows()),
        duals_lower: DVector::zeros(n),
        duals_upper: DVector::zeros(n),
    };
    match dual.status {
        StdStatus::Unbounded => return Ok(empty(LpStatus::Infeasible, dual.pivots)),
        StdStatus::Infeasible => {
            // Farkas test: is there z ≥ 0, Gᵀz = 0, 1ᵀz ≤ 1 with hᵀz < 0?
            let mut a = DMatrix::zeros(n + 1, m + 1);
            a.view_mut((0, 0), (n, m)).copy_from(&gt);
            for j in 0..=m {
                a[(n, j)] = 1.0;
            }
            let mut b = DVector::zeros(n + 1);
            b[n] = 1.0;
            let mut cost = DVector::zeros(m + 1);
            cost.rows_mut(0, m).copy_from(&h);
            let f = solve_standard(&a, &b, &cost)?;
            let pivots = dual.pivots + f.pivots;
            let status = if f.status == StdStatus::Optimal && f.objective < -1e-9 * h.amax().max(1.0) {
                LpStatus::Infeasible
            } else {
                LpStatus::Unbounded
            };
            return Ok(empty(status, pivots));
        }
        StdStatus::Optimal => {}
    }
    let x = dual.y;
    let z = dual.z;

    let b_scale = 1.0 + h.amax();
    let c_scale = 1.0 + p.c.amax();
    let viol = (&g * &x - &h).max();
    let stat = (&gt * &z + &p.c).amax();
    let objective = p.c.dot(&x);
    let gap = (objective + h.dot(&z)).abs();
    if viol > CERT_TOL * b_scale || stat > CERT_TOL * c_scale || gap > CERT_TOL * (1.0 + objective.abs()) {
        return Err(Error::Solver {
            message: "optimality certificate failed".into(),
            trace: vec![
                format!("pivots {}", dual.pivots),
                format!("primal violation {viol:e}"),
                format!("dual residual {stat:e}"),
                format!("duality gap {gap:e}"),
            ],
        });
    }
    let mut duals_ub = DVector::zeros(p.a_ub.nrows());
    let mut duals_lower = DVector::zeros(n);
    let mut duals_upper = DVector::zeros(n);
    for (k, kind) in kinds.iter().enumerate() {
        match *kind {
            RowKind::Ub(i) => duals_ub[i] = z[k],
            RowKind::Lower(j) => duals_lower[j] = z[k],
            RowKind::Upper(j) => duals_upper[j] = z[k],
        }
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: dual.pivots,
        duals_ub,
        duals_lower,
        duals_upper,
    })
}
