use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use pathparam::corridor::{
    contains, ellipse_at, generate, generate_planar, volume, CorridorOptions, EllipseCorridor, PlanarCorridor,
    ProjectedObstacle,
};
use pathparam::curve::AnalyticCurve;
use pathparam::frames::ptf_field;
use pathparam::lp::{solve_lp, LpProblem, LpStatus};
use proptest::prelude::*;

/// Feasible and bounded: a box around a known interior point plus random
/// rows through slack above it.
fn lp_strategy() -> impl Strategy<Value = LpProblem> {
    (2usize..7, 1usize..8).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n * m),
            prop::collection::vec(0.05..1.0f64, m),
            prop::collection::vec(-1.0..1.0f64, n),
        )
            .prop_map(move |(x0, a, slack, c)| {
                let a = DMatrix::from_row_slice(m, n, &a);
                let x0 = DVector::from_vec(x0);
                let b = &a * &x0 + DVector::from_vec(slack);
                let bounds = (0..n).map(|j| (x0[j] - 2.0, x0[j] + 2.0)).collect();
                LpProblem::new(DVector::from_vec(c), a, b).with_bounds(bounds)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lp_optimum_is_feasible_with_zero_duality_gap(p in lp_strategy()) {
        let s = solve_lp(&p).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        let ax = &p.a_ub * &s.x;
        for i in 0..ax.len() {
            prop_assert!(ax[i] <= p.b_ub[i] + 1e-9);
        }
        for (j, (l, u)) in p.bounds.iter().enumerate() {
            prop_assert!(s.x[j] >= l - 1e-9 && s.x[j] <= u + 1e-9);
        }
        prop_assert!((s.objective - p.c.dot(&s.x)).abs() < 1e-9);
        prop_assert!((s.objective - s.dual_objective(&p)).abs() < 1e-7 * s.objective.abs().max(1.0));
    }

    #[test]
    fn lp_objective_ignores_row_order(p in lp_strategy(), seed in any::<u64>()) {
        let m = p.a_ub.nrows();
        let mut order: Vec<usize> = (0..m).collect();
        let mut state = seed;
        for i in (1..m).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let a = DMatrix::from_fn(m, p.num_vars(), |r, c| p.a_ub[(order[r], c)]);
        let b = DVector::from_fn(m, |r, _| p.b_ub[order[r]]);
        let q = LpProblem::new(p.c.clone(), a, b).with_bounds(p.bounds.clone());
        let (s, t) = (solve_lp(&p).unwrap(), solve_lp(&q).unwrap());
        prop_assert!((s.objective - t.objective).abs() <= 1e-8 * s.objective.abs().max(1.0));
    }

    #[test]
    fn lp_objective_scales_with_cost(p in lp_strategy(), lambda in 0.1..10.0f64) {
        let mut q = p.clone();
        q.c *= lambda;
        let (s, t) = (solve_lp(&p).unwrap(), solve_lp(&q).unwrap());
        prop_assert!((t.objective - lambda * s.objective).abs() <= 1e-8 * t.objective.abs().max(1.0));
    }

    #[test]
    fn scattered_obstacles_stay_outside(points in prop::collection::vec((0.0..1.0f64, 0.2..0.9f64, 0.0..6.283f64), 1..40)) {
        let line = AnalyticCurve::unit_line();
        let obstacles: Vec<ProjectedObstacle> = points
            .iter()
            .map(|&(xi, r, phi)| ProjectedObstacle { xi, x_perp: Vector2::new(r * phi.cos(), r * phi.sin()) })
            .collect();
        let c = generate(&line, &obstacles, &CorridorOptions::new(4, 1.0)).unwrap();
        for o in &obstacles {
            prop_assert!(c.residual(o.xi, &o.x_perp) >= 1.0 - 1e-8);
        }
        for xi in c.sample_grid() {
            prop_assert!(c.residual(xi, &Vector2::zeros()) < 1.0);
        }
    }
}

#[test]
fn degree_zero_walls_give_the_half_width() {
    let line = AnalyticCurve::unit_line();
    let w = 0.3;
    let obstacles: Vec<ProjectedObstacle> = (0..=20)
        .flat_map(|k| {
            let xi = k as f64 / 20.0;
            [Vector2::new(w, 0.0), Vector2::new(-w, 0.0)].map(|x| ProjectedObstacle { xi, x_perp: x })
        })
        .collect();
    let c = generate_planar(&line_2d(), &obstacles, 0, 8, 1.0).unwrap();
    let (lo, hi) = c.bounds_at(0.4);
    assert!((lo + w).abs() < 1e-9 && (hi - w).abs() < 1e-9, "{lo} {hi}");
    let e = generate(&line, &obstacles, &CorridorOptions::new(0, 1.0)).unwrap();
    let s = ellipse_at(&e, 0.4).unwrap();
    assert!(e.residual(0.4, &Vector2::new(w, 0.0)) >= 1.0 - 1e-9);
    assert!(s.axes[0] <= w + 1e-9);
}

fn line_2d() -> AnalyticCurve {
    AnalyticCurve::Line { origin: Vector3::zeros(), direction: Vector3::x(), domain: (0.0, 1.0), planar: true }
}

#[test]
fn free_space_is_bounded_by_the_wrapper() {
    let line = AnalyticCurve::unit_line();
    let c = generate(&line, &[], &CorridorOptions::new(3, 0.5)).unwrap();
    let v = volume(&c, &line, 1000).unwrap();
    let disc = std::f64::consts::PI * 0.25;
    assert!(v <= disc * (1.0 + 1e-6), "{v}");
    assert!(v >= 0.5 * disc, "{v}");
}

#[test]
fn json_round_trips_preserve_the_corridors() {
    let line = AnalyticCurve::unit_line();
    let obstacles = [ProjectedObstacle { xi: 0.5, x_perp: Vector2::new(0.2, 0.1) }];
    let c = generate(&line, &obstacles, &CorridorOptions::new(3, 1.0)).unwrap();
    assert_eq!(EllipseCorridor::from_json(&c.to_json().unwrap()).unwrap(), c);
    let p = generate_planar(&line_2d(), &obstacles, 3, 16, 1.0).unwrap();
    assert_eq!(PlanarCorridor::from_json(&p.to_json().unwrap()).unwrap(), p);
}

#[test]
fn membership_uses_the_projection() {
    let line = AnalyticCurve::unit_line();
    let field = ptf_field(&line, 10).unwrap();
    let c = EllipseCorridor::constant(nalgebra::Matrix2::identity() * 4.0, Vector2::zeros(), (0.0, 1.0), 1.0);
    assert!(contains(&c, &line, &field, &Vector3::new(0.5, 0.4, 0.0)).unwrap());
    assert!(!contains(&c, &line, &field, &Vector3::new(0.5, 0.6, 0.0)).unwrap());
}
