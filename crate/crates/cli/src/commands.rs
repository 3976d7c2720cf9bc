use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use pathparam::corridor::{
    ellipse_at, generate, generate_planar, project_cloud, volume, CorridorOptions, PlanarCorridor, PointCloud,
    ProjectionOptions,
};
use pathparam::curve::{interpolate, read_waypoints_csv, AnalyticCurve, Curve, CurveDocument};
use pathparam::experiments::{
    compare_frames, continuity_study, ContinuityRow, CONTINUOUS_BELOW, DISCONTINUOUS_FROM, JOINT,
};
use pathparam::frames::{ptf_field, ptfd, DEFAULT_STEPS};
use pathparam::io::{read_numeric_rows, Table};
use pathparam::planner::{
    initial_guess, manipulator_corridor, solve_from, transcribe, validate, SolverOptions, TwoLinkManipulator, Tube,
};
use pathparam::spatial::{self, global_project, reconstruct};
use serde::Serialize;
use serde_json::json;

use crate::output::{Failure, Outputs};
use crate::{CurveArgs, Global};

/// Acceleration magnitude counted as saturated in the plan summary.
const SATURATION_LEVEL: f64 = 4.9;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))
}

fn load_curve(args: &CurveArgs, default: &str) -> Result<(String, Box<dyn Curve>), Failure> {
    if let Some(path) = &args.curve_file {
        let text = read(path)?;
        let name = path.display().to_string();
        if text.trim_start().starts_with('{') {
            let curve = CurveDocument::from_json(&text)?.into_curve()?;
            return Ok((name, Box::new(curve)));
        }
        let wps = read_waypoints_csv(text.as_bytes())?;
        return Ok((name, Box::new(interpolate(&wps, args.continuity as usize)?)));
    }
    let name = args.curve.clone().unwrap_or_else(|| default.to_string());
    let curve = AnalyticCurve::by_name(&name).map_err(|e| Failure::usage(e.to_string()))?;
    Ok((name, Box::new(curve)))
}

fn steps(g: &Global) -> Result<usize, Failure> {
    match g.grid {
        Some(0) => Err(Failure::usage("--grid must be positive")),
        Some(n) => Ok(n),
        None => Ok(DEFAULT_STEPS),
    }
}

fn tolerance(g: &Global) -> Result<Option<f64>, Failure> {
    match g.tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(Failure::usage("--tol must be positive")),
        t => Ok(t),
    }
}

pub fn frames(g: &Global, args: &CurveArgs) -> Result<Outputs, Failure> {
    let (name, curve) = load_curve(args, "sin2d")?;
    let steps = steps(g)?;
    let (fsf, ptf, summary) = compare_frames(&name, curve.as_ref(), steps)?;
    // Curves below C⁴ still get ω; α and j are left empty.
    let ptf = ptfd(&ptf, curve.as_ref()).unwrap_or(ptf);
    let mut out = Outputs::default();
    out.table("fsf", &fsf.table(), g.format)?;
    out.table("ptf", &ptf.table(), g.format)?;
    out.json("frames_summary.json", &summary)?;
    for s in [&summary.fsf, &summary.ptf] {
        let flag = if s.is_singular() {
            format!("singular at {} node(s), e2 flips at {:?}", s.singular_at.len(), s.flips_at)
        } else {
            "no singularity".to_string()
        };
        out.say(format!("{}: max |omega| = {:.6e}, {flag}", s.kind, s.max_omega));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ContinuitySummary {
    joint: f64,
    steps: usize,
    continuous_below: f64,
    discontinuous_from: f64,
    rows: Vec<ContinuityRow>,
    all_match: bool,
}

fn verdict_mark(v: pathparam::experiments::Verdict) -> &'static str {
    match v {
        pathparam::experiments::Verdict::Continuous => "yes",
        pathparam::experiments::Verdict::Discontinuous => "no",
        pathparam::experiments::Verdict::Ambiguous => "?",
    }
}

pub fn continuity(g: &Global, class: Option<u8>) -> Result<Outputs, Failure> {
    let steps = steps(g)?;
    if steps % 2 != 0 {
        return Err(Failure::usage(format!("--grid must be even so that a node falls on θ = {JOINT}")));
    }
    let classes: Vec<usize> = match class {
        Some(c) => vec![c as usize],
        None => (0..=4).collect(),
    };
    let mut out = Outputs::default();
    let mut rows = Vec::new();
    out.say("class  omega  alpha  jerk   jumps");
    for c in classes {
        let (field, row) = continuity_study(c, steps)?;
        out.table(&format!("continuity_c{c}"), &field.table(), g.format)?;
        let [w, a, j] = row.verdicts.map(verdict_mark);
        let mark = if row.matches_expectation() { "" } else { "  (unexpected)" };
        out.say(format!(
            "C{c}     {w:<6} {a:<6} {j:<6} {:.2e} {:.2e} {:.2e}{mark}",
            row.jumps[0], row.jumps[1], row.jumps[2]
        ));
        rows.push(row);
    }
    let all_match = rows.iter().all(ContinuityRow::matches_expectation);
    out.say(format!("pattern {}", if all_match { "matches" } else { "does not match" }));
    out.json(
        "continuity_summary.json",
        &ContinuitySummary {
            joint: JOINT,
            steps,
            continuous_below: CONTINUOUS_BELOW,
            discontinuous_from: DISCONTINUOUS_FROM,
            rows,
            all_match,
        },
    )?;
    Ok(out)
}

pub fn project(g: &Global, args: &CurveArgs, traj: &Path) -> Result<Outputs, Failure> {
    let (_, curve) = load_curve(args, "line")?;
    let tol = tolerance(g)?;
    let rows = read_numeric_rows(read(traj)?.as_bytes())?;
    let width = rows[0].len();
    if width != 3 && width != 4 {
        return Err(Failure::data(format!("trajectory rows must be t,x,y[,z]; found {width} columns")));
    }
    let mut points = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Failure::data(format!("row {} has {} columns, expected {width}", i + 1, r.len())));
        }
        points.push((r[0], Vector3::new(r[1], r[2], if width == 4 { r[3] } else { 0.0 })));
    }
    let frames = ptf_field(curve.as_ref(), steps(g)?)?;
    let mut table = Table::new(&["t", "xi", "eta1", "eta2"]);
    let mut worst = 0.0f64;
    let mut guess: Option<f64> = None;
    for (t, p) in &points {
        // Warm start from the previous point; fall back to the global search.
        let pr = match guess.map(|xi| spatial::project(curve.as_ref(), &frames, p, xi)) {
            Some(Ok(pr)) => pr,
            _ => global_project(curve.as_ref(), &frames, p)?,
        };
        guess = Some(pr.state.xi);
        worst = worst.max((reconstruct(curve.as_ref(), &frames, &pr.state)? - p).norm());
        table.push(vec![*t, pr.state.xi, pr.state.eta.x, pr.state.eta.y]);
    }
    if let Some(tol) = tol {
        if worst > tol {
            return Err(Failure::numerical(format!("reconstruction residual {worst:e} exceeds --tol {tol:e}")));
        }
    }
    let mut out = Outputs::default();
    out.table("projection", &table, g.format)?;
    out.say(format!("projected {} points, max reconstruction residual {worst:.3e}", points.len()));
    Ok(out)
}

pub struct CorridorArgs {
    pub cloud: Option<PathBuf>,
    pub degree: usize,
    pub samples: Option<usize>,
    pub wrapper: f64,
    pub planar: bool,
    pub max_radius: Option<f64>,
}

fn load_cloud(path: &Path) -> Result<PointCloud, Failure> {
    let text = read(path)?;
    Ok(if text.trim_start().starts_with('[') { PointCloud::from_json(&text)? } else { PointCloud::from_csv(text.as_bytes())? })
}

pub fn corridor(g: &Global, args: &CurveArgs, c: &CorridorArgs) -> Result<Outputs, Failure> {
    if !(c.wrapper > 0.0 && c.wrapper.is_finite()) {
        return Err(Failure::usage("--wrapper must be positive"));
    }
    if let Some(r) = c.max_radius {
        if !(r > 0.0) {
            return Err(Failure::usage("--max-radius must be positive"));
        }
    }
    let (_, curve) = load_curve(args, "line")?;
    let cloud = match &c.cloud {
        Some(p) => load_cloud(p)?,
        None => PointCloud::default(),
    };
    let samples = c.samples.unwrap_or(4 * (c.degree + 1));
    let frames = ptf_field(curve.as_ref(), steps(g)?)?;
    let options = ProjectionOptions { max_radius: c.max_radius.unwrap_or(f64::INFINITY) };
    let projected = project_cloud(curve.as_ref(), &frames, &cloud, &options);
    let dropped = projected.dropped_clamped + projected.dropped_far + projected.dropped_failed;
    let mut out = Outputs::default();
    let mut table;
    let summary;
    if c.planar {
        let pc = generate_planar(curve.as_ref(), &projected.obstacles, c.degree, samples, c.wrapper)?;
        table = Table::new(&["xi", "lower", "upper", "width"]);
        for xi in pc.sample_grid() {
            let (lo, hi) = pc.bounds_at(xi);
            table.push(vec![xi, lo, hi, hi - lo]);
        }
        let min_width = table.rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
        summary = json!({
            "kind": "planar",
            "degree": pc.degree,
            "samples": pc.samples,
            "obstacles": projected.obstacles.len(),
            "dropped": dropped,
            "min_width": min_width,
        });
        out.text("corridor.json", pc.to_json()? + "\n");
        out.say(format!("planar corridor of degree {}: min width {min_width:.6e}", pc.degree));
    } else {
        let opts = CorridorOptions { degree: c.degree, samples, wrapper_radius: c.wrapper };
        let ec = generate(curve.as_ref(), &projected.obstacles, &opts)?;
        table = Table::new(&[
            "xi", "E11", "E12", "E22", "d1", "d2", "center1", "center2", "axis_min", "axis_max", "eta1_low",
            "eta1_high", "area",
        ]);
        for xi in ec.sample_grid() {
            let s = ellipse_at(&ec, xi)?;
            let (e11, d1) = (s.e[(0, 0)], s.d.x);
            // Extent along e₂ at η₂ = 0: roots of E₁₁s² − d₁s − 1 = 0.
            let root = (d1 * d1 + 4.0 * e11).sqrt();
            table.push(vec![
                xi,
                e11,
                s.e[(0, 1)],
                s.e[(1, 1)],
                d1,
                s.d.y,
                s.center.x,
                s.center.y,
                s.axes[0],
                s.axes[1],
                (d1 - root) / (2.0 * e11),
                (d1 + root) / (2.0 * e11),
                s.area(),
            ]);
        }
        let vol = volume(&ec, curve.as_ref(), 4 * samples)?;
        summary = json!({
            "kind": "ellipse",
            "degree": ec.degree,
            "samples": ec.samples,
            "obstacles": projected.obstacles.len(),
            "dropped": dropped,
            "volume": vol,
        });
        out.text("corridor.json", ec.to_json()? + "\n");
        out.say(format!("ellipse corridor of degree {}: volume {vol:.6e}", ec.degree));
    }
    out.table("corridor_samples", &table, g.format)?;
    out.json("corridor_summary.json", &summary)?;
    if dropped > 0 {
        out.say(format!("{dropped} cloud point(s) ignored"));
    }
    Ok(out)
}

pub struct PlanArgs {
    pub reference: String,
    pub corridor: Option<PathBuf>,
    pub halfwidth: Option<f64>,
    pub narrowing: bool,
    pub intervals: Option<usize>,
    pub max_outer: usize,
    pub keep_unconverged: bool,
}

pub fn plan(g: &Global, a: &PlanArgs) -> Result<Outputs, Failure> {
    let curve = AnalyticCurve::by_name(&a.reference).map_err(|e| Failure::usage(e.to_string()))?;
    if !curve.is_planar() {
        return Err(Failure::usage(format!("reference '{}' is not planar", a.reference)));
    }
    let n = a.intervals.or(g.grid).unwrap_or(50);
    if n < 2 {
        return Err(Failure::usage("at least 2 intervals are needed"));
    }
    let tube = if let Some(path) = &a.corridor {
        let pc = PlanarCorridor::from_json(&read(path)?)?;
        if pc.domain != curve.domain() {
            return Err(Failure::data(format!(
                "corridor domain {:?} differs from the reference domain {:?}",
                pc.domain,
                curve.domain()
            )));
        }
        Tube::Corridor(pc)
    } else if let Some(w) = a.halfwidth {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Failure::usage("--halfwidth must be positive"));
        }
        Tube::Constant(-w, w)
    } else if a.narrowing {
        Tube::Corridor(manipulator_corridor(&curve)?)
    } else {
        Tube::Path
    };
    let mut opts = SolverOptions { max_outer: a.max_outer, ..SolverOptions::default() };
    if let Some(t) = tolerance(g)? {
        opts.violation_tol = t;
    }
    let model = TwoLinkManipulator::default();
    let problem = transcribe(model, &curve, &tube, n)?;
    let traj = solve_from(&problem, &initial_guess(&problem)?, &opts)?;
    let check = validate(&model, &curve, &tube, &traj)?;
    let r = &traj.report;
    if !r.converged && !a.keep_unconverged {
        return Err(Failure::numerical(format!(
            "solver did not converge after {} outer iterations (violation {:.3e})",
            r.outer_iterations, r.max_violation
        )));
    }
    let saturation = traj.saturation(SATURATION_LEVEL);
    let mut out = Outputs::default();
    out.table("trajectory", &traj.table(), g.format)?;
    out.json(
        "plan_summary.json",
        &json!({
            "reference": a.reference,
            "intervals": n,
            "converged": r.converged,
            "outer_iterations": r.outer_iterations,
            "inner_iterations": r.inner_iterations,
            "total_time": traj.total_time,
            "max_violation": r.max_violation,
            "projected_gradient": r.projected_gradient,
            "revalidation": {
                "max_defect": check.max_defect,
                "integration_error": check.integration_error,
                "max_rate_mismatch": check.max_rate_mismatch,
                "max_bound_excess": check.max_bound_excess,
                "max_position_drift": check.max_position_drift,
                "max_violation": check.max_violation(),
            },
            "saturation_level": SATURATION_LEVEL,
            "saturation": saturation,
        }),
    )?;
    if !r.converged {
        out.say("warning: solver did not converge; outputs kept on request");
    }
    out.say(format!("total time {:.6}", traj.total_time));
    out.say(format!(
        "revalidation: max violation {:.3e}, integration error {:.3e}",
        check.max_violation(),
        check.integration_error
    ));
    out.say(format!("acceleration saturated (>= {SATURATION_LEVEL}) on {:.0}% of intervals", 100.0 * saturation));
    Ok(out)
}
