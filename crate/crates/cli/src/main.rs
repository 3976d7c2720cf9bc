//! Command-line front end: frame experiments, projection, corridor
//! generation and minimum-time planning with file-based I/O.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Failure;

#[derive(Parser, Debug)]
#[command(name = "pathparam", version, about = "Path-parametric frames, corridors and planning")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Format of tabular outputs; summaries are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Grid size: frame integration steps, or planner intervals.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Numerical tolerance: planner constraint violation, or projection
    /// residual on reconstruction.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Where a curve comes from.
#[derive(Args, Debug, Clone)]
pub struct CurveArgs {
    /// Built-in curve: line, circle, helix, sin2d, coil3d, continuity, sin.
    #[arg(long, conflicts_with = "curve_file")]
    curve: Option<String>,
    /// Curve JSON document, or waypoint CSV (x,y[,z] rows) to interpolate.
    #[arg(long)]
    curve_file: Option<PathBuf>,
    /// Continuity class used when interpolating a waypoint CSV.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(0..=4))]
    continuity: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frenet-Serret and parallel transport frames along a curve.
    Frames {
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Rate continuity of the parallel transport frame across a knot.
    Continuity {
        /// Single continuity class to run (default: 0 to 4).
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=4))]
        class: Option<u8>,
    },
    /// Spatial coordinates of the points of a trajectory.
    Project {
        #[command(flatten)]
        curve: CurveArgs,
        /// Timed points as t,x,y[,z] rows.
        #[arg(long)]
        traj: PathBuf,
    },
    /// Collision-free corridor around a curve from a point cloud.
    Corridor {
        #[command(flatten)]
        curve: CurveArgs,
        /// Obstacle points: CSV rows x,y[,z] or a JSON array.
        #[arg(long)]
        cloud: Option<PathBuf>,
        /// Chebyshev degree of the corridor coefficients.
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// LP sample count (default 4(degree + 1)).
        #[arg(long)]
        samples: Option<usize>,
        /// Wrapper radius (ellipse) or half-width (planar).
        #[arg(long, default_value_t = 1.0)]
        wrapper: f64,
        /// Transverse bounds of a planar path instead of ellipses.
        #[arg(long)]
        planar: bool,
        /// Ignore cloud points farther than this from the path.
        #[arg(long)]
        max_radius: Option<f64>,
    },
    /// Minimum-time motion of the two-link arm along a planar reference.
    Plan {
        /// Built-in planar reference curve.
        #[arg(long = "ref", default_value = "sin")]
        reference: String,
        /// Planar corridor JSON (as written by `corridor --planar`).
        #[arg(long, conflicts_with_all = ["halfwidth", "narrowing"])]
        corridor: Option<PathBuf>,
        /// Constant corridor ±halfwidth.
        #[arg(long, conflicts_with = "narrowing")]
        halfwidth: Option<f64>,
        /// Built-in corridor through a gap narrowing from 0.2 to 0.05.
        #[arg(long)]
        narrowing: bool,
        /// Number of intervals (overrides --grid; default 50).
        #[arg(short = 'N', long = "intervals")]
        intervals: Option<usize>,
        /// Outer iteration limit.
        #[arg(long, default_value_t = 200)]
        max_outer: usize,
        /// Write outputs even when the solver does not converge.
        #[arg(long)]
        keep_unconverged: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let g = &cli.global;
    let result = match &cli.command {
        Command::Frames { curve } => commands::frames(g, curve),
        Command::Continuity { class } => commands::continuity(g, *class),
        Command::Project { curve, traj } => commands::project(g, curve, traj),
        Command::Corridor { curve, cloud, degree, samples, wrapper, planar, max_radius } => commands::corridor(
            g,
            curve,
            &commands::CorridorArgs {
                cloud: cloud.clone(),
                degree: *degree,
                samples: *samples,
                wrapper: *wrapper,
                planar: *planar,
                max_radius: *max_radius,
            },
        ),
        Command::Plan { reference, corridor, halfwidth, narrowing, intervals, max_outer, keep_unconverged } => commands::plan(
            g,
            &commands::PlanArgs {
                reference: reference.clone(),
                corridor: corridor.clone(),
                halfwidth: *halfwidth,
                narrowing: *narrowing,
                intervals: *intervals,
                max_outer: *max_outer,
                keep_unconverged: *keep_unconverged,
            },
        ),
    };
    let outputs = match result {
        Ok(o) => o,
        Err(f) => return report(f),
    };
    match outputs.commit(&g.out_dir) {
        Ok(()) => {
            for line in &outputs.messages {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    eprintln!("error: {}", f.message);
    ExitCode::from(f.code)
}
