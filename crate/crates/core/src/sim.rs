//! Constant-velocity mission evaluation, the strip-sweep baseline planner and
//! the profiling / scalability harness.

use serde::{Deserialize, Serialize};

use crate::auction::RobotState;
use crate::discretize::{Grid, UavParams};
use crate::error::{Error, Result};
use crate::geo::{CartPoint, Projection};
use crate::mission::{run_pipeline, MissionSpec, StageTimings};
use crate::pathplan::Plan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Travel time per robot, seconds.
    pub t_by_robot: Vec<f64>,
    /// Worst robot time, seconds.
    pub completion_time: f64,
    pub path_length_by_robot: Vec<f64>,
    pub n_cells_by_robot: Vec<usize>,
    /// `n_cells * W_k^2` per robot.
    pub area_by_robot: Vec<f64>,
    /// `(seconds, m^2 covered)` at t = 0 and at every coverage event.
    pub coverage_curve: Vec<(f64, f64)>,
}

impl MetricsReport {
    pub fn total_area(&self) -> f64 {
        self.area_by_robot.iter().sum()
    }
}

/// Cumulative arrival time at each waypoint of `path`, starting at 0.
pub fn waypoint_etas(path: &[CartPoint], velocity_mps: f64) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::with_capacity(path.len());
    for (i, p) in path.iter().enumerate() {
        if i > 0 {
            t += path[i - 1].dist(p) / velocity_mps;
        }
        out.push(t);
    }
    out
}

pub fn evaluate(plan: &Plan, params: &UavParams, grid: &Grid) -> Result<MetricsReport> {
    evaluate_at(plan, params.velocity_mps, grid)
}

/// [`evaluate`] with only the cruise speed.
pub fn evaluate_at(plan: &Plan, velocity_mps: f64, grid: &Grid) -> Result<MetricsReport> {
    if !(velocity_mps.is_finite() && velocity_mps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "velocity {velocity_mps} m/s must be > 0"
        )));
    }
    let cell_area = grid.cell_width_m * grid.cell_width_m;
    let mut t_by_robot = Vec::with_capacity(plan.n_robots());
    let mut path_length_by_robot = Vec::with_capacity(plan.n_robots());
    let mut events = Vec::new();
    for path in &plan.waypoints_by_robot {
        let etas = waypoint_etas(path, velocity_mps);
        events.extend(etas.iter().skip(1).copied());
        let t = etas.last().copied().unwrap_or(0.0);
        t_by_robot.push(t);
        path_length_by_robot.push(t * velocity_mps);
    }
    events.sort_by(f64::total_cmp);
    let mut coverage_curve = Vec::with_capacity(events.len() + 1);
    coverage_curve.push((0.0, 0.0));
    for (k, t) in events.iter().enumerate() {
        coverage_curve.push((*t, (k + 1) as f64 * cell_area));
    }
    let n_cells_by_robot: Vec<usize> = plan.assigned_cells.iter().map(Vec::len).collect();
    Ok(MetricsReport {
        completion_time: t_by_robot.iter().copied().fold(0.0, f64::max),
        t_by_robot,
        path_length_by_robot,
        area_by_robot: n_cells_by_robot
            .iter()
            .map(|&n| n as f64 * cell_area)
            .collect(),
        n_cells_by_robot,
        coverage_curve,
    })
}

/// Free cells in column-major serpentine order: columns left to right, rows
/// upward in even columns and downward in odd ones.
pub fn serpentine_order(grid: &Grid) -> Vec<usize> {
    let mut out = Vec::with_capacity(grid.n_free());
    for col in 0..grid.cols {
        let rows: Box<dyn Iterator<Item = usize>> = if col % 2 == 0 {
            Box::new(0..grid.rows)
        } else {
            Box::new((0..grid.rows).rev())
        };
        for row in rows {
            let cell = &grid.cells[row * grid.cols + col];
            if cell.is_free() {
                out.push(cell.id);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePlan {
    pub plan: Plan,
    pub strategy: String,
}

/// Equal-partition sweep: the serpentine ordering of all free cells is cut
/// into `robots.len()` contiguous vertical strips whose sizes differ by at
/// most one, and robot `i` sweeps strip `i`.
pub fn sweep_baseline(
    grid: &Grid,
    robots: &[RobotState],
    projection: &Projection,
) -> Result<BaselinePlan> {
    if robots.is_empty() {
        return Err(Error::InvalidInput(
            "baseline needs at least one robot".into(),
        ));
    }
    let order = serpentine_order(grid);
    if order.is_empty() {
        return Err(Error::EmptyGrid("no free cells to sweep".into()));
    }
    let n = robots.len();
    let (base, extra) = (order.len() / n, order.len() % n);
    let mut strips = Vec::with_capacity(n);
    let mut at = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        strips.push(order[at..at + len].to_vec());
        at += len;
    }
    Ok(BaselinePlan {
        plan: Plan::from_orders(strips, robots, grid, projection)?,
        strategy: "sweep".into(),
    })
}

pub fn profile_pipeline(mission: &MissionSpec, n_robots: usize, seed: u64) -> Result<StageTimings> {
    Ok(run_pipeline(mission, n_robots, seed)?.timings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_robots: usize,
    pub seed: u64,
    pub mission_time_s: f64,
    pub computing_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n_robots: usize,
    pub runs: usize,
    pub mission_time_mean: f64,
    pub mission_time_std: f64,
    pub computing_time_mean: f64,
    pub computing_time_std: f64,
}

/// Sample mean and standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

/// Plans and evaluates every `(team size, seed)` pair in input order. Runs
/// are sequential so that computing times are not inflated by each other.
pub fn scalability_sweep(
    mission: &MissionSpec,
    team_sizes: &[usize],
    seeds: &[u64],
) -> Result<SweepTable> {
    if team_sizes.contains(&0) {
        return Err(Error::InvalidInput("team sizes must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(team_sizes.len() * seeds.len());
    let mut summary = Vec::with_capacity(team_sizes.len());
    for &n in team_sizes {
        let start = rows.len();
        for &seed in seeds {
            let run = run_pipeline(mission, n, seed)?;
            let metrics = evaluate(&run.plan, &mission.uav, &run.grid)?;
            rows.push(SweepRow {
                n_robots: n,
                seed,
                mission_time_s: metrics.completion_time,
                computing_time_s: run.timings.total.as_secs_f64(),
            });
        }
        let mission_times: Vec<f64> = rows[start..].iter().map(|r| r.mission_time_s).collect();
        let compute_times: Vec<f64> = rows[start..].iter().map(|r| r.computing_time_s).collect();
        let (mm, ms) = mean_std(&mission_times);
        let (cm, cs) = mean_std(&compute_times);
        summary.push(SweepSummary {
            n_robots: n,
            runs: seeds.len(),
            mission_time_mean: mm,
            mission_time_std: ms,
            computing_time_mean: cm,
            computing_time_std: cs,
        });
    }
    Ok(SweepTable { rows, summary })
}
