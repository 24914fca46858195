//! Mission file schema and the end-to-end planning driver.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::auction::{
    auction_conflicts, compute_bias, Assignment, BiasTable, RobotState, DEFAULT_BIAS_FACTOR,
};
use crate::discretize::{build_grid, Grid, PolygonSet, UavParams, DEFAULT_POINTS_PER_EDGE};
use crate::error::{Error, Result};
use crate::geo::{geo_centroid, CartPoint, GeoPoint, Projection};
use crate::partition::{
    classify_cells, lloyd_cluster, CellClassification, ClusterState, DEFAULT_MAX_ITER,
    DEFAULT_TOL_FACTOR,
};
use crate::pathplan::{finalize_plan, Plan, DEFAULT_LEAF_SIZE};

pub const SCHEMA_VERSION: u32 = 1;

fn default_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionOptions {
    pub bias_factor: f64,
    pub points_per_edge: usize,
    pub leaf_size: usize,
    /// Clustering tolerance as a fraction of the cell width.
    pub tol_factor: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub strict_faa: bool,
    /// Projection origin; the boundary centroid when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<GeoPoint>,
}

impl Default for MissionOptions {
    fn default() -> Self {
        MissionOptions {
            bias_factor: DEFAULT_BIAS_FACTOR,
            points_per_edge: DEFAULT_POINTS_PER_EDGE,
            leaf_size: DEFAULT_LEAF_SIZE,
            tol_factor: DEFAULT_TOL_FACTOR,
            max_iter: DEFAULT_MAX_ITER,
            seed: None,
            strict_faa: false,
            anchor: None,
        }
    }
}

/// User input: the area of interest, no-fly zones, robot launch positions
/// and aircraft parameters, all in decimal degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub boundary: Vec<GeoPoint>,
    #[serde(default)]
    pub no_fly: Vec<Vec<GeoPoint>>,
    pub robots: Vec<GeoPoint>,
    pub uav: UavParams,
    #[serde(default)]
    pub options: MissionOptions,
}

impl MissionSpec {
    /// Parses and structurally checks a mission document.
    pub fn from_json(text: &str) -> Result<MissionSpec> {
        let spec: MissionSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        spec.check_structure()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mission serializes")
    }

    fn check_structure(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported mission version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        let mut ring_len = self.boundary.len();
        if ring_len > 1 && self.boundary.first() == self.boundary.last() {
            ring_len -= 1;
        }
        if ring_len < 3 {
            return Err(Error::InvalidInput(format!(
                "boundary: {ring_len} distinct vertices, need at least 3"
            )));
        }
        for (i, p) in self.boundary.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::InvalidInput(format!("boundary[{i}]: {e}")))?;
        }
        for (z, ring) in self.no_fly.iter().enumerate() {
            if ring.len() < 3 {
                return Err(Error::InvalidInput(format!(
                    "no_fly[{z}]: {} vertices, need at least 3",
                    ring.len()
                )));
            }
            for (i, p) in ring.iter().enumerate() {
                p.validate()
                    .map_err(|e| Error::InvalidInput(format!("no_fly[{z}][{i}]: {e}")))?;
            }
        }
        if self.robots.is_empty() {
            return Err(Error::InvalidInput(
                "robots: at least one start position needed".into(),
            ));
        }
        for (i, p) in self.robots.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::InvalidInput(format!("robots[{i}]: {e}")))?;
        }
        Ok(())
    }

    /// Range checks on options and aircraft parameters. Returns soft warnings;
    /// operating-bound violations are errors when `strict_faa` is set.
    pub fn validate(&self) -> Result<Vec<String>> {
        let o = &self.options;
        let bad = |m: String| Err(Error::Validation(m));
        if !(o.bias_factor.is_finite() && o.bias_factor >= 0.0) {
            return bad(format!(
                "options.bias_factor = {} must be >= 0",
                o.bias_factor
            ));
        }
        if o.points_per_edge < 2 {
            return bad(format!(
                "options.points_per_edge = {} must be >= 2",
                o.points_per_edge
            ));
        }
        if o.leaf_size < 1 {
            return bad("options.leaf_size must be >= 1".into());
        }
        if !(o.tol_factor.is_finite() && o.tol_factor > 0.0) {
            return bad(format!("options.tol_factor = {} must be > 0", o.tol_factor));
        }
        if o.max_iter < 1 {
            return bad("options.max_iter must be >= 1".into());
        }
        self.uav.validate(o.strict_faa).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Validation(format!("uav: {m}")),
            other => other,
        })
    }

    pub fn seed(&self) -> u64 {
        self.options.seed.unwrap_or(0)
    }

    pub fn projection(&self) -> Result<Projection> {
        let anchor = match self.options.anchor {
            Some(a) => a,
            None => geo_centroid(&self.boundary)?,
        };
        Projection::new(anchor)
    }
}

/// A mission mapped into the local plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mission: MissionSpec,
    pub projection: Projection,
    pub area: PolygonSet,
    pub starts: Vec<CartPoint>,
}

impl Scenario {
    pub fn new(mission: &MissionSpec) -> Result<Scenario> {
        let projection = mission.projection()?;
        let project = |ring: &[GeoPoint]| -> Result<Vec<CartPoint>> {
            ring.iter().map(|&g| projection.to_cartesian(g)).collect()
        };
        let boundary = project(&mission.boundary)?;
        let holes = mission
            .no_fly
            .iter()
            .map(|r| project(r))
            .collect::<Result<Vec<_>>>()?;
        let area = PolygonSet::new(boundary, holes)?;
        let starts = project(&mission.robots)?;
        Ok(Scenario {
            mission: mission.clone(),
            projection,
            area,
            starts,
        })
    }

    /// `n` robots launched from the mission's start positions, reused
    /// round-robin when the team is larger than the list.
    pub fn robots(&self, n: usize) -> Vec<RobotState> {
        (0..n)
            .map(|i| {
                let k = i % self.starts.len();
                RobotState {
                    index: i,
                    start: self.starts[k],
                    start_geo: self.mission.robots[k],
                }
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(
            &self.area,
            &self.mission.uav,
            self.mission.options.points_per_edge,
        )
    }
}

/// Wall-clock time per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub discretization: Duration,
    pub partitioning: Duration,
    pub conflict_resolution: Duration,
    pub path_planning: Duration,
    /// End to end, including the input transform and glue.
    pub total: Duration,
}

impl StageTimings {
    pub const STAGE_NAMES: [&'static str; 4] = [
        "Discretization",
        "Partitioning",
        "Conflict Resolution",
        "Path Planning",
    ];

    pub fn stages(&self) -> [(&'static str, Duration); 4] {
        [
            (Self::STAGE_NAMES[0], self.discretization),
            (Self::STAGE_NAMES[1], self.partitioning),
            (Self::STAGE_NAMES[2], self.conflict_resolution),
            (Self::STAGE_NAMES[3], self.path_planning),
        ]
    }
}

/// Everything produced by one planning run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub scenario: Scenario,
    pub robots: Vec<RobotState>,
    pub grid: Grid,
    pub clusters: ClusterState,
    pub classes: CellClassification,
    pub bias: BiasTable,
    pub assignment: Assignment,
    pub plan: Plan,
    pub timings: StageTimings,
}

/// Runs the five planning steps for a team of `n_robots`.
pub fn run_pipeline(mission: &MissionSpec, n_robots: usize, seed: u64) -> Result<PipelineRun> {
    if n_robots == 0 {
        return Err(Error::InvalidInput("team size must be >= 1".into()));
    }
    let t0 = Instant::now();
    let opts = &mission.options;
    let scenario = Scenario::new(mission)?;
    let robots = scenario.robots(n_robots);

    let t = Instant::now();
    let grid = scenario.grid()?;
    let discretization = t.elapsed();

    let t = Instant::now();
    let (points, _) = grid.perimeter_samples();
    let tol = grid.cell_width_m * opts.tol_factor;
    let clusters = lloyd_cluster(&points, n_robots, tol, opts.max_iter, seed)?;
    let classes = classify_cells(&grid, &clusters)?;
    let partitioning = t.elapsed();

    let t = Instant::now();
    let bias = compute_bias(&robots, &classes.dominated, &grid, opts.bias_factor)?;
    let assignment = auction_conflicts(&classes.conflicted, &classes.dominated, &bias, n_robots)?;
    let conflict_resolution = t.elapsed();

    let t = Instant::now();
    let plan = finalize_plan(
        &assignment,
        &robots,
        &grid,
        &scenario.projection,
        opts.leaf_size,
    )?;
    let path_planning = t.elapsed();

    let timings = StageTimings {
        discretization,
        partitioning,
        conflict_resolution,
        path_planning,
        total: t0.elapsed(),
    };
    Ok(PipelineRun {
        scenario,
        robots,
        grid,
        clusters,
        classes,
        bias,
        assignment,
        plan,
        timings,
    })
}
