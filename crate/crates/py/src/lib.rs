use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use scopp_core::discretize::{self, UavParams};
use scopp_core::export;
use scopp_core::geo::{self, CartPoint, GeoPoint, EARTH_RADIUS_M};
use scopp_core::mission::{run_pipeline, MissionSpec, Scenario};
use scopp_core::pathplan::{self, Plan};
use scopp_core::sim::{self, MetricsReport};
use scopp_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InconsistentState(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn geo_point((lat, lon): (f64, f64)) -> PyResult<GeoPoint> {
    GeoPoint::new(lat, lon).map_err(to_py)
}

/// Great-circle distance in meters between two `(lat, lon)` pairs.
#[pyfunction]
#[pyo3(signature = (a, b, radius_m = EARTH_RADIUS_M))]
fn haversine_distance(a: (f64, f64), b: (f64, f64), radius_m: f64) -> PyResult<f64> {
    geo::haversine_distance(geo_point(a)?, geo_point(b)?, radius_m).map_err(to_py)
}

/// Ground footprint width `2 h tan(fov / 2)` in meters.
#[pyfunction]
fn cell_width(height_m: f64, fov_deg: f64) -> PyResult<f64> {
    let p = UavParams {
        height_m,
        fov_deg,
        velocity_mps: discretize::MIN_VELOCITY_MPS,
    };
    discretize::cell_width(&p).map_err(to_py)
}

#[pyclass(name = "Projection", frozen)]
struct PyProjection(geo::Projection);

#[pymethods]
impl PyProjection {
    #[new]
    #[pyo3(signature = (lat, lon, radius_m = EARTH_RADIUS_M))]
    fn new(lat: f64, lon: f64, radius_m: f64) -> PyResult<Self> {
        geo::Projection::with_radius(geo_point((lat, lon))?, radius_m)
            .map(PyProjection)
            .map_err(to_py)
    }

    #[getter]
    fn anchor(&self) -> (f64, f64) {
        let a = self.0.anchor();
        (a.lat, a.lon)
    }

    fn to_cartesian(&self, lat: f64, lon: f64) -> PyResult<(f64, f64)> {
        let c = self.0.to_cartesian(geo_point((lat, lon))?).map_err(to_py)?;
        Ok((c.x, c.y))
    }

    fn to_geographic(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let g = self.0.to_geographic(CartPoint::new(x, y)).map_err(to_py)?;
        Ok((g.lat, g.lon))
    }
}

#[pyclass(name = "KdTree", frozen)]
struct PyKdTree(pathplan::KdTree);

#[pymethods]
impl PyKdTree {
    #[new]
    #[pyo3(signature = (points, leaf_size = pathplan::DEFAULT_LEAF_SIZE))]
    fn new(points: Vec<(f64, f64)>, leaf_size: usize) -> PyResult<Self> {
        let pts = points
            .into_iter()
            .map(|(x, y)| CartPoint::new(x, y))
            .collect();
        pathplan::KdTree::build(pts, leaf_size)
            .map(PyKdTree)
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Index of the closest point not marked in `excluded`.
    #[pyo3(signature = (x, y, excluded = None))]
    fn nearest(&self, x: f64, y: f64, excluded: Option<Vec<bool>>) -> PyResult<usize> {
        let mask = excluded.unwrap_or_else(|| vec![false; self.0.len()]);
        self.0.nearest(CartPoint::new(x, y), &mask).map_err(to_py)
    }
}

/// Greedy nearest-neighbor visiting order of `centers` from `start`.
#[pyfunction]
#[pyo3(signature = (start, centers, leaf_size = pathplan::DEFAULT_LEAF_SIZE))]
fn plan_order(
    start: (f64, f64),
    centers: Vec<(f64, f64)>,
    leaf_size: usize,
) -> PyResult<Vec<usize>> {
    let c: Vec<CartPoint> = centers
        .into_iter()
        .map(|(x, y)| CartPoint::new(x, y))
        .collect();
    pathplan::plan_order(CartPoint::new(start.0, start.1), &c, leaf_size).map_err(to_py)
}

#[pyclass(name = "Mission", frozen)]
struct PyMission(MissionSpec);

#[pymethods]
impl PyMission {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let m = MissionSpec::from_json(text).map_err(to_py)?;
        m.validate().map_err(to_py)?;
        Ok(PyMission(m))
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    #[getter]
    fn n_starts(&self) -> usize {
        self.0.robots.len()
    }

    #[getter]
    fn cell_width(&self) -> PyResult<f64> {
        discretize::cell_width(&self.0.uav).map_err(to_py)
    }

    /// Number of free cells after discretization.
    fn n_free_cells(&self) -> PyResult<usize> {
        let grid = Scenario::new(&self.0)
            .and_then(|s| s.grid())
            .map_err(to_py)?;
        Ok(grid.n_free())
    }

    #[pyo3(signature = (n_robots = None, seed = None))]
    fn plan(&self, py: Python<'_>, n_robots: Option<usize>, seed: Option<u64>) -> PyResult<PyPlan> {
        let mission = self.resolved(n_robots, seed)?;
        let n = mission.robots.len();
        py.detach(|| {
            let run = run_pipeline(&mission, n, mission.seed())?;
            let metrics = sim::evaluate(&run.plan, &mission.uav, &run.grid)?;
            Ok(PyPlan {
                strategy: "qlbm".into(),
                mission,
                plan: run.plan,
                metrics,
            })
        })
        .map_err(to_py)
    }

    #[pyo3(signature = (n_robots = None))]
    fn baseline(&self, n_robots: Option<usize>) -> PyResult<PyPlan> {
        let mission = self.resolved(n_robots, None)?;
        let n = mission.robots.len();
        let scenario = Scenario::new(&mission).map_err(to_py)?;
        let grid = scenario.grid().map_err(to_py)?;
        let b =
            sim::sweep_baseline(&grid, &scenario.robots(n), &scenario.projection).map_err(to_py)?;
        let metrics = sim::evaluate(&b.plan, &mission.uav, &grid).map_err(to_py)?;
        Ok(PyPlan {
            strategy: b.strategy,
            mission,
            plan: b.plan,
            metrics,
        })
    }

    /// `(n_robots, seed, mission_time_s, computing_time_s)` per run.
    fn scalability_sweep(
        &self,
        py: Python<'_>,
        team_sizes: Vec<usize>,
        seeds: Vec<u64>,
    ) -> PyResult<Vec<(usize, u64, f64, f64)>> {
        let table = py
            .detach(|| sim::scalability_sweep(&self.0, &team_sizes, &seeds))
            .map_err(to_py)?;
        Ok(table
            .rows
            .into_iter()
            .map(|r| (r.n_robots, r.seed, r.mission_time_s, r.computing_time_s))
            .collect())
    }
}

impl PyMission {
    /// Copy with the seed pinned and the start list cycled to `n_robots`.
    fn resolved(&self, n_robots: Option<usize>, seed: Option<u64>) -> PyResult<MissionSpec> {
        let mut m = self.0.clone();
        m.options.seed = Some(seed.unwrap_or(m.seed()));
        let n = n_robots.unwrap_or(m.robots.len());
        if n == 0 {
            return Err(PyValueError::new_err("n_robots must be >= 1"));
        }
        let starts = m.robots.clone();
        m.robots = (0..n).map(|i| starts[i % starts.len()]).collect();
        Ok(m)
    }
}

#[pyclass(name = "Plan", frozen)]
struct PyPlan {
    strategy: String,
    mission: MissionSpec,
    plan: Plan,
    metrics: MetricsReport,
}

#[pymethods]
impl PyPlan {
    #[getter]
    fn strategy(&self) -> &str {
        &self.strategy
    }

    #[getter]
    fn n_robots(&self) -> usize {
        self.plan.n_robots()
    }

    #[getter]
    fn completion_time(&self) -> f64 {
        self.metrics.completion_time
    }

    #[getter]
    fn t_by_robot(&self) -> Vec<f64> {
        self.metrics.t_by_robot.clone()
    }

    #[getter]
    fn cells_by_robot(&self) -> Vec<Vec<usize>> {
        self.plan.assigned_cells.clone()
    }

    /// Per robot, `(lat, lon)` waypoints starting at the launch point.
    #[getter]
    fn waypoints(&self) -> Vec<Vec<(f64, f64)>> {
        self.plan
            .waypoints_geo
            .iter()
            .map(|w| w.iter().map(|g| (g.lat, g.lon)).collect())
            .collect()
    }

    #[getter]
    fn coverage_curve(&self) -> Vec<(f64, f64)> {
        self.metrics.coverage_curve.clone()
    }

    fn to_geojson(&self) -> String {
        export::to_pretty(&export::plan_document(
            &self.strategy,
            &self.mission,
            &self.plan,
            &self.metrics,
        ))
    }

    fn to_csv(&self) -> String {
        export::plan_csv(&self.plan, self.mission.uav.velocity_mps)
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(strategy={:?}, n_robots={}, completion_time={})",
            self.strategy,
            self.plan.n_robots(),
            export::fmt_num(self.metrics.completion_time)
        )
    }
}

#[pymodule]
fn scopp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(haversine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(cell_width, m)?)?;
    m.add_function(wrap_pyfunction!(plan_order, m)?)?;
    m.add_class::<PyProjection>()?;
    m.add_class::<PyKdTree>()?;
    m.add_class::<PyMission>()?;
    m.add_class::<PyPlan>()?;
    Ok(())
}
