//! Greedy workload auction for conflicted cells.
//!
//! Each robot starts with its dominated cells. Conflicted cells are then
//! handed out one at a time, in ascending id order, to the robot with the
//! smallest `cell count + bias_cells`, where `bias_cells = d0 * B / W_k` turns
//! the distance from the robot's start to its territory into a cell
//! equivalent.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::geo::{CartPoint, GeoPoint};

pub const DEFAULT_BIAS_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub index: usize,
    pub start: CartPoint,
    pub start_geo: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTable {
    /// Distance from each robot's start to its nearest dominated cell center.
    pub d0: Vec<f64>,
    /// `d0 * B / W_k` per robot.
    pub bias_cells: Vec<f64>,
    pub bias_factor: f64,
    pub cell_width_m: f64,
}

impl BiasTable {
    /// Bias distance `d_B = d0 * B` for a robot, in meters.
    pub fn bias_m(&self, robot: usize) -> f64 {
        self.d0[robot] * self.bias_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellSource {
    Dominated,
    Auctioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Cell ids per robot, ascending.
    pub cells_by_robot: Vec<Vec<usize>>,
    pub source: BTreeMap<usize, CellSource>,
}

impl Assignment {
    pub fn n_robots(&self) -> usize {
        self.cells_by_robot.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.cells_by_robot.iter().map(Vec::len).collect()
    }

    /// Robot owning `cell`, if any.
    pub fn owner(&self, cell: usize) -> Option<usize> {
        self.cells_by_robot
            .iter()
            .position(|cells| cells.binary_search(&cell).is_ok())
    }
}

pub fn compute_bias(
    robots: &[RobotState],
    dominated: &BTreeMap<usize, usize>,
    grid: &Grid,
    bias_factor: f64,
) -> Result<BiasTable> {
    if !(bias_factor.is_finite() && bias_factor >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "bias factor {bias_factor} must be >= 0"
        )));
    }
    if grid.n_free() == 0 {
        return Err(Error::InvalidInput("grid has no free cells".into()));
    }
    let w = grid.cell_width_m;
    let mut d0 = Vec::with_capacity(robots.len());
    for robot in robots {
        let own = dominated
            .iter()
            .filter(|&(_, &r)| r == robot.index)
            .map(|(&id, _)| grid.cells[id].center);
        let nearest = own
            .map(|c| robot.start.dist(&c))
            .fold(f64::INFINITY, f64::min);
        // robots that dominate nothing measure to the nearest free cell instead
        let nearest = if nearest.is_finite() {
            nearest
        } else {
            grid.free_cells()
                .map(|c| robot.start.dist(&c.center))
                .fold(f64::INFINITY, f64::min)
        };
        d0.push(nearest);
    }
    let bias_cells = d0.iter().map(|d| d * bias_factor / w).collect();
    Ok(BiasTable {
        d0,
        bias_cells,
        bias_factor,
        cell_width_m: w,
    })
}

/// Runs the greedy auction over `n_conflicts` items starting from
/// `counts`. Returns the winning robot for each item in order.
pub fn award_sequence(counts: &[usize], bias_cells: &[f64], n_conflicts: usize) -> Vec<usize> {
    let mut counts = counts.to_vec();
    let mut winners = Vec::with_capacity(n_conflicts);
    for _ in 0..n_conflicts {
        let mut best = f64::INFINITY;
        let mut winner = 0;
        for (r, (&c, &b)) in counts.iter().zip(bias_cells).enumerate() {
            let score = c as f64 + b;
            if score < best {
                best = score;
                winner = r;
            }
        }
        counts[winner] += 1;
        winners.push(winner);
    }
    winners
}

pub fn auction_conflicts(
    conflicted: &[usize],
    dominated: &BTreeMap<usize, usize>,
    bias: &BiasTable,
    n_robots: usize,
) -> Result<Assignment> {
    if n_robots == 0 {
        return Err(Error::InvalidInput("no robots to auction to".into()));
    }
    if bias.bias_cells.len() != n_robots {
        return Err(Error::InvalidInput(format!(
            "bias table has {} robots, expected {n_robots}",
            bias.bias_cells.len()
        )));
    }
    let mut cells_by_robot = vec![Vec::new(); n_robots];
    let mut source = BTreeMap::new();
    for (&cell, &robot) in dominated {
        if robot >= n_robots {
            return Err(Error::InvalidInput(format!(
                "cell {cell} dominated by robot {robot} of {n_robots}"
            )));
        }
        cells_by_robot[robot].push(cell);
        source.insert(cell, CellSource::Dominated);
    }

    let order: BTreeSet<usize> = conflicted.iter().copied().collect();
    if order.len() != conflicted.len() {
        return Err(Error::InvalidInput("duplicate conflicted cell".into()));
    }
    if let Some(c) = order.iter().find(|c| dominated.contains_key(c)) {
        return Err(Error::InvalidInput(format!(
            "cell {c} is both dominated and conflicted"
        )));
    }

    let counts: Vec<usize> = cells_by_robot.iter().map(Vec::len).collect();
    let winners = award_sequence(&counts, &bias.bias_cells, order.len());
    for (&cell, &robot) in order.iter().zip(&winners) {
        cells_by_robot[robot].push(cell);
        source.insert(cell, CellSource::Auctioned);
    }
    for cells in &mut cells_by_robot {
        cells.sort_unstable();
    }
    Ok(Assignment {
        cells_by_robot,
        source,
    })
}
