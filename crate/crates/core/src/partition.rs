//! Lloyd clustering of cell perimeter samples and dominated/conflicted cell
//! classification.
//!
//! Clusters are seeded with k-means++ from an explicit seed. Plain Lloyd
//! iterations do not enforce equal cluster mass; the auction step evens the
//! load afterwards.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::geo::CartPoint;

pub const DEFAULT_MAX_ITER: usize = 10;
pub const DEFAULT_TOL_FACTOR: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub centroids: Vec<CartPoint>,
    pub labels: Vec<usize>,
    /// Sum of squared point-to-centroid distances for the returned labels.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after every assignment step, ending with the final one.
    pub inertia_history: Vec<f64>,
}

impl ClusterState {
    pub fn n_clusters(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Index of the nearest centroid (lowest index on ties) and its squared
/// distance.
#[inline]
pub fn nearest_centroid(p: &CartPoint, centroids: &[CartPoint]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = p.dist_sq(c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

fn assign(points: &[CartPoint], centroids: &[CartPoint]) -> (Vec<usize>, Vec<f64>) {
    points
        .par_iter()
        .map(|p| nearest_centroid(p, centroids))
        .unzip()
}

fn kmeans_plus_plus(points: &[CartPoint], k: usize, rng: &mut ChaCha8Rng) -> Vec<CartPoint> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    centroids.push(points[first]);
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist_sq(&points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // float round-off can leave the target just past the last weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // every remaining point coincides with a centroid
            chosen.iter().position(|&c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        centroids.push(points[pick]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(p.dist_sq(&points[pick]));
        }
    }
    centroids
}

/// Moves the centroid of every empty cluster onto the point that lies
/// farthest from its own centroid, taking that point from a cluster that can
/// spare it. Returns true if anything moved.
fn repair_empty(
    points: &[CartPoint],
    labels: &mut [usize],
    dists: &mut [f64],
    centroids: &mut [CartPoint],
) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut moved = false;
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let donor =
            (0..points.len())
                .filter(|&i| sizes[labels[i]] > 1)
                .fold(None::<usize>, |best, i| match best {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                });
        let Some(i) = donor else { break };
        sizes[labels[i]] -= 1;
        sizes[j] = 1;
        labels[i] = j;
        dists[i] = 0.0;
        centroids[j] = points[i];
        moved = true;
    }
    moved
}

/// Lloyd's algorithm: alternate nearest-centroid assignment and mean update
/// until no centroid moves by `tol_m` or more, or `max_iter` rounds ran.
pub fn lloyd_cluster(
    points: &[CartPoint],
    n_clusters: usize,
    tol_m: f64,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterState> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points to cluster".into()));
    }
    if n_clusters == 0 || n_clusters > points.len() {
        return Err(Error::InvalidInput(format!(
            "n_clusters = {n_clusters} must be in [1, {}]",
            points.len()
        )));
    }
    if !(tol_m.is_finite() && tol_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol_m} must be > 0"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be >= 1".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite point".into()));
    }

    if n_clusters == 1 {
        // closed form: the mean, reached in one update
        let n = points.len() as f64;
        let mean = CartPoint::new(
            points.iter().map(|p| p.x).sum::<f64>() / n,
            points.iter().map(|p| p.y).sum::<f64>() / n,
        );
        let inertia = points.iter().map(|p| p.dist_sq(&mean)).sum();
        return Ok(ClusterState {
            centroids: vec![mean],
            labels: vec![0; points.len()],
            inertia,
            iterations_run: 1,
            inertia_history: vec![inertia],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(points, n_clusters, &mut rng);
    let mut history = Vec::with_capacity(max_iter + 1);
    let mut iterations_run = 0;

    for iter in 1..=max_iter {
        let (mut labels, mut dists) = assign(points, &centroids);
        history.push(dists.iter().sum::<f64>());

        let mut sums = vec![(0.0f64, 0.0f64, 0usize); n_clusters];
        for (p, &l) in points.iter().zip(&labels) {
            let s = &mut sums[l];
            s.0 += p.x;
            s.1 += p.y;
            s.2 += 1;
        }
        let mut next = centroids.clone();
        for (c, &(sx, sy, count)) in next.iter_mut().zip(&sums) {
            if count > 0 {
                *c = CartPoint::new(sx / count as f64, sy / count as f64);
            }
        }
        repair_empty(points, &mut labels, &mut dists, &mut next);

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max);
        centroids = next;
        iterations_run = iter;
        if shift < tol_m {
            break;
        }
    }

    // final labels against the returned centroids
    let (mut labels, mut dists) = assign(points, &centroids);
    for _ in 0..n_clusters {
        if !repair_empty(points, &mut labels, &mut dists, &mut centroids) {
            break;
        }
        (labels, dists) = assign(points, &centroids);
    }
    let inertia = dists.iter().sum::<f64>();
    history.push(inertia);

    Ok(ClusterState {
        centroids,
        labels,
        inertia,
        iterations_run,
        inertia_history: history,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellClassification {
    /// Cell id -> index of the robot whose cluster holds all its samples.
    pub dominated: BTreeMap<usize, usize>,
    /// Cells whose samples span more than one cluster, ascending by id.
    pub conflicted: Vec<usize>,
}

/// Splits free cells into dominated and conflicted ones. `state.labels` must
/// line up with [`Grid::perimeter_samples`].
pub fn classify_cells(grid: &Grid, state: &ClusterState) -> Result<CellClassification> {
    let expected: usize = grid.free_cells().map(|c| c.perimeter_points.len()).sum();
    if state.labels.len() != expected {
        return Err(Error::InconsistentState(format!(
            "{} labels for {expected} perimeter samples",
            state.labels.len()
        )));
    }
    let k = state.n_clusters();
    let mut out = CellClassification::default();
    let mut offset = 0;
    for cell in grid.free_cells() {
        let n = cell.perimeter_points.len();
        let labels = &state.labels[offset..offset + n];
        offset += n;
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InconsistentState(format!(
                "label {bad} on cell {} but only {k} clusters",
                cell.id
            )));
        }
        match labels.first() {
            Some(&first) if labels.iter().all(|&l| l == first) => {
                out.dominated.insert(cell.id, first);
            }
            Some(_) => out.conflicted.push(cell.id),
            None => {
                return Err(Error::InconsistentState(format!(
                    "free cell {} has no perimeter samples",
                    cell.id
                )))
            }
        }
    }
    Ok(out)
}

/// Clusters the grid's perimeter samples into `n_robots` groups and
/// classifies its cells.
pub fn partition_grid(
    grid: &Grid,
    n_robots: usize,
    tol_m: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(ClusterState, CellClassification)> {
    let (points, _) = grid.perimeter_samples();
    let state = lloyd_cluster(&points, n_robots, tol_m, max_iter, seed)?;
    let classes = classify_cells(grid, &state)?;
    Ok((state, classes))
}
