//! Waypoint ordering: greedy nearest-neighbor chains over a KD-tree.

use serde::{Deserialize, Serialize};

use crate::auction::{Assignment, RobotState};
use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::geo::{CartPoint, GeoPoint, Projection};

pub const DEFAULT_LEAF_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
struct BBox {
    lo: CartPoint,
    hi: CartPoint,
}

impl BBox {
    fn of(points: &[CartPoint], idx: &[usize]) -> BBox {
        let mut lo = CartPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = CartPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &i in idx {
            let p = points[i];
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        BBox { lo, hi }
    }

    fn contains(&self, p: &CartPoint) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    fn min_dist_sq(&self, p: &CartPoint) -> f64 {
        let dx = (self.lo.x - p.x).max(0.0).max(p.x - self.hi.x);
        let dy = (self.lo.y - p.y).max(0.0).max(p.y - self.hi.y);
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, PartialEq)]
enum NodeKind {
    /// Range into `KdTree::order`.
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: u8,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    bbox: BBox,
    kind: NodeKind,
}

/// Median-split 2-d tree over a fixed point set. Points are never removed;
/// queries take an exclusion mask instead.
#[derive(Debug, Clone, PartialEq)]
pub struct KdTree {
    points: Vec<CartPoint>,
    leaf_size: usize,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

fn coord(p: &CartPoint, axis: u8) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

impl KdTree {
    pub fn build(points: Vec<CartPoint>, leaf_size: usize) -> Result<KdTree> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "cannot build a KD-tree on no points".into(),
            ));
        }
        if leaf_size == 0 {
            return Err(Error::InvalidInput("leaf size must be >= 1".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite point".into()));
        }
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            points,
            leaf_size,
            nodes: Vec::new(),
        };
        let n = tree.points.len();
        tree.build_node(0, n, 0);
        Ok(tree)
    }

    fn build_node(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let bbox = BBox::of(&self.points, &self.order[start..end]);
        self.nodes.push(Node {
            bbox,
            kind: NodeKind::Leaf { start, end },
        });
        if end - start <= self.leaf_size {
            return id;
        }
        let axis = (depth % 2) as u8;
        let points = &self.points;
        self.order[start..end].sort_unstable_by(|&a, &b| {
            coord(&points[a], axis)
                .total_cmp(&coord(&points[b], axis))
                .then(a.cmp(&b))
        });
        let mid = start + (end - start) / 2;
        let left = self.build_node(start, mid, depth + 1);
        let right = self.build_node(mid, end, depth + 1);
        self.nodes[id].kind = NodeKind::Split { axis, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[CartPoint] {
        &self.points
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Point indices held by each leaf, in tree order.
    pub fn leaves(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf { start, end } => Some(&self.order[start..end]),
                NodeKind::Split { .. } => None,
            })
            .collect()
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(t: &KdTree, id: usize) -> usize {
            match t.nodes[id].kind {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    /// Checks that every node's box contains all of its points.
    pub fn boxes_are_tight(&self) -> bool {
        fn walk(t: &KdTree, id: usize) -> Vec<usize> {
            match t.nodes[id].kind {
                NodeKind::Leaf { start, end } => t.order[start..end].to_vec(),
                NodeKind::Split { left, right, .. } => {
                    let mut v = walk(t, left);
                    v.extend(walk(t, right));
                    v
                }
            }
        }
        (0..self.nodes.len()).all(|id| {
            walk(self, id)
                .iter()
                .all(|&i| self.nodes[id].bbox.contains(&self.points[i]))
        })
    }

    /// Index of the closest point whose `excluded` flag is unset; ties go to
    /// the lowest index. `excluded` may be shorter than the point set, missing
    /// entries count as not excluded.
    pub fn nearest(&self, query: CartPoint, excluded: &[bool]) -> Result<usize> {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, &query, excluded, &mut best);
        if best.1 == usize::MAX {
            Err(Error::EmptyCandidates)
        } else {
            Ok(best.1)
        }
    }

    fn search(&self, id: usize, q: &CartPoint, excluded: &[bool], best: &mut (f64, usize)) {
        let node = &self.nodes[id];
        if node.bbox.min_dist_sq(q) > best.0 {
            return;
        }
        match node.kind {
            NodeKind::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if excluded.get(i).copied().unwrap_or(false) {
                        continue;
                    }
                    let d = self.points[i].dist_sq(q);
                    if d < best.0 || (d == best.0 && i < best.1) {
                        *best = (d, i);
                    }
                }
            }
            NodeKind::Split { axis, left, right } => {
                let split_left = self.nodes[left].bbox.hi;
                let (near, far) = if coord(q, axis) <= coord(&split_left, axis) {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, excluded, best);
                self.search(far, q, excluded, best);
            }
        }
    }
}

pub fn kd_build(points: &[CartPoint], leaf_size: usize) -> Result<KdTree> {
    KdTree::build(points.to_vec(), leaf_size)
}

pub fn kd_nearest(tree: &KdTree, query: CartPoint, excluded: &[bool]) -> Result<usize> {
    tree.nearest(query, excluded)
}

/// Visiting order (indices into `centers`) of the greedy nearest-neighbor
/// chain from `start`.
pub fn plan_order(start: CartPoint, centers: &[CartPoint], leaf_size: usize) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Ok(Vec::new());
    }
    let tree = KdTree::build(centers.to_vec(), leaf_size)?;
    let mut visited = vec![false; centers.len()];
    let mut order = Vec::with_capacity(centers.len());
    let mut current = start;
    for remaining in (1..=centers.len()).rev() {
        let next = if remaining < leaf_size {
            // few candidates left: a scan beats descending the tree
            (0..centers.len())
                .filter(|&i| !visited[i])
                .min_by(|&a, &b| {
                    centers[a]
                        .dist_sq(&current)
                        .total_cmp(&centers[b].dist_sq(&current))
                        .then(a.cmp(&b))
                })
                .ok_or(Error::EmptyCandidates)?
        } else {
            tree.nearest(current, &visited)?
        };
        visited[next] = true;
        order.push(next);
        current = centers[next];
    }
    Ok(order)
}

/// Greedy nearest-neighbor path: `start` followed by every center once.
pub fn plan_path(
    start: CartPoint,
    centers: &[CartPoint],
    leaf_size: usize,
) -> Result<Vec<CartPoint>> {
    let order = plan_order(start, centers, leaf_size)?;
    let mut path = Vec::with_capacity(order.len() + 1);
    path.push(start);
    path.extend(order.iter().map(|&i| centers[i]));
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Per robot, the start position followed by the ordered cell centers.
    pub waypoints_by_robot: Vec<Vec<CartPoint>>,
    pub waypoints_geo: Vec<Vec<GeoPoint>>,
    /// Per robot, cell ids in visiting order.
    pub assigned_cells: Vec<Vec<usize>>,
}

impl Plan {
    pub fn n_robots(&self) -> usize {
        self.waypoints_by_robot.len()
    }

    /// Builds a plan from already ordered cell lists.
    pub fn from_orders(
        orders: Vec<Vec<usize>>,
        robots: &[RobotState],
        grid: &Grid,
        projection: &Projection,
    ) -> Result<Plan> {
        if orders.len() != robots.len() {
            return Err(Error::InvalidInput(format!(
                "{} cell lists for {} robots",
                orders.len(),
                robots.len()
            )));
        }
        let mut waypoints_by_robot = Vec::with_capacity(robots.len());
        let mut waypoints_geo = Vec::with_capacity(robots.len());
        for (robot, cells) in robots.iter().zip(&orders) {
            let mut path = Vec::with_capacity(cells.len() + 1);
            path.push(robot.start);
            for &id in cells {
                let cell = grid
                    .cell(id)
                    .filter(|c| c.is_free())
                    .ok_or_else(|| Error::InvalidInput(format!("cell {id} is not a free cell")))?;
                path.push(cell.center);
            }
            let geo = path
                .iter()
                .map(|&p| projection.to_geographic(p))
                .collect::<Result<Vec<_>>>()?;
            waypoints_by_robot.push(path);
            waypoints_geo.push(geo);
        }
        Ok(Plan {
            waypoints_by_robot,
            waypoints_geo,
            assigned_cells: orders,
        })
    }
}

pub fn finalize_plan(
    assignment: &Assignment,
    robots: &[RobotState],
    grid: &Grid,
    projection: &Projection,
    leaf_size: usize,
) -> Result<Plan> {
    if assignment.n_robots() != robots.len() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} robots, {} given",
            assignment.n_robots(),
            robots.len()
        )));
    }
    let mut orders = Vec::with_capacity(robots.len());
    for (robot, cells) in robots.iter().zip(&assignment.cells_by_robot) {
        let centers = cells
            .iter()
            .map(|&id| {
                grid.cell(id)
                    .filter(|c| c.is_free())
                    .map(|c| c.center)
                    .ok_or_else(|| Error::InvalidInput(format!("cell {id} is not a free cell")))
            })
            .collect::<Result<Vec<_>>>()?;
        let order = plan_order(robot.start, &centers, leaf_size)?;
        orders.push(order.into_iter().map(|i| cells[i]).collect());
    }
    Plan::from_orders(orders, robots, grid, projection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<CartPoint> {
        (0..n)
            .map(|_| CartPoint::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect()
    }

    fn brute_nearest(points: &[CartPoint], q: CartPoint, excluded: &[bool]) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            if excluded[i] {
                continue;
            }
            let d = p.dist_sq(&q);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|b| b.1)
    }

    fn brute_chain(start: CartPoint, centers: &[CartPoint]) -> Vec<usize> {
        let mut left: Vec<usize> = (0..centers.len()).collect();
        let mut cur = start;
        let mut out = Vec::new();
        while !left.is_empty() {
            let mut bi = 0;
            for k in 1..left.len() {
                if centers[left[k]].dist_sq(&cur) < centers[left[bi]].dist_sq(&cur) {
                    bi = k;
                }
            }
            let i = left.remove(bi);
            out.push(i);
            cur = centers[i];
        }
        out
    }

    #[test]
    fn single_point_tree() {
        let t = kd_build(&[CartPoint::new(1.0, 2.0)], 10).unwrap();
        assert_eq!(t.leaves(), vec![&[0usize][..]]);
        assert_eq!(kd_nearest(&t, CartPoint::new(50.0, 50.0), &[]).unwrap(), 0);
    }

    #[test]
    fn structure_of_a_hundred_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(100, &mut rng);
        let t = kd_build(&pts, 10).unwrap();
        let leaves = t.leaves();
        assert!(leaves.iter().all(|l| l.len() <= 10));
        let mut all: Vec<usize> = leaves.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(t.depth() <= (100f64 / 10.0).log2().ceil() as usize + 1);
        assert!(t.boxes_are_tight());
    }

    #[test]
    fn duplicates_are_kept() {
        let pts = vec![CartPoint::new(3.0, 3.0); 25];
        let t = kd_build(&pts, 4).unwrap();
        assert_eq!(t.leaves().concat().len(), 25);
        let mut ex = vec![true; 25];
        ex[17] = false;
        assert_eq!(kd_nearest(&t, CartPoint::new(0.0, 0.0), &ex).unwrap(), 17);
        assert_eq!(kd_nearest(&t, CartPoint::new(0.0, 0.0), &[]).unwrap(), 0);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(kd_build(&[], 10).is_err());
        assert!(kd_build(&[CartPoint::default()], 0).is_err());
        let t = kd_build(&[CartPoint::default(), CartPoint::new(1.0, 1.0)], 1).unwrap();
        assert_eq!(
            kd_nearest(&t, CartPoint::default(), &[true, true]),
            Err(Error::EmptyCandidates)
        );
    }

    #[test]
    fn query_on_a_stored_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = random_points(50, &mut rng);
        let t = kd_build(&pts, 10).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(kd_nearest(&t, *p, &[]).unwrap(), i);
        }
    }

    #[test]
    fn equidistant_tie_takes_lower_index() {
        let pts = vec![
            CartPoint::new(10.0, 0.0),
            CartPoint::new(-10.0, 0.0),
            CartPoint::new(0.0, 10.0),
        ];
        let t = kd_build(&pts, 1).unwrap();
        assert_eq!(kd_nearest(&t, CartPoint::default(), &[]).unwrap(), 0);
        assert_eq!(kd_nearest(&t, CartPoint::default(), &[true]).unwrap(), 1);
    }

    #[test]
    fn matches_brute_force_with_exclusions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(200, &mut rng);
        let t = kd_build(&pts, 10).unwrap();
        for _ in 0..50 {
            let q = CartPoint::new(rng.gen_range(-20.0..120.0), rng.gen_range(-20.0..120.0));
            let frac: f64 = rng.gen();
            let ex: Vec<bool> = (0..200).map(|_| rng.gen::<f64>() < frac).collect();
            let expected = brute_nearest(&pts, q, &ex);
            assert_eq!(kd_nearest(&t, q, &ex).ok(), expected);
        }
    }

    #[test]
    fn path_examples() {
        let s = CartPoint::new(0.0, 0.0);
        assert_eq!(plan_path(s, &[], 10).unwrap(), vec![s]);
        let centers = [
            CartPoint::new(10.0, 0.0),
            CartPoint::new(20.0, 0.0),
            CartPoint::new(5.0, 0.0),
        ];
        let path = plan_path(s, &centers, 10).unwrap();
        let xs: Vec<f64> = path.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 5.0, 10.0, 20.0]);
    }

    #[test]
    fn chain_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for leaf in [1, 3, 10] {
            for _ in 0..20 {
                let centers = random_points(12, &mut rng);
                let start = CartPoint::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
                assert_eq!(
                    plan_order(start, &centers, leaf).unwrap(),
                    brute_chain(start, &centers)
                );
            }
        }
        // long chains exercise the tree path, not only the scan tail
        let centers = random_points(300, &mut rng);
        assert_eq!(
            plan_order(CartPoint::default(), &centers, 10).unwrap(),
            brute_chain(CartPoint::default(), &centers)
        );
    }
}
