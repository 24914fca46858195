//! Acceptance suite. Runs every criterion in sequence, prints one line per
//! criterion and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scopp_core::auction::{auction_conflicts, BiasTable, CellSource};
use scopp_core::discretize::{cell_width, UavParams};
use scopp_core::geo::{CartPoint, GeoPoint, Projection, EARTH_RADIUS_M};
use scopp_core::mission::{run_pipeline, MissionSpec, Scenario};
use scopp_core::partition::lloyd_cluster;
use scopp_core::pathplan::{KdTree, Plan};
use scopp_core::sim::{evaluate, mean_std, sweep_baseline};

/// 200 * tan(7 deg), computed offline with 30-digit arithmetic.
const CELL_WIDTH_H100_F14: f64 = 24.556_912_180_580_92;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn fixture(name: &str) -> MissionSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.json"));
    MissionSpec::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn brute_nearest(points: &[CartPoint], q: CartPoint, excluded: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if excluded[i] {
            continue;
        }
        let d = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}

fn kd_oracle() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let trials = 10_000;
    let mut mismatches = 0;
    for trial in 0..trials {
        let n = rng.gen_range(1..=300);
        let lattice = trial % 2 == 0;
        let points: Vec<CartPoint> = (0..n)
            .map(|_| {
                if lattice {
                    CartPoint::new(rng.gen_range(0..12) as f64, rng.gen_range(0..12) as f64)
                } else {
                    CartPoint::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3))
                }
            })
            .collect();
        let p_ex = [0.0, 0.3, 0.9][trial % 3];
        let mut excluded: Vec<bool> = (0..n).map(|_| rng.gen_bool(p_ex)).collect();
        let keep = rng.gen_range(0..n);
        excluded[keep] = false;
        let q = if lattice {
            CartPoint::new(
                rng.gen_range(0..24) as f64 / 2.0,
                rng.gen_range(0..24) as f64 / 2.0,
            )
        } else {
            CartPoint::new(rng.gen_range(-1.2e3..1.2e3), rng.gen_range(-1.2e3..1.2e3))
        };
        let leaf = rng.gen_range(1..=16);
        let tree = KdTree::build(points.clone(), leaf).unwrap();
        if tree.nearest(q, &excluded).ok() != brute_nearest(&points, q, &excluded) {
            mismatches += 1;
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!(
            "{trials} trials, {mismatches} mismatches, {:.2} s (budget 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn auction_replay() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    let mut awards = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=8);
        let counts: Vec<usize> = (0..n).map(|_| rng.gen_range(0..30)).collect();
        // half the cases use coarse biases so ties are common
        let bias_cells: Vec<f64> = (0..n)
            .map(|_| {
                if case % 2 == 0 {
                    rng.gen_range(0..8) as f64 * 0.5
                } else {
                    rng.gen_range(0.0..6.0)
                }
            })
            .collect();
        let total_dom: usize = counts.iter().sum();
        let n_conf = rng.gen_range(0..60);
        let mut ids: Vec<usize> = (0..total_dom + n_conf).collect();
        ids.shuffle(&mut rng);
        let mut dominated = BTreeMap::new();
        let mut at = 0;
        for (r, &c) in counts.iter().enumerate() {
            for &id in &ids[at..at + c] {
                dominated.insert(id, r);
            }
            at += c;
        }
        let conflicted: Vec<usize> = ids[at..].to_vec();
        let bias = BiasTable {
            d0: bias_cells.iter().map(|b| b * 20.0).collect(),
            bias_cells: bias_cells.clone(),
            bias_factor: 0.5,
            cell_width_m: 10.0,
        };
        let a = auction_conflicts(&conflicted, &dominated, &bias, n).unwrap();

        let mut ok = dominated.iter().all(|(&c, &r)| {
            a.owner(c) == Some(r) && a.source.get(&c) == Some(&CellSource::Dominated)
        });
        let mut running = counts.clone();
        let order: BTreeSet<usize> = conflicted.iter().copied().collect();
        for cell in order {
            let scores: Vec<f64> = running
                .iter()
                .zip(&bias_cells)
                .map(|(&c, &b)| c as f64 + b)
                .collect();
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let expected = scores.iter().position(|&s| s == min).unwrap();
            let got = a.owner(cell);
            ok &= got == Some(expected) && a.source.get(&cell) == Some(&CellSource::Auctioned);
            running[expected] += 1;
            awards += 1;
        }
        ok &= running == a.counts();
        if !ok {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("100 cases, {awards} awards replayed, {failures} mismatching cases"),
    )
}

fn partition_totality() -> Verdict {
    let mut bad = Vec::new();
    let mut runs = 0;
    for name in ["small", "medium", "large"] {
        let mission = fixture(name);
        for n in [2, 5, 10] {
            runs += 1;
            let run = run_pipeline(&mission, n, 0).unwrap();
            let free: BTreeSet<usize> = run.grid.free_cells().map(|c| c.id).collect();
            let mut seen = BTreeSet::new();
            let mut disjoint = true;
            for cells in &run.assignment.cells_by_robot {
                for &c in cells {
                    disjoint &= seen.insert(c);
                }
            }
            let sources: BTreeSet<usize> = run.assignment.source.keys().copied().collect();
            let mut permutation = true;
            for (r, cells) in run.assignment.cells_by_robot.iter().enumerate() {
                let mut visited = run.plan.assigned_cells[r].clone();
                visited.sort_unstable();
                permutation &= &visited == cells;
                let wp = &run.plan.waypoints_by_robot[r];
                permutation &= wp.len() == cells.len() + 1 && wp[0] == run.robots[r].start;
                permutation &= run.plan.assigned_cells[r]
                    .iter()
                    .zip(&wp[1..])
                    .all(|(&c, p)| run.grid.cells[c].center == *p);
            }
            if !(disjoint && seen == free && sources == free && permutation) {
                bad.push(format!("{name}/{n}"));
            }
        }
    }
    verdict(bad.is_empty(), format!("{runs} runs, failing: {bad:?}"))
}

/// Destination point on the sphere, `dist` meters from `a` along `bearing`.
fn destination(a: GeoPoint, bearing: f64, dist: f64) -> GeoPoint {
    let (p1, l1) = (a.lat.to_radians(), a.lon.to_radians());
    let d = dist / EARTH_RADIUS_M;
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * bearing.cos()).asin();
    let l2 = l1 + (bearing.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    GeoPoint {
        lat: p2.to_degrees(),
        lon: l2.to_degrees(),
    }
}

fn geo_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    let mut errors = 0;
    for _ in 0..10_000 {
        let anchor =
            GeoPoint::new(rng.gen_range(-70.0..70.0), rng.gen_range(-179.0..179.0)).unwrap();
        let proj = Projection::new(anchor).unwrap();
        let g = destination(
            anchor,
            rng.gen_range(0.0..std::f64::consts::TAU),
            rng.gen_range(0.0..10_000.0),
        );
        match proj.to_cartesian(g).and_then(|c| proj.to_geographic(c)) {
            Ok(back) => {
                worst = worst
                    .max((back.lat - g.lat).abs())
                    .max((back.lon - g.lon).abs())
            }
            Err(_) => errors += 1,
        }
    }
    verdict(
        errors == 0 && worst < 1e-9,
        format!("10000 points, max error {worst:.3e} deg (limit 1e-9), {errors} errors"),
    )
}

fn lloyd_monotonicity() -> Verdict {
    let mission = fixture("medium");
    let grid = Scenario::new(&mission).unwrap().grid().unwrap();
    let (points, _) = grid.perimeter_samples();
    let tol = grid.cell_width_m * mission.options.tol_factor;
    let mut violations = 0;
    let mut worst_rise = 0.0f64;
    for seed in 0..50u64 {
        let k = 2 + (seed as usize % 19);
        let s = lloyd_cluster(&points, k, tol, mission.options.max_iter, seed).unwrap();
        for w in s.inertia_history.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
            if w[1] > w[0] + 1e-9 {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("50 runs, k in 2..=20, {violations} rises above 1e-9, largest rise {worst_rise:.3e} m^2"),
    )
}

fn cell_width_formula() -> Verdict {
    let w = cell_width(&UavParams {
        height_m: 100.0,
        fov_deg: 14.0,
        velocity_mps: 10.0,
    })
    .unwrap();
    let direct = 200.0 * 7.0f64.to_radians().tan();
    let err = (w - CELL_WIDTH_H100_F14).abs();
    verdict(
        err < 1e-9 && (direct - CELL_WIDTH_H100_F14).abs() < 1e-12,
        format!("W = {w:.15} m, reference {CELL_WIDTH_H100_F14}, |diff| {err:.1e}"),
    )
}

fn completion(mission: &MissionSpec, n: usize, seed: u64) -> f64 {
    let run = run_pipeline(mission, n, seed).unwrap();
    evaluate(&run.plan, &mission.uav, &run.grid)
        .unwrap()
        .completion_time
}

fn scalability() -> Verdict {
    let t0 = Instant::now();
    let mission = fixture("medium");
    let at = |n| -> Vec<f64> { (0..20).map(|s| completion(&mission, n, s)).collect() };
    let (m5, _) = mean_std(&at(5));
    let (m30, _) = mean_std(&at(30));
    let drop = 1.0 - m30 / m5;
    let elapsed = t0.elapsed();
    verdict(
        drop >= 0.40 && elapsed < Duration::from_secs(300),
        format!(
            "mean mission time N=5 {m5:.1} s, N=30 {m30:.1} s, drop {:.1}% (floor 40%), {:.1} s",
            drop * 100.0,
            elapsed.as_secs_f64()
        ),
    )
}

fn profiling_shape() -> Verdict {
    let mission = fixture("medium");
    let mut both = 0;
    let (mut pp, mut part) = (0, 0);
    for seed in 0..20 {
        let t5 = run_pipeline(&mission, 5, seed).unwrap().timings;
        let t20 = run_pipeline(&mission, 20, seed).unwrap().timings;
        let a = t20.path_planning < t5.path_planning;
        let b = t20.partitioning > t5.partitioning;
        pp += usize::from(a);
        part += usize::from(b);
        both += usize::from(a && b);
    }
    verdict(
        both >= 16,
        format!("{both}/20 runs with both directions (path planning {pp}/20, partitioning {part}/20; need 16)"),
    )
}

fn ablation() -> Verdict {
    let mission = fixture("small");
    let n = 13;
    let (mut nn, mut random) = (Vec::new(), Vec::new());
    for seed in 0..30u64 {
        let run = run_pipeline(&mission, n, seed).unwrap();
        nn.push(
            evaluate(&run.plan, &mission.uav, &run.grid)
                .unwrap()
                .completion_time,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xAB1A7E);
        let orders: Vec<Vec<usize>> = run
            .assignment
            .cells_by_robot
            .iter()
            .map(|cells| {
                let mut c = cells.clone();
                c.shuffle(&mut rng);
                c
            })
            .collect();
        let shuffled =
            Plan::from_orders(orders, &run.robots, &run.grid, &run.scenario.projection).unwrap();
        random.push(
            evaluate(&shuffled, &mission.uav, &run.grid)
                .unwrap()
                .completion_time,
        );
    }
    let (a, b) = (median(nn), median(random));
    verdict(
        a < b,
        format!("{n} robots, 30 seeds: median NN {a:.1} s vs random order {b:.1} s"),
    )
}

fn baseline_comparison() -> Verdict {
    let mission = fixture("small");
    let n = 13;
    let qlbm: Vec<f64> = (0..20).map(|s| completion(&mission, n, s)).collect();
    let (mean, std) = mean_std(&qlbm);
    let scenario = Scenario::new(&mission).unwrap();
    let grid = scenario.grid().unwrap();
    let b = sweep_baseline(&grid, &scenario.robots(n), &scenario.projection).unwrap();
    let sweep = evaluate(&b.plan, &mission.uav, &grid)
        .unwrap()
        .completion_time;
    verdict(
        mean <= sweep,
        format!("{n} robots, single dispatcher, 20 seeds: QLBM {mean:.1} +/- {std:.1} s vs sweep {sweep:.1} s"),
    )
}

fn throughput() -> Verdict {
    let mission = fixture("large");
    let t0 = Instant::now();
    let run = run_pipeline(&mission, 150, 0).unwrap();
    let elapsed = t0.elapsed();
    verdict(
        elapsed < Duration::from_secs(120),
        format!(
            "{} cells, W = {:.3} m, 150 robots: {:.2} s (budget 120 s)",
            run.grid.n_free(),
            run.grid.cell_width_m,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("kd-tree vs brute force", kd_oracle),
        ("greedy auction replay", auction_replay),
        ("partition totality", partition_totality),
        ("geo round trip", geo_round_trip),
        ("lloyd monotonicity", lloyd_monotonicity),
        ("cell width", cell_width_formula),
        ("directional scalability", scalability),
        ("profiling shape", profiling_shape),
        ("ordering ablation", ablation),
        ("baseline comparison", baseline_comparison),
        ("throughput", throughput),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "[{}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
