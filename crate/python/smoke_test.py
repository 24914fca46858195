"""Smoke test for the scopp extension module.

Build and install first, e.g. `maturin develop --release -m crates/py/Cargo.toml` from the repo root.
"""

import json
import math
import pathlib

import scopp

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "crates" / "core" / "fixtures"


def main():
    d = scopp.haversine_distance((0.0, 0.0), (90.0, 0.0))
    assert math.isclose(d, math.pi / 2 * 6_371_000.0, rel_tol=1e-12), d
    assert math.isclose(scopp.cell_width(100.0, 14.0), 200.0 * math.tan(math.radians(7.0)))

    proj = scopp.Projection(30.0, -92.0)
    x, y = proj.to_cartesian(30.001, -91.999)
    lat, lon = proj.to_geographic(x, y)
    assert abs(lat - 30.001) < 1e-9 and abs(lon + 91.999) < 1e-9

    pts = [(float(i % 7), float(i // 7)) for i in range(49)]
    tree = scopp.KdTree(pts, leaf_size=4)
    assert len(tree) == 49
    assert tree.nearest(3.2, 2.9) == 3 + 3 * 7
    mask = [False] * 49
    mask[24] = True
    assert tree.nearest(3.1, 3.0, mask) != 24
    assert scopp.plan_order((0.0, 0.0), [(5.0, 0.0), (1.0, 0.0), (3.0, 0.0)]) == [1, 2, 0]

    mission = scopp.Mission.load(FIXTURES / "small.json")
    n_free = mission.n_free_cells()
    plan = mission.plan(n_robots=4, seed=3)
    assert plan.n_robots == 4
    assert sorted(c for cells in plan.cells_by_robot for c in cells) == sorted(
        set(c for cells in plan.cells_by_robot for c in cells)
    )
    assert sum(len(c) for c in plan.cells_by_robot) == n_free
    assert plan.completion_time == max(plan.t_by_robot)
    assert mission.plan(n_robots=4, seed=3).to_geojson() == plan.to_geojson()

    doc = json.loads(plan.to_geojson())
    assert doc["type"] == "FeatureCollection" and len(doc["features"]) == 4
    assert doc["config"]["options"]["seed"] == 3
    assert plan.to_csv().startswith("robot,seq,lat,lon,eta_s\n")

    base = mission.baseline(n_robots=4)
    assert base.strategy == "sweep"
    assert sum(len(c) for c in base.cells_by_robot) == n_free

    rows = mission.scalability_sweep([2, 3], [0, 1])
    assert [(r[0], r[1]) for r in rows] == [(2, 0), (2, 1), (3, 0), (3, 1)]

    try:
        scopp.Mission.from_json('{"boundary": []}')
    except ValueError:
        pass
    else:
        raise AssertionError("invalid mission accepted")

    print(f"ok: {plan!r}; {base!r}")


if __name__ == "__main__":
    main()
