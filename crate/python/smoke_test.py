"""Smoke test for the sos_density extension module.

Build first:  pip install --no-build-isolation -e crates/python
"""

import json
import math
import tempfile
from pathlib import Path

import sos_density as sd


def main() -> None:
    k = sd.Kernel("gaussian", 1.0)
    assert k([0.0], [0.0]) == 1.0
    assert abs(k([0.0], [1.0]) - math.exp(-1.0)) < 1e-15

    w = sd.simplex_project([0.5, 0.5, 0.5])
    assert abs(sum(w) - 1.0) < 1e-12

    c = sd.project_trace_one_psd([[2.0, 0.0], [0.0, -1.0]])
    assert abs(c[0][0] + c[1][1] - 1.0) < 1e-12

    data = sd.gen_two_moons(100, 0.1, 0)
    model, report = sd.fit(data, 50, sigma=1.0, lam=1e-3)
    assert report.converged, report.iterations
    assert abs(model.mass - 1.0) < 1e-8
    assert report.final_projected_mmd < report.projected_mmd_trace[0]
    assert model.density([0.0, 0.5]) >= 0.0

    grid = model.eval_grid([-6.0, -6.0], [7.0, 6.5], 200)
    assert 0.99 <= grid["riemann_mass"] <= 1.01, grid["riemann_mass"]
    assert min(grid["values"]) >= -1e-12

    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "model.json")
        model.save(path)
        again = sd.Model.load(path)
        assert again.density_batch(data[:10]) == model.density_batch(data[:10])
    assert json.loads(report.to_json())["iterations"] == report.iterations

    ce = sd.run_counterexample(0.3, grid_points=101)
    assert ce["theta_star_relaxed"] == 0.0
    assert ce["max_constraint_violation"] <= 1e-8

    try:
        sd.fit(data, 500)
    except ValueError:
        pass
    else:
        raise AssertionError("oversized support accepted")

    print(
        f"ok: {report.iterations} iterations, mass {model.mass:.12f}, "
        f"projected MMD^2 {report.final_projected_mmd:.4e}, grid mass {grid['riemann_mass']:.6f}, "
        f"counterexample theta*_relaxed {ce['theta_star_relaxed']}, theta*_mmd {ce['theta_star_mmd']}"
    )


if __name__ == "__main__":
    main()
