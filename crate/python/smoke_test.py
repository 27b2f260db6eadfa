"""Smoke test for the fas_surrogate_py extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math
import random
import sys
import tempfile

import fas_surrogate_py as fs


def close(a, b, tol):
    return all(abs(x - y) <= tol for x, y in zip(a, b)) and len(a) == len(b)


def main():
    rng = random.Random(1)

    h = fs.Hierarchy(2, 2)
    assert (h.num_coarse, h.num_fine, h.num_subdomains) == (9, 25, 4)
    vc = [rng.uniform(-1, 1) for _ in range(h.num_coarse)]
    assert h.project(h.prolong(vc)) == vc
    assert h.subdomain_dofs(3) == [4, 5, 7, 8]

    op = fs.FineOperator(h, "one_plus_u2")
    u = op.interpolate("biquartic")
    assert op.apply(u) == op.manufactured_rhs("biquartic")

    # Jacobian against central differences
    v = [rng.uniform(-1, 1) for _ in range(op.num_dofs)]
    jac = op.jacobian(v)
    eps = 1e-6
    for j in (0, 7, 24):
        vp, vm = list(v), list(v)
        vp[j] += eps
        vm[j] -= eps
        fd = [(a - b) / (2 * eps) for a, b in zip(op.apply(vp), op.apply(vm))]
        assert close([row[j] for row in jac], fd, 1e-6), j

    # assembled local deltas equal the Galerkin difference
    g = [0.01 * rng.uniform(-1, 1) for _ in range(9)]
    ug = [a + b for a, b in zip(vc, g)]
    direct = [a - b for a, b in zip(op.galerkin_coarse_apply(ug), op.galerkin_coarse_apply(vc))]
    assert close(op.coarse_delta(vc, g), direct, 1e-13)

    pts = fs.sobol_points(8, 16)
    assert len(pts) == 16 and all(0.0 <= x < 1.0 for p in pts for x in p)
    assert all(math.hypot(*p) <= 0.005 * (1 + 1e-12) for p in fs.sample_ball(4, 0.005, 20))

    net = fs.Mlp(seed=4)
    assert net.dims == [8, 16, 16, 16, 4]
    assert fs.Mlp.from_text(net.to_text()) == net
    xs = [[rng.uniform(-1, 1) for _ in range(8)] for _ in range(50)]
    ys = [[0.3, -0.2, 0.1, 0.05] for _ in xs]
    losses = net.train(xs, ys, epochs=50)
    assert len(losses) == 50 and losses[-1] < losses[0]

    cfg = fs.Config(max_cycles=10)
    sol, report = fs.solve(cfg)
    assert report.converged, report
    assert report.coarse_iterations[0] == 5
    assert report.seed == 0
    assert close(sol, u, 1e-4)
    res = report.residuals
    assert all(b < a for a, b in zip(res, res[1:]))
    print("true operator:", report, [f"{r:.2e}" for r in res])

    small = fs.Config(epochs=20, box_draws=4, ball_draws=10, max_cycles=2, coarse_op="outside")
    s = fs.train_surrogate(small)
    assert s.num_subdomains == 4
    with tempfile.TemporaryDirectory() as d:
        fs.save_models(d, small, s)
        back = fs.load_models(d, small)
        assert back.network(2) == s.network(2)
    _, rep = fs.solve(small, s)
    assert rep.num_cycles <= 2
    print("outside operator:", rep)

    try:
        fs.Config(no_such_key=1)
    except ValueError as e:
        assert "no_such_key" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
