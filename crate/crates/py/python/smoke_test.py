"""Smoke test for the hbl extension module.

    maturin develop --release  (or pip install target/wheels/hbl-*.whl)
    python python/smoke_test.py
"""

import json
import math

import hbl


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert hbl.PParams(2.0).conjugate == 2.0
    assert close(hbl.bellman(2.0, 1.0, 2.0), 3.0 + 2.0 * math.sqrt(2.0), 1e-14)
    assert hbl.bellman(2.0, 1.0, 1.0) == 1.0
    assert close(hbl.omega(2.0, 1.0), 1.0, 1e-15)
    for x in (0.1, 0.5, 0.8):
        assert close(hbl.hp(2.0, hbl.omega(2.0, x)), x, 1e-12)

    try:
        hbl.bellman(2.0, 2.0, 1.0)
    except ValueError as e:
        assert "infeasible" in str(e)
    else:
        raise AssertionError("f^p > F accepted")

    g0 = hbl.build_g0(2.0, 1.0, 2.0)
    assert close(g0.c, 1.0 / (1.0 + g0.e), 1e-14)
    g = g0.discretize(4096)
    assert close(g.integral(), 1.0, 1e-12)
    assert close(g.p_moment(2.0), 2.0, 1e-12)
    b = hbl.bellman(2.0, 1.0, 2.0)
    assert close(hbl.phi(g, 2.0), b, 1e-5)

    step = hbl.StepFunction([0.0, 0.5, 1.0], [3.0, 1.0])
    assert step(0.25) == 3.0 and step.integral() == 2.0
    assert hbl.StepFunction.from_csv(step.to_csv()).values == step.values

    res = hbl.maximize(2.0, 1.0, 2.0, cells=256, max_iters=300, seed=1)
    assert res.objective <= res.bellman * (1 + 1e-9)
    assert res.objective >= 0.9 * res.bellman
    accepted = [row[1] for row in res.trace if row[4]]
    assert all(x <= y for x, y in zip(accepted, accepted[1:]))

    lhs, rhs = hbl.symmetrization([4.0, 0.0, 0.0, 0.0], 2.0)
    assert lhs <= rhs

    s = hbl.sandwich(0.1, g, 2.0)
    assert s.lower <= s.tree * (1 + 1e-9) and s.tree <= s.upper * (1 + 1e-9)
    assert s.relative_gap() < 0.1

    report = json.loads(hbl.run_verify("bellman"))
    assert all(c["passed"] for c in report["checks"])

    print(f"hbl {hbl.__version__}: smoke test passed (B = {b:.12f}, ascent {res.objective / b:.6f} B)")


if __name__ == "__main__":
    main()
