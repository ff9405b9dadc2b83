import itertools
import math

import numpy as np
import pytest

import hqlab


def sigma_brute(lam, k):
    return sum(math.prod(c) for c in itertools.combinations(lam, k))


def test_sigma_matches_subsets():
    rng = np.random.default_rng(3)
    for n in range(2, 7):
        lam = rng.normal(size=n).tolist()
        for k in range(n + 1):
            assert hqlab.sigma(lam, k) == pytest.approx(sigma_brute(lam, k), abs=1e-12)


def test_quotient_eval_against_finite_differences():
    lam = [2.0, 1.0, 0.5, -0.2]
    q = hqlab.quotient_eval(lam)
    f = lambda v: sigma_brute(v, 2) / sigma_brute(v, 1)
    x = np.array(q["lam"])
    h = 1e-6
    for p in range(4):
        e = np.zeros(4)
        e[p] = h
        assert q["grad"][p] == pytest.approx((f(x + e) - f(x - e)) / (2 * h), rel=1e-7)
    assert q["hess"].shape == (4, 4)
    assert np.allclose(q["divided_diff"], 1.0 / q["sigma1"], atol=1e-14)
    with pytest.raises(hqlab.ConeViolation):
        hqlab.quotient_eval([-1.0, -1.0, 0.5])


def test_matrix_derivative_is_trace_minus_matrix():
    a = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 1.5]])
    d = hqlab.matrix_derivative(a, "sigma2")
    assert np.allclose(d, np.trace(a) * np.eye(3) - a)


def test_constants():
    assert hqlab.cn(4) == 0.5
    for n in range(2, 17):
        root = (n + 1 + math.sqrt(3 * n * n + 1)) / (2 * n)
        assert 1 + hqlab.cn(n) == pytest.approx(root, abs=1e-14)
        assert abs(hqlab.concavity_quadratic(root, n)) < 1e-10


def test_worked_qtilde():
    e = hqlab.qtilde([2.0, 1.0, 1.0], 0)
    assert e["R"] == pytest.approx(125 / 256, abs=1e-12)
    assert e["S"] == pytest.approx(23 / 16, abs=1e-12)
    assert e["denom"] == pytest.approx(0.375, abs=1e-12)
    assert e["qtilde"] == pytest.approx(3.90625, abs=1e-12)


def test_lagrange_against_numpy_kkt():
    f = np.array([0.2, 0.3, 0.5])
    s = hqlab.minimize(f, 0, 1.0, 0.0)
    assert s["qmin"] == pytest.approx(15 / 0.34, abs=1e-9)
    # stationarity: diag(2 w) t = mu1 f + mu2 1
    w = np.array([1.0, 3.0, 3.0])
    k = np.zeros((5, 5))
    k[:3, :3] = np.diag(2 * w)
    k[:3, 3] = -f
    k[:3, 4] = -1
    k[3, :3] = f
    k[4, :3] = 1
    sol = np.linalg.solve(k, np.array([0, 0, 0, 1.0, 0.0]))
    assert np.allclose(sol[:3], s["t"], atol=1e-12)
    assert hqlab.feasible_gap(f, 0, 1.0, 0.0, 2000) >= -1e-10
    with pytest.raises(hqlab.DegenerateError):
        hqlab.minimize([0.4, 0.4, 0.4], 1, 1.0, 0.0)


def test_suite_small():
    reports = hqlab.run_suite([3], 500, 7)
    assert all(r["passed"] for r in reports)
    assert {r["name"] for r in reports} >= {"lemma21", "lemma22_upper"}


def test_solve_quadratic():
    r = hqlab.solve("quadratic3d", grid=17)
    assert r["converged"]
    assert r["iterations"] <= 3
    assert r["final_residual_norm"] <= 1e-10
    assert r["sup_error"] <= 1e-10
    u = r["u"]
    assert u.shape == (17, 17, 17)
    # u = (x^2 + y^2 + 4 z^2) / 2 on [-1, 1]^3
    assert u[0, 0, 0] == pytest.approx(3.0)
    assert u[8, 8, 0] == pytest.approx(2.0)


def test_doubling_and_errors():
    d = hqlab.doubling("doubling07")
    assert d["ratio"] == pytest.approx(0.75, rel=1e-8)
    assert d["condition_holds"] and d["two_convex"]
    with pytest.raises(hqlab.ConeViolation):
        hqlab.doubling("saddle3d")
    with pytest.raises(hqlab.UsageError):
        hqlab.solve("nope")
    assert issubclass(hqlab.ConeViolation, hqlab.Error)


def test_cli_in_process(tmp_path):
    code, out, err = hqlab.cli(["frobnicate"])
    assert code == 2 and "unknown command" in err
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        code, out, _ = hqlab.cli(["verify", "--samples", "300", "--dims", "2-3", "--seed", "9", "--out", str(p)])
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
