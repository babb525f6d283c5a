"""Acceptance criteria at full scale (T=1000, up to 100 seeds).

Each test prints one ``PASS``/``FAIL`` line (visible even under output
capture) and then asserts the criterion at its stated tolerance.
"""

import io
import math

import numpy as np
import pytest

from ocolab.bounds import con_ogd_bound, con_ons_bound, ons_lower_bound
from ocolab.core import FeasibleRegion, ProblemBounds
from ocolab.harness import ALGORITHMS, ExperimentConfig, emit_csv, run_grid, run_single
from ocolab.instances import (
    certify_exp_concave,
    grid_minimize_1d,
    make_exp1,
    make_exp2,
    make_ons_adversary,
)
from ocolab.linalg import PsdTracker, generalized_projection, min_eigenvalue
from ocolab.losses import LogisticLoss, NegLogLoss
from ocolab.universal import (
    Maler,
    MetaGrad,
    convex_surrogate,
    convex_surrogate_grad,
    expconcave_surrogate,
    expconcave_surrogate_grad,
    maler_prior,
    metagrad_combine,
    metagrad_prior,
    strong_surrogate,
    strong_surrogate_grad,
)

pytestmark = pytest.mark.slow

T, K = 1000, 250


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return emit


@pytest.fixture(scope="module")
def sublinear_runs():
    algos = tuple(ALGORITHMS)
    return {e: run_grid(ExperimentConfig(e, T=T, k=K, seeds=30, algorithms=algos)).summary for e in ("exp1", "exp2")}


@pytest.fixture(scope="module")
def exp1_runs():
    return run_grid(ExperimentConfig("exp1", T=T, k=K, seeds=100, algorithms=("ogd", "ons", "metagrad", "con_ons"))).summary


@pytest.fixture(scope="module")
def exp2_runs():
    return run_grid(ExperimentConfig("exp2", T=T, k=K, seeds=100, algorithms=("ogd", "metagrad", "hybrid_s2_empty", "con_ogd"))).summary


def test_criterion_01_exp1_optimum(report):
    inst = make_exp1(T, K, 0)
    closed = inst.oracle.opt_value(T)
    _, grid = grid_minimize_1d(inst.stream.losses, inst.region, fine=1e-6)
    formula = T - 2 * K - (T - K) * math.log((T - K) / (100 * K))
    gap = abs(closed - grid)
    ok = gap <= 1e-4 and closed == pytest.approx(formula, rel=1e-14) and abs(closed - 3129.93) < 0.02
    report(1, ok, f"closed form {closed:.6f}, grid {grid:.6f}, gap {gap:.2e}")
    assert ok


def test_criterion_02_exp2_optimum(report):
    inst = make_exp2(T, K, 0)
    closed = inst.oracle.opt_value(T)
    _, grid = grid_minimize_1d(inst.stream.losses, inst.region, fine=1e-6)
    x = inst.oracle.minimizer(T)[0]
    ok = abs(closed - grid) <= 1e-6 and abs(x - 2 / 3) <= 1e-9 and abs(closed - 312500 / 1500) <= 1e-9
    report(2, ok, f"optimum {closed:.10f}, grid gap {abs(closed - grid):.2e}, minimizer {x:.12f}")
    assert ok


def test_criterion_03_sublinear(report, sublinear_runs):
    failures = []
    lines = []
    for exp, stats in sublinear_runs.items():
        for name in stats.algorithms:
            half, full = stats.at(name, T // 2), stats.at(name, T)
            lines.append(f"{exp}/{name} {half / (T / 2):.4f}->{full / T:.4f}")
            if not full / T < half / (T / 2):
                failures.append(f"{exp}/{name}")
    ok = not failures
    report(3, ok, "R_T/T < R_{T/2}/(T/2) for all" if ok else f"not sublinear: {failures}; " + ", ".join(lines))
    assert ok, failures


def test_criterion_04_exp2_ordering(report, exp2_runs):
    h, m, o = (exp2_runs.final(a) for a in ("hybrid_s2_empty", "metagrad", "ogd"))
    ok = h < m < o
    report(4, ok, f"hybrid(S2 empty) {h:.3f} < metagrad {m:.3f} < ogd {o:.3f}")
    assert ok


def test_criterion_05_exp1_ordering(report, exp1_runs):
    m, n, o = (exp1_runs.final(a) for a in ("metagrad", "ons", "ogd"))
    ok = m < o and n < o
    report(5, ok, f"metagrad {m:.2f}, ons {n:.2f} vs ogd {o:.2f}")
    assert ok


def test_criterion_06_ons_adversary(report):
    gamma, G, D = 0.005, 100.0, 1.0
    r = {t: run_single("ons", make_ons_adversary(t, gamma, G, D), stride=t).final_regret for t in (1000, 2000)}
    eps = 1.0 / (gamma * gamma * D * D)
    lb = ons_lower_bound(1000, gamma, G, D, eps)
    ratio = r[2000] / r[1000]
    ok_ratio = ratio >= 1.8
    ok_lb = r[1000] > 0.25 * lb
    report(6, ok_ratio and ok_lb, f"R(2000)/R(1000) = {ratio:.3f} (need >= 1.8), R(1000) = {r[1000]:.2f} vs 0.25*LB = {0.25 * lb:.2f}")
    assert ok_lb
    assert ok_ratio, f"regret ratio {ratio:.3f} below 1.8"


def test_criterion_07_exp3_ons_vulnerable(report):
    stats = run_grid(ExperimentConfig("exp3", T=T, k=K, n=10, d=5, seeds=30, algorithms=("ons", "ogd", "metagrad", "con_ons", "con_ogd"))).summary
    ons = stats.final("ons")
    others = {a: stats.final(a) for a in ("ogd", "metagrad", "con_ons", "con_ogd")}
    ok = all(ons > 5 * v for v in others.values())
    report(7, ok, f"ons {ons:.1f} vs " + ", ".join(f"{a} {v:.1f}" for a, v in others.items()))
    assert ok


def test_criterion_08_explicit_bounds(report, exp1_runs, exp2_runs):
    b1 = con_ons_bound(T, K, G=100.0, D=1.0, gamma=0.005, d=1)
    b2 = con_ogd_bound(T, K, G=1.0, D=1.0, lam=1.0)
    r1, r2 = exp1_runs.final("con_ons"), exp2_runs.final("con_ogd")
    ok = r1 <= b1 and r2 <= b2 and abs(b1 - 1929.63990140224675) <= 1e-9 and abs(b2 - 43.4086762032225117) <= 1e-9
    report(8, ok, f"con_ons {r1:.2f} <= {b1:.2f}; con_ogd {r2:.3f} <= {b2:.3f}")
    assert ok


def test_criterion_09_linear_algebra(report):
    rng = np.random.default_rng(9)
    tr = PsdTracker.scaled_identity(5, 1.0)
    for _ in range(1000):
        tr.rank_one_update(rng.normal(size=5), float(rng.uniform(0.0, 1.0)))
    drift = float(np.max(np.abs(tr.A_inv - np.linalg.inv(tr.A))))

    worst_vi, worst_ne = -np.inf, -np.inf
    for case in range(1000):
        d = int(rng.integers(1, 6))
        lo = rng.uniform(-1, 0, d)
        region = FeasibleRegion(lo, lo + rng.uniform(0.1, 2, d))
        B = rng.normal(size=(d, d))
        A = B @ B.T + 0.05 * np.eye(d)
        y, z = rng.normal(scale=2.0, size=(2, d))
        px, pz = generalized_projection(A, y, region), generalized_projection(A, z, region)
        scale = 1e-8 * (1.0 + np.linalg.norm(A, 2) * (1.0 + np.linalg.norm(y)))
        V = region.vertices()
        worst_vi = max(worst_vi, float(np.max((V - px) @ (A @ (y - px)))) / scale)
        na = lambda v: math.sqrt(max(float(v @ A @ v), 0.0))
        worst_ne = max(worst_ne, na(px - pz) - na(y - z) - 1e-9 * (1 + na(y - z)))

    eig_err = 0.0
    for _ in range(200):
        a, c = rng.normal(size=2)
        b = rng.normal()
        oracle = 0.5 * (a + c) - math.sqrt(0.25 * (a - c) ** 2 + b * b)
        eig_err = max(eig_err, abs(min_eigenvalue(np.array([[a, b], [b, c]])) - oracle))
    ok = drift <= 1e-8 and worst_vi <= 1.0 and worst_ne <= 0.0 and eig_err <= 1e-10
    report(9, ok, f"drift {drift:.1e}, VI ratio {worst_vi:.2f}, nonexpansive slack {worst_ne:.1e}, eig err {eig_err:.1e}")
    assert ok


def test_criterion_10_universal_invariants(report):
    prior_err = 0.0
    for N in range(50):
        prior_err = max(prior_err, abs(metagrad_prior(N).sum() - 1.0))
        c, s, l = maler_prior(N)
        prior_err = max(prior_err, abs(c + s.sum() + l.sum() - 1.0))

    rng = np.random.default_rng(10)
    region = FeasibleRegion.box(-1.0, 1.0, 2)
    simplex_err = 0.0
    positive = True
    for cls in (MetaGrad, Maler):
        learner = cls().start(region, ProblemBounds(D=region.diameter(), G=1.0, T=10_000))
        for _ in range(10_000):
            learner.predict()
            g = rng.normal(size=2)
            learner.observe(g / max(1.0, np.linalg.norm(g)))
            w = np.exp(learner.log_w_)
            positive &= bool(np.all(w > 0))
            simplex_err = max(simplex_err, abs(w.sum() - 1.0))

    fd_err = 0.0
    for _ in range(200):
        x, xt, g = rng.uniform(-1, 1, (3, 3))
        eta = float(rng.uniform(0.05, 1.0))
        cases = [
            (lambda z: convex_surrogate(z, xt, g, eta, 2.0, 1.0), convex_surrogate_grad(x, xt, g, eta)),
            (lambda z: strong_surrogate(z, xt, g, eta, 2.0), strong_surrogate_grad(x, xt, g, eta, 2.0)),
            (lambda z: expconcave_surrogate(z, xt, g, eta), expconcave_surrogate_grad(x, xt, g, eta)),
        ]
        for f, analytic in cases:
            h = 1e-6
            numeric = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)])
            fd_err = max(fd_err, float(np.linalg.norm(numeric - analytic)) / max(1.0, float(np.linalg.norm(analytic))))

    p = rng.normal(size=3)
    single = metagrad_combine([1.0], [0.037], [p])
    exact = bool(np.array_equal(single, p))
    ok = prior_err <= 1e-12 and simplex_err <= 1e-12 and positive and fd_err <= 1e-6 and exact
    report(10, ok, f"prior err {prior_err:.1e}, simplex err {simplex_err:.1e}, fd rel err {fd_err:.1e}, single expert exact {exact}")
    assert ok


def test_criterion_11_certifier(report):
    neglog = certify_exp_concave(NegLogLoss([1.0], 0.01), 1.0, FeasibleRegion.box(0.0, 1.0))
    a = np.array([0.8, -0.8])
    r = 1 / math.sqrt(2)
    region = FeasibleRegion.box(-r, r, 2)
    alpha = math.exp(-np.linalg.norm(a))
    logistic = LogisticLoss(a, 1.0)
    good = certify_exp_concave(logistic, alpha, region)
    bad = certify_exp_concave(logistic, 1.1 * alpha, region)
    witness_ok = bad.witness is not None and region.contains(bad.witness)
    if witness_ok:
        # the witness really violates the inequality
        x = bad.witness
        M = logistic.hessian(x) - 1.1 * alpha * np.outer(logistic.grad(x), logistic.grad(x))
        witness_ok = min_eigenvalue(M) < -1e-6 and np.allclose(x, -a / np.linalg.norm(a), atol=1e-12)
    ok = neglog.passed and good.passed and not bad.passed and witness_ok
    report(11, ok, f"neglog margin {neglog.min_margin:.1e}, logistic margin {good.min_margin:.1e}, rejected at 1.1x with witness {bad.witness}")
    assert ok


@pytest.mark.parametrize("experiment", ["exp1", "exp2", "exp3", "adversary"])
def test_criterion_12_determinism(report, experiment):
    kw = dict(T=300, k=60, n=4, d=3, seeds=3) if experiment != "adversary" else dict(T=300, seeds=1)
    algos = ("ons",) if experiment == "adversary" else tuple(ALGORITHMS)
    cfg = ExperimentConfig(experiment, algorithms=algos, **kw)
    texts = []
    for _ in range(2):
        res = run_grid(cfg)
        buf = io.StringIO()
        emit_csv(res, buf)
        emit_csv(res.summary, buf)
        texts.append(buf.getvalue().encode())
    ok = texts[0] == texts[1]
    report(12, ok, f"{experiment}: {len(texts[0])} bytes, identical {ok}")
    assert ok
