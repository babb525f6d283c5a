"""Fast invariant checks runnable from the command line (``ocolab selftest``).

These are reduced-scale versions of the package's invariants; the full
full-scale checks live in the test suite.
"""

from __future__ import annotations

import io
import math
from typing import Callable

import numpy as np

from .core import FeasibleRegion, ProblemBounds
from .harness import ALGORITHMS, ExperimentConfig, emit_csv, run_grid, run_single
from .instances import (
    certify_exp_concave,
    grid_minimize_1d,
    make_exp1,
    make_exp2,
    make_exp3,
    make_ons_adversary,
)
from .linalg import PsdTracker, generalized_projection, min_eigenvalue
from .losses import LinearLoss, NegLogLoss
from .universal import MetaGrad, Maler, maler_prior, metagrad_prior

Check = Callable[[], tuple[bool, str]]


def _sherman_morrison() -> tuple[bool, str]:
    rng = np.random.default_rng(0)
    tr = PsdTracker.scaled_identity(5, 1.0)
    for _ in range(1000):
        tr.rank_one_update(rng.normal(size=5), float(rng.uniform()))
    err = float(np.max(np.abs(tr.A_inv - np.linalg.inv(tr.A))))
    return err <= 1e-8, f"max |A_inv - inv(A)| = {err:.2e}"


def _projection() -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    region = FeasibleRegion.box(0.0, 1.0, 3)
    V = region.vertices()
    worst = -math.inf
    for _ in range(200):
        B = rng.normal(size=(3, 3))
        A = B @ B.T + 0.1 * np.eye(3)
        y = rng.normal(scale=2.0, size=3)
        x = generalized_projection(A, y, region)
        tol = 1e-8 * (1.0 + np.linalg.norm(A, 2) * np.linalg.norm(y))
        worst = max(worst, float(np.max((V - x) @ (A @ (y - x)))) / tol)
    return worst <= 1.0, f"worst variational-inequality ratio {worst:.3f}"


def _eigen() -> tuple[bool, str]:
    err = abs(min_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) - 1.0)
    return err <= 1e-10, f"|lambda_min - 1| = {err:.1e}"


def _priors() -> tuple[bool, str]:
    errs = []
    for N in range(0, 12):
        errs.append(abs(float(np.sum(metagrad_prior(N))) - 1.0))
        c, s, l = maler_prior(N)
        errs.append(abs(c + float(np.sum(s) + np.sum(l)) - 1.0))
    return max(errs) <= 1e-12, f"max prior mass error {max(errs):.1e}"


def _oracles() -> tuple[bool, str]:
    inst1 = make_exp1(200, 50, 0)
    inst2 = make_exp2(200, 50, 0)
    e1 = abs(inst1.oracle.opt_value(200) - grid_minimize_1d(inst1.stream.losses, inst1.region)[1])
    e2 = abs(inst2.oracle.opt_value(200) - grid_minimize_1d(inst2.stream.losses, inst2.region)[1])
    return e1 <= 1e-4 and e2 <= 1e-6, f"exp1 gap {e1:.1e}, exp2 gap {e2:.1e}"


def _feasibility() -> tuple[bool, str]:
    instances = [make_exp1(100, 25, 0), make_exp2(100, 25, 0), make_exp3(60, 15, 10, 3, 0), make_ons_adversary(100)]
    n = 0
    for inst in instances:
        for name in ALGORITHMS:
            if name == "con_ogd" and inst.bounds.k == 0:
                continue  # no curvature at all: the regularized rule rejects this by design
            run_single(name, inst, stride=25)  # raises on infeasible iterates
            n += 1
    return True, f"{n} runs stayed feasible"


def _certifier() -> tuple[bool, str]:
    ok1 = certify_exp_concave(NegLogLoss([1.0], 0.01), 1.0, FeasibleRegion.box(0.0, 1.0, 1)).passed
    ok2 = not certify_exp_concave(LinearLoss([1.0]), 0.1, FeasibleRegion.box(0.0, 1.0, 1)).passed
    return ok1 and ok2, f"neglog certified={ok1}, linear rejected={ok2}"


def _determinism() -> tuple[bool, str]:
    cfg = ExperimentConfig("exp2", T=200, k=50, seeds=3, algorithms=("ogd", "metagrad", "hybrid_s2_empty"))
    texts = []
    for _ in range(2):
        buf = io.StringIO()
        emit_csv(run_grid(cfg), buf)
        texts.append(buf.getvalue())
    return texts[0] == texts[1], f"{len(texts[0])} bytes, identical={texts[0] == texts[1]}"


def _weights() -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    region = FeasibleRegion.box(-1.0, 1.0, 2)
    bounds = ProblemBounds(D=region.diameter(), G=1.0, T=2000)
    worst = 0.0
    for learner in (MetaGrad(), Maler()):
        learner.start(region, bounds)
        for _ in range(2000):
            learner.predict()
            g = rng.normal(size=2)
            learner.observe(g / max(1.0, np.linalg.norm(g)))
            w = np.exp(learner.log_w_)
            worst = max(worst, abs(float(np.sum(w)) - 1.0))
            if not np.all(w > 0.0):
                return False, "a weight reached zero"
    return worst <= 1e-12, f"max simplex error {worst:.1e}"


CHECKS: dict[str, Check] = {
    "sherman-morrison drift": _sherman_morrison,
    "projection variational inequality": _projection,
    "2x2 eigenvalue": _eigen,
    "prior normalization": _priors,
    "weight simplex": _weights,
    "oracle vs grid": _oracles,
    "iterate feasibility": _feasibility,
    "certifier": _certifier,
    "csv determinism": _determinism,
}


def run_selftest(out=print) -> bool:
    ok_all = True
    for name, check in CHECKS.items():
        try:
            ok, detail = check()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok_all


__all__ = ["CHECKS", "run_selftest"]
