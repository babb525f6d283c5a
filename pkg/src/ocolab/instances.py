"""Experiment instances, offline optima and function-class checks.

Generators return an :class:`Instance` bundling the loss stream, an oracle
for the prefix offline optimum, problem bounds, the feasible region and the
starting point.  Randomness comes from ``numpy.random.default_rng(seed)``
(PCG64), so a seed reproduces the same instance on every platform.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from ._validation import as_vector, check_int, check_scalar
from .core import ClassTag, FeasibleRegion, ProblemBounds
from .linalg import generalized_projection, min_eigenvalue
from .losses import (
    HalfSquaredLoss,
    LeastSquaresLoss,
    LinearLoss,
    LossFunction,
    NegLogLoss,
    loss_from_params,
)

__all__ = [
    "ContaminationPattern",
    "LossStream",
    "FixedStream",
    "OnsAdversary",
    "OfflineOracle",
    "Exp1Oracle",
    "Exp2Oracle",
    "LeastSquaresOracle",
    "LinearOracle",
    "GridOracle",
    "grid_minimize_1d",
    "Instance",
    "make_exp1",
    "make_exp2",
    "make_exp3",
    "make_ons_adversary",
    "adversary_switch_round",
    "contamination_count",
    "CertificateResult",
    "certify_exp_concave",
    "Diagnostics",
    "diagnostics",
    "variance_terms",
    "write_round_table",
    "read_round_table",
]

EXP1_OFFSET = 0.01
EXP1_SLOPE = 100.0


@dataclass(frozen=True)
class ContaminationPattern:
    """Sorted 1-based indices of the contaminated rounds."""

    T: int
    indices: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate contaminated indices")
        if any(i < 1 or i > self.T for i in self.indices):
            raise ValueError("contaminated indices must lie in 1..T")

    @classmethod
    def draw(cls, T: int, k: int, rng: np.random.Generator) -> "ContaminationPattern":
        if not 0 <= k <= T:
            raise ValueError(f"need 0 <= k <= T, got k={k}, T={T}")
        idx = rng.choice(T, size=k, replace=False) + 1
        return cls(T, tuple(sorted(int(i) for i in idx)))

    @property
    def k(self) -> int:
        return len(self.indices)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.T, dtype=bool)
        m[np.asarray(self.indices, dtype=int) - 1] = True
        return m

    def prefix_counts(self) -> np.ndarray:
        """``out[t] = |I ∩ [t]|`` for ``t = 0..T``."""
        return np.concatenate([[0], np.cumsum(self.mask())])


# -- streams -----------------------------------------------------------------


class LossStream:
    """Source of per-round losses.

    ``next(t, x_t)`` is called once per round, after the learner committed to
    ``x_t``; adaptive streams may use it, fixed streams ignore it.
    """

    adaptive = False

    def __init__(self, T: int):
        self.T = check_int(T, "T", low=1)

    def next(self, t: int, x_t: np.ndarray) -> LossFunction:
        raise NotImplementedError

    def reset(self) -> None:
        pass


class FixedStream(LossStream):
    def __init__(self, losses: Sequence[LossFunction]):
        super().__init__(len(losses))
        self.losses = list(losses)

    def next(self, t, x_t=None):
        return self.losses[t - 1]

    @property
    def tags(self) -> list[ClassTag]:
        return [f.tag for f in self.losses]


def adversary_switch_round(T: int, gamma: float, G: float, D: float) -> int:
    """Smallest integer ``t1 >= T / (1 + gamma G^2 D / 2)`` (and at least 1)."""
    c = gamma * G * G * D / 2.0
    return max(1, math.ceil(T / (1.0 + c) - 1e-12))


class OnsAdversary(LossStream):
    """Adaptive linear losses ``v_t x`` on ``[-D/2, D/2]`` built against ONS.

    Before the switch round ``t1`` the slopes alternate ``(-1)^t G``; from
    ``t1`` on they are ``+G`` if the learner's ``x_{t1} >= 0`` and ``-G``
    otherwise.
    """

    adaptive = True

    def __init__(self, T: int, gamma: float, G: float, D: float):
        super().__init__(T)
        self.gamma = check_scalar(gamma, "gamma", low=0.0, strict=True)
        self.G = check_scalar(G, "G", low=0.0, strict=True)
        self.D = check_scalar(D, "D", low=0.0, strict=True)
        self.t1 = adversary_switch_round(T, gamma, G, D)
        self.reset()

    def reset(self):
        self.slopes: list[float] = []
        self.queries: list[tuple[int, float]] = []
        self._late_sign = None

    def next(self, t, x_t):
        if t != len(self.slopes) + 1:
            raise ValueError(f"adversary queried out of order: expected t={len(self.slopes) + 1}, got {t}")
        x = float(as_vector(x_t, dim=1, name="x_t")[0])
        self.queries.append((t, x))
        if t < self.t1:
            v = self.G if t % 2 == 0 else -self.G
        else:
            if t == self.t1:
                self._late_sign = 1.0 if x >= 0.0 else -1.0
            v = self._late_sign * self.G
        self.slopes.append(v)
        return LinearLoss([v])

    @property
    def losses(self) -> list[LinearLoss]:
        return [LinearLoss([v]) for v in self.slopes]


# -- oracles -----------------------------------------------------------------


class OfflineOracle:
    """``opt_value(t) = min_x sum_{s<=t} f_s(x)`` over the feasible region."""

    method = "abstract"

    def opt_value(self, t: int) -> float:
        raise NotImplementedError

    def minimizer(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t: int) -> float:
        return self.opt_value(t)


class Exp1Oracle(OfflineOracle):
    """Exact optimum of ``100 k_t x - (t - k_t) log(x + 0.01)`` on ``[0, 1]``.

    The stationary point ``(t-k)/(100k) - 0.01`` gives the closed form
    ``t - 2k - (t-k) log((t-k)/(100k))`` when it lies inside the interval;
    otherwise the objective is monotone and the clamped endpoint is optimal.
    """

    method = "closed-form"

    def __init__(self, pattern: ContaminationPattern):
        self.pattern = pattern
        self._counts = pattern.prefix_counts()

    def _split(self, t):
        k = int(self._counts[t])
        return k, t - k

    def minimizer(self, t):
        k, c = self._split(t)
        if k == 0:
            return np.array([1.0])
        x = c / (EXP1_SLOPE * k) - EXP1_OFFSET
        return np.array([min(max(x, 0.0), 1.0)])

    def opt_value(self, t):
        k, c = self._split(t)
        x = float(self.minimizer(t)[0])
        if k > 0 and 0.0 < x < 1.0:
            return t - 2.0 * k - c * math.log(c / (EXP1_SLOPE * k))
        return EXP1_SLOPE * k * x - c * math.log(x + EXP1_OFFSET)


class Exp2Oracle(OfflineOracle):
    """Exact optimum of ``k_t x + (t - k_t)/2 (x - 1)^2`` on ``[0, 1]``."""

    method = "closed-form"

    def __init__(self, pattern: ContaminationPattern):
        self.pattern = pattern
        self._counts = pattern.prefix_counts()

    def minimizer(self, t):
        k = int(self._counts[t])
        c = t - k
        if c == 0:
            return np.array([0.0])
        return np.array([max(1.0 - k / c, 0.0)])

    def opt_value(self, t):
        k = int(self._counts[t])
        c = t - k
        if 2 * k < t:
            return (2.0 * k * t - 3.0 * k * k) / (2.0 * t - 2.0 * k)
        return 0.5 * c


class LeastSquaresOracle(OfflineOracle):
    """Box-constrained minimum of a prefix sum of least-squares losses.

    The prefix objective is ``x^T P x - 2 q^T x + const``; its box minimizer is
    the ``P``-norm projection of ``P^{-1} q``.  The value is evaluated directly
    from the stacked residuals to avoid cancellation near zero.
    """

    method = "quadratic-projection"

    def __init__(self, losses: Sequence[LeastSquaresLoss], region: FeasibleRegion):
        self.region = region
        A = np.stack([f.A for f in losses])
        b = np.stack([f.b for f in losses])
        self._A = A
        self._b = b
        n = A.shape[1]
        self._P = np.cumsum(np.einsum("tni,tnj->tij", A, A), axis=0) / n
        self._q = np.cumsum(np.einsum("tni,tn->ti", A, b), axis=0) / n
        self._cache: dict[int, np.ndarray] = {}

    def minimizer(self, t):
        if t not in self._cache:
            P, q = self._P[t - 1], self._q[t - 1]
            y = np.linalg.solve(P, q)
            self._cache[t] = generalized_projection(P, y, self.region)
        return self._cache[t].copy()

    def opt_value(self, t):
        x = self.minimizer(t)
        r = self._A[:t] @ x - self._b[:t]
        return float(np.sum(np.mean(r * r, axis=1)))


class LinearOracle(OfflineOracle):
    """Exact optimum of a sum of linear losses over a box (attained at a vertex).

    ``source`` is a list of :class:`LinearLoss` or a stream exposing
    ``losses``; streams are read lazily so adaptive adversaries work.
    """

    method = "closed-form"

    def __init__(self, source, region: FeasibleRegion):
        self.source = source
        self.region = region

    def _slopes(self, t):
        losses = self.source.losses if hasattr(self.source, "losses") else self.source
        if len(losses) < t:
            raise ValueError(f"only {len(losses)} losses realized, cannot evaluate t={t}")
        return np.sum([f.c for f in losses[:t]], axis=0)

    def minimizer(self, t):
        V = self._slopes(t)
        return np.where(V > 0.0, self.region.lower, self.region.upper)

    def opt_value(self, t):
        V = self._slopes(t)
        return float(np.sum(np.minimum(V * self.region.lower, V * self.region.upper)))


def grid_minimize_1d(losses: Sequence[LossFunction], region: FeasibleRegion, *, coarse: float = 1e-3, fine: float = 1e-6):
    """Minimize a sum of convex 1-d losses on a coarse grid, then refine.

    Returns ``(x, value)``.  The fine grid covers one coarse cell on each side
    of the coarse minimizer, which is enough for convex objectives.
    """
    if region.dim != 1:
        raise ValueError("grid_minimize_1d needs a 1-d region")
    lo, hi = float(region.lower[0]), float(region.upper[0])

    def total(grid):
        X = grid[:, None]
        out = np.zeros(grid.shape[0])
        for f in losses:
            out += f.values(X)
        return out

    g1 = np.linspace(lo, hi, int(round((hi - lo) / coarse)) + 1)
    v1 = total(g1)
    x0 = g1[int(np.argmin(v1))]
    a, b = max(lo, x0 - coarse), min(hi, x0 + coarse)
    g2 = np.linspace(a, b, int(round((b - a) / fine)) + 1)
    v2 = total(g2)
    i = int(np.argmin(v2))
    return float(g2[i]), float(v2[i])


class GridOracle(OfflineOracle):
    """Grid-search oracle for 1-d streams (slow; used for cross-checks)."""

    method = "grid"

    def __init__(self, losses: Sequence[LossFunction], region: FeasibleRegion, coarse: float = 1e-3, fine: float = 1e-6):
        self.losses = list(losses)
        self.region = region
        self.coarse = coarse
        self.fine = fine
        self._cache: dict[int, tuple[float, float]] = {}

    def _solve(self, t):
        if t not in self._cache:
            self._cache[t] = grid_minimize_1d(self.losses[:t], self.region, coarse=self.coarse, fine=self.fine)
        return self._cache[t]

    def minimizer(self, t):
        return np.array([self._solve(t)[0]])

    def opt_value(self, t):
        return self._solve(t)[1]


# -- generators ----------------------------------------------------------------


@dataclass
class Instance:
    name: str
    stream: LossStream
    oracle: OfflineOracle
    bounds: ProblemBounds
    region: FeasibleRegion
    x1: np.ndarray
    pattern: ContaminationPattern | None = None
    info: dict = field(default_factory=dict)

    @property
    def tags(self) -> list[ClassTag] | None:
        return getattr(self.stream, "tags", None)


def _check_half(T, k, name):
    if 2 * k >= T:
        warnings.warn(
            f"{name}: 2k >= T (k={k}, T={T}); the interior closed form does not apply, "
            "the oracle uses the clamped endpoint",
            RuntimeWarning,
            stacklevel=3,
        )


def make_exp1(T: int = 1000, k: int = 250, seed: int = 0) -> Instance:
    """Contaminated exp-concave stream on ``[0, 1]``.

    Clean rounds lose ``-log(x + 0.01)`` (1-exp-concave, and
    ``1/1.01^2``-strongly convex on the interval); contaminated rounds lose
    ``100 x``.
    """
    T = check_int(T, "T", low=1)
    k = check_int(k, "k", low=0)
    _check_half(T, k, "make_exp1")
    rng = np.random.default_rng(seed)
    pattern = ContaminationPattern.draw(T, k, rng)
    mask = pattern.mask()
    clean_tag = ClassTag(lambda_t=1.0 / (1.0 + EXP1_OFFSET) ** 2, alpha_t=1.0)
    bad_tag = ClassTag(0.0, 0.0, contaminated=True)
    losses = [
        LinearLoss([EXP1_SLOPE], bad_tag) if mask[t] else NegLogLoss([1.0], EXP1_OFFSET, clean_tag)
        for t in range(T)
    ]
    region = FeasibleRegion.box(0.0, 1.0, 1)
    bounds = ProblemBounds(D=1.0, G=100.0, T=T, alpha=1.0, k=k)
    return Instance("exp1", FixedStream(losses), Exp1Oracle(pattern), bounds, region, np.zeros(1), pattern)


def make_exp2(T: int = 1000, k: int = 250, seed: int = 0) -> Instance:
    """Contaminated strongly convex stream on ``[0, 1]``.

    Clean rounds lose ``(x - 1)^2 / 2``; contaminated rounds lose ``x``.
    """
    T = check_int(T, "T", low=1)
    k = check_int(k, "k", low=0)
    _check_half(T, k, "make_exp2")
    rng = np.random.default_rng(seed)
    pattern = ContaminationPattern.draw(T, k, rng)
    mask = pattern.mask()
    clean_tag = ClassTag(lambda_t=1.0, alpha_t=1.0)
    bad_tag = ClassTag(0.0, 0.0, contaminated=True)
    losses = [LinearLoss([1.0], bad_tag) if mask[t] else HalfSquaredLoss([1.0], clean_tag) for t in range(T)]
    region = FeasibleRegion.box(0.0, 1.0, 1)
    bounds = ProblemBounds(D=1.0, G=1.0, T=T, alpha=1.0, lam=1.0, k=k)
    return Instance("exp2", FixedStream(losses), Exp2Oracle(pattern), bounds, region, np.zeros(1), pattern)


def make_exp3(T: int = 1000, k: int = 250, n: int = 10, d: int = 5, seed: int = 0) -> Instance:
    """Mini-batch least-squares regression on ``[0, 1]^d``.

    Rows ``a_{t,i}`` are uniform on ``[1, 2]^d`` and targets are realizable,
    ``b = <a, x*>`` with ``x*`` uniform on the box.  ``lambda_t`` is the
    smallest eigenvalue of the round's Hessian; the threshold ``lambda`` is the
    ``(k+1)``-th smallest of them (stable order), so exactly ``k`` rounds fall
    below it.  ``G`` is the largest gradient norm over box vertices and all
    rounds, and ``alpha = lambda / G^2``.
    """
    T = check_int(T, "T", low=1)
    k = check_int(k, "k", low=0)
    n = check_int(n, "n", low=1)
    d = check_int(d, "d", low=1)
    if k >= T:
        raise ValueError("make_exp3 needs k < T")
    rng = np.random.default_rng(seed)
    x_star = rng.uniform(0.0, 1.0, size=d)
    A = rng.uniform(1.0, 2.0, size=(T, n, d))
    b = A @ x_star

    hess = (2.0 / n) * np.einsum("tni,tnj->tij", A, A)
    lams = np.array([min_eigenvalue(H) for H in hess])
    order = np.argsort(lams, kind="stable")
    lam = float(lams[order[k]])
    contaminated = np.zeros(T, dtype=bool)
    contaminated[order[:k]] = True
    if np.any(lams[order[:k]] >= lam) or np.count_nonzero(lams == lam) > 1:
        warnings.warn("make_exp3: tied lambda_t at the threshold; earlier rounds counted as contaminated", RuntimeWarning, stacklevel=2)

    region = FeasibleRegion.box(0.0, 1.0, d)
    V = region.vertices()
    R = np.einsum("tni,vi->tnv", A, V) - b[:, :, None]
    grads = (2.0 / n) * np.einsum("tni,tnv->tvi", A, R)
    G = float(np.max(np.linalg.norm(grads, axis=2)))
    alpha = lam / G**2

    losses = []
    for t in range(T):
        tag = ClassTag(lambda_t=float(max(lams[t], 0.0)), alpha_t=float(max(lams[t], 0.0)) / G**2, contaminated=bool(contaminated[t]))
        losses.append(LeastSquaresLoss(A[t], b[t], tag))
    pattern = ContaminationPattern(T, tuple(int(i) + 1 for i in np.sort(order[:k])))
    bounds = ProblemBounds(D=region.diameter(), G=G, T=T, alpha=alpha, lam=lam, k=k)
    info = {"x_star": x_star, "lambdas": lams, "G": G, "lambda": lam, "alpha": alpha}
    return Instance("exp3", FixedStream(losses), LeastSquaresOracle(losses, region), bounds, region, np.zeros(d), pattern, info)


def make_ons_adversary(T: int = 1000, gamma: float = 0.005, G: float = 100.0, D: float = 1.0) -> Instance:
    """Adaptive linear adversary against ONS on ``[-D/2, D/2]``, started at ``-D/2``.

    The bounds carry ``alpha = 2 gamma`` so that default-configured ONS runs
    with exactly ``gamma`` whenever ``gamma <= 1/(2 G D)``.
    """
    stream = OnsAdversary(T, gamma, G, D)
    region = FeasibleRegion.box(-D / 2.0, D / 2.0, 1)
    bounds = ProblemBounds(D=D, G=G, T=T, alpha=2.0 * gamma)
    info = {"gamma": gamma, "t1": stream.t1}
    return Instance("adversary", stream, LinearOracle(stream, region), bounds, region, np.array([-D / 2.0]), None, info)


# -- contamination measures and certificates ------------------------------------


def contamination_count(tags: Sequence[ClassTag], threshold: float, kind: str = "lambda") -> int:
    """Number of rounds whose constant is strictly below ``threshold``."""
    if kind not in ("lambda", "alpha"):
        raise ValueError("kind must be 'lambda' or 'alpha'")
    attr = "lambda_t" if kind == "lambda" else "alpha_t"
    return sum(1 for tag in tags if getattr(tag, attr) < threshold)


@dataclass(frozen=True)
class Diagnostics:
    k_gamma: float
    k_lambda: float


def diagnostics(tags: Sequence[ClassTag], gamma: float, lam: float, G: float, D: float) -> Diagnostics:
    """Soft contamination ``sum max(1 - gamma_t/gamma, 0)`` and ``sum max(1 - lambda_t/lambda, 0)``.

    ``gamma_t = (1/2) min(1/(G D), alpha_t)``.  A zero threshold yields ``nan``
    for that measure.
    """
    alphas = np.array([tag.alpha_t for tag in tags], dtype=np.float64)
    lams = np.array([tag.lambda_t for tag in tags], dtype=np.float64)
    if gamma > 0.0:
        gammas = 0.5 * np.minimum(1.0 / (G * D), alphas)
        k_gamma = float(np.sum(np.maximum(1.0 - gammas / gamma, 0.0)))
    else:
        k_gamma = float("nan")
    k_lambda = float(np.sum(np.maximum(1.0 - lams / lam, 0.0))) if lam > 0.0 else float("nan")
    return Diagnostics(k_gamma, k_lambda)


def variance_terms(xs, grads, comparator, G: float) -> tuple[float, float]:
    """``V = sum <g_t, x_t - x>^2`` and ``W = G^2 sum ||x_t - x||^2``."""
    X = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if X.shape[0] == 1 and np.ndim(xs) == 1:
        X = X.T
    Gm = np.asarray(grads, dtype=np.float64).reshape(X.shape)
    diff = X - np.asarray(comparator, dtype=np.float64)
    V = float(np.sum(np.sum(Gm * diff, axis=1) ** 2))
    W = float(G * G * np.sum(diff * diff))
    return V, W


def _fd_hessian(f: LossFunction, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    d = x.shape[0]
    H = np.zeros((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        H[:, i] = (f.grad(x + e) - f.grad(x - e)) / (2.0 * h)
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class CertificateResult:
    passed: bool
    min_margin: float
    witness: np.ndarray | None

    def __bool__(self):
        return self.passed


def certify_exp_concave(
    f: LossFunction, alpha: float, region: FeasibleRegion, n_samples: int = 256, seed: int = 0, *, tol: float = 1e-6
) -> CertificateResult:
    """Check ``hess f(x) - alpha grad f(x) grad f(x)^T >= -tol`` on sample points.

    Samples are the box center, face centers, vertices (``d <= 10``) and a
    scrambled Halton sequence.  Analytic Hessians are used when the loss
    provides them; otherwise central differences with ``h = 1e-5`` (points
    are pulled inside the box by ``h`` so the stencil stays feasible).
    """
    d = region.dim
    lo, hi = region.lower, region.upper
    center = 0.5 * (lo + hi)
    pts = [center]
    for i in range(d):
        for edge in (lo[i], hi[i]):
            p = center.copy()
            p[i] = edge
            pts.append(p)
    if d <= 10:
        pts.extend(region.vertices())
    if n_samples > 0:
        halton = qmc.Halton(d=d, scramble=True, seed=seed).random(n_samples)
        pts.extend(lo + halton * (hi - lo))

    worst, witness = math.inf, None
    for x in pts:
        H = f.hessian(x)
        if H is None:
            h = 1e-5
            x = np.clip(x, lo + h, hi - h)
            H = _fd_hessian(f, x, h)
        g = f.grad(x)
        M = np.asarray(H, dtype=np.float64) - alpha * np.outer(g, g)
        margin = min_eigenvalue(0.5 * (M + M.T))
        if margin < worst:
            worst, witness = margin, np.array(x, dtype=np.float64)
    passed = worst >= -tol
    return CertificateResult(passed, worst, None if passed else witness)


# -- round tables ----------------------------------------------------------------

_HEADER = "t\tkind\tcontaminated\tlambda_t\talpha_t\tparams"


def write_round_table(stream: LossStream, path_or_buf) -> None:
    """Serialize a fixed stream to a tab-separated round table."""
    if stream.adaptive or not hasattr(stream, "losses"):
        raise TypeError("only fixed streams can be written as a round table")
    lines = [_HEADER]
    for t, f in enumerate(stream.losses, start=1):
        tag = f.tag
        params = " ".join(format(float(p), ".17g") for p in f.params())
        lines.append(
            f"{t}\t{f.kind}\t{int(tag.contaminated)}\t{tag.lambda_t:.17g}\t{tag.alpha_t:.17g}\t{params}"
        )
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_buf, io.TextIOBase):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def read_round_table(path_or_buf) -> FixedStream:
    if isinstance(path_or_buf, io.TextIOBase):
        text = path_or_buf.read()
    else:
        with open(path_or_buf, encoding="utf-8") as fh:
            text = fh.read()
    rows = text.splitlines()
    if not rows or rows[0] != _HEADER:
        raise ValueError("not a round table (bad header)")
    losses = []
    for expected, row in enumerate(rows[1:], start=1):
        t, kind, cont, lam, alpha, params = row.split("\t")
        if int(t) != expected:
            raise ValueError(f"round table rows out of order at t={t}")
        tag = ClassTag(float(lam), float(alpha), bool(int(cont)))
        losses.append(loss_from_params(kind, [float(p) for p in params.split()], tag))
    return FixedStream(losses)
