"""Domain types, the learner contract and regret bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_vector, check_int, check_scalar

__all__ = [
    "ProblemBounds",
    "FeasibleRegion",
    "ClassTag",
    "CLEAN",
    "RunRecord",
    "OnlineLearner",
    "NotStartedError",
    "diameter",
    "gamma_from",
    "regret_curve",
]


@dataclass(frozen=True)
class ProblemBounds:
    """Constants describing a problem instance.

    ``alpha`` and ``lam`` equal to zero mean "no exp-concavity / strong
    convexity claimed".
    """

    D: float
    G: float
    T: int
    alpha: float = 0.0
    lam: float = 0.0
    k: int = 0

    def __post_init__(self):
        check_scalar(self.D, "D", low=0.0, strict=True)
        check_scalar(self.G, "G", low=0.0, strict=True)
        check_scalar(self.alpha, "alpha", low=0.0)
        check_scalar(self.lam, "lam", low=0.0)
        check_int(self.T, "T", low=1)
        check_int(self.k, "k", low=0)
        if self.k > self.T:
            raise ValueError(f"k={self.k} exceeds T={self.T}")


class FeasibleRegion:
    """Axis-aligned box ``{x : lower <= x <= upper}``.

    Instances are immutable; the bound arrays are read-only views.
    """

    __slots__ = ("_lower", "_upper")

    def __init__(self, lower, upper):
        lo = as_vector(lower, name="lower").copy()
        hi = as_vector(upper, dim=lo.shape[0], name="upper").copy()
        if np.any(lo > hi):
            raise ValueError("lower must not exceed upper in any coordinate")
        if not np.linalg.norm(hi - lo) > 0.0:
            raise ValueError("region must have positive diameter")
        lo.flags.writeable = False
        hi.flags.writeable = False
        self._lower = lo
        self._upper = hi

    @classmethod
    def box(cls, low: float, high: float, dim: int = 1) -> "FeasibleRegion":
        dim = check_int(dim, "dim", low=1)
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    @property
    def dim(self) -> int:
        return self._lower.shape[0]

    def diameter(self) -> float:
        return float(np.linalg.norm(self._upper - self._lower))

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self._lower - atol) and np.all(x <= self._upper + atol))

    def clip(self, x) -> np.ndarray:
        """Euclidean projection onto the box."""
        return np.minimum(np.maximum(x, self._lower), self._upper)

    def vertices(self) -> np.ndarray:
        """All ``2**dim`` corners, shape ``(2**dim, dim)``."""
        d = self.dim
        bits = (np.arange(2**d)[:, None] >> np.arange(d)[None, :]) & 1
        return np.where(bits == 1, self._upper, self._lower)

    def __eq__(self, other):
        if not isinstance(other, FeasibleRegion):
            return NotImplemented
        return np.array_equal(self._lower, other._lower) and np.array_equal(self._upper, other._upper)

    def __hash__(self):
        return hash((self._lower.tobytes(), self._upper.tobytes()))

    def __repr__(self):
        return f"FeasibleRegion(lower={self._lower.tolist()}, upper={self._upper.tolist()})"


def diameter(region: FeasibleRegion) -> float:
    return region.diameter()


def gamma_from(bounds: ProblemBounds) -> float:
    """Curvature constant ``(1/2) min(1/(G D), alpha)`` of an exp-concave loss."""
    if bounds.alpha <= 0.0:
        raise ValueError("no exp-concavity available (alpha == 0)")
    return 0.5 * min(1.0 / (bounds.G * bounds.D), bounds.alpha)


@dataclass(frozen=True)
class ClassTag:
    """Per-round function-class information revealed with the loss."""

    lambda_t: float = 0.0
    alpha_t: float = 0.0
    contaminated: bool = False

    def __post_init__(self):
        check_scalar(self.lambda_t, "lambda_t", low=0.0)
        check_scalar(self.alpha_t, "alpha_t", low=0.0)


CLEAN = ClassTag()


@dataclass(frozen=True)
class RunRecord:
    t: int
    x: np.ndarray = field(repr=False)
    loss: float
    cum_loss: float
    regret: float | None = None

    @property
    def x_norm(self) -> float:
        """``x_t`` itself for 1-d problems, ``||x_t||`` otherwise."""
        if self.x.shape[0] == 1:
            return float(self.x[0])
        return float(np.linalg.norm(self.x))


def _opt_callable(oracle) -> Callable[[int], float]:
    if hasattr(oracle, "opt_value"):
        return oracle.opt_value
    if callable(oracle):
        return oracle
    raise TypeError("oracle must be callable or expose opt_value(t)")


def checkpoints(T: int, stride: int) -> list[int]:
    """Multiples of ``stride`` up to ``T``, always ending at ``T``."""
    stride = check_int(stride, "stride", low=1)
    ts = list(range(stride, T + 1, stride))
    if not ts or ts[-1] != T:
        ts.append(T)
    return ts


def regret_curve(records: Sequence[RunRecord], oracle, stride: int = 25) -> list[tuple[int, float]]:
    """Regret against the prefix offline optimum at every checkpoint.

    ``records`` must be the full per-round trace, ``records[i].t == i + 1``.
    """
    if not records:
        return []
    opt = _opt_callable(oracle)
    T = records[-1].t
    out = []
    for t in checkpoints(T, stride):
        rec = records[t - 1]
        if rec.t != t:
            raise ValueError("records must be consecutive rounds starting at t=1")
        out.append((t, rec.cum_loss - float(opt(t))))
    return out


class NotStartedError(RuntimeError):
    pass


class OnlineLearner(BaseEstimator):
    """Base class for every online learner.

    Hyperparameters live in ``__init__`` (so ``get_params``/``set_params`` and
    ``sklearn.base.clone`` work); per-run state is created by :meth:`start`
    and carries a trailing underscore.  A run is the loop::

        learner.start(region, bounds)
        for t in 1..T:
            x_t = learner.predict()
            ...reveal f_t...
            learner.observe(grad f_t(x_t), tag_t)
    """

    requires_tags = False

    def start(self, region: FeasibleRegion, bounds: ProblemBounds, x1=None) -> "OnlineLearner":
        if region.dim < 1:
            raise ValueError("region must have dim >= 1")
        self.region_ = region
        self.bounds_ = bounds
        self.dim_ = region.dim
        self.t_ = 0
        if x1 is None:
            x1 = region.clip(np.zeros(region.dim))
        x1 = as_vector(x1, dim=region.dim, name="x1")
        if not region.contains(x1):
            raise ValueError("x1 must lie in the feasible region")
        self._initialize(x1.copy())
        return self

    def predict(self) -> np.ndarray:
        self._check_started()
        return self.x_.copy()

    def observe(self, grad, tag: ClassTag | None = None) -> "OnlineLearner":
        self._check_started()
        g = as_vector(grad, dim=self.dim_, name="grad")
        G = self.bounds_.G
        if np.linalg.norm(g) > G * (1.0 + 1e-9):
            raise ValueError(f"gradient norm {np.linalg.norm(g):.6g} exceeds G={G:.6g}")
        if tag is None:
            if self.requires_tags:
                raise ValueError(f"{type(self).__name__} needs the round's ClassTag")
            tag = CLEAN
        self.t_ += 1
        self._update(g, tag)
        return self

    def _check_started(self):
        if not hasattr(self, "x_"):
            raise NotStartedError(f"{type(self).__name__} is not started; call start() first")

    def _initialize(self, x1: np.ndarray) -> None:
        raise NotImplementedError

    def _update(self, g: np.ndarray, tag: ClassTag) -> None:
        raise NotImplementedError


def records_from_trace(xs: Iterable, losses: Iterable[float]) -> list[RunRecord]:
    """Build a consecutive record list from iterates and per-round losses."""
    out, cum = [], 0.0
    for t, (x, loss) in enumerate(zip(xs, losses), start=1):
        cum += float(loss)
        out.append(RunRecord(t=t, x=as_vector(x), loss=float(loss), cum_loss=cum))
    return out

