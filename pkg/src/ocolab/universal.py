"""Universal learners that need no function-class information.

MetaGrad runs one slave per learning rate on a grid and mixes them with
tilted exponential weights.  Maler does the same over three expert families
(convex, strongly convex, exp-concave), each fed its own surrogate loss.

The update rules are also exposed as plain functions on arrays so they can
be checked in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import OnlineLearner
from .linalg import PsdTracker, generalized_projection

__all__ = [
    "EtaGrid",
    "eta_grid",
    "metagrad_prior",
    "maler_prior",
    "metagrad_combine",
    "metagrad_surrogates",
    "metagrad_master_update",
    "metagrad_slave_update",
    "MetaGradSlave",
    "MetaGrad",
    "MalerWeights",
    "maler_combine",
    "maler_meta_update",
    "convex_surrogate",
    "strong_surrogate",
    "expconcave_surrogate",
    "convex_surrogate_grad",
    "strong_surrogate_grad",
    "expconcave_surrogate_grad",
    "Maler",
]


@dataclass(frozen=True)
class EtaGrid:
    """Learning rates ``2^-i / (5 G D)`` for ``i = 0..N`` with ``N = ceil(log2(T) / 2)``."""

    etas: np.ndarray
    C: float

    @property
    def N(self) -> int:
        return len(self.etas) - 1


def eta_grid(T: int, G: float, D: float) -> EtaGrid:
    N = max(0, math.ceil(0.5 * math.log2(T))) if T > 1 else 0
    etas = np.array([2.0**-i / (5.0 * G * D) for i in range(N + 1)])
    return EtaGrid(etas=etas, C=1.0 + 1.0 / (1.0 + N))


def metagrad_prior(N: int) -> np.ndarray:
    """``C / ((i+1)(i+2))``; telescopes to exactly 1 over ``i = 0..N``."""
    C = 1.0 + 1.0 / (1.0 + N)
    i = np.arange(N + 1)
    return C / ((i + 1.0) * (i + 2.0))


def maler_prior(N: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Priors of the convex expert and the two per-eta families (each 1/3 of the mass)."""
    fam = metagrad_prior(N) / 3.0
    return 1.0 / 3.0, fam.copy(), fam.copy()


def metagrad_combine(weights, etas, iterates) -> np.ndarray:
    """Eta-tilted average ``sum(pi eta x) / sum(pi eta)`` of the slave iterates."""
    w = np.asarray(weights, dtype=np.float64) * np.asarray(etas, dtype=np.float64)
    X = np.atleast_2d(np.asarray(iterates, dtype=np.float64))
    if X.shape[0] == 1:
        return X[0].copy()  # w x / w can be off by an ulp
    return (w @ X) / np.sum(w)


def metagrad_surrogates(etas, iterates, master_x, grad) -> np.ndarray:
    """Surrogate ``-eta r + eta^2 r^2`` with ``r = <x_t - x^eta, g>`` for every slave."""
    etas = np.asarray(etas, dtype=np.float64)
    X = np.atleast_2d(np.asarray(iterates, dtype=np.float64))
    r = (np.asarray(master_x) - X) @ np.asarray(grad)
    return -etas * r + etas**2 * r**2


def _reweight(log_w: np.ndarray, surrogate: np.ndarray, sign: float) -> np.ndarray:
    # max-shifted normalization in log space
    z = log_w + sign * surrogate
    return z - np.logaddexp.reduce(z)


def metagrad_master_update(weights, etas, iterates, master_x, grad, *, sign: float = -1.0) -> np.ndarray:
    """Exponential-weights step ``pi * exp(sign * surrogate)``, renormalized.

    ``sign=-1`` treats the surrogate as a loss; ``sign=+1`` is the rule with a
    positive exponent.
    """
    surr = metagrad_surrogates(etas, iterates, master_x, grad)
    log_w = np.log(np.asarray(weights, dtype=np.float64))
    return np.exp(_reweight(log_w, surr, sign))


class MetaGradSlave:
    """One learning rate's second-order learner.

    ``metric`` tracks ``M = I/D^2 + 2 eta^2 sum g g^T`` and its inverse ``Sigma``.
    """

    def __init__(self, eta: float, x0: np.ndarray, D: float):
        self.eta = float(eta)
        self.x = np.array(x0, dtype=np.float64)
        self.metric = PsdTracker.scaled_identity(self.x.shape[0], 1.0 / D**2)

    @property
    def sigma(self) -> np.ndarray:
        return self.metric.A_inv


def metagrad_slave_update(slave: MetaGradSlave, master_x, grad, region) -> MetaGradSlave:
    """Newton-style step on the slave's surrogate, then projection in the ``M`` norm.

    The step direction is the surrogate gradient at the slave's point,
    ``eta (1 + 2 eta <g, x^eta - x_t>) g``, preconditioned by the updated ``Sigma``.
    """
    g = np.asarray(grad, dtype=np.float64)
    eta = slave.eta
    slave.metric.rank_one_update(g, 2.0 * eta * eta)
    factor = 1.0 + 2.0 * eta * float(g @ (slave.x - master_x))
    y = slave.x - eta * factor * (slave.metric.A_inv @ g)
    slave.x = generalized_projection(slave.metric, y, region)
    return slave


class MetaGrad(OnlineLearner):
    """Full-matrix MetaGrad.

    Parameters
    ----------
    master_sign : {"negative", "positive"}
        ``negative`` multiplies the weights by ``exp(-surrogate)``;
        ``positive`` by ``exp(+surrogate)``, kept for comparison runs.
    """

    def __init__(self, master_sign: str = "negative"):
        self.master_sign = master_sign

    def _initialize(self, x1):
        if self.master_sign not in ("negative", "positive"):
            raise ValueError("master_sign must be 'negative' or 'positive'")
        b = self.bounds_
        self.grid_ = eta_grid(b.T, b.G, b.D)
        self.sign_ = -1.0 if self.master_sign == "negative" else 1.0
        x0 = self.region_.clip(np.zeros(self.dim_))
        self.slaves_ = [MetaGradSlave(eta, x0, b.D) for eta in self.grid_.etas]
        self.log_w_ = np.log(metagrad_prior(self.grid_.N))
        self.x_ = x1

    @property
    def weights_(self) -> np.ndarray:
        return np.exp(self.log_w_)

    def slave_iterates(self) -> np.ndarray:
        return np.array([s.x for s in self.slaves_])

    def _update(self, g, tag):
        x_t = self.x_
        X = self.slave_iterates()
        surr = metagrad_surrogates(self.grid_.etas, X, x_t, g)
        self.log_w_ = _reweight(self.log_w_, surr, self.sign_)
        for slave in self.slaves_:
            metagrad_slave_update(slave, x_t, g, self.region_)
        # the tilted average lies in the box; clipping only removes rounding
        self.x_ = self.region_.clip(metagrad_combine(self.weights_, self.grid_.etas, self.slave_iterates()))


# -- Maler -------------------------------------------------------------------


def convex_surrogate(x, master_x, grad, eta_c: float, G: float, D: float) -> float:
    return -eta_c * float(np.dot(grad, np.subtract(master_x, x))) + (eta_c * G * D) ** 2


def convex_surrogate_grad(x, master_x, grad, eta_c: float) -> np.ndarray:
    return eta_c * np.asarray(grad, dtype=np.float64)


def strong_surrogate(x, master_x, grad, eta: float, G: float) -> float:
    diff = np.subtract(master_x, x)
    return -eta * float(np.dot(grad, diff)) + (eta * G) ** 2 * float(diff @ diff)


def strong_surrogate_grad(x, master_x, grad, eta: float, G: float) -> np.ndarray:
    return eta * np.asarray(grad, dtype=np.float64) + 2.0 * (eta * G) ** 2 * np.subtract(x, master_x)


def expconcave_surrogate(x, master_x, grad, eta: float) -> float:
    r = float(np.dot(grad, np.subtract(master_x, x)))
    return -eta * r + eta * eta * r * r


def expconcave_surrogate_grad(x, master_x, grad, eta: float) -> np.ndarray:
    g = np.asarray(grad, dtype=np.float64)
    r = float(g @ np.subtract(master_x, x))
    return eta * g - 2.0 * eta * eta * r * g


@dataclass
class MalerWeights:
    pi_c: float
    pi_s: np.ndarray
    pi_l: np.ndarray

    def total(self) -> float:
        return self.pi_c + float(np.sum(self.pi_s)) + float(np.sum(self.pi_l))


def maler_combine(weights: MalerWeights, eta_c: float, etas, x_c, xs_s, xs_l) -> np.ndarray:
    etas = np.asarray(etas, dtype=np.float64)
    ws = weights.pi_s * etas
    wl = weights.pi_l * etas
    wc = weights.pi_c * eta_c
    num = wc * np.asarray(x_c, dtype=np.float64) + ws @ np.atleast_2d(xs_s) + wl @ np.atleast_2d(xs_l)
    return num / (wc + np.sum(ws) + np.sum(wl))


def _maler_losses(eta_c, etas, G, D, x_c, xs_s, xs_l, master_x, grad):
    etas = np.asarray(etas, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    Xs = master_x - np.atleast_2d(xs_s)
    Xl = master_x - np.atleast_2d(xs_l)
    rs = Xs @ g
    rl = Xl @ g
    c = convex_surrogate(x_c, master_x, g, eta_c, G, D)
    s = -etas * rs + (etas * G) ** 2 * np.sum(Xs * Xs, axis=1)
    ell = -etas * rl + etas**2 * rl**2
    return c, s, ell


def maler_meta_update(weights: MalerWeights, eta_c, etas, G, D, x_c, xs_s, xs_l, master_x, grad) -> MalerWeights:
    """Multiply each weight by ``exp(-surrogate at its expert)`` and renormalize."""
    c, s, ell = _maler_losses(eta_c, etas, G, D, x_c, xs_s, xs_l, master_x, grad)
    log_w = np.log(np.concatenate([[weights.pi_c], weights.pi_s, weights.pi_l]))
    new = np.exp(_reweight(log_w, np.concatenate([[c], s, ell]), -1.0))
    m = len(weights.pi_s)
    return MalerWeights(float(new[0]), new[1 : m + 1], new[m + 1 :])


class Maler(OnlineLearner):
    """Maler: one convex expert plus strongly-convex and exp-concave experts per eta."""

    def __init__(self):
        pass

    def _initialize(self, x1):
        b = self.bounds_
        self.grid_ = eta_grid(b.T, b.G, b.D)
        self.eta_c_ = 1.0 / (2.0 * b.G * b.D * math.sqrt(b.T))
        m = len(self.grid_.etas)
        x0 = self.region_.clip(np.zeros(self.dim_))
        self.x_c_ = x0.copy()
        self.xs_s_ = np.tile(x0, (m, 1))
        self.xs_l_ = np.tile(x0, (m, 1))
        # beta = 1/2 gives Sigma_1 = 4 / D^2 I
        self.trackers_l_ = [PsdTracker.scaled_identity(self.dim_, 4.0 / b.D**2) for _ in range(m)]
        pc, ps, pl = maler_prior(self.grid_.N)
        self.log_w_ = np.log(np.concatenate([[pc], ps, pl]))
        self.x_ = x1

    @property
    def weights_(self) -> MalerWeights:
        w = np.exp(self.log_w_)
        m = len(self.grid_.etas)
        return MalerWeights(float(w[0]), w[1 : m + 1], w[m + 1 :])

    def _update(self, g, tag):
        b = self.bounds_
        t = self.t_
        x_t = self.x_
        etas = self.grid_.etas
        c, s, ell = _maler_losses(self.eta_c_, etas, b.G, b.D, self.x_c_, self.xs_s_, self.xs_l_, x_t, g)
        self.log_w_ = _reweight(self.log_w_, np.concatenate([[c], s, ell]), -1.0)

        region = self.region_
        # convex expert: gradient step on c_t with stepsize D / (eta_c G sqrt(t))
        step = b.D / (self.eta_c_ * b.G * math.sqrt(t))
        self.x_c_ = region.clip(self.x_c_ - step * convex_surrogate_grad(self.x_c_, x_t, g, self.eta_c_))
        for i, eta in enumerate(etas):
            xs = self.xs_s_[i]
            gs = strong_surrogate_grad(xs, x_t, g, eta, b.G)
            self.xs_s_[i] = region.clip(xs - gs / (2.0 * (eta * b.G) ** 2 * t))

            xl = self.xs_l_[i]
            gl = expconcave_surrogate_grad(xl, x_t, g, eta)
            tracker = self.trackers_l_[i]
            tracker.rank_one_update(gl, 1.0)
            self.xs_l_[i] = generalized_projection(tracker, xl - 2.0 * (tracker.A_inv @ gl), region)
        x = maler_combine(self.weights_, self.eta_c_, etas, self.x_c_, self.xs_s_, self.xs_l_)
        self.x_ = region.clip(x)
