"""Baseline and contamination-aware learners.

* :class:`OGD` - projected online gradient descent (``sqrt``, ``strong`` or
  ``regularized`` stepsizes).
* :class:`ConOGD` - OGD on regularized losses with ``mu_1 = sqrt(k)``.
* :class:`ONS` - online Newton step.
* :class:`ConONS` - ONS that skips the curvature update on contaminated rounds.
* :class:`Hybrid` - three-branch preconditioner driven by the round's class
  (strongly convex / exp-concave / neither).
"""

from __future__ import annotations

import math

import numpy as np

from .core import ClassTag, OnlineLearner, gamma_from
from .linalg import PsdTracker, generalized_projection

__all__ = ["OGD", "ConOGD", "ONS", "ConONS", "Hybrid"]

_RULES = ("sqrt", "strong", "regularized")


class OGD(OnlineLearner):
    """Projected online gradient descent.

    Parameters
    ----------
    rule : {"sqrt", "strong", "regularized"}
        ``sqrt``: ``eta_t = D / (G sqrt(t))``.
        ``strong``: ``eta_t = 1 / (lam t)`` with ``lam`` from the bounds.
        ``regularized``: gradient steps on ``f_t(x) + (mu_t/2)||x||^2`` with
        ``eta_t = 1 / sum_{s<=t}(lambda_s + mu_s)``; ``lambda_s`` is read from
        the round tags (zero on contaminated rounds) and ``mu_1 = mu1``,
        ``mu_t = 0`` afterwards.
    mu1 : float, optional
        First-round regularization weight for the ``regularized`` rule.
        Defaults to ``sqrt(k)``.
    """

    def __init__(self, rule: str = "sqrt", mu1: float | None = None):
        self.rule = rule
        self.mu1 = mu1

    @property
    def requires_tags(self):
        return self.rule == "regularized"

    def _initialize(self, x1):
        if self.rule not in _RULES:
            raise ValueError(f"rule must be one of {_RULES}, got {self.rule!r}")
        b = self.bounds_
        if self.rule == "strong" and b.lam <= 0.0:
            raise ValueError("the strong rule needs lam > 0 in the bounds")
        self.x_ = x1
        self.mu1_ = math.sqrt(b.k) if self.mu1 is None else float(self.mu1)
        self.curvature_sum_ = 0.0
        self.eta_ = None

    def _mu(self, t: int) -> float:
        return self.mu1_ if t == 1 else 0.0

    def stepsize(self, t: int, tag: ClassTag) -> float:
        b = self.bounds_
        if self.rule == "sqrt":
            return b.D / (b.G * math.sqrt(t))
        if self.rule == "strong":
            return 1.0 / (b.lam * t)
        lam_t = 0.0 if tag.contaminated else tag.lambda_t
        self.curvature_sum_ += lam_t + self._mu(t)
        if not self.curvature_sum_ > 0.0:
            raise ValueError("regularized rule requires mu1 > 0 or lambda_1 > 0")
        return 1.0 / self.curvature_sum_

    def _update(self, g, tag):
        t = self.t_
        eta = self.stepsize(t, tag)
        self.eta_ = eta
        if self.rule == "regularized":
            g = g + self._mu(t) * self.x_
        self.x_ = self.region_.clip(self.x_ - eta * g)


class ConOGD(OGD):
    """OGD with the regularized stepsize rule; ``mu1`` defaults to ``sqrt(k)``."""

    def __init__(self, mu1: float | None = None):
        super().__init__(rule="regularized", mu1=mu1)


class ONS(OnlineLearner):
    """Online Newton step.

    ``gamma`` defaults to ``(1/2) min(1/(G D), alpha)`` and ``epsilon`` to
    ``1 / (gamma^2 D^2)``.
    """

    def __init__(self, gamma: float | None = None, epsilon: float | None = None):
        self.gamma = gamma
        self.epsilon = epsilon

    def _initialize(self, x1):
        b = self.bounds_
        self.gamma_ = gamma_from(b) if self.gamma is None else float(self.gamma)
        if not self.gamma_ > 0.0:
            raise ValueError("gamma must be positive")
        eps = 1.0 / (self.gamma_**2 * b.D**2) if self.epsilon is None else float(self.epsilon)
        self.epsilon_ = eps
        self.tracker_ = PsdTracker.scaled_identity(self.dim_, eps)
        self.x_ = x1

    def _update(self, g, tag):
        self.tracker_.rank_one_update(g, 1.0)
        y = self.x_ - (self.tracker_.A_inv @ g) / self.gamma_
        self.x_ = generalized_projection(self.tracker_, y, self.region_)


class ConONS(OnlineLearner):
    """Online Newton step whose curvature update skips contaminated rounds.

    ``A`` starts at ``epsilon I`` with ``epsilon = (G/D) sqrt(k)`` and gains
    ``gamma g g^T`` only on clean rounds; the Newton step is ``x - A^{-1} g``
    (``gamma`` is already folded into ``A``).  With ``k = 0`` the default
    ``epsilon`` becomes ``1/(gamma D^2)``, which makes the iterates coincide
    with :class:`ONS` at its default ``epsilon``.
    """

    requires_tags = True

    def __init__(self, gamma: float | None = None, epsilon: float | None = None):
        self.gamma = gamma
        self.epsilon = epsilon

    def _initialize(self, x1):
        b = self.bounds_
        self.gamma_ = gamma_from(b) if self.gamma is None else float(self.gamma)
        if self.epsilon is not None:
            eps = float(self.epsilon)
        elif b.k > 0:
            eps = (b.G / b.D) * math.sqrt(b.k)
        else:
            eps = 1.0 / (self.gamma_ * b.D**2)
        self.epsilon_ = eps
        self.tracker_ = PsdTracker.scaled_identity(self.dim_, eps)
        self.x_ = x1

    def _update(self, g, tag):
        gamma_t = 0.0 if tag.contaminated else self.gamma_
        self.tracker_.rank_one_update(g, gamma_t)
        y = self.x_ - self.tracker_.A_inv @ g
        self.x_ = generalized_projection(self.tracker_, y, self.region_)


class Hybrid(OnlineLearner):
    """Preconditioned gradient method with a class-dependent update of ``A``.

    Starting from ``A_0 = (sqrt(2) G / D) I`` each round adds

    * ``lam I`` when the round is ``lam``-strongly convex (branch S1),
    * ``gamma g g^T`` when it is ``alpha``-exp-concave but not S1 (branch S2),
    * ``G / (D sqrt(2 u)) I`` otherwise, ``u`` counting such rounds so far.

    Branches come from the round tag: S1 when ``tag.lambda_t >= lam > 0``,
    S2 when ``tag.alpha_t >= alpha > 0``.  ``use_s1=False`` or
    ``use_s2=False`` force the corresponding branch to be empty.
    """

    requires_tags = True

    def __init__(self, use_s1: bool = True, use_s2: bool = True, gamma: float | None = None, lam: float | None = None):
        self.use_s1 = use_s1
        self.use_s2 = use_s2
        self.gamma = gamma
        self.lam = lam

    def _initialize(self, x1):
        b = self.bounds_
        self.lam_ = b.lam if self.lam is None else float(self.lam)
        if self.gamma is not None:
            self.gamma_ = float(self.gamma)
        elif b.alpha > 0.0:
            self.gamma_ = gamma_from(b)
        else:
            self.gamma_ = 0.0
        self.tracker_ = PsdTracker.scaled_identity(self.dim_, math.sqrt(2.0) * b.G / b.D)
        self.u_count_ = 0
        self.branch_counts_ = {"S1": 0, "S2": 0, "U": 0}
        self.x_ = x1

    def branch(self, tag: ClassTag) -> str:
        if self.use_s1 and self.lam_ > 0.0 and tag.lambda_t >= self.lam_:
            return "S1"
        alpha = self.bounds_.alpha
        if self.use_s2 and self.gamma_ > 0.0 and alpha > 0.0 and tag.alpha_t >= alpha:
            return "S2"
        return "U"

    def _update(self, g, tag):
        b = self.bounds_
        branch = self.branch(tag)
        self.branch_counts_[branch] += 1
        if branch == "S1":
            self.tracker_.scaled_identity_update(self.lam_)
        elif branch == "S2":
            self.tracker_.rank_one_update(g, self.gamma_)
        else:
            self.u_count_ += 1
            self.tracker_.scaled_identity_update(b.G / (b.D * math.sqrt(2.0 * self.u_count_)))
        y = self.x_ - self.tracker_.A_inv @ g
        self.x_ = generalized_projection(self.tracker_, y, self.region_)
