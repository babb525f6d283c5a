"""Per-round loss functions: value, gradient, Hessian and a class tag.

Every built-in loss also evaluates on a batch of points (``values``), which
the grid-search oracles rely on, and knows how to serialize its parameters
to one line of a round table.
"""

from __future__ import annotations

import numpy as np

from ._validation import as_vector
from .core import ClassTag, CLEAN

__all__ = [
    "LossFunction",
    "LinearLoss",
    "NegLogLoss",
    "HalfSquaredLoss",
    "LeastSquaresLoss",
    "LogisticLoss",
    "CallableLoss",
    "loss_from_params",
]


class LossFunction:
    """Differentiable convex loss for one round."""

    kind = "abstract"

    def __init__(self, tag: ClassTag = CLEAN):
        self.tag = tag

    def value(self, x) -> float:
        return float(self.values(np.asarray(x, dtype=np.float64)[None, :])[0])

    def values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x) -> np.ndarray | None:
        """Analytic Hessian, or ``None`` when only finite differences apply."""
        return None

    def params(self) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return self.value(x)


class LinearLoss(LossFunction):
    """``f(x) = <c, x>``."""

    kind = "linear"

    def __init__(self, c, tag: ClassTag = CLEAN):
        super().__init__(tag)
        self.c = as_vector(c, name="c")

    def values(self, X):
        return X @ self.c

    def grad(self, x):
        return self.c.copy()

    def hessian(self, x):
        return np.zeros((self.c.size, self.c.size))

    def params(self):
        return self.c


class NegLogLoss(LossFunction):
    """``f(x) = -log(<a, x> + offset)``, 1-exp-concave where defined."""

    kind = "neglog"

    def __init__(self, a, offset: float, tag: ClassTag = CLEAN):
        super().__init__(tag)
        self.a = as_vector(a, name="a")
        self.offset = float(offset)

    def values(self, X):
        return -np.log(X @ self.a + self.offset)

    def grad(self, x):
        return -self.a / (float(np.asarray(x) @ self.a) + self.offset)

    def hessian(self, x):
        s = float(np.asarray(x) @ self.a) + self.offset
        return np.outer(self.a, self.a) / (s * s)

    def params(self):
        return np.concatenate([[self.offset], self.a])


class HalfSquaredLoss(LossFunction):
    """``f(x) = (1/2) ||x - center||^2``."""

    kind = "halfsq"

    def __init__(self, center, tag: ClassTag = CLEAN):
        super().__init__(tag)
        self.center = as_vector(center, name="center")

    def values(self, X):
        r = X - self.center
        return 0.5 * np.sum(r * r, axis=1)

    def grad(self, x):
        return np.asarray(x, dtype=np.float64) - self.center

    def hessian(self, x):
        return np.eye(self.center.size)

    def params(self):
        return self.center


class LeastSquaresLoss(LossFunction):
    """Mini-batch squared loss ``f(x) = (1/n) sum_i (<a_i, x> - b_i)^2``."""

    kind = "lsq"

    def __init__(self, A, b, tag: ClassTag = CLEAN):
        super().__init__(tag)
        self.A = np.asarray(A, dtype=np.float64)
        self.b = as_vector(b, dim=self.A.shape[0], name="b")
        self.n = self.A.shape[0]

    def values(self, X):
        r = X @ self.A.T - self.b
        return np.mean(r * r, axis=1)

    def grad(self, x):
        r = self.A @ x - self.b
        return (2.0 / self.n) * (self.A.T @ r)

    def hessian(self, x=None):
        return (2.0 / self.n) * (self.A.T @ self.A)

    def params(self):
        n, d = self.A.shape
        return np.concatenate([[n, d], self.A.ravel(), self.b])


class LogisticLoss(LossFunction):
    """Single-sample logistic loss ``log(1 + exp(-b <a, x>))``."""

    kind = "logistic"

    def __init__(self, a, b: float, tag: ClassTag = CLEAN):
        super().__init__(tag)
        self.a = as_vector(a, name="a")
        self.b = float(b)

    def values(self, X):
        return np.logaddexp(0.0, -self.b * (X @ self.a))

    def grad(self, x):
        z = self.b * float(np.asarray(x) @ self.a)
        return -self.b * self.a / (1.0 + np.exp(z))

    def hessian(self, x):
        z = self.b * float(np.asarray(x) @ self.a)
        w = np.exp(-abs(z)) / (1.0 + np.exp(-abs(z))) ** 2
        return (self.b**2) * w * np.outer(self.a, self.a)

    def params(self):
        return np.concatenate([[self.b], self.a])


class CallableLoss(LossFunction):
    """Wrap plain callables; Hessians fall back to finite differences."""

    kind = "callable"

    def __init__(self, value_fn, grad_fn, tag: ClassTag = CLEAN, hessian_fn=None):
        super().__init__(tag)
        self._value = value_fn
        self._grad = grad_fn
        self._hessian = hessian_fn

    def value(self, x):
        return float(self._value(np.asarray(x, dtype=np.float64)))

    def values(self, X):
        return np.array([self.value(x) for x in X])

    def grad(self, x):
        return np.asarray(self._grad(np.asarray(x, dtype=np.float64)), dtype=np.float64)

    def hessian(self, x):
        if self._hessian is None:
            return None
        return np.asarray(self._hessian(np.asarray(x, dtype=np.float64)), dtype=np.float64)

    def params(self):
        raise TypeError("callable losses cannot be serialized")


def loss_from_params(kind: str, params, tag: ClassTag = CLEAN) -> LossFunction:
    """Inverse of ``LossFunction.params`` for the built-in kinds."""
    p = np.asarray(params, dtype=np.float64)
    if kind == "linear":
        return LinearLoss(p, tag)
    if kind == "neglog":
        return NegLogLoss(p[1:], p[0], tag)
    if kind == "halfsq":
        return HalfSquaredLoss(p, tag)
    if kind == "logistic":
        return LogisticLoss(p[1:], p[0], tag)
    if kind == "lsq":
        n, d = int(p[0]), int(p[1])
        A = p[2 : 2 + n * d].reshape(n, d)
        return LeastSquaresLoss(A, p[2 + n * d :], tag)
    raise ValueError(f"unknown loss kind {kind!r}")
