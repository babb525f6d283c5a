"""Explicit non-asymptotic regret bound expressions, evaluated numerically."""

from __future__ import annotations

import math

__all__ = ["con_ons_bound", "con_ogd_bound", "hybrid_bound", "ons_lower_bound"]


def con_ons_bound(T: int, k: int, G: float, D: float, gamma: float, d: int = 1) -> float:
    """``(1/2)(d/gamma) log(1 + gamma G D T / sqrt(k)) + G D sqrt(k)``."""
    if k < 1:
        raise ValueError("the bound needs k >= 1")
    return 0.5 * (d / gamma) * math.log(1.0 + gamma * G * D * T / math.sqrt(k)) + G * D * math.sqrt(k)


def con_ogd_bound(T: int, k: int, G: float, D: float, lam: float) -> float:
    """``(3/2 D^2 + G^2) sqrt(k) + (G^2/lam) log(lam (T - k)/sqrt(k) + 1)``."""
    if k < 1:
        raise ValueError("the bound needs k >= 1")
    rk = math.sqrt(k)
    return (1.5 * D * D + G * G) * rk + (G * G / lam) * math.log(lam * (T - k) / rk + 1.0)


def hybrid_bound(n_s1: int, n_s2: int, k: int, G: float, D: float, lam: float, gamma: float, d: int = 1) -> float:
    """Bound for the three-branch method with ``|S1| = n_s1``, ``|S2| = n_s2``, ``|U| = k``."""
    s1 = lam * D * n_s1 / (math.sqrt(2.0) * G)
    term1 = (G * G / lam) * math.log(1.0 + s1) if lam > 0.0 else 0.0
    term2 = (d / gamma) * math.log(1.0 + s1 + gamma * G * D * n_s2 / math.sqrt(2.0) + math.sqrt(k)) if gamma > 0.0 else 0.0
    return 0.5 * (term1 + term2 + 2.0 * math.sqrt(2.0) * G * D * math.sqrt(k + 1))


def ons_lower_bound(T: int, gamma: float, G: float, D: float, epsilon: float | None = None) -> float:
    """Lower-bound expression for ONS against the adaptive linear adversary.

    ``c/(2(1+c)^2) T - (1/gamma) log(1 + G^2 T/epsilon) - 2/(gamma G) - G^2 D / 2``
    with ``c = gamma G^2 D / 2``; ``epsilon`` defaults to ``1/(gamma D)^2``.
    """
    if epsilon is None:
        epsilon = 1.0 / (gamma * gamma * D * D)
    c = gamma * G * G * D / 2.0
    return c / (2.0 * (1.0 + c) ** 2) * T - math.log(1.0 + G * G * T / epsilon) / gamma - 2.0 / (gamma * G) - G * G * D / 2.0
