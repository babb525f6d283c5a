import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocolab.core import ClassTag
from ocolab.losses import (
    CallableLoss,
    HalfSquaredLoss,
    LeastSquaresLoss,
    LinearLoss,
    LogisticLoss,
    NegLogLoss,
    loss_from_params,
)

rng = np.random.default_rng(0)
LOSSES = [
    LinearLoss([2.0, -1.0]),
    NegLogLoss([1.0, 0.5], 0.3),
    HalfSquaredLoss([1.0, 0.2]),
    LeastSquaresLoss(rng.uniform(1, 2, size=(10, 2)), rng.uniform(size=10)),
    LogisticLoss([0.8, -0.3], -1.0),
]


def fd_grad(f, x, h=1e-6):
    return np.array([(f.value(x + h * e) - f.value(x - h * e)) / (2 * h) for e in np.eye(x.size)])


@pytest.mark.parametrize("f", LOSSES, ids=lambda f: f.kind)
def test_gradient_matches_finite_differences(f):
    for x in np.random.default_rng(1).uniform(0, 1, size=(20, 2)):
        np.testing.assert_allclose(f.grad(x), fd_grad(f, x), rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("f", LOSSES, ids=lambda f: f.kind)
def test_hessian_matches_finite_differences(f):
    h = 1e-5
    for x in np.random.default_rng(2).uniform(0, 1, size=(10, 2)):
        H = np.column_stack([(f.grad(x + h * e) - f.grad(x - h * e)) / (2 * h) for e in np.eye(2)])
        np.testing.assert_allclose(f.hessian(x), H, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("f", LOSSES, ids=lambda f: f.kind)
def test_batch_values_match_pointwise(f):
    X = np.random.default_rng(3).uniform(0, 1, size=(7, 2))
    np.testing.assert_allclose(f.values(X), [f.value(x) for x in X], rtol=1e-14)


@pytest.mark.parametrize("f", LOSSES, ids=lambda f: f.kind)
def test_params_round_trip(f):
    tag = ClassTag(0.5, 0.25, True)
    g = loss_from_params(f.kind, f.params(), tag)
    x = np.array([0.3, 0.9])
    assert g.value(x) == f.value(x)
    assert g.tag == tag


@pytest.mark.parametrize("f", LOSSES, ids=lambda f: f.kind)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_midpoint_convexity(f, a, b, c, d):
    x, y = np.array([a, b]), np.array([c, d])
    assert f.value(0.5 * (x + y)) <= 0.5 * (f.value(x) + f.value(y)) + 1e-12


def test_exp1_values():
    assert LinearLoss([100.0]).value([0.5]) == 50.0
    assert NegLogLoss([1.0], 0.01).value([0.99]) == pytest.approx(0.0, abs=1e-15)


def test_exp1_gradient_norm_bounded_by_G():
    f = NegLogLoss([1.0], 0.01)
    xs = np.linspace(0, 1, 1001)
    assert max(abs(f.grad([x])[0]) for x in xs) <= 100.0 * (1 + 1e-12)


def test_callable_loss():
    f = CallableLoss(lambda x: float(x @ x), lambda x: 2 * x)
    assert f.value([1.0, 2.0]) == 5.0
    assert f.hessian([0.0, 0.0]) is None
    with pytest.raises(TypeError):
        f.params()


def test_unknown_kind():
    with pytest.raises(ValueError):
        loss_from_params("cubic", [1.0])
