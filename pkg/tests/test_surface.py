import numpy as np
import pytest

from lswe.errors import StationaryPoint
from lswe.surface import PotentialSurface, first_order_coefficients, gauge
from oracles import evaluator, fd_gradient, fd_hessian, random_polynomial


def surf(src, n):
    return PotentialSurface.from_source(src, n)


def test_linear_gauge():
    g = gauge(surf("q1", 1), [3.0])
    assert (g.G, g.trace_H, g.script_H.tolist()) == (1.0, 0.0, [0.0])


def test_bowl_gauge():
    g = gauge(surf("q1^2/2 + q2^2", 2), [1.0, 1.0])
    assert g.G == 5.0
    assert g.trace_H == 3.0
    assert g.script_H.tolist() == [1.0, 4.0]
    assert g.dG.tolist() == [2.0, 8.0]
    assert g.gamma == pytest.approx(0.2, rel=1e-15)


def test_stationary_point_raises():
    with pytest.raises(StationaryPoint) as info:
        gauge(surf("q1^2/2 + q2^2", 2), [0.0, 0.0])
    assert info.value.G == 0.0


def test_threshold_is_configurable():
    s = PotentialSurface.from_source("q1^2", 1, stationary_threshold=1e-2)
    with pytest.raises(StationaryPoint):
        gauge(s, [0.04])  # G = 0.0064
    assert gauge(s, [0.1]).G == pytest.approx(0.04)
    with pytest.raises(ValueError):
        PotentialSurface.from_source("q1", 1, stationary_threshold=0.0)


def test_first_order_coefficients_fixtures():
    up, low = first_order_coefficients(gauge(surf("q1^2/2 + q2^2", 2), [1.0, 1.0]))
    np.testing.assert_allclose(up, [0.2, 0.8, 3.0], rtol=1e-15)
    np.testing.assert_allclose(low, [0.2, 0.8, -0.6], rtol=1e-15)
    up, low = first_order_coefficients(gauge(surf("q1^2", 1), [1.0]))
    assert up.tolist() == [1.0, 2.0]
    up, low = first_order_coefficients(gauge(surf("3*q1 - q2", 2), [0.2, 0.4]))
    assert not up.any() and not low.any()


def test_dG_equals_twice_script_H_exactly():
    g = gauge(surf("exp(q1)*sin(q2) + q1*q2^2", 2), [0.3, 1.1])
    assert np.array_equal(g.dG, 2.0 * g.script_H)


def test_random_surfaces_against_fd():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(10):
        src = random_polynomial(rng, 2)
        s = surf(src, 2)
        f = evaluator(src, 2)
        for x in rng.uniform(-1, 1, (10, 2)):
            try:
                g = gauge(s, x)
            except StationaryPoint:
                continue
            if g.G < 1e-6:
                continue
            grad = fd_gradient(f, x)
            hess = fd_hessian(f, x)
            scale = max(1.0, np.abs(grad).max())
            assert np.abs(g.gradient - grad).max() / scale < 1e-6
            assert g.G == pytest.approx(float(np.sum(g.gradient**2)), rel=1e-14)
            assert np.allclose(g.script_H, g.gradient @ g.hessian, rtol=1e-14, atol=0)
            assert np.abs(g.hessian - hess).max() / max(1.0, np.abs(hess).max()) < 1e-5
            up, low = first_order_coefficients(g)
            assert low[-1] * -g.G == pytest.approx(up[-1], rel=1e-12, abs=1e-300)
            checked += 1
    assert checked > 50
