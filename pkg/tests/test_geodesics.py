import numpy as np
import pytest

from lswe.errors import DivergentPath, NoConvergence, StationaryPoint, TimelikePath
from lswe.geodesics import (
    GeodesicState,
    conserved_quantity,
    connect,
    distance_gradient,
    geodesic_distance,
    hyperplane_geodesic,
    integrate_geodesic,
    steepest_ascent,
    world_function,
    world_function_local,
)
from lswe.surface import PotentialSurface, gauge

BOWL = PotentialSurface.from_source("q1^2/2 + q2^2", 2)
EXP = PotentialSurface.from_source("exp(q1) + sin(q2)", 2)
LINE = PotentialSurface.from_source("q1", 1)
TEST_SURFACES = {
    "bowl": BOWL,
    "exp": EXP,
    "wavy": PotentialSurface.from_source("sin(q1)*cos(q2) + 2*q1", 2),
}
QUARTIC = PotentialSurface.from_source("(q1^2 - 1)^2 + 2*(q2 - q1^2)^2 + 0.3*q1*q2", 2)


def test_steepest_ascent_on_line():
    p = steepest_ascent(LINE, [0.0], 0.0, 2.0)
    assert p.q[-1, 0] == pytest.approx(2.0, abs=1e-12)
    assert p.nu[-1] == pytest.approx(2.0, abs=1e-12)
    assert p.kind == "steepest_ascent"


@pytest.mark.parametrize("name", [*TEST_SURFACES, "quartic"])
def test_steepest_ascent_stays_on_characteristic(name):
    s = TEST_SURFACES.get(name, QUARTIC)
    q0 = np.array([0.6, 0.4])
    # exp blows up along its gradient line near s = exp(-0.6)
    p = steepest_ascent(s, q0, s.value(q0), 0.4)
    assert p.complete
    V = s.fields(p.q, 1).value
    assert np.abs(V - p.nu).max() < 1e-6
    assert abs(p.D) < 1e-10
    assert geodesic_distance(p) == 0.0


def test_steepest_ascent_acceleration_is_script_H():
    p = steepest_ascent(BOWL, [1.0, 1.0], 1.5, 0.5)
    h = p.s[1] - p.s[0]
    qdd = (p.q[2:] - 2 * p.q[1:-1] + p.q[:-2]) / h**2
    f = BOWL.fields(p.q[1:-1], 2)
    sH = np.einsum("pi,pik->pk", f.gradient, f.hessian)
    assert np.abs(qdd - sH).max() < 1e-6 * max(1.0, np.abs(sH).max())


def test_general_integration_reproduces_steepest_ascent():
    init = GeodesicState.make([1.0, 1.0], 1.5, [1.0, 2.0], 5.0)
    a = integrate_geodesic(BOWL, init, 0.5, 1e-3)
    b = steepest_ascent(BOWL, [1.0, 1.0], 1.5, 0.5, 1e-3)
    assert np.abs(a.q - b.q).max() < 1e-6 and np.abs(a.nu - b.nu).max() < 1e-6


def test_hyperplane_is_straight():
    p = hyperplane_geodesic(EXP, [0.2, 0.3], 0.7, [0.6, 0.8], 1.0)
    expect = np.array([0.2, 0.3]) + p.s[:, None] * np.array([0.6, 0.8])
    assert np.abs(p.q - expect).max() < 1e-12
    assert np.all(p.nu == 0.7)
    assert p.D == pytest.approx(1.0)
    assert geodesic_distance(p) == pytest.approx(1.0)


def test_linear_surface_paths_are_straight():
    s = PotentialSurface.from_source("0.6*q1 - 0.8*q2", 2)
    p = integrate_geodesic(s, GeodesicState.make([0, 0], 0, [0.3, 1.0], 0.4), 2.0)
    np.testing.assert_allclose(p.q[-1], [0.6, 2.0], atol=1e-12)
    assert p.nu[-1] == pytest.approx(0.8, abs=1e-12)


def test_conserved_quantity_values():
    g = gauge(BOWL, [1.0, 1.0])
    assert conserved_quantity(g, GeodesicState.make([1, 1], 0, [1, 0], 1)) == pytest.approx(0.8)
    assert conserved_quantity(g, GeodesicState.make([1, 1], 0, [1, 2], 5)) == pytest.approx(0.0, abs=1e-15)
    assert conserved_quantity(g, GeodesicState.make([1, 1], 0, [0.6, 0.8], 0)) == pytest.approx(1.0)


def test_distance_from_constant():
    p = integrate_geodesic(BOWL, GeodesicState.make([1, 1], 0, [1, 0], 1), 2.0)
    assert p.D == pytest.approx(0.8)
    assert geodesic_distance(p) == pytest.approx(2 * np.sqrt(0.8))


def test_timelike_distance_raises():
    p = integrate_geodesic(BOWL, GeodesicState.make([1, 1], 0, [0.1, 0], 3), 0.1)
    with pytest.raises(TimelikePath):
        geodesic_distance(p)
    with pytest.raises(TimelikePath):
        distance_gradient(steepest_ascent(BOWL, [1, 1], 0, 0.1))


@pytest.mark.parametrize("name", list(TEST_SURFACES))
def test_drift_is_fourth_order_and_tiny(name):
    s = TEST_SURFACES[name]
    init = GeodesicState.make([1.0, 1.0], 0.0, [0.3, -0.8], 0.7)
    coarse = [integrate_geodesic(s, init, 2.0, h).max_drift() for h in (0.1, 0.05, 0.025)]
    orders = np.log2(np.array(coarse[:-1]) / np.array(coarse[1:]))
    assert np.all(orders > 3.5)
    assert integrate_geodesic(s, init, 2.0, 1e-3).max_drift() < 1e-10


def test_samples_and_csv():
    p = integrate_geodesic(BOWL, GeodesicState.make([1, 1], 0, [1, 0], 1), 0.01, 1e-3)
    assert np.all(np.diff(p.s) > 0)
    assert len(p.samples) == 11
    lines = p.to_csv().strip().splitlines()
    assert lines[0] == "s,q1,q2,nu,qdot1,qdot2,nudot,D_residual"
    assert len(lines) == 12


def test_stationary_start_and_midpath():
    with pytest.raises(StationaryPoint):
        steepest_ascent(BOWL, [0.0, 0.0], 0.0, 1.0)
    # descending straight through the minimum
    p = hyperplane_geodesic(BOWL, [-1.0, 0.0], 0.0, [1.0, 0.0], 2.0, 1e-2)
    assert not p.complete
    assert isinstance(p.error, StationaryPoint)
    assert p.q[-1, 0] < 0.0


def test_blow_up_returns_partial_path():
    p = steepest_ascent(EXP, [0.6, 0.4], 0.0, 1.0)
    assert isinstance(p.error, DivergentPath)
    assert np.all(np.isfinite(p.q))
    # RK4 overshoots the true singularity slightly before overflowing
    assert np.exp(-0.6) - 0.01 < p.length < np.exp(-0.6) + 0.05


def test_connect_linear():
    s = PotentialSurface.from_source("q1", 1)
    p = connect(s, [0.0, 0.0], [1.0, 0.5])
    assert p.D == pytest.approx(0.75, abs=1e-10)
    np.testing.assert_allclose(p.q[:, 0], p.s, atol=1e-10)


def test_connect_on_hyperplane_is_straight():
    p = connect(EXP, [0.2, 0.3, 0.5], [0.9, -0.1, 0.5])
    assert np.abs(p.nu - 0.5).max() < 1e-8
    chord = np.array([0.2, 0.3]) + p.s[:, None] * np.array([0.7, -0.4])
    assert np.abs(p.q - chord).max() < 1e-7


def test_connect_recovers_steepest_ascent():
    sa = steepest_ascent(BOWL, [1, 1], 1.5, 0.5, 1e-3)
    c = connect(BOWL, [1, 1, 1.5], [*sa.q[-1], sa.nu[-1]])
    assert abs(c.D) < 1e-7
    # s in [0, 1] against s in [0, 0.5]: compare the midpoint
    mid_c = c.q[len(c.s) // 2]
    mid_sa = sa.q[len(sa.s) // 2]
    assert np.abs(mid_c - mid_sa).max() < 1e-6


def test_connect_errors():
    with pytest.raises(ValueError):
        connect(BOWL, [1, 1, 0], [1, 1, 0])
    with pytest.raises(NoConvergence):
        connect(EXP, [0.2, 0.3, 0.0], [0.7, 0.5, 0.3], max_iters=0)


def test_distance_gradient_by_reshooting():
    p0 = np.array([0.2, 0.3, 0.0])
    p1 = np.array([0.7, 0.5, 0.3])
    path = connect(EXP, p0, p1)
    assert path.D > 0
    gq, gn = distance_gradient(path)
    h = 1e-4
    fd = []
    for e in np.eye(3):
        fd.append((geodesic_distance(connect(EXP, p0, p1 + h * e))
                   - geodesic_distance(connect(EXP, p0, p1 - h * e))) / (2 * h))
    np.testing.assert_allclose(fd[:2], gq, atol=1e-4)
    assert fd[2] == pytest.approx(gn, abs=1e-4)


def test_world_function_local_values():
    assert world_function_local(BOWL, [1, 1, 0.3], [1, 1, 0.3]) == 0.0
    assert world_function_local(BOWL, [1, 1, 0.3], [1.1, 1, 0.4]) == pytest.approx(0.008, abs=1e-15)
    s = PotentialSurface.from_source("q1 - 2", 1)
    assert world_function_local(s, [0.5, 0.1], [1.5, 0.6]) == pytest.approx(0.75)


def test_world_function_matches_distance_squared():
    p0 = [0.2, 0.3, 0.0]
    p1 = [0.7, 0.5, 0.3]
    assert world_function(EXP, p0, p1) == pytest.approx(connect(EXP, p0, p1).D, rel=1e-12)
    flat = PotentialSurface.from_source("q1 + q2", 2)
    assert world_function(flat, [0, 0, 0], [1, 0.5, 0.4]) == pytest.approx(1.25 - 0.16 / 2, abs=1e-9)


def _identity_residual(surface, p0, p, h=1e-5):
    n = surface.dimension
    lam = lambda x: world_function_local(surface, p0, x)
    grad = np.array([(lam(p + h * e) - lam(p - h * e)) / (2 * h) for e in np.eye(n + 1)])
    G = gauge(surface, p[:n]).G
    return abs(grad[:n] @ grad[:n] - G * grad[n] ** 2 - 4 * lam(p))


@pytest.mark.parametrize("src, n", [("q1 - 0.5*q2", 2), ("sqrt(q1^2 + q2^2)", 2), ("2*q1", 1)])
def test_first_order_identity_on_constant_G(src, n):
    s = PotentialSurface.from_source(src, n)
    rng = np.random.default_rng(12)
    for _ in range(20):
        p0 = np.r_[rng.uniform(0.5, 1.5, n), rng.uniform(-1, 1)]
        p = p0 + rng.uniform(-0.3, 0.3, n + 1)
        assert _identity_residual(s, p0, p) < 1e-8


def test_local_form_residual_is_third_order_on_bowl():
    p0 = np.array([1.0, 1.0, 0.0])
    direction = np.array([0.6, -0.3, 0.9])
    ds = np.array([0.1, 0.05, 0.025])
    res = [_identity_residual(BOWL, p0, p0 + d * direction) for d in ds]
    slope = np.polyfit(np.log(ds), np.log(res), 1)[0]
    assert slope >= 2.7
