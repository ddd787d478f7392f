import numpy as np
import pytest

from lswe.errors import StationaryPoint
from lswe.huygens import condition_one, condition_two, huygens_report
from lswe.surface import PotentialSurface, gauge
from oracles import generic_condition_two, random_polynomial

BOWL = PotentialSurface.from_source("q1^2/2 + q2^2", 2)


def test_condition_one_bowl_fixture():
    c = condition_one(BOWL, [1.0, 1.0])
    assert c.terms.trace_term == pytest.approx(0.45, abs=1e-15)
    assert c.terms.divergence_term == pytest.approx(-0.75, abs=1e-15)
    assert c.terms.script_H_term == pytest.approx(1.36, abs=1e-15)
    assert c.residual == pytest.approx(1.06, abs=1e-12)
    assert c.assembled == pytest.approx(1.06, abs=1e-12)
    assert not c.satisfied


def test_condition_one_single_coordinate():
    # q1^2 at 1: G=4, TrH=2, H=4, dH/dq=4, so 4/16 - 4/8 + 16*5/64
    c = condition_one(PotentialSurface.from_source("q1^2", 1), [1.0])
    assert c.terms.trace_term == pytest.approx(0.25)
    assert c.terms.divergence_term == pytest.approx(-0.5)
    assert c.terms.script_H_term == pytest.approx(1.25)
    assert c.residual == pytest.approx(1.0, abs=1e-14)
    assert c.assembled == pytest.approx(1.0, abs=1e-14)


def test_affine_conditions_vanish():
    s = PotentialSurface.from_source("0.7*q1 + q2 - 4", 2)
    c = condition_one(s, [0.3, -2.0])
    assert abs(c.residual) < 1e-12 and abs(c.assembled) < 1e-12
    t = condition_two(s, [0.3, -2.0])
    assert abs(t.nu) < 1e-12 and not t.spatial.any()
    assert c.satisfied and t.satisfied


def test_condition_two_bowl_fixture():
    t = condition_two(BOWL, [1.0, 1.0])
    assert t.nu == pytest.approx(-0.624, abs=1e-6)
    assert np.all(np.abs(t.spatial) < 1e-10)


def test_condition_two_step_refinement():
    s = PotentialSurface.from_source("exp(q1) + sin(q2)", 2)
    a = condition_two(s, [0.3, 0.5], step=1e-4).nu
    b = condition_two(s, [0.3, 0.5], step=5e-5).nu
    assert a == pytest.approx(b, abs=1e-6)


@pytest.mark.parametrize("src, q", [
    ("q1^2/2 + q2^2", [1.0, 1.0]),
    ("exp(q1) + sin(q2)", [0.3, 0.5]),
    ("(q1^2 - 1)^2 + 2*(q2 - q1^2)^2 + 0.3*q1*q2", [0.8, -0.4]),
    ("q1^3 + q1*q2^2 - q3^2*q1 + q3", [0.6, 0.4, -0.5]),
])
def test_condition_two_against_generic_divergence(src, q):
    s = PotentialSurface.from_source(src, len(q))
    gen = generic_condition_two(s, q)
    t = condition_two(s, q)
    scale = max(1.0, abs(t.nu))
    assert np.abs(gen[:-1]).max() < 1e-6 * scale  # spatial cancellation
    assert gen[-1] == pytest.approx(t.nu, abs=1e-5 * scale)


def test_closed_form_equals_assembled_on_random_cases():
    rng = np.random.default_rng(7)
    done = 0
    while done < 50:
        n = int(rng.integers(1, 4))
        s = PotentialSurface.from_source(random_polynomial(rng, n), n)
        q = rng.uniform(-1, 1, n)
        try:
            c = condition_one(s, q)
        except StationaryPoint:
            continue
        if gauge(s, q).G < 1e-3:
            continue
        assert c.residual == pytest.approx(c.assembled, rel=1e-9, abs=1e-12)
        done += 1


def test_condition_one_generically_nonzero():
    rng = np.random.default_rng(8)
    total = nonzero = 0
    for _ in range(20):
        s = PotentialSurface.from_source(random_polynomial(rng, 2, degree=4), 2)
        for q in rng.uniform(-1, 1, (20, 2)):
            try:
                c = condition_one(s, q)
            except StationaryPoint:
                continue
            total += 1
            nonzero += abs(c.residual) > 1e-8
    assert total > 300
    assert nonzero / total >= 0.95


def test_report_bundles_both_conditions():
    r = huygens_report(BOWL, [1.0, 1.0])
    assert r.condition1_residual == pytest.approx(1.06)
    assert r.condition2_residual_nu == pytest.approx(-0.624, abs=1e-6)
    assert r.verdict == (False, False)


def test_stationary():
    with pytest.raises(StationaryPoint):
        condition_one(BOWL, [0.0, 0.0])
    with pytest.raises(StationaryPoint):
        condition_two(BOWL, [0.0, 0.0])
