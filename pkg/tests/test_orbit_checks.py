import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangency_horseshoe.cone_field import SQRT3, Cone, cone_at, standard_growth
from tangency_horseshoe.errors import (BudgetExceeded, ConeViolation, Escaped, InWTilde,
                                       OnStableManifold)
from tangency_horseshoe.map_core import DEFAULT_PARAMS, Region
from tangency_horseshoe.orbit_checks import (escape_bound, escape_time, excursion_growth,
                                             first_return, in_W, in_W_tilde,
                                             sample_returns, sample_w_points,
                                             step_growth_outside)

P = DEFAULT_PARAMS


@pytest.mark.parametrize("p, inside", [((0.72, 0.004), True), ((0.72, 0.07), False),
                                       ((0.72, 0.0), True), ((0.8, 0.0), False)])
def test_in_W(p, inside):
    assert in_W(p) is inside


@pytest.mark.parametrize("p, inside", [((0.18, 0.0), True), ((0.5, 0.5), False),
                                       ((0.72, 0.004), True), ((0.045, 0.01), True),
                                       ((0.3, 0.0), False)])
def test_in_W_tilde(p, inside):
    assert in_W_tilde(p) is inside


@given(st.floats(0.6, 0.85), st.floats(0.0, 0.07), st.integers(0, 60))
def test_W_inside_W_tilde(x, y, j):
    if in_W((x, y)):
        assert in_W_tilde((x, y), j_max=j)


def test_escape_examples():
    assert escape_time((P.q, 0.01)) == 3
    assert escape_bound(0.01) == pytest.approx(2.53, abs=5e-3)
    # eta = 1/12 lies outside W (radius 1/16); only the bound is meaningful there
    assert escape_bound(1 / 12) == pytest.approx(1.0)


def test_escape_errors():
    with pytest.raises(OnStableManifold):
        escape_time((P.q, 0.0))
    with pytest.raises(ValueError):
        escape_time((0.2, 0.2))


def test_first_return_records(rng):
    p = sample_returns(rng, 1)[0].start
    rec = first_return(p)
    assert rec.regions[-1] is Region.R4 and rec.n == len(rec.path)
    assert rec.return_ok and rec.eta_ok and rec.cone_bound_ok


def test_first_return_failures():
    with pytest.raises(Escaped):
        first_return((0.5, 0.3))
    with pytest.raises(BudgetExceeded):
        first_return((0.0, 0.0), max_iter=50)  # the saddle never returns


def test_sampled_returns_satisfy_bounds(rng):
    recs = sample_returns(rng, 2000)
    assert len(recs) == 2000
    for r in recs:
        assert r.return_ok, r
        assert r.eta_ok, r
        assert r.cone_bound_ok, r
        # with lam * sigma = 1 the two readings of the xi exponent coincide
        assert r.xi_bound_used == pytest.approx(r.xi_bound_printed)


def test_excursion_vertical_vector():
    rec = excursion_growth((0.75, 0.0144), (0.0, 1.0))
    assert rec.growth == pytest.approx(P.sigma ** rec.escape_n)
    assert rec.passed


def test_excursion_boundary_vector():
    p = (0.72, 0.004)
    cone = Cone.symmetric(3 / (2 * math.sqrt(P.c * 0.004)))
    rec = excursion_growth(p, (cone.u_hi, 1.0), cone=cone)
    assert rec.passed and rec.half_rate_ratio >= 1


def test_excursion_rejects_outside_vector():
    p = (P.q + 0.03, P.c * 0.03 ** 2)
    with pytest.raises(ConeViolation):
        excursion_growth(p, (10.0, 1.0))


def test_excursion_fails_for_small_c():
    q = P.replace(c=1.0)  # unvalidated on purpose
    worst = math.inf
    for eta in np.logspace(-4, -1, 30):
        p = (q.q + math.sqrt(eta / q.c), eta)
        cone = cone_at(p, q, history=(Region.R4,))
        rec = excursion_growth(p, (cone.u_hi, 1.0), q, cone=cone)
        worst = min(worst, rec.half_rate_ratio)
    assert worst < 1.0


def test_w_samples_satisfy_escape_bounds(rng):
    pts = sample_w_points(rng, 1000)
    for p in pts:
        assert in_W(p) and p.y > 0
        cone = cone_at(p, history=(Region.R4,))
        for v in cone.directions(10):
            rec = excursion_growth(p, v, cone=cone)
            assert rec.passed, rec


def test_growth_examples():
    r1 = step_growth_outside((0.5, 0.2), (0.0, 1.0))
    assert r1.ratio == pytest.approx(4.0) and r1.passed
    r3 = step_growth_outside((0.9, 0.5), (SQRT3, 1.0), cone=Cone.standard())
    assert r3.ratio == pytest.approx(standard_growth(), rel=1e-15) and r3.passed


def test_growth_refuses_W_tilde():
    with pytest.raises(InWTilde):
        step_growth_outside((0.72, 0.004), (0.0, 1.0))
