import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangency_horseshoe.errors import Escaped, TangencyOrbit
from tangency_horseshoe.lyapunov import (ExponentEstimate, exponents_forward,
                                         exponents_periodic, gap_check,
                                         nonuniformity_profile, stable_vector,
                                         tangency_approach, thresholds, unstable_vector,
                                         _trajectory)
from tangency_horseshoe.map_core import DEFAULT_PARAMS, Region
from tangency_horseshoe.periodic_orbits import find_orbit

P = DEFAULT_PARAMS
LOG4 = math.log(4.0)


def test_default_thresholds():
    th = thresholds()
    assert th.sigma1 == pytest.approx(2.011685, abs=1e-6)
    assert th.sigma_tilde == 2.0
    assert th.lambda_tilde == 0.5
    assert th.rho_s == pytest.approx(3.4664, abs=1e-3)
    assert th.gap == pytest.approx((-math.log(2), math.log(2)))


@given(st.floats(3.01, 100.0), st.floats(0.01, 0.33))
def test_threshold_invariants(sigma, lam):
    th = thresholds(P.replace(sigma=sigma, lam=lam))
    assert th.sigma1 > 1 and th.sigma_tilde > 1 and 0 < th.lambda_tilde < 1
    lo, hi = th.gap
    assert lo < 0 < hi


def test_sigma_tilde_scan():
    # sqrt(sigma) governs sigma~ while it is below sigma1, i.e. up to about
    # sigma = 3.95; past that sigma1 ~ sigma/2 takes over
    prev = 0.0
    for sigma in np.linspace(3.01, 100, 400):
        th = thresholds(P.replace(sigma=sigma))
        assert th.sigma_tilde >= prev
        prev = th.sigma_tilde
        if math.sqrt(sigma) < th.sigma1:
            assert th.sigma_tilde == math.sqrt(sigma)


def test_symmetric_case():
    # with lam = 1/sigma, lambda~ = 1/sigma~ once sqrt(sigma) is the binding
    # rate on both sides (sigma above about 3.95)
    for sigma in (4.0, 5.0, 10.0, 50.0):
        th = thresholds(P.replace(sigma=sigma, lam=1 / sigma))
        assert th.lambda_tilde == pytest.approx(1 / th.sigma_tilde)
    # below that sigma1 binds for sigma~, but the stable cone |v2| <= |v1|/sqrt 3
    # is not the mirror of the unstable one, so the identity breaks
    th = thresholds(P.replace(sigma=3.2, lam=1 / 3.2))
    assert th.sigma_tilde == th.sigma1 < math.sqrt(3.2)
    assert th.lambda_tilde == pytest.approx(1 / math.sqrt(3.2))


def test_periodic_examples():
    e = exponents_periodic(find_orbit("R1"))
    assert (e.chi_s, e.chi_u) == pytest.approx((math.log(0.25), LOG4))
    e = exponents_periodic(find_orbit("R1R3"))
    assert (e.chi_s, e.chi_u) == pytest.approx((math.log(0.0625) / 2, math.log(16) / 2))
    assert e.method == "periodic-exact"


def test_gap_check_examples():
    th = thresholds()
    mk = lambda s, u: ExponentEstimate("x", 1, u, s, "periodic-exact")
    assert gap_check(mk(-1.3863, 1.3863), th)
    assert not gap_check(mk(0.1, 1.0), th)
    assert gap_check(mk(-1.0, math.log(th.sigma_tilde)), th)


def test_census_outside_gap(census8):
    th = thresholds()
    for o in census8.orbits:
        e = exponents_periodic(o)
        assert e.chi_s < 0 < e.chi_u
        assert gap_check(e, th), o.name


def test_forward_at_origin():
    e = exponents_forward((0.0, 0.0), 200)
    assert e.chi_u == pytest.approx(LOG4, abs=1e-12)
    assert e.chi_s == pytest.approx(math.log(0.25), abs=1e-12)


def test_forward_on_local_stable_manifold():
    e = exponents_forward((0.1, 0.0), 1000)
    assert e.chi_u == pytest.approx(LOG4, abs=1e-9)


def test_forward_matches_periodic(census8):
    orbits = [o for o in census8.orbits if Region.R4 in o.word][::40]
    assert len(orbits) > 10
    for o in orbits:
        n = o.period * math.ceil(1000 / o.period)
        f = exponents_forward(o.points[0], n, orbit=o)
        e = exponents_periodic(o)
        assert abs(f.chi_u - e.chi_u) < 1e-6 and abs(f.chi_s - e.chi_s) < 1e-6


def test_renormalisation_independence(census8):
    o = next(o for o in census8.orbits if o.period == 7 and Region.R4 in o.word)
    a = exponents_forward(o.points[0], 700, orbit=o, renorm=10)
    b = exponents_forward(o.points[0], 700, orbit=o, renorm=50)
    assert abs(a.chi_u - b.chi_u) < 1e-12


def test_unstable_axis_stabilises(census8):
    o = next(o for o in census8.orbits if o.period == 8 and Region.R4 in o.word)
    for depth in (40, 50):
        past, fut, jac = _trajectory(o.points[0], o, depth, 60, P)
        if depth == 40:
            u40, s40 = unstable_vector(past, jac), stable_vector(fut, jac)
        else:
            u50, s50 = unstable_vector(past, jac), stable_vector(fut, jac)
    assert min(np.abs(u40 - u50).max(), np.abs(u40 + u50).max()) < 1e-10
    assert min(np.abs(s40 - s50).max(), np.abs(s40 + s50).max()) < 1e-10


def test_forward_witness_times():
    # a W-visit followed by the exit from R1
    o = find_orbit("R1R1R3R4")
    for p in o.points:
        e = exponents_forward(p, 400, orbit=o)
        if e.witness:
            assert list(e.witness) == sorted(e.witness)
            assert e.c_z > 0
            assert e.chi_u >= math.log(2) - math.log(1 / e.c_z) / e.n - 1e-12


def test_forward_errors():
    with pytest.raises(TangencyOrbit):
        exponents_forward((P.q, 0.0), 10)
    with pytest.raises(Escaped):
        exponents_forward((0.5, 0.2), 10)


def test_profile_at_origin():
    (r,) = nonuniformity_profile([(0.0, 0.0)], 100)
    assert r.C_x >= 1 and r.horizon == 100


def test_profile_decreases_toward_tangency():
    pts = tangency_approach()
    assert [p[0] - P.q for p in pts] == pytest.approx([10.0 ** -j for j in range(1, 7)])
    prof = nonuniformity_profile(pts, 10_000, sources=[Region.R4] * len(pts))
    values = [r.C_x for r in prof]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert min(values) < 0.01 and min(values) > 0


def test_profile_rejects_tangency_orbit():
    with pytest.raises(TangencyOrbit):
        nonuniformity_profile([(P.q, 0.0)], 10)
