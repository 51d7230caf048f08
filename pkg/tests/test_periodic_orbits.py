import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangency_horseshoe.errors import NotRealized
from tangency_horseshoe.map_core import DEFAULT_PARAMS, DOMAIN, Region, region_of, step
from tangency_horseshoe.periodic_orbits import (admissible, affine_fixed_point, canonical,
                                                census, certify_uniform_hyperbolicity,
                                                enumerate_itineraries, find_orbit,
                                                find_orbits, iterate_orbit, parse_word,
                                                transition_table, word_name)

P = DEFAULT_PARAMS
R1, R3, R4, R5 = DOMAIN


def test_transition_table():
    table = transition_table()
    closed = {(R4, R4), (R4, R5), (R5, R1)}
    for a, b in itertools.product(DOMAIN, DOMAIN):
        assert table[a, b] is ((a, b) not in closed)


def test_words_round_trip():
    w = parse_word("R1R3R4")
    assert w == (R1, R3, R4) and word_name(w) == "R1R3R4"
    assert canonical((R4, R1, R3)) == (R1, R3, R4)
    assert not admissible("R1R5")  # R5 -> R1 is closed
    with pytest.raises(ValueError):
        parse_word("R2")


def test_small_enumerations():
    assert enumerate_itineraries(1) == [(R1,), (R3,), (R5,)]
    two = [word_name(w) for w in enumerate_itineraries(2)]
    assert two == ["R1", "R3", "R5", "R1R3", "R1R4", "R3R4", "R3R5"]
    with pytest.raises(ValueError):
        enumerate_itineraries(0)


def _brute_force(k):
    """Canonical primitive admissible words of length <= k, by exhaustion."""
    out = set()
    for n in range(1, k + 1):
        for w in itertools.product(DOMAIN, repeat=n):
            if not admissible(w):
                continue
            if any(w == w[d:] + w[:d] for d in range(1, n)):
                continue
            out.add(canonical(w))
    return out


@pytest.mark.parametrize("k", [3, 5, 7])
def test_enumeration_matches_brute_force(k):
    words = enumerate_itineraries(k)
    assert len(words) == len(set(words))
    assert set(words) == _brute_force(k)
    assert words == sorted(words, key=lambda w: (len(w), [r.code for r in w]))


@pytest.mark.parametrize("name, points, mults", [
    ("R1", [(0.0, 0.0)], (0.25, 4.0)),
    ("R5", [(1.0, 1.0)], (0.25, 4.0)),
    ("R1R3", [(0.48, 0.32 / 3), (0.12, 1.28 / 3)], (0.0625, 16.0)),
])
def test_known_orbits(name, points, mults):
    o = find_orbit(name)
    assert np.abs(o.points - np.array(points)).max() <= 1e-10
    assert np.abs(np.abs(o.multipliers) - np.array(mults)).max() <= 1e-10


def test_origin_has_no_negative_zero():
    x, y = affine_fixed_point("R1")
    assert math.copysign(1.0, x) == 1.0 and math.copysign(1.0, y) == 1.0


def test_affine_newton_matches_closed_form():
    for w in enumerate_itineraries(8):
        if R4 in w:
            continue
        closed = find_orbits(w)
        newton = find_orbits(w, newton=True)
        assert len(closed) == len(newton)
        for a, b in zip(closed, newton):
            assert np.abs(a.points - b.points).max() <= 1e-12


def test_unrealised_words(census8):
    assert census8.unrealized
    for w in census8.unrealized[:10]:
        with pytest.raises(NotRealized):  # NewtonBudget is a NotRealized
            find_orbit(w)


def test_census_invariants(census8):
    orbits = census8.orbits
    assert census8.by_period()[1] == 3
    allpts = []
    for o in orbits:
        k = o.period
        assert o.residual < 1e-10
        for i, r in enumerate(o.word):
            assert region_of(o.points[i]) is r
        # independent re-iteration
        pts = iterate_orbit(o)
        assert np.abs(np.array(pts[-1]) - o.points[0]).max() < 1e-10 * 10 ** (k / 4)
        ms, mu = o.multipliers
        assert abs(mu) > 1 > abs(ms)
        b = sum(r is R4 for r in o.word)
        a = k - b
        det = (P.lam * P.sigma) ** a * (P.alpha * P.lam) ** b
        assert abs(ms * mu) == pytest.approx(det, rel=1e-8)
        allpts.extend((tuple(p), o.name) for p in o.points)
    # no two orbits share a point
    arr = np.array([p for p, _ in allpts])
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    gaps = np.abs(np.diff(arr[order], axis=0)).max(axis=1)
    assert gaps.min() > 1e-8


def test_census_is_deterministic(census8):
    again = census(6)
    first = [o for o in census8.orbits if o.period <= 6]
    assert [o.name for o in again.orbits] == [o.name for o in first]
    for a, b in zip(again.orbits, first):
        assert np.array_equal(a.points, b.points)


def test_certification(census8):
    origin = find_orbit("R1")
    assert certify_uniform_hyperbolicity([origin], 2.0, 0.5).passed
    two = certify_uniform_hyperbolicity([find_orbit("R1R3")], 2.0, 0.5)
    assert two.rows[0].margin_u == pytest.approx(12.0)
    cert = certify_uniform_hyperbolicity(census8.orbits, 2.0, 0.5)
    assert cert.passed and cert.sigma_cert >= 2.0 and cert.lambda_cert <= 0.5
    tight = certify_uniform_hyperbolicity(census8.orbits, cert.sigma_cert * 1.001, 0.5)
    assert not tight.passed
    with pytest.raises(ValueError):
        certify_uniform_hyperbolicity([], 2.0, 0.5)


@given(st.lists(st.sampled_from(DOMAIN), min_size=1, max_size=8))
def test_canonical_is_least_rotation(word):
    w = tuple(word)
    c = canonical(w)
    rots = [w[i:] + w[:i] for i in range(len(w))]
    assert c in rots
    assert [r.code for r in c] == min([r.code for r in x] for x in rots)
