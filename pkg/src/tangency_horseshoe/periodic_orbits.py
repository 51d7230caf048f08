"""Symbolic itineraries and the periodic orbits that realise them.

Itineraries are primitive cyclic words over R1 < R3 < R4 < R5, stored in their
lexicographically least rotation (a Lyndon word).  Words without the fold
symbol are solved in closed form; the others by damped Newton from a grid of
seeds, followed by a multiple-shooting polish.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import NewtonBudget, NotRealized
from .kernels import core
from .map_core import (DEFAULT_PARAMS, DOMAIN, MapParams, Region,
                       branch_jacobian, branch_step)

SEEDS_PER_AXIS = 16
RESIDUAL_TOL = 1e-10
MARGIN = 1e-9

Word = tuple  # of Region


def _word(it) -> Word:
    if isinstance(it, str):
        return parse_word(it)
    out = []
    for s in it:
        r = s if isinstance(s, Region) else Region(s) if isinstance(s, str) else DOMAIN[int(s)]
        if r not in DOMAIN:
            raise ValueError(f"{r.value} is not a symbol")
        out.append(r)
    return tuple(out)


def word_name(word) -> str:
    return "".join(r.value for r in _word(word))


def parse_word(text: str) -> Word:
    """Inverse of :func:`word_name`, e.g. ``"R1R3"``."""
    parts = text.replace(" ", "").split("R")
    if parts[0] != "" or not all(parts[1:]):
        raise ValueError(f"not a word: {text!r}")
    return _word(["R" + p for p in parts[1:]])


def image_y_range(region: Region, params: MapParams = DEFAULT_PARAMS) -> tuple[float, float]:
    lo, hi = params.strip(region)
    if region in (Region.R1, Region.R3):
        return 0.0, params.sigma * (hi - lo)
    if region is Region.R5:
        return (0.0, params.sigma * (1.0 - lo)) if params.reversing else \
            (params.sigma * lo - (params.sigma - 1.0), 1.0)
    half = 0.5 * (params.y4b - params.y4a)
    return -params.lam, params.c * params.alpha ** 2 * half * half


def transition_table(params: MapParams = DEFAULT_PARAMS) -> dict[tuple[Region, Region], bool]:
    """``(A, B) -> True`` iff the y-range of Phi(A) meets strip B in an interval
    of positive length."""
    table = {}
    for a in DOMAIN:
        ilo, ihi = image_y_range(a, params)
        for b in DOMAIN:
            lo, hi = params.strip(b)
            table[a, b] = min(ihi, hi) - max(ilo, lo) > 0.0
    return table


def admissible(word, params: MapParams = DEFAULT_PARAMS) -> bool:
    w = _word(word)
    table = transition_table(params)
    return len(w) > 0 and all(table[w[i], w[(i + 1) % len(w)]] for i in range(len(w)))


def canonical(word) -> Word:
    """Least rotation of ``word``."""
    w = _word(word)
    codes = [r.code for r in w]
    best = min(range(len(w)), key=lambda i: codes[i:] + codes[:i])
    return w[best:] + w[:best]


def _lyndon_codes(max_period: int, ok: list[list[bool]]) -> Iterator[tuple[int, ...]]:
    # Fredricksen-Kessler-Maiorana, pruned on inadmissible adjacent pairs; at
    # node (t, p) the prefix a[1..t-1] is a Lyndon word iff p == t - 1
    a = [0] * (max_period + 1)
    k = len(ok)

    def gen(t, p):
        if p == t - 1 and ok[a[t - 1]][a[1]]:
            yield tuple(a[1:t])
        if t > max_period:
            return
        for j in range(a[t - p], k):
            if t > 1 and not ok[a[t - 1]][j]:
                continue
            a[t] = j
            yield from gen(t + 1, p if j == a[t - p] else t)

    for j in range(k):
        a[1] = j
        yield from gen(2, 1)


def enumerate_itineraries(max_period: int, params: MapParams = DEFAULT_PARAMS) -> list[Word]:
    """Admissible primitive cyclic words of length 1..max_period, one per
    rotation class, sorted by (length, word)."""
    if max_period < 1:
        raise ValueError("max_period must be at least 1")
    table = transition_table(params)
    ok = [[table[a, b] for b in DOMAIN] for a in DOMAIN]
    words = sorted(_lyndon_codes(max_period, ok), key=lambda w: (len(w), w))
    return [tuple(DOMAIN[c] for c in w) for w in words]


# --------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    word: Word
    points: np.ndarray = field(repr=False)
    residual: float
    params: MapParams = field(default=DEFAULT_PARAMS, repr=False)

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def name(self) -> str:
        return word_name(self.word)

    def jacobian_product(self) -> np.ndarray:
        """``DPhi^k`` at ``points[0]``."""
        M = np.eye(2)
        for pt, r in zip(self.points, self.word):
            M = branch_jacobian(r, pt[0], pt[1], self.params) @ M
        return M

    @property
    def multipliers(self) -> tuple[float, float]:
        """``(mu_s, mu_u)`` ordered by modulus.

        The large root comes from the stable form of the quadratic formula and
        the small one from the determinant, taken as the product of the
        one-step determinants, so ``mu_s`` keeps its relative accuracy even
        when ``|mu_u/mu_s|`` is huge.
        """
        M = np.eye(2)
        det = 1.0
        for pt, r in zip(self.points, self.word):
            J = branch_jacobian(r, pt[0], pt[1], self.params)
            det *= J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            M = J @ M
        tr = M[0, 0] + M[1, 1]
        disc = tr * tr - 4.0 * det
        if disc < 0.0:  # complex pair: not hyperbolic
            ev = sorted(np.linalg.eigvals(M), key=abs)
            return complex(ev[0]), complex(ev[1])
        mu = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
        return float(det / mu), float(mu)

    @property
    def exponents(self) -> tuple[float, float]:
        """``(log|mu_s|/k, log|mu_u|/k)``."""
        ms, mu = self.multipliers
        return math.log(abs(ms)) / self.period, math.log(abs(mu)) / self.period

    def rates(self) -> tuple[float, float]:
        """``(|mu_s|**(1/k), |mu_u|**(1/k))``."""
        ms, mu = self.multipliers
        return abs(ms) ** (1.0 / self.period), abs(mu) ** (1.0 / self.period)


def _affine_coeffs(r: Region, params: MapParams):
    """x -> ax*x + bx, y -> ay*y + by for a linear branch."""
    lam, sig = params.lam, params.sigma
    if r is Region.R1:
        return lam, 0.0, sig, 0.0
    if r is Region.R3:
        return lam, params.d3, sig, -sig * params.y3
    if params.reversing:
        return -lam, 1.0, -sig, sig
    return lam, 1.0 - lam, sig, -(sig - 1.0)


def affine_fixed_point(word, params: MapParams = DEFAULT_PARAMS) -> tuple[float, float]:
    """Closed-form fixed point of the composed affine branches of ``word``."""
    ax, bx, ay, by = 1.0, 0.0, 1.0, 0.0
    for r in _word(word):
        a1, b1, a2, b2 = _affine_coeffs(r, params)
        ax, bx = a1 * ax, a1 * bx + b1
        ay, by = a2 * ay, a2 * by + b2
    # + 0.0 turns -0.0 into 0.0
    return bx / (1.0 - ax) + 0.0, by / (1.0 - ay) + 0.0


def _in_strip(params, r, x, y, margin):
    lo, hi = params.strip(r)
    lo = lo - 1e-12 if lo <= 0.0 else lo + margin
    hi = hi + 1e-12 if hi >= 1.0 else hi - margin
    return -1e-12 <= x <= 1.0 + 1e-12 and lo <= y <= hi


def _residual(points, word, params):
    k = len(word)
    res = 0.0
    for i in range(k):
        nx, ny = branch_step(word[i], points[i][0], points[i][1], params)
        j = (i + 1) % k
        res = max(res, abs(nx - points[j][0]), abs(ny - points[j][1]))
    return res


def seed_grid(region: Region, params: MapParams = DEFAULT_PARAMS,
              per_axis: int = SEEDS_PER_AXIS) -> np.ndarray:
    """Cell-centred ``per_axis**2`` grid over the strip of ``region``."""
    lo, hi = params.strip(region)
    g = (np.arange(per_axis) + 0.5) / per_axis
    xs, ys = np.meshgrid(g, lo + (hi - lo) * g, indexing="ij")
    return np.column_stack([xs.ravel(), ys.ravel()])


def find_orbits(word, params: MapParams = DEFAULT_PARAMS,
                per_axis: int = SEEDS_PER_AXIS, newton: bool = False) -> list[PeriodicOrbit]:
    """Every distinct realisation of ``word`` (possibly none).

    Words without a fold symbol are solved in closed form unless ``newton``
    is set.
    """
    w = _word(word)
    if Region.R4 not in w and not newton:
        k = len(w)
        pts = np.array([affine_fixed_point(w[i:] + w[:i], params) for i in range(k)])
        if all(_in_strip(params, w[i], pts[i, 0], pts[i, 1], MARGIN) for i in range(k)):
            return [PeriodicOrbit(w, pts, _residual(pts, w, params), params)]
        return []
    return _newton_orbits(w, params, per_axis)[0]


def _newton_orbits(w, params, per_axis):
    codes = np.array([r.code for r in w], dtype=np.intc)
    sols, res, n_conv = core.solve_word(codes, params.vector(), seed_grid(w[0], params, per_axis),
                                        200, 30, MARGIN, RESIDUAL_TOL)
    return [PeriodicOrbit(w, np.asarray(s), float(r), params) for s, r in zip(sols, res)], n_conv


def find_orbit(word, params: MapParams = DEFAULT_PARAMS,
               per_axis: int = SEEDS_PER_AXIS) -> PeriodicOrbit:
    """The first realisation of ``word`` in seed order.

    Raises :class:`NewtonBudget` when no seed converges and
    :class:`NotRealized` when no converged solution stays in its regions.
    """
    w = _word(word)
    if Region.R4 in w:
        orbits, n_conv = _newton_orbits(w, params, per_axis)
        if not orbits:
            if n_conv == 0:
                raise NewtonBudget(f"no seed converged for {word_name(w)}")
            raise NotRealized(f"{word_name(w)} has no in-region solution")
        return orbits[0]
    orbits = find_orbits(w, params, per_axis)
    if not orbits:
        raise NotRealized(f"{word_name(w)} leaves its regions")
    return orbits[0]


@dataclass
class Census:
    max_period: int
    orbits: list[PeriodicOrbit]
    words: int
    unrealized: list[Word]
    elapsed: float
    params: MapParams = field(default=DEFAULT_PARAMS, repr=False)

    def by_period(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for o in self.orbits:
            out[o.period] = out.get(o.period, 0) + 1
        return out


def _orbit_key(o: PeriodicOrbit):
    return (o.period, tuple(r.code for r in o.word), float(o.points[0, 0]), float(o.points[0, 1]))


def census(max_period: int, params: MapParams = DEFAULT_PARAMS,
           per_axis: int = SEEDS_PER_AXIS,
           progress: Callable[[int, int], None] | None = None,
           deadline: float | None = None) -> Census:
    """All realised periodic orbits with period <= ``max_period``.

    ``deadline`` is an absolute :func:`time.monotonic` value; past it
    ``TimeoutError`` is raised.
    """
    t0 = time.perf_counter()
    words = enumerate_itineraries(max_period, params)
    orbits, unrealized = [], []
    for i, w in enumerate(words):
        found = find_orbits(w, params, per_axis)
        if found:
            orbits.extend(found)
        else:
            unrealized.append(w)
        if progress is not None and i % 1000 == 0:
            progress(i, len(words))
        if deadline is not None and i % 256 == 0 and time.monotonic() > deadline:
            raise TimeoutError(f"census stopped after {i} of {len(words)} words")
    orbits.sort(key=_orbit_key)
    return Census(max_period, orbits, len(words), unrealized,
                  time.perf_counter() - t0, params)


# --------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class CertRow:
    name: str
    period: int
    mu_s: float
    mu_u: float
    margin_u: float  # |mu_u| - sigma_star**k
    margin_s: float  # lambda_star**k - |mu_s|

    @property
    def passed(self) -> bool:
        return self.margin_u >= 0.0 and self.margin_s >= 0.0


@dataclass(frozen=True)
class Certification:
    sigma_star: float
    lambda_star: float
    rows: tuple
    sigma_cert: float  # min |mu_u|**(1/k)
    lambda_cert: float  # max |mu_s|**(1/k)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list[CertRow]:
        return [r for r in self.rows if not r.passed]


def certify_uniform_hyperbolicity(orbits: Sequence[PeriodicOrbit], sigma_star: float,
                                  lambda_star: float) -> Certification:
    """Check ``|mu_u| >= sigma_star**k`` and ``|mu_s| <= lambda_star**k`` orbit by
    orbit, and report the best constants the whole set supports."""
    if not orbits:
        raise ValueError("no orbits to certify")
    if not sigma_star > 1.0 > lambda_star > 0.0:
        raise ValueError("need sigma_star > 1 > lambda_star > 0")
    rows = []
    s_cert, l_cert = math.inf, 0.0
    for o in orbits:
        ms, mu = (abs(m) for m in o.multipliers)
        k = o.period
        rows.append(CertRow(o.name, k, ms, mu, mu - sigma_star ** k, lambda_star ** k - ms))
        s_cert = min(s_cert, mu ** (1.0 / k))
        l_cert = max(l_cert, ms ** (1.0 / k))
    return Certification(sigma_star, lambda_star, tuple(rows), s_cert, l_cert)


def iterate_orbit(orbit: PeriodicOrbit) -> Iterable[np.ndarray]:
    """Points obtained by applying the word's branches to ``points[0]``."""
    p = orbit.points[0]
    out = [p]
    for r in orbit.word:
        p = np.array(branch_step(r, p[0], p[1], orbit.params))
        out.append(p)
    return out
