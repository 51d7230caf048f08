"""Unstable cone field: L/R/V classification, slope-interval cones and their
transport by the derivative.

A cone is stored as a closed interval of slopes ``u = v1/v2``.  Every cone in
the field excludes the horizontal direction, so this chart covers them all and
inclusion reduces to comparing interval endpoints.

Points of the fold image are classified by the angle ``a`` between the leaf
through them and the horizontal.  On the parabola through ``(xi, eta)`` the leaf
slope is ``2c|xi - q|``, and ``c(xi - q)**2 = eta + lam*xi_prev`` where
``xi_prev`` is the x-coordinate of the preimage.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (HorizontalCapture, NoPreimage, NoReturn, TangencyOrbit,
                     TangencyPoint)
from .map_core import (DEFAULT_PARAMS, MapParams, Region, branch_jacobian,
                       branch_step, near_tangency_orbit, region_of,
                       source_region, step_back)

SQRT3 = math.sqrt(3.0)
WIDEN = 1.01
HORIZON = 1000
NOVO_THRESHOLD = 9.0 / 4.0


@dataclass(frozen=True)
class Cone:
    """Directions ``(v1, v2)`` with ``v2 != 0`` and ``u_lo <= v1/v2 <= u_hi``."""

    u_lo: float
    u_hi: float

    def __post_init__(self):
        if not (math.isfinite(self.u_lo) and math.isfinite(self.u_hi)):
            raise ValueError("cone bounds must be finite")
        if self.u_lo > self.u_hi:
            raise ValueError(f"empty cone [{self.u_lo}, {self.u_hi}]")

    @classmethod
    def standard(cls) -> "Cone":
        return cls(-SQRT3, SQRT3)

    @classmethod
    def symmetric(cls, halfwidth: float) -> "Cone":
        return cls(-halfwidth, halfwidth)

    @property
    def center(self) -> float:
        return 0.5 * (self.u_lo + self.u_hi)

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.u_hi - self.u_lo)

    def contains_slope(self, u: float, tol: float = 0.0) -> bool:
        return self.u_lo - tol <= u <= self.u_hi + tol

    def contains(self, v, tol: float = 0.0) -> bool:
        v1, v2 = v
        if v2 == 0.0:
            return False
        return self.contains_slope(v1 / v2, tol)

    def widen(self, factor: float = WIDEN) -> "Cone":
        """Scale the half-width about the centre."""
        c, h = self.center, self.halfwidth * factor
        return Cone(c - h, c + h)

    def intersect(self, other: "Cone") -> "Cone":
        lo, hi = max(self.u_lo, other.u_lo), min(self.u_hi, other.u_hi)
        if lo > hi:
            raise ValueError("cones are disjoint")
        return Cone(lo, hi)

    def margin_in(self, other: "Cone") -> float:
        """How far ``self`` sits inside ``other``; positive iff strictly inside."""
        return min(other.u_hi - self.u_hi, self.u_lo - other.u_lo)

    def axis(self) -> np.ndarray:
        """Unit vector along the central direction (upward)."""
        v = np.array([self.center, 1.0])
        return v / np.hypot(*v)

    def edge_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.u_lo, 1.0]), np.array([self.u_hi, 1.0])

    def directions(self, count: int) -> list[np.ndarray]:
        """``count`` vectors with evenly spaced slopes, edges included."""
        if count == 1:
            return [np.array([self.center, 1.0])]
        return [np.array([u, 1.0]) for u in np.linspace(self.u_lo, self.u_hi, count)]


def _mobius(J, u):
    return (J[0][0] * u + J[0][1]) / (J[1][0] * u + J[1][1])


def transport(cone: Cone, J) -> Cone:
    """Exact image of ``cone`` under the linear map ``J``."""
    J = np.asarray(J, dtype=float).tolist()
    d_lo = J[1][0] * cone.u_lo + J[1][1]
    d_hi = J[1][0] * cone.u_hi + J[1][1]
    if d_lo == 0.0 or d_hi == 0.0 or (d_lo > 0) != (d_hi > 0):
        raise HorizontalCapture(f"J sends a direction of {cone} to the horizontal")
    a, b = _mobius(J, cone.u_lo), _mobius(J, cone.u_hi)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise HorizontalCapture(f"J sends {cone} too close to the horizontal")
    return Cone(min(a, b), max(a, b))


def pullback(cone: Cone, J) -> Cone:
    """Directions that ``J`` maps into ``cone``.

    When the preimage wraps through the horizontal only the component that
    contains the vertical is kept.
    """
    J = np.asarray(J, dtype=float)
    inv = np.linalg.inv(J)
    try:
        return transport(cone, inv)
    except HorizontalCapture:
        pass
    # the preimage is (-inf, lo] U [hi, inf); 1e300 stands in for the infinite
    # end, callers intersect with the standard cone straight away
    a, b = _mobius(inv, cone.u_lo), _mobius(inv, cone.u_hi)
    lo, hi = min(a, b), max(a, b)
    if hi <= 0.0:
        return Cone(hi, 1e300)
    if lo >= 0.0:
        return Cone(-1e300, lo)
    raise HorizontalCapture("preimage cone does not contain the vertical")


# --------------------------------------------------------------------------
# classification


class LRV(enum.Enum):
    L = "L"
    R = "R"
    V = "V"


class LRVClass(NamedTuple):
    kind: LRV
    angle: float


def fold_level(p, params: MapParams = DEFAULT_PARAMS) -> float:
    """``eta + lam*xi_prev`` for a fold-image point, i.e. ``c(xi - q)**2``."""
    d = p[0] - params.q
    return params.c * d * d


def leaf_slope(p, params: MapParams = DEFAULT_PARAMS) -> float:
    """Slope ``v1/v2`` of the leaf tangent at a fold-image point."""
    d = p[0] - params.q
    if d == 0.0:
        raise TangencyPoint("the leaf is horizontal at the fold vertex")
    return 1.0 / (2.0 * params.c * d)


def v_cone_halfwidth(level: float, params: MapParams = DEFAULT_PARAMS) -> float:
    """Half-width ``3 / (2 sqrt(c * level))`` of a V-cone."""
    return 3.0 / (2.0 * math.sqrt(params.c * level))


def _source(p, params, source):
    return source if source is not None else source_region(p, params)


def _is_vertex(p, params):
    return math.hypot(p[0] - params.q, p[1]) < 1e-12


def angle_a(p, params: MapParams = DEFAULT_PARAMS, source: Region | None = None) -> float:
    """Angle between the leaf through ``p`` and the horizontal.

    ``source`` is the region ``p`` was mapped from; without it the preimage must
    be unique.
    """
    if _source(p, params, source) is not Region.R4:
        return math.pi / 2
    if _is_vertex(p, params):
        raise TangencyPoint("a = 0 at the tangency point")
    return math.atan(2.0 * params.c * abs(p[0] - params.q))


def lrv_class(p, params: MapParams = DEFAULT_PARAMS, source: Region | None = None) -> LRVClass:
    a = angle_a(p, params, source)
    if a == math.pi / 2:
        return LRVClass(LRV.L, a)
    if a > math.pi / 3:
        return LRVClass(LRV.R, a)
    return LRVClass(LRV.V, a)


def rv_cone(p, params: MapParams = DEFAULT_PARAMS) -> Cone:
    """Cone at a point of the fold image (class R or V)."""
    if _is_vertex(p, params):
        raise TangencyPoint("no cone at the tangency point")
    if math.atan(2.0 * params.c * abs(p[0] - params.q)) > math.pi / 3:
        return Cone.standard()
    return Cone.symmetric(v_cone_halfwidth(fold_level(p, params), params))


def push_cone(cone: Cone, points, codes, params: MapParams = DEFAULT_PARAMS,
              widen: float = WIDEN) -> Cone:
    """Transport ``cone`` along ``points[i]`` (in region ``codes[i]``), widening
    after every step."""
    for pt, r in zip(points, codes):
        cone = transport(cone, branch_jacobian(r, pt[0], pt[1], params)).widen(widen)
    return cone


def cone_at(p, params: MapParams = DEFAULT_PARAMS, history: Sequence[Region] | None = None,
            horizon: int = HORIZON) -> Cone:
    """Cone of the field at ``p``.

    ``history`` lists the regions of the backward orbit, most recent first
    (``history[0]`` is the region ``p`` came from).  Missing entries are
    recovered with :func:`step_back`, which raises ``AmbiguousPreimage`` where
    branch images overlap.
    """
    if near_tangency_orbit(p, params):
        raise TangencyOrbit(f"{tuple(p)} is on the tangency orbit")
    history = list(history or [])
    back = []  # (point, region it lies in), nearest first
    cur = tuple(p)
    for m in range(horizon):
        try:
            reg = history[m] if m < len(history) else source_region(cur, params)
        except NoPreimage:
            break
        if reg is Region.R4:
            cone = rv_cone(cur, params)
            path = back[::-1]
            return push_cone(cone, [b for b, _ in path], [r for _, r in path], params)
        try:
            prev = step_back(cur, params, region=reg)
        except NoPreimage:
            break
        back.append((prev, reg))
        cur = prev
    # no visit to the fold image in the past: look ahead instead
    pts, regs = [], []
    cur = tuple(p)
    for _ in range(horizon):
        r = region_of(cur, params)
        if r not in (Region.R1, Region.R3, Region.R4, Region.R5):
            break
        pts.append(cur)
        regs.append(r)
        nxt = branch_step(r, cur[0], cur[1], params)
        if r is Region.R4:
            if _is_vertex(nxt, params):
                break
            cone = rv_cone(nxt, params)
            for pt, rg in zip(reversed(pts), reversed(regs)):
                cone = pullback(cone, branch_jacobian(rg, pt[0], pt[1], params))
            return cone.intersect(Cone.standard())
        cur = nxt
    return Cone.standard()


def cycle_cones(points, codes, params: MapParams = DEFAULT_PARAMS,
                widen: float = WIDEN) -> list[Cone]:
    """Cones along a periodic orbit; ``codes[i]`` is the region of ``points[i]``."""
    k = len(points)
    regs = [c if isinstance(c, Region) else _REG[c] for c in codes]
    starts = [i for i in range(k) if regs[i - 1] is Region.R4]
    if not starts:
        return [Cone.standard()] * k
    cones: list[Cone | None] = [None] * k
    for i in starts:
        cones[i] = rv_cone(points[i], params)
    for s in starts:
        cone = cones[s]
        i = s
        while True:
            j = (i + 1) % k
            if cones[j] is not None and regs[i] is Region.R4:
                break
            pt = points[i]
            cone = transport(cone, branch_jacobian(regs[i], pt[0], pt[1], params)).widen(widen)
            cones[j] = cone
            i = j
    return cones


_REG = {r.code: r for r in (Region.R1, Region.R3, Region.R4, Region.R5)}


# --------------------------------------------------------------------------
# first-return inclusion


@dataclass(frozen=True)
class InclusionReport:
    start: tuple
    start_class: LRVClass
    n: int
    end: tuple
    end_class: LRVClass
    image: Cone
    target: Cone
    margin: float
    record: object = None

    @property
    def passed(self) -> bool:
        return self.margin > 0.0


def check_return_inclusion(p, params: MapParams = DEFAULT_PARAMS, max_iter: int = 1000,
                           record=None) -> InclusionReport:
    """Transport the cone at the fold-image point ``p`` to its first return and
    measure how deep the image sits inside the cone there.

    ``record`` may be a precomputed :class:`~.orbit_checks.ReturnRecord`.
    """
    from .orbit_checks import first_return
    if near_tangency_orbit(p, params):
        raise TangencyOrbit(f"{tuple(p)} is on the tangency orbit")
    if record is None:
        record = first_return(p, params, max_iter=max_iter)
    if near_tangency_orbit(record.end, params):
        raise TangencyOrbit("return lands on the tangency orbit")
    cone = rv_cone(p, params)
    for pt, r in zip(record.path, record.regions):
        cone = transport(cone, branch_jacobian(r, pt[0], pt[1], params))
    target = rv_cone(record.end, params)
    return InclusionReport(tuple(p), lrv_class(p, params, Region.R4), record.n,
                           tuple(record.end), lrv_class(record.end, params, Region.R4),
                           cone, target, cone.margin_in(target), record)


# --------------------------------------------------------------------------
# the curvature threshold for first-return inclusion


class NovoRow(NamedTuple):
    eta: float
    lhs: float
    rhs: float
    holds: bool


def novo_rows(c: float, params: MapParams = DEFAULT_PARAMS, etas=None) -> list[NovoRow]:
    """Evaluate ``eta**(1 - ln lam/ln sigma) < 4 c eta / 9`` on a grid of eta."""
    if etas is None:
        etas = novo_grid()
    e = 1.0 - math.log(params.lam) / math.log(params.sigma)
    rows = []
    for eta in etas:
        lhs, rhs = eta ** e, 4.0 * c * eta / 9.0
        rows.append(NovoRow(float(eta), lhs, rhs, lhs < rhs))
    return rows


def novo_grid(points_per_decade: int = 20) -> np.ndarray:
    """Log-spaced eta grid on [1e-6, 1], including both ends."""
    return np.logspace(-6.0, 0.0, 6 * points_per_decade + 1)


class NovoCertificate(NamedTuple):
    threshold: float
    exponent: float
    reason: str


def min_c_for_inclusion(params: MapParams = DEFAULT_PARAMS) -> NovoCertificate:
    """Smallest curvature for which the reduction in the inclusion argument goes
    through: 9/4, whatever lam and sigma are.

    Dividing by eta, the inequality reads ``eta**k < 4c/9`` with
    ``k = -ln lam/ln sigma > 0``; on (0, 1] the left side increases to 1 at
    eta = 1, so it holds on the whole interval iff ``c > 9/4``.
    """
    k = -math.log(params.lam) / math.log(params.sigma)
    return NovoCertificate(NOVO_THRESHOLD, k,
                           f"eta**{k:.6g} <= 1 on (0,1] with equality at eta=1; need 4c/9 > 1")


def standard_growth(params: MapParams = DEFAULT_PARAMS) -> float:
    """Growth of the standard-cone edge ``(sqrt 3, 1)`` under ``diag(lam, sigma)``:
    ``sqrt(3 lam**2 + sigma**2) / 2``, the least one-step growth over the cone."""
    return math.sqrt(3.0 * params.lam ** 2 + params.sigma ** 2) / 2.0
