"""Orbit bookkeeping: first returns to the fold image, the neighbourhood W of
the tangency and its forward copies, escape times and the growth estimates
that hold along an excursion.

Strict inequalities are checked with a relative slack of 1e-12 to absorb
rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cone_field import Cone, cone_at, fold_level, standard_growth
from .errors import (BudgetExceeded, ConeViolation, Escaped, InWTilde,
                     OnStableManifold)
from .kernels import core
from .map_core import (DEFAULT_PARAMS, DOMAIN, MapParams, Point, Region,
                       branch_jacobian, branch_step, region_of)

SLACK = 1e-12
J_MAX = 60


def _ge(a, b):
    return a >= b - SLACK * max(1.0, abs(b))


def _gt(a, b):
    return a > b - SLACK * max(1.0, abs(b))


@dataclass(frozen=True)
class ReturnRecord:
    """A first return ``start -> end`` between points of the fold image.

    ``path`` holds the n points ``start, ..., P_{n-1}`` and ``regions`` their
    regions; the last one is always R4.
    """

    start: Point
    n: int
    end: Point
    xi_prev: float
    path: tuple = field(repr=False)
    regions: tuple = field(repr=False)
    params: MapParams = field(default=DEFAULT_PARAMS, repr=False)

    @property
    def eta(self) -> float:
        return self.start.y

    @property
    def return_bound(self) -> float:
        p = self.params
        b_eta = math.log(1.0 / self.eta) / math.log(p.sigma) if self.eta > 0 else math.inf
        b_xi = (math.log(1.0 / self.xi_prev) / math.log(1.0 / p.lam)
                if self.xi_prev > 0 else math.inf)
        return max(b_eta, b_xi)

    @property
    def contraction(self) -> float:
        """``(lam/sigma)**n``."""
        return (self.params.lam / self.params.sigma) ** self.n

    @property
    def eta_bound(self) -> float:
        """``eta**(1 - ln lam/ln sigma)``."""
        p = self.params
        return self.eta ** (1.0 - math.log(p.lam) / math.log(p.sigma))

    @property
    def xi_bound_printed(self) -> float:
        """``(lam xi_{n-1})**(1 - ln sigma/ln lam)``."""
        p = self.params
        return (p.lam * self.xi_prev) ** (1.0 - math.log(p.sigma) / math.log(p.lam))

    @property
    def xi_bound_used(self) -> float:
        """``(lam xi_{n-1})**(1 - ln lam/ln sigma)``."""
        p = self.params
        return (p.lam * self.xi_prev) ** (1.0 - math.log(p.lam) / math.log(p.sigma))

    @property
    def cone_bound(self) -> float:
        """``4c sqrt(eta_n + lam xi_{n-1}) sqrt(eta + lam xi_{-1}) / 9``."""
        p = self.params
        return 4.0 * p.c * math.sqrt(fold_level(self.end, p) * fold_level(self.start, p)) / 9.0

    @property
    def return_ok(self) -> bool:
        return _ge(self.n, self.return_bound)

    @property
    def eta_ok(self) -> bool:
        return self.contraction < self.eta_bound

    @property
    def cone_bound_ok(self) -> bool:
        return self.contraction < self.cone_bound


def first_return(p, params: MapParams = DEFAULT_PARAMS, max_iter: int = 1000) -> ReturnRecord:
    """Follow the fold-image point ``p`` until the step after its next R4 visit."""
    cur = Point(float(p[0]), float(p[1]))
    path, regions = [], []
    for _ in range(max_iter):
        r = region_of(cur, params)
        if r not in DOMAIN:
            raise Escaped(f"orbit of {tuple(p)} reaches {r.value} at {tuple(cur)}")
        path.append(cur)
        regions.append(r)
        nxt = branch_step(r, cur.x, cur.y, params)
        if r is Region.R4:
            if region_of(nxt, params) not in DOMAIN:
                raise Escaped(f"orbit of {tuple(p)} leaves through the fold")
            return ReturnRecord(Point(float(p[0]), float(p[1])), len(path), nxt, cur.x,
                                tuple(path), tuple(regions), params)
        cur = nxt
    raise BudgetExceeded(f"no return within {max_iter} steps")


# --------------------------------------------------------------------------
# W and its forward copies


def in_W(p, params: MapParams = DEFAULT_PARAMS) -> bool:
    dx = p[0] - params.q
    return dx * dx + p[1] * p[1] < 1.0 / (params.c * params.c)


def in_W_tilde(p, params: MapParams = DEFAULT_PARAMS, j_max: int = J_MAX) -> bool:
    """Whether ``p`` lies in W_j for some j <= j_max.

    W_j is reached from W by j steps inside R1, so ``p`` qualifies when its
    linear backward images stay in R1 and the j-th one is in W.
    """
    x, y = float(p[0]), float(p[1])
    top = params.r1_top
    if not (0.0 <= y <= top and x >= 0.0):
        return False
    for _ in range(j_max + 1):
        if x > 1.0:
            return False
        if in_W((x, y), params):
            return True
        x /= params.lam
        y /= params.sigma
    return False


def escape_bound(eta: float, params: MapParams = DEFAULT_PARAMS) -> float:
    """``-log(3 eta)/log sigma``."""
    return -math.log(3.0 * eta) / math.log(params.sigma)


def escape_time(p, params: MapParams = DEFAULT_PARAMS) -> int:
    """Steps until the point leaves ``[0,1] x [0,1/3]`` under the R1 branch."""
    if not in_W(p, params):
        raise ValueError(f"{tuple(p)} is not in W")
    y = float(p[1])
    if y == 0.0:
        raise OnStableManifold("eta = 0 never escapes")
    if y < 0.0:
        raise ValueError("point below the square")
    n = 0
    while y <= 1.0 / 3.0:
        y *= params.sigma
        n += 1
    return n


@dataclass(frozen=True)
class ExcursionRecord:
    start: Point
    v: tuple
    escape_n: int
    bound: float
    growth: float  # |v^n| / |v|
    vertical_ratio: float  # |v^n| / (sigma^n |v_2|)
    params: MapParams = field(default=DEFAULT_PARAMS, repr=False)

    @property
    def half_rate_ratio(self) -> float:
        """``growth / sigma**(n/2)``."""
        return self.growth / self.params.sigma ** (0.5 * self.escape_n)

    @property
    def escape_ok(self) -> bool:
        return _ge(self.escape_n, self.bound)

    @property
    def vertical_ok(self) -> bool:
        return _ge(self.vertical_ratio, 1.0)

    @property
    def half_rate_ok(self) -> bool:
        return _ge(self.half_rate_ratio, 1.0)

    @property
    def passed(self) -> bool:
        return self.escape_ok and self.vertical_ok and self.half_rate_ok


def excursion_growth(p, v, params: MapParams = DEFAULT_PARAMS, cone: Cone | None = None,
                     history=(Region.R4,)) -> ExcursionRecord:
    """Push ``v`` through the linear excursion of the W-point ``p``.

    ``cone`` defaults to the field cone at ``p`` (computed with ``history``);
    ``v`` must lie in it.
    """
    n = escape_time(p, params)
    if cone is None:
        cone = cone_at(p, params, history=history)
    if not cone.contains(v, tol=SLACK * max(1.0, abs(cone.u_hi))):
        raise ConeViolation(f"{tuple(v)} is outside {cone}")
    v1, v2 = float(v[0]), float(v[1])
    w1, w2 = v1, v2
    for _ in range(n):
        w1 *= params.lam
        w2 *= params.sigma
    norm_n = math.hypot(w1, w2)
    return ExcursionRecord(Point(float(p[0]), float(p[1])), (v1, v2), n,
                           escape_bound(p[1], params), norm_n / math.hypot(v1, v2),
                           norm_n / (params.sigma ** n * abs(v2)), params)


@dataclass(frozen=True)
class GrowthRecord:
    point: Point
    v: tuple
    ratio: float
    sigma1: float

    @property
    def passed(self) -> bool:
        return self.ratio > self.sigma1 * (1.0 - SLACK)


def step_growth_outside(p, v, params: MapParams = DEFAULT_PARAMS, cone: Cone | None = None,
                        history=None, j_max: int = J_MAX) -> GrowthRecord:
    """One-step growth ``|DPhi v| / |v|`` at a point outside W-tilde."""
    if in_W_tilde(p, params, j_max):
        raise InWTilde(f"{tuple(p)} lies in W-tilde")
    if cone is None:
        cone = cone_at(p, params, history=history)
    if not cone.contains(v, tol=SLACK * max(1.0, abs(cone.u_hi))):
        raise ConeViolation(f"{tuple(v)} is outside {cone}")
    r = region_of(p, params)
    J = branch_jacobian(r, p[0], p[1], params)
    v = np.asarray(v, dtype=float)
    return GrowthRecord(Point(float(p[0]), float(p[1])), tuple(v),
                        float(np.linalg.norm(J @ v) / np.linalg.norm(v)),
                        standard_growth(params))


# --------------------------------------------------------------------------
# samplers


def fold_image(x0, y, params: MapParams = DEFAULT_PARAMS):
    """Vectorised R4 branch."""
    t = np.asarray(y) - params.y_c
    a = params.alpha
    return params.q + a * t, params.c * a * a * t * t - params.lam * np.asarray(x0)


def sample_returns(rng: np.random.Generator, count: int,
                   params: MapParams = DEFAULT_PARAMS, max_iter: int = 1000,
                   batch: int = 20000, max_batches: int = 50) -> list[ReturnRecord]:
    """Up to ``count`` first returns from random fold-image starts.

    Starts are images of uniform points of R4; those that escape or stall are
    discarded.  Gives up after ``max_batches`` batches, so fewer than ``count``
    records come back when returns are rare (invalid parameters).
    """
    pv = params.vector()
    out: list[ReturnRecord] = []
    for _ in range(max_batches):
        if len(out) >= count:
            break
        x0 = rng.uniform(0.0, 1.0, batch)
        y = rng.uniform(params.y4a, params.y4b, batch)
        xs, ys = fold_image(x0, y, params)
        keep = (ys > 0.0) & (ys <= 1.0) & (xs >= 0.0) & (xs <= 1.0)
        xs, ys = xs[keep], ys[keep]
        _n, _xe, _ye, _xp, _yp, st = core.first_return_batch(pv, xs, ys, max_iter)
        for x, y_ in zip(xs[st == 0], ys[st == 0]):
            out.append(first_return((float(x), float(y_)), params, max_iter))
            if len(out) == count:
                break
    return out


def sample_w_points(rng: np.random.Generator, count: int,
                    params: MapParams = DEFAULT_PARAMS, eta_min: float = 1e-6) -> list[Point]:
    """Fold-image points in W with eta log-uniform on [eta_min, 1/c)."""
    out: list[Point] = []
    r = 1.0 / params.c
    while len(out) < count:
        eta = math.exp(rng.uniform(math.log(eta_min), math.log(r)))
        x0 = rng.uniform(0.0, max(0.0, (r - eta) / params.lam))
        d = math.sqrt((eta + params.lam * x0) / params.c)
        if rng.random() < 0.5:
            d = -d
        p = Point(params.q + d, eta)
        if in_W(p, params) and 0.0 < p.y < r:
            out.append(p)
    return out
