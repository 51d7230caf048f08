"""The piecewise map: parameters, region classification, forward and inverse
branches, and exact Jacobians.

Regions are closed horizontal strips of the unit square selected by the
y-coordinate; where two strips share an edge the upper strip owns it.  Three
strips are mapped affinely, the fourth carries the fold

    (x, y) -> (q + alpha*(y - y_c), c*alpha**2*(y - y_c)**2 - lam*x),

which sends the vertical line ``x = x0`` onto the parabola
``y' = c*(x' - q)**2 - lam*x0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (AmbiguousPreimage, ConfigError, InvalidParams, NoPreimage,
                     NotInDomain)


class Region(enum.Enum):
    R1 = "R1"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    ESCAPE = "Escape"
    OUTSIDE_Q = "OutsideQ"

    def __lt__(self, other):
        return _ORDER[self] < _ORDER[other]

    @property
    def code(self) -> int:
        """Integer code used by the compiled kernels (R1=0, R3=1, R4=2, R5=3)."""
        return _CODES[self]


_ORDER = {r: i for i, r in enumerate(Region)}
DOMAIN = (Region.R1, Region.R3, Region.R4, Region.R5)
LINEAR = (Region.R1, Region.R3, Region.R5)
_CODES = {r: i for i, r in enumerate(DOMAIN)}
REGION_BY_CODE = dict(enumerate(DOMAIN))


class Point(NamedTuple):
    x: float
    y: float


# Config keys follow the published field names; ``lambda`` is a Python keyword.
_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


@dataclass(frozen=True)
class MapParams:
    lam: float = 0.25
    sigma: float = 4.0
    c: float = 16.0
    q: float = 0.72
    alpha: float = 4.0
    y3: float = 0.40
    d3: float = 0.45
    y4a: float = 0.70
    y4b: float = 0.78
    r5_orientation: str = "preserving"

    @property
    def y_c(self) -> float:
        return 0.5 * (self.y4a + self.y4b)

    @property
    def r1_top(self) -> float:
        return 1.0 / self.sigma

    @property
    def r3_top(self) -> float:
        return self.y3 + 1.0 / self.sigma

    @property
    def r5_bottom(self) -> float:
        return 1.0 - 2.0 / (3.0 * self.sigma)

    @property
    def reversing(self) -> bool:
        return self.r5_orientation == "reversing"

    def strip(self, region: Region) -> tuple[float, float]:
        """Closed y-interval ``(lo, hi)`` of a domain region."""
        return {
            Region.R1: (0.0, self.r1_top),
            Region.R3: (self.y3, self.r3_top),
            Region.R4: (self.y4a, self.y4b),
            Region.R5: (self.r5_bottom, 1.0),
        }[region]

    def violations(self) -> list[str]:
        errs = []
        if not self.sigma > 3:
            errs.append("sigma > 3 violated")
        if not 0 < self.lam < 1 / 3:
            errs.append("lambda < 1/3 violated")
        if not 2 / 3 < self.q < 1:
            errs.append("q in (2/3, 1) violated")
        if not self.alpha >= self.sigma:
            errs.append("alpha >= sigma violated")
        if not self.c > max(9 / 4, 39 / 4, self.sigma):
            errs.append("c > max(9/4, 39/4, sigma) violated")
        bands = [self.strip(r) for r in DOMAIN]
        ordered = all(lo < hi for lo, hi in bands) and all(
            bands[i][1] <= bands[i + 1][0] for i in range(3))
        if not (ordered and bands[0][0] >= 0 and bands[-1][1] <= 1):
            errs.append("region strips disjoint and increasing violated")
        half = 0.5 * self.alpha * (self.y4b - self.y4a)
        if not (0 <= self.q - half and self.q + half <= 1):
            errs.append("fold image inside square violated")
        if not (self.d3 >= 0 and self.d3 + self.lam < 1 - self.lam):
            errs.append("R3 image disjoint from R5 image violated")
        if self.r5_orientation not in ("preserving", "reversing"):
            errs.append("r5_orientation in {preserving, reversing} violated")
        return errs

    def fingerprint(self) -> str:
        return "|".join(_render(getattr(self, f.name)) for f in fields(self))

    def as_config(self) -> dict:
        return {_ATTR_TO_KEY.get(k, k): v for k, v in asdict(self).items()}

    @classmethod
    def from_config(cls, mapping: dict) -> "MapParams":
        kwargs = {}
        names = {f.name for f in fields(cls)}
        for key, value in mapping.items():
            attr = _KEY_TO_ATTR.get(key, key)
            if attr not in names:
                raise ConfigError(f"unknown parameter key {key!r}")
            if attr == "r5_orientation":
                if not isinstance(value, str):
                    raise ConfigError("r5_orientation must be a string")
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number")
            else:
                value = float(value)
            kwargs[attr] = value
        return cls(**kwargs)

    def vector(self) -> np.ndarray:
        """Flat float64 vector consumed by the kernels."""
        return np.array([self.lam, self.sigma, self.c, self.q, self.alpha,
                         self.y3, self.d3, self.y4a, self.y4b,
                         1.0 if self.reversing else 0.0], dtype=np.float64)

    def replace(self, **changes) -> "MapParams":
        return replace(self, **changes)


DEFAULT_PARAMS = MapParams()


def _render(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def validate(params: MapParams) -> MapParams:
    """Return ``params`` unchanged if every invariant holds, else raise
    :class:`InvalidParams` listing each violation."""
    errs = params.violations()
    if errs:
        raise InvalidParams(errs)
    return params


def load_params(path) -> MapParams:
    from ._toml import load_flat
    return MapParams.from_config(load_flat(path))


def save_params(params: MapParams, path) -> None:
    from ._toml import dump_flat
    Path(path).write_text(dump_flat(params.as_config()), encoding="utf-8")


# --------------------------------------------------------------------------
# classification and branches


def region_of(p, params: MapParams = DEFAULT_PARAMS) -> Region:
    x, y = p
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        return Region.OUTSIDE_Q
    # strips are closed; where two strips touch the upper one owns the edge
    for r in reversed(DOMAIN):
        lo, hi = params.strip(r)
        if lo <= y <= hi:
            return r
    return Region.ESCAPE


def in_region(p, region: Region, params: MapParams = DEFAULT_PARAMS,
              tol: float = 0.0) -> bool:
    """Membership of ``p`` in the closed strip ``region`` widened by ``tol``."""
    x, y = p
    lo, hi = params.strip(region)
    return -tol <= x <= 1.0 + tol and lo - tol <= y <= hi + tol


def branch_step(region: Region, x: float, y: float,
                params: MapParams = DEFAULT_PARAMS) -> Point:
    """Apply the formula of ``region`` regardless of where (x, y) lies."""
    lam, sig = params.lam, params.sigma
    if region is Region.R1:
        return Point(lam * x, sig * y)
    if region is Region.R3:
        return Point(lam * x + params.d3, sig * (y - params.y3))
    if region is Region.R5:
        if params.reversing:
            return Point(1.0 - lam * x, sig * (1.0 - y))
        return Point(lam * x + (1.0 - lam), sig * y - (sig - 1.0))
    if region is Region.R4:
        t = y - params.y_c
        a = params.alpha
        return Point(params.q + a * t, params.c * a * a * t * t - lam * x)
    raise NotInDomain(f"no branch for {region.value}")


def branch_jacobian(region: Region, x: float, y: float,
                    params: MapParams = DEFAULT_PARAMS) -> np.ndarray:
    lam, sig = params.lam, params.sigma
    if region is Region.R4:
        a = params.alpha
        return np.array([[0.0, a],
                         [-lam, 2.0 * params.c * a * a * (y - params.y_c)]])
    if region is Region.R5 and params.reversing:
        return np.array([[-lam, 0.0], [0.0, -sig]])
    if region in LINEAR:
        return np.array([[lam, 0.0], [0.0, sig]])
    raise NotInDomain(f"no branch for {region.value}")


def _domain_region(p, params) -> Region:
    r = region_of(p, params)
    if r not in DOMAIN:
        raise NotInDomain(f"{tuple(p)} lies in {r.value}")
    return r


def step(p, params: MapParams = DEFAULT_PARAMS) -> Point:
    r = _domain_region(p, params)
    return branch_step(r, p[0], p[1], params)


def jacobian(p, params: MapParams = DEFAULT_PARAMS) -> np.ndarray:
    r = _domain_region(p, params)
    return branch_jacobian(r, p[0], p[1], params)


def branch_inverse(region: Region, x: float, y: float,
                   params: MapParams = DEFAULT_PARAMS) -> Point:
    """Invert the formula of ``region`` (no membership check)."""
    lam, sig = params.lam, params.sigma
    if region is Region.R1:
        return Point(x / lam, y / sig)
    if region is Region.R3:
        return Point((x - params.d3) / lam, params.y3 + y / sig)
    if region is Region.R5:
        if params.reversing:
            return Point((1.0 - x) / lam, 1.0 - y / sig)
        return Point((x - (1.0 - lam)) / lam, (y + sig - 1.0) / sig)
    if region is Region.R4:
        t = x - params.q
        return Point((params.c * t * t - y) / lam, params.y_c + t / params.alpha)
    raise NoPreimage(f"no inverse branch for {region.value}")


# absorbs rounding in the inverse formulas at strip edges
_BACK_TOL = 1e-12


def preimage_candidates(p, params: MapParams = DEFAULT_PARAMS) -> list[tuple[Region, Point]]:
    """Every (region, preimage) pair whose preimage lies in that region."""
    out = []
    for r in DOMAIN:
        pre = branch_inverse(r, p[0], p[1], params)
        if in_region(pre, r, params, _BACK_TOL):
            out.append((r, pre))
    return out


def step_back(p, params: MapParams = DEFAULT_PARAMS, region: Region | None = None) -> Point:
    """Unique preimage of ``p``.

    With the default parameters the fold image overlaps the images of R3 and
    R5, so some points have two preimages; pass ``region`` to select the
    branch the orbit came through.
    """
    if region is not None:
        pre = branch_inverse(region, p[0], p[1], params)
        if not in_region(pre, region, params, _BACK_TOL):
            raise NoPreimage(f"{tuple(p)} is not in the image of {region.value}")
        return pre
    cands = preimage_candidates(p, params)
    if not cands:
        raise NoPreimage(f"{tuple(p)} is in no region image")
    if len(cands) > 1:
        raise AmbiguousPreimage(p, [r for r, _ in cands])
    return cands[0][1]


def source_region(p, params: MapParams = DEFAULT_PARAMS) -> Region:
    """Region whose image contains ``p`` (raises if none or several)."""
    cands = preimage_candidates(p, params)
    if not cands:
        raise NoPreimage(f"{tuple(p)} is in no region image")
    if len(cands) > 1:
        raise AmbiguousPreimage(p, [r for r, _ in cands])
    return cands[0][0]


def tangency_orbit(params: MapParams = DEFAULT_PARAMS, floor: float = 1e-11) -> list[Point]:
    """Points of the tangency orbit farther than ``floor`` from the origin.

    Forward the orbit of (q, 0) creeps along y = 0 towards the saddle; backward
    it runs down x = 0 through (0, y_c).
    """
    pts = []
    x = params.q
    while x > floor:
        pts.append(Point(x, 0.0))
        x *= params.lam
    y = params.y_c
    while y > floor:
        pts.append(Point(0.0, y))
        y /= params.sigma
    return pts


def near_tangency_orbit(p, params: MapParams = DEFAULT_PARAMS, tol: float = 1e-12) -> bool:
    return any(math.hypot(p[0] - t.x, p[1] - t.y) < tol for t in tangency_orbit(params))
