"""Growth-rate thresholds, exponents of periodic orbits, finite-time exponents
along forward orbits and the point-dependent constant that exposes the lack
of uniform hyperbolicity near the tangency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cone_field import leaf_slope, standard_growth
from .errors import AmbiguousPreimage, Escaped, NoPreimage, TangencyOrbit
from .map_core import (DEFAULT_PARAMS, DOMAIN, MapParams, Region,
                       branch_jacobian, branch_step, near_tangency_orbit,
                       region_of, source_region, step_back)
from .orbit_checks import in_W
from .periodic_orbits import PeriodicOrbit

DEPTH = 50
RENORM = 10


@dataclass(frozen=True)
class Thresholds:
    sigma1: float
    sigma_tilde: float
    lambda_tilde: float
    rho_s: float

    @property
    def gap(self) -> tuple[float, float]:
        return math.log(self.lambda_tilde), math.log(self.sigma_tilde)


def thresholds(params: MapParams = DEFAULT_PARAMS) -> Thresholds:
    """Per-step rates bounding the exponents away from zero.

    ``sigma_tilde = min(sqrt(sigma), sigma1)``.  For the stable side,
    ``rho_s`` is the least growth of ``diag(1/lam, 1/sigma)`` over the stable
    cone ``|v2| <= |v1|/sqrt(3)`` and ``lambda_tilde = 1/min(lam**-0.5, rho_s)``.
    """
    s1 = standard_growth(params)
    rho_s = math.sqrt(1.0 / params.lam ** 2 + 1.0 / (3.0 * params.sigma ** 2)) * math.sqrt(3.0) / 2.0
    return Thresholds(s1, min(math.sqrt(params.sigma), s1),
                      1.0 / min(params.lam ** -0.5, rho_s), rho_s)


@dataclass(frozen=True)
class ExponentEstimate:
    label: str
    n: int
    chi_u: float
    chi_s: float
    method: str  # "periodic-exact" or "cone-vector"
    witness: tuple = ()  # exit times n_k after W-visits
    c_z: float | None = None


def exponents_periodic(orbit: PeriodicOrbit) -> ExponentEstimate:
    chi_s, chi_u = orbit.exponents
    return ExponentEstimate(orbit.name, orbit.period, chi_u, chi_s, "periodic-exact")


def gap_check(est: ExponentEstimate, th: Thresholds) -> bool:
    """True iff both exponents avoid the open interval (log lam~, log sigma~)."""
    lo, hi = th.gap
    return est.chi_s <= lo and est.chi_u >= hi


# --------------------------------------------------------------------------
# finite-time exponents


def _forward(p, steps, params):
    pts = [np.asarray(p, dtype=float)]
    for _ in range(steps):
        cur = pts[-1]
        r = region_of(cur, params)
        if r not in DOMAIN:
            raise Escaped(f"orbit of {tuple(p)} reaches {r.value}")
        pts.append(np.array(branch_step(r, cur[0], cur[1], params)))
    return pts


def _backward(p, steps, params):
    # as far back as the preimages are unique, nearest first
    out = []
    cur = tuple(p)
    for _ in range(steps):
        try:
            r = source_region(cur, params)
            cur = step_back(cur, params, region=r)
        except (NoPreimage, AmbiguousPreimage):
            break
        out.append(np.array(cur))
    return out


def _jac(pt, params):
    return branch_jacobian(region_of(pt, params), pt[0], pt[1], params)


def _trajectory(p, orbit, before, after, params):
    """Points ``p_{-before} .. p_{after}`` (fewer in the past if the backward
    orbit is not unique)."""
    if orbit is not None:
        pts = np.asarray(orbit.points)
        k = len(pts)
        i0 = int(np.argmin(np.abs(pts - np.asarray(p)).max(axis=1)))
        past = [pts[(i0 - m) % k] for m in range(before, 0, -1)]
        fut = [pts[(i0 + m) % k] for m in range(after + 1)]
        regs = {tuple(pt): r for pt, r in zip(map(tuple, pts), orbit.word)}
        return past, fut, lambda pt: branch_jacobian(regs[tuple(pt)], pt[0], pt[1], params)
    past = _backward(p, before, params)[::-1]
    fut = _forward(p, after, params)
    return past, fut, lambda pt: _jac(pt, params)


def unstable_vector(past, jac) -> np.ndarray:
    """Vertical vector at the earliest past point pushed to the present."""
    v = np.array([0.0, 1.0])
    for pt in past:
        v = jac(pt) @ v
        v /= np.linalg.norm(v)
    return v


def stable_vector(fut, jac) -> np.ndarray:
    """Horizontal vector at the last future point pulled back to ``fut[0]``."""
    w = np.array([1.0, 0.0])
    for pt in reversed(fut[:-1]):
        w = np.linalg.solve(jac(pt), w)
        w /= np.linalg.norm(w)
    return w


def _log_growth(v, pts, jac, renorm):
    """log |D^n v| - log |v| along ``pts`` (n = len(pts)), renormalising every
    ``renorm`` steps; also returns the per-step log norms."""
    v = np.asarray(v, dtype=float)
    acc = math.log(np.linalg.norm(v))
    total = -acc
    logs = []
    for i, pt in enumerate(pts):
        v = jac(pt) @ v
        if (i + 1) % renorm == 0:
            s = np.linalg.norm(v)
            acc += math.log(s)
            v = v / s
        logs.append(acc + math.log(np.linalg.norm(v)))
    return logs[-1] + total if logs else 0.0, [x + total for x in logs]


def exponents_forward(p, n: int, params: MapParams = DEFAULT_PARAMS, *,
                      orbit: PeriodicOrbit | None = None, depth: int = DEPTH,
                      renorm: int = RENORM, th: Thresholds | None = None) -> ExponentEstimate:
    """Finite-time exponents over ``n`` forward steps from ``p``.

    The unstable vector is the vertical pushed forward from ``depth`` steps in
    the past; the stable vector is the horizontal pulled back from ``depth``
    steps beyond the horizon.  For a point of ``orbit`` the stored cycle is used
    as the trajectory, since re-iterating an unstable orbit drifts away from it.
    """
    if near_tangency_orbit(p, params):
        raise TangencyOrbit(f"{tuple(p)} is on the tangency orbit")
    th = th or thresholds(params)
    past, fut, jac = _trajectory(p, orbit, depth, n + depth, params)
    steps = fut[:n]
    vu = unstable_vector(past, jac)
    log_u, logs_u = _log_growth(vu, steps, jac, renorm)
    # stable side: pull back from p_{n+depth} to p_n, then through the n steps
    w = stable_vector(fut[n:], jac)
    log_s = 0.0
    for pt in reversed(steps):
        w = np.linalg.solve(jac(pt), w)
        s = np.linalg.norm(w)
        log_s -= math.log(s)
        w /= s
    witness = _exit_times(steps + [fut[n]], params)
    c_z = None
    if witness:
        log_c = min(logs_u[t - 1] - t * math.log(th.sigma_tilde) for t in witness)
        c_z = math.exp(min(log_c, 700.0))
    label = orbit.name if orbit is not None else f"({p[0]:.6g}, {p[1]:.6g})"
    return ExponentEstimate(label, n, log_u / n, log_s / n, "cone-vector", tuple(witness), c_z)


def _exit_times(pts, params):
    """Times ``n_k``: first step after a visit to W at which the orbit is not
    in R1."""
    out = []
    pending = False
    for i, pt in enumerate(pts):
        if pending and region_of(pt, params) is not Region.R1:
            out.append(i)
            pending = False
        if in_W(pt, params):
            pending = True
    return out


# --------------------------------------------------------------------------
# non-uniformity


@dataclass(frozen=True)
class NonuniformityProfile:
    point: tuple
    N: int
    C_x: float
    n_min: int
    horizon: int  # steps actually taken (the orbit may leave the square)


def unstable_axis(p, params: MapParams = DEFAULT_PARAMS, source: Region | None = None) -> np.ndarray:
    """Unit vector along the cone axis: the leaf tangent on the fold image,
    vertical elsewhere."""
    src = source if source is not None else source_region(p, params)
    if src is Region.R4:
        v = np.array([leaf_slope(p, params), 1.0])
    else:
        v = np.array([0.0, 1.0])
    return v / np.linalg.norm(v)


def nonuniformity_profile(points: Sequence, N: int, params: MapParams = DEFAULT_PARAMS,
                          sources: Sequence[Region | None] | None = None,
                          th: Thresholds | None = None) -> list[NonuniformityProfile]:
    """``C_x = min_{1<=n<=N} |DPhi^n v_u| / sigma~**n`` at each point."""
    th = th or thresholds(params)
    log_st = math.log(th.sigma_tilde)
    out = []
    for i, p in enumerate(points):
        if near_tangency_orbit(p, params):
            raise TangencyOrbit(f"{tuple(p)} is on the tangency orbit")
        src = sources[i] if sources is not None else None
        v = unstable_axis(p, params, src)
        cur = np.asarray(p, dtype=float)
        log_v = 0.0
        best, arg, used = math.inf, 0, 0
        for n in range(1, N + 1):
            r = region_of(cur, params)
            if r not in DOMAIN:
                break
            v = branch_jacobian(r, cur[0], cur[1], params) @ v
            s = np.linalg.norm(v)
            log_v += math.log(s)
            v /= s
            cur = np.array(branch_step(r, cur[0], cur[1], params))
            used = n
            val = log_v - n * log_st
            if val < best:
                best, arg = val, n
        out.append(NonuniformityProfile(tuple(map(float, p)), N,
                                        math.exp(best) if used else math.nan, arg, used))
    return out


def tangency_approach(params: MapParams = DEFAULT_PARAMS, js=range(1, 7)) -> list[tuple[float, float]]:
    """Fold images of ``(0, y_c + 10**-j / alpha)``: points with
    ``xi - q = 10**-j`` on the parabola of ``x0 = 0``."""
    pts = []
    for j in js:
        t = 10.0 ** -j / params.alpha
        pts.append(branch_step(Region.R4, 0.0, params.y_c + t, params))
    return [tuple(p) for p in pts]
