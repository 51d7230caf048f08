"""Verification driver: run configuration, the suites, the certificate and the
plot-ready datasets.

Every output is a deterministic function of the configuration and the seed:
timings go to the console only, rows are written in canonical order and floats
are rendered with ``repr``.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from ._toml import load_flat
from .cone_field import (Cone, check_return_inclusion, cone_at,
                         cycle_cones, lrv_class, min_c_for_inclusion, novo_rows)
from .errors import ConfigError, HorseshoeError, InvalidParams, TangencyOrbit
from .lyapunov import (exponents_forward, exponents_periodic, gap_check,
                       nonuniformity_profile, tangency_approach, thresholds)
from .map_core import DEFAULT_PARAMS, DOMAIN, MapParams, Region, branch_step
from .orbit_checks import (SLACK, excursion_growth, in_W_tilde, sample_returns,
                           sample_w_points, step_growth_outside)
from .periodic_orbits import (Census, census, certify_uniform_hyperbolicity,
                              find_orbit, parse_word)

SUITES = ("validate", "verify-cones", "verify-returns", "verify-escape",
          "periodic", "lyapunov", "nonuniformity")

# orbits every census must reproduce: word -> (points, multipliers)
KNOWN_ORBITS = {
    "R1": ([(0.0, 0.0)], (0.25, 4.0)),
    "R5": ([(1.0, 1.0)], (0.25, 4.0)),
    "R1R3": ([(0.48, 0.32 / 3.0), (0.12, 1.28 / 3.0)], (0.0625, 16.0)),
}
KNOWN_TOL = 1e-10
RESIDUAL_TOL = 1e-10
FORWARD_TOL = 1e-6
LAMBDA_PERIOD = 9  # census depth supplying Lambda-points for the growth check


@dataclass(frozen=True)
class RunConfig:
    params: MapParams = DEFAULT_PARAMS
    suites: tuple = SUITES
    seed: int = 0
    n_returns: int = 10_000
    n_w_points: int = 10_000
    n_directions: int = 10
    n_growth_points: int = 10_000
    n_forward: int = 50  # periodic orbits checked by forward iteration
    max_iter: int = 1000
    j_max: int = 60
    max_period: int = 12
    lyapunov_n: int = 1000
    N: int = 10_000
    budget_seconds: float = 1800.0
    allow_invalid_params: bool = False
    out: str = "results"

    def check(self) -> "RunConfig":
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s): {', '.join(bad)}")
        for name in ("n_returns", "n_w_points", "n_directions", "n_growth_points",
                     "n_forward", "max_iter", "j_max", "max_period", "lyapunov_n", "N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.budget_seconds > 0:
            raise ConfigError("budget_seconds must be positive")
        return self


_RUN_KEYS = {f.name: f for f in fields(RunConfig) if f.name != "params"}
_PARAM_KEYS = set(DEFAULT_PARAMS.as_config())


def load_config(path) -> RunConfig:
    """Read a flat config holding map parameters and run settings."""
    data = load_flat(path)
    unknown = set(data) - _PARAM_KEYS - set(_RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    params = MapParams.from_config({k: v for k, v in data.items() if k in _PARAM_KEYS})
    run = {}
    for key, value in data.items():
        if key not in _RUN_KEYS:
            continue
        default = _RUN_KEYS[key].default
        if key == "suites":
            if not (isinstance(value, list) and all(isinstance(s, str) for s in value)):
                raise ConfigError("suites must be a list of names")
            value = tuple(value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{key} must be true or false")
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer")
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number")
            value = float(value)
        elif not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        run[key] = value
    return RunConfig(params=params, **run).check()


# --------------------------------------------------------------------------
# results


@dataclass
class SuiteResult:
    name: str
    status: str  # "pass", "fail" or "not run"
    checked: int = 0
    violations: int = 0
    worst_margin: float | None = None
    details: dict = field(default_factory=dict)
    seconds: float = 0.0  # console only

    def as_json(self) -> dict:
        return {"status": self.status, "checked": self.checked,
                "violations": self.violations,
                "worst_margin": _num(self.worst_margin), "details": self.details}


@dataclass
class Certificate:
    params: MapParams
    seed: int
    suites: dict
    thresholds: dict

    @property
    def passed(self) -> bool:
        return all(s.status == "pass" for s in self.suites.values() if s.status != "not run")

    def as_json(self) -> dict:
        return {
            "tool": "tangency-horseshoe",
            "version": __version__,
            "params": self.params.as_config(),
            "fingerprint": self.params.fingerprint(),
            "seed": self.seed,
            "thresholds": self.thresholds,
            "suites": {k: self.suites[k].as_json() for k in SUITES},
            "overall": "pass" if self.passed else "fail",
        }

    def dumps(self) -> str:
        return json.dumps(self.as_json(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _num(x):
    if x is None or isinstance(x, (int, str)):
        return x
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


class _Context:
    """State shared between suites of one run."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.params = cfg.params
        self.out = out
        self.deadline = time.monotonic() + cfg.budget_seconds
        self._census: Census | None = None
        self._returns = None

    def rng(self, suite: str) -> np.random.Generator:
        # one independent stream per suite, so suites can run alone
        return np.random.default_rng([self.cfg.seed, SUITES.index(suite)])

    def tick(self):
        if time.monotonic() > self.deadline:
            raise TimeoutError("runtime budget exceeded")

    def census(self, k: int):
        if self._census is None or self._census.max_period < k:
            self._census = census(k, self.params, deadline=self.deadline)
        return [o for o in self._census.orbits if o.period <= k]

    def returns(self):
        if self._returns is None:
            self._returns = sample_returns(self.rng("verify-returns"), self.cfg.n_returns,
                                           self.params, self.cfg.max_iter)
        return self._returns


# --------------------------------------------------------------------------
# suites


def _suite_validate(ctx: _Context) -> SuiteResult:
    errs = ctx.params.violations()
    return SuiteResult("validate", "fail" if errs else "pass", 1, len(errs), None,
                       {"violated": errs})


def _suite_returns(ctx: _Context) -> SuiteResult:
    recs = ctx.returns()
    rows, bad = [], 0
    worst = math.inf
    printed_fail = 0
    for r in recs:
        ok = r.return_ok and r.eta_ok and r.cone_bound_ok
        bad += not ok
        worst = min(worst, r.n - r.return_bound)
        used_ok = r.contraction < r.xi_bound_used
        printed_ok = r.contraction < r.xi_bound_printed
        printed_fail += not printed_ok
        rows.append((r.start.x, r.start.y, r.n, r.end.x, r.end.y, r.return_bound,
                     r.contraction, r.eta_bound, r.cone_bound, r.xi_bound_printed,
                     r.xi_bound_used, int(r.return_ok), int(r.eta_ok),
                     int(r.cone_bound_ok), int(printed_ok), int(used_ok)))
    rows.sort()
    _write_csv(ctx.out / "returns.csv",
               ("x", "y", "n", "x_n", "y_n", "return_bound", "contraction", "eta_bound",
                "cone_bound", "xi_bound_printed", "xi_bound_used", "return_ok", "eta_ok",
                "cone_bound_ok", "xi_printed_ok", "xi_used_ok"), rows)
    short = len(recs) < ctx.cfg.n_returns
    status = "fail" if bad or short or not recs else "pass"
    return SuiteResult("verify-returns", status, len(recs), bad,
                       worst if recs else None,
                       {"requested": ctx.cfg.n_returns,
                        "xi_bound_printed_failures": printed_fail})


def _suite_cones(ctx: _Context) -> SuiteResult:
    p = ctx.params
    recs = ctx.returns()
    rows, bad, worst = [], 0, math.inf
    combos: dict[str, int] = {}
    for i, r in enumerate(recs):
        if i % 512 == 0:
            ctx.tick()
        try:
            rep = check_return_inclusion(r.start, p, ctx.cfg.max_iter, record=r)
        except HorseshoeError as exc:  # capture, no return, tangency
            bad += 1
            worst = -math.inf
            rows.append((r.start.x, r.start.y, "", r.n, math.nan, type(exc).__name__))
            continue
        key = rep.start_class.kind.value + rep.end_class.kind.value
        combos[key] = combos.get(key, 0) + 1
        worst = min(worst, rep.margin)
        bad += not rep.passed
        rows.append((r.start.x, r.start.y, key, rep.n, rep.margin,
                     "pass" if rep.passed else "fail"))
    novo = novo_rows(p.c, p)
    novo_bad = [row for row in novo if not row.holds]
    rows.sort(key=lambda row: (row[0], row[1]))
    _write_csv(ctx.out / "cones.csv", ("x", "y", "classes", "n", "margin", "verdict"), rows)
    _write_csv(ctx.out / "novo.csv", ("eta", "lhs", "rhs", "holds"),
               [(r.eta, r.lhs, r.rhs, int(r.holds)) for r in novo])
    total_bad = bad + len(novo_bad)
    status = "fail" if total_bad or not recs else "pass"
    return SuiteResult("verify-cones", status, len(recs) + len(novo), total_bad,
                       worst if recs else None,
                       {"class_pairs": dict(sorted(combos.items())),
                        "novo_violations": len(novo_bad),
                        "novo_threshold": min_c_for_inclusion(p).threshold})


def _lambda_points(ctx: _Context, count: int):
    """Every census point outside W-tilde, with its cycle cone.

    The census deepens from period 9 until at least ``count`` points are
    available; the whole pool is used, so the verdict does not depend on the
    seed.
    """
    for k in range(LAMBDA_PERIOD, max(LAMBDA_PERIOD, ctx.cfg.max_period) + 1):
        pool = []
        for o in ctx.census(k):
            try:
                cones = cycle_cones(o.points, [r.code for r in o.word], ctx.params)
            except HorseshoeError:
                continue
            pool.extend((tuple(map(float, pt)), cn) for pt, cn in zip(o.points, cones)
                        if not in_W_tilde(pt, ctx.params, ctx.cfg.j_max))
        if len(pool) >= count:
            break
    return pool


def _suite_escape(ctx: _Context) -> SuiteResult:
    """Excursions from W (escape time and growth along them) and the one-step
    growth at Lambda-points outside W-tilde."""
    cfg, p = ctx.cfg, ctx.params
    sigma1 = thresholds(p).sigma1
    rows, bad, worst = [], 0, math.inf
    for i, pt in enumerate(sample_w_points(ctx.rng("verify-escape"), cfg.n_w_points, p)):
        if i % 512 == 0:
            ctx.tick()
        cone = cone_at(pt, p, history=(Region.R4,))
        recs = [excursion_growth(pt, v, p, cone=cone) for v in cone.directions(cfg.n_directions)]
        m = min(min(r.escape_n - r.bound, r.vertical_ratio - 1.0, r.half_rate_ratio - 1.0)
                for r in recs)
        ok = all(r.passed for r in recs)
        worst = min(worst, m)
        bad += not ok
        rows.append((pt.x, pt.y, recs[0].escape_n, recs[0].bound, m, int(ok)))
    rows.sort()
    _write_csv(ctx.out / "escape.csv", ("x", "y", "escape_n", "bound", "margin", "ok"), rows)

    growth_rows, g_bad, wide_bad, g_worst = [], 0, 0, math.inf
    half = Cone.standard().halfwidth
    pts = _lambda_points(ctx, cfg.n_growth_points)
    for pt, cone in pts:
        low = min(step_growth_outside(pt, v, p, cone=cone, j_max=cfg.j_max).ratio
                  for v in cone.directions(cfg.n_directions))
        ok = low > sigma1 * (1.0 - SLACK)
        g_worst = min(g_worst, low)
        g_bad += not ok
        wide_bad += not ok and cone.halfwidth > half
        growth_rows.append((pt[0], pt[1], cone.u_lo, cone.u_hi, low, int(ok)))
    growth_rows.sort()
    _write_csv(ctx.out / "growth.csv", ("x", "y", "u_lo", "u_hi", "min_growth", "ok"),
               growth_rows)
    short = len(pts) < cfg.n_growth_points
    status = "fail" if bad or g_bad or short else "pass"
    if pts:
        worst = min(worst, g_worst / sigma1 - 1.0)
    return SuiteResult("verify-escape", status, len(rows) + len(pts), bad + g_bad, worst,
                       {"w_points": len(rows), "escape_violations": bad,
                        "growth_points": len(pts), "growth_violations": g_bad,
                        "growth_violations_wide_cone": wide_bad,
                        "min_growth": _num(g_worst), "sigma1": sigma1})


def _check_known(ctx: _Context):
    out = {}
    for name, (pts, mults) in KNOWN_ORBITS.items():
        try:
            o = find_orbit(parse_word(name), ctx.params)
        except HorseshoeError:
            out[name] = False
            continue
        ok = all(abs(a - b) <= KNOWN_TOL for a, b in zip(map(abs, o.multipliers), mults))
        ok &= bool(np.all(np.abs(np.asarray(o.points) - np.asarray(pts)) <= KNOWN_TOL))
        out[name] = bool(ok)
    return out


def _suite_periodic(ctx: _Context) -> SuiteResult:
    th = thresholds(ctx.params)
    orbits = ctx.census(ctx.cfg.max_period)
    rows = []
    for o in orbits:
        ms, mu = o.multipliers
        rows.append((o.name, o.period, float(o.points[0][0]), float(o.points[0][1]),
                     ms, mu, o.residual))
    _write_csv(ctx.out / "orbits.csv",
               ("word", "period", "x", "y", "mu_s", "mu_u", "residual"), rows)
    known = _check_known(ctx) if ctx.params == DEFAULT_PARAMS else {}
    big = [o.name for o in orbits if not o.residual < RESIDUAL_TOL]
    details = {"max_period": ctx.cfg.max_period, "orbits": len(orbits),
               "known_orbits": known, "residual_failures": len(big)}
    if not orbits:
        return SuiteResult("periodic", "fail", 0, 1, None, details)
    cert = certify_uniform_hyperbolicity(orbits, th.sigma_tilde, th.lambda_tilde)
    details.update(sigma_cert=cert.sigma_cert, lambda_cert=cert.lambda_cert,
                   max_residual=max(o.residual for o in orbits),
                   by_period={str(k): v for k, v in ctx._census.by_period().items()
                              if k <= ctx.cfg.max_period})
    nbad = len(cert.failures) + len(big) + sum(not v for v in known.values())
    worst = min(min(r.margin_u for r in cert.rows), min(r.margin_s for r in cert.rows))
    return SuiteResult("periodic", "fail" if nbad else "pass", len(orbits), nbad, worst, details)


def _suite_lyapunov(ctx: _Context) -> SuiteResult:
    cfg, p = ctx.cfg, ctx.params
    th = thresholds(p)
    lo, hi = th.gap
    orbits = ctx.census(cfg.max_period)
    rows, bad = [], 0
    worst = math.inf
    chi_u_min, chi_s_max = math.inf, -math.inf
    for o in orbits:
        e = exponents_periodic(o)
        ok = gap_check(e, th)
        bad += not ok
        worst = min(worst, e.chi_u - hi, lo - e.chi_s)
        chi_u_min, chi_s_max = min(chi_u_min, e.chi_u), max(chi_s_max, e.chi_s)
        rows.append((o.name, o.period, e.chi_s, e.chi_u, int(ok)))
    _write_csv(ctx.out / "exponents.csv", ("word", "period", "chi_s", "chi_u", "outside_gap"), rows)
    # forward finite-time exponents against the exact ones
    rng = ctx.rng("lyapunov")
    pick = orbits
    if len(orbits) > cfg.n_forward:
        pick = [orbits[i] for i in np.sort(rng.choice(len(orbits), cfg.n_forward, replace=False))]
    fwd_err, fwd_bad = 0.0, 0
    for o in pick:
        ctx.tick()
        n = o.period * max(1, math.ceil(cfg.lyapunov_n / o.period))
        exact = exponents_periodic(o)
        try:
            est = exponents_forward(o.points[0], n, p, orbit=o, th=th)
        except TangencyOrbit:
            continue
        err = max(abs(est.chi_u - exact.chi_u), abs(est.chi_s - exact.chi_s))
        fwd_err = max(fwd_err, err)
        fwd_bad += not err <= FORWARD_TOL
    nbad = bad + fwd_bad
    details = {"census_size": len(orbits), "min_chi_u": _num(chi_u_min),
               "max_chi_s": _num(chi_s_max), "gap": [lo, hi],
               "forward_checked": len(pick), "forward_max_error": fwd_err}
    status = "fail" if nbad or not orbits else "pass"
    return SuiteResult("lyapunov", status, len(orbits) + len(pick), nbad,
                       worst if orbits else None, details)


def _suite_nonuniformity(ctx: _Context) -> SuiteResult:
    p = ctx.params
    pts = tangency_approach(p)
    prof = nonuniformity_profile(pts, ctx.cfg.N, p, sources=[Region.R4] * len(pts))
    values = [r.C_x for r in prof]
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    reaches = min(values) < 0.01
    _write_csv(ctx.out / "nonuniformity.csv",
               ("j", "x", "y", "distance", "C_x", "n_min", "horizon"),
               [(j, r.point[0], r.point[1], abs(r.point[0] - p.q), r.C_x, r.n_min, r.horizon)
                for j, r in enumerate(prof, start=1)])
    ok = decreasing and reaches
    return SuiteResult("nonuniformity", "pass" if ok else "fail", len(prof), int(not ok),
                       min(values), {"C_x": values, "strictly_decreasing": decreasing})


_RUNNERS: dict[str, Callable[[_Context], SuiteResult]] = {
    "validate": _suite_validate,
    "verify-cones": _suite_cones,
    "verify-returns": _suite_returns,
    "verify-escape": _suite_escape,
    "periodic": _suite_periodic,
    "lyapunov": _suite_lyapunov,
    "nonuniformity": _suite_nonuniformity,
}


def run(cfg: RunConfig, echo: Callable[[str], None] | None = None) -> Certificate:
    """Run the selected suites and write their files plus ``certificate.json``.

    Raises InvalidParams unless the parameters validate or the override is
    set, and TimeoutError once the runtime budget is spent.
    """
    cfg.check()
    if not cfg.allow_invalid_params and cfg.params.violations():
        raise InvalidParams(cfg.params.violations())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(cfg, out)
    results = {}
    for name in SUITES:
        if name not in cfg.suites:
            results[name] = SuiteResult(name, "not run")
            continue
        t0 = time.perf_counter()
        res = _RUNNERS[name](ctx)
        res.seconds = time.perf_counter() - t0
        results[name] = res
        if echo:
            echo(f"  {name:<15} {res.status:<5} checked={res.checked} "
                 f"violations={res.violations} ({res.seconds:.1f}s)")
    th = thresholds(cfg.params)
    cert = Certificate(cfg.params, cfg.seed, results,
                       {"sigma1": th.sigma1, "sigma_tilde": th.sigma_tilde,
                        "lambda_tilde": th.lambda_tilde, "rho_s": th.rho_s,
                        "gap": list(th.gap)})
    (out / "certificate.json").write_text(cert.dumps(), encoding="utf-8")
    return cert


def summary_table(cert: Certificate) -> str:
    lines = [f"{'suite':<15} {'status':<8} {'checked':>8} {'violations':>10}  worst margin"]
    for name in SUITES:
        s = cert.suites[name]
        m = "" if s.worst_margin is None else f"{s.worst_margin:.6g}"
        lines.append(f"{name:<15} {s.status:<8} {s.checked:>8} {s.violations:>10}  {m}")
    lines.append(f"overall: {'PASS' if cert.passed else 'FAIL'}  ({cert.params.fingerprint()})")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# plot data


def emit_plot_data(cfg: RunConfig, max_period: int = 8, grid: int = 41) -> list[Path]:
    """Write the plot datasets (one CSV per dataset) and return their paths."""
    cfg.check()
    if not cfg.allow_invalid_params and cfg.params.violations():
        raise InvalidParams(cfg.params.violations())
    p = cfg.params
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, header, rows):
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    orbits = census(min(max_period, cfg.max_period), p).orbits
    emit("lambda_cloud.csv", ("word", "x", "y"),
         [(o.name, float(pt[0]) + 0.0, float(pt[1]) + 0.0) for o in orbits for pt in o.points])

    rows = []
    xs = np.linspace(0.0, 1.0, grid)
    for r in DOMAIN:
        lo, hi = p.strip(r)
        for y in np.linspace(lo, hi, grid):
            for x in xs:
                u, v = branch_step(r, float(x), float(y), p)
                rows.append((r.value, float(x), float(y), u, v))
    emit("region_images.csv", ("region", "x", "y", "image_x", "image_y"), rows)

    rows = []
    for x0 in np.linspace(0.0, 1.0, 11):
        for y in np.linspace(p.y4a, p.y4b, 4 * grid + 1):
            u, v = branch_step(Region.R4, float(x0), float(y), p)
            rows.append((float(x0), u, v))
    emit("fold_parabolas.csv", ("x0", "x", "y"), rows)

    rows = []
    for o in orbits:
        try:
            cones = cycle_cones(o.points, [r.code for r in o.word], p)
        except HorseshoeError:
            continue
        for i, (pt, cn) in enumerate(zip(o.points, cones)):
            src = o.word[i - 1]
            kind = lrv_class(pt, p, source=src).kind.value
            ax, ay = cn.axis()
            rows.append((o.name, float(pt[0]), float(pt[1]), kind, cn.u_lo, cn.u_hi,
                         float(ax), float(ay)))
    emit("cone_axes.csv", ("word", "x", "y", "class", "u_lo", "u_hi", "axis_x", "axis_y"), rows)

    pts = tangency_approach(p)
    prof = nonuniformity_profile(pts, cfg.N, p, sources=[Region.R4] * len(pts))
    emit("nonuniformity.csv", ("j", "x", "y", "distance", "C_x", "n_min", "horizon"),
         [(j, r.point[0], r.point[1], abs(r.point[0] - p.q), r.C_x, r.n_min, r.horizon)
          for j, r in enumerate(prof, start=1)])
    return written


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None}).check()
