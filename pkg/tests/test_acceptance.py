"""Acceptance criteria at their stated tolerances.

One default run of every suite (about five minutes, most of it the period-12
census) is shared by the criteria; each test prints a single PASS/FAIL line.
"""
import csv
import json
import math

import numpy as np
import pytest

from tangency_horseshoe.map_core import DEFAULT_PARAMS, DOMAIN, MapParams, Region, branch_jacobian, step
from tangency_horseshoe.periodic_orbits import enumerate_itineraries, find_orbits
from tangency_horseshoe.report import RunConfig, run


@pytest.fixture(scope="module")
def full(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    cert = run(RunConfig(out=str(out)))
    return cert, out


@pytest.fixture
def verdict(capsys):
    def say(number, ok, text):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {text}")
        assert ok, text
    return say


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_criterion_1_return_times(full, verdict):
    cert, out = full
    rows = _rows(out / "returns.csv")
    bad = sum(r["return_ok"] != "1" for r in rows)
    # returns are sampled inside the cone suite, so count both timings
    secs = cert.suites["verify-returns"].seconds + cert.suites["verify-cones"].seconds
    verdict(1, len(rows) >= 10_000 and bad == 0 and secs < 60,
            f"{len(rows)} returns, {bad} violations, {secs:.1f}s")


def test_criterion_2_cone_inclusion(full, verdict):
    cert, out = full
    s = cert.suites["verify-cones"]
    incl = _rows(out / "cones.csv")
    margins = [float(r["margin"]) for r in incl if r["margin"] not in ("", "nan")]
    strict = len(margins) == len(incl) and min(margins) > 0
    bound_bad = sum(r["cone_bound_ok"] != "1" for r in _rows(out / "returns.csv"))
    ok = s.status == "pass" and len(incl) >= 10_000 and strict and bound_bad == 0 and s.seconds < 120
    verdict(2, ok, f"{len(incl)} returns, min margin {min(margins):.3g}, "
                   f"{bound_bad} bound violations, {s.seconds:.1f}s")


def test_criterion_3_novo_threshold(tmp_path, verdict):
    found = {}
    for c in (2.24, 2.26):
        cfg = RunConfig(params=MapParams(c=c), suites=("verify-cones",), n_returns=200,
                        allow_invalid_params=True, out=str(tmp_path / str(c)))
        run(cfg)
        bad = [float(r["eta"]) for r in _rows(tmp_path / str(c) / "novo.csv") if r["holds"] == "0"]
        found[c] = bad
    ok = bool(found[2.24]) and max(found[2.24]) == 1.0 and not found[2.26]
    verdict(3, ok, f"c=2.24: {len(found[2.24])} violations (largest eta "
                   f"{max(found[2.24], default=math.nan)}), c=2.26: {len(found[2.26])}")


def test_criterion_4_escape(full, verdict):
    cert, _ = full
    s = cert.suites["verify-escape"]
    d = s.details
    ok = d["w_points"] >= 10_000 and d["escape_violations"] == 0 and s.seconds < 60
    verdict(4, ok, f"{d['w_points']} W-points x 10 directions, "
                   f"{d['escape_violations']} violations, {s.seconds:.1f}s")


def test_criterion_5_growth_outside(full, verdict):
    cert, _ = full
    d = cert.suites["verify-escape"].details
    ok = d["growth_points"] >= 10_000 and d["growth_violations"] == 0
    verdict(5, ok, f"{d['growth_points']} points, {d['growth_violations']} below "
                   f"sigma1={d['sigma1']:.6f} (min growth {d['min_growth']:.6f}; "
                   f"{d['growth_violations_wide_cone']} at cones wider than the standard one)")


def test_criterion_6_census_gap(full, verdict):
    cert, _ = full
    s = cert.suites["periodic"]
    ly = cert.suites["lyapunov"].details
    d = s.details
    ok = (s.status == "pass" and d["residual_failures"] == 0 and d["max_residual"] < 1e-10
          and d["sigma_cert"] >= 2 and d["lambda_cert"] <= 0.5 and s.seconds < 600
          and ly["min_chi_u"] >= math.log(2) and ly["max_chi_s"] <= -math.log(2))
    verdict(6, ok, f"{d['orbits']} orbits to period 12, max residual {d['max_residual']:.2g}, "
                   f"min |mu_u|^(1/k)={d['sigma_cert']:.6f}, max |mu_s|^(1/k)={d['lambda_cert']:.6f}, "
                   f"{s.seconds:.0f}s")


def test_criterion_7_known_orbits(full, verdict):
    cert, _ = full
    known = cert.suites["periodic"].details["known_orbits"]
    verdict(7, len(known) == 3 and all(known.values()), f"{known}")


def test_criterion_8_nonuniformity(full, verdict):
    cert, _ = full
    s = cert.suites["nonuniformity"]
    vals = s.details["C_x"]
    ok = s.details["strictly_decreasing"] and min(vals) < 0.01 and cert.suites["periodic"].status == "pass"
    verdict(8, ok, "C_x = " + ", ".join(f"{v:.3g}" for v in vals))


def test_criterion_9_oracles(full, verdict, rng):
    cert, _ = full
    # affine orbits: Newton against the closed form
    affine_err = 0.0
    for w in enumerate_itineraries(8):
        if Region.R4 in w:
            continue
        closed, newton = find_orbits(w), find_orbits(w, newton=True)
        assert len(closed) == len(newton)
        for a, b in zip(closed, newton):
            affine_err = max(affine_err, float(np.abs(a.points - b.points).max()))
    # finite-time exponents on the sampled census orbits
    fwd_err = cert.suites["lyapunov"].details["forward_max_error"]
    # Jacobians against central differences
    h, jac_err = 1e-6, 0.0
    for r in DOMAIN:
        lo, hi = DEFAULT_PARAMS.strip(r)
        for _ in range(250):
            x, y = rng.uniform(h, 1 - h), rng.uniform(lo + h, hi - h)
            fd = np.column_stack([(np.array(step((x + dx, y + dy))) - np.array(step((x - dx, y - dy)))) / (2 * h)
                                  for dx, dy in ((h, 0.0), (0.0, h))])
            J = branch_jacobian(r, x, y)
            jac_err = max(jac_err, float(np.abs(fd - J).max() / max(1.0, np.abs(J).max())))
    ok = affine_err <= 1e-12 and fwd_err <= 1e-6 and jac_err <= 1e-5
    verdict(9, ok, f"affine {affine_err:.2g}, exponents {fwd_err:.2g}, jacobian {jac_err:.2g}")


def test_certificate_matches_cli_schema(full):
    cert, out = full
    data = json.loads((out / "certificate.json").read_text())
    assert data["overall"] == ("pass" if cert.passed else "fail")
    assert data["suites"]["periodic"]["details"]["orbits"] == cert.suites["periodic"].details["orbits"]
