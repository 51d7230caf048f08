import csv
import json

import numpy as np
import pytest

from tangency_horseshoe.cli import main
from tangency_horseshoe.errors import ConfigError
from tangency_horseshoe.report import SUITES, load_config

SMALL = """\
n_returns = 300
n_w_points = 200
n_directions = 4
n_growth_points = 200
n_forward = 5
max_period = 5
lyapunov_n = 200
N = 500
"""


def _cfg(tmp_path, extra=""):
    path = tmp_path / "run.toml"
    path.write_text(SMALL + extra)
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_load_config_mixes_params_and_run_keys(tmp_path):
    cfg = load_config(_cfg(tmp_path, "lambda = 0.2\nsigma = 5\nseed = 7\n"))
    assert cfg.params.lam == 0.2 and cfg.params.sigma == 5.0
    assert cfg.seed == 7 and cfg.n_returns == 300


@pytest.mark.parametrize("text", [
    "bogus = 1\n",
    "n_returns = 0\n",
    "n_returns = 1.5\n",
    "suites = ['nope']\n",
    "allow_invalid_params = 1\n",
    "budget_seconds = -1\n",
    "sigma = \n",
])
def test_bad_config_rejected(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_cfg(tmp_path, text))


@pytest.mark.parametrize("text", ["bogus = 1\n", "lambda = [\n"])
def test_bad_config_exit_2(tmp_path, text):
    assert main(["verify", "--config", _cfg(tmp_path, text), "--out", str(tmp_path / "o")]) == 2


def test_invalid_params_exit_2_unless_overridden(tmp_path):
    cfg = _cfg(tmp_path, "c = 1\n")
    out = str(tmp_path / "o")
    assert main(["verify", "--config", cfg, "--out", out, "--suite", "validate"]) == 2
    assert main(["verify", "--config", cfg, "--out", out, "--suite", "validate",
                 "--allow-invalid-params"]) == 1
    cert = json.loads((tmp_path / "o" / "certificate.json").read_text())
    assert cert["suites"]["validate"]["status"] == "fail"


def test_passing_subset_exit_0_and_not_run(tmp_path):
    out = tmp_path / "o"
    rc = main(["verify", "--config", _cfg(tmp_path), "--out", str(out),
               "--suite", "validate", "--suite", "verify-returns", "--suite", "nonuniformity"])
    assert rc == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["overall"] == "pass"
    assert set(cert["suites"]) == set(SUITES)
    assert cert["suites"]["periodic"]["status"] == "not run"
    assert {"tool", "version", "params", "fingerprint", "seed", "thresholds"} <= set(cert)
    assert (out / "returns.csv").exists() and (out / "nonuniformity.csv").exists()


def test_budget_exhausted_exit_3(tmp_path):
    cfg = _cfg(tmp_path, "budget_seconds = 1e-9\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o"), "--suite", "periodic"]) == 3


def test_certificate_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path)
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(["verify", "--config", cfg, "--out", str(out), "--seed", "3",
              "--suite", "verify-cones", "--suite", "verify-returns", "--suite", "lyapunov"])
        blobs.append((out / "certificate.json").read_bytes())
    assert blobs[0] == blobs[1]
    out = tmp_path / "c"
    main(["verify", "--config", cfg, "--out", str(out), "--seed", "4", "--suite", "verify-returns"])
    assert json.loads((out / "certificate.json").read_text())["seed"] == 4


def test_census_csv(capsys):
    assert main(["census", "--max-period", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "word,period,x,y,mu_s,mu_u,residual"
    words = {ln.split(",")[0] for ln in lines[1:]}
    assert {"R1", "R5", "R1R3"} <= words
    assert main(["census", "--max-period", "0"]) == 2


@pytest.fixture(scope="module")
def plot_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("plots")
    assert main(["plot-data", "--out", str(out)]) == 0
    return out


def test_plot_fold_parabolas(plot_dir):
    rows = _rows(plot_dir / "fold_parabolas.csv")
    x0, x, y = (np.array([float(r[k]) for r in rows]) for k in ("x0", "x", "y"))
    np.testing.assert_allclose(y, 16.0 * (x - 0.72) ** 2 - 0.25 * x0, atol=1e-12)


def test_plot_lambda_cloud_has_fixed_points(plot_dir):
    pts = {(float(r["x"]), float(r["y"])) for r in _rows(plot_dir / "lambda_cloud.csv")}
    assert (0.0, 0.0) in pts and (1.0, 1.0) in pts


def test_plot_cone_axes(plot_dir):
    rows = _rows(plot_dir / "cone_axes.csv")
    assert rows
    for r in rows:
        assert float(r["u_lo"]) <= float(r["u_hi"])
        if r["class"] == "L":
            assert float(r["axis_x"]) == 0.0 and abs(float(r["axis_y"])) == 1.0


def test_plot_other_files(plot_dir):
    assert len(_rows(plot_dir / "region_images.csv")) == 4 * 41 * 41
    vals = [float(r["C_x"]) for r in _rows(plot_dir / "nonuniformity.csv")]
    assert all(b < a for a, b in zip(vals, vals[1:]))
