import json
import math
import os

import numpy as np
import pytest

from magstrip.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    RunConfig,
    main,
)
from magstrip.errors import InvalidSpecError


def write_config(tmp_path, doc, name="config.json"):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


# ------------------------------------------------------------------ calpha


def test_calpha_prints_half(capsys):
    assert main(["calpha", "--alpha", "1.0"]) == EXIT_OK
    out = capsys.readouterr().out.strip()
    assert abs(float(out) - 0.5) <= 1e-10


def test_calpha_rejects_two(capsys):
    assert main(["calpha", "--alpha", "2.0"]) == EXIT_VALIDATION


# ------------------------------------------------------------------- bands


def test_bands_free_strip_thresholds(tmp_path, capsys):
    out = str(tmp_path / "run")
    code = main(["bands", "--output", out, "--band", "3"])
    assert code == EXIT_OK
    with open(os.path.join(out, "thresholds.csv")) as fh:
        assert fh.readline().strip() == "j,threshold,mu"
        j, th, mu = fh.readline().strip().split(",")
    assert int(j) == 3
    assert float(th) == pytest.approx((3 * math.pi / 2) ** 2, rel=1e-9)
    assert float(mu) == pytest.approx(1.0, abs=1e-6)


def test_bands_outputs_are_deterministic(tmp_path):
    doc = {"b": 0.0, "L": 1.0, "grid": {"n": 256, "n_k": 21, "k_max": 2.0},
           "bands": [1]}
    cfg = write_config(tmp_path, doc)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["bands", "--config", cfg, "--output", out1]) == EXIT_OK
    assert main(["bands", "--config", cfg, "--output", out2]) == EXIT_OK
    assert read(os.path.join(out1, "band_1.csv")) == read(os.path.join(out2, "band_1.csv"))
    assert read(os.path.join(out1, "thresholds.csv")) == read(os.path.join(out2, "thresholds.csv"))


def test_band_csv_roundtrips_full_precision(tmp_path):
    doc = {"b": 1.3, "L": 0.9, "grid": {"n": 256, "n_k": 21, "k_max": 2.0},
           "bands": [1]}
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "run")
    assert main(["bands", "--config", cfg, "--output", out]) == EXIT_OK
    from magstrip.bands import sample_bands
    band = sample_bands(1.3, 0.9, [1], k_max=2.0, n_k=21, n_grid=256)[0]
    rows = open(os.path.join(out, "band_1.csv")).read().splitlines()[1:]
    parsed = np.array([[float(v) for v in r.split(",")] for r in rows])
    assert np.array_equal(parsed[:, 0], band.k_samples)
    assert np.array_equal(parsed[:, 1], band.E_samples)
    assert np.array_equal(parsed[:, 2], band.dE_samples)


# --------------------------------------------------------------- effective


def test_effective_emits_omega_table(tmp_path):
    doc = {
        "b": 0.0, "L": 1.0, "grid": {"n": 256, "n_k": 21, "k_max": 2.0},
        "bands": [1],
        "potential": {"alpha": 1.5, "terms": [
            {"c": -2.0, "x_profile": {"name": "constant", "params": {}},
             "y_profile": {"name": "power_tail", "params": {"exponent": 1.5}}}]},
        "ssf": {"epsilon": 0.5},
    }
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "run")
    assert main(["effective", "--config", cfg, "--output", out]) == EXIT_OK
    table = open(os.path.join(out, "omega_table.csv")).read().splitlines()
    assert table[0] == "j,epsilon,omega_minus,omega_plus"
    rows = {float(r.split(",")[1]): r.split(",") for r in table[1:]}
    assert float(rows[0.0][2]) == pytest.approx(-2.0)
    assert float(rows[0.5][2]) == pytest.approx(-2.0 / 1.5)
    files = sorted(os.listdir(out))
    assert any(f.startswith("effective_1_eps") for f in files)


# --------------------------------------------------------------------- ssf


def test_ssf_emits_curves(tmp_path):
    doc = {
        "b": 0.0, "L": 1.0, "grid": {"n": 256, "n_k": 21, "k_max": 2.0},
        "bands": [1],
        "potential": {"alpha": 1.5, "terms": [
            {"c": -1.0, "x_profile": {"name": "constant", "params": {}},
             "y_profile": {"name": "power_tail", "params": {"exponent": 1.5}}}]},
        "ssf": {"lambda_lo": 1e-3, "lambda_hi": 1e-2, "n_lambda": 4, "epsilon": 0.0},
    }
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "run")
    assert main(["ssf", "--config", cfg, "--output", out]) == EXIT_OK
    rows = open(os.path.join(out, "ssf_1.csv")).read().splitlines()
    assert rows[0] == "lambda,xi,method"
    assert len(rows) == 9  # 4 below + 4 above
    lams = [float(r.split(",")[0]) for r in rows[1:]]
    assert lams == sorted(lams)
    for r in rows[1:]:
        lam, xi, method = r.split(",")
        assert method == "phase-shift"
        if float(lam) < 0:
            assert float(xi) == int(float(xi)) and float(xi) <= 0


# ------------------------------------------------------------------ mourre


def test_mourre_report(tmp_path):
    doc = {"b": 0.0, "L": 1.0, "grid": {"n": 256, "n_k": 81, "k_max": None},
           "bands": [1, 2, 3]}
    cfg = write_config(tmp_path, doc)
    out = str(tmp_path / "run")
    e1, e2 = (math.pi / 2) ** 2, math.pi**2
    energy = 0.5 * (e1 + e2)
    assert main(["mourre", "--config", cfg, "--output", out,
                 "--energy", str(energy)]) == EXIT_OK
    doc = json.load(open(os.path.join(out, "mourre.json")))
    assert doc["n"] == 1
    assert doc["preimages_disjoint"] is True
    assert doc["mourre_constant"] == pytest.approx(
        2 * (energy - doc["delta"] - e1), abs=1e-5)
    assert "generated_utc" in doc


def test_mourre_at_threshold_is_validation_error(tmp_path):
    doc = {"b": 0.0, "L": 1.0, "grid": {"n": 256, "n_k": 81, "k_max": None},
           "bands": [1, 2, 3]}
    cfg = write_config(tmp_path, doc)
    code = main(["mourre", "--config", cfg, "--output", str(tmp_path / "x"),
                 "--energy", str(math.pi**2)])
    assert code == EXIT_VALIDATION


# ------------------------------------------------------------------ config


def test_config_parse_error(tmp_path):
    path = os.path.join(tmp_path, "broken.json")
    with open(path, "w") as fh:
        fh.write("{not json")
    assert main(["bands", "--config", path]) == EXIT_CONFIG
    assert main(["bands", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


@pytest.mark.parametrize("doc,field", [
    ({"b": -1.0}, "b"),
    ({"L": 0.0}, "L"),
    ({"grid": {"n": 2}}, "grid.n"),
    ({"grid": {"n_k": 6}}, "grid.n_k"),
    ({"bands": []}, "bands"),
    ({"bands": [0]}, "bands"),
    ({"ssf": {"lambda_lo": 1e-2, "lambda_hi": 1e-3}}, "ssf.lambda_lo"),
    ({"ssf": {"epsilon": 1.5}}, "ssf.epsilon"),
])
def test_config_validation_names_field(tmp_path, capsys, doc, field):
    cfg = write_config(tmp_path, doc)
    assert main(["bands", "--config", cfg]) == EXIT_VALIDATION
    assert field in capsys.readouterr().err


def test_runconfig_validate_direct():
    cfg = RunConfig()
    cfg.validate()
    cfg.n_k = 10
    with pytest.raises(InvalidSpecError):
        cfg.validate()


def test_cli_overrides(tmp_path):
    out = str(tmp_path / "run")
    assert main(["bands", "--output", out, "--b", "0.0", "--L", "2.0",
                 "--band", "1"]) == EXIT_OK
    with open(os.path.join(out, "thresholds.csv")) as fh:
        fh.readline()
        j, th, _ = fh.readline().split(",")
    assert float(th) == pytest.approx((math.pi / 4) ** 2, rel=1e-8)
