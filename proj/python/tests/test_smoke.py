"""Smoke tests for the Python bindings: wiring, shapes, and a few cheap
numerical identities. The heavy validation lives in the C++ suites."""

import json
import math

import pytest

import xvabsde as x


@pytest.fixture(scope="module")
def config():
    c = x.reference_config()
    c.n_paths = 4000
    c.n_steps = 25
    return c


def test_version_string():
    assert x.__version__.count(".") == 2


def test_config_round_trip(config):
    text = json.dumps(config.json)
    back = x.load_config(text)
    assert back.json == config.json


def test_validate_reference(config):
    report = x.validate(config)
    assert report["valid"]
    assert report["flag_44"]
    assert report["violations"] == []


def test_validate_flags_bad_spread(config):
    doc = config.json
    doc["market"]["r_f"]["values"] = [{"r_minus": 0.02, "r_plus": 0.03}]
    report = x.validate(x.load_config(json.dumps(doc)))
    assert not report["valid"]
    assert any(v["code"] == "funding_spread" for v in report["violations"])


def test_price_interval(config):
    bounds = x.price(config)
    assert bounds["p_lower"] <= bounds["p_upper"]
    assert bounds["se_lower"] > 0.0
    pde = x.price(config, engine="pde")
    assert abs(pde["p_upper"] - bounds["p_upper"]) < 10 * bounds["se_upper"] + 0.2


def test_xva_identity(config):
    rep = x.xva(config)
    total = rep["v0"] + rep["va1"] + rep["va2"] + rep["va3"] + rep["va4"] + rep["va5_plus"]
    assert rep["total_plus"] == pytest.approx(total, abs=0.0)
    assert math.isfinite(rep["total_minus"])


def test_check_noarb_reference(config):
    rep = x.check_noarb(config)
    assert rep["all_pass"]
    margins = {c["id"]: c["worst_margin"] for c in rep["conditions"]}
    assert margins["48-h1"] == pytest.approx(0.0275, abs=1e-12)


def test_ordering_chain(config):
    rep = x.ordering(config)
    assert rep["chain_ok"]
    assert rep["y_minus"] <= rep["y_plus"]


def test_sweep_config_error(config):
    with pytest.raises(ValueError):
        x.sweep(config, [], order=0)


def test_replicate_runs(config):
    doc = config.json
    for key in ("r_f", "r_r", "r_col"):
        doc["market"][key]["values"] = [{"r_minus": 0.02, "r_plus": 0.02}]
    doc["market"]["r_D"]["values"] = [0.02]
    doc["contract"]["closeout"] = {"L_I": 0.0, "L_C": 0.0, "alpha": 1.0}
    c = x.load_config(json.dumps(doc))
    c.n_steps = 50
    rep = x.replicate(c, eval_paths=500, engine="pde")
    assert rep["rel_error"] < 0.05
    assert rep["y_start"] == pytest.approx(8.916, abs=0.02)


def test_determinism_across_workers(config):
    x.set_max_workers(1)
    a = x.xva(config)
    x.set_max_workers(8)
    b = x.xva(config)
    x.set_max_workers(0)
    assert a == b
