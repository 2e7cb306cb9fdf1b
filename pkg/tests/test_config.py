import json

import pytest

from lowerbound_lab.config import MODE_RATIONAL, ExperimentConfig
from lowerbound_lab.const import DEFAULT_HORIZON, DEFAULT_TOL
from lowerbound_lab.exception import ConfigError


def test_defaults():
    cfg = ExperimentConfig.from_dict({"instance": "example-4-3"})
    assert cfg.tol == DEFAULT_TOL
    assert cfg.resolved_horizon == DEFAULT_HORIZON
    assert not cfg.exact
    assert cfg.tolerances()["shrink"] == cfg.shrink


def test_from_file(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"instance": "example-4-3", "dim": 32, "horizon": 24, "mode": "rational"}))
    cfg = ExperimentConfig.from_file(str(path))
    assert cfg.dim == 32
    assert cfg.mode == MODE_RATIONAL and cfg.exact


def test_override_skips_none():
    cfg = ExperimentConfig.from_dict({"instance": "collapse", "horizon": 50})
    out = cfg.override(horizon=None, tol=1e-6)
    assert out.horizon == 50
    assert out.tol == 1e-6
    assert cfg.tol == DEFAULT_TOL


@pytest.mark.parametrize("data", [
    {},
    {"instance": 3},
    {"instance": "x", "bogus": 1},
    {"instance": "x", "tol": 0},
    {"instance": "x", "horizon": 1},
    {"instance": "x", "horizon": 2.5},
    {"instance": "x", "dim": 4},
    {"instance": "x", "p": 0.5},
    {"instance": "x", "mode": "decimal"},
    {"instance": "x", "format": "xml"},
    {"instance": "x", "eps": 0},
    {"instance": "x", "shrink": 1.5},
    {"instance": "x", "steps": [1.0, -1.0]},
    {"instance": "x", "t0": 0},
    {"instance": "x", "m0": 0},
    {"instance": "x", "checks": "ding"},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_config_must_be_an_object():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(["example-4-3"])


def test_inline_instance_accepted():
    cfg = ExperimentConfig.from_dict({"instance": {"kind": "finite", "sigma": [1, 0]}})
    assert cfg.to_dict()["instance"]["kind"] == "finite"
