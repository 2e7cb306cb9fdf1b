import json
import os

import pytest

from lowerbound_lab import gallery
from lowerbound_lab.config import ExperimentConfig
from lowerbound_lab.const import EXIT_INAPPLICABLE, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION
from lowerbound_lab.report import ERROR, HYPOTHESIS_FAILED, NOT_CONVERGED
from lowerbound_lab.runner import CHECKERS, Experiment, ExperimentRunner, exit_code, run_experiment, write_result
from lowerbound_lab.serialize import unpack


def config(**kwargs):
    return ExperimentConfig.from_dict(kwargs)


@pytest.mark.parametrize("name", gallery.names())
def test_gallery_expectations_reproduce(name):
    result = run_experiment(config(instance=name))
    assert result["error"] is None
    assert [r["check"] for r in result["checks"]] == list(gallery.get(name).expect)
    assert all(r["matched"] for r in result["checks"]), result["checks"]
    assert result["exit_code"] == EXIT_OK


def test_every_expected_check_exists():
    for name in gallery.names():
        assert set(gallery.get(name).expect) <= set(CHECKERS)


def test_unknown_instance_is_a_usage_error():
    result = run_experiment(config(instance="no-such-instance"))
    assert result["status"] == ERROR
    assert result["exit_code"] == EXIT_USAGE


def test_unknown_check_is_a_usage_error():
    result = run_experiment(config(instance="collapse", checks=["telepathy"]))
    assert result["exit_code"] == EXIT_USAGE


def test_mismatch_against_an_expectation_fails():
    # a horizon this short cannot resolve the collapse chain
    result = run_experiment(config(instance="collapse", checks=["strong-convergence"], horizon=10))
    assert result["checks"][0]["status"] == NOT_CONVERGED
    assert result["checks"][0]["matched"] is False
    assert result["exit_code"] == EXIT_VIOLATION


def test_inline_instance_without_expectations():
    result = run_experiment(config(instance={"kind": "finite", "sigma": [1, 2, 0]},
                                   checks=["operator-norm", "adjoint-homomorphism"], horizon=30))
    assert result["instance"] == "inline"
    statuses = [r["status"] for r in result["checks"]]
    assert statuses == [NOT_CONVERGED, HYPOTHESIS_FAILED]
    assert result["exit_code"] == EXIT_INAPPLICABLE


def test_horizon_resolution():
    cfg = config(instance="example-4-3", dim=32)
    entry = gallery.get("example-4-3")
    assert Experiment(cfg, gallery.build("example-4-3", cfg), entry).horizon == 24
    cfg = config(instance="doubling-ulam")
    assert Experiment(cfg, gallery.build("doubling-ulam"), gallery.get("doubling-ulam")).horizon == 7
    cfg = config(instance="example-4-3", dim=32, horizon=30)
    ex = Experiment(cfg, gallery.build("example-4-3", cfg), entry)
    assert ex.horizon == 30 and ex.approximate


def test_vector_specs():
    cfg = config(instance="collapse", dim=10)
    ex = Experiment(cfg, gallery.build("collapse", cfg), gallery.get("collapse"))
    assert ex.vector(3) == ex.S.space.unit(3)
    assert ex.vector({"vertex": 2, "scale": 0.5}) == ex.S.space.unit(2).scale(0.5)
    assert ex.vector("zero").is_zero()
    assert ex.vector([0] * 10).is_zero()


def test_write_result_json_and_traces(tmp_path):
    cfg = config(instance="example-4-3", dim=16, checks=["strong-convergence"], out=str(tmp_path))
    result = run_experiment(cfg)
    paths = write_result(result, cfg)
    assert sorted(os.path.basename(p) for p in paths) == ["example-4-3.json", "example-4-3.traces.csv"]
    with open(str(tmp_path / "example-4-3.json")) as f:
        report = json.load(f)
    assert report["schema_version"] == 1
    assert report["checks"][0]["status"] == NOT_CONVERGED
    assert "traces" not in report


def test_write_result_msgpack(tmp_path):
    cfg = config(instance="collapse", dim=10, checks=["ding"], out=str(tmp_path), format="msgpack")
    write_result(run_experiment(cfg), cfg)
    with open(str(tmp_path / "collapse.msgpack"), "rb") as f:
        report = unpack(f.read())
    assert report["checks"][0]["status"] == "certified"
    assert "ding.residual" in report["traces"]


def test_nothing_written_without_out():
    cfg = config(instance="collapse", dim=10)
    assert write_result(run_experiment(cfg), cfg) == []


@pytest.mark.parametrize("use_gevent", [False, True])
def test_runner_keeps_submission_order(use_gevent):
    runner = ExperimentRunner(use_gevent=use_gevent)
    configs = [config(instance=name, dim=16) for name in ("cyclic", "collapse", "example-5-4")]
    results = runner.run(configs)
    runner.cleanup()
    assert [r["instance"] for r in results] == ["cyclic", "collapse", "example-5-4"]
    assert exit_code(results) == EXIT_OK


def test_exit_code_is_the_worst():
    assert exit_code([]) == EXIT_OK
    assert exit_code([{"exit_code": 2}, {"exit_code": 1}, {"exit_code": 0}]) == 2
