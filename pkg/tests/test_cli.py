import json
import re

import pytest

from lowerbound_lab import gallery
from lowerbound_lab.cli import main, parse
from lowerbound_lab.const import EXIT_OK, EXIT_USAGE

DOUBLING = {
    "kind": "piecewise_affine",
    "name": "doubling",
    "branches": [
        {"domain": ["0", "1/2"], "slope": "2", "intercept": "0"},
        {"domain": ["1/2", "1"], "slope": "2", "intercept": "-1"},
    ],
}


def stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["gallery"],
    ["gallery", "run"],
    ["check", "telepathy", "--instance", "collapse"],
    ["check", "ding"],
    ["ulam", "build", "map.json"],
    ["gallery", "run", "collapse", "-m", "-g"],
])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as info:
        parse(argv)
    assert info.value.code == EXIT_USAGE


def test_version():
    with pytest.raises(SystemExit) as info:
        parse(["--version"])
    assert info.value.code == 0


def test_verbosity_counts():
    assert parse(["gallery", "list"]).verbose == 1
    assert parse(["-vv", "gallery", "list"]).verbose == 3


def test_gallery_list(capsys):
    assert main(["gallery", "list"]) == EXIT_OK
    listed = [row["name"] for row in stdout_json(capsys)]
    assert listed == gallery.names()


def test_gallery_run_writes_reports(capsys, tmp_path):
    assert main(["gallery", "run", "collapse", "cyclic", "--dim", "16", "--out", str(tmp_path)]) == EXIT_OK
    summary = stdout_json(capsys)
    assert [row["name"] for row in summary] == ["collapse", "cyclic"]
    assert (tmp_path / "collapse.json").exists()
    assert (tmp_path / "cyclic.traces.csv").exists()


@pytest.mark.parametrize("flags", [[], ["-g"]])
def test_gallery_reports_do_not_depend_on_the_worker_mode(capsys, tmp_path, flags):
    argv = ["gallery", "run", "collapse", "cyclic", "--dim", "16", "--out", str(tmp_path)]

    def reports():
        out = {}
        for p in sorted(tmp_path.iterdir()):
            out[p.name] = re.sub(rb'"timestamp": "[^"]*"', b'"timestamp": ""', p.read_bytes())
        return out

    assert main(argv) == EXIT_OK
    first = reports()
    assert main(argv + flags) == EXIT_OK
    capsys.readouterr()
    assert reports() == first
    assert sorted(first) == ["collapse.json", "collapse.traces.csv", "cyclic.json", "cyclic.traces.csv"]


def test_gallery_run_unknown_instance(capsys):
    assert main(["gallery", "run", "no-such-instance"]) == EXIT_USAGE
    assert stdout_json(capsys)[0]["status"] == "error"


def test_check_against_a_gallery_instance(capsys):
    assert main(["check", "operator-norm", "--instance", "cyclic", "--dim", "8"]) == EXIT_OK
    result = stdout_json(capsys)
    assert result["checks"][0]["status"] == "not_converged"
    assert result["checks"][0]["matched"] is True


def test_check_against_an_inline_spec(capsys, tmp_path):
    path = tmp_path / "swap.json"
    path.write_text(json.dumps({"kind": "finite", "sigma": [1, 0]}))
    assert main(["check", "lattice-homomorphism", "--instance", str(path), "--horizon", "20"]) == 2
    assert stdout_json(capsys)["checks"][0]["status"] == "hypothesis_failed"


def test_check_with_a_bad_config_value(capsys):
    assert main(["check", "strong-convergence", "--instance", "collapse", "--tol", "-1"]) == EXIT_USAGE


def test_ulam_build_to_stdout(capsys, tmp_path):
    path = tmp_path / "doubling.json"
    path.write_text(json.dumps(DOUBLING))
    assert main(["ulam", "build", str(path), "--cells", "4"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "row,col,value"
    assert len(lines) == 1 + 8
    assert "0,0,0.5" in lines


def test_ulam_build_to_file(capsys, tmp_path):
    path = tmp_path / "doubling.json"
    path.write_text(json.dumps(DOUBLING))
    out = tmp_path / "out"
    assert main(["ulam", "build", str(path), "--cells", "8", "--format", "json", "--out", str(out)]) == EXIT_OK
    with open(str(out / "doubling.ulam8.json")) as f:
        spec = json.load(f)
    assert spec["kind"] == "sparse"
    assert spec["approximate"] is False
    assert spec["map"]["kind"] == "piecewise_affine"


def test_ulam_build_needs_two_cells(tmp_path):
    path = tmp_path / "doubling.json"
    path.write_text(json.dumps(DOUBLING))
    assert main(["ulam", "build", str(path), "--cells", "1"]) == EXIT_USAGE


def test_ulam_build_missing_map(tmp_path):
    assert main(["ulam", "build", str(tmp_path / "nope.json"), "--cells", "4"]) == EXIT_USAGE


def test_suite_subset(capsys, tmp_path):
    assert main(["suite", "acceptance", "--only", "embedded-consistency", "--out", str(tmp_path)]) == EXIT_OK
    rows = stdout_json(capsys)
    assert [r["name"] for r in rows] == ["embedded-consistency"]
    with open(str(tmp_path / "acceptance.json")) as f:
        report = json.load(f)
    assert report["passed"] is True
    assert report["suite"] == "acceptance"
