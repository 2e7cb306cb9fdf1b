import json
import os
from fractions import Fraction

import numpy as np
import pytest

from lowerbound_lab import gallery, serialize
from lowerbound_lab.const import REPORT_SCHEMA_VERSION
from lowerbound_lab.exception import ConfigError, DomainError
from lowerbound_lab.frobenius_perron import UlamOperator
from lowerbound_lab.lattice import WeightedSpace
from lowerbound_lab.operators import TransportOperator
from lowerbound_lab.semigroup import CONTINUOUS


def test_plain_values():
    assert serialize.plain(Fraction(1, 3)) == "1/3"
    assert serialize.plain(np.float64(0.5)) == 0.5
    assert serialize.plain(np.int64(3)) == 3
    assert serialize.plain(np.bool_(True)) is True
    assert serialize.plain(float("inf")) == "inf"
    assert serialize.plain({1: np.arange(2)}) == {"1": [0, 1]}
    with pytest.raises(DomainError):
        serialize.plain(object())


def test_parse_number():
    assert serialize.parse_number("1/4") == 0.25
    assert serialize.parse_number("1/4", exact=True) == Fraction(1, 4)
    assert serialize.parse_number(0.5, exact=True) == Fraction(1, 2)


def test_atomic_write_creates_directories(tmp_path):
    path = str(tmp_path / "a" / "b" / "report.json")
    serialize.atomic_write(path, serialize.dumps_json({"x": Fraction(1, 2)}))
    with open(path) as f:
        assert json.load(f) == {"x": "1/2"}
    assert os.listdir(str(tmp_path / "a" / "b")) == ["report.json"]


def test_envelope_carries_schema_and_tolerances():
    out = serialize.envelope({"status": "certified"}, {"tol": 1e-9})
    assert out["schema_version"] == REPORT_SCHEMA_VERSION
    assert out["tolerances"] == {"tol": 1e-9}
    assert out["status"] == "certified"
    assert out["timestamp"].endswith("Z")


def test_msgpack_bundle():
    data = {"bound": [0.5, 0.25], "rational": Fraction(3, 4), "ok": True}
    assert serialize.unpack(serialize.pack(data)) == {"bound": [0.5, 0.25], "rational": "3/4", "ok": True}


def test_csv_writers():
    text = serialize.traces_csv({"residual": [(1, 0.5), (2, 0.25)]})
    assert text.splitlines() == ["t,quantity,value", "1.0,residual,0.5", "2.0,residual,0.25"]
    space = WeightedSpace.counting(2)
    assert serialize.vector_csv(space.vector([1.0, 2.0])).splitlines()[1:] == ["0,1.0", "1,2.0"]
    T = TransportOperator(space, [1, 0])
    assert serialize.coo_csv(T).splitlines() == ["row,col,value", "0,1,1.0", "1,0,1.0"]


def test_load_json_errors(tmp_path):
    with pytest.raises(ConfigError):
        serialize.load_json(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        serialize.load_json(str(bad))


def test_space_from_dict():
    space = serialize.space_from_dict({"weights": ["1/2", "1/3"]}, exact=True)
    assert space.exact and space.weights[0] == Fraction(1, 2)
    assert serialize.space_from_dict({"dim": 3}).dim == 3
    with pytest.raises(ConfigError):
        serialize.space_from_dict({})


def test_operator_spec_round_trip_of_example_4_3():
    S = gallery.build_example_4_3(16)
    T = serialize.operator_from_spec(S.operator.to_spec(), S.space)
    f = S.space.unit(1)
    assert np.allclose(T.apply(f).entries, S.operator.apply(f).entries)


def test_map_specs_become_fp_operators():
    T = serialize.operator_from_spec({"kind": "finite", "sigma": [1, 0, 0]})
    assert isinstance(T, TransportOperator)
    doubling = {"kind": "piecewise_affine", "cells": 8, "branches": [
        {"domain": ["0", "1/2"], "slope": "2", "intercept": "0"},
        {"domain": ["1/2", "1"], "slope": "2", "intercept": "-1"},
    ]}
    U = serialize.operator_from_spec(doubling)
    assert isinstance(U, UlamOperator) and U.cells == 8 and not U.approximate


def test_operator_spec_errors():
    with pytest.raises(ConfigError):
        serialize.operator_from_spec({"kind": "nope", "dim": 2})
    with pytest.raises(ConfigError):
        serialize.operator_from_spec({"kind": "diagonal", "multipliers": [1]})


def test_semigroup_specs():
    S = serialize.semigroup_from_spec({"kind": "dense", "matrix": [["1/2", "1/2"], ["1/2", "1/2"]]}, exact=True)
    assert S.is_discrete and S.space.exact
    C = serialize.semigroup_from_spec({
        "mode": CONTINUOUS, "space": {"dim": 2}, "rate_matrix": [[-1.0, 2.0], [1.0, -2.0]], "name": "two-state",
    })
    assert not C.is_discrete
    assert C.name == "two-state"
