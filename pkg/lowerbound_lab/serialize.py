# coding:utf-8
# flat-file encodings: JSON reports and specs, CSV traces and matrices, msgpack bundles

import csv
import io
import json
import os
import tempfile
import time
from fractions import Fraction

import msgpack
import numpy as np

from .const import REPORT_SCHEMA_VERSION
from .exception import ConfigError, DomainError
from .frobenius_perron import FiniteMap, IntervalMap, fp_of_finite_map, ulam_matrix
from .lattice import Functional, LatticeVector, WeightedSpace
from .operators import ComposeOperator, DenseOperator, DiagonalOperator, RankOneOperator, RightShift, \
    SparseOperator, SumOperator, TransportOperator
from .semigroup import CONTINUOUS, Semigroup

FORMAT_JSON = 'json'
FORMAT_CSV = 'csv'
FORMAT_MSGPACK = 'msgpack'
FORMATS = (FORMAT_JSON, FORMAT_CSV, FORMAT_MSGPACK)


def plain(value):
    """Reduce reports, vectors and numpy scalars to JSON/msgpack-safe values; rationals become "p/q"."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value != value or value in (float('inf'), float('-inf')):
            return repr(value)
        return value
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, dict):
        return dict((str(k), plain(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if hasattr(value, 'to_dict'):
        return plain(value.to_dict())
    if hasattr(value, 'tolist'):
        return plain(value.tolist())
    raise DomainError("cannot serialise %r" % (value, ))


def parse_number(value, exact=False):
    if exact:
        return Fraction(str(value)) if not isinstance(value, Fraction) else value
    if isinstance(value, str) and '/' in value:
        return float(Fraction(value))
    return float(value)


def atomic_write(path, data):
    """Write through a temp file in the target directory and rename over ``path``."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    fd, tmp = tempfile.mkstemp(prefix=".%s." % os.path.basename(path), dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps_json(obj):
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


def envelope(payload, tolerances=None):
    """Wrap a report payload with the schema version, tolerances and a timestamp."""
    out = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "tolerances": tolerances or {},
    }
    out.update(plain(payload))
    return out


def pack(obj):
    return msgpack.packb(plain(obj), use_bin_type=True)


def unpack(data):
    return msgpack.unpackb(data, raw=False)


def traces_csv(traces):
    """``{quantity: [(t, value), ...]}`` as CSV with columns t, quantity, value."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("t", "quantity", "value"))
    for quantity in sorted(traces):
        for t, value in traces[quantity]:
            writer.writerow((repr(float(t)), quantity, repr(float(value))))
    return buf.getvalue()


def vector_csv(vector):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("index", "value"))
    for k, v in enumerate(vector.tolist()):
        writer.writerow((k, v))
    return buf.getvalue()


def coo_csv(operator):
    coo = operator.to_sparse().tocoo()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("row", "col", "value"))
    for i, j, v in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
        writer.writerow((i, j, repr(float(v))))
    return buf.getvalue()


def load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except (IOError, OSError, ValueError) as ex:
        raise ConfigError("cannot read %s: %s" % (path, ex))


def space_from_dict(spec, exact=False):
    if "weights" in spec:
        weights = [parse_number(w, exact) for w in spec["weights"]]
    elif "dim" in spec:
        weights = [1] * int(spec["dim"])
    else:
        raise ConfigError("space spec needs weights or dim")
    return WeightedSpace(weights, p=spec.get("p", 1), exact=exact)


def vector_from_list(space, values):
    return LatticeVector(space, [parse_number(v, space.exact) for v in values])


def operator_from_spec(spec, space=None, exact=False):
    """Rebuild an operator from its ``to_spec`` form; map specs become FP or Ulam operators."""
    kind = spec.get("kind")
    if kind == "finite":
        fmap = FiniteMap.from_spec(spec, space)
        return fp_of_finite_map(fmap)
    if kind == "piecewise_affine":
        return ulam_matrix(IntervalMap.from_spec(spec), int(spec.get("cells", 64)))
    if kind == "ulam":
        return ulam_matrix(IntervalMap.from_spec(spec["map"]), int(spec["cells"]))
    if space is None:
        if "space" in spec:
            space = space_from_dict(spec["space"], exact)
        elif kind == "dense":
            space = WeightedSpace.counting(len(spec["matrix"]), exact=exact)
        elif "dim" in spec:
            space = WeightedSpace.counting(int(spec["dim"]), exact=exact)
        else:
            raise ConfigError("operator spec of kind %r needs a space" % (kind, ))
    num = lambda values: [parse_number(v, space.exact) for v in values]  # noqa: E731
    if kind == "dense":
        return DenseOperator(space, [num(row) for row in spec["matrix"]])
    if kind == "sparse":
        return SparseOperator.from_triplets(space, spec["rows"], spec["cols"], num(spec["values"]))
    if kind == "rank_one":
        return RankOneOperator(Functional(space, num(spec["phi"])), LatticeVector(space, num(spec["vector"])))
    if kind == "right_shift":
        outer = spec.get("outer_weight")
        return RightShift(space, num(spec["band"]), None if outer is None else parse_number(outer, space.exact))
    if kind == "diagonal":
        return DiagonalOperator(space, num(spec["multipliers"]))
    if kind == "transport":
        return TransportOperator(space, spec["sigma"], num(spec["gains"]))
    if kind == "sum":
        return SumOperator([operator_from_spec(c, space) for c in spec["children"]])
    if kind == "compose":
        return ComposeOperator([operator_from_spec(c, space) for c in spec["children"]])
    raise ConfigError("unknown operator kind %r" % (kind, ))


def semigroup_from_spec(spec, exact=False):
    if spec.get("mode") == CONTINUOUS:
        space = space_from_dict(spec["space"])
        return Semigroup.continuous(space, spec["rate_matrix"], uniformization_rate=spec.get("uniformization_rate"),
                                    sample_step=spec.get("sample_step", 0.5),
                                    positivity_exempt=bool(spec.get("positivity_exempt", False)),
                                    name=spec.get("name"))
    op_spec = spec.get("operator", spec)
    space = space_from_dict(spec["space"], exact) if "space" in spec else None
    op = operator_from_spec(op_spec, space, exact)
    return Semigroup.discrete(op, name=spec.get("name"), extras={"approximate": getattr(op, "approximate", False)})
