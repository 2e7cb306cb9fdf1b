# coding:utf-8
"""Experiment configuration.

A config file is one JSON object; every key is optional and mirrors a field
of :class:`ExperimentConfig`::

    {
      "instance": "example-4-3" | {operator, map or semigroup spec},
      "checks": ["strong-convergence", "maximal-lower-bound"],
      "dim": 64, "horizon": 40, "tol": 1e-9, "agreement_tol": 1e-8,
      "p": 2, "mode": "rational" | "float", "seed": 0,
      "h": "perron-half" | "zero" | [numbers] | {"vertex": k, "scale": s},
      "start": 1 | [numbers], "eps": 0.01, "steps": [0.3, 1, 1.4142],
      "out": "reports/", "format": "json" | "csv" | "msgpack"
    }

Command-line flags override file values.
"""

from dataclasses import dataclass, field, fields, replace

from .const import AGREEMENT_TOL, DEFAULT_HORIZON, DEFAULT_SHRINK, DEFAULT_STEPS, DEFAULT_TOL, MIN_TRUNCATION
from .exception import ConfigError
from .serialize import FORMATS, FORMAT_JSON, load_json

MODE_RATIONAL = 'rational'
MODE_FLOAT = 'float'


@dataclass
class ExperimentConfig(object):
    instance: object = None
    # second instance for the domination transfer check
    sub_instance: object = None
    checks: list = field(default_factory=list)
    horizon: int = None
    tol: float = DEFAULT_TOL
    agreement_tol: float = AGREEMENT_TOL
    dim: int = None
    p: float = None
    mode: str = MODE_FLOAT
    seed: int = None
    t0: float = None
    blocks: list = None
    cells_log2: int = None
    h: object = None
    start: object = None
    eps: float = None
    shrink: float = DEFAULT_SHRINK
    steps: list = field(default_factory=lambda: list(DEFAULT_STEPS))
    m0: int = None
    norm_mode: str = None
    out: str = None
    format: str = FORMAT_JSON
    name: str = None

    @property
    def exact(self):
        return self.mode == MODE_RATIONAL

    @property
    def resolved_horizon(self):
        return self.horizon if self.horizon is not None else DEFAULT_HORIZON

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("a config must be a JSON object")
        known = set(f.name for f in fields(cls))
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError("unknown config keys: %s" % ", ".join(unknown))
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        return cls.from_dict(load_json(path))

    def override(self, **kwargs):
        """Copy with every non-None keyword replacing the current value."""
        cfg = replace(self, **dict((k, v) for k, v in kwargs.items() if v is not None))
        cfg.validate()
        return cfg

    def validate(self):
        if self.instance is None:
            raise ConfigError("no instance given")
        if not isinstance(self.instance, (str, dict)):
            raise ConfigError("instance must be a gallery id or an inline spec")
        if not isinstance(self.checks, (list, tuple)):
            raise ConfigError("checks must be a list")
        for name, value in (("tol", self.tol), ("agreement_tol", self.agreement_tol)):
            if not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError("%s must be > 0, got %r" % (name, value))
        if self.horizon is not None and (int(self.horizon) != self.horizon or self.horizon < 2):
            raise ConfigError("horizon must be an integer >= 2")
        if self.dim is not None and self.dim < MIN_TRUNCATION:
            raise ConfigError("dim must be >= %d for truncated instances" % MIN_TRUNCATION)
        if self.p is not None and not self.p >= 1:
            raise ConfigError("p must be >= 1")
        if self.mode not in (MODE_RATIONAL, MODE_FLOAT):
            raise ConfigError("mode must be rational or float")
        if self.format not in FORMATS:
            raise ConfigError("format must be one of %s" % ", ".join(FORMATS))
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("eps must be > 0")
        if not 0 < self.shrink <= 1:
            raise ConfigError("shrink must lie in (0, 1]")
        if any(not s > 0 for s in self.steps):
            raise ConfigError("steps must be positive")
        if self.t0 is not None and not self.t0 > 0:
            raise ConfigError("t0 must be > 0")
        if self.m0 is not None and (int(self.m0) != self.m0 or self.m0 < 1):
            raise ConfigError("m0 must be a positive integer")
        return self

    def tolerances(self):
        return {"tol": self.tol, "agreement_tol": self.agreement_tol, "shrink": self.shrink}

    def to_dict(self):
        return dict((f.name, getattr(self, f.name)) for f in fields(self))
