# coding:utf-8
# report types shared by the certifiers

from .const import EXIT_INAPPLICABLE, EXIT_OK, EXIT_VIOLATION
from .exception import DomainError

CERTIFIED = 'certified'
HYPOTHESIS_FAILED = 'hypothesis_failed'
VIOLATED = 'violated'
NOT_CHECKED = 'not_checked'

# diagnostic outcomes; not theorem verdicts
CONVERGED = 'converged'
NOT_CONVERGED = 'not_converged'
NOT_CERTIFIED = 'not_certified'
SAMPLED_DISCREPANCY = 'sampled_discrepancy'
ERROR = 'error'

UNIFORM = 'uniform'
INDIVIDUAL = 'individual'
MAXIMAL = 'maximal'
PSI_WEIGHTED = 'psi_weighted'


def _plain(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return dict((k, _plain(v)) for k, v in value.items())
    if isinstance(value, float) or isinstance(value, (bool, int, str)) or value is None:
        return value
    return float(value)


class Hypothesis(object):
    """One checked precondition; ``holds`` is None when it was not checked."""

    def __init__(self, name, holds, value=None, estimate=False, note=None):
        self.name = name
        self.holds = None if holds is None else bool(holds)
        self.value = value
        self.estimate = estimate
        self.note = note

    @property
    def status(self):
        if self.holds is None:
            return NOT_CHECKED
        return CERTIFIED if self.holds else HYPOTHESIS_FAILED

    def to_dict(self):
        out = {"name": self.name, "status": self.status, "value": _plain(self.value)}
        if self.estimate:
            out["estimate"] = True
        if self.note:
            out["note"] = self.note
        return out

    def __repr__(self):
        return "Hypothesis(%s=%s)" % (self.name, self.status)


class LowerBoundReport(object):
    def __init__(self, kind, bound, norm_of_bound, deficiency_trace, certified, hypothesis_log=None,
                 tolerance=None, horizon=None, **extras):
        if certified and not bound.is_positive():
            raise DomainError("a certified lower bound must be nonnegative")
        self.kind = kind
        self.bound = bound
        self.norm_of_bound = norm_of_bound
        self.deficiency_trace = deficiency_trace
        self.certified = bool(certified)
        self.hypothesis_log = hypothesis_log or []
        self.tolerance = tolerance
        self.horizon = horizon
        self.extras = extras

    def __getattr__(self, name):
        extras = self.__dict__.get('extras', {})
        if name in extras:
            return extras[name]
        raise AttributeError(name)

    @property
    def final_deficiency(self):
        return self.deficiency_trace[-1][1] if self.deficiency_trace else 0.0

    def to_dict(self):
        return {
            "kind": self.kind,
            "bound": self.bound.tolist(),
            "norm_of_bound": float(self.norm_of_bound),
            "final_deficiency": float(self.final_deficiency),
            "certified": self.certified,
            "hypotheses": [h.to_dict() for h in self.hypothesis_log],
            "tolerance": self.tolerance,
            "horizon": self.horizon,
            "extras": _plain(dict((k, v) for k, v in self.extras.items() if not k.startswith('_'))),
        }

    def traces(self):
        return {"deficiency": self.deficiency_trace}

    def __repr__(self):
        return "LowerBoundReport(%s, norm=%.6g, certified=%s)" % (self.kind, float(self.norm_of_bound), self.certified)


class CertifierReport(object):
    """Verdict of one theorem-level certifier.

    ``status`` separates "theorem not applicable" (a hypothesis failed) from
    "theorem violated" (hypotheses certified but the conclusion failed).
    """

    def __init__(self, theorem, hypotheses, conclusion, details=None, traces=None, convergence=None,
                 predicted_limit=None, bounds=None, tolerance=None, horizon=None, status=None):
        self.theorem = theorem
        self.hypotheses = hypotheses
        self.conclusion = conclusion
        self.details = details or {}
        self._traces = traces or {}
        self.convergence = convergence
        self.predicted_limit = predicted_limit
        self.bounds = bounds or []
        self.tolerance = tolerance
        self.horizon = horizon
        self._status = status

    @property
    def hypotheses_hold(self):
        return all(h.holds for h in self.hypotheses if h.holds is not None)

    @property
    def status(self):
        if self._status is not None:
            return self._status
        if not self.hypotheses_hold:
            return HYPOTHESIS_FAILED
        return self.conclusion

    @property
    def certified(self):
        return self.status == CERTIFIED

    def hypothesis(self, name):
        for h in self.hypotheses:
            if h.name == name:
                return h
        return None

    def exit_code(self):
        return exit_code_for(self.status)

    def traces(self):
        out = dict(self._traces)
        if self.convergence is not None:
            out.setdefault("residual", self.convergence.residual_trace)
        return out

    def to_dict(self):
        out = {
            "theorem": self.theorem,
            "status": self.status,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "conclusion": self.conclusion,
            "details": _plain(self.details),
            "tolerance": self.tolerance,
            "horizon": self.horizon,
        }
        if self.convergence is not None:
            out["convergence"] = self.convergence.to_dict()
        if self.bounds:
            out["bounds"] = [b.to_dict() for b in self.bounds]
        return out

    def __repr__(self):
        return "CertifierReport(%s, status=%s)" % (self.theorem, self.status)


def exit_code_for(status):
    if status in (VIOLATED, ERROR):
        return EXIT_VIOLATION
    if status in (HYPOTHESIS_FAILED, NOT_CERTIFIED):
        return EXIT_INAPPLICABLE
    return EXIT_OK


# most severe first
SEVERITY = (ERROR, VIOLATED, HYPOTHESIS_FAILED, NOT_CERTIFIED, SAMPLED_DISCREPANCY, NOT_CONVERGED, NOT_CHECKED,
            CONVERGED, CERTIFIED)


def worst_status(statuses):
    statuses = set(statuses)
    for candidate in SEVERITY:
        if candidate in statuses:
            return candidate
    return NOT_CHECKED
