"""Discrete and continuous positive semigroups and their convergence diagnostics.

A discrete semigroup is the sequence of powers of one operator. A
continuous one is ``exp(tQ)`` for a rate matrix ``Q``, evaluated by
uniformization so that every partial sum is a positive operator.

The diagnostics sweep all normalised basis vertices at once: the block of
columns ``e_j / ||e_j||`` is pushed through the step operator and every
column is checked for the Cauchy property over the tail window.
"""

import numpy as np
import scipy.linalg
from scipy.stats import poisson

from .const import DEFAULT_HORIZON, DEFAULT_SAMPLE_STEP, DEFAULT_STEPS, DEFAULT_TOL, AGREEMENT_TOL, \
    POISSON_TAIL, RANK_THRESHOLD
from .exception import DimensionError, DomainError
from .lattice import NORM_NATIVE, block_norms
from .logger import logger
from .operators import DenseOperator, identity_block, matrix_weighted_norm

DISCRETE = 'discrete'
CONTINUOUS = 'continuous'

MODE_STRONG = 'strong'
MODE_OPERATOR_NORM = 'operator_norm'


class Semigroup(object):
    def __init__(self, mode, space, operator=None, rate_matrix=None, uniformization_rate=None,
                 bound_hint=None, sample_step=DEFAULT_SAMPLE_STEP, positivity_exempt=False, name=None, extras=None):
        if mode not in (DISCRETE, CONTINUOUS):
            raise DomainError("unknown semigroup mode %r" % (mode, ))
        self.mode = mode
        self.space = space
        self.operator = operator
        self.bound_hint = bound_hint
        self.sample_step = float(sample_step)
        self.positivity_exempt = positivity_exempt
        self.name = name
        # builder annotations: psi, envelope space, approximate flag, resolved horizon
        self.extras = dict(extras or {})
        self.rate_matrix = None
        self.uniformization_rate = None
        self._uniformized = None
        self._step_cache = {}
        if mode == DISCRETE:
            space.check(operator.space)
            self.positivity_exempt = positivity_exempt or operator.positivity_exempt
        else:
            self._init_continuous(rate_matrix, uniformization_rate)

    def _init_continuous(self, rate_matrix, rate):
        if self.space.exact:
            raise DomainError("continuous semigroups are float-only")
        q = np.array(rate_matrix, dtype=float)
        if q.shape != (self.space.dim, self.space.dim):
            raise DimensionError("rate matrix of shape %s on a space of dim %d" % (q.shape, self.space.dim))
        self.rate_matrix = q
        if self.positivity_exempt:
            return
        off = q - np.diag(np.diag(q))
        if np.any(off < 0):
            raise DomainError("rate matrix has negative off-diagonal entries")
        w = self.space.float_weights()
        scale = max(1.0, float(np.max(np.abs(q))))
        if np.any((w @ q) / w > 1e-12 * scale):
            raise DomainError("rate matrix has positive weighted column sums")
        needed = float(np.max(np.abs(np.diag(q)))) if q.size else 0.0
        if rate is None:
            rate = needed if needed > 0 else 1.0
        if rate < needed:
            raise DomainError("uniformization rate %g below max |Q_jj| = %g" % (rate, needed))
        self.uniformization_rate = float(rate)
        self._uniformized = DenseOperator(self.space, np.eye(self.space.dim) + q / self.uniformization_rate)

    @classmethod
    def discrete(cls, operator, **kwargs):
        return cls(DISCRETE, operator.space, operator=operator, **kwargs)

    @classmethod
    def continuous(cls, space, rate_matrix, **kwargs):
        return cls(CONTINUOUS, space, rate_matrix=rate_matrix, **kwargs)

    @property
    def dim(self):
        return self.space.dim

    @property
    def is_discrete(self):
        return self.mode == DISCRETE

    @property
    def exact(self):
        return self.space.exact

    @property
    def truncated(self):
        return self.is_discrete and self.operator.truncated

    @property
    def is_conservative(self):
        if self.is_discrete or self.positivity_exempt:
            return False
        w = self.space.float_weights()
        return bool(np.max(np.abs(w @ self.rate_matrix)) <= 1e-12 * max(1.0, float(np.max(np.abs(self.rate_matrix)))))

    def as_float(self):
        if not self.exact:
            return self
        return Semigroup.discrete(self.operator.to_float(), bound_hint=self.bound_hint,
                                  sample_step=self.sample_step, name=self.name, extras=self.extras)

    def step_time(self):
        return 1 if self.is_discrete else self.sample_step

    def step_operator(self):
        """The operator advancing one sample of the diagnostic grid."""
        if self.is_discrete:
            return self.operator
        return self._cached_evaluate(self.sample_step)

    def _cached_evaluate(self, t):
        key = float(t)
        if key not in self._step_cache:
            self._step_cache[key] = evaluate(self, t)
        return self._step_cache[key]

    def with_space(self, space):
        """Same semigroup measured in another space on the same atoms."""
        if self.is_discrete:
            return Semigroup.discrete(self.operator.with_space(space), bound_hint=self.bound_hint, name=self.name,
                                      extras=self.extras)
        return Semigroup.continuous(space, self.rate_matrix, uniformization_rate=self.uniformization_rate,
                                    sample_step=self.sample_step, positivity_exempt=self.positivity_exempt,
                                    name=self.name, extras=self.extras)

    def to_spec(self):
        if self.is_discrete:
            return {"mode": DISCRETE, "operator": self.operator.to_spec(), "space": self.space.to_dict()}
        return {
            "mode": CONTINUOUS,
            "space": self.space.to_dict(),
            "rate_matrix": self.rate_matrix.tolist(),
            "uniformization_rate": self.uniformization_rate,
            "sample_step": self.sample_step,
            "positivity_exempt": self.positivity_exempt,
        }

    def __repr__(self):
        return "Semigroup(%s, %s%s)" % (self.mode, self.space, ", %s" % self.name if self.name else "")


def power_block(T, block, n):
    """T^n applied to every column of ``block``; returns (image, escaped per column)."""
    escaped = np.zeros(np.shape(block)[1:]) if not T.exact else 0
    for _ in range(n):
        block, e = T.apply_block(block)
        escaped = escaped + e
    return block, escaped


def evaluate(S, t):
    if S.is_discrete:
        if t <= 0 or int(t) != t:
            raise DomainError("discrete semigroups are evaluated at positive integers, got %r" % (t, ))
        n = int(t)
        if n == 1:
            return S.operator
        block, _ = power_block(S.operator, identity_block(S.space), n)
        return DenseOperator(S.space, block, positivity_exempt=S.positivity_exempt)
    if t <= 0:
        raise DomainError("continuous semigroups are evaluated at t > 0, got %r" % (t, ))
    if S.positivity_exempt:
        return DenseOperator(S.space, scipy.linalg.expm(S.rate_matrix * t), positivity_exempt=True)
    return DenseOperator(S.space, _uniformized_exponential(S, t))


def _uniformized_exponential(S, t):
    mean = S.uniformization_rate * t
    cutoff = int(poisson.isf(POISSON_TAIL, mean)) + 1
    weights = poisson.pmf(np.arange(cutoff + 1), mean)
    term = np.eye(S.dim)
    total = weights[0] * term
    P = S._uniformized.matrix
    for k in range(1, cutoff + 1):
        term = P @ term
        total += weights[k] * term
    return total


def orbit(S, f, times, track_escape=False):
    """T_t f for increasing ``times``, advanced incrementally."""
    S.space.check(f.space)
    times = list(times)
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("orbit times must be increasing")
    out, escapes = [], []
    current, escaped, now = f, 0, 0
    for t in times:
        if S.is_discrete:
            for _ in range(int(t) - int(now)):
                current, e = S.operator.apply_tracked(current)
                escaped = escaped + e
        elif t > now:
            current = S._cached_evaluate(t - now).apply(current)
        now = t
        out.append(current)
        escapes.append(escaped)
    if track_escape:
        return out, escapes
    return out


def vertex_block(space, selector=NORM_NATIVE):
    """Columns e_j / ||e_j|| in float, plus the norms ||e_j||."""
    norms = block_norms(space.as_float(), np.eye(space.dim), selector)
    return np.eye(space.dim) / norms, norms


def estimate_rank(matrix, threshold=RANK_THRESHOLD):
    matrix = np.asarray(matrix, dtype=float)
    if not np.any(matrix):
        return 0
    r = scipy.linalg.qr(matrix, mode='r', pivoting=True)[0]
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > threshold * diag[0]))


class ConvergenceReport(object):
    def __init__(self, converged, mode, horizon_used, tolerance, residual_trace, limit=None,
                 projection_defect=None, commutation_defect=None, rank=None, min_column_norm=None,
                 column_norms=None, escaped_mass=0.0, approximate=False, sampled_bound=None, step_time=1,
                 final_block=None):
        self.converged = converged
        self.mode = mode
        self.horizon_used = horizon_used
        self.tolerance = tolerance
        self.residual_trace = residual_trace
        self.limit = limit
        self.projection_defect = projection_defect
        self.commutation_defect = commutation_defect
        self.rank = rank
        self.min_column_norm = min_column_norm
        self.column_norms = column_norms
        self.escaped_mass = escaped_mass
        self.approximate = approximate
        self.sampled_bound = sampled_bound
        self.step_time = step_time
        self.final_block = final_block

    @property
    def residual(self):
        return self.residual_trace[-1][1] if self.residual_trace else None

    def to_dict(self):
        return {
            "converged": self.converged,
            "mode": self.mode,
            "horizon_used": self.horizon_used,
            "tolerance": self.tolerance,
            "residual": self.residual,
            "projection_defect": self.projection_defect,
            "commutation_defect": self.commutation_defect,
            "rank": self.rank,
            "min_column_norm": self.min_column_norm,
            "escaped_mass": self.escaped_mass,
            "approximate": self.approximate,
            "sampled_bound": self.sampled_bound,
            "rank_threshold": RANK_THRESHOLD,
        }

    def traces(self):
        return {"residual": self.residual_trace}

    def __repr__(self):
        return "ConvergenceReport(converged=%s, mode=%s, rank=%s, residual=%r)" % (
            self.converged, self.mode, self.rank, self.residual)


def detect_strong_convergence(S, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, selector=NORM_NATIVE):
    """Run every normalised basis orbit for ``horizon`` samples and test the tail for Cauchy-ness.

    Over the last quarter of the horizon each column's summed step lengths
    (its path length) must stay below ``tol``; the path length bounds every
    pairwise distance in the window from above.
    """
    if horizon < 2:
        raise DomainError("horizon must be >= 2")
    S = S.as_float()
    step = S.step_operator()
    space = S.space
    block, norms = vertex_block(space, selector)
    tail_start = horizon - max(1, horizon // 4)
    path = np.zeros(space.dim)
    escaped = np.zeros(space.dim)
    trace = []
    sampled_bound = float(np.max(block_norms(space, block, selector)))
    for n in range(1, horizon + 1):
        nxt, e = step.apply_block(block)
        escaped += e
        moves = block_norms(space, nxt - block, selector)
        block = nxt
        sampled_bound = max(sampled_bound, float(np.max(block_norms(space, block, selector))))
        trace.append((n * S.step_time(), float(np.max(moves))))
        if n > tail_start:
            path += moves
    max_escape = float(np.max(escaped)) if escaped.size else 0.0
    approximate = max_escape > tol
    converged = bool(np.max(path) <= tol) and not approximate
    column_norms = block_norms(space, block, selector)
    report = ConvergenceReport(
        converged=converged, mode=MODE_STRONG, horizon_used=horizon, tolerance=tol, residual_trace=trace,
        escaped_mass=max_escape, approximate=approximate, sampled_bound=sampled_bound, step_time=S.step_time(),
        min_column_norm=float(np.min(column_norms)), column_norms=column_norms, final_block=block,
    )
    if converged:
        limit = block * norms[None, :]
        report.limit = DenseOperator(space, limit, positivity_exempt=S.positivity_exempt)
        report.projection_defect = matrix_weighted_norm(limit @ limit - limit, space)
        report.commutation_defect = _commutation_defect(step, limit, space)
        report.rank = estimate_rank(limit)
    logger.debug("strong convergence of %r: converged=%s path=%.3e escape=%.3e", S, converged,
                 float(np.max(path)), max_escape)
    return report


def _commutation_defect(step, limit, space, samples=3):
    worst, current = 0.0, limit
    for _ in range(samples):
        current, _ = step.apply_block(current)
        worst = max(worst, matrix_weighted_norm(current - limit, space))
    return worst


def operator_norm_convergence(S, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, selector=NORM_NATIVE):
    """||T_t - P|| along the sampled grid, with P from the strong diagnostic.

    The operator norm used is the weighted l^1 one.
    """
    strong = detect_strong_convergence(S, horizon, tol, selector)
    S = S.as_float()
    space = S.space
    step = S.step_operator()
    if strong.limit is None:
        # no strong limit: compare consecutive samples instead so the trace still shows the defect
        limit = strong.final_block * vertex_block(space, selector)[1][None, :]
    else:
        limit = strong.limit.matrix
    block = np.eye(space.dim)
    trace = []
    tail_start = horizon - max(1, horizon // 4)
    tail_max = 0.0
    for n in range(1, horizon + 1):
        block, _ = step.apply_block(block)
        defect = matrix_weighted_norm(block - limit, space)
        trace.append((n * S.step_time(), defect))
        if n > tail_start:
            tail_max = max(tail_max, defect)
    converged = strong.converged and tail_max <= tol
    report = ConvergenceReport(
        converged=converged, mode=MODE_OPERATOR_NORM, horizon_used=horizon, tolerance=tol, residual_trace=trace,
        limit=strong.limit, projection_defect=strong.projection_defect,
        commutation_defect=strong.commutation_defect, rank=strong.rank, min_column_norm=strong.min_column_norm,
        column_norms=strong.column_norms, escaped_mass=strong.escaped_mass, approximate=strong.approximate,
        sampled_bound=strong.sampled_bound, step_time=S.step_time(), final_block=strong.final_block,
    )
    logger.debug("operator-norm convergence of %r: converged=%s tail=%.3e", S, converged, tail_max)
    return report


def limits_agree(first, second, space, tol=AGREEMENT_TOL):
    if first.limit is None or second.limit is None:
        return False
    return matrix_weighted_norm(first.limit.matrix - second.limit.matrix, space) <= tol


class EmbeddedConsistencyReport(object):
    CONSISTENT = 'consistent'
    SAMPLED_DISCREPANCY = 'sampled_discrepancy'
    VIOLATED = 'violated'

    def __init__(self, steps, embedded, continuous, limits_agree, agrees_with_continuous,
                 rank_one_prediction, prediction_holds, status):
        self.steps = steps
        self.embedded = embedded
        self.continuous = continuous
        self.limits_agree = limits_agree
        self.agrees_with_continuous = agrees_with_continuous
        self.rank_one_prediction = rank_one_prediction
        self.prediction_holds = prediction_holds
        self.status = status

    @property
    def all_embedded_converge(self):
        return all(r.converged for r in self.embedded)

    def to_dict(self):
        return {
            "sampled_steps": list(self.steps),
            "embedded": [dict(r.to_dict(), step=s) for s, r in zip(self.steps, self.embedded)],
            "continuous": self.continuous.to_dict(),
            "limits_agree": self.limits_agree,
            "agrees_with_continuous": self.agrees_with_continuous,
            "rank_one_prediction": self.rank_one_prediction,
            "prediction_holds": self.prediction_holds,
            "status": self.status,
        }


def embedded_discrete_consistency(S, steps=DEFAULT_STEPS, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL,
                                  mode=MODE_STRONG, agreement_tol=AGREEMENT_TOL):
    """Compare the embedded discrete semigroups (T_{tn})_n against the continuous one.

    Only the sampled steps are tested; the report lists them.
    """
    if S.is_discrete:
        raise DomainError("embedded discrete consistency needs a continuous semigroup")
    steps = [float(t) for t in steps]
    if any(t <= 0 for t in steps) or len(set(steps)) != len(steps):
        raise DomainError("steps must be distinct positive reals")
    diagnostic = operator_norm_convergence if mode == MODE_OPERATOR_NORM else detect_strong_convergence
    embedded = []
    for t in steps:
        discrete = Semigroup.discrete(evaluate(S, t), name="%s@%g" % (S.name or "embedded", t))
        embedded.append(diagnostic(discrete, horizon, tol))
    continuous = diagnostic(S, horizon, tol)

    converged = [r for r in embedded if r.converged]
    agree = len(converged) == len(embedded) and all(
        limits_agree(converged[0], r, S.space, agreement_tol) for r in converged[1:])
    with_continuous = bool(continuous.converged and converged
                           and all(limits_agree(continuous, r, S.space, agreement_tol) for r in converged))

    rank_one = any(r.rank == 1 for r in converged)
    prediction_holds = None
    if rank_one:
        prediction_holds = continuous.converged and all(r.converged for r in embedded)

    if rank_one and not prediction_holds:
        status = EmbeddedConsistencyReport.VIOLATED
    elif continuous.converged and not agree:
        # full convergence forces every embedded semigroup to the same limit
        status = EmbeddedConsistencyReport.VIOLATED
    elif agree and not continuous.converged:
        status = EmbeddedConsistencyReport.SAMPLED_DISCREPANCY
    else:
        status = EmbeddedConsistencyReport.CONSISTENT
    logger.debug("embedded consistency of %r over %s: %s", S, steps, status)
    return EmbeddedConsistencyReport(steps, embedded, continuous, agree, with_continuous,
                                     rank_one, prediction_holds, status)


class PowerConsistencyReport(object):
    def __init__(self, m0, power, full, prediction, prediction_holds):
        self.m0 = m0
        self.power = power
        self.full = full
        self.prediction = prediction
        self.prediction_holds = prediction_holds

    def to_dict(self):
        return {
            "m0": self.m0,
            "power": self.power.to_dict(),
            "full": self.full.to_dict(),
            "rank_one_prediction": self.prediction,
            "prediction_holds": self.prediction_holds,
        }


def discrete_power_consistency(S, m0, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, agreement_tol=AGREEMENT_TOL):
    """If (T^{n m0})_n has a rank-1 limit, (T^n)_n must converge to the same limit."""
    if not S.is_discrete:
        raise DomainError("power consistency needs a discrete semigroup")
    if m0 < 1 or int(m0) != m0:
        raise DomainError("m0 must be a positive integer")
    power = detect_strong_convergence(Semigroup.discrete(evaluate(S, int(m0)).to_float()), horizon, tol)
    full = detect_strong_convergence(S, horizon * int(m0), tol)
    prediction = bool(power.converged and power.rank == 1)
    holds = None
    if prediction:
        holds = full.converged and limits_agree(power, full, S.space.as_float(), agreement_tol)
    return PowerConsistencyReport(int(m0), power, full, prediction, holds)


def projection_constancy_check(S, times, tol=DEFAULT_TOL):
    """If every sampled T_t is idempotent, all sampled T_t coincide (within 3 tol).

    Returns (all_idempotent, max_pairwise_distance, holds).
    """
    evaluated = [np.asarray(evaluate(S, t).to_dense(), dtype=float) for t in times]
    space = S.space.as_float()
    idempotent = all(matrix_weighted_norm(m @ m - m, space) <= tol for m in evaluated)
    spread = 0.0
    for i, a in enumerate(evaluated):
        for b in evaluated[i + 1:]:
            spread = max(spread, matrix_weighted_norm(a - b, space))
    holds = (not idempotent) or spread <= 3 * tol
    return idempotent, spread, holds


def semigroup_law_defect(S, s, t):
    a = np.asarray(evaluate(S, s + t).to_dense(), dtype=float)
    b = np.asarray(evaluate(S, s).to_dense(), dtype=float) @ np.asarray(evaluate(S, t).to_dense(), dtype=float)
    return matrix_weighted_norm(a - b, S.space.as_float())


def sampled_operator_norms(S, horizon):
    """max_j ||T_n e_j|| / ||e_j|| on the grid; the exact l^1 operator norm for positive T."""
    S = S.as_float()
    step = S.step_operator()
    block, _ = vertex_block(S.space)
    out = []
    for _ in range(horizon):
        block, _ = step.apply_block(block)
        out.append(float(np.max(block_norms(S.space, block))))
    return out
