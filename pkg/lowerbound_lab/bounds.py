"""Lower bounds for positive semigroups and the certifiers built on them.

Every supremum over normalised positive vectors is reduced to the basis
vertices ``e_j / ||e_j||``. The map ``f -> ||(A f - h)^-||`` is convex and
the normalised positive cone of an AL-space (or of the psi-norm) is the
convex hull of those vertices, so the maximum over the vertices is the
supremum over the whole set. Sweeps therefore push the full vertex block
through the step operator and read per-column deficiencies.

Estimates are heuristics; each one is re-validated by its deficiency trace
before it is reported as certified.
"""

import numpy as np

from .const import AGREEMENT_TOL, DEFAULT_HORIZON, DEFAULT_SHRINK, DEFAULT_TOL, DOMINATION_GROWTH, \
    HORIZON_MARGIN, POSITIVITY_FLOOR
from .exception import DomainError, LabException, PreconditionError, StructuralGateError
from .lattice import NORM_AL, NORM_NATIVE, NORM_PSI, Functional, LatticeVector, block_norms, deficiency, meet
from .logger import logger
from .operators import DenseOperator, RankOneOperator, adjoint_is_lattice_homomorphism, identity_block, \
    interval_preservation_witness, is_lattice_homomorphism, is_markov, matrix_weighted_norm
from .report import CERTIFIED, HYPOTHESIS_FAILED, INDIVIDUAL, MAXIMAL, NOT_CERTIFIED, NOT_CHECKED, PSI_WEIGHTED, UNIFORM, \
    VIOLATED, CertifierReport, Hypothesis, LowerBoundReport
from .semigroup import MODE_OPERATOR_NORM, MODE_STRONG, detect_strong_convergence, evaluate, operator_norm_convergence

DING_SEQUENCE_STEPS = 8


def _tail_start(horizon, fraction):
    return horizon - max(1, horizon // fraction)


def _floats(v):
    return np.array([float(x) for x in v.entries])


def _normalised_vertices(space, selector, psi=None):
    norms = block_norms(space, np.eye(space.dim), selector, psi)
    return np.eye(space.dim) / norms


def _tail_infimum(step, block, horizon):
    """Coordinatewise minimum of the orbit over the last half of the horizon."""
    start = _tail_start(horizon, 2)
    low = None
    escaped = np.zeros(block.shape[1])
    for n in range(1, horizon + 1):
        block, e = step.apply_block(block)
        escaped += e
        if n >= start:
            low = block.copy() if low is None else np.minimum(low, block)
    return low, escaped


def _validate(S, block, bounds, horizon, extra, selector, psi):
    """Deficiency of every column orbit against its bound, up to horizon + extra samples.

    Returns (trace of the column maximum, tail maximum per column, escaped per column).
    """
    step = S.step_operator()
    space = S.space
    start = _tail_start(horizon, 4)
    tail = np.zeros(block.shape[1])
    escaped = np.zeros(block.shape[1])
    trace = []
    for n in range(1, horizon + extra + 1):
        block, e = step.apply_block(block)
        escaped += e
        d = block_norms(space, np.maximum(bounds - block, 0), selector, psi)
        trace.append((n * S.step_time(), float(np.max(d))))
        if n > start:
            tail = np.maximum(tail, d)
    return trace, tail, escaped


def _individual_block(S, block, horizon, shrink, tol, selector, psi, extra):
    low, escaped = _tail_infimum(S.step_operator(), block, horizon)
    bounds = shrink * low
    norms = block_norms(S.space, bounds, selector, psi)
    null = norms <= POSITIVITY_FLOOR
    bounds[:, null] = 0.0
    norms[null] = 0.0
    trace, tail, escaped_v = _validate(S, block, bounds, horizon, extra, selector, psi)
    certified = tail <= tol
    return bounds, norms, low, trace, certified, np.maximum(escaped, escaped_v)


def _maximal_block(S, block, horizon, tol, max_rounds):
    step = S.step_operator()
    h, _ = _tail_infimum(step, block, horizon)
    gains = []
    for _ in range(max_rounds):
        orbit_low, _ = _tail_infimum(step, h, horizon)
        joined = np.maximum(h, orbit_low)
        gain = float(np.max(block_norms(S.space, joined) - block_norms(S.space, h)))
        h = joined
        gains.append(gain)
        if gain <= tol:
            break
    return h, gains


def _follow_down(step, h, tol, max_steps):
    """Follow the decreasing orbit h, Th, T^2 h, ... to its limit."""
    for _ in range(max_steps):
        nxt, _ = step.apply_block(h)
        nxt = np.minimum(h, nxt)
        if float(np.max(np.abs(nxt - h))) <= tol:
            return nxt
        h = nxt
    return h


def _check_bound(h):
    if not h.is_positive():
        raise DomainError("lower bound candidates must be nonnegative")


def _check_start(f):
    if not f.is_positive():
        raise DomainError("orbit start vectors must be nonnegative")
    if f.is_zero():
        raise DomainError("orbit start vector must be nonzero")


def markov_hypothesis(S, tol=1e-12):
    if not S.space.is_al:
        return Hypothesis("markov", None, note="not an AL space")
    if S.is_discrete:
        holds = is_markov(S.operator.to_float(), tol, count_escaped=True)
        return Hypothesis("markov", holds, note="escaped mass counted" if S.truncated else None)
    return Hypothesis("markov", S.is_conservative)


def boundedness_hypothesis(S, horizon):
    """sup_t ||T_t|| sampled on the horizon; bounded if the second half adds no growth."""
    Sf = S.as_float()
    block = _normalised_vertices(Sf.space, NORM_AL)
    step = Sf.step_operator()
    half = _tail_start(horizon, 2)
    first = whole = float(np.max(block_norms(Sf.space, block)))
    for n in range(1, horizon + 1):
        block, _ = step.apply_block(block)
        whole = max(whole, float(np.max(block_norms(Sf.space, block))))
        if n <= half:
            first = whole
    holds = whole <= first * (1 + DOMINATION_GROWTH) and np.isfinite(whole)
    return Hypothesis("bounded", holds, value=whole, estimate=True)


def uniform_lower_bound_check(S, h, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, mode=MODE_STRONG,
                              selector=NORM_AL, psi=None):
    """sup over normalised f >= 0 of ||(T_t f - h)^-|| along the horizon.

    ``mode`` names the convergence notion being tested; over finitely many
    vertices the per-vertex and the supremum test coincide, so both modes
    read the same sweep and the mode is echoed in the report.
    """
    _check_bound(h)
    S.space.check(h.space)
    if selector == NORM_AL and not S.space.is_al:
        raise DomainError("the uniform lower-bound check runs in AL mode; use the psi variant on l^p")
    Sf = S.as_float()
    hv = _floats(h)
    block = _normalised_vertices(Sf.space, selector, psi)
    trace, tail, escaped = _validate(Sf, block, hv[:, None], horizon, 0, selector, psi)
    certified = bool(np.max(tail) <= tol)
    failing = np.flatnonzero(tail > tol).tolist()
    hypotheses = [
        Hypothesis("truncation", float(np.max(escaped)) <= tol, value=float(np.max(escaped))),
    ]
    if escaped.size and float(np.max(escaped)) > tol:
        logger.warning("uniform check on %r: escaped mass %.3e exceeds tolerance", S, float(np.max(escaped)))
    report = LowerBoundReport(
        PSI_WEIGHTED if selector == NORM_PSI else UNIFORM, h, h.norm(selector, psi=psi), trace, certified,
        hypotheses, tolerance=tol, horizon=horizon, mode=mode, failing_vertices=failing,
        vertex_deficiencies=tail,
    )
    logger.debug("uniform lower bound on %r: certified=%s failing=%d", S, certified, len(failing))
    return report


def individual_lower_bound_estimate(S, f, horizon=DEFAULT_HORIZON, shrink_factor=DEFAULT_SHRINK, tol=DEFAULT_TOL,
                                    selector=NORM_AL, psi=None, validation_steps=HORIZON_MARGIN):
    _check_start(f)
    S.space.check(f.space)
    if not 0 < shrink_factor <= 1:
        raise DomainError("shrink factor must lie in (0, 1]")
    Sf = S.as_float()
    block = _floats(f)[:, None]
    bounds, norms, low, trace, certified, escaped = _individual_block(
        Sf, block, horizon, shrink_factor, tol, selector, psi, validation_steps)
    bound = LatticeVector(Sf.space, bounds[:, 0])
    return LowerBoundReport(
        INDIVIDUAL, bound, float(norms[0]), trace, bool(certified[0]),
        [Hypothesis("truncation", float(escaped[0]) <= tol, value=float(escaped[0]))],
        tolerance=tol, horizon=horizon, shrink_factor=shrink_factor, zero_only=bool(norms[0] == 0),
        tail_infimum=LatticeVector(Sf.space, low[:, 0]),
    )


def maximal_lower_bound_estimate(S, f, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, fixed_only=False, max_rounds=32,
                                 fixed_tol=AGREEMENT_TOL, validation_steps=HORIZON_MARGIN):
    """Grow an individual bound by h <- h v tailinf(orbit of h) until the AL gain stalls.

    With ``fixed_only`` the decreasing orbit T_t h is followed afterwards; its
    limit is the largest lower bound among the fixed points.
    """
    _check_start(f)
    S.space.check(f.space)
    Sf = S.as_float()
    block = _floats(f)[:, None]
    h, gains = _maximal_block(Sf, block, horizon, tol, max_rounds)
    step = Sf.step_operator()
    if fixed_only:
        h = _follow_down(step, h, fixed_tol * 1e-2, max(horizon, 1) * 4)
    trace, tail, escaped = _validate(Sf, block, h, horizon, validation_steps, NORM_AL, None)
    image, _ = step.apply_block(h)
    fixed_defect = float(block_norms(Sf.space, image - h)[0])
    bound = LatticeVector(Sf.space, h[:, 0])
    norm = float(block_norms(Sf.space, h)[0])
    return LowerBoundReport(
        MAXIMAL, bound, norm, trace, bool(tail[0] <= tol),
        [Hypothesis("truncation", float(escaped[0]) <= tol, value=float(escaped[0]))],
        tolerance=tol, horizon=horizon, rounds=len(gains), gains=gains, fixed_point=fixed_defect <= fixed_tol,
        fixed_defect=fixed_defect, fixed_only=fixed_only,
    )


def _predicted_projection(Sf, h, horizon):
    step = Sf.step_operator()
    phi = np.ones(Sf.dim)
    f0 = _floats(h)
    f0 = f0 / float(block_norms(Sf.space, f0)[0])
    for _ in range(horizon):
        phi = np.asarray(step._adjoint(phi), dtype=float)
        f0, _ = step.apply_block(f0[:, None])
        f0 = f0[:, 0]
        f0 = f0 / float(block_norms(Sf.space, f0)[0])
    return RankOneOperator(Functional(Sf.space, np.maximum(phi, 0)), LatticeVector(Sf.space, np.maximum(f0, 0)))


def lasota_yorke_certify(S, h, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, norm_mode=MODE_STRONG,
                         agreement_tol=AGREEMENT_TOL):
    """A nonzero uniform lower bound forces convergence to a rank-1 projection phi (x) f0.

    Returns (report, predicted_limit). Raises PreconditionError when h does
    not certify as a uniform lower bound.
    """
    lb = uniform_lower_bound_check(S, h, horizon, tol)
    if not lb.certified or lb.norm_of_bound <= 0:
        err = PreconditionError("h is not a certified nonzero uniform lower bound (final deficiency %.3e)"
                                % lb.final_deficiency)
        err.report = lb
        raise err
    Sf = S.as_float()
    space = Sf.space
    markov = markov_hypothesis(S)
    bounded = boundedness_hypothesis(S, horizon)
    hypotheses = [Hypothesis("uniform_lower_bound", True, value=lb.norm_of_bound), bounded]
    hypotheses.extend(lb.hypothesis_log)

    diagnostic = operator_norm_convergence if norm_mode == MODE_OPERATOR_NORM else detect_strong_convergence
    conv = diagnostic(Sf, horizon, tol)
    predicted = _predicted_projection(Sf, h, horizon)
    details = {"norm_mode": norm_mode, "epsilon": lb.norm_of_bound, "converged": conv.converged, "rank": conv.rank,
               "markov": markov.holds}
    checks = []
    if conv.limit is not None:
        P = np.asarray(conv.limit.matrix, dtype=float)
        w = space.float_weights()
        column_mass = w @ P
        pivot = int(np.argmax(column_mass))
        f0 = P[:, pivot] / column_mass[pivot]
        phi_vertex = column_mass / w
        structure = matrix_weighted_norm(P - np.outer(f0, column_mass), space)
        image, _ = Sf.step_operator().apply_block(f0[:, None])
        fixed = float(block_norms(space, image[:, 0] - f0)[0])
        agreement = matrix_weighted_norm(np.asarray(predicted.to_dense(), dtype=float) - P, space)
        checks = [
            ("rank_one", conv.rank == 1),
            ("rank_one_structure", structure <= agreement_tol),
            ("f0_positive", bool(np.all(f0 >= -agreement_tol))),
            ("f0_fixed", fixed <= agreement_tol),
            ("prediction_agrees", agreement <= agreement_tol),
            ("phi_floor", bool(np.min(phi_vertex) >= lb.norm_of_bound - agreement_tol)),
        ]
        if markov.holds:
            checks.append(("phi_is_norm_functional", bool(np.max(np.abs(phi_vertex - 1)) <= agreement_tol)))
            checks.append(("f0_normalised", abs(float(block_norms(space, f0)[0]) - 1) <= agreement_tol))
        details.update(f0=f0, phi=phi_vertex, structure_defect=structure, fixed_defect=fixed,
                       prediction_defect=agreement)
    holds = conv.converged and all(ok for _, ok in checks)
    details["checks"] = dict(checks)
    report = CertifierReport(
        "lasota_yorke", hypotheses, CERTIFIED if holds else VIOLATED, details=details,
        traces={"deficiency": lb.deficiency_trace}, convergence=conv, predicted_limit=predicted, bounds=[lb],
        tolerance=tol, horizon=horizon,
    )
    logger.info("lasota-yorke on %r: %s", S, report.status)
    return report, predicted


def individual_bounds_certify(S, eps, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, max_rounds=32):
    """Two-sided check: per-vertex bounds of norm >= eps  <=>  convergence with ||P e_j|| >= eps ||e_j||.

    Per-vertex bounds are the maximal estimates, so the identity reaches
    eps = 1 exactly.
    """
    if eps <= 0:
        raise DomainError("epsilon must be positive")
    if not S.space.is_al:
        raise DomainError("individual bounds are certified in AL mode")
    Sf = S.as_float()
    block = _normalised_vertices(Sf.space, NORM_AL)
    bounds, _ = _maximal_block(Sf, block, horizon, tol, max_rounds)
    trace, tail, escaped = _validate(Sf, block, bounds, horizon, HORIZON_MARGIN, NORM_AL, None)
    norms = block_norms(Sf.space, bounds)
    floor = eps * (1 - tol)
    valid = tail <= tol
    hyp_holds = bool(np.all(valid) and np.min(norms) >= floor)
    conv = detect_strong_convergence(Sf, horizon, tol)
    conclusion_holds = bool(conv.converged and conv.min_column_norm >= floor)
    hypotheses = [
        Hypothesis("vertex_bounds", hyp_holds, value=float(np.min(norms))),
        boundedness_hypothesis(S, horizon),
        Hypothesis("truncation", float(np.max(escaped)) <= tol, value=float(np.max(escaped))),
    ]
    converse_ok = not conclusion_holds or hyp_holds
    if hyp_holds and all(h.holds for h in hypotheses[1:]):
        status = CERTIFIED if conclusion_holds else VIOLATED
    elif not converse_ok:
        status = VIOLATED
    else:
        status = HYPOTHESIS_FAILED
    details = {
        "epsilon": eps, "min_bound_norm": float(np.min(norms)), "bound_norms": norms,
        "converged": conv.converged, "min_column_norm": conv.min_column_norm, "rank": conv.rank,
        "conclusion_holds": conclusion_holds, "forward_direction": hyp_holds and conclusion_holds, "converse_direction": converse_ok,
    }
    report = CertifierReport(
        "individual_bounds", hypotheses, status, details=details,
        traces={"deficiency": trace}, convergence=conv, tolerance=tol, horizon=horizon, status=status,
    )
    logger.info("individual bounds on %r at eps=%g: %s", S, eps, report.status)
    return report


def domination_transfer(S_dom, S_sub, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL):
    """If S_dom asymptotically dominates a convergent S_sub with ||P f|| >= eps ||f||, S_dom converges."""
    S_dom.space.check(S_sub.space)
    dom, sub = S_dom.as_float(), S_sub.as_float()
    space = dom.space
    x = y = _normalised_vertices(space, NORM_AL)
    start = _tail_start(horizon, 4)
    tail = np.zeros(space.dim)
    trace = []
    for n in range(1, horizon + 1):
        x, _ = dom.step_operator().apply_block(x)
        y, _ = sub.step_operator().apply_block(y)
        d = block_norms(space, np.maximum(y - x, 0))
        trace.append((n * dom.step_time(), float(np.max(d))))
        if n > start:
            tail = np.maximum(tail, d)
    dominated = bool(np.max(tail) <= tol)
    sub_conv = detect_strong_convergence(sub, horizon, tol)
    eps = sub_conv.min_column_norm if sub_conv.converged else 0.0
    hypotheses = [
        Hypothesis("asymptotic_domination", dominated, value=float(np.max(tail))),
        Hypothesis("sub_converges", sub_conv.converged),
        Hypothesis("epsilon_floor", eps > POSITIVITY_FLOOR, value=eps),
        boundedness_hypothesis(S_dom, horizon),
        boundedness_hypothesis(S_sub, horizon),
    ]
    conclusion = NOT_CHECKED
    dom_conv = None
    if all(h.holds for h in hypotheses):
        dom_conv = detect_strong_convergence(dom, horizon, tol)
        conclusion = CERTIFIED if dom_conv.converged else VIOLATED
    report = CertifierReport(
        "domination_transfer", hypotheses, conclusion, details={"epsilon": eps},
        traces={"domination_deficiency": trace}, convergence=dom_conv, tolerance=tol, horizon=horizon,
    )
    logger.info("domination transfer %r over %r: %s", S_dom, S_sub, report.status)
    return report


def ding_sequence(T, f, h, steps, tol=1e-9):
    """f_0 = f ^ h and f_{n+1} in [f_n, f] with T^{n+1} f_{n+1} = h ^ T^{n+1} f.

    ``h`` must be a fixed lower bound of (T, f) and T' a lattice homomorphism.
    Returns the list f_0..f_steps.
    """
    T = T.to_float()
    f = f.as_float()
    h = h.as_float()
    seq = [meet(f, h)]
    power = T
    for n in range(1, steps + 1):
        if n > 1:
            power = DenseOperator(T.space, T.apply_block(np.asarray(power.to_dense(), dtype=float))[0])
        target = meet(h, power.apply(f))
        seq.append(interval_preservation_witness(power, seq[-1], f, target, tol=tol))
    return seq


def _ding_sequence_valid(T, f, h, steps, tol):
    try:
        seq = ding_sequence(T, f, h, steps, tol)
    except LabException as ex:
        logger.debug("ding sequence stopped: %s", ex)
        return False
    return all(s.is_positive() and s <= f.as_float() for s in seq)


def ding_certify(S, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, positivity_floor=POSITIVITY_FLOOR,
                 sequence_steps=DING_SEQUENCE_STEPS):
    """Nonzero individual lower bounds for every 0 < f force convergence with P f > 0.

    Gate: the adjoint of the generator must be a lattice homomorphism.
    """
    gen = S.operator if S.is_discrete else evaluate(S, S.sample_step)
    if not adjoint_is_lattice_homomorphism(gen):
        raise StructuralGateError("the adjoint of %r is not a lattice homomorphism" % (S, ))
    Sf = S.as_float()
    block = _normalised_vertices(Sf.space, NORM_AL)
    bounds, norms, _, trace, certified, escaped = _individual_block(
        Sf, block, horizon, DEFAULT_SHRINK, tol, NORM_AL, None, HORIZON_MARGIN)
    nonzero = norms >= positivity_floor
    hyp = bool(np.all(nonzero) and np.all(certified))
    hypotheses = [
        Hypothesis("adjoint_lattice_homomorphism", True),
        Hypothesis("nonzero_vertex_bounds", hyp, value=float(np.min(norms))),
        Hypothesis("truncation", float(np.max(escaped)) <= tol, value=float(np.max(escaped))),
        boundedness_hypothesis(S, horizon),
    ]
    conv = detect_strong_convergence(Sf, horizon, tol)
    details = {"positivity_floor": positivity_floor, "min_bound_norm": float(np.min(norms))}
    conclusion = NOT_CHECKED
    if all(h.holds for h in hypotheses):
        positive = conv.converged and conv.min_column_norm >= positivity_floor
        conclusion = CERTIFIED if positive else VIOLATED
        details["min_column_norm"] = conv.min_column_norm
        if S.is_discrete:
            seq_ok = []
            for j in range(Sf.dim):
                f = LatticeVector(Sf.space, block[:, j])
                fixed = maximal_lower_bound_estimate(Sf, f, horizon, tol, fixed_only=True)
                seq_ok.append(_ding_sequence_valid(Sf.operator, f, fixed.bound, sequence_steps, 1e-9))
            details["sequence_valid"] = all(seq_ok)
    report = CertifierReport(
        "ding", hypotheses, conclusion, details=details, traces={"deficiency": trace}, convergence=conv,
        tolerance=tol, horizon=horizon,
    )
    logger.info("ding on %r: %s", S, report.status)
    return report


def _identity_defect(S, samples=4):
    Sf = S.as_float()
    space = Sf.space
    eye = identity_block(space)
    if Sf.is_discrete:
        return matrix_weighted_norm(np.asarray(Sf.operator.to_dense(), dtype=float) - eye, space)
    worst = 0.0
    for k in range(1, samples + 1):
        worst = max(worst, matrix_weighted_norm(
            np.asarray(evaluate(Sf, k * Sf.sample_step).to_dense(), dtype=float) - eye, space))
    return worst


def _norm_loss(S, block, horizon):
    """Norm lost by every column orbit between step ``horizon`` and step ``2 * horizon``."""
    step = S.step_operator()
    at_horizon = None
    for n in range(1, 2 * horizon + 1):
        block, _ = step.apply_block(block)
        if n == horizon:
            at_horizon = block_norms(S.space, block)
    return at_horizon - block_norms(S.space, block)


def lattice_homo_rigidity(S, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, positivity_floor=POSITIVITY_FLOOR):
    """For semigroups of lattice homomorphisms, nonzero individual bounds force the identity.

    Vertex bounds are validated out to twice the horizon. A bound that
    survives validation while its orbit keeps losing norm cannot be told
    apart from slow decay, so such runs are ``not_certified`` rather than
    ``violated``.
    """
    gen = S.operator if S.is_discrete else evaluate(S, S.sample_step)
    if not is_lattice_homomorphism(gen):
        raise StructuralGateError("%r is not a semigroup of lattice homomorphisms" % (S, ))
    Sf = S.as_float()
    block = _normalised_vertices(Sf.space, NORM_AL)
    _, norms, _, trace, certified, _ = _individual_block(
        Sf, block, horizon, DEFAULT_SHRINK, tol, NORM_AL, None, horizon)
    nonzero = certified & (norms >= positivity_floor)
    bounds_hold = bool(np.all(nonzero))
    decaying = nonzero & (_norm_loss(Sf, block, horizon) > tol)
    identity_defect = _identity_defect(S)
    is_identity = identity_defect <= tol
    conv = detect_strong_convergence(Sf, horizon, tol)
    positive_limit = bool(conv.converged and conv.min_column_norm >= positivity_floor)
    consistent = (bounds_hold == is_identity) and (not positive_limit or is_identity)
    if consistent:
        status = CERTIFIED if is_identity else HYPOTHESIS_FAILED
    elif bounds_hold and not is_identity and np.any(decaying):
        status = NOT_CERTIFIED
    else:
        status = VIOLATED
    details = {
        "identity": is_identity, "identity_defect": identity_defect, "nonzero_bounds": bounds_hold,
        "strictly_positive_limit": positive_limit, "min_bound_norm": float(np.min(norms)),
        "decaying_vertices": np.flatnonzero(decaying),
    }
    hypotheses = [Hypothesis("lattice_homomorphism", True), Hypothesis("nonzero_vertex_bounds", bounds_hold)]
    report = CertifierReport(
        "lattice_homomorphism_rigidity", hypotheses, status, details=details,
        traces={"deficiency": trace}, convergence=conv, tolerance=tol, horizon=horizon, status=status,
    )
    logger.info("lattice homomorphism rigidity on %r: %s", S, report.status)
    return report


def _domination_constant(step, start, horizon, adjoint=False):
    """Smallest M with T_n x <= M x over the sampled horizon, and whether it stops growing."""
    x = np.asarray(start, dtype=float)
    if not np.all(x > 0):
        return float('inf'), False
    half = _tail_start(horizon, 2)
    first = whole = 1.0
    current = x
    for n in range(1, horizon + 1):
        if adjoint:
            current = np.asarray(step._adjoint(current), dtype=float)
        else:
            current = step.apply_block(current[:, None])[0][:, 0]
        whole = max(whole, float(np.max(current / x)))
        if n <= half:
            first = whole
    bounded = np.isfinite(whole) and whole <= first * (1 + DOMINATION_GROWTH)
    return whole, bool(bounded)


def psi_lower_bound_certify(S, h, psi, f0=None, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, kind=UNIFORM,
                            eps=None, agreement_tol=AGREEMENT_TOL):
    """Lower bounds measured by a strictly positive functional psi, on any l^p space.

    Hypotheses: T_t f0 <= M f0 for a quasi-interior f0 and T_t' psi <= M psi.
    Without f0 the compact-orbit relaxation applies only to untruncated
    (genuinely finite-dimensional) semigroups.
    """
    if not psi.is_strictly_positive():
        raise DomainError("psi must be strictly positive")
    if kind not in (UNIFORM, INDIVIDUAL):
        raise DomainError("psi certification kind must be uniform or individual")
    S.space.check(psi.space)
    Sf = S.as_float()
    space = Sf.space
    step = Sf.step_operator()
    psi_c = np.array([float(c) for c in psi.coefficients])

    m_psi, psi_ok = _domination_constant(step, psi_c, horizon, adjoint=True)
    hypotheses = [Hypothesis("psi_domination", psi_ok, value=m_psi, estimate=True)]
    if f0 is not None:
        m_f0, f0_ok = _domination_constant(step, _floats(f0), horizon)
        hypotheses.append(Hypothesis("f0_domination", f0_ok and f0.is_quasi_interior(), value=m_f0, estimate=True))
    elif S.truncated:
        hypotheses.append(Hypothesis("f0_domination", False,
                                     note="no quasi-interior f0 supplied; truncated semigroup has no compact-orbit relaxation"))
    else:
        hypotheses.append(Hypothesis("compact_orbits", True, note="finite dimension"))

    bounds = []
    if kind == UNIFORM:
        lb = uniform_lower_bound_check(Sf, h, horizon, tol, selector=NORM_PSI, psi=psi)
        bounds.append(lb)
        level = float(lb.norm_of_bound)
        hypotheses.append(Hypothesis("psi_lower_bound", lb.certified and level > 0, value=level))
        trace = lb.deficiency_trace
    else:
        block = _normalised_vertices(space, NORM_PSI, psi)
        _, norms, _, trace, certified, _ = _individual_block(
            Sf, block, horizon, DEFAULT_SHRINK, tol, NORM_PSI, psi, HORIZON_MARGIN)
        level = float(np.min(norms))
        floor = POSITIVITY_FLOOR if eps is None else eps
        if f0 is None and not S.truncated:
            # the compact-orbit route for individual bounds asks for psi-mass at least one
            floor = max(floor, 1 - tol)
        hypotheses.append(Hypothesis("psi_individual_bounds", bool(np.all(certified) and level >= floor), value=level))

    conv = detect_strong_convergence(Sf, horizon, tol, selector=NORM_NATIVE)
    details = {"kind": kind, "epsilon": level, "native_converged": conv.converged, "p": space.p}
    conclusion = NOT_CHECKED
    if all(hh.holds for hh in hypotheses):
        ok = conv.converged
        if ok:
            adj = DenseOperator(space, conv.limit.matrix)._adjoint(psi_c)
            ok = bool(np.all(np.asarray(adj, dtype=float) >= (level - agreement_tol) * psi_c))
            if kind == UNIFORM:
                ok = ok and conv.rank == 1
            details["rank"] = conv.rank
        conclusion = CERTIFIED if ok else VIOLATED
    report = CertifierReport(
        "psi_lower_bound", hypotheses, conclusion, details=details, traces={"psi_deficiency": trace},
        convergence=conv, bounds=bounds, tolerance=tol, horizon=horizon,
    )
    logger.info("psi lower bound on %r: %s", S, report.status)
    return report


def asymptotic_domination_convergence(vectors, h, tol=1e-12):
    """For ||f_j|| = ||h|| in AL norm: ||(f_j - h)^+|| <= ||(f_j - h)^-|| and ||f_j - h|| <= 2 deficiency."""
    rows = []
    for f in vectors:
        diff = f - h
        plus = diff.positive_part().norm(NORM_AL)
        minus = deficiency(f, h)
        dist = diff.norm(NORM_AL)
        scale = max(1.0, float(f.norm(NORM_AL)))
        rows.append({
            "plus": float(plus), "minus": float(minus), "distance": float(dist),
            "holds": plus <= minus + tol * scale and dist <= 2 * minus + tol * scale,
        })
    return rows


def vertex_reduction_gap(T, h, f, selector=NORM_AL):
    """max_j deficiency(T e_j/||e_j||, h) - deficiency(T f, h); nonnegative for normalised f >= 0."""
    space = T.space.as_float()
    T = T.to_float()
    block = _normalised_vertices(space, selector)
    image, _ = T.apply_block(block)
    worst = float(np.max(block_norms(space, np.maximum(_floats(h)[:, None] - image, 0), selector)))
    return worst - float(deficiency(T.apply(f.as_float()), h.as_float(), selector))
