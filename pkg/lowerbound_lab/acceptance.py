# coding:utf-8
"""Acceptance suite: the closed-form reproductions and the randomized property suites.

Each criterion returns an :class:`AcceptanceResult`; the suite passes when
every criterion does. Property suites use a fixed numpy seed.
"""

import time
from collections import OrderedDict
from fractions import Fraction

import numpy as np

from . import gallery
from .bounds import asymptotic_domination_convergence, ding_certify, individual_bounds_certify, \
    lasota_yorke_certify, vertex_reduction_gap
from .const import DEFAULT_STEPS, EXIT_OK, EXIT_VIOLATION, HORIZON_MARGIN
from .frobenius_perron import fp_norm_rigidity_suite, koopman
from .lattice import NORM_AL, Functional, LatticeVector, WeightedSpace, deficiency
from .logger import logger
from .operators import DenseOperator, TransportOperator, interval_preservation_witness, matrix_weighted_norm
from .report import CERTIFIED, HYPOTHESIS_FAILED, VIOLATED
from .semigroup import EmbeddedConsistencyReport, detect_strong_convergence, embedded_discrete_consistency, orbit

PROPERTY_CASES = 1000
PROPERTY_SEED = 20240917


class AcceptanceResult(object):
    def __init__(self, name, passed, details=None, seconds=0.0):
        self.name = name
        self.passed = bool(passed)
        self.details = details or {}
        self.seconds = seconds

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "seconds": self.seconds, "details": self.details}

    def __repr__(self):
        return "AcceptanceResult(%s, passed=%s)" % (self.name, self.passed)


def example_4_3_reproduction(N=64, steps=40):
    S = gallery.build_example_4_3(N, exact=True)
    T = S.operator
    space = S.space
    ones = np.array([Fraction(1)] * N, dtype=object)
    mass = T._adjoint(ones) + T.leak() / space.weights
    markov = all(m == 1 for m in mass)

    orbit_ok = True
    f = space.unit(1)
    vectors = []
    for n in range(1, steps + 1):
        f = T.apply(f)
        vectors.append(f)
        if f != gallery.example_4_3_orbit(space, n):
            orbit_ok = False
    c5 = gallery.orbit_mass(5)

    gap = min(float((vectors[n - 1] - vectors[m - 1]).norm())
              for n in range(20, steps + 1) for m in range(n + 1, steps + 1))
    return {
        "markov": markov, "orbit_formula": orbit_ok, "c5": str(c5), "min_tail_gap": gap,
        "passed": markov and orbit_ok and c5 == Fraction(9765, 32768) and gap >= 0.5,
    }


def lasota_yorke_suite(count=20, seed=7, horizon=200):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        dim = int(rng.integers(5, 51))
        S = gallery.random_primitive_stochastic(dim, rng=rng)
        pi = gallery.perron_vector(S.operator)
        report, _ = lasota_yorke_certify(S, pi.scale(0.5), horizon)
        oracle = np.outer(np.asarray(pi.entries, dtype=float), np.ones(dim))
        conv = report.convergence
        limit_gap = matrix_weighted_norm(conv.limit.matrix - oracle, S.space) if conv.limit is not None else np.inf
        f0_mass = float(np.sum(report.details.get("f0", [np.nan])))
        rows.append({
            "dim": dim, "status": report.status, "limit_gap": limit_gap, "rank": conv.rank, "f0_mass": f0_mass,
            "passed": report.status == CERTIFIED and limit_gap <= 1e-10 and conv.rank == 1
            and abs(f0_mass - 1) <= 1e-10,
        })
    return {"rows": rows, "passed": all(r["passed"] for r in rows)}


def two_sided_individual_bounds(seed=3):
    rows = []
    for sizes in ((3, 4), (2, 3, 4), (2, 2, 3, 3)):
        S = gallery.build_block_diagonal(sizes, seed=seed)
        report = individual_bounds_certify(S, S.extras["epsilon"])
        rows.append({"instance": "blocks%s" % (sizes, ), "status": report.status, "rank": report.convergence.rank,
                     "passed": report.status == CERTIFIED and report.convergence.rank == len(sizes)})
    floors = []
    for N in (16, 32, 64):
        S = gallery.build_example_4_3(N)
        report = individual_bounds_certify(S, 1e-3, horizon=N - HORIZON_MARGIN)
        floors.append(report.details["min_bound_norm"])
        rows.append({"instance": "example-4-3/%d" % N, "status": report.status,
                     "converged": report.details["converged"],
                     "passed": report.status == HYPOTHESIS_FAILED and not report.details["converged"]})
    never_violated = all(r["status"] != VIOLATED for r in rows)
    return {"rows": rows, "example_4_3_floors": floors, "passed": never_violated and all(r["passed"] for r in rows)}


def ding_reproduction():
    collapse = gallery.build_collapse(100)
    r1 = ding_certify(collapse)
    expected = np.zeros((100, 100))
    expected[0, :] = 1.0
    limit_ok = r1.convergence.limit is not None and \
        matrix_weighted_norm(r1.convergence.limit.matrix - expected, collapse.space) <= 1e-12

    S = gallery.build_example_5_4(32)
    r2 = ding_certify(S)
    P = r2.convergence.limit.matrix if r2.convergence.limit is not None else None
    norms = [] if P is None else [float(np.sum(np.abs(P[:, k]))) for k in range(32)]
    projection_ok = P is not None and matrix_weighted_norm(P - np.asarray(S.operator.to_dense(), dtype=float),
                                                           S.space) <= 1e-12
    norms_ok = len(norms) == 32 and all(abs(v - 2.0 ** -k) <= 1e-12 for k, v in enumerate(norms))
    return {
        "collapse": r1.status, "collapse_min_column": r1.convergence.min_column_norm,
        "example_5_4": r2.status, "projection": projection_ok, "column_norms": norms_ok,
        "passed": r1.status == CERTIFIED and limit_ok and r1.convergence.min_column_norm > 0
        and r2.status == CERTIFIED and projection_ok and norms_ok,
    }


def doubling_defects(k):
    """||T^n - P|| for n = 1..k-1 on dyadic cells; every quantity is a dyadic rational, so float is exact."""
    S = gallery.build_doubling_ulam(k)
    T = S.operator.matrix.toarray()
    n_cells = 2 ** k
    P = np.full((n_cells, n_cells), 1.0 / n_cells)
    power = np.eye(n_cells)
    out = []
    for _ in range(1, k):
        power = T @ power
        out.append(matrix_weighted_norm(power - P, S.space))
    return out


def fp_rigidity_reproduction(k=8):
    doubling = gallery.build_doubling_ulam(k)
    instances = [
        ("doubling-ulam", doubling.operator, k - 1),
        ("cyclic-7", gallery.build_cyclic(7).operator, 28),
        ("cyclic-12", gallery.build_cyclic(12).operator, 48),
        ("two-point", gallery.build_two_point_fp().operator, 40),
    ]
    rows = dict((r.name, r) for r in fp_norm_rigidity_suite(instances))
    defects = doubling_defects(k)
    checks = {
        "doubling": rows["doubling-ulam"].measure_preserving and not rows["doubling-ulam"].norm_convergent
        and all(d >= 1 for d in defects),
        "cyclic": all(rows[n].measure_preserving and not rows[n].norm_convergent for n in ("cyclic-7", "cyclic-12")),
        "two_point": rows["two-point"].norm_convergent and not rows["two-point"].identity
        and not rows["two-point"].measure_preserving,
        "no_violation": all(r.verdict != VIOLATED for r in rows.values()),
    }
    return {"rows": [r.to_dict() for r in rows.values()], "doubling_defects": defects, "checks": checks,
            "passed": all(checks.values())}


def example_6_6_reproduction(N=400, p=2, n_envelope=300, seed=11):
    S = gallery.build_example_6_6(N, p)
    space = S.space
    rng = np.random.default_rng(seed)
    conserved = True
    for n in (1, 5, 20, 60):
        entries = np.zeros(N)
        entries[1:N - 1 - n] = rng.random(N - 2 - n)
        f = LatticeVector(space, entries)
        tail0 = LatticeVector(space, np.concatenate([[0.0], entries[1:]])).norm()
        g = orbit(S, f, [n])[0]
        tail = LatticeVector(space, np.concatenate([[0.0], g.entries[1:]])).norm()
        conserved = conserved and abs(tail - tail0) <= 1e-12 * tail0

    native = detect_strong_convergence(S, horizon=200)

    S1 = S.with_space(S.extras["envelope"])
    e1 = S1.space.unit(1)
    target = S1.space.unit(0).scale(float(S1.space.norm_functional()(e1)))
    residuals = [float((f - target).norm(NORM_AL)) for f in orbit(S1, e1, range(1, n_envelope + 1))]
    oracle = [gallery.example_6_6_tail_residual(n, p) for n in range(1, n_envelope + 1)]
    agree = all(abs(r - o) <= 1e-9 * o for r, o in zip(residuals, oracle))
    decreasing = all(b < a for a, b in zip(residuals, residuals[1:]))
    return {
        "tail_conserved": conserved, "native_converged": native.converged,
        "envelope_residual": residuals[-1], "oracle": oracle[-1], "oracle_agrees": agree, "decreasing": decreasing,
        "passed": conserved and not native.converged and agree and decreasing,
    }


def embedded_reproduction(t0=1.0):
    gen = gallery.build_primitive_generator()
    r1 = embedded_discrete_consistency(gen, DEFAULT_STEPS)
    rot = gallery.build_rotation_semigroup(t0)
    r2 = embedded_discrete_consistency(rot, [t0])
    r3 = embedded_discrete_consistency(rot, [t0 / 2])
    return {
        "generator": r1.status, "generator_limits_agree": r1.limits_agree,
        "generator_agrees_with_continuous": r1.agrees_with_continuous,
        "rotation_at_period": r2.status, "rotation_half_period_converges": r3.embedded[0].converged,
        "passed": r1.status == EmbeddedConsistencyReport.CONSISTENT and r1.limits_agree and r1.agrees_with_continuous
        and r2.embedded[0].converged and not r2.continuous.converged and not r3.embedded[0].converged,
    }


def _random_space(rng, dim):
    return WeightedSpace(rng.uniform(0.2, 3.0, dim))


def _random_transport(rng, space):
    return TransportOperator(space, rng.integers(0, space.dim, space.dim), rng.uniform(0.1, 2.0, space.dim))


def property_suites(cases=PROPERTY_CASES, seed=PROPERTY_SEED):
    rng = np.random.default_rng(seed)
    failures = OrderedDict((name, 0) for name in (
        "vertex_reduction", "duality", "modulus", "interval_witness", "equal_norm", "asymptotic_domination",
        "al_additivity"))
    for _ in range(cases):
        dim = int(rng.integers(2, 8))
        space = _random_space(rng, dim)
        T = DenseOperator(space, rng.random((dim, dim)) * (rng.random((dim, dim)) < 0.7))

        h = LatticeVector(space, rng.random(dim))
        f = LatticeVector(space, rng.random(dim))
        f = f.scale(1.0 / f.norm(NORM_AL))
        if vertex_reduction_gap(T, h, f) < -1e-12:
            failures["vertex_reduction"] += 1

        phi = Functional(space, rng.normal(size=dim))
        g = LatticeVector(space, rng.normal(size=dim))
        lhs, rhs = T.adjoint_apply(phi)(g), phi(T.apply(g))
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(lhs), abs(rhs)):
            failures["duality"] += 1

        R = _random_transport(rng, space)
        K = koopman(R)
        if np.max(np.abs(K.apply(g).modulus().entries - K.apply(g.modulus()).entries)) > 1e-12:
            failures["modulus"] += 1

        lo = LatticeVector(space, rng.random(dim))
        hi = lo + LatticeVector(space, rng.random(dim))
        theta = rng.random(dim)
        y = R.apply(lo + LatticeVector(space, theta * (hi.entries - lo.entries)))
        try:
            x = interval_preservation_witness(R, lo, hi, y)
            ok = lo <= x <= hi and np.max(np.abs(R.apply(x).entries - y.entries)) <= 1e-9
        except Exception:
            ok = False
        if not ok:
            failures["interval_witness"] += 1

        hv = LatticeVector(space, rng.random(dim))
        hv = hv.scale(1.0 / hv.norm(NORM_AL))
        vecs = []
        for _ in range(3):
            v = LatticeVector(space, rng.random(dim))
            vecs.append(v.scale(1.0 / v.norm(NORM_AL)))
        # equal AL norms: the positive and negative parts of f - h carry the same mass
        for v in vecs:
            plus, minus = (v - hv).positive_part().norm(NORM_AL), deficiency(v, hv)
            if abs(plus - minus) > 1e-12:
                failures["equal_norm"] += 1
                break
        if not all(row["holds"] for row in asymptotic_domination_convergence(vecs, hv)):
            failures["asymptotic_domination"] += 1

        a = LatticeVector(space, rng.random(dim))
        b = LatticeVector(space, rng.random(dim))
        total = (a + b).norm(NORM_AL)
        if abs(total - a.norm(NORM_AL) - b.norm(NORM_AL)) > 1e-12 * total:
            failures["al_additivity"] += 1
    return {"cases": cases, "seed": seed, "failures": dict(failures), "passed": not any(failures.values())}


CRITERIA = OrderedDict([
    ("example-4-3", example_4_3_reproduction),
    ("lasota-yorke", lasota_yorke_suite),
    ("individual-bounds", two_sided_individual_bounds),
    ("ding", ding_reproduction),
    ("fp-rigidity", fp_rigidity_reproduction),
    ("example-6-6", example_6_6_reproduction),
    ("embedded-consistency", embedded_reproduction),
    ("properties", property_suites),
])


def run_criterion(name):
    started = time.perf_counter()
    try:
        details = CRITERIA[name]()
        passed = details.pop("passed")
    except Exception as ex:
        logger.exception("acceptance criterion %s raised", name)
        details, passed = {"error": "%s: %s" % (ex.__class__.__name__, ex)}, False
    result = AcceptanceResult(name, passed, details, time.perf_counter() - started)
    logger.info("acceptance %s: %s (%.2fs)", name, "passed" if passed else "FAILED", result.seconds)
    return result


def run_acceptance(names=None):
    results = [run_criterion(name) for name in (names or CRITERIA)]
    return results, EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION
