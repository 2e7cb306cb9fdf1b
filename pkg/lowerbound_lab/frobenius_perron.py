# coding:utf-8
"""Frobenius-Perron operators of finite maps and Ulam discretisations of interval maps.

Densities are column vectors throughout: column j of an FP matrix says
where the mass of atom (or cell) j goes, so every FP operator built here is
column-stochastic with respect to its weights.
"""

from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .const import DEFAULT_HORIZON, DEFAULT_TOL, POSITIVITY_FLOOR
from .exception import DomainError, NonConvergenceError, StructuralGateError, UnsupportedBranchError
from .lattice import WeightedSpace, LatticeVector, block_norms
from .logger import logger
from .operators import RankOneOperator, SparseOperator, TransportOperator, adjoint_is_lattice_homomorphism, \
    identity_block, is_markov, matrix_weighted_norm
from .report import CERTIFIED, NOT_CHECKED, VIOLATED, CertifierReport, Hypothesis
from .semigroup import Semigroup, operator_norm_convergence


def _rational(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(str(value))


class Branch(object):
    """One monotone piece of an interval map, defined on [a, b).

    Either affine (x -> slope * x + intercept, exact) or a callable sampled
    with ``quadrature`` points per cell (approximate).
    """

    def __init__(self, domain, slope=None, intercept=None, func=None, quadrature=None):
        a, b = domain
        self.a = _rational(a)
        self.b = _rational(b)
        if not self.a < self.b:
            raise DomainError("empty branch domain [%s, %s)" % (self.a, self.b))
        self.func = func
        self.quadrature = quadrature
        if func is None:
            if slope is None or intercept is None:
                raise DomainError("affine branches need slope and intercept")
            self.slope = _rational(slope)
            self.intercept = _rational(intercept)
            if self.slope == 0:
                raise DomainError("branch on [%s, %s) is not injective" % (self.a, self.b))
            lo, hi = sorted(self.image())
            if lo < 0 or hi > 1:
                raise DomainError("branch on [%s, %s) leaves [0, 1)" % (self.a, self.b))
        else:
            self.slope = self.intercept = None

    @property
    def affine(self):
        return self.func is None

    def __call__(self, x):
        if self.affine:
            return self.slope * x + self.intercept
        return self.func(x)

    def image(self):
        return self(self.a), self(self.b)

    def to_dict(self):
        if not self.affine:
            raise UnsupportedBranchError("callable branches do not serialise")
        return {"domain": [str(self.a), str(self.b)], "slope": str(self.slope), "intercept": str(self.intercept)}


class IntervalMap(object):
    def __init__(self, branches, name=None):
        branches = sorted(branches, key=lambda br: br.a)
        if not branches or branches[0].a != 0 or branches[-1].b != 1:
            raise DomainError("branches must partition [0, 1)")
        for left, right in zip(branches, branches[1:]):
            if left.b != right.a:
                raise DomainError("branches must partition [0, 1) without gaps or overlaps")
        self.branches = branches
        self.name = name

    @classmethod
    def from_spec(cls, spec):
        if spec.get("kind") != "piecewise_affine":
            raise DomainError("expected a piecewise_affine map spec, got %r" % (spec.get("kind"), ))
        return cls([Branch(b["domain"], b["slope"], b["intercept"]) for b in spec["branches"]], spec.get("name"))

    def to_spec(self):
        return {"kind": "piecewise_affine", "branches": [b.to_dict() for b in self.branches]}

    def is_markov_partition(self, n_cells):
        """Affine branches whose endpoints and endpoint images all sit on the cell grid."""
        for br in self.branches:
            if not br.affine:
                return False
            points = (br.a, br.b) + br.image()
            if any((p * n_cells).denominator != 1 for p in points):
                return False
        return True

    def __call__(self, x):
        for br in self.branches:
            if br.a <= x < br.b:
                return br(x)
        raise DomainError("%r outside [0, 1)" % (x, ))


def doubling_map():
    return IntervalMap([Branch((0, Fraction(1, 2)), 2, 0), Branch((Fraction(1, 2), 1), 2, -1)], name="doubling")


def tent_map():
    return IntervalMap([Branch((0, Fraction(1, 2)), 2, 0), Branch((Fraction(1, 2), 1), -2, 2)], name="tent")


def identity_map():
    return IntervalMap([Branch((0, 1), 1, 0)], name="identity")


class UlamOperator(SparseOperator):
    """Ulam matrix on the uniform partition, weighted by the cell measures."""

    kind = "ulam"

    def __init__(self, space, matrix, interval_map, approximate):
        SparseOperator.__init__(self, space, matrix)
        self.interval_map = interval_map
        self.approximate = approximate

    @property
    def cells(self):
        return self.dim

    def _rebind(self, space):
        return UlamOperator(space, self.matrix, self.interval_map, self.approximate)


def _affine_entries(br, n, rows, cols, vals):
    width = Fraction(1, n)
    first = int(br.a * n)
    last = -(-br.b * n // 1)
    for j in range(first, int(last)):
        lo = max(br.a, j * width)
        hi = min(br.b, (j + 1) * width)
        if lo >= hi:
            continue
        y0, y1 = sorted((br(lo), br(hi)))
        for i in range(int(y0 * n), min(n, int(-(-y1 * n // 1)))):
            overlap = min(y1, (i + 1) * width) - max(y0, i * width)
            if overlap > 0:
                rows.append(i)
                cols.append(j)
                # preimage measure inside cell j, relative to m(A_j)
                vals.append(overlap / abs(br.slope) / width)


def _sampled_entries(br, n, rows, cols, vals):
    if not br.quadrature:
        raise UnsupportedBranchError("non-affine branch on [%s, %s) needs a quadrature" % (br.a, br.b))
    a, b = float(br.a), float(br.b)
    for j in range(int(a * n), int(np.ceil(b * n))):
        lo, hi = max(a, j / n), min(b, (j + 1) / n)
        if lo >= hi:
            continue
        xs = lo + (np.arange(br.quadrature) + 0.5) * (hi - lo) / br.quadrature
        ys = np.clip(np.floor(np.array([br.func(x) for x in xs]) * n).astype(int), 0, n - 1)
        share = (hi - lo) * n / br.quadrature
        for i in ys:
            rows.append(int(i))
            cols.append(j)
            vals.append(share)


def ulam_matrix(interval_map, n_cells):
    """T_ij = m(phi^-1(A_i) n A_j) / m(A_j) on the uniform partition into ``n_cells`` cells."""
    if n_cells < 2:
        raise DomainError("ulam discretisation needs at least two cells")
    rows, cols, vals = [], [], []
    for br in interval_map.branches:
        if br.affine:
            _affine_entries(br, n_cells, rows, cols, vals)
        else:
            _sampled_entries(br, n_cells, rows, cols, vals)
    space = WeightedSpace([Fraction(1, n_cells)] * n_cells)
    matrix = sp.coo_matrix((np.array([float(v) for v in vals]), (rows, cols)), shape=(n_cells, n_cells))
    approximate = not interval_map.is_markov_partition(n_cells)
    op = UlamOperator(space, matrix, interval_map, approximate)
    if approximate:
        logger.debug("ulam matrix of %s at %d cells is approximate", interval_map.name, n_cells)
    return op


class FiniteMap(object):
    def __init__(self, sigma, space=None):
        sigma = np.asarray(sigma, dtype=int)
        if space is None:
            space = WeightedSpace.counting(sigma.shape[0])
        if sigma.shape[0] != space.dim:
            raise DomainError("sigma of length %d on a space of dim %d" % (sigma.shape[0], space.dim))
        if np.any(sigma < 0) or np.any(sigma >= space.dim):
            raise DomainError("sigma must be a total map on 0..%d" % (space.dim - 1))
        self.sigma = sigma
        self.space = space

    @classmethod
    def from_spec(cls, spec, space=None):
        if spec.get("kind") != "finite":
            raise DomainError("expected a finite map spec, got %r" % (spec.get("kind"), ))
        return cls(spec["sigma"], space)

    def to_spec(self):
        return {"kind": "finite", "sigma": self.sigma.tolist()}


def fp_of_finite_map(fmap):
    """Transport kernel with gains w_j / w_sigma(j): (Tf)(i) w_i = sum over sigma(j) = i of f_j w_j."""
    w = fmap.space.weights
    gains = w / w[fmap.sigma]
    return TransportOperator(fmap.space, fmap.sigma, gains)


def koopman(T):
    """The adjoint as an operator on functional coefficients: (T'g)_j = sum_i T_ij w_i g_i / w_j."""
    if isinstance(T, TransportOperator):
        w = T.space.float_weights()
        values = np.asarray(T.gains, dtype=float) * w[T.sigma] / w
        return SparseOperator(T.space.as_float(), sp.coo_matrix(
            (values, (np.arange(T.dim), T.sigma)), shape=(T.dim, T.dim)))
    if not isinstance(T, SparseOperator):
        raise DomainError("koopman operators are built for transport or ulam kernels")
    w = T.space.float_weights()
    K = sp.diags(1.0 / w) @ T.matrix.T @ sp.diags(w)
    return SparseOperator(T.space, K)


def is_measure_preserving(T, tol=1e-12):
    ones = T.space.ones()
    image = T.apply(ones)
    return bool(np.max(np.abs(np.array(image.entries, dtype=float) - 1.0)) <= tol)


def invariant_density(T, tol=1e-12, max_iter=10000, start=None):
    """Power iteration to the normalised fixed density of a Markov operator.

    The default start tilts the uniform density by the atom index: the flat
    density is fixed by every measure-preserving map and would hide periodicity.
    """
    T = T.to_float()
    if not is_markov(T, 1e-10):
        raise DomainError("invariant densities are computed for Markov operators")
    space = T.space
    if start is None:
        x = 1.0 + np.arange(space.dim) / space.dim
    else:
        x = np.array([float(v) for v in start.entries])
    x = x / float(block_norms(space, x)[0])
    for k in range(max_iter):
        nxt, _ = T.apply_block(x[:, None])
        nxt = nxt[:, 0]
        nxt = nxt / float(block_norms(space, nxt)[0])
        if float(block_norms(space, nxt - x)[0]) <= tol:
            logger.debug("invariant density after %d iterations", k + 1)
            return LatticeVector(space, nxt)
        x = nxt
    raise NonConvergenceError("power iteration did not settle within %d steps (periodic or not ergodic)" % max_iter)


def norm_defects(T, limit, steps):
    """||T^n - limit|| in the weighted l^1 operator norm for n = 1..steps."""
    T = T.to_float()
    space = T.space
    P = np.asarray(limit.to_dense(), dtype=float)
    block = identity_block(space)
    out = []
    for _ in range(steps):
        block, _ = T.apply_block(block)
        out.append(matrix_weighted_norm(block - P, space))
    return out


def density_projection(T, density):
    """1 (x) f0 for a normalised fixed density f0."""
    return RankOneOperator(T.space.as_float().norm_functional(), density)


def _identity_defect(T):
    T = T.to_float()
    return matrix_weighted_norm(np.asarray(T.to_dense(), dtype=float) - identity_block(T.space), T.space)


def adjoint_homo_norm_rigidity(S, horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, positivity_floor=POSITIVITY_FLOOR):
    """Adjoint lattice homomorphisms with a quasi-interior fixed point: norm convergence forces the identity."""
    if not S.is_discrete:
        raise DomainError("norm rigidity is checked on discrete semigroups")
    if not adjoint_is_lattice_homomorphism(S.operator):
        raise StructuralGateError("the adjoint of %r is not a lattice homomorphism" % (S, ))
    conv = operator_norm_convergence(S, horizon, tol)
    hypotheses = [Hypothesis("adjoint_lattice_homomorphism", True), Hypothesis("norm_convergent", conv.converged)]
    details = {}
    conclusion = NOT_CHECKED
    if conv.converged:
        # P 1 is fixed, and it is quasi-interior iff some fixed vector is
        fixed = np.asarray(conv.limit.matrix, dtype=float) @ np.ones(S.dim)
        quasi = bool(np.all(fixed > positivity_floor))
        hypotheses.append(Hypothesis("quasi_interior_fixed_point", quasi, value=float(np.min(fixed))))
        if quasi:
            defect = _identity_defect(S.operator)
            details["identity_defect"] = defect
            conclusion = CERTIFIED if defect <= tol else VIOLATED
    return CertifierReport("adjoint_homomorphism_norm_rigidity", hypotheses, conclusion, details=details,
                           convergence=conv, tolerance=tol, horizon=horizon)


class SuiteRow(object):
    def __init__(self, name, measure_preserving, exact_fp, norm_convergent, identity, verdict, defects,
                 horizon, approximate=False):
        self.name = name
        self.measure_preserving = measure_preserving
        self.exact_fp = exact_fp
        self.norm_convergent = norm_convergent
        self.identity = identity
        self.verdict = verdict
        self.defects = defects
        self.horizon = horizon
        self.approximate = approximate

    def to_dict(self):
        return dict(self.__dict__)


def fp_norm_rigidity_suite(instances, tol=DEFAULT_TOL):
    """Measure-preserving FP semigroups that converge in operator norm must be the identity.

    ``instances`` yields (name, operator, horizon) triples. Ulam operators are
    marked approximate and are not held to the exact assertion; their defect
    sequence against the density projection is still reported.
    """
    rows = []
    for name, T, horizon in instances:
        S = Semigroup.discrete(T, name=name)
        exact_fp = not isinstance(T, UlamOperator) and adjoint_is_lattice_homomorphism(T)
        approximate = isinstance(T, UlamOperator)
        preserving = is_measure_preserving(T)
        conv = operator_norm_convergence(S, horizon, tol)
        identity = _identity_defect(T) <= tol
        defects = []
        try:
            density = invariant_density(T)
            defects = norm_defects(T, density_projection(T, density), horizon)
        except (NonConvergenceError, DomainError):
            pass
        violated = exact_fp and preserving and conv.converged and not identity
        rows.append(SuiteRow(name, preserving, exact_fp, conv.converged, identity,
                             VIOLATED if violated else CERTIFIED, defects, horizon, approximate))
        logger.debug("fp rigidity %s: preserving=%s norm_convergent=%s identity=%s", name, preserving,
                     conv.converged, identity)
    return rows


def fp_suite_report(rows, tol=DEFAULT_TOL):
    violated = [r.name for r in rows if r.verdict == VIOLATED]
    hypotheses = [Hypothesis("instances", bool(rows), value=len(rows))]
    conclusion = VIOLATED if violated else CERTIFIED
    return CertifierReport("fp_norm_rigidity", hypotheses, conclusion,
                           details={"rows": [r.to_dict() for r in rows], "violations": violated}, tolerance=tol)
