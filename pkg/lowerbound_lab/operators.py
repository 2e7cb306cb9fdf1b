"""Structured positive operators on weighted spaces.

Conventions:

* operators act on column vectors; a Markov operator has weighted column
  sums ``sum_i w_i T_ij = w_j``;
* the adjoint acts on functional coefficients, ``<T'psi, f> = <psi, Tf>``,
  which on a weighted space reads ``(T'psi)_j = sum_i T_ij w_i psi_i / w_j``;
* truncated kernels (a shift that runs off the last coordinate) keep an
  explicit per-column ``leak``: the AL-mass a unit coefficient at column j
  pushes past the boundary. ``apply_tracked`` reports it next to the image.
"""

from abc import ABC, abstractmethod
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .const import DENSE_CAP
from .exception import DimensionError, DomainError, InfeasibleTargetError
from .lattice import Functional, LatticeVector, as_entries, compensated_sum


def identity_block(space):
    if space.exact:
        eye = np.empty((space.dim, space.dim), dtype=object)
        eye.fill(Fraction(0))
        for k in range(space.dim):
            eye[k, k] = Fraction(1)
        return eye
    return np.eye(space.dim)


def _zeros_like(x, exact):
    if exact:
        out = np.empty(x.shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(x.shape)


def _require_nonnegative(values, what):
    if not bool(np.all(np.asarray(values) >= 0)):
        raise DomainError("%s has negative entries" % what)


class PositiveOperator(ABC):
    kind = None

    def __init__(self, space, positivity_exempt=False):
        self.space = space
        self.positivity_exempt = positivity_exempt

    @property
    def dim(self):
        return self.space.dim

    @property
    def exact(self):
        return self.space.exact

    @abstractmethod
    def _forward(self, x):
        """Image of a raw (dim,) or (dim, k) array."""

    @abstractmethod
    def _adjoint(self, c):
        """Adjoint action on raw functional coefficients."""

    @abstractmethod
    def pattern(self):
        """Structural nonzeros as a boolean CSR matrix."""

    def leak(self):
        return _zeros_like(np.empty(self.dim), self.exact)

    @property
    def truncated(self):
        return bool(np.any(self.leak() != 0))

    def _escaped(self, x):
        return self.leak() @ np.abs(x)

    def _forward_tracked(self, x):
        return self._forward(x), self._escaped(x)

    # public surface

    def apply(self, f):
        self.space.check(f.space)
        return LatticeVector(self.space, self._forward(f.entries))

    def apply_tracked(self, f):
        self.space.check(f.space)
        y, escaped = self._forward_tracked(f.entries)
        return LatticeVector(self.space, y), escaped

    def apply_block(self, block):
        """Apply to every column of a (dim, k) array; returns (image, escaped per column)."""
        block = np.asarray(block) if self.exact else np.asarray(block, dtype=float)
        if block.shape[0] != self.dim:
            raise DimensionError("block with %d rows on a space of dim %d" % (block.shape[0], self.dim))
        return self._forward_tracked(block)

    def adjoint_apply(self, phi):
        self.space.check(phi.space)
        return Functional(self.space, self._adjoint(phi.coefficients))

    def to_dense(self, cap=DENSE_CAP, force=False):
        if self.dim > cap and not force:
            raise DimensionError("refusing to materialise a %dx%d operator (cap %d)" % (self.dim, self.dim, cap))
        return self._forward(identity_block(self.space))

    def to_sparse(self):
        dense = self.to_dense(force=True)
        return sp.csc_matrix(np.array(dense, dtype=float))

    def to_float(self):
        if not self.exact:
            return self
        return self.with_space(self.space.as_float())

    def with_space(self, space):
        """Rebind to a space with the same atoms and weights (e.g. an l^1 envelope)."""
        self.space.check(space)
        clone = self._rebind(space)
        clone.positivity_exempt = self.positivity_exempt
        return clone

    def _rebind(self, space):
        return DenseOperator(space, self.to_dense(force=True), positivity_exempt=self.positivity_exempt)

    def to_spec(self):
        dense = self.to_dense()
        return {
            "kind": "dense",
            "matrix": [[str(v) if self.exact else float(v) for v in row] for row in dense],
        }

    def __call__(self, f):
        return self.apply(f)

    def __repr__(self):
        return "%s(dim=%d)" % (self.__class__.__name__, self.dim)


class DenseOperator(PositiveOperator):
    kind = "dense"

    def __init__(self, space, matrix, positivity_exempt=False):
        PositiveOperator.__init__(self, space, positivity_exempt)
        if space.exact:
            matrix = np.array([[Fraction(v) for v in row] for row in matrix], dtype=object)
        else:
            matrix = np.array(matrix, dtype=float)
        if matrix.shape != (space.dim, space.dim):
            raise DimensionError("matrix of shape %s on a space of dim %d" % (matrix.shape, space.dim))
        if not positivity_exempt:
            _require_nonnegative(matrix, "dense kernel")
        matrix.flags.writeable = False
        self.matrix = matrix

    def _forward(self, x):
        return self.matrix @ x

    def _adjoint(self, c):
        w = self.space.weights
        return (self.matrix.T @ (w * c)) / w

    def pattern(self):
        return sp.csr_matrix(self.matrix != 0)

    def to_dense(self, cap=DENSE_CAP, force=False):
        if self.dim > cap and not force:
            raise DimensionError("refusing to materialise a %dx%d operator (cap %d)" % (self.dim, self.dim, cap))
        return self.matrix

    def _rebind(self, space):
        return DenseOperator(space, self.matrix, positivity_exempt=self.positivity_exempt)


class SparseOperator(PositiveOperator):
    kind = "sparse"

    def __init__(self, space, matrix):
        PositiveOperator.__init__(self, space)
        if space.exact:
            raise DomainError("sparse kernels are float-only; use a dense kernel in exact mode")
        matrix = sp.csc_matrix(matrix, dtype=float)
        if matrix.shape != (space.dim, space.dim):
            raise DimensionError("matrix of shape %s on a space of dim %d" % (matrix.shape, space.dim))
        # an entry stored as 0.0 is structurally absent
        matrix.eliminate_zeros()
        _require_nonnegative(matrix.data, "sparse kernel")
        self.matrix = matrix

    @classmethod
    def from_triplets(cls, space, rows, cols, values):
        return cls(space, sp.coo_matrix((values, (rows, cols)), shape=(space.dim, space.dim)))

    def _forward(self, x):
        return self.matrix @ x

    def _adjoint(self, c):
        w = self.space.weights
        return (self.matrix.T @ (w * c)) / w

    def pattern(self):
        return sp.csr_matrix(self.matrix != 0)

    def to_sparse(self):
        return self.matrix

    def _rebind(self, space):
        return SparseOperator(space, self.matrix)

    def to_spec(self):
        coo = self.matrix.tocoo()
        return {
            "kind": "sparse",
            "dim": self.dim,
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "values": coo.data.tolist(),
        }


class RankOneOperator(PositiveOperator):
    """phi (x) f : g -> <phi, g> f."""

    kind = "rank_one"

    def __init__(self, phi, f):
        phi.space.check(f.space)
        PositiveOperator.__init__(self, f.space)
        _require_nonnegative(phi.coefficients, "rank-one functional")
        _require_nonnegative(f.entries, "rank-one vector")
        self.phi = phi
        self.vector = f

    def _forward(self, x):
        pairing = (self.phi.coefficients * self.space.weights) @ x
        if np.ndim(x) == 1:
            return self.vector.entries * pairing
        return np.multiply.outer(self.vector.entries, pairing)

    def _adjoint(self, c):
        return self.phi.coefficients * compensated_sum(c * self.vector.entries * self.space.weights)

    def pattern(self):
        rows = np.asarray(self.vector.entries != 0, dtype=bool)
        cols = np.asarray(self.phi.coefficients != 0, dtype=bool)
        return sp.csr_matrix(np.outer(rows, cols))

    def _rebind(self, space):
        return RankOneOperator(Functional(space, self.phi.coefficients), LatticeVector(space, self.vector.entries))

    def to_spec(self):
        return {"kind": "rank_one", "phi": self.phi.tolist(), "vector": self.vector.tolist()}


class RightShift(PositiveOperator):
    """(Sx)(k+1) = band[k] x(k); whatever band[dim-1] x(dim-1) carries leaves the space."""

    kind = "right_shift"

    def __init__(self, space, band=None, outer_weight=None):
        PositiveOperator.__init__(self, space)
        if band is None:
            band = [1] * space.dim
        band = as_entries(band, exact=space.exact)
        if band.shape[0] != space.dim:
            raise DimensionError("shift band of length %d on a space of dim %d" % (band.shape[0], space.dim))
        _require_nonnegative(band, "shift band")
        if outer_weight is None:
            outer_weight = space.weights[-1]
        self.band = band
        self.outer_weight = Fraction(outer_weight) if space.exact else float(outer_weight)

    def _forward(self, x):
        out = _zeros_like(x, self.exact)
        if np.ndim(x) == 1:
            out[1:] = self.band[:-1] * x[:-1]
        else:
            out[1:] = self.band[:-1, None] * x[:-1]
        return out

    def _adjoint(self, c):
        w = self.space.weights
        out = _zeros_like(c, self.exact)
        out[:-1] = self.band[:-1] * w[1:] * c[1:] / w[:-1]
        return out

    def leak(self):
        out = _zeros_like(np.empty(self.dim), self.exact)
        out[-1] = self.band[-1] * self.outer_weight
        return out

    def pattern(self):
        k = np.flatnonzero(self.band[:-1] != 0)
        data = np.ones(k.shape[0], dtype=bool)
        return sp.csr_matrix((data, (k + 1, k)), shape=(self.dim, self.dim))

    def _rebind(self, space):
        return RightShift(space, self.band, self.outer_weight)

    def to_spec(self):
        return {
            "kind": "right_shift",
            "band": [str(v) if self.exact else float(v) for v in self.band],
            "outer_weight": str(self.outer_weight) if self.exact else self.outer_weight,
        }


class DiagonalOperator(PositiveOperator):
    kind = "diagonal"

    def __init__(self, space, multipliers):
        PositiveOperator.__init__(self, space)
        multipliers = as_entries(multipliers, exact=space.exact)
        if multipliers.shape[0] != space.dim:
            raise DimensionError("multiplier of length %d on a space of dim %d" % (multipliers.shape[0], space.dim))
        _require_nonnegative(multipliers, "multiplier")
        self.multipliers = multipliers

    def _forward(self, x):
        if np.ndim(x) == 1:
            return self.multipliers * x
        return self.multipliers[:, None] * x

    def _adjoint(self, c):
        return self.multipliers * c

    def pattern(self):
        k = np.flatnonzero(self.multipliers != 0)
        data = np.ones(k.shape[0], dtype=bool)
        return sp.csr_matrix((data, (k, k)), shape=(self.dim, self.dim))

    def _rebind(self, space):
        return DiagonalOperator(space, self.multipliers)

    def to_spec(self):
        return {"kind": "diagonal", "multipliers": [str(v) if self.exact else float(v) for v in self.multipliers]}


class TransportOperator(PositiveOperator):
    """(Tf)(i) = sum over j with sigma(j) = i of gains[j] f(j)."""

    kind = "transport"

    def __init__(self, space, sigma, gains=None):
        PositiveOperator.__init__(self, space)
        sigma = np.asarray(sigma, dtype=int)
        if sigma.shape[0] != space.dim:
            raise DimensionError("sigma of length %d on a space of dim %d" % (sigma.shape[0], space.dim))
        if np.any(sigma < 0) or np.any(sigma >= space.dim):
            raise DomainError("sigma must map into 0..%d" % (space.dim - 1))
        if gains is None:
            gains = [1] * space.dim
        gains = as_entries(gains, exact=space.exact)
        _require_nonnegative(gains, "transport gains")
        self.sigma = sigma
        self.gains = gains
        self._matrix = None
        if not space.exact:
            self._matrix = sp.csc_matrix((np.asarray(gains, dtype=float), (sigma, np.arange(space.dim))),
                                         shape=(space.dim, space.dim))

    def _forward(self, x):
        if self._matrix is not None:
            return self._matrix @ x
        out = _zeros_like(x, True)
        for j, i in enumerate(self.sigma):
            out[i] = out[i] + self.gains[j] * x[j]
        return out

    def _adjoint(self, c):
        w = self.space.weights
        return self.gains * w[self.sigma] * c[self.sigma] / w

    def pattern(self):
        keep = np.flatnonzero(self.gains != 0)
        data = np.ones(keep.shape[0], dtype=bool)
        return sp.csr_matrix((data, (self.sigma[keep], keep)), shape=(self.dim, self.dim))

    def _rebind(self, space):
        return TransportOperator(space, self.sigma, self.gains)

    def to_spec(self):
        return {
            "kind": "transport",
            "sigma": self.sigma.tolist(),
            "gains": [str(v) if self.exact else float(v) for v in self.gains],
        }


class SumOperator(PositiveOperator):
    kind = "sum"

    def __init__(self, children):
        if not children:
            raise DomainError("a sum needs at least one operand")
        space = children[0].space
        for child in children[1:]:
            space.check(child.space)
        PositiveOperator.__init__(self, space, any(c.positivity_exempt for c in children))
        self.children = list(children)

    def _forward(self, x):
        return sum((c._forward(x) for c in self.children[1:]), self.children[0]._forward(x))

    def _forward_tracked(self, x):
        y, escaped = self.children[0]._forward_tracked(x)
        for child in self.children[1:]:
            yc, ec = child._forward_tracked(x)
            y = y + yc
            escaped = escaped + ec
        return y, escaped

    def _adjoint(self, c):
        return sum((ch._adjoint(c) for ch in self.children[1:]), self.children[0]._adjoint(c))

    def leak(self):
        return sum((c.leak() for c in self.children[1:]), self.children[0].leak())

    def pattern(self):
        out = self.children[0].pattern().astype(float)
        for child in self.children[1:]:
            out = out + child.pattern().astype(float)
        return sp.csr_matrix(out != 0)

    def _rebind(self, space):
        return SumOperator([c.with_space(space) for c in self.children])

    def to_spec(self):
        return {"kind": "sum", "children": [c.to_spec() for c in self.children]}


class ComposeOperator(PositiveOperator):
    """children[0] o children[1] o ... ; the last child acts first."""

    kind = "compose"

    def __init__(self, children):
        if not children:
            raise DomainError("a composition needs at least one factor")
        space = children[0].space
        for child in children[1:]:
            space.check(child.space)
        PositiveOperator.__init__(self, space, any(c.positivity_exempt for c in children))
        self.children = list(children)
        self._leak = None

    def _forward(self, x):
        for child in reversed(self.children):
            x = child._forward(x)
        return x

    def _forward_tracked(self, x):
        escaped = None
        for child in reversed(self.children):
            x, ec = child._forward_tracked(x)
            escaped = ec if escaped is None else escaped + ec
        return x, escaped

    def _adjoint(self, c):
        for child in self.children:
            c = child._adjoint(c)
        return c

    def leak(self):
        # inner leak plus the outer leak of the inner image, per unit column
        if self._leak is None:
            _, self._leak = self._forward_tracked(identity_block(self.space))
        return self._leak

    def pattern(self):
        out = self.children[-1].pattern().astype(float)
        for child in reversed(self.children[:-1]):
            out = child.pattern().astype(float) @ out
        return sp.csr_matrix(out != 0)

    def _rebind(self, space):
        return ComposeOperator([c.with_space(space) for c in self.children])

    def to_spec(self):
        return {"kind": "compose", "children": [c.to_spec() for c in self.children]}


def identity(space):
    return DiagonalOperator(space, [1] * space.dim)


def scaled(operator, c):
    return ComposeOperator([DiagonalOperator(operator.space, [c] * operator.dim), operator])


def apply(T, f):
    return T.apply(f)


def adjoint_apply(T, phi):
    return T.adjoint_apply(phi)


def matrix_weighted_norm(matrix, space):
    """max_j sum_i w_i |M_ij| / w_j, the l^1(w) -> l^1(w) operator norm of a matrix."""
    w = space.float_weights()
    matrix = np.abs(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0.0
    return float(np.max((w @ matrix) / w))


def weighted_operator_norm(T):
    """Exact l^1(w) operator norm.

    For a positive kernel the column sums are the adjoint of the norm
    functional, so no materialisation is needed.
    """
    if T.positivity_exempt:
        return matrix_weighted_norm(T.to_dense(), T.space)
    column_mass = np.array(T._adjoint(T.space.norm_functional().coefficients), dtype=float)
    return float(np.max(column_mass))


def difference_norm(A, B):
    A.space.check(B.space)
    return matrix_weighted_norm(np.asarray(A.to_dense(), dtype=float) - np.asarray(B.to_dense(), dtype=float), A.space)


def is_structurally_positive(T):
    if T.positivity_exempt:
        return False
    return bool(np.all(np.asarray(T.to_sparse().data) >= 0))


def column_mass_defect(T, count_escaped=True):
    """(T'1)_j + escaped fraction - 1 for every column j."""
    mass = np.array(T._adjoint(T.space.norm_functional().coefficients), dtype=float)
    if count_escaped:
        mass = mass + np.array(T.leak(), dtype=float) / T.space.float_weights()
    return mass - 1.0


def is_markov(T, tol=1e-12, count_escaped=True):
    if not T.space.is_al:
        raise DomainError("the Markov property is defined in AL mode (p = 1)")
    if T.positivity_exempt:
        return False
    return bool(np.max(np.abs(column_mass_defect(T, count_escaped))) <= tol)


def is_lattice_homomorphism(T):
    """At most one structural nonzero per row, so |Tf| = T|f| identically."""
    if T.positivity_exempt:
        return False
    return bool(np.all(np.diff(T.pattern().indptr) <= 1))


def adjoint_is_lattice_homomorphism(T):
    """At most one structural nonzero per column."""
    if T.positivity_exempt:
        return False
    return bool(np.all(np.diff(sp.csc_matrix(T.pattern()).indptr) <= 1))


def interval_preservation_witness(T, f, g, y, tol=1e-12):
    """Return x in [f, g] with T x = y, for T whose adjoint is a lattice homomorphism.

    Every column j feeds a single row r(j) with gain a_j. For each output row the
    required mass y_i - (Tf)_i is spread greedily over the columns feeding it,
    each column contributing at most a_j (g_j - f_j).
    """
    if not adjoint_is_lattice_homomorphism(T):
        raise DomainError("interval preservation needs an adjoint lattice homomorphism")
    for v in (f, g, y):
        T.space.check(v.space)
    fx = np.array(f.entries, dtype=float)
    gx = np.array(g.entries, dtype=float)
    yx = np.array(y.entries, dtype=float)
    if np.any(fx > gx + tol):
        raise InfeasibleTargetError("lower end of the interval exceeds the upper end")
    csc = sp.csc_matrix(T.to_sparse())
    base = np.asarray(csc @ fx).ravel()
    need = yx - base
    scale = max(1.0, float(np.max(np.abs(yx))) if yx.size else 1.0)
    if np.any(need < -tol * scale):
        raise InfeasibleTargetError("target lies below T f")
    x = fx.copy()
    remaining = np.maximum(need, 0.0)
    for j in range(T.dim):
        start, stop = csc.indptr[j], csc.indptr[j + 1]
        if start == stop:
            continue
        i, a = csc.indices[start], csc.data[start]
        if remaining[i] <= 0:
            continue
        capacity = a * (gx[j] - fx[j])
        take = min(capacity, remaining[i])
        x[j] = fx[j] + take / a
        remaining[i] -= take
    if np.any(remaining > tol * scale):
        raise InfeasibleTargetError("target lies above T g (unmet mass %.3e)" % float(np.max(remaining)))
    return LatticeVector(f.space, np.minimum(np.maximum(x, fx), gx))
