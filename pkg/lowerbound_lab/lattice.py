"""Vectors over finite weighted index spaces.

A :class:`WeightedSpace` is a finite set of atoms ``0..dim-1`` carrying a
strictly positive measure ``w``. With ``p = 1`` it is the AL-space
``l^1(w)``, whose norm is additive on the positive cone; with ``p > 1`` it is
the weighted ``l^p`` space of the same measure.

Entries are stored as float64 arrays, or as object arrays of
:class:`fractions.Fraction` in exact-rational mode. All lattice operations
are coordinatewise and work identically in both modes.
"""

import math
from fractions import Fraction

import numpy as np

from .exception import DimensionError, DomainError

NORM_AL = 'al'
NORM_P = 'p'
NORM_PSI = 'psi'
NORM_NATIVE = 'native'


def is_exact(values):
    return isinstance(values, np.ndarray) and values.dtype == object


def as_entries(values, exact=False):
    if exact:
        return np.array([Fraction(v) for v in np.ravel(values).tolist()], dtype=object)
    arr = np.array(values, dtype=float)
    return arr.reshape(-1) if arr.ndim != 1 else arr


def compensated_sum(values):
    """Sum with error O(eps * sum|terms|); exact for Fraction entries."""
    if is_exact(values):
        return sum(values.tolist(), Fraction(0))
    return math.fsum(np.asarray(values, dtype=float).tolist())


class WeightedSpace(object):
    def __init__(self, weights, p=1, exact=False):
        weights = as_entries(weights, exact=exact)
        if weights.shape[0] < 1:
            raise DomainError("a weighted space needs at least one coordinate")
        as_float = np.array([float(w) for w in weights])
        if not np.all(np.isfinite(as_float)) or not np.all(as_float > 0):
            raise DomainError("weights must be strictly positive and finite")
        if not p >= 1:
            raise DomainError("p exponent must be >= 1, got %r" % (p, ))
        self.weights = weights
        self.p = p
        self.exact = exact
        self._float_weights = as_float

    @classmethod
    def counting(cls, dim, p=1, exact=False):
        return cls([1] * dim, p=p, exact=exact)

    @property
    def dim(self):
        return self.weights.shape[0]

    @property
    def is_al(self):
        return self.p == 1

    @property
    def total_mass(self):
        return compensated_sum(self.weights)

    def float_weights(self):
        return self._float_weights

    def with_p(self, p):
        return WeightedSpace(self.weights, p=p, exact=self.exact)

    def as_float(self):
        if not self.exact:
            return self
        return WeightedSpace(self._float_weights, p=self.p)

    def compatible(self, other):
        if self is other:
            return True
        return self.dim == other.dim and np.array_equal(self._float_weights, other._float_weights)

    def check(self, other):
        if not self.compatible(other):
            raise DimensionError("space mismatch: dim %d vs %d" % (self.dim, other.dim))

    # constructors for vectors living on this space

    def vector(self, entries):
        return LatticeVector(self, entries)

    def zeros(self):
        return LatticeVector(self, [0] * self.dim)

    def ones(self):
        return LatticeVector(self, [1] * self.dim)

    def unit(self, k):
        entries = [0] * self.dim
        entries[k] = 1
        return LatticeVector(self, entries)

    def vertex(self, k):
        """The normalised basis vector e_k / ||e_k||."""
        e = self.unit(k)
        return e.scale(1 / e.norm())

    def norm_functional(self):
        return Functional(self, [1] * self.dim)

    def to_dict(self):
        return {
            "dim": self.dim,
            "weights": [str(w) if self.exact else float(w) for w in self.weights],
            "p": self.p,
        }

    def __eq__(self, other):
        return isinstance(other, WeightedSpace) and self.compatible(other) and self.p == other.p

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((self.dim, self.p))

    def __repr__(self):
        return "WeightedSpace(dim=%d, p=%s%s)" % (self.dim, self.p, ", exact" if self.exact else "")


class LatticeVector(object):
    __slots__ = ('space', 'entries')

    def __init__(self, space, entries):
        entries = as_entries(entries, exact=space.exact)
        if entries.shape[0] != space.dim:
            raise DimensionError("vector of length %d on a space of dim %d" % (entries.shape[0], space.dim))
        entries.flags.writeable = False
        self.space = space
        self.entries = entries

    @property
    def dim(self):
        return self.space.dim

    def _new(self, entries):
        return LatticeVector(self.space, entries)

    def _other(self, other):
        self.space.check(other.space)
        return other.entries

    def __add__(self, other):
        return self._new(self.entries + self._other(other))

    def __sub__(self, other):
        return self._new(self.entries - self._other(other))

    def __neg__(self):
        return self._new(-self.entries)

    def scale(self, c):
        return self._new(self.entries * c)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def __getitem__(self, k):
        return self.entries[k]

    def __len__(self):
        return self.dim

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        return isinstance(other, LatticeVector) and self.space.compatible(other.space) \
            and bool(np.all(self.entries == other.entries))

    def __ne__(self, other):
        return not self == other

    __hash__ = None

    def __le__(self, other):
        return bool(np.all(self.entries <= self._other(other)))

    def __ge__(self, other):
        return bool(np.all(self.entries >= self._other(other)))

    def is_positive(self):
        return bool(np.all(self.entries >= 0))

    def is_quasi_interior(self):
        return bool(np.all(self.entries > 0))

    def is_zero(self):
        return bool(np.all(self.entries == 0))

    def positive_part(self):
        return self._new(np.maximum(self.entries, 0))

    def negative_part(self):
        return self._new(np.maximum(-self.entries, 0))

    def modulus(self):
        return self._new(np.abs(self.entries))

    def norm(self, selector=NORM_NATIVE, psi=None):
        if selector == NORM_NATIVE:
            return p_norm(self)
        if selector == NORM_AL:
            return al_norm(self)
        if selector == NORM_P:
            return p_norm(self)
        if selector == NORM_PSI:
            return psi_norm(self, psi)
        raise DomainError("unknown norm selector %r" % (selector, ))

    def as_float(self):
        return LatticeVector(self.space.as_float(), np.array([float(v) for v in self.entries]))

    def tolist(self):
        if self.space.exact:
            return [str(v) for v in self.entries]
        return [float(v) for v in self.entries]

    def __repr__(self):
        return "LatticeVector(%s)" % (self.tolist(), )


class Functional(object):
    """A linear functional acting by <psi, f> = sum_i psi_i f_i w_i."""

    __slots__ = ('space', 'coefficients')

    def __init__(self, space, coefficients):
        coefficients = as_entries(coefficients, exact=space.exact)
        if coefficients.shape[0] != space.dim:
            raise DimensionError("functional of length %d on a space of dim %d"
                                 % (coefficients.shape[0], space.dim))
        coefficients.flags.writeable = False
        self.space = space
        self.coefficients = coefficients

    def __call__(self, f):
        self.space.check(f.space)
        return compensated_sum(self.coefficients * f.entries * self.space.weights)

    def is_positive(self):
        return bool(np.all(self.coefficients >= 0))

    def is_strictly_positive(self):
        return bool(np.all(self.coefficients > 0))

    def __le__(self, other):
        self.space.check(other.space)
        return bool(np.all(self.coefficients <= other.coefficients))

    def __ge__(self, other):
        self.space.check(other.space)
        return bool(np.all(self.coefficients >= other.coefficients))

    def scale(self, c):
        return Functional(self.space, self.coefficients * c)

    def __sub__(self, other):
        self.space.check(other.space)
        return Functional(self.space, self.coefficients - other.coefficients)

    def __add__(self, other):
        self.space.check(other.space)
        return Functional(self.space, self.coefficients + other.coefficients)

    def tolist(self):
        if self.space.exact:
            return [str(v) for v in self.coefficients]
        return [float(v) for v in self.coefficients]

    def __repr__(self):
        return "Functional(%s)" % (self.tolist(), )


def decompose(f):
    return f.positive_part(), f.negative_part()


def join(f, g):
    f.space.check(g.space)
    return f._new(np.maximum(f.entries, g.entries))


def meet(f, g):
    f.space.check(g.space)
    return f._new(np.minimum(f.entries, g.entries))


def al_norm(f):
    return compensated_sum(np.abs(f.entries) * f.space.weights)


def p_norm(f):
    p = f.space.p
    if p == 1:
        return al_norm(f)
    mags = np.abs(np.array([float(v) for v in f.entries]))
    total = math.fsum((f.space.float_weights() * mags ** p).tolist())
    return total ** (1.0 / p)


def psi_norm(f, psi):
    if psi is None:
        raise DomainError("psi norm needs a functional")
    f.space.check(psi.space)
    return compensated_sum(psi.coefficients * np.abs(f.entries) * f.space.weights)


def deficiency(f, h, norm_selector=NORM_AL, psi=None):
    """||(f - h)^-|| under the selected norm; zero iff f >= h."""
    return (f - h).negative_part().norm(norm_selector, psi=psi)


def block_norms(space, block, selector=NORM_AL, psi=None):
    """Column norms of a dim x k float block whose columns live on ``space``.

    Pairwise summation through numpy; used for the vectorised basis sweeps.
    """
    block = np.asarray(block, dtype=float)
    w = space.float_weights()
    if block.ndim == 1:
        block = block[:, None]
    if selector == NORM_PSI:
        return (np.asarray(psi.coefficients, dtype=float) * w) @ np.abs(block)
    p = space.p if selector in (NORM_NATIVE, NORM_P) else 1
    if p == 1:
        return w @ np.abs(block)
    return (w @ np.abs(block) ** p) ** (1.0 / p)


def block_deficiencies(space, block, h, selector=NORM_AL, psi=None):
    h = np.asarray([float(v) for v in h.entries])
    return block_norms(space, np.maximum(h[:, None] - block, 0), selector, psi)
