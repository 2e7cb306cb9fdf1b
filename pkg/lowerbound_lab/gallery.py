# coding:utf-8
"""Named instances with closed-form behaviour.

Every builder checks the properties its instance is known for before it
returns, and raises GalleryError when one of them does not reproduce.
Truncated instances live on the first N atoms of an infinite index set and
track the mass they push past the boundary.
"""

import math
from collections import OrderedDict
from fractions import Fraction

import numpy as np
import scipy.linalg

from .const import DEFAULT_SAMPLE_STEP, HORIZON_MARGIN, MIN_TRUNCATION
from .exception import DomainError, GalleryError, LabException
from .frobenius_perron import FiniteMap, doubling_map, fp_of_finite_map, tent_map, ulam_matrix
from .lattice import Functional, LatticeVector, WeightedSpace
from .logger import logger
from .operators import ComposeOperator, DenseOperator, DiagonalOperator, RankOneOperator, RightShift, \
    SumOperator, is_markov
from .semigroup import Semigroup, evaluate


def _require(cond, fmt, *args):
    if not cond:
        raise GalleryError(fmt % args)


def _close(a, b, exact, tol=1e-12):
    if exact:
        return a == b
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(b)))


def orbit_mass(n):
    """c_n = prod_{k=1}^n (1 - 2^-k), exact."""
    out = Fraction(1)
    for k in range(1, n + 1):
        out *= 1 - Fraction(1, 2 ** k)
    return out


def example_4_3_orbit(space, n):
    """T^n e_1 = (1 - c_n) e_0 + c_n e_{n+1}, valid while n + 1 < N."""
    c = orbit_mass(n)
    entries = [0] * space.dim
    entries[0] = 1 - c
    entries[n + 1] = c
    return LatticeVector(space, entries)


def build_example_4_3(N=64, exact=False):
    """Tf = <h, f> e_0 + S M f on l^1(N_0) with h = (1, 1/2, 1/4, ...) and M = 1 - h."""
    if N < MIN_TRUNCATION:
        raise DomainError("example 4.3 needs N >= %d" % MIN_TRUNCATION)
    space = WeightedSpace.counting(N, exact=exact)
    h = [Fraction(1, 2 ** k) for k in range(N)]
    T = SumOperator([
        RankOneOperator(Functional(space, h), space.unit(0)),
        ComposeOperator([RightShift(space), DiagonalOperator(space, [1 - v for v in h])]),
    ])
    S = Semigroup.discrete(T, name="example-4-3", extras={"shift": True, "h": Functional(space, h)})

    _require(is_markov(T.to_float(), 1e-12, count_escaped=True), "example 4.3 is not Markov up to escaped mass")
    f = space.unit(1)
    for n in range(1, min(5, N - 2) + 1):
        f = T.apply(f)
        want = example_4_3_orbit(space, n)
        _require(all(_close(a, b, exact) for a, b in zip(f.entries, want.entries)),
                 "example 4.3 orbit of e_1 departs from the product formula at n = %d", n)
    return S


def build_example_5_4(N=32, exact=False):
    """T = h (x) e with h_i = 2^-i; coordinate i stands for the (i+1)-th unit vector."""
    if N < MIN_TRUNCATION:
        raise DomainError("example 5.4 needs N >= %d" % MIN_TRUNCATION)
    space = WeightedSpace.counting(N, exact=exact)
    h = [Fraction(1, 2 ** i) for i in range(N)]
    T = RankOneOperator(Functional(space, h), space.unit(0))
    S = Semigroup.discrete(T, name="example-5-4", extras={"h": Functional(space, h)})

    dense = T.to_dense()
    _require(all(_close(a, b, exact) for a, b in zip(np.ravel(dense @ dense), np.ravel(dense))),
             "example 5.4 is not a projection")
    for k in range(N):
        _require(_close(T.apply(space.unit(k)).norm(), h[k], exact), "||P e_%d|| != 2^-%d", k, k)
    return S


def example_6_6_weights(N, p, exact=False):
    if exact:
        return [Fraction(1)] + [Fraction(1, k ** int(p)) for k in range(1, N)]
    return [1.0] + [float(k) ** -p for k in range(1, N)]


def example_6_6_tail_residual(n, p, j=1):
    """l^1 distance of T^n e_j from <psi_1, e_j> e_0: the escaped tail counted twice."""
    return 2.0 * (j + n) ** (1.0 - p) / j


def build_example_6_6(N=400, p=2, exact=False):
    """Weighted l^p(N_0) with mu{0} = 1, mu{k} = k^-p.

    (Tf)(0) = <psi_1 - alpha_1, f>, (Tf)(1) = 0, (Tf)(k) = k/(k-1) f(k-1). On
    the l^1 envelope T is Markov and T^n f -> <psi_1, f> e_0; in l^p the tail
    keeps its norm.
    """
    if not p > 1:
        raise DomainError("example 6.6 needs p > 1, got %r" % (p, ))
    if N < 2 * MIN_TRUNCATION:
        raise DomainError("example 6.6 needs N >= %d" % (2 * MIN_TRUNCATION))
    if exact and int(p) != p:
        raise DomainError("rational mode needs an integer exponent")
    space = WeightedSpace(example_6_6_weights(N, p, exact), p=p, exact=exact)
    if exact:
        coeff = [Fraction(1)] + [1 - Fraction(k, k + 1) ** (int(p) - 1) for k in range(1, N)]
        band = [Fraction(0)] + [Fraction(k + 1, k) for k in range(1, N)]
        outer = Fraction(1, N ** int(p))
    else:
        coeff = [1.0] + [1.0 - (k / (k + 1.0)) ** (p - 1) for k in range(1, N)]
        band = [0.0] + [(k + 1.0) / k for k in range(1, N)]
        outer = float(N) ** -p
    T = SumOperator([RankOneOperator(Functional(space, coeff), space.unit(0)), RightShift(space, band, outer)])
    envelope = space.with_p(1)
    S = Semigroup.discrete(T, name="example-6-6", extras={
        "shift": True, "p": p, "psi": space.norm_functional(), "envelope": envelope,
    })

    _require(is_markov(T.with_space(envelope).to_float(), 1e-12), "example 6.6 is not Markov on its l^1 envelope")
    f = space.unit(1)
    tail_norm = float(f.norm())
    for n in range(1, 4):
        f = T.apply(f)
        tail = LatticeVector(space, [0] + list(f.entries[1:]))
        _require(abs(float(tail.norm()) - tail_norm) <= 1e-12 * tail_norm,
                 "example 6.6 tail norm drifts at n = %d", n)
        _require(_close(f.entries[1 + n], Fraction(1 + n), exact), "(T^%d e_1)(%d) != %d", n, 1 + n, 1 + n)
    return S


def build_two_point_fp():
    """Frobenius-Perron operator of the constant map on two atoms: T = [[1, 1], [0, 0]]."""
    T = fp_of_finite_map(FiniteMap([0, 0]))
    S = Semigroup.discrete(T, name="two-point-fp", extras={"exact_fp": True})
    dense = np.asarray(T.to_dense(), dtype=float)
    _require(np.array_equal(dense, np.array([[1.0, 1.0], [0.0, 0.0]])), "two-point FP matrix is %s", dense.tolist())
    _require(np.array_equal(dense @ dense, dense), "two-point FP semigroup is not constant")
    return S


def build_rotation_semigroup(t0=1.0):
    """Rotation of R^2 with period t0; not positive, kept behind positivity_exempt."""
    if not t0 > 0:
        raise DomainError("period must be positive")
    omega = 2 * math.pi / t0
    Q = np.array([[0.0, -omega], [omega, 0.0]])
    # an incommensurate grid keeps the direct diagnostic off the period
    S = Semigroup.continuous(WeightedSpace.counting(2), Q, positivity_exempt=True,
                             sample_step=t0 * (math.sqrt(5) - 1) / 4, name="rotation",
                             extras={"period": t0, "embedded_steps": [t0]})
    period = np.asarray(evaluate(S, t0).to_dense(), dtype=float)
    _require(np.max(np.abs(period - np.eye(2))) <= 1e-9, "rotation does not close after one period")
    return S


def random_primitive_stochastic(dim=5, seed=0, rng=None):
    """Strictly positive column-stochastic matrix, hence primitive."""
    if dim < 2:
        raise DomainError("dim must be >= 2")
    rng = rng or np.random.default_rng(seed)
    M = rng.random((dim, dim)) + 0.1
    M /= M.sum(axis=0)
    T = DenseOperator(WeightedSpace.counting(dim), M)
    S = Semigroup.discrete(T, name="random-primitive-%d" % dim, extras={"seed": seed})
    _require(is_markov(T, 1e-12), "random matrix lost its column sums")
    return S


def perron_vector(T):
    """Eigenvector for the eigenvalue closest to 1, normalised to unit AL mass."""
    T = T.to_float()
    vals, vecs = scipy.linalg.eig(np.asarray(T.to_dense(), dtype=float))
    k = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, k])
    v = v / float(T.space.float_weights() @ v)
    return LatticeVector(T.space, np.maximum(v, 0.0))


def perron_half(S):
    return perron_vector(S.operator).scale(0.5)


def build_block_diagonal(sizes=(3, 4, 5), seed=0):
    if not 2 <= len(sizes) <= 4:
        raise DomainError("block-diagonal suites carry 2 to 4 blocks")
    rng = np.random.default_rng(seed)
    blocks = [np.asarray(random_primitive_stochastic(n, rng=rng).operator.matrix) for n in sizes]
    space = WeightedSpace.counting(sum(sizes))
    T = DenseOperator(space, scipy.linalg.block_diag(*blocks))
    masses = [float(np.min(perron_vector(DenseOperator(WeightedSpace.counting(b.shape[0]), b)).entries))
              for b in blocks]
    S = Semigroup.discrete(T, name="block-diagonal", extras={"blocks": len(sizes), "epsilon": min(masses)})
    _require(is_markov(T, 1e-12), "block-diagonal matrix lost its column sums")
    return S


def build_doubling_ulam(k=8):
    """Ulam matrix of x -> 2x mod 1 on 2^k cells; T^n stays at distance >= 1 from its limit for n < k."""
    T = ulam_matrix(doubling_map(), 2 ** k)
    S = Semigroup.discrete(T, name="doubling-ulam", extras={
        "approximate": T.approximate, "cells": 2 ** k, "resolved_horizon": k - 1,
    })
    _require(is_markov(T, 1e-12), "doubling Ulam matrix is not column-stochastic")
    return S


def build_tent_ulam(k=6):
    T = ulam_matrix(tent_map(), 2 ** k)
    S = Semigroup.discrete(T, name="tent-ulam", extras={"approximate": T.approximate, "cells": 2 ** k})
    _require(is_markov(T, 1e-12), "tent Ulam matrix is not column-stochastic")
    return S


def build_cyclic(N=12):
    T = fp_of_finite_map(FiniteMap([(i + 1) % N for i in range(N)]))
    return Semigroup.discrete(T, name="cyclic", extras={"exact_fp": True, "resolved_horizon": 4 * N})


def build_collapse(N=100):
    """FP operator of i -> max(i - 1, 0): every atom drains into atom 0 after N - 1 steps."""
    T = fp_of_finite_map(FiniteMap([max(i - 1, 0) for i in range(N)]))
    return Semigroup.discrete(T, name="collapse", extras={"exact_fp": True})


PRIMITIVE_RATES = np.array([
    [0.0, 1.0, 0.5, 0.2],
    [0.3, 0.0, 1.0, 0.4],
    [0.6, 0.2, 0.0, 1.0],
    [0.1, 0.8, 0.3, 0.0],
])


def build_primitive_generator(sample_step=DEFAULT_SAMPLE_STEP):
    Q = PRIMITIVE_RATES - np.diag(PRIMITIVE_RATES.sum(axis=0))
    return Semigroup.continuous(WeightedSpace.counting(4), Q, sample_step=sample_step, name="primitive-generator")


class GalleryEntry(object):
    """A registered instance: how to build it from a config and what its checks should report.

    ``params`` maps config attributes onto builder keywords; ``expect`` maps
    checker names onto the status each check is known to produce.
    """

    def __init__(self, name, builder, description, params=None, expect=None, start=0, h=None,
                 truncated=False, source="builtin", takes_config=False):
        self.name = name
        self.takes_config = takes_config
        self.builder = builder
        self.description = description
        self.params = params or {}
        self.expect = OrderedDict(expect or ())
        self.start = start
        self.h = h
        self.truncated = truncated
        self.source = source

    def build(self, config=None):
        if self.takes_config:
            return self.builder(config)
        kwargs = {}
        for attr, kw in self.params.items():
            value = getattr(config, attr, None) if config is not None else None
            if value is not None:
                kwargs[kw] = value
        if self.truncated and kwargs.get("N") is not None and kwargs["N"] < MIN_TRUNCATION:
            raise DomainError("%s needs N >= %d" % (self.name, MIN_TRUNCATION))
        S = self.builder(**kwargs)
        logger.debug("built gallery instance %s: %r", self.name, S)
        return S

    def horizon_limit(self, S):
        """Largest horizon that keeps shift formulas exact, or None."""
        if S.extras.get("shift"):
            return S.dim - HORIZON_MARGIN
        return None

    def to_dict(self):
        return {
            "name": self.name,
            "description": self.description,
            "checks": list(self.expect),
            "truncated": self.truncated,
            "source": self.source,
        }


REGISTRY = OrderedDict()


def register(entry):
    if entry.name in REGISTRY and REGISTRY[entry.name].source != entry.source:
        logger.warning("gallery instance %s from %s replaces the %s one", entry.name, entry.source,
                       REGISTRY[entry.name].source)
    REGISTRY[entry.name] = entry
    return entry


def get(name):
    if name not in REGISTRY:
        raise GalleryError("unknown gallery instance %r (known: %s)" % (name, ", ".join(REGISTRY)))
    return REGISTRY[name]


def names():
    return list(REGISTRY)


def build(name, config=None):
    try:
        return get(name).build(config)
    except GalleryError:
        raise
    except LabException as ex:
        raise GalleryError("%s: %s" % (name, ex))


_EXACT = {"dim": "N", "exact": "exact"}

register(GalleryEntry(
    "example-4-3", build_example_4_3, "rank-one reset plus damped shift; nonzero individual bounds, no convergence",
    params=_EXACT, truncated=True, start=1,
    expect=[("strong-convergence", "not_converged"), ("maximal-lower-bound", "certified"),
            ("individual-bounds", "hypothesis_failed")],
))
register(GalleryEntry(
    "example-5-4", build_example_5_4, "rank-one projection h (x) e with ||P e_k|| = 2^-k",
    params=_EXACT, truncated=False,
    expect=[("strong-convergence", "converged"), ("ding", "certified")],
))
register(GalleryEntry(
    "example-6-6", build_example_6_6, "weighted l^p shift with a psi lower bound but no l^p convergence",
    params={"dim": "N", "p": "p", "exact": "exact"}, truncated=True, start=1,
    expect=[("strong-convergence", "not_converged"), ("envelope-residual", "certified")],
))
register(GalleryEntry(
    "two-point-fp", build_two_point_fp, "constant map on two atoms: norm convergent, not the identity",
    expect=[("operator-norm", "converged"), ("adjoint-homomorphism", "hypothesis_failed"),
            ("fp-rigidity", "certified")],
))
register(GalleryEntry(
    "rotation", build_rotation_semigroup, "periodic rotation of R^2; embedded at its period it is constant",
    params={"t0": "t0"},
    expect=[("embedded-consistency", "sampled_discrepancy")],
))
register(GalleryEntry(
    "random-primitive", random_primitive_stochastic, "random strictly positive stochastic matrix",
    params={"dim": "dim", "seed": "seed"}, h="perron-half",
    expect=[("lasota-yorke", "certified"), ("uniform-lower-bound", "certified")],
))
register(GalleryEntry(
    "block-diagonal", build_block_diagonal, "2-4 primitive blocks; limit rank equals the block count",
    params={"blocks": "sizes", "seed": "seed"},
    expect=[("individual-bounds", "certified"), ("strong-convergence", "converged")],
))
register(GalleryEntry(
    "doubling-ulam", build_doubling_ulam, "Ulam matrix of the doubling map on dyadic cells",
    params={"cells_log2": "k"},
    expect=[("operator-norm", "not_converged"), ("fp-rigidity", "certified")],
))
register(GalleryEntry(
    "tent-ulam", build_tent_ulam, "Ulam matrix of the tent map on dyadic cells",
    params={"cells_log2": "k"},
    expect=[("invariant-density", "certified")],
))
register(GalleryEntry(
    "cyclic", build_cyclic, "cyclic permutation: measure preserving, never norm convergent",
    params={"dim": "N"},
    expect=[("operator-norm", "not_converged"), ("fp-rigidity", "certified"),
            ("adjoint-homomorphism", "hypothesis_failed")],
))
register(GalleryEntry(
    "collapse", build_collapse, "i -> max(i - 1, 0): everything drains into atom 0",
    params={"dim": "N"},
    expect=[("ding", "certified"), ("strong-convergence", "converged")],
))
register(GalleryEntry(
    "primitive-generator", build_primitive_generator, "uniformized primitive 4-state generator",
    expect=[("embedded-consistency", "certified"), ("strong-convergence", "converged")],
))
