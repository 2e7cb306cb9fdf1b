from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lowerbound_lab.exception import DimensionError, DomainError, InfeasibleTargetError
from lowerbound_lab.lattice import Functional, LatticeVector, WeightedSpace
from lowerbound_lab.operators import ComposeOperator, DenseOperator, DiagonalOperator, RankOneOperator, \
    RightShift, SparseOperator, SumOperator, TransportOperator, adjoint_is_lattice_homomorphism, interval_preservation_witness, \
    is_lattice_homomorphism, is_markov, matrix_weighted_norm, weighted_operator_norm

DIM = 5


def test_negative_kernel_rejected_unless_exempt():
    space = WeightedSpace.counting(2)
    with pytest.raises(DomainError):
        DenseOperator(space, [[1, -1], [0, 1]])
    T = DenseOperator(space, [[0, -1], [1, 0]], positivity_exempt=True)
    assert not is_markov(T)


def test_shape_checked():
    with pytest.raises(DimensionError):
        DenseOperator(WeightedSpace.counting(3), np.eye(2))


def test_compose_applies_last_factor_first():
    space = WeightedSpace.counting(3)
    D = DiagonalOperator(space, [1, 2, 3])
    S = RightShift(space)
    f = space.vector([1, 1, 1])
    assert ComposeOperator([S, D]).apply(f) == space.vector([0, 1, 2])
    assert ComposeOperator([D, S]).apply(f) == space.vector([0, 2, 3])


def test_shift_tracks_escaped_mass():
    space = WeightedSpace([1, 1, 0.25])
    S = RightShift(space)
    image, escaped = S.apply_tracked(space.unit(2))
    assert image.is_zero()
    assert escaped == pytest.approx(0.25)
    assert S.truncated


def test_rank_one_exact():
    space = WeightedSpace.counting(3, exact=True)
    T = RankOneOperator(Functional(space, [1, Fraction(1, 2), Fraction(1, 4)]), space.unit(0))
    assert T.apply(space.ones()) == space.vector([Fraction(7, 4), 0, 0])
    assert is_markov(T.to_float()) is False


def test_sum_of_rank_one_and_damped_shift_is_markov_with_leak():
    space = WeightedSpace.counting(8)
    h = [2.0 ** -k for k in range(8)]
    T = SumOperator([
        RankOneOperator(Functional(space, h), space.unit(0)),
        ComposeOperator([RightShift(space), DiagonalOperator(space, [1 - v for v in h])]),
    ])
    assert is_markov(T, count_escaped=True)
    assert not is_markov(T, count_escaped=False)


def test_lattice_homomorphism_patterns():
    space = WeightedSpace.counting(3)
    assert is_lattice_homomorphism(DiagonalOperator(space, [1, 2, 0]))
    assert not is_lattice_homomorphism(DenseOperator(space, np.ones((3, 3))))
    T = TransportOperator(space, [0, 0, 1])
    assert adjoint_is_lattice_homomorphism(T)
    assert not is_lattice_homomorphism(T)


def test_weighted_operator_norm_of_positive_kernel():
    space = WeightedSpace([1.0, 2.0])
    M = np.array([[1.0, 0.5], [0.25, 1.0]])
    T = DenseOperator(space, M)
    assert weighted_operator_norm(T) == pytest.approx(matrix_weighted_norm(M, space))
    assert weighted_operator_norm(T) == pytest.approx(max(1.0 + 0.5, (0.5 + 2.0) / 2.0))


def test_interval_witness():
    space = WeightedSpace.counting(3)
    T = TransportOperator(space, [0, 0, 2], [1.0, 2.0, 1.0])
    f, g = space.zeros(), space.ones()
    y = space.vector([2.5, 0, 0.5])
    x = interval_preservation_witness(T, f, g, y)
    assert f <= x <= g
    assert np.allclose(T.apply(x).entries, y.entries)


def test_interval_witness_infeasible():
    space = WeightedSpace.counting(2)
    T = TransportOperator(space, [0, 1])
    with pytest.raises(InfeasibleTargetError):
        interval_preservation_witness(T, space.zeros(), space.ones(), space.vector([2, 0]))
    with pytest.raises(DomainError):
        interval_preservation_witness(DenseOperator(space, np.ones((2, 2))), space.zeros(), space.ones(),
                                      space.zeros())


@seed(11)
@settings(max_examples=200, deadline=None)
@given(w=arrays(np.float64, (DIM, ), elements=st.floats(0.1, 10.0)),
       M=arrays(np.float64, (DIM, DIM), elements=st.floats(0.0, 5.0)),
       c=arrays(np.float64, (DIM, ), elements=st.floats(-5.0, 5.0)),
       f=arrays(np.float64, (DIM, ), elements=st.floats(-5.0, 5.0)))
def test_adjoint_duality(w, M, c, f):
    space = WeightedSpace(w)
    T = DenseOperator(space, M)
    phi, g = Functional(space, c), LatticeVector(space, f)
    lhs, rhs = T.adjoint_apply(phi)(g), phi(T.apply(g))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, float(np.abs(M).sum() * np.abs(c).sum() * np.abs(f).sum() * w.max()))


@seed(3)
@settings(max_examples=200, deadline=None)
@given(sigma=arrays(np.int64, (DIM, ), elements=st.integers(0, DIM - 1)),
       f=arrays(np.float64, (DIM, ), elements=st.floats(-5.0, 5.0)))
def test_koopman_type_operators_commute_with_modulus(sigma, f):
    space = WeightedSpace.counting(DIM)
    # one nonzero per row: x -> x o sigma
    K = DenseOperator(space, np.eye(DIM)[sigma])
    g = LatticeVector(space, f)
    assert is_lattice_homomorphism(K)
    assert K.apply(g).modulus() == K.apply(g.modulus())


def _kernel(kind, space, M, v):
    if kind == "dense":
        return DenseOperator(space, M)
    if kind == "sparse":
        return SparseOperator(space, M * (M > 1.0))
    if kind == "rank_one":
        return RankOneOperator(Functional(space, M[0]), LatticeVector(space, v))
    if kind == "shift":
        return RightShift(space, band=v)
    if kind == "diagonal":
        return DiagonalOperator(space, v)
    if kind == "sum":
        return SumOperator([DenseOperator(space, M), DiagonalOperator(space, v)])
    return ComposeOperator([DenseOperator(space, M), RightShift(space, band=v)])


@seed(11)
@settings(max_examples=300, deadline=None)
@given(kind=st.sampled_from(["dense", "sparse", "rank_one", "shift", "diagonal", "sum", "compose"]),
       w=arrays(np.float64, (DIM, ), elements=st.floats(0.1, 4.0)),
       M=arrays(np.float64, (DIM, DIM), elements=st.floats(0.0, 2.0)),
       v=arrays(np.float64, (DIM, ), elements=st.floats(0.0, 2.0)),
       f=arrays(np.float64, (DIM, ), elements=st.floats(-5.0, 5.0)))
def test_modulus_of_image_is_dominated(kind, w, M, v, f):
    space = WeightedSpace(w)
    T = _kernel(kind, space, M, v)
    g = LatticeVector(space, f)
    lhs = np.abs(np.asarray(T.apply(g).entries, dtype=float))
    rhs = np.asarray(T.apply(g.modulus()).entries, dtype=float)
    assert np.all(lhs <= rhs + 1e-12 * max(1.0, float(rhs.max())))
