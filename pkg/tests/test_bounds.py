import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lowerbound_lab import gallery
from lowerbound_lab.bounds import asymptotic_domination_convergence, ding_certify, ding_sequence, \
    domination_transfer, individual_bounds_certify, individual_lower_bound_estimate, lasota_yorke_certify, \
    lattice_homo_rigidity, maximal_lower_bound_estimate, psi_lower_bound_certify, uniform_lower_bound_check, \
    vertex_reduction_gap
from lowerbound_lab.exception import DomainError, PreconditionError, StructuralGateError
from lowerbound_lab.lattice import NORM_AL, Functional, LatticeVector, WeightedSpace
from lowerbound_lab.operators import DenseOperator, DiagonalOperator, TransportOperator, identity
from lowerbound_lab.report import CERTIFIED, HYPOTHESIS_FAILED, INDIVIDUAL, NOT_CERTIFIED, UNIFORM
from lowerbound_lab.semigroup import Semigroup

DIM = 4


@pytest.fixture
def primitive():
    return gallery.random_primitive_stochastic(6, seed=5)


def cyclic(n=3):
    return Semigroup.discrete(TransportOperator(WeightedSpace.counting(n), [(i + 1) % n for i in range(n)]))


def test_perron_half_is_a_uniform_lower_bound(primitive):
    h = gallery.perron_half(primitive)
    lb = uniform_lower_bound_check(primitive, h, horizon=100)
    assert lb.certified
    assert lb.norm_of_bound == pytest.approx(0.5)
    assert lb.kind == UNIFORM


def test_bound_above_the_limit_fails(primitive):
    h = gallery.perron_vector(primitive.operator).scale(2.0)
    lb = uniform_lower_bound_check(primitive, h, horizon=100)
    assert not lb.certified
    assert lb.failing_vertices


def test_negative_bound_rejected(primitive):
    with pytest.raises(DomainError):
        uniform_lower_bound_check(primitive, primitive.space.vector([-1, 0, 0, 0, 0, 0]))


def test_cyclic_orbit_only_has_the_zero_bound():
    S = cyclic()
    lb = individual_lower_bound_estimate(S, S.space.unit(0), horizon=30)
    assert lb.zero_only
    assert lb.norm_of_bound == 0
    assert lb.kind == INDIVIDUAL


def test_individual_estimate_is_shrunk_tail_infimum(primitive):
    f = primitive.space.unit(2)
    lb = individual_lower_bound_estimate(primitive, f, horizon=100, shrink_factor=0.5)
    assert lb.certified
    assert lb.norm_of_bound == pytest.approx(0.5, rel=1e-9)


def test_maximal_bound_of_example_4_3():
    S = gallery.build_example_4_3(64)
    lb = maximal_lower_bound_estimate(S, S.space.unit(1), horizon=40)
    assert lb.certified
    assert lb.norm_of_bound == pytest.approx(1 - float(gallery.orbit_mass(20)), abs=1e-12)
    assert np.all(lb.bound.entries[1:] == 0)
    assert lb.fixed_point


def test_lasota_yorke_predicts_the_limit(primitive):
    report, predicted = lasota_yorke_certify(primitive, gallery.perron_half(primitive), horizon=150)
    assert report.status == CERTIFIED
    assert report.convergence.rank == 1
    assert np.allclose(np.asarray(predicted.to_dense(), dtype=float), report.convergence.limit.matrix, atol=1e-8)


def test_lasota_yorke_needs_a_nonzero_bound(primitive):
    with pytest.raises(PreconditionError):
        lasota_yorke_certify(primitive, primitive.space.zeros(), horizon=50)


def test_individual_bounds_on_blocks():
    S = gallery.build_block_diagonal((2, 3, 4), seed=1)
    report = individual_bounds_certify(S, S.extras["epsilon"])
    assert report.status == CERTIFIED
    assert report.convergence.rank == 3
    with pytest.raises(DomainError):
        individual_bounds_certify(S, 0)


def test_individual_bounds_fail_on_example_4_3():
    S = gallery.build_example_4_3(32)
    report = individual_bounds_certify(S, 1e-3, horizon=24)
    assert report.status == HYPOTHESIS_FAILED
    assert not report.details["converged"]
    out = report.to_dict()
    assert out["status"] == out["conclusion"] == HYPOTHESIS_FAILED
    assert not out["details"]["conclusion_holds"]


def test_ding_on_collapse():
    report = ding_certify(gallery.build_collapse(20), horizon=60)
    assert report.status == CERTIFIED
    assert report.convergence.min_column_norm == pytest.approx(1.0)
    assert report.details["sequence_valid"]


def test_ding_gate(primitive):
    with pytest.raises(StructuralGateError):
        ding_certify(primitive)


def test_ding_sequence_is_monotone():
    S = gallery.build_collapse(6)
    T = S.operator.to_float()
    f = S.space.vertex(4).as_float()
    h = S.space.unit(0).as_float()
    seq = ding_sequence(T, f, h, 5)
    for a, b in zip(seq, seq[1:]):
        assert a <= b + LatticeVector(a.space, [1e-12] * a.dim)
    assert all(s <= f for s in seq)


def test_lattice_homomorphism_rigidity():
    space = WeightedSpace.counting(4)
    assert lattice_homo_rigidity(Semigroup.discrete(identity(space)), horizon=20).status == CERTIFIED
    assert lattice_homo_rigidity(cyclic(4), horizon=20).status == HYPOTHESIS_FAILED
    with pytest.raises(StructuralGateError):
        lattice_homo_rigidity(Semigroup.discrete(DenseOperator(space, np.ones((4, 4)) / 4)))


@pytest.mark.parametrize("decay", [0.999, 0.99])
def test_rigidity_on_a_decaying_diagonal(decay):
    S = Semigroup.discrete(DiagonalOperator(WeightedSpace.counting(2), [1.0, decay]))
    report = lattice_homo_rigidity(S)
    assert report.status == HYPOTHESIS_FAILED
    assert not report.details["nonzero_bounds"]
    assert not report.details["identity"]
    assert report.to_dict()["conclusion"] == report.status


def test_rigidity_cannot_tell_slow_decay_from_a_bound():
    S = Semigroup.discrete(DiagonalOperator(WeightedSpace.counting(2), [1.0, 0.99999]))
    report = lattice_homo_rigidity(S, horizon=20)
    assert report.status == NOT_CERTIFIED
    assert list(report.details["decaying_vertices"]) == [1]


def test_psi_bound_with_the_norm_functional(primitive):
    psi = primitive.space.norm_functional()
    report = psi_lower_bound_certify(primitive, gallery.perron_half(primitive), psi, horizon=100)
    assert report.status == CERTIFIED
    assert report.details["rank"] == 1


def test_psi_bound_on_example_6_6_declines_without_f0():
    S = gallery.build_example_6_6(64, 2)
    report = psi_lower_bound_certify(S, S.space.zeros(), S.extras["psi"], horizon=40, kind=INDIVIDUAL)
    assert report.status == HYPOTHESIS_FAILED
    assert report.hypothesis("f0_domination").holds is False


def test_psi_must_be_strictly_positive(primitive):
    with pytest.raises(DomainError):
        psi_lower_bound_certify(primitive, primitive.space.zeros(), Functional(primitive.space, [0, 1, 1, 1, 1, 1]))


def test_domination_transfer_to_itself(primitive):
    report = domination_transfer(primitive, primitive, horizon=100)
    assert report.status == CERTIFIED


def test_domination_transfer_needs_a_positive_floor():
    S = gallery.build_example_5_4(8)
    report = domination_transfer(S, S, horizon=20)
    assert report.hypothesis("epsilon_floor").holds
    zero = Semigroup.discrete(DenseOperator(S.space, np.zeros((8, 8))))
    report = domination_transfer(S, zero, horizon=20)
    assert report.status == HYPOTHESIS_FAILED


def test_equal_norm_inequalities():
    space = WeightedSpace([1.0, 2.0, 0.5])
    h = space.vector([0.2, 0.3, 0.4]).scale(1 / space.vector([0.2, 0.3, 0.4]).norm(NORM_AL))
    f = space.vector([1.0, 0.0, 0.0])
    rows = asymptotic_domination_convergence([f, h], h)
    assert all(r["holds"] for r in rows)
    assert rows[1]["distance"] == 0


@seed(5)
@settings(max_examples=150, deadline=None)
@given(M=arrays(np.float64, (DIM, DIM), elements=st.floats(0.0, 3.0)),
       h=arrays(np.float64, (DIM, ), elements=st.floats(0.0, 2.0)),
       f=arrays(np.float64, (DIM, ), elements=st.floats(0.01, 1.0)))
def test_vertex_reduction_never_underreports(M, h, f):
    space = WeightedSpace.counting(DIM)
    T = DenseOperator(space, M)
    fv = LatticeVector(space, f / f.sum())
    assert vertex_reduction_gap(T, LatticeVector(space, h), fv) >= -1e-12
