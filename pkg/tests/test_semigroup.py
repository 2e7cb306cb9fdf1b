import numpy as np
import pytest
import scipy.linalg

from lowerbound_lab import gallery
from lowerbound_lab.exception import DomainError
from lowerbound_lab.lattice import WeightedSpace
from lowerbound_lab.operators import DenseOperator, TransportOperator, matrix_weighted_norm
from lowerbound_lab.semigroup import MODE_OPERATOR_NORM, EmbeddedConsistencyReport, Semigroup, \
    detect_strong_convergence, discrete_power_consistency, embedded_discrete_consistency, evaluate, \
    operator_norm_convergence, orbit, projection_constancy_check, sampled_operator_norms, semigroup_law_defect

TWO_STATE = np.array([[0.9, 0.2], [0.1, 0.8]])


def two_state():
    return Semigroup.discrete(DenseOperator(WeightedSpace.counting(2), TWO_STATE))


def test_primitive_chain_converges_to_rank_one():
    r = detect_strong_convergence(two_state(), horizon=400)
    assert r.converged
    assert r.rank == 1
    pi = np.array([2.0, 1.0]) / 3.0
    assert np.allclose(r.limit.matrix, np.outer(pi, np.ones(2)), atol=1e-10)
    assert r.projection_defect <= 1e-9
    assert r.min_column_norm == pytest.approx(1.0)


def test_cyclic_permutation_does_not_converge():
    S = Semigroup.discrete(TransportOperator(WeightedSpace.counting(3), [1, 2, 0]))
    r = detect_strong_convergence(S, horizon=60)
    assert not r.converged
    assert r.limit is None


def test_converged_verdict_survives_doubling_the_horizon():
    S = two_state()
    assert detect_strong_convergence(S, 300).converged
    assert detect_strong_convergence(S, 600).converged


def test_horizon_must_be_at_least_two():
    with pytest.raises(DomainError):
        detect_strong_convergence(two_state(), horizon=1)


def test_operator_norm_convergence_of_constant_semigroup():
    r = operator_norm_convergence(gallery.build_two_point_fp(), horizon=20)
    assert r.converged
    assert r.mode == MODE_OPERATOR_NORM


def test_escaped_mass_blocks_convergence():
    S = gallery.build_example_4_3(16)
    r = detect_strong_convergence(S, horizon=40)
    assert r.approximate
    assert not r.converged


def test_uniformization_matches_expm():
    S = gallery.build_primitive_generator()
    for t in (0.3, 1.0, 2.5):
        P = np.asarray(evaluate(S, t).to_dense(), dtype=float)
        assert np.allclose(P, scipy.linalg.expm(S.rate_matrix * t), atol=1e-12)
    assert semigroup_law_defect(S, 0.4, 0.9) <= 1e-12


def test_continuous_rates_validated():
    space = WeightedSpace.counting(2)
    with pytest.raises(DomainError):
        Semigroup.continuous(space, [[-1.0, -1.0], [1.0, 1.0]])
    with pytest.raises(DomainError):
        Semigroup.continuous(space, [[0.0, 1.0], [1.0, 0.0]])


def test_evaluate_rejects_bad_times():
    with pytest.raises(DomainError):
        evaluate(two_state(), 1.5)
    with pytest.raises(DomainError):
        evaluate(gallery.build_primitive_generator(), 0.0)


def test_orbit_times_must_increase():
    S = two_state()
    with pytest.raises(DomainError):
        orbit(S, S.space.unit(0), [3, 1])
    out = orbit(S, S.space.unit(0), [1, 2])
    assert np.allclose(out[1].entries, TWO_STATE @ TWO_STATE @ np.array([1.0, 0.0]))


def test_embedded_consistency_of_primitive_generator():
    r = embedded_discrete_consistency(gallery.build_primitive_generator())
    assert r.status == EmbeddedConsistencyReport.CONSISTENT
    assert r.limits_agree and r.agrees_with_continuous
    assert r.all_embedded_converge
    assert r.prediction_holds


def test_rotation_sampled_at_its_period():
    S = gallery.build_rotation_semigroup(1.0)
    r = embedded_discrete_consistency(S, [1.0])
    assert r.status == EmbeddedConsistencyReport.SAMPLED_DISCREPANCY
    assert not r.continuous.converged
    assert not embedded_discrete_consistency(S, [0.5]).embedded[0].converged


def test_embedded_consistency_needs_continuous_semigroup():
    with pytest.raises(DomainError):
        embedded_discrete_consistency(two_state())
    with pytest.raises(DomainError):
        embedded_discrete_consistency(gallery.build_primitive_generator(), [1.0, 1.0])


def test_power_consistency():
    r = discrete_power_consistency(two_state(), 3, horizon=200)
    assert r.prediction
    assert r.prediction_holds
    with pytest.raises(DomainError):
        discrete_power_consistency(two_state(), 0)


def test_projection_constancy():
    idempotent, spread, holds = projection_constancy_check(gallery.build_two_point_fp(), [1, 2, 5])
    assert idempotent and spread == 0.0 and holds
    idempotent, _, holds = projection_constancy_check(two_state(), [1, 2])
    assert not idempotent and holds


def test_sampled_norms_of_markov_semigroup():
    norms = sampled_operator_norms(two_state(), 10)
    assert np.allclose(norms, 1.0)


def test_exact_semigroup_runs_in_float():
    S = gallery.build_example_5_4(8, exact=True)
    r = detect_strong_convergence(S, horizon=10)
    assert r.converged
    T = np.asarray(S.operator.to_dense(), dtype=float)
    assert matrix_weighted_norm(r.limit.matrix - T, S.space.as_float()) <= 1e-15
