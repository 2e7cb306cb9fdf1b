from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

from lowerbound_lab import gallery
from lowerbound_lab.exception import DomainError, GalleryError
from lowerbound_lab.operators import is_markov


@pytest.mark.parametrize("name", gallery.names())
def test_every_instance_builds_with_defaults(name):
    S = gallery.build(name)
    assert S.dim >= 2
    assert gallery.get(name).expect


def test_orbit_mass_is_exact():
    assert gallery.orbit_mass(0) == 1
    assert gallery.orbit_mass(5) == Fraction(9765, 32768)


def test_example_4_3_in_rational_mode():
    S = gallery.build_example_4_3(16, exact=True)
    f = S.space.unit(1)
    for n in range(1, 6):
        f = S.operator.apply(f)
    assert f == gallery.example_4_3_orbit(S.space, 5)
    assert f.entries[0] == 1 - Fraction(9765, 32768)


def test_example_5_4_column_norms():
    S = gallery.build_example_5_4(8, exact=True)
    norms = [S.operator.apply(S.space.unit(k)).norm() for k in range(8)]
    assert norms == [Fraction(1, 2 ** k) for k in range(8)]


def test_example_6_6_is_markov_on_its_envelope():
    S = gallery.build_example_6_6(16, 2, exact=True)
    assert S.space.p == 2
    assert is_markov(S.operator.with_space(S.extras["envelope"]).to_float(), 1e-12)
    with pytest.raises(DomainError):
        gallery.build_example_6_6(16, 2.5, exact=True)
    with pytest.raises(DomainError):
        gallery.build_example_6_6(16, 1)


def test_truncated_instances_need_room():
    with pytest.raises(DomainError):
        gallery.build_example_4_3(4)
    with pytest.raises(GalleryError):
        gallery.build("example-4-3", SimpleNamespace(dim=4, exact=None))


def test_horizon_limit_only_for_shift_instances():
    entry = gallery.get("example-4-3")
    assert entry.horizon_limit(gallery.build_example_4_3(32)) == 24
    assert gallery.get("collapse").horizon_limit(gallery.build_collapse(10)) is None


def test_unknown_instance():
    with pytest.raises(GalleryError):
        gallery.get("no-such-instance")


def test_perron_vector_is_fixed():
    S = gallery.random_primitive_stochastic(4, seed=2)
    pi = gallery.perron_vector(S.operator)
    M = np.asarray(S.operator.to_dense(), dtype=float)
    assert np.allclose(M @ pi.entries, pi.entries, atol=1e-12)
    assert pi.norm() == pytest.approx(1.0)
    assert gallery.perron_half(S).norm() == pytest.approx(0.5)


def test_block_diagonal_epsilon_and_block_count():
    S = gallery.build_block_diagonal((2, 3), seed=4)
    assert S.dim == 5
    assert S.extras["blocks"] == 2
    assert 0 < S.extras["epsilon"] < 1
    with pytest.raises(DomainError):
        gallery.build_block_diagonal((5, ))


def test_rotation_needs_a_positive_period():
    with pytest.raises(DomainError):
        gallery.build_rotation_semigroup(0)


def test_entry_to_dict():
    out = gallery.get("example-4-3").to_dict()
    assert out["truncated"] is True
    assert "maximal-lower-bound" in out["checks"]
    assert out["source"] == "builtin"
