import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfbcs.states import OnSiteState, ProductMixture, parity_commutator_norm


def test_named_constructors():
    assert OnSiteState.vacuum().matrix[0, 0] == 1.0
    assert OnSiteState.doubly_occupied().matrix[3, 3] == 1.0
    mm = OnSiteState.maximally_mixed()
    assert np.allclose(mm.matrix, np.eye(4) / 4.0)
    for s in (OnSiteState.vacuum(), mm, OnSiteState.pair_superposition(0.8, 1.2)):
        assert s.is_even


def test_validation_rejects_bad_matrices():
    with pytest.raises(ValueError):
        OnSiteState.from_matrix(np.eye(4))  # trace 4
    with pytest.raises(ValueError):
        OnSiteState.from_matrix(np.diag([1.5, -0.5, 0.0, 0.0]))  # negative eigenvalue
    bad = np.eye(4, dtype=complex) / 4.0
    bad[0, 1] = 0.3  # not Hermitian
    with pytest.raises(ValueError):
        OnSiteState.from_matrix(bad)
    odd = np.zeros((4, 4), dtype=complex)
    odd[0, 0] = odd[1, 1] = 0.5
    odd[0, 1] = odd[1, 0] = 0.5
    with pytest.raises(ValueError):
        OnSiteState.from_matrix(odd, require_even=True)


@given(seed=st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_property_random_even_states_valid(seed):
    rho = OnSiteState.random_even(np.random.default_rng(seed))
    m = rho.matrix
    assert abs(np.trace(m).real - 1.0) < 1e-12
    assert np.linalg.eigvalsh(m).min() > 0.0  # full rank by construction
    assert parity_commutator_norm(m) < 1e-12


def test_pure_pair_superposition_expectations():
    rho = OnSiteState.pair_superposition(np.pi / 6.0)
    z = rho.pair_expectation()
    assert abs(z - np.sin(np.pi / 6.0) * np.cos(np.pi / 6.0)) < 1e-15


def test_mixture_validation():
    good = ProductMixture.from_components(
        [(0.5, OnSiteState.vacuum()), (0.5, OnSiteState.maximally_mixed())]
    )
    assert len(good) == 2
    bary = good.barycenter()
    assert abs(np.trace(bary.matrix).real - 1.0) < 1e-14
    with pytest.raises(ValueError):
        ProductMixture.from_components([(0.5, OnSiteState.vacuum())])  # weights != 1
    with pytest.raises(ValueError):
        ProductMixture.from_components(
            [(1.5, OnSiteState.vacuum()), (-0.5, OnSiteState.maximally_mixed())]
        )
    odd = OnSiteState.pure([1.0, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        ProductMixture.from_components([(1.0, odd)])
