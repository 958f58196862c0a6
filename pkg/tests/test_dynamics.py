import numpy as np
import pytest
from scipy.integrate import solve_ivp

from mfbcs import dynamics, fock, model
from mfbcs.errors import CapacityError
from mfbcs.states import OnSiteState, ProductMixture

from conftest import random_params
from test_model import PRESSURE_N2_ORACLE


def test_product_state_vacuum():
    state = dynamics.product_state(2, OnSiteState.vacuum())
    expected = np.zeros((16, 16))
    expected[0, 0] = 1.0
    assert np.allclose(state.density(), expected, atol=1e-15)


def test_product_state_maximally_mixed():
    state = dynamics.product_state(2, OnSiteState.maximally_mixed())
    assert np.allclose(state.density(), np.eye(16) / 16.0, atol=1e-15)


def test_product_state_factorizes(rng):
    rho = OnSiteState.random_even(rng)
    state = dynamics.product_state(3, rho)
    n_up0 = fock.FermionOperatorSet.build(3).numbers[(0, "up")]
    n_dn2 = fock.FermionOperatorSet.build(3).numbers[(2, "dn")]
    joint = state.expectation((n_up0 @ n_dn2).tocsr()).real
    product = rho.expect(fock.N_UP).real * rho.expect(fock.N_DN).real
    assert abs(joint - product) < 1e-12


def test_product_state_rejects_odd():
    odd = OnSiteState.pure([1.0, 1.0, 0.0, 0.0])  # vac/up superposition
    with pytest.raises(ValueError):
        dynamics.product_state(2, odd)


def test_product_mixture_state(rng):
    mix = ProductMixture.from_components(
        [(0.25, OnSiteState.vacuum()), (0.75, OnSiteState.maximally_mixed())]
    )
    state = dynamics.product_state(2, mix)
    expected = 0.25 * dynamics.product_state(2, OnSiteState.vacuum()).density()
    expected += 0.75 * np.eye(16) / 16.0
    assert np.allclose(state.density(), expected, atol=1e-15)


def test_identity_expectation_constant(rng):
    params = random_params(rng)
    rho = OnSiteState.random_even(rng)
    initial = dynamics.product_state(2, rho)
    series = dynamics.evolve_expectation(
        2, params, initial, np.eye(16), [0.0, 0.5, 1.3]
    )
    assert np.allclose(series, 1.0, atol=1e-12)


def test_gamma_zero_reduces_to_single_site(rng):
    # with no pair hopping the N-site evolution of an on-site observable
    # equals the 1-site evolution
    params = model.ModelParams(mu=0.4, h=0.2, lam=0.6, gamma=0.0)
    rho = OnSiteState.random_even(rng)
    times = [0.0, 0.7, 1.9]
    a = (fock.PAIR + fock.PAIR_DAG).astype(complex)
    one = dynamics.evolve_expectation(
        1, params, dynamics.product_state(1, rho), a, times
    )
    three = dynamics.evolve_expectation(
        3, params, dynamics.product_state(3, rho), a, times
    )
    assert np.max(np.abs(one - three)) < 1e-12


def test_single_site_against_independent_ode(rng):
    # dual route at N=1: spectral conjugation vs direct von Neumann integration
    params = model.ModelParams(mu=0.3, h=0.0, lam=0.2, gamma=1.4)
    rho = OnSiteState.pair_superposition(0.6)
    h1 = model.hamiltonian(1, params)
    times = np.linspace(0.0, 2.0, 9)
    spectral = dynamics.evolve_expectation(
        1, params, dynamics.product_state(1, rho), fock.PAIR, times
    )

    def rhs(_t, y):
        d = y.view(complex).reshape(4, 4)
        return (-1j * (h1 @ d - d @ h1)).ravel().view(float)

    sol = solve_ivp(
        rhs,
        (0.0, 2.0),
        rho.matrix.astype(complex).ravel().view(float).copy(),
        t_eval=times,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    ode = np.array(
        [
            np.trace(np.ascontiguousarray(col).view(complex).reshape(4, 4) @ fock.PAIR)
            for col in sol.y.T
        ]
    )
    assert np.max(np.abs(spectral - ode)) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_heisenberg_equals_schroedinger(n, rng):
    params = random_params(rng)
    prop = dynamics.Propagator.from_model(n, params)
    rho = OnSiteState.random_even(rng)
    initial = dynamics.product_state(n, rho)
    a = fock.embed_local(n, n - 1, fock.N_UP @ fock.N_DN).toarray()
    t = 0.8
    heis = np.trace(prop.heisenberg(a, t) @ initial.density())
    schro = np.trace(a @ prop.evolve_density(initial.density(), t))
    assert abs(heis - schro) < 1e-12


def test_evolution_preserves_state_and_energy(rng):
    params = random_params(rng)
    prop = dynamics.Propagator.from_model(3, params)
    rho = OnSiteState.random_even(rng)
    d0 = dynamics.product_state(3, rho).density()
    number = fock.FermionOperatorSet.build(3).total_number().toarray()
    e0 = np.trace(prop.hamiltonian @ d0).real
    n0 = np.trace(number @ d0).real
    for t in (0.5, 2.0):
        dt = prop.evolve_density(d0, t)
        assert abs(np.trace(dt).real - 1.0) < 1e-10
        assert np.linalg.eigvalsh(dt).min() > -1e-10
        assert abs(np.trace(prop.hamiltonian @ dt).real - e0) < 1e-10
        assert abs(np.trace(number @ dt).real - n0) < 1e-10


def test_gibbs_infinite_temperature_limit():
    params = model.ModelParams(mu=0.5, gamma=1.0)
    state = dynamics.gibbs_state(2, params, dynamics.GibbsSpec(beta=1e-6))
    assert np.max(np.abs(state.density() - np.eye(16) / 16.0)) < 1e-4


def test_gibbs_single_site_diagonal():
    params = model.ModelParams(mu=0.8, h=0.3, lam=0.4, gamma=0.0)
    beta = 1.7
    state = dynamics.gibbs_state(1, params, dynamics.GibbsSpec(beta=beta))
    energies = np.diag(model.onsite_h(params)).real
    weights = np.exp(-beta * energies)
    weights /= weights.sum()
    assert np.allclose(state.density(), np.diag(weights), atol=1e-12)


def test_gibbs_with_field_is_product():
    params = model.ModelParams(mu=0.2, gamma=1.5)
    spec = dynamics.GibbsSpec(beta=0.9)
    c = 0.3 + 0.4j
    two = dynamics.gibbs_state(2, params, spec, c=c).density()
    one = dynamics.gibbs_state(1, params, spec, c=c).density()
    assert np.max(np.abs(two - np.kron(one, one))) < 1e-12


def test_pressure_free_case():
    spec = dynamics.GibbsSpec(beta=2.0)
    p = dynamics.pressure_fv(2, model.ModelParams(), spec)
    assert abs(p - np.log(4.0) / 2.0) < 1e-13


def test_pressure_with_field_independent_of_n():
    params = model.ModelParams(mu=0.3, h=0.1, lam=0.2, gamma=1.1)
    spec = dynamics.GibbsSpec(beta=1.4)
    c = 0.25 - 0.1j
    p1 = dynamics.pressure_fv(1, params, spec, c=c)
    p3 = dynamics.pressure_fv(3, params, spec, c=c)
    assert abs(p1 - p3) < 1e-12


def test_pressure_n2_oracle_value():
    params = model.ModelParams(mu=1.0, gamma=2.0)
    p = dynamics.pressure_fv(2, params, dynamics.GibbsSpec(beta=1.0))
    assert abs(p - PRESSURE_N2_ORACLE) < 1e-12


def test_condensate_density_infinite_temperature():
    # at beta -> 0 only the x = y diagonal survives: omega(c0+ c0)/N = 1/(4N)
    params = model.ModelParams(gamma=0.0)
    for n in (1, 2, 3):
        val = dynamics.condensate_density_fv(n, params, dynamics.GibbsSpec(beta=1e-6))
        assert abs(val - 0.25 / n) < 1e-5


def test_condensate_density_single_site_identity():
    params = model.ModelParams(mu=0.3, gamma=2.0)
    spec = dynamics.GibbsSpec(beta=1.5)
    val = dynamics.condensate_density_fv(1, params, spec)
    state = dynamics.gibbs_state(1, params, spec)
    w_exp = np.trace(state.density() @ (fock.N_UP @ fock.N_DN)).real
    assert abs(val - w_exp) < 1e-12


def test_krylov_matches_spectral(rng):
    params = random_params(rng)
    psi = dynamics.pure_product_state(3, [np.cos(0.5), 0.0, 0.0, np.sin(0.5)])
    times = [0.0, 0.4, 1.1]
    a = fock.PAIR
    spectral = dynamics.evolve_expectation(3, params, psi, a, times, backend="spectral")
    krylov = dynamics.evolve_expectation(3, params, psi, a, times, backend="krylov")
    assert np.max(np.abs(spectral - krylov)) < 1e-10


def test_six_site_krylov_smoke():
    params = model.ModelParams(gamma=2.0)
    psi = dynamics.pure_product_state(6, [np.cos(0.5), 0.0, 0.0, np.sin(0.5)])
    series = dynamics.evolve_expectation(6, params, psi, fock.PAIR, [0.0, 0.05])
    assert abs(series[0] - np.cos(0.5) * np.sin(0.5)) < 1e-12
    assert np.isfinite(series).all()


def test_capacity_errors():
    params = model.ModelParams(gamma=1.0)
    with pytest.raises(CapacityError):
        dynamics.product_state(6, OnSiteState.vacuum())
    with pytest.raises(CapacityError):
        dynamics.propagation_backend(6, "mixed")
    with pytest.raises(CapacityError):
        dynamics.propagation_backend(7, "pure")
    with pytest.raises(CapacityError):
        dynamics.gibbs_state(6, params, dynamics.GibbsSpec(beta=1.0))


def test_gibbs_spec_validation():
    with pytest.raises(ValueError):
        dynamics.GibbsSpec(beta=0.0)
