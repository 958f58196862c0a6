import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfbcs import fock, model
from mfbcs.errors import NumericalAbortError, TruncationError
from mfbcs.flow import (
    ACCEPTANCE_FLOW,
    FlowConfig,
    dyson_phillips,
    flow_onsite,
    heisenberg_propagator_ode,
    interference_prediction,
    mixture_flow,
    observables,
    self_consistency_residual,
)
from mfbcs.states import OnSiteState, ProductMixture, parity_commutator_norm

from conftest import random_params


def test_observables_vacuum():
    rec = observables(model.ModelParams(mu=1.0, lam=0.5, gamma=2.0), OnSiteState.vacuum())
    assert (rec.d, rec.m, rec.w, rec.z) == (0.0, 0.0, 0.0, 0.0)
    assert rec.theta == 0.0 and rec.kappa == 0.0


def test_phase_convention_half_open_interval():
    # a negative real Cooper field has phase -pi, not +pi
    rho = OnSiteState.pair_superposition(0.4, math.pi)
    rec = observables(model.ModelParams(), rho)
    assert rec.z.real < 0 and abs(rec.z.imag) < 1e-15
    assert rec.theta == -math.pi


def test_observables_nu_examples(rng):
    # nu = 2 (mu - lam) + gamma (1 - d)
    v = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)  # d = 1
    rho = OnSiteState.pure(v)
    rec = observables(model.ModelParams(mu=1.0, lam=0.5, gamma=2.0), rho)
    assert abs(rec.d - 1.0) < 1e-14
    assert abs(rec.nu - 1.0) < 1e-13
    rec2 = observables(model.ModelParams(mu=0.7, lam=0.7, gamma=0.0), rho)
    assert rec2.nu == 0.0


def test_flow_gamma_zero_closed_form(rng):
    params = model.ModelParams(mu=0.8, h=0.3, lam=0.2, gamma=0.0)
    rho0 = OnSiteState.random_even(rng)
    times = np.linspace(0.0, 3.0, 7)
    traj = flow_onsite(params, rho0, times, ACCEPTANCE_FLOW)
    z0 = rho0.pair_expectation()
    expected = z0 * np.exp(2j * (params.mu - params.lam) * times)
    assert np.max(np.abs(traj.z - expected)) < 1e-10
    for k in range(len(times)):
        assert np.max(np.abs(np.diag(traj.states[k].matrix) - np.diag(rho0.matrix))) < 1e-10


def test_flow_fixed_point_maximally_mixed():
    params = model.ModelParams(mu=0.5, h=0.1, lam=0.3, gamma=1.8)
    traj = flow_onsite(params, OnSiteState.maximally_mixed(), [0.0, 1.0, 5.0])
    for state in traj.states:
        assert np.max(np.abs(state.matrix - np.eye(4) / 4.0)) < 1e-12


def test_flow_cooper_field_rotation(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    traj = flow_onsite(params, rho0, [1.0], ACCEPTANCE_FLOW)
    rec0 = observables(params, rho0)
    predicted = math.sqrt(rec0.kappa) * np.exp(1j * (rec0.nu + rec0.theta))
    assert abs(traj.z[0] - predicted) < 1e-9


def test_flow_backward_times(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    traj = flow_onsite(params, rho0, [-1.0, 0.0, 1.0], ACCEPTANCE_FLOW)
    rec0 = observables(params, rho0)
    for t, z in zip(traj.times, traj.z):
        predicted = math.sqrt(rec0.kappa) * np.exp(1j * (t * rec0.nu + rec0.theta))
        assert abs(z - predicted) < 1e-9


def test_flow_requires_even():
    odd = OnSiteState.pure([1.0, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        flow_onsite(model.ModelParams(gamma=1.0), odd, [0.0, 1.0])


def test_flow_preserves_evenness(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    traj = flow_onsite(params, rho0, np.linspace(0.0, 5.0, 6), ACCEPTANCE_FLOW)
    for state in traj.states:
        assert parity_commutator_norm(state.matrix) < 1e-8


def test_rk4_matches_adaptive(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    times = [0.0, 0.5, 1.0]
    rk4 = flow_onsite(params, rho0, times, FlowConfig(method="rk4", step_size=1e-3))
    ada = flow_onsite(params, rho0, times, ACCEPTANCE_FLOW)
    for a, b in zip(rk4.states, ada.states):
        assert np.max(np.abs(a.matrix - b.matrix)) < 1e-9


@given(seed=st.integers(min_value=0, max_value=10_000))
@settings(max_examples=10, deadline=None)
def test_property_densities_conserved(seed):
    rng = np.random.default_rng(seed)
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    traj = flow_onsite(params, rho0, [0.0, 2.0], ACCEPTANCE_FLOW)
    assert abs(traj.d[1] - traj.d[0]) < 1e-9
    assert abs(traj.m[1] - traj.m[0]) < 1e-9
    assert abs(traj.w[1] - traj.w[0]) < 1e-9
    assert abs(traj.kappa[1] - traj.kappa[0]) < 1e-9


def test_self_consistency_residual(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    traj = flow_onsite(params, rho0, np.linspace(0.0, 4.0, 9), ACCEPTANCE_FLOW)
    res = self_consistency_residual(params, traj)
    assert res < 2e-9  # 2x the integrator tolerance scale


def test_positivity_abort():
    # a huge fixed step on a strongly driven state destroys positivity
    params = model.ModelParams(gamma=4.0)
    rho0 = OnSiteState.pair_superposition(math.pi / 5.0)
    cfg = FlowConfig(method="rk4", step_size=3.0, positivity_tolerance=1e-10)
    with pytest.raises(NumericalAbortError):
        flow_onsite(params, rho0, [30.0], cfg)


def test_mixture_single_component_identical(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    times = [0.0, 0.8]
    mix = ProductMixture.single(rho0)
    mt = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
    traj = flow_onsite(params, rho0, times, ACCEPTANCE_FLOW)
    # same code path, weight 1.0: bitwise equality
    assert np.array_equal(mt.d, 1.0 * traj.d)
    assert np.array_equal(mt.z, 1.0 * traj.z)


def test_mixture_expectation_series_linearity(rng):
    # mixture expectations are the weighted component sums, bitwise (same
    # arithmetic path), and expectation_series agrees with the records
    params = random_params(rng)
    comps = [(0.25, OnSiteState.random_even(rng)), (0.75, OnSiteState.random_even(rng))]
    mix = ProductMixture.from_components(comps)
    times = [0.0, 0.6, 1.2]
    mt = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
    manual_d = 0.25 * mt.components[0].d + 0.75 * mt.components[1].d
    assert np.array_equal(mt.d, manual_d)
    series = mt.expectation_series((fock.N_UP + fock.N_DN).astype(complex))
    assert np.array_equal(series.real, mt.d)
    z_series = mt.expectation_series(fock.PAIR)
    assert np.array_equal(z_series, mt.z)


def test_mixture_opposite_phases_cancel():
    params = model.ModelParams(mu=0.2, gamma=1.5)
    a, b = 0.4, 0.4
    mix = ProductMixture.from_components(
        [
            (0.5, OnSiteState.pair_superposition(a, 0.0)),
            (0.5, OnSiteState.pair_superposition(b, math.pi)),
        ]
    )
    times = np.linspace(0.0, 4.0, 9)
    mt = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
    assert np.max(np.abs(mt.z)) < 1e-10


def test_mixture_beats():
    params = model.ModelParams(gamma=2.0)
    mix = ProductMixture.from_components(
        [
            (0.5, OnSiteState.pair_superposition(math.pi / 8.0)),
            (0.5, OnSiteState.pair_superposition(3.0 * math.pi / 8.0)),
        ]
    )
    nu1 = observables(params, mix.states[0]).nu
    nu2 = observables(params, mix.states[1]).nu
    period = 2.0 * math.pi / abs(nu1 - nu2)
    times = np.linspace(0.0, period, 101)
    mt = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
    swing = mt.kappa.max() - mt.kappa.min()
    assert abs(swing - 0.125) < 1e-6  # closed-form peak-to-trough
    # |prediction|^2 is periodic with the beat period
    pred_start = interference_prediction(params, mix, 0.0)
    pred_end = interference_prediction(params, mix, period)
    assert abs(abs(pred_start) ** 2 - abs(pred_end) ** 2) < 1e-12


def test_interference_prediction_basics(rng):
    params = random_params(rng)
    states = [OnSiteState.random_even(rng) for _ in range(3)]
    mix = ProductMixture.from_components([(1.0 / 3.0, s) for s in states])
    at0 = interference_prediction(params, mix, 0.0)
    direct = sum(s.pair_expectation() for s in states) / 3.0
    assert abs(at0 - direct) < 1e-12
    single = ProductMixture.single(states[0])
    rec = observables(params, states[0])
    t = 0.7
    expected = math.sqrt(rec.kappa) * np.exp(1j * (t * rec.nu + rec.theta))
    assert abs(interference_prediction(params, single, t) - expected) < 1e-12


def test_mixture_flow_matches_prediction(rng):
    params = random_params(rng)
    comps = [(0.3, OnSiteState.random_even(rng)), (0.7, OnSiteState.random_even(rng))]
    mix = ProductMixture.from_components(comps)
    times = np.linspace(0.0, 2.0, 11)
    mt = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
    predicted = interference_prediction(params, mix, times)
    assert np.max(np.abs(mt.z - predicted)) < 1e-8


# --- Dyson series ----------------------------------------------------------


def test_dyson_t_zero(rng):
    params = random_params(rng)
    a = np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex)
    res = dyson_phillips(params, lambda s: OnSiteState.vacuum(), 0.0, 4, a)
    assert np.array_equal(res.operator, a)
    assert res.remainder_bound == 0.0


def test_dyson_constant_drive_vs_spectral(rng):
    params = random_params(rng)
    rho = OnSiteState.random_even(rng)
    dh = model.effective_hamiltonian(params, rho)
    w, u = np.linalg.eigh(dh)
    t = 0.15
    conj = (u * np.exp(1j * t * w)) @ u.conj().T
    a = (fock.PAIR + fock.PAIR_DAG).astype(complex)
    expected = conj @ a @ conj.conj().T
    res = dyson_phillips(params, lambda s: rho, t, 10, a)
    # the deviation is controlled by the certified truncation remainder
    assert np.max(np.abs(res.operator - expected)) < res.remainder_bound + 1e-12


def test_dyson_flow_drive_vs_ode(rng):
    params = random_params(rng)
    rho0 = OnSiteState.random_even(rng)
    t = 0.1
    traj = flow_onsite(params, rho0, [0.0, t], ACCEPTANCE_FLOW)
    a = (1j * (fock.PAIR - fock.PAIR_DAG)).astype(complex)
    res = dyson_phillips(params, traj.state_matrix, t, 8, a)
    ref = (heisenberg_propagator_ode(params, traj.state_matrix, t) @ a.ravel()).reshape(4, 4)
    assert np.max(np.abs(res.operator - ref)) < 1e-10
    # pairing with the evolved density matrix reproduces the flow expectation
    heis = np.trace(rho0.matrix @ res.operator)
    schro = np.trace(traj.states[1].matrix @ a)
    assert abs(heis - schro) < 1e-10


def test_dyson_truncation_error_raised(rng):
    params = model.ModelParams(mu=1.0, h=0.5, lam=1.0, gamma=2.0)
    rho = OnSiteState.pair_superposition(0.7)
    with pytest.raises(TruncationError):
        dyson_phillips(params, lambda s: rho, 5.0, 2, fock.PAIR_DAG + fock.PAIR, tol=1e-8)


def test_flow_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(step_size=0.0)
    with pytest.raises(ValueError):
        FlowConfig(method="euler")
