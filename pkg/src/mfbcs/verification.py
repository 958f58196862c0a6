"""Property suites behind ``mfbcs verify`` and the acceptance tests.

Each check returns a :class:`CheckResult` with the worst observed violation
and its threshold; the CLI prints one line per check and the acceptance
test module asserts each one.  Checks are deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from . import classical, dynamics, equilibrium, fock, model
from .flow import (
    ACCEPTANCE_FLOW,
    Trajectory,
    dyson_phillips,
    flow_onsite,
    heisenberg_propagator_ode,
    interference_prediction,
    mixture_flow,
    observables,
)
from .states import OnSiteState, ProductMixture

#: Oracle-pinned maximizer of the gap problem at beta=1, gamma=8, mu=h=lam=0
#: (root of r = tanh(4 r)/2, found by bisection to machine precision).
GAP_RSTAR_GAMMA8 = 0.47875201203863437

#: Oracle-pinned peak-to-trough of the designated two-component beat example
#: (equal weights, kappa_j = 1/8, opposite frequencies: swing = kappa = 1/8).
BEAT_PEAK_TO_TROUGH = 0.125


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_violation: float
    threshold: float
    runtime_s: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = (
            f"[{status}] {self.name}: violation {self.max_violation:.3e} "
            f"(threshold {self.threshold:.1e}, {self.runtime_s:.1f}s)"
        )
        if self.detail:
            out += f" | {self.detail}"
        return out


def _timed(fn: Callable[[], Tuple[bool, float, float, str]], name: str) -> CheckResult:
    t0 = time.perf_counter()
    passed, violation, threshold, detail = fn()
    return CheckResult(
        name=name,
        passed=passed,
        max_violation=violation,
        threshold=threshold,
        runtime_s=time.perf_counter() - t0,
        detail=detail,
    )


def _seeded_params(rng: np.random.Generator, gamma_max: float = 2.0) -> model.ModelParams:
    return model.ModelParams(
        mu=float(rng.uniform(-1.0, 1.0)),
        h=float(rng.uniform(-1.0, 1.0)),
        lam=float(rng.uniform(0.0, 1.0)),
        gamma=float(rng.uniform(0.0, gamma_max)),
    )


# --- 1. CAR exactness ------------------------------------------------------


def check_car_exactness(seed: int = 0) -> CheckResult:
    def body():
        worst = 0.0
        for n in range(1, 6):
            worst = max(worst, fock.car_report(fock.FermionOperatorSet.build(n)))
        return worst == 0.0, worst, 0.0, "N = 1..5, integer construction"

    return _timed(body, "car-exactness")


# --- 2/3/10. Prop-1 suite (shared flows) -----------------------------------


@lru_cache(maxsize=4)
def _prop1_suite(seed: int) -> Tuple[Tuple[model.ModelParams, OnSiteState, Trajectory], ...]:
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 10.0, 41)
    out = []
    for _ in range(50):
        params = _seeded_params(rng)
        rho0 = OnSiteState.random_even(rng)
        out.append((params, rho0, flow_onsite(params, rho0, times, ACCEPTANCE_FLOW)))
    return tuple(out)


def check_conserved_densities(seed: int = 0) -> CheckResult:
    def body():
        worst = 0.0
        for _params, _rho0, traj in _prop1_suite(seed):
            drift = (
                np.abs(traj.d - traj.d[0])
                + np.abs(traj.m - traj.m[0])
                + np.abs(traj.w - traj.w[0])
            )
            worst = max(worst, float(drift.max()))
        return worst < 1e-8, worst, 1e-8, "50 states, t in [0, 10]"

    return _timed(body, "density-conservation")


def check_cooper_field_law(seed: int = 0) -> CheckResult:
    def body():
        worst_z = 0.0
        worst_kappa = 0.0
        for params, rho0, traj in _prop1_suite(seed):
            rec0 = observables(params, rho0)
            predicted = math.sqrt(rec0.kappa) * np.exp(
                1j * (traj.times * rec0.nu + rec0.theta)
            )
            worst_z = max(worst_z, float(np.max(np.abs(traj.z - predicted))))
            worst_kappa = max(worst_kappa, float(np.max(np.abs(traj.kappa - rec0.kappa))))
        passed = worst_z < 1e-6 and worst_kappa < 1e-8
        return passed, worst_z, 1e-6, f"kappa drift {worst_kappa:.2e} (limit 1e-8)"

    return _timed(body, "cooper-field-rotation")


def check_rotor_diagram(seed: int = 0) -> CheckResult:
    def body():
        worst = 0.0
        for params, rho0, traj in _prop1_suite(seed):
            start = classical.rotor_map(params, rho0)
            rotor = classical.rotor_flow(start, traj.times)
            for k, t in enumerate(traj.times):
                via_flow = classical.rotor_map(params, traj.states[k])
                dev = np.max(np.abs(via_flow.as_array() - rotor[k].as_array()))
                worst = max(worst, float(dev))
        return worst < 1e-6, worst, 1e-6, "rotor_map o flow = rotor_flow o rotor_map"

    return _timed(body, "rotor-commuting-diagram")


# --- 4. Interference --------------------------------------------------------


def _beat_example() -> Tuple[model.ModelParams, ProductMixture, float]:
    """Two equal-weight branches with kappa = 1/8 and opposite frequencies."""
    params = model.ModelParams(mu=0.0, h=0.0, lam=0.0, gamma=2.0)
    mix = ProductMixture.from_components(
        [
            (0.5, OnSiteState.pair_superposition(math.pi / 8.0)),
            (0.5, OnSiteState.pair_superposition(3.0 * math.pi / 8.0)),
        ]
    )
    nu1 = observables(params, mix.states[0]).nu
    nu2 = observables(params, mix.states[1]).nu
    beat_period = 2.0 * math.pi / abs(nu1 - nu2)
    return params, mix, beat_period


def check_interference(seed: int = 0) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed + 4)
        times = np.linspace(0.0, 3.0, 31)
        worst = 0.0
        for _ in range(20):
            params = _seeded_params(rng)
            n_comp = int(rng.integers(2, 5))
            weights = rng.dirichlet(np.ones(n_comp))
            comps = [
                (float(u), OnSiteState.random_even(rng)) for u in weights
            ]
            mix = ProductMixture.from_components(comps)
            result = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
            predicted = interference_prediction(params, mix, times)
            worst = max(worst, float(np.max(np.abs(result.z - predicted))))

        params, mix, period = _beat_example()
        times = np.linspace(0.0, period, 201)
        result = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
        swing = float(result.kappa.max() - result.kappa.min())
        beat_ok = swing > 0.1 and abs(swing - BEAT_PEAK_TO_TROUGH) < 1e-3
        detail = f"beat swing {swing:.4f} (pinned {BEAT_PEAK_TO_TROUGH})"
        return (worst < 1e-6 and beat_ok), worst, 1e-6, detail

    return _timed(body, "mixture-interference")


# --- 5. Finite-volume convergence -------------------------------------------


def convergence_table(
    params: model.ModelParams,
    rho0: OnSiteState,
    t: float,
    site_counts: Sequence[int],
    flow_cfg: FlowConfig = ACCEPTANCE_FLOW,
) -> Dict[int, float]:
    """Max deviation between exact N-site and mean-field expectations at t.

    The observable set is the standard one: total density, magnetization,
    double occupancy, and both pair-field quadratures, all on one site.
    """
    traj = flow_onsite(params, rho0, [t], flow_cfg)
    targets = {
        "d": traj.d[0],
        "m": traj.m[0],
        "w": traj.w[0],
        "z_re": traj.z[0].real,
        "z_im": traj.z[0].imag,
    }
    obs = {
        "d": (fock.N_UP + fock.N_DN, np.real),
        "m": (fock.N_UP - fock.N_DN, np.real),
        "w": (fock.N_UP @ fock.N_DN, np.real),
        "z_re": (fock.PAIR, np.real),
        "z_im": (fock.PAIR, np.imag),
    }
    out: Dict[int, float] = {}
    for n in site_counts:
        initial = dynamics.product_state(n, rho0)
        prop = dynamics.Propagator.from_model(n, params)
        dev = 0.0
        for name, (op, part) in obs.items():
            series = dynamics.evolve_expectation(
                n, params, initial, op, [t], propagator=prop
            )
            dev = max(dev, abs(float(part(series[0])) - targets[name]))
        out[n] = dev
    return out


def check_fv_convergence(seed: int = 0) -> CheckResult:
    def body():
        params = model.ModelParams(mu=0.0, h=0.0, lam=0.0, gamma=2.0)
        rho0 = OnSiteState.pair_superposition(math.pi / 6.0)
        table = convergence_table(params, rho0, 1.0, [2, 3, 4, 5])
        ratio = table[2] / table[5]
        detail = ", ".join(f"N={n}: {v:.4f}" for n, v in sorted(table.items()))
        # violation reported as how far the ratio falls short of 2
        violation = max(0.0, 2.0 - ratio)
        return ratio >= 2.0, violation, 0.0, f"ratio {ratio:.2f} | {detail}"

    return _timed(body, "finite-volume-convergence")


# --- 6. Gap equation ---------------------------------------------------------


def check_gap_equation(seed: int = 0) -> CheckResult:
    def body():
        normal = equilibrium.gap_solve(model.ModelParams(gamma=2.0), beta=1.0)
        strong = equilibrium.gap_solve(model.ModelParams(gamma=8.0), beta=1.0)
        v_normal = abs(normal.r_star)
        v_strong = abs(strong.r_star - GAP_RSTAR_GAMMA8)
        worst_density = 0.0
        checked = 0
        for dml in np.linspace(-0.5, 0.5, 5):
            for gamma in np.linspace(4.0, 12.0, 5):
                params = model.ModelParams(mu=float(dml), gamma=float(gamma))
                res = equilibrium.superconducting_density_check(params, beta=1.0)
                if res.applicable:
                    checked += 1
                    worst_density = max(worst_density, abs(res.lhs - res.rhs))
        passed = v_normal == 0.0 and v_strong < 1e-4 and worst_density < 1e-6
        detail = (
            f"r*(gamma=8) = {strong.r_star:.10f}, density identity on "
            f"{checked}/25 superconducting grid points, worst {worst_density:.2e}"
        )
        return passed, v_strong, 1e-4, detail

    return _timed(body, "gap-equation")


# --- 7. Pressure identity trend ----------------------------------------------


def check_pressure_trend(seed: int = 0) -> CheckResult:
    def body():
        params = model.ModelParams(gamma=8.0)
        rows = equilibrium.variational_vs_finite_pressure(params, beta=1.0, n_max=5)
        gaps = {r.n_sites: r.gap for r in rows}
        detail = "; ".join(
            f"N={r.n_sites}: p={r.pressure:.6f} gap={r.gap:.4f}" for r in rows
        )
        passed = gaps[5] < gaps[1]
        return passed, gaps[5], gaps[1], detail

    return _timed(body, "pressure-identity-trend")


# --- 8. Liouville residuals ---------------------------------------------------


def check_liouville(seed: int = 0) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed + 8)
        suite = classical.polynomial_suite()
        worst = 0.0
        for _ in range(20):
            params = _seeded_params(rng)
            rho0 = OnSiteState.random_even(rng)
            for t in (0.0, 0.5, 1.0):
                results = classical.liouville_residuals(params, suite, rho0, t)
                worst = max(worst, max(r.residual for r in results.values()))
        detail = "6 observables x 20 states x 3 times, fd_step 1e-4 + Richardson"
        return worst < 1e-5, worst, 1e-5, detail

    return _timed(body, "liouville-residuals")


# --- 9. Poisson algebra --------------------------------------------------------


def _random_polynomial(
    rng: np.random.Generator, ops: Tuple[np.ndarray, ...]
) -> classical.PolynomialFunction:
    monos = []
    for _ in range(int(rng.integers(1, 4))):
        degree = int(rng.integers(0, 4))
        idx = tuple(int(i) for i in rng.integers(0, len(ops), size=degree))
        monos.append((complex(rng.normal()), idx))
    return classical.PolynomialFunction(ops, tuple(monos))


def check_poisson_algebra(seed: int = 0) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed + 9)
        ops = (
            classical.PAIR_X,
            classical.PAIR_Y,
            (fock.N_UP + fock.N_DN).astype(complex),
            (fock.N_UP @ fock.N_DN).astype(complex),
        )
        worst_anti = 0.0
        worst_leibniz = 0.0
        worst_jacobi = 0.0
        for _ in range(100):
            rho = OnSiteState.random_even(rng)
            f, g, h = (_random_polynomial(rng, ops) for _ in range(3))
            worst_anti = max(
                worst_anti,
                abs(
                    classical.poisson_bracket(f, g, rho)
                    + classical.poisson_bracket(g, f, rho)
                ),
            )
            lhs = classical.poisson_bracket(f, g * h, rho)
            rhs = classical.poisson_bracket(f, g, rho) * h(rho) + g(
                rho
            ) * classical.poisson_bracket(f, h, rho)
            worst_leibniz = max(worst_leibniz, abs(lhs - rhs))
            worst_jacobi = max(worst_jacobi, abs(_jacobi_sum(f, g, h, rho)))
        passed = worst_anti == 0.0 and worst_leibniz < 1e-10 and worst_jacobi < 1e-9
        detail = (
            f"antisym {worst_anti:.1e}, leibniz {worst_leibniz:.2e}, "
            f"jacobi {worst_jacobi:.2e}"
        )
        return passed, max(worst_leibniz, worst_jacobi), 1e-9, detail

    return _timed(body, "poisson-algebra")


def _jacobi_sum(
    f: classical.PolynomialFunction,
    g: classical.PolynomialFunction,
    h: classical.PolynomialFunction,
    rho: OnSiteState,
) -> complex:
    """Cyclic Jacobi sum with the outer brackets applied to bracket functions.

    The inner bracket {g, h} is itself a function on states; its convex
    derivative is formed by exact differentiation of the bracket expression
    through the product rule on polynomials, here realized by evaluating the
    bracket as a cylindrical function of the underlying expectations.
    """
    total = 0.0 + 0.0j
    for a, b, c in ((f, g, h), (g, h, f), (h, f, g)):
        inner = _bracket_as_function(b, c)
        total += classical.poisson_bracket(a, inner, rho)
    return total


def _bracket_as_function(
    f: classical.PolynomialFunction, g: classical.PolynomialFunction
) -> classical.PolynomialFunction:
    """{f, g} as a polynomial over the union operator list.

    For polynomials the bracket is again a polynomial: expanding
    rho(i[Df, Dg]) in monomials of the expectations rho(A_j) and of the new
    operators i[A_j, A_k] (the centered identity parts drop out of the
    commutator).
    """
    ops_f, ops_g = f.operators, g.operators
    n_f, n_g = len(ops_f), len(ops_g)
    ops = list(ops_f) + list(ops_g)
    comm_index: Dict[Tuple[int, int], int] = {}
    for j in range(n_f):
        for k in range(n_g):
            comm = 1j * (ops_f[j] @ ops_g[k] - ops_g[k] @ ops_f[j])
            ops.append(comm)
            comm_index[(j, k)] = len(ops) - 1
    monos: List[Tuple[complex, Tuple[int, ...]]] = []
    for cf, idx_f in f.monomials:
        for pos_f in range(len(idx_f)):
            rest_f = idx_f[:pos_f] + idx_f[pos_f + 1 :]
            for cg, idx_g in g.monomials:
                for pos_g in range(len(idx_g)):
                    rest_g = tuple(n_f + i for i in idx_g[:pos_g] + idx_g[pos_g + 1 :])
                    comm_i = comm_index[(idx_f[pos_f], idx_g[pos_g])]
                    monos.append((cf * cg, rest_f + rest_g + (comm_i,)))
    if not monos:
        monos.append((0.0 + 0.0j, ()))
    return classical.PolynomialFunction(tuple(ops), tuple(monos))


# --- 11. Equilibrium stationarity ---------------------------------------------


def check_equilibrium_stationarity(seed: int = 0) -> CheckResult:
    def body():
        params = model.ModelParams(gamma=8.0)
        times = np.linspace(0.0, 10.0, 21)
        drifts = {}
        for n_phases in (8, 16):
            mix = equilibrium.equilibrium_mixture(params, beta=1.0, n_phases=n_phases)
            result = mixture_flow(params, mix, times, ACCEPTANCE_FLOW)
            drift = 0.0
            for arr in (result.d, result.m, result.w):
                drift = max(drift, float(np.max(np.abs(arr - arr[0]))))
            drift = max(drift, float(np.max(np.abs(result.z - result.z[0]))))
            for traj in result.components:
                drift = max(drift, float(np.max(np.abs(traj.kappa - traj.kappa[0]))))
            drifts[n_phases] = drift
        refinement = abs(drifts[8] - drifts[16])
        passed = drifts[8] < 1e-8 and refinement < 1e-8
        detail = f"drift(8 phases) {drifts[8]:.2e}, refinement change {refinement:.2e}"
        return passed, drifts[8], 1e-8, detail

    return _timed(body, "equilibrium-stationarity")


# --- 12. Dyson series cross-check ----------------------------------------------


def check_dyson(seed: int = 0) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed + 12)
        t = 0.1
        worst = 0.0
        for _ in range(10):
            params = _seeded_params(rng)
            rho0 = OnSiteState.random_even(rng)
            traj = flow_onsite(params, rho0, [0.0, t], ACCEPTANCE_FLOW)
            drive = traj.state_matrix
            t_prop = heisenberg_propagator_ode(params, drive, t)
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            a = a + a.conj().T
            series = dyson_phillips(params, drive, t, order=8, a_op=a)
            reference = (t_prop @ a.ravel()).reshape(4, 4)
            worst = max(worst, float(np.max(np.abs(series.operator - reference))))
        return worst < 1e-8, worst, 1e-8, "order 8, t = 0.1, 10 seeded drives"

    return _timed(body, "dyson-series")


# --- 13. Energy bound ------------------------------------------------------------


def check_energy_bound(seed: int = 0) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed + 13)
        norm_params = model.NormParams()
        worst_margin = -np.inf
        for _ in range(10):
            params = _seeded_params(rng, gamma_max=3.0)
            for n in range(1, 5):
                res = model.energy_bound_check(n, params, norm_params)
                if not res.passed:
                    return False, res.lhs - res.rhs, 0.0, f"failed at N={n}, {params}"
                worst_margin = max(worst_margin, res.lhs - res.rhs)
        detail = f"largest lhs - rhs = {worst_margin:.3f} (negative means slack)"
        return True, max(0.0, worst_margin), 0.0, detail

    return _timed(body, "energy-bound")


ALL_CHECKS: Tuple[Tuple[str, Callable[[int], CheckResult]], ...] = (
    ("car-exactness", check_car_exactness),
    ("density-conservation", check_conserved_densities),
    ("cooper-field-rotation", check_cooper_field_law),
    ("mixture-interference", check_interference),
    ("finite-volume-convergence", check_fv_convergence),
    ("gap-equation", check_gap_equation),
    ("pressure-identity-trend", check_pressure_trend),
    ("liouville-residuals", check_liouville),
    ("poisson-algebra", check_poisson_algebra),
    ("rotor-commuting-diagram", check_rotor_diagram),
    ("equilibrium-stationarity", check_equilibrium_stationarity),
    ("dyson-series", check_dyson),
    ("energy-bound", check_energy_bound),
)


def run_all(seed: int = 0) -> List[CheckResult]:
    return [fn(seed) for _name, fn in ALL_CHECKS]
