"""Self-consistent mean-field flow of on-site states.

The infinite-volume time evolution of a product state is carried entirely
by one 4x4 density matrix D_t solving the nonlinear von Neumann equation

    dD_t/dt = -i [dh(rho_t), D_t],     rho_t(A) = Trace(D_t A),

where dh is the state-dependent one-site generator
(:func:`mfbcs.model.effective_hamiltonian`).  The generator is evaluated on
the solution itself, which is the self-consistency at the heart of the
mean-field limit.

For mixtures of product states the components evolve independently and
expectations combine linearly; the Cooper field of the mixture is then a
sum of rotating phasors, which produces beats in the condensate density
(see :func:`interference_prediction`).

:func:`dyson_phillips` evaluates the time-ordered (Heisenberg picture)
series for a prescribed drive by nested quadrature; it is the independent
cross-check pinning the sign convention of the flow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import fock, model
from .errors import NumericalAbortError, TruncationError
from .states import OnSiteState, ProductMixture

logger = logging.getLogger(__name__)

_N_TOTAL = fock.N_UP + fock.N_DN
_M_OP = fock.N_UP - fock.N_DN
_W_OP = fock.N_UP @ fock.N_DN


@dataclass(frozen=True)
class SiteObservables:
    """The physical densities of one on-site state.

    d     : electron density rho(n_up + n_dn), in [0, 2]
    m     : magnetization density rho(n_up - n_dn), in [-1, 1]
    w     : double-occupancy (Coulomb correlation) density rho(n_up n_dn)
    z     : Cooper-field density rho(a_dn a_up)
    kappa : condensate density |z|**2
    theta : phase of z in [-pi, pi), zero when the field vanishes
    nu    : precession frequency 2(mu - lam) + gamma (1 - d)
    """

    d: float
    m: float
    w: float
    z: complex
    kappa: float
    theta: float
    nu: float


def _phase(z: complex) -> float:
    if z == 0:
        return 0.0
    theta = float(np.angle(z))
    return -math.pi if theta == math.pi else theta


def observables(params: model.ModelParams, rho: OnSiteState) -> SiteObservables:
    """Evaluate the observable record of Prop-style densities at one state."""
    dmat = rho.matrix
    d = float(np.trace(dmat @ _N_TOTAL).real)
    m = float(np.trace(dmat @ _M_OP).real)
    w = float(np.trace(dmat @ _W_OP).real)
    z = complex(np.trace(dmat @ fock.PAIR))
    return SiteObservables(
        d=d,
        m=m,
        w=w,
        z=z,
        kappa=abs(z) ** 2,
        theta=_phase(z),
        nu=2.0 * (params.mu - params.lam) + params.gamma * (1.0 - d),
    )


@dataclass(frozen=True)
class FlowConfig:
    """Integrator settings.

    method "rk4" is a classical fixed-step scheme with step ``step_size``;
    "adaptive" uses a high-order embedded scheme at (rtol, atol) and also
    provides a dense interpolant, which the Dyson and self-consistency
    checks rely on.
    """

    step_size: float = 1e-3
    method: str = "rk4"
    rtol: float = 1e-9
    atol: float = 1e-12
    rehermitize: bool = True
    positivity_tolerance: float = 1e-8

    def __post_init__(self) -> None:
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.positivity_tolerance <= 0:
            raise ValueError("positivity_tolerance must be > 0")


#: Settings used by the acceptance suite: tight adaptive integration.
ACCEPTANCE_FLOW = FlowConfig(method="adaptive", rtol=1e-11, atol=1e-13)

_RANGE_SLACK = 1e-8


@dataclass(frozen=True)
class Trajectory:
    """Time series of on-site states and their observable records."""

    times: np.ndarray = field(repr=False)
    states: Tuple[OnSiteState, ...] = field(repr=False)
    d: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)
    method: str = "rk4"
    interpolant: Optional[Callable[[float], np.ndarray]] = field(
        default=None, repr=False, compare=False
    )

    @classmethod
    def from_states(
        cls,
        params: model.ModelParams,
        times: np.ndarray,
        states: Sequence[OnSiteState],
        method: str,
        interpolant: Optional[Callable[[float], np.ndarray]] = None,
    ) -> "Trajectory":
        recs = [observables(params, s) for s in states]
        traj = cls(
            times=np.asarray(times, dtype=float),
            states=tuple(states),
            d=np.array([r.d for r in recs]),
            m=np.array([r.m for r in recs]),
            w=np.array([r.w for r in recs]),
            z=np.array([r.z for r in recs], dtype=complex),
            kappa=np.array([r.kappa for r in recs]),
            theta=np.array([r.theta for r in recs]),
            nu=np.array([r.nu for r in recs]),
            method=method,
            interpolant=interpolant,
        )
        traj._check_ranges()
        return traj

    def _check_ranges(self) -> None:
        checks = [
            ("d", self.d, 0.0, 2.0),
            ("m", self.m, -1.0, 1.0),
            ("w", self.w, 0.0, 1.0),
            ("kappa", self.kappa, 0.0, 1.0),
        ]
        for name, arr, lo, hi in checks:
            if arr.size and (arr.min() < lo - _RANGE_SLACK or arr.max() > hi + _RANGE_SLACK):
                raise NumericalAbortError(
                    f"trajectory leaves the physical range of {name}: "
                    f"[{arr.min():.3e}, {arr.max():.3e}] not within [{lo}, {hi}]"
                )

    def state_matrix(self, t: float) -> np.ndarray:
        """Interpolated density matrix at an arbitrary time."""
        if self.interpolant is None:
            raise ValueError("this trajectory carries no interpolant")
        return self.interpolant(t)

    def __len__(self) -> int:
        return len(self.times)


def _rhs_matrix(params: model.ModelParams, dmat: np.ndarray) -> np.ndarray:
    dh = model.effective_hamiltonian(params, dmat)
    return -1j * (dh @ dmat - dmat @ dh)


def _rhs_flat(params: model.ModelParams) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        dmat = y.view(complex).reshape(4, 4)
        return _rhs_matrix(params, dmat).ravel().view(float)

    return rhs


def _sanitize(
    dmat: np.ndarray, cfg: FlowConfig, context: str = "flow"
) -> OnSiteState:
    if cfg.rehermitize:
        dmat = 0.5 * (dmat + dmat.conj().T)
    eigs, vecs = np.linalg.eigh(dmat)
    if eigs.min() < -cfg.positivity_tolerance:
        raise NumericalAbortError(
            f"{context}: positivity violated by {-eigs.min():.3e} "
            f"(> {cfg.positivity_tolerance:.1e}); the step size is too large "
            "for this trajectory"
        )
    if eigs.min() < 0:
        eigs = np.clip(eigs, 0.0, None)
        dmat = (vecs * eigs) @ vecs.conj().T
    tr = np.trace(dmat).real
    if abs(tr - 1.0) > 1e-12:
        logger.info("%s: renormalizing trace drift %.3e", context, tr - 1.0)
        dmat = dmat / tr
    return OnSiteState.from_matrix(dmat)


def _integrate_branch_rk4(
    params: model.ModelParams, d0: np.ndarray, branch_times: np.ndarray, dt: float
) -> List[np.ndarray]:
    """Fixed-step RK4 from t=0 through the (monotone) branch times."""
    out: List[np.ndarray] = []
    dmat = d0.copy()
    t_now = 0.0
    for t_target in branch_times:
        span = t_target - t_now
        if span != 0.0:
            n_steps = max(1, int(math.ceil(abs(span) / dt)))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = _rhs_matrix(params, dmat)
                k2 = _rhs_matrix(params, dmat + 0.5 * h * k1)
                k3 = _rhs_matrix(params, dmat + 0.5 * h * k2)
                k4 = _rhs_matrix(params, dmat + h * k3)
                dmat = dmat + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t_now = t_target
        out.append(dmat.copy())
    return out


def flow_onsite(
    params: model.ModelParams,
    rho0: OnSiteState,
    times: Sequence[float],
    cfg: Optional[FlowConfig] = None,
) -> Trajectory:
    """Integrate the self-consistent flow from rho0, sampling at ``times``.

    The initial state must be even (the product construction requires it);
    evenness is then preserved along the flow.  The trajectory starts at
    t = 0; negative sample times integrate the flow backwards.
    """
    cfg = cfg or FlowConfig()
    rho0.require_even()
    times = np.asarray(times, dtype=float)
    d0 = rho0.matrix.astype(complex)

    order = np.argsort(times, kind="stable")
    sorted_times = times[order]
    neg = sorted_times[sorted_times < 0.0][::-1]  # descending from 0
    pos = sorted_times[sorted_times >= 0.0]

    matrices: dict = {}
    interpolants: List[Tuple[float, float, Callable[[float], np.ndarray]]] = []

    def run_branch(branch: np.ndarray) -> None:
        if branch.size == 0:
            return
        if cfg.method == "rk4":
            mats = _integrate_branch_rk4(params, d0, branch, cfg.step_size)
            for t, mat in zip(branch, mats):
                matrices[float(t)] = mat
            anchor_ts = np.concatenate(([0.0], branch))
            anchor_ys = [d0] + mats
            if len(anchor_ts) >= 2:
                ts = anchor_ts[:: 1 if branch[-1] >= 0 else -1]
                ys = anchor_ys[:: 1 if branch[-1] >= 0 else -1]
                flat = np.array([y.ravel().view(float) for y in ys])
                dflat = np.array(
                    [_rhs_matrix(params, y).ravel().view(float) for y in ys]
                )
                spline = CubicHermiteSpline(ts, flat, dflat, axis=0)
                lo, hi = min(ts[0], ts[-1]), max(ts[0], ts[-1])
                interpolants.append(
                    (lo, hi, lambda s, sp=spline: sp(s).view(complex).reshape(4, 4))
                )
        else:
            t_end = float(branch[-1])
            sol = solve_ivp(
                _rhs_flat(params),
                (0.0, t_end),
                d0.ravel().view(float).copy(),
                method="DOP853",
                rtol=cfg.rtol,
                atol=cfg.atol,
                t_eval=branch,
                dense_output=True,
            )
            if not sol.success:
                raise NumericalAbortError(f"adaptive flow failed: {sol.message}")
            for t, col in zip(branch, sol.y.T):
                matrices[float(t)] = np.ascontiguousarray(col).view(complex).reshape(4, 4)
            lo, hi = min(0.0, t_end), max(0.0, t_end)
            interpolants.append(
                (
                    lo,
                    hi,
                    lambda s, so=sol.sol: np.ascontiguousarray(so(s))
                    .view(complex)
                    .reshape(4, 4),
                )
            )

    if np.any(sorted_times == 0.0):
        matrices[0.0] = d0.copy()
    run_branch(neg)
    run_branch(pos[pos > 0.0])

    states = [
        _sanitize(matrices[float(t)], cfg, context=f"flow at t={t:g}") for t in times
    ]

    interp: Optional[Callable[[float], np.ndarray]] = None
    if interpolants:
        spans = sorted(interpolants, key=lambda span: span[0])

        def interp(s: float) -> np.ndarray:
            if s == 0.0:
                return d0.copy()
            for lo, hi, fn in spans:
                if lo <= s <= hi:
                    return fn(s)
            raise ValueError(f"time {s} outside the integrated range")

    return Trajectory.from_states(params, times, states, cfg.method, interp)


def self_consistency_residual(
    params: model.ModelParams,
    traj: Trajectory,
    cfg: Optional[FlowConfig] = None,
) -> float:
    """Fixed-point residual of a solved trajectory.

    Freezes the drive to the solved path, re-integrates the now linear
    equation dD/dt = -i[dh(path(t)), D], and returns the max-norm deviation
    from the original states.  For a true solution this is bounded by twice
    the integrator tolerance.
    """
    cfg = cfg or FlowConfig(method="adaptive")
    if traj.interpolant is None:
        raise ValueError("self-consistency check needs a trajectory interpolant")

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        dmat = y.view(complex).reshape(4, 4)
        dh = model.effective_hamiltonian(params, traj.interpolant(t))
        return (-1j * (dh @ dmat - dmat @ dh)).ravel().view(float)

    d0 = np.asarray(traj.interpolant(0.0), dtype=complex)
    worst = 0.0
    for sign in (1.0, -1.0):
        branch = traj.times[traj.times * sign > 0.0]
        if branch.size == 0:
            continue
        branch = np.sort(branch) if sign > 0 else np.sort(branch)[::-1]
        sol = solve_ivp(
            rhs,
            (0.0, float(branch[-1])),
            d0.ravel().view(float).copy(),
            method="DOP853",
            rtol=cfg.rtol,
            atol=cfg.atol,
            t_eval=branch,
        )
        if not sol.success:
            raise NumericalAbortError(f"residual integration failed: {sol.message}")
        for t, col in zip(branch, sol.y.T):
            redone = np.ascontiguousarray(col).view(complex).reshape(4, 4)
            idx = int(np.argmin(np.abs(traj.times - t)))
            worst = max(worst, float(np.max(np.abs(redone - traj.states[idx].matrix))))
    return worst


@dataclass(frozen=True)
class MixtureTrajectory:
    """Independent component flows combined with fixed convex weights."""

    times: np.ndarray = field(repr=False)
    weights: Tuple[float, ...]
    components: Tuple[Trajectory, ...] = field(repr=False)
    d: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)

    def expectation_series(self, op: np.ndarray) -> np.ndarray:
        """Mixture expectation of a one-site operator along the flow."""
        out = np.zeros(len(self.times), dtype=complex)
        for u, traj in zip(self.weights, self.components):
            out += u * np.array(
                [np.trace(s.matrix @ op) for s in traj.states], dtype=complex
            )
        return out

    def density_matrix(self, index: int) -> np.ndarray:
        return sum(
            u * traj.states[index].matrix
            for u, traj in zip(self.weights, self.components)
        )


def mixture_flow(
    params: model.ModelParams,
    mix: ProductMixture,
    times: Sequence[float],
    cfg: Optional[FlowConfig] = None,
) -> MixtureTrajectory:
    """Evolve every mixture component independently and combine linearly.

    The linear expectations (d, m, w, z) are weighted sums of the component
    records, computed by the same code path as the components themselves;
    kappa and theta are derived from the mixture field z, so kappa is no
    longer constant in general (interference between components).
    """
    times = np.asarray(times, dtype=float)
    trajs = tuple(flow_onsite(params, s, times, cfg) for s in mix.states)
    u = np.asarray(mix.weights)
    d = sum(ui * t.d for ui, t in zip(u, trajs))
    m = sum(ui * t.m for ui, t in zip(u, trajs))
    w = sum(ui * t.w for ui, t in zip(u, trajs))
    z = sum(ui * t.z for ui, t in zip(u, trajs))
    theta = np.array([_phase(zi) for zi in z])
    nu = 2.0 * (params.mu - params.lam) + params.gamma * (1.0 - d)
    return MixtureTrajectory(
        times=times,
        weights=mix.weights,
        components=trajs,
        d=d,
        m=m,
        w=w,
        z=np.asarray(z, dtype=complex),
        kappa=np.abs(z) ** 2,
        theta=theta,
        nu=nu,
    )


def interference_prediction(
    params: model.ModelParams,
    mix: ProductMixture,
    t: Union[float, np.ndarray],
) -> Union[complex, np.ndarray]:
    """Closed-form mixture Cooper field sum_j u_j sqrt(kappa_j) e^{i(t nu_j + theta_j)}.

    Each component's field rotates rigidly at its own frequency nu_j, so the
    mixture field is a sum of phasors; mixture_flow must reproduce it within
    integrator tolerance.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for u, state in mix.components():
        rec = observables(params, state)
        out += u * math.sqrt(rec.kappa) * np.exp(1j * (t * rec.nu + rec.theta))
    return complex(out[()]) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Dyson series cross-check (Heisenberg picture)
# ---------------------------------------------------------------------------

DriveFn = Callable[[float], Union[OnSiteState, np.ndarray]]


@dataclass(frozen=True)
class DysonResult:
    operator: np.ndarray
    remainder_bound: float
    quadrature_error: float


def _generator_superop(params: model.ModelParams, state: Union[OnSiteState, np.ndarray]) -> np.ndarray:
    """Superoperator of B -> i [dh(rho), B] in row-major vec convention."""
    dh = model.effective_hamiltonian(params, state)
    eye = np.eye(4, dtype=complex)
    return 1j * (np.kron(dh, eye) - np.kron(eye, dh.T))


def _cumulative_simpson_complex(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    re = cumulative_simpson(y.real, x=x, axis=0, initial=0.0)
    im = cumulative_simpson(y.imag, x=x, axis=0, initial=0.0)
    return re + 1j * im


def _dyson_superop(
    params: model.ModelParams, drive: DriveFn, t: float, order: int, n_nodes: int
) -> Tuple[np.ndarray, float]:
    grid = np.linspace(0.0, t, n_nodes + 1)
    deltas = np.array([_generator_superop(params, drive(float(s))) for s in grid])
    total = np.eye(16, dtype=complex)
    # S_k(u) = int_0^u S_{k-1}(v) Delta(v) dv, accumulated on the grid
    s_prev = np.broadcast_to(np.eye(16, dtype=complex), deltas.shape).copy()
    gen_norms = np.array([np.linalg.norm(d, ord=2) for d in deltas])
    for _ in range(order):
        integrand = np.einsum("tij,tjk->tik", s_prev, deltas)
        s_prev = _cumulative_simpson_complex(integrand, grid)
        total = total + s_prev[-1]
    return total, float(gen_norms.max(initial=0.0))


def dyson_phillips(
    params: model.ModelParams,
    drive: DriveFn,
    t: float,
    order: int,
    a_op: np.ndarray,
    tol: Optional[float] = None,
    n_nodes: int = 512,
) -> DysonResult:
    """Truncated time-ordered series for the driven Heisenberg evolution of a_op.

    ``drive`` maps a time to the on-site state entering the generator; the
    series is evaluated by nested (cumulative Simpson) quadrature at
    ``n_nodes`` intervals, with one refinement step to estimate the
    quadrature error.  The certified truncation remainder is
    (M |t|)**(order+1) / (order+1)! with M the largest generator norm seen;
    if ``tol`` is given and the remainder exceeds it, a TruncationError is
    raised rather than silently returning a bad approximation.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    a_op = np.asarray(a_op, dtype=complex)
    if a_op.shape != (4, 4):
        raise ValueError("dyson_phillips acts on one-site (4x4) operators")
    if t == 0.0:
        return DysonResult(operator=a_op.copy(), remainder_bound=0.0, quadrature_error=0.0)
    coarse, m_norm = _dyson_superop(params, drive, t, order, n_nodes)
    fine, _ = _dyson_superop(params, drive, t, order, 2 * n_nodes)
    quad_err = float(np.max(np.abs(fine - coarse)))
    remainder = (m_norm * abs(t)) ** (order + 1) / math.factorial(order + 1)
    if tol is not None and remainder > tol:
        raise TruncationError(
            f"series remainder bound {remainder:.3e} exceeds tolerance {tol:.1e}; "
            "shorten t or raise the order"
        )
    out = (fine @ a_op.ravel()).reshape(4, 4)
    return DysonResult(operator=out, remainder_bound=remainder, quadrature_error=quad_err)


def heisenberg_propagator_ode(
    params: model.ModelParams,
    drive: DriveFn,
    t: float,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> np.ndarray:
    """Independent ODE route to the same driven Heisenberg superoperator.

    Solves dT/dt = T Delta(t), T(0) = 1, and returns T(t) as a 16x16 matrix;
    used to validate the truncated series.
    """

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        mat = y.view(complex).reshape(16, 16)
        return (mat @ _generator_superop(params, drive(float(s)))).ravel().view(float)

    y0 = np.eye(16, dtype=complex).ravel().view(float).copy()
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalAbortError(f"propagator integration failed: {sol.message}")
    return sol.y[:, -1].view(complex).reshape(16, 16)
