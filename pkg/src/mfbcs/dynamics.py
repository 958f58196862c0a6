"""Exact finite-volume dynamics, Gibbs states, pressures, condensate density.

Everything here is the desk-scale benchmark side: dense spectral evolution
up to 5 sites (dimension 1024) and a sparse Krylov backend for pure states
at 6 sites.  Observables at time t are computed in the Schroedinger picture
(the state is evolved, not the observable); equivalence with the Heisenberg
picture is asserted in the test suite at small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import logsumexp

from . import fock, model
from .errors import CapacityError
from .states import OnSiteState, ProductMixture

RECONSTRUCTION_TOL = 1e-10
STATE_TOL = 1e-10


@dataclass(frozen=True)
class GibbsSpec:
    """Inverse temperature for thermal states."""

    beta: float

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class Propagator:
    """Spectral data of a Hermitian matrix, computed once and shared."""

    hamiltonian: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, h: np.ndarray) -> "Propagator":
        h = np.asarray(h, dtype=complex)
        w, u = np.linalg.eigh(h)
        scale = max(1.0, float(np.max(np.abs(w))))
        recon = np.max(np.abs(h - (u * w) @ u.conj().T))
        if recon > RECONSTRUCTION_TOL * scale:
            raise ArithmeticError(
                f"eigendecomposition reconstruction error {recon:.2e} too large"
            )
        return cls(hamiltonian=h, eigenvalues=w, eigenvectors=u)

    @classmethod
    def from_model(cls, n_sites: int, params: model.ModelParams) -> "Propagator":
        return cls.from_matrix(model.hamiltonian(n_sites, params))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def evolve_vector(self, psi: np.ndarray, t: float) -> np.ndarray:
        """e^{-i t H} psi."""
        u, w = self.eigenvectors, self.eigenvalues
        return u @ (np.exp(-1j * t * w) * (u.conj().T @ psi))

    def evolve_density(self, dmat: np.ndarray, t: float) -> np.ndarray:
        """e^{-i t H} D e^{+i t H} (Schroedinger picture)."""
        u, w = self.eigenvectors, self.eigenvalues
        phases = np.exp(-1j * t * w)
        core = u.conj().T @ dmat @ u
        return u @ (phases[:, None] * core * phases.conj()[None, :]) @ u.conj().T

    def heisenberg(self, op: np.ndarray, t: float) -> np.ndarray:
        """e^{+i t H} A e^{-i t H}."""
        return self.evolve_density(op, -t)

    def gibbs_density(self, beta: float) -> np.ndarray:
        """exp(-beta H)/Z with a spectral shift guarding against overflow."""
        u, w = self.eigenvectors, self.eigenvalues
        weights = np.exp(-beta * (w - w.min()))
        weights /= weights.sum()
        return (u * weights) @ u.conj().T


@dataclass(frozen=True)
class GlobalState:
    """A state of the N-site system: pure vector or density matrix."""

    n_sites: int
    kind: str  # "pure" | "mixed"
    data: np.ndarray = field(repr=False)
    origin: str = "custom"

    def __post_init__(self) -> None:
        dim = 4**self.n_sites
        arr = np.asarray(self.data, dtype=complex)
        if self.kind == "pure":
            if arr.shape != (dim,):
                raise ValueError(f"pure state must have shape ({dim},)")
            if abs(np.linalg.norm(arr) - 1.0) > STATE_TOL:
                raise ValueError("pure state vector is not normalized")
        elif self.kind == "mixed":
            if arr.shape != (dim, dim):
                raise ValueError(f"density matrix must have shape ({dim},{dim})")
            if np.max(np.abs(arr - arr.conj().T)) > STATE_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(arr).real - 1.0) > STATE_TOL:
                raise ValueError("density matrix trace is not 1")
            if np.linalg.eigvalsh(arr).min() < -STATE_TOL:
                raise ValueError("density matrix is not positive")
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def density(self) -> np.ndarray:
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return np.asarray(self.data)

    def expectation(self, op: Union[np.ndarray, sp.spmatrix]) -> complex:
        if self.kind == "pure":
            return complex(np.vdot(self.data, (op @ self.data)))
        if sp.issparse(op):
            return complex((op @ self.data).trace())
        return complex(np.trace(op @ self.data))


def product_state(
    n_sites: int, rho: Union[OnSiteState, ProductMixture]
) -> GlobalState:
    """Product state (or mixture of product states) over n_sites sites.

    The on-site factor must be even; the product of an even one-site state
    is then well defined and its expectations factorize over distinct sites.
    """
    fock.check_site_count(n_sites, dense=True)
    if isinstance(rho, OnSiteState):
        rho.require_even()
        components = [(1.0, rho)]
        origin = "product"
    else:
        components = rho.components()
        origin = "product-mixture"
    dim = 4**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for weight, state in components:
        block = np.array([[1.0 + 0j]])
        for _ in range(n_sites):
            block = np.kron(block, state.matrix)
        out += weight * block
    return GlobalState(n_sites=n_sites, kind="mixed", data=out, origin=origin)


def pure_product_state(n_sites: int, vector: Sequence[complex]) -> GlobalState:
    """Pure product state from a one-site vector supported on one parity sector."""
    fock.check_site_count(n_sites, dense=False)
    v = np.asarray(vector, dtype=complex).reshape(4)
    v = v / np.linalg.norm(v)
    even_weight = abs(v[0]) ** 2 + abs(v[3]) ** 2
    if min(even_weight, 1.0 - even_weight) > STATE_TOL:
        raise ValueError(
            "one-site vector must lie in a single parity sector to define "
            "an even product state"
        )
    psi = np.array([1.0 + 0j])
    for _ in range(n_sites):
        psi = np.kron(psi, v)
    return GlobalState(n_sites=n_sites, kind="pure", data=psi, origin="product")


def propagation_backend(n_sites: int, kind: str) -> str:
    """Name the backend evolve_expectation would pick for this problem."""
    if n_sites <= fock.DENSE_SITE_LIMIT:
        return "spectral"
    if n_sites <= fock.MAX_SITE_LIMIT and kind == "pure":
        return "krylov"
    raise CapacityError(
        f"n_sites={n_sites} with a {kind} state is beyond both the dense and "
        "the pure-state Krylov backends"
    )


def _lift_observable(
    n_sites: int, a_op: Union[np.ndarray, sp.spmatrix]
) -> Union[np.ndarray, sp.spmatrix]:
    if not sp.issparse(a_op):
        a_op = np.asarray(a_op, dtype=complex)
        if a_op.shape == (4, 4) and n_sites > 1:
            # interpreted at site 0, the leftmost factor (no parity string)
            return fock.embed_local(n_sites, 0, a_op)
    dim = 4**n_sites
    if a_op.shape != (dim, dim):
        raise ValueError(f"observable shape {a_op.shape} does not match dim {dim}")
    return a_op


def evolve_expectation(
    n_sites: int,
    params: model.ModelParams,
    initial: GlobalState,
    a_op: Union[np.ndarray, sp.spmatrix],
    times: Sequence[float],
    backend: str = "auto",
    propagator: Optional[Propagator] = None,
) -> np.ndarray:
    """Expectation series Trace(e^{itH} A e^{-itH} D) over the time grid.

    ``a_op`` may be a full 4**N matrix or a 4x4 one-site matrix (placed at
    site 0).  Backend "spectral" diagonalizes once; "krylov" steps a pure
    state with sparse exponentials and is the only route at 6 sites.
    """
    if initial.n_sites != n_sites:
        raise ValueError("initial state has the wrong site count")
    times = np.asarray(times, dtype=float)
    a_full = _lift_observable(n_sites, a_op)
    if backend == "auto":
        backend = propagation_backend(n_sites, initial.kind)
    if backend == "spectral":
        fock.check_site_count(n_sites, dense=True)
        prop = propagator or Propagator.from_model(n_sites, params)
        out = np.empty(len(times), dtype=complex)
        if initial.kind == "pure":
            for i, t in enumerate(times):
                psi = prop.evolve_vector(initial.data, t)
                out[i] = complex(np.vdot(psi, a_full @ psi))
        else:
            for i, t in enumerate(times):
                dmat = prop.evolve_density(initial.density(), t)
                if sp.issparse(a_full):
                    out[i] = complex((a_full @ dmat).trace())
                else:
                    out[i] = complex(np.trace(a_full @ dmat))
        return out
    if backend == "krylov":
        if initial.kind != "pure":
            raise CapacityError("the Krylov backend applies to pure states only")
        h = model.hamiltonian_sparse(n_sites, params)
        order = np.argsort(times, kind="stable")
        out = np.empty(len(times), dtype=complex)
        psi = initial.data.copy()
        t_now = 0.0
        for idx in order:
            dt = float(times[idx]) - t_now
            if dt != 0.0:
                psi = spla.expm_multiply((-1j * dt) * h, psi)
                t_now = float(times[idx])
            out[idx] = complex(np.vdot(psi, a_full @ psi))
        return out
    raise ValueError(f"unknown backend {backend!r}")


def gibbs_state(
    n_sites: int,
    params: model.ModelParams,
    spec: GibbsSpec,
    c: Optional[complex] = None,
) -> GlobalState:
    """Thermal state of H_N (or of the pair-field-decoupled H_N(c) if c given)."""
    fock.check_site_count(n_sites, dense=True)
    if c is None:
        h = model.hamiltonian(n_sites, params)
        origin = "gibbs"
    else:
        h = model.approximating_hamiltonian(n_sites, params, c)
        origin = "gibbs-approx"
    prop = Propagator.from_matrix(h)
    return GlobalState(
        n_sites=n_sites, kind="mixed", data=prop.gibbs_density(spec.beta), origin=origin
    )


def pressure_fv(
    n_sites: int,
    params: model.ModelParams,
    spec: GibbsSpec,
    c: Optional[complex] = None,
) -> float:
    """Finite-volume pressure (beta N)^{-1} ln Trace e^{-beta H}."""
    fock.check_site_count(n_sites, dense=True)
    if c is None:
        h = model.hamiltonian(n_sites, params)
    else:
        h = model.approximating_hamiltonian(n_sites, params, c)
    w = np.linalg.eigvalsh(h)
    return float(logsumexp(-spec.beta * w) / (spec.beta * n_sites))


def condensate_density_fv(
    n_sites: int, params: model.ModelParams, spec: GibbsSpec
) -> float:
    """Thermal condensate density of Cooper pairs, omega(c0+ c0)/N, in [0, 1]."""
    state = gibbs_state(n_sites, params, spec)
    c0 = fock.condensate_op(n_sites)
    value = float(state.expectation((c0.conj().T @ c0).tocsr()).real / n_sites)
    if not -1e-10 <= value <= 1.0 + 1e-10:
        raise ArithmeticError(f"condensate density {value} outside [0, 1]")
    return value
