"""Command-line harness: config parsing, experiment orchestration, CSV output.

Commands
--------
flow      : one mean-field trajectory, full observable + rotor columns
simulate  : exact finite-volume expectations of the on-site observables
converge  : per-N deviation between exact dynamics and the mean-field flow
gap       : solve the variational gap problem
scan      : phase-diagram scan of the gap solution over a parameter grid
liouville : Liouville-equation residuals over the polynomial suite
rotor     : rotor commuting-diagram deviations
verify    : run the full property suite (exit code 4 on failure)

Configs are YAML; see README for the schema.  Identical config + seed gives
byte-identical output files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import math
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import __version__, classical, dynamics, equilibrium, fock, model, verification
from .errors import CapacityError, ConfigError, MfbcsError, NumericalAbortError
from .flow import FlowConfig, flow_onsite, mixture_flow
from .states import OnSiteState, ProductMixture

TRAJECTORY_HEADER = (
    "t,d,m,w,z_re,z_im,kappa,theta,nu,omega1,omega2,omega3"
)

_COMMANDS = ("flow", "simulate", "converge", "gap", "scan", "liouville", "rotor", "verify")

_TOP_KEYS = {
    "command", "mu", "h", "lambda", "gamma", "beta", "sites", "times", "dt",
    "method", "tolerance", "initial", "mixture", "phases", "scan", "states",
    "fd_step", "out", "seed", "threads",
}
_TIME_KEYS = {"start", "stop", "step"}
_STATE_KEYS = {"kind", "angle", "phase", "seed", "c"}
_SCAN_KEYS = {"mu", "h", "lambda", "gamma", "beta"}
_STATE_KINDS = ("vacuum", "doubly_occupied", "mixed", "pair", "random", "gibbs")


@dataclass(frozen=True)
class StateSpec:
    kind: str
    angle: float = 0.0
    phase: float = 0.0
    seed: int = 0
    c: complex = 0.0


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: model.ModelParams
    beta: float = 1.0
    sites: Tuple[int, ...] = (2, 3, 4, 5)
    times: Tuple[float, ...] = tuple(np.round(np.arange(0.0, 1.0001, 0.1), 12))
    flow_cfg: FlowConfig = field(default_factory=lambda: FlowConfig(method="adaptive"))
    initial: Optional[StateSpec] = None
    mixture: Tuple[Tuple[float, StateSpec], ...] = ()
    phases: int = 8
    scan: Tuple[Tuple[str, Tuple[float, ...]], ...] = ()
    n_states: int = 5
    fd_step: float = 1e-4
    out: Optional[str] = None
    seed: int = 0
    threads: int = 1


def _fail(path: str, message: str) -> ConfigError:
    return ConfigError(f"config field '{path}': {message}")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(path, f"expected an integer, got {value!r}")
    return int(value)


def _check_keys(mapping: dict, allowed: set, path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise _fail(f"{path}{key}" if path else str(key), "unknown key")


def _parse_state(raw, path: str) -> StateSpec:
    if not isinstance(raw, dict):
        raise _fail(path, "expected a mapping with a 'kind' entry")
    _check_keys(raw, _STATE_KEYS, path + ".")
    kind = raw.get("kind")
    if kind not in _STATE_KINDS:
        raise _fail(f"{path}.kind", f"must be one of {_STATE_KINDS}")
    c = raw.get("c", 0.0)
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise _fail(f"{path}.c", "expected [re, im]")
        c = complex(_as_float(c[0], f"{path}.c[0]"), _as_float(c[1], f"{path}.c[1]"))
    else:
        c = complex(_as_float(c, f"{path}.c"), 0.0)
    return StateSpec(
        kind=kind,
        angle=_as_float(raw.get("angle", math.pi / 6.0), f"{path}.angle"),
        phase=_as_float(raw.get("phase", 0.0), f"{path}.phase"),
        seed=_as_int(raw.get("seed", 0), f"{path}.seed"),
        c=c,
    )


def _parse_times(raw, path: str) -> Tuple[float, ...]:
    if not isinstance(raw, dict):
        raise _fail(path, "expected a mapping {start, stop, step}")
    _check_keys(raw, _TIME_KEYS, path + ".")
    start = _as_float(raw.get("start", 0.0), f"{path}.start")
    stop = _as_float(raw.get("stop", 1.0), f"{path}.stop")
    step = _as_float(raw.get("step", 0.1), f"{path}.step")
    if step <= 0:
        raise _fail(f"{path}.step", "must be > 0 (times strictly increasing)")
    if stop < start:
        raise _fail(f"{path}.stop", "must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(start + k * step) for k in range(n))


def _parse_grid(raw, path: str) -> Tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        return tuple(_as_float(v, f"{path}[{i}]") for i, v in enumerate(raw))
    if isinstance(raw, dict):
        _check_keys(raw, {"start", "stop", "num"}, path + ".")
        start = _as_float(raw.get("start", 0.0), f"{path}.start")
        stop = _as_float(raw.get("stop", 1.0), f"{path}.stop")
        num = _as_int(raw.get("num", 5), f"{path}.num")
        if num < 1:
            raise _fail(f"{path}.num", "must be >= 1")
        return tuple(float(v) for v in np.linspace(start, stop, num))
    raise _fail(path, "expected a list or {start, stop, num}")


def parse_config(text: str, command: Optional[str] = None) -> RunConfig:
    """Parse a YAML config document into a validated RunConfig.

    Unknown keys are rejected; defaults are dt=1e-3, tolerance=1e-9, seed=0.
    A command passed by the CLI must agree with any command in the document.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"config parse error{where}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    _check_keys(raw, _TOP_KEYS, "")

    doc_command = raw.get("command")
    if doc_command is not None and doc_command not in _COMMANDS:
        raise _fail("command", f"must be one of {_COMMANDS}")
    if command is not None and doc_command is not None and command != doc_command:
        raise _fail("command", f"CLI command {command!r} conflicts with config {doc_command!r}")
    final_command = command or doc_command
    if final_command is None:
        raise _fail("command", "missing (give it in the config or on the CLI)")

    gamma = _as_float(raw.get("gamma", 0.0), "gamma")
    if gamma < 0:
        raise _fail("gamma", "violates the model invariant gamma >= 0")
    lam = _as_float(raw.get("lambda", 0.0), "lambda")
    if lam < 0:
        raise _fail("lambda", "violates the model invariant lambda >= 0")
    params = model.ModelParams(
        mu=_as_float(raw.get("mu", 0.0), "mu"),
        h=_as_float(raw.get("h", 0.0), "h"),
        lam=lam,
        gamma=gamma,
    )

    beta = _as_float(raw.get("beta", 1.0), "beta")
    if beta <= 0:
        raise _fail("beta", "must be > 0")

    sites_raw = raw.get("sites", [2, 3, 4, 5])
    if not isinstance(sites_raw, (list, tuple)) or not sites_raw:
        raise _fail("sites", "expected a non-empty list of site counts")
    sites = tuple(_as_int(v, f"sites[{i}]") for i, v in enumerate(sites_raw))
    for i, n in enumerate(sites):
        if n < 1 or n > fock.MAX_SITE_LIMIT:
            raise _fail(f"sites[{i}]", f"must be within 1..{fock.MAX_SITE_LIMIT}")

    times = _parse_times(raw.get("times", {}), "times") if "times" in raw else None

    dt = _as_float(raw.get("dt", 1e-3), "dt")
    if dt <= 0:
        raise _fail("dt", "must be > 0")
    tolerance = _as_float(raw.get("tolerance", 1e-9), "tolerance")
    if tolerance <= 0:
        raise _fail("tolerance", "must be > 0")
    method = raw.get("method", "adaptive")
    if method not in ("rk4", "adaptive"):
        raise _fail("method", "must be 'rk4' or 'adaptive'")
    flow_cfg = FlowConfig(step_size=dt, method=method, rtol=tolerance, atol=tolerance * 1e-3)

    initial = _parse_state(raw["initial"], "initial") if "initial" in raw else None

    mixture: List[Tuple[float, StateSpec]] = []
    if "mixture" in raw:
        if not isinstance(raw["mixture"], list) or not raw["mixture"]:
            raise _fail("mixture", "expected a non-empty list")
        for i, entry in enumerate(raw["mixture"]):
            if not isinstance(entry, dict):
                raise _fail(f"mixture[{i}]", "expected a mapping")
            _check_keys(entry, {"weight", "state"}, f"mixture[{i}].")
            if "weight" not in entry or "state" not in entry:
                raise _fail(f"mixture[{i}]", "needs 'weight' and 'state'")
            mixture.append(
                (
                    _as_float(entry["weight"], f"mixture[{i}].weight"),
                    _parse_state(entry["state"], f"mixture[{i}].state"),
                )
            )

    phases = _as_int(raw.get("phases", 8), "phases")
    if phases < 1:
        raise _fail("phases", "must be >= 1")

    scan: List[Tuple[str, Tuple[float, ...]]] = []
    if "scan" in raw:
        if not isinstance(raw["scan"], dict) or not raw["scan"]:
            raise _fail("scan", "expected a non-empty mapping of parameter grids")
        _check_keys(raw["scan"], _SCAN_KEYS, "scan.")
        for key in sorted(raw["scan"]):
            grid = _parse_grid(raw["scan"][key], f"scan.{key}")
            if key in ("gamma", "lambda") and min(grid) < 0:
                raise _fail(f"scan.{key}", f"violates the model invariant {key} >= 0")
            scan.append((key, grid))

    n_states = _as_int(raw.get("states", 5), "states")
    if n_states < 1:
        raise _fail("states", "must be >= 1")
    fd_step = _as_float(raw.get("fd_step", 1e-4), "fd_step")
    if fd_step <= 0:
        raise _fail("fd_step", "must be > 0")

    seed = _as_int(raw.get("seed", 0), "seed")
    threads = _as_int(raw.get("threads", 1), "threads")
    if threads < 1:
        raise _fail("threads", "must be >= 1")

    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise _fail("out", "expected a path string")

    kwargs = dict(
        command=final_command,
        params=params,
        beta=beta,
        sites=sites,
        flow_cfg=flow_cfg,
        initial=initial,
        mixture=tuple(mixture),
        phases=phases,
        scan=tuple(scan),
        n_states=n_states,
        fd_step=fd_step,
        out=out,
        seed=seed,
        threads=threads,
    )
    if times is not None:
        kwargs["times"] = times
    return RunConfig(**kwargs)


def _materialize_state(spec: StateSpec, config: RunConfig) -> OnSiteState:
    if spec.kind == "vacuum":
        return OnSiteState.vacuum()
    if spec.kind == "doubly_occupied":
        return OnSiteState.doubly_occupied()
    if spec.kind == "mixed":
        return OnSiteState.maximally_mixed()
    if spec.kind == "pair":
        return OnSiteState.pair_superposition(spec.angle, spec.phase)
    if spec.kind == "random":
        return OnSiteState.random_even(np.random.default_rng(spec.seed))
    if spec.kind == "gibbs":
        return equilibrium.approx_gibbs_onsite(config.params, config.beta, spec.c)
    raise ConfigError(f"unknown state kind {spec.kind!r}")


def _initial_state(config: RunConfig) -> OnSiteState:
    spec = config.initial or StateSpec(kind="pair", angle=math.pi / 6.0)
    return _materialize_state(spec, config)


def _initial_mixture(config: RunConfig) -> ProductMixture:
    if config.mixture:
        return ProductMixture.from_components(
            [(w, _materialize_state(s, config)) for w, s in config.mixture]
        )
    return ProductMixture.single(_initial_state(config))


@dataclass
class ResultTable:
    header: List[str]
    rows: List[tuple]
    metadata: Dict[str, object]

    def _format(self, value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            v = float(value)
            if not math.isfinite(v):
                raise NumericalAbortError(f"non-finite value {v!r} in output table")
            return repr(v)
        text = str(value)
        if any(ch in text for ch in ',"\n'):
            text = '"' + text.replace('"', '""') + '"'
        return text

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("row width does not match header")
            lines.append(",".join(self._format(v) for v in row))
        return "\n".join(lines) + "\n"


def _config_digest(config: RunConfig) -> str:
    blob = yaml.safe_dump(
        {
            "command": config.command,
            "mu": config.params.mu,
            "h": config.params.h,
            "lambda": config.params.lam,
            "gamma": config.params.gamma,
            "beta": config.beta,
            "sites": list(config.sites),
            "times": [float(t) for t in config.times],
            "dt": config.flow_cfg.step_size,
            "method": config.flow_cfg.method,
            "tolerance": config.flow_cfg.rtol,
            "phases": config.phases,
            "states": config.n_states,
            "fd_step": config.fd_step,
            "seed": config.seed,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()


def _run_flow(config: RunConfig) -> ResultTable:
    # mixtures evolve componentwise; the records then carry the mixture
    # expectations (kappa = |mixture z|^2 shows the interference beats)
    if config.mixture:
        traj = mixture_flow(
            config.params, _initial_mixture(config), np.array(config.times), config.flow_cfg
        )
        kind = "mixture"
    else:
        traj = flow_onsite(
            config.params, _initial_state(config), np.array(config.times), config.flow_cfg
        )
        kind = "product"
    rows = []
    for k, t in enumerate(traj.times):
        # rotor coordinates: the Cooper-field quadratures and the frequency
        rows.append(
            (
                float(t), traj.d[k], traj.m[k], traj.w[k],
                traj.z[k].real, traj.z[k].imag, traj.kappa[k], traj.theta[k],
                traj.nu[k], traj.z[k].real, traj.z[k].imag, traj.nu[k],
            )
        )
    return ResultTable(
        TRAJECTORY_HEADER.split(","),
        rows,
        {"backend": config.flow_cfg.method, "initial": kind},
    )


def _pure_vector(spec: StateSpec) -> Optional[np.ndarray]:
    if spec.kind == "vacuum":
        return np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    if spec.kind == "doubly_occupied":
        return np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)
    if spec.kind == "pair":
        v = np.zeros(4, dtype=complex)
        v[0] = math.cos(spec.angle)
        v[3] = math.sin(spec.angle) * np.exp(1j * spec.phase)
        return v
    return None


def _initial_global(config: RunConfig, n: int) -> dynamics.GlobalState:
    spec = config.initial or StateSpec(kind="pair", angle=math.pi / 6.0)
    vector = _pure_vector(spec)
    if vector is not None:
        return dynamics.pure_product_state(n, vector)
    return dynamics.product_state(n, _materialize_state(spec, config))


def _run_simulate(config: RunConfig) -> ResultTable:
    n = config.sites[0]
    initial = _initial_global(config, n)
    backend = dynamics.propagation_backend(n, initial.kind)
    prop = dynamics.Propagator.from_model(n, config.params) if backend == "spectral" else None
    times = list(config.times)
    series = {}
    for name, op in (
        ("d", fock.N_UP + fock.N_DN),
        ("m", fock.N_UP - fock.N_DN),
        ("w", fock.N_UP @ fock.N_DN),
        ("z", fock.PAIR),
    ):
        series[name] = dynamics.evolve_expectation(
            n, config.params, initial, op, times, propagator=prop
        )
    rows = [
        (
            t, series["d"][k].real, series["m"][k].real, series["w"][k].real,
            series["z"][k].real, series["z"][k].imag,
        )
        for k, t in enumerate(times)
    ]
    return ResultTable(
        ["t", "d", "m", "w", "z_re", "z_im"], rows, {"backend": backend, "sites": n}
    )


def _run_converge(config: RunConfig) -> ResultTable:
    rho0 = _initial_state(config)
    times = np.array(config.times)
    traj = flow_onsite(config.params, rho0, times, config.flow_cfg)
    flow_series = {
        "d": traj.d, "m": traj.m, "w": traj.w,
        "z_re": traj.z.real, "z_im": traj.z.imag,
    }
    obs = (
        ("d", fock.N_UP + fock.N_DN, np.real),
        ("m", fock.N_UP - fock.N_DN, np.real),
        ("w", fock.N_UP @ fock.N_DN, np.real),
        ("z_re", fock.PAIR, np.real),
        ("z_im", fock.PAIR, np.imag),
    )

    def per_site(n: int):
        initial = dynamics.product_state(n, rho0)
        prop = dynamics.Propagator.from_model(n, config.params)
        out = []
        for name, op, part in obs:
            finite = part(
                dynamics.evolve_expectation(
                    n, config.params, initial, op, times, propagator=prop
                )
            )
            for k, t in enumerate(times):
                out.append(
                    (n, float(t), name, float(finite[k]), float(flow_series[name][k]),
                     abs(float(finite[k]) - float(flow_series[name][k])))
                )
        return out

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            chunks = dict(zip(config.sites, pool.map(per_site, config.sites)))
    else:
        chunks = {n: per_site(n) for n in config.sites}
    rows = [row for n in sorted(chunks) for row in chunks[n]]
    return ResultTable(
        ["N", "t", "observable", "finite", "flow", "deviation"],
        rows,
        {"backend": "spectral"},
    )


def _run_gap(config: RunConfig) -> ResultTable:
    sol = equilibrium.gap_solve(config.params, config.beta)
    rows = [
        (
            sol.r_star, sol.condensate_density, sol.pressure_value,
            sol.superconducting, sol.indeterminate, sol.density_at_solution,
        )
    ]
    return ResultTable(
        ["r_star", "condensate_density", "pressure", "superconducting",
         "indeterminate", "density"],
        rows,
        {"beta": config.beta},
    )


def _run_scan(config: RunConfig) -> ResultTable:
    grids = dict(config.scan) if config.scan else {"gamma": tuple(np.linspace(0.0, 8.0, 9))}
    names = sorted(grids)
    base = {
        "mu": config.params.mu, "h": config.params.h,
        "lambda": config.params.lam, "gamma": config.params.gamma,
        "beta": config.beta,
    }

    points: List[Tuple[float, ...]] = [()]
    for name in names:
        points = [p + (v,) for p in points for v in grids[name]]

    def solve(point: Tuple[float, ...]):
        vals = dict(base)
        vals.update(dict(zip(names, point)))
        params = model.ModelParams(
            mu=vals["mu"], h=vals["h"], lam=vals["lambda"], gamma=vals["gamma"]
        )
        sol = equilibrium.gap_solve(params, vals["beta"])
        return (
            vals["mu"], vals["h"], vals["lambda"], vals["gamma"], vals["beta"],
            sol.r_star, sol.density_at_solution, sol.superconducting, sol.indeterminate,
        )

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            rows = list(pool.map(solve, points))
    else:
        rows = [solve(p) for p in points]
    return ResultTable(
        ["mu", "h", "lambda", "gamma", "beta", "r_star", "density",
         "superconducting", "indeterminate"],
        rows,
        {"grid": {k: list(v) for k, v in grids.items()}},
    )


def _run_liouville(config: RunConfig) -> ResultTable:
    rng = np.random.default_rng(config.seed)
    suite = classical.polynomial_suite()
    rows = []
    for k in range(config.n_states):
        rho0 = OnSiteState.random_even(rng)
        for t in config.times:
            results = classical.liouville_residuals(
                config.params, suite, rho0, float(t), config.fd_step
            )
            for name in sorted(results):
                r = results[name]
                rows.append((k, float(t), name, r.lhs, r.rhs, r.residual, r.fd_error_estimate))
    return ResultTable(
        ["state", "t", "observable", "lhs", "rhs", "residual", "fd_error"],
        rows,
        {"fd_step": config.fd_step},
    )


def _run_rotor(config: RunConfig) -> ResultTable:
    rng = np.random.default_rng(config.seed)
    times = np.array(config.times)
    rows = []
    for k in range(config.n_states):
        rho0 = OnSiteState.random_even(rng)
        traj = flow_onsite(config.params, rho0, times, config.flow_cfg)
        rotor = classical.rotor_flow(classical.rotor_map(config.params, rho0), times)
        for i, t in enumerate(times):
            via_flow = classical.rotor_map(config.params, traj.states[i])
            dev = float(np.max(np.abs(via_flow.as_array() - rotor[i].as_array())))
            rows.append((k, float(t), dev))
    return ResultTable(["state", "t", "deviation"], rows, {})


def _run_verify(config: RunConfig) -> ResultTable:
    results = verification.run_all(config.seed)
    rows = []
    for r in results:
        print(r.line())
        rows.append((r.name, r.passed, r.max_violation, r.threshold, r.detail))
    table = ResultTable(
        ["check", "passed", "violation", "threshold", "detail"], rows, {}
    )
    table.metadata["all_passed"] = all(r.passed for r in results)
    return table


_DISPATCH = {
    "flow": _run_flow,
    "simulate": _run_simulate,
    "converge": _run_converge,
    "gap": _run_gap,
    "scan": _run_scan,
    "liouville": _run_liouville,
    "rotor": _run_rotor,
    "verify": _run_verify,
}


def run(config: RunConfig) -> ResultTable:
    """Execute a validated config and write its CSV + metadata sidecar."""
    table = _DISPATCH[config.command](config)
    table.metadata.update(
        {
            "version": __version__,
            "command": config.command,
            "seed": config.seed,
            "config_digest": _config_digest(config),
            "columns": list(table.header),
        }
    )
    out = config.out or f"{config.command}.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table.to_csv())
    with open(out + ".meta.yaml", "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(table.metadata, fh, sort_keys=True)
    return table


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfbcs",
        description="Strong-coupling pairing model: dynamics, flow, gap equation.",
    )
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", help="YAML config path", default=None)
    parser.add_argument("--out", help="output CSV path", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        text = ""
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        config = parse_config(text, command=args.command)
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            from dataclasses import replace

            config = replace(config, **overrides)
        table = run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalAbortError, MfbcsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if config.command == "verify" and not table.metadata.get("all_passed", False):
        return 4
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
