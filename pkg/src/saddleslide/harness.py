"""Batch experiment runner: config files, pipeline wiring, reports, outputs.

``run_experiment`` executes the full recipe: build the network, build the
instance, bound the operator, derive penalty coefficients and the smoothness
and oracle constants, pick N as the smallest integer whose rate bound meets
the target (epsilon deterministically, p * epsilon in stochastic mode, by
Markov's inequality), run the solver, and assemble a report comparing
measured quantities against the instantiated theorem bounds.

Reports are pure functions of (config, seed): emitted files redact wall-clock
fields to 0.0 so re-running a config yields identical bytes. Stochastic mode
with sigma = 0 degenerates to the deterministic pipeline outright, making the
two reports identical.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import yaml

from .errors import ConfigurationError, ParameterError
from .geometry import omega_sq_bound
from .instances import (
    MATCHING_PENNIES,
    exact_gap_matrix_game,
    l1_saddle_gap,
    make_matrix_game,
    operator_bound_L0,
    random_l1_saddle,
    random_matrix_game,
)
from .network import TOPOLOGY_KINDS, NetworkModel, build_topology, consensus_violation
from .penalty import PenaltyCoefficients, StackedSPP, build_penalized_vi, penalty_coefficients
from .sliding import (
    RunTrace,
    VIProblem,
    deterministic_schedule,
    mps_run,
    smps_run,
    stochastic_schedule,
    trace_to_csv,
)

FAMILIES = ("matching_pennies", "matrix_game_random", "l1_saddle_random")
NOISE_KINDS = ("uniform", "gaussian")
SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    """One experiment: problem family + network + accuracy target + mode."""

    family: str = "matching_pennies"
    d_x: int = 2
    d_y: int = 2
    instance_seed: int = 0
    box_radius: float = 1.0
    network_kind: str = "single"
    m: int = 1
    network_p: Optional[float] = None
    network_seed: Optional[int] = None
    epsilon: float = 0.05
    mode: str = "deterministic"
    sigma: float = 0.0
    noise_kind: str = "uniform"
    p_confidence: float = 0.25
    N_override: Optional[int] = None
    seed: int = 0
    out_dir: Optional[str] = None
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> None:
        def bad(fld: str, why: str):
            return ConfigurationError(f"config field {fld!r} {why}")

        if self.schema_version != SCHEMA_VERSION:
            raise bad("schema_version", f"must be {SCHEMA_VERSION}")
        if self.family not in FAMILIES:
            raise bad("problem.family", f"must be one of {FAMILIES}")
        if not (isinstance(self.d_x, int) and self.d_x >= 1
                and isinstance(self.d_y, int) and self.d_y >= 1):
            raise bad("problem.d_x/d_y", "must be integers >= 1")
        if self.family == "matching_pennies" and (self.d_x, self.d_y) != (2, 2):
            raise bad("problem.d_x/d_y", "must both be 2 for matching_pennies")
        if not (np.isfinite(self.box_radius) and self.box_radius > 0):
            raise bad("problem.box_radius", "must be positive")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise bad("network.m", "must be an integer >= 1")
        if self.m == 1:
            if self.network_kind != "single":
                raise bad("network.kind", "must be 'single' when m = 1")
        elif self.network_kind not in TOPOLOGY_KINDS:
            raise bad("network.kind", f"must be one of {TOPOLOGY_KINDS} when m >= 2")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise bad("run.epsilon", "must be positive")
        if self.mode not in ("deterministic", "stochastic"):
            raise bad("run.mode", "must be 'deterministic' or 'stochastic'")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise bad("run.sigma", "must be a nonnegative real")
        if self.mode == "deterministic" and self.sigma != 0.0:
            raise bad("run.sigma", "must be 0 in deterministic mode")
        if self.noise_kind not in NOISE_KINDS:
            raise bad("run.noise_kind", f"must be one of {NOISE_KINDS}")
        if self.mode == "stochastic" and not (0.0 < self.p_confidence < 1.0):
            raise bad("run.p_confidence", "must lie in (0, 1) in stochastic mode")
        if self.N_override is not None and not (
                isinstance(self.N_override, int) and self.N_override >= 1):
            raise bad("run.N_override", "must be an integer >= 1 or null")
        if not isinstance(self.seed, int):
            raise bad("run.seed", "must be an integer")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "problem": {
                "family": self.family,
                "d_x": self.d_x,
                "d_y": self.d_y,
                "seed": self.instance_seed,
                "box_radius": self.box_radius,
            },
            "network": {
                "kind": self.network_kind,
                "m": self.m,
                "p": self.network_p,
                "seed": self.network_seed,
            },
            "run": {
                "epsilon": self.epsilon,
                "mode": self.mode,
                "sigma": self.sigma,
                "noise_kind": self.noise_kind,
                "p_confidence": self.p_confidence,
                "N_override": self.N_override,
                "seed": self.seed,
                "out_dir": self.out_dir,
            },
        }

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config root must be a mapping")
        known = {"schema_version", "problem", "network", "run"}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"config has unknown top-level keys {sorted(extra)}")
        prob = data.get("problem") or {}
        net = data.get("network") or {}
        run = data.get("run") or {}
        for name, blk in (("problem", prob), ("network", net), ("run", run)):
            if not isinstance(blk, dict):
                raise ConfigurationError(f"config section {name!r} must be a mapping")
        cfg = RunConfig(
            schema_version=data.get("schema_version", SCHEMA_VERSION),
            family=prob.get("family", "matching_pennies"),
            d_x=prob.get("d_x", 2),
            d_y=prob.get("d_y", 2),
            instance_seed=prob.get("seed", 0),
            box_radius=prob.get("box_radius", 1.0),
            network_kind=net.get("kind", "single"),
            m=net.get("m", 1),
            network_p=net.get("p"),
            network_seed=net.get("seed"),
            epsilon=run.get("epsilon", 0.05),
            mode=run.get("mode", "deterministic"),
            sigma=run.get("sigma", 0.0),
            noise_kind=run.get("noise_kind", "uniform"),
            p_confidence=run.get("p_confidence", 0.25),
            N_override=run.get("N_override"),
            seed=run.get("seed", 0),
            out_dir=run.get("out_dir"),
        )
        cfg.validate()
        return cfg

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_yaml(text: str) -> "RunConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"config is not valid structured text: {e}")
        return RunConfig.from_dict(data)

    @staticmethod
    def from_yaml_file(path) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigurationError(f"cannot read config file {path}: {e}")
        return RunConfig.from_yaml(text)


@dataclass
class RunReport:
    """Measured outcomes of one run next to the instantiated theorem bounds.

    ``mode`` is the effective mode: stochastic configs with sigma = 0 run the
    deterministic pipeline and report as such. ``H_calls_per_node`` equals the
    stacked oracle call count (the algorithm is synchronous, every node
    evaluates its local block on every call). ``final_gap`` is NaN when the
    family has no exact gap oracle for the given data.
    """

    family: str
    mode: str
    m: int
    epsilon: float
    N: int
    L: float
    M: float
    delta: float
    L0: float
    sigma: float
    omega_sq: float
    R_alpha_sq: float
    R_beta_sq: float
    final_gap: float
    consensus_x: float
    consensus_y: float
    communication_rounds: int
    grad_G_calls: int
    H_calls_per_node: int
    predicted_gap_bound: float
    predicted_rounds: int
    predicted_H_calls: float
    predicted_consensus_x: float
    predicted_consensus_y: float
    wall_time_s: float
    noise_kind: Optional[str] = None
    p_confidence: Optional[float] = None
    trace: Optional[RunTrace] = None

    def summary_lines(self) -> list[str]:
        """Stable key/value lines; wall time redacted for reproducibility."""
        keys = ["family", "mode", "m", "epsilon", "N", "L", "M", "delta", "L0",
                "sigma", "omega_sq", "R_alpha_sq", "R_beta_sq", "final_gap",
                "consensus_x", "consensus_y", "communication_rounds",
                "grad_G_calls", "H_calls_per_node", "predicted_gap_bound",
                "predicted_rounds", "predicted_H_calls",
                "predicted_consensus_x", "predicted_consensus_y"]
        if self.mode == "stochastic":
            keys += ["noise_kind", "p_confidence"]
        lines = ["saddleslide-summary 1"]
        for k in keys:
            v = getattr(self, k)
            if isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} {v}")
        lines.append("wall_time_s 0.0")
        return lines


def make_stochastic_oracle(H: Callable[[np.ndarray], np.ndarray], kind: str,
                           sigma: float, dim: int):
    """Additive-noise oracle H(z) + zeta with E zeta = 0 and E||zeta||^2 <= sigma^2.

    ``uniform`` draws each coordinate from [-a, a] with a = sigma sqrt(3/dim),
    which meets the variance budget with equality; ``gaussian`` draws
    coordinate std sigma/sqrt(dim) truncated at four stds, keeping the noise
    bounded (slightly under budget). sigma = 0 returns the exact oracle.
    """
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    if sigma == 0.0:
        return lambda z, rng: H(z)
    if kind == "uniform":
        a = sigma * math.sqrt(3.0 / dim)

        def oracle(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
            return H(z) + rng.uniform(-a, a, dim)

        return oracle
    if kind == "gaussian":
        s = sigma / math.sqrt(dim)
        cap = 4.0 * s

        def oracle(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
            return H(z) + np.clip(rng.normal(0.0, s, dim), -cap, cap)

        return oracle
    raise ConfigurationError(f"run.noise_kind must be one of {NOISE_KINDS}, got {kind!r}")


def _build_instance(config: RunConfig) -> StackedSPP:
    if config.family == "matching_pennies":
        return make_matrix_game([MATCHING_PENNIES.copy() for _ in range(config.m)],
                                config.m)
    if config.family == "matrix_game_random":
        return random_matrix_game(config.m, config.d_x, config.d_y,
                                  config.instance_seed)
    if config.family == "l1_saddle_random":
        return random_l1_saddle(config.m, config.d_x, config.d_y,
                                config.instance_seed, box_radius=config.box_radius)
    raise ConfigurationError(f"problem.family {config.family!r} is not shipped")


def build_pipeline(config: RunConfig):
    """Network + instance + penalty coefficients + penalized VIProblem.

    Single-node configs have no penalty: coefficients are zero and the VI
    reduces to the centralized problem (G identically 0).
    """
    config.validate()
    if config.m == 1:
        net = NetworkModel.single_node()
    else:
        net = build_topology(config.network_kind, config.m, p=config.network_p,
                             seed=config.network_seed)
    spp = _build_instance(config)
    spp.operator_bound = operator_bound_L0(spp, samples=2000,
                                           seed=config.instance_seed)
    if config.m == 1:
        coeffs = PenaltyCoefficients(0.0, 0.0, config.epsilon)
    else:
        bound_x = spp.subgrad_bound_x if spp.subgrad_bound_x is not None \
            else spp.operator_bound
        bound_y = spp.subgrad_bound_y if spp.subgrad_bound_y is not None \
            else spp.operator_bound
        coeffs = penalty_coefficients(spp, net, net, config.epsilon,
                                      bound_x, bound_y)
    vi = build_penalized_vi(spp, net, net, coeffs, config.epsilon)
    return net, spp, coeffs, vi


def _gap_oracle(spp: StackedSPP) -> Optional[Callable[[np.ndarray], float]]:
    """Exact gap on node-averaged blocks, when the family supports one."""
    fam = spp.meta.get("family")
    if fam == "matrix_game":
        A_bar = spp.meta["A_bar"]

        def game_gap(z: np.ndarray) -> float:
            X, Y = spp.split(z)
            return exact_gap_matrix_game(A_bar, X.mean(axis=0), Y.mean(axis=0))

        return game_gap
    if fam == "l1_saddle":
        B3 = spp.meta["B"]
        d = B3.shape[2]
        if B3.shape[1] != d or np.max(np.abs(B3 - B3 * np.eye(d))) > 0.0:
            return None

        def l1_gap(z: np.ndarray) -> float:
            X, Y = spp.split(z)
            return l1_saddle_gap(spp, X.mean(axis=0), Y.mean(axis=0))

        return l1_gap
    return None


def pick_N(L: float, omega_sq: float, target: float) -> int:
    """Smallest N with 6 L omega_sq / N^2 <= target."""
    if not (target > 0):
        raise ConfigurationError("accuracy target must be positive")
    n = math.isqrt(max(0, math.ceil(6.0 * L * omega_sq / target) - 1)) + 1
    while 6.0 * L * omega_sq / (n * n) > target:
        n += 1
    while n > 1 and 6.0 * L * omega_sq / ((n - 1) * (n - 1)) <= target:
        n -= 1
    return n


def run_experiment(config: RunConfig) -> RunReport:
    """Execute the full pipeline for one config; see the module docstring."""
    t0 = time.perf_counter()
    net, spp, coeffs, vi = build_pipeline(config)
    z0 = spp.center()
    omega_sq = omega_sq_bound(vi.set_geometry, z0)

    stochastic = config.mode == "stochastic" and config.sigma > 0.0
    target = config.p_confidence * config.epsilon if stochastic else config.epsilon
    N = config.N_override if config.N_override is not None \
        else pick_N(vi.L, omega_sq, target)

    if stochastic:
        schedule = stochastic_schedule(vi.L, vi.M, config.sigma, omega_sq, N)
        noisy = make_stochastic_oracle(vi.H, config.noise_kind, config.sigma,
                                       vi.set_geometry.dim)
        problem = replace(vi, sigma=config.sigma, H_stochastic=noisy)
        final, trace = smps_run(problem, schedule, z0, seed=config.seed,
                                retain_iterates=True)
    else:
        schedule = deterministic_schedule(vi.L, vi.M, N)
        final, trace = mps_run(vi, schedule, z0, retain_iterates=True)

    gap_fn = _gap_oracle(spp)
    m, dx = spp.m, spp.d_x
    cut = m * dx
    for i, zk in enumerate(trace.z_bar_snapshots):
        if gap_fn is not None:
            trace.gap_estimate[i] = gap_fn(zk)
        if m > 1:
            trace.consensus_x[i] = consensus_violation(net, zk[:cut])
            trace.consensus_y[i] = consensus_violation(net, zk[cut:])
        else:
            trace.consensus_x[i] = 0.0
            trace.consensus_y[i] = 0.0

    final_gap = gap_fn(final) if gap_fn is not None else math.nan
    consensus_x = consensus_violation(net, final[:cut]) if m > 1 else 0.0
    consensus_y = consensus_violation(net, final[cut:]) if m > 1 else 0.0

    ks = np.arange(1, N + 1, dtype=float)
    if stochastic:
        raw_T = (math.sqrt(3.0) * ks * vi.M / vi.L
                 + N * ks ** 2 * config.sigma ** 2 / (omega_sq * vi.L ** 2))
        predicted_gap = (6.0 * vi.L * omega_sq / N ** 2
                         + 2.5 * config.sigma ** 2 / vi.M + vi.delta) \
            if vi.M > 0 else math.inf
    else:
        raw_T = ks * vi.M / vi.L
        predicted_gap = 6.0 * vi.L * omega_sq / N ** 2 + vi.delta
    predicted_H = float(2.0 * np.sum(raw_T + 1.0))

    r_alpha = math.sqrt(coeffs.R_alpha_sq)
    r_beta = math.sqrt(coeffs.R_beta_sq)
    report = RunReport(
        family=config.family,
        mode="stochastic" if stochastic else "deterministic",
        m=m,
        epsilon=config.epsilon,
        N=N,
        L=vi.L,
        M=vi.M,
        delta=vi.delta,
        L0=float(vi.L0),
        sigma=config.sigma if stochastic else 0.0,
        omega_sq=omega_sq,
        R_alpha_sq=coeffs.R_alpha_sq,
        R_beta_sq=coeffs.R_beta_sq,
        final_gap=final_gap,
        consensus_x=consensus_x,
        consensus_y=consensus_y,
        communication_rounds=trace.communication_rounds,
        grad_G_calls=trace.total_grad_G,
        H_calls_per_node=trace.total_H,
        predicted_gap_bound=predicted_gap,
        predicted_rounds=N * vi.rounds_per_grad_G,
        predicted_H_calls=predicted_H,
        predicted_consensus_x=4.0 * config.epsilon / r_alpha if r_alpha > 0 else math.inf,
        predicted_consensus_y=4.0 * config.epsilon / r_beta if r_beta > 0 else math.inf,
        wall_time_s=time.perf_counter() - t0,
        noise_kind=config.noise_kind if stochastic else None,
        p_confidence=config.p_confidence if stochastic else None,
        trace=trace,
    )
    return report


def emit_outputs(report: RunReport, trace: RunTrace, out_dir) -> list:
    """Write trace.csv, summary.txt and plot_data.csv into ``out_dir``.

    Wall-clock columns are redacted to 0.0 so identical configs yield
    identical bytes. Returns the written paths.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir}: {e}")
    paths = []

    trace_path = os.path.join(out_dir, "trace.csv")
    redacted = replace(trace, wall_ms=[0.0] * trace.N,
                       z_bar_snapshots=[], z_snapshots=[], z_under_snapshots=[])
    _write_text(trace_path, None, lambda p: trace_to_csv(redacted, p))
    paths.append(trace_path)

    summary_path = os.path.join(out_dir, "summary.txt")
    _write_text(summary_path, "\n".join(report.summary_lines()) + "\n")
    paths.append(summary_path)

    plot_path = os.path.join(out_dir, "plot_data.csv")
    lines = ["k,gap,consensus_x,consensus_y"]
    for i in range(trace.N):
        lines.append(f"{i + 1},{repr(float(trace.gap_estimate[i]))},"
                     f"{repr(float(trace.consensus_x[i]))},"
                     f"{repr(float(trace.consensus_y[i]))}")
    _write_text(plot_path, "\n".join(lines) + "\n")
    paths.append(plot_path)
    return paths


def _write_text(path, text, writer=None) -> None:
    try:
        if writer is not None:
            writer(path)
        else:
            with open(path, "w") as fh:
                fh.write(text)
    except OSError as e:
        raise OSError(f"failed writing {path}: {e}")
