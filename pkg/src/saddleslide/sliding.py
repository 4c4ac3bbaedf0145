"""Mirror-prox sliding: outer/inner iteration, parameter schedules, gap function.

The method solves the monotone VI built from a convex-concave saddle problem
min_x max_y G_x-part + F: find z* with <grad G(z*) + H(z*), z - z*> >= 0,
where grad G is L-smooth and H is handled through an inexact (M, delta)
oracle. One outer iteration k freezes grad G at the sliding point and runs
T_k inner steps, each made of two two-anchor prox calls; the outer ergodic
point carries the O(L Omega^2 / N^2 + delta) guarantee, with delta entering
additively (weight exactly 1) rather than accumulating.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, ParameterError
from .geometry import GeometrySpec, _as_vector, _prox_kernel

TRACE_COLUMNS = ("k", "inner_steps", "grad_G_calls", "H_calls",
                 "gap_estimate", "consensus_x", "consensus_y", "wall_ms")


@dataclass
class VIProblem:
    """Oracle bundle for one variational inequality.

    ``grad_G`` must be the gradient of the convex potential ``value_G`` with
    Lipschitz constant ``L``; ``H`` is the (possibly nonsmooth) monotone
    operator satisfying the inexact-oracle inequality with constants
    ``(M, delta)``. ``H_stochastic(z, rng)`` is an unbiased noisy version with
    variance at most ``sigma**2``; ``L0`` optionally records a uniform bound
    on ``||H||`` (then (M, delta) may be synthesized as M = L0^2/(2 eps),
    delta = 2 eps). ``rounds_per_grad_G`` tells the solver how many
    communication rounds one grad_G evaluation costs (0 for centralized
    problems).
    """

    set_geometry: GeometrySpec
    grad_G: Callable[[np.ndarray], np.ndarray]
    L: float
    H: Callable[[np.ndarray], np.ndarray]
    M: float
    delta: float
    sigma: float = 0.0
    L0: Optional[float] = None
    value_G: Optional[Callable[[np.ndarray], float]] = None
    H_stochastic: Optional[Callable[[np.ndarray, np.random.Generator], np.ndarray]] = None
    rounds_per_grad_G: int = 0

    def __post_init__(self):
        for name in ("L", "M", "delta", "sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ParameterError(f"VIProblem.{name} must be a finite nonnegative real")
        if self.L0 is not None and not (np.isfinite(self.L0) and self.L0 >= 0):
            raise ParameterError("VIProblem.L0 must be a finite nonnegative real")


@dataclass
class SlidingSchedule:
    """Per-outer-iteration parameters gamma_k, beta_k, T_k, eta_k^t, Gamma_k.

    Arrays are 0-indexed storage for the 1-indexed sequences (entry k-1 holds
    the value at outer iteration k). ``eta(k, t)`` takes 1-indexed arguments.
    """

    N: int
    gamma: np.ndarray
    beta: np.ndarray
    T: np.ndarray
    eta: Callable[[int, int], float]
    Gamma: np.ndarray
    L: float
    M: float
    sigma: float = 0.0

    def validate(self) -> None:
        n = self.N
        if not (n >= 1 and len(self.gamma) == n and len(self.beta) == n
                and len(self.T) == n and len(self.Gamma) == n):
            raise ConfigurationError("schedule arrays must all have length N >= 1")
        if abs(self.gamma[0] - 1.0) > 1e-12:
            raise ConfigurationError("gamma_1 must equal 1")
        if np.any(self.gamma < -1e-12) or np.any(self.gamma > 1.0 + 1e-12):
            raise ConfigurationError("gamma_k must lie in [0, 1]")
        if np.any(self.T < 1):
            raise ConfigurationError("T_k must be positive integers")
        if np.any(self.beta < self.L * self.gamma - 1e-9):
            raise ConfigurationError("beta_k >= L * gamma_k violated")
        if abs(self.Gamma[0] - 1.0) > 1e-12:
            raise ConfigurationError("Gamma_1 must equal 1")
        for k in range(2, n + 1):
            expected = (1.0 - self.gamma[k - 1]) * self.Gamma[k - 2]
            if abs(self.Gamma[k - 1] - expected) > 1e-12 * max(1.0, abs(expected)):
                raise ConfigurationError("Gamma recurrence violated")
        for k in range(1, n + 1):
            tk = int(self.T[k - 1])
            bk = self.beta[k - 1]
            e1 = self.eta(k, 1)
            if not (e1 > 0 and np.isfinite(e1)):
                raise ConfigurationError("eta_k^1 must be a positive real")
            if self.M > bk + e1 + 1e-9 * max(1.0, self.M):
                raise ConfigurationError("M <= beta_k + eta_k^t violated at t = 1")
            for t in (2, tk):
                if t >= 2 and self.eta(k, t) > bk + self.eta(k, t - 1) + 1e-9:
                    raise ConfigurationError("eta_k^t <= beta_k + eta_k^{t-1} violated")
        # cross-iteration rate condition (equality for the shipped schedules)
        for k in range(2, n + 1):
            tkm = int(self.T[k - 2])
            lhs = self.gamma[k - 1] / self.Gamma[k - 1] \
                * (self.beta[k - 1] + self.eta(k, 1) / self.T[k - 1])
            rhs = self.gamma[k - 2] * (self.beta[k - 2] + self.eta(k - 1, tkm)) \
                / (self.Gamma[k - 2] * tkm)
            if lhs > rhs * (1.0 + 1e-9) + 1e-12:
                raise ConfigurationError("cross-iteration schedule condition violated")


def _schedule_core(L: float, M: float, N: int, T: np.ndarray,
                   sigma: float) -> SlidingSchedule:
    ks = np.arange(1, N + 1, dtype=float)
    gamma = 2.0 / (ks + 1.0)
    beta = 2.0 * L / ks
    Gamma = 2.0 / (ks * (ks + 1.0))
    beta_arr = beta.copy()
    T_arr = T.astype(np.int64)

    def eta(k: int, t: int) -> float:
        return beta_arr[k - 1] * (t - 1) + L * T_arr[k - 1] / k

    sched = SlidingSchedule(N=int(N), gamma=gamma, beta=beta, T=T_arr, eta=eta,
                            Gamma=Gamma, L=float(L), M=float(M), sigma=float(sigma))
    sched.validate()
    return sched


def _check_LMN(L: float, M: float, N: int) -> None:
    if not (np.isfinite(L) and L > 0):
        raise ParameterError("schedule needs L > 0 (formulas divide by L)")
    if not (np.isfinite(M) and M >= 0):
        raise ParameterError("schedule needs M >= 0")
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise ParameterError("schedule needs integer N >= 1")


def deterministic_schedule(L: float, M: float, N: int) -> SlidingSchedule:
    """Schedule gamma_k = 2/(k+1), beta_k = 2L/k, T_k = ceil(k M / L),
    eta_k^t = beta_k (t-1) + L T_k / k, with T_k floored at 1.

    Yields sup_z Q(z_bar_N, z) <= 6 L Omega^2 / N^2 + delta for problems whose
    H-oracle satisfies the (M, delta) inequality.
    """
    _check_LMN(L, M, N)
    ks = np.arange(1, N + 1, dtype=float)
    T = np.maximum(1, np.ceil(ks * M / L)).astype(np.int64)
    return _schedule_core(L, M, N, T, sigma=0.0)


def stochastic_schedule(L: float, M: float, sigma: float, omega_sq: float,
                        N: int) -> SlidingSchedule:
    """Stochastic-variant schedule; only T_k changes:
    T_k = ceil(sqrt(3) k M / L + N k^2 sigma^2 / (omega_sq L^2)).
    """
    _check_LMN(L, M, N)
    if not (np.isfinite(sigma) and sigma >= 0):
        raise ParameterError("schedule needs sigma >= 0")
    if not (np.isfinite(omega_sq) and omega_sq > 0):
        raise ParameterError("schedule needs omega_sq > 0")
    ks = np.arange(1, N + 1, dtype=float)
    raw = math.sqrt(3.0) * ks * M / L + N * ks ** 2 * sigma ** 2 / (omega_sq * L ** 2)
    T = np.maximum(1, np.ceil(raw)).astype(np.int64)
    return _schedule_core(L, M, N, T, sigma=sigma)


@dataclass
class RunTrace:
    """Per-outer-iteration telemetry for one solver run.

    ``grad_G_calls`` / ``H_calls`` rows are cumulative counts after outer
    iteration k. ``gap_estimate`` / ``consensus_x`` / ``consensus_y`` start as
    NaN and are filled by the harness (the solver does not know the
    instance-level gap oracle). Iterate snapshots are retained on request.
    """

    inner_steps: list = field(default_factory=list)
    grad_G_calls: list = field(default_factory=list)
    H_calls: list = field(default_factory=list)
    gap_estimate: list = field(default_factory=list)
    consensus_x: list = field(default_factory=list)
    consensus_y: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    communication_rounds: int = 0
    z_bar_snapshots: list = field(default_factory=list)
    z_snapshots: list = field(default_factory=list)
    z_under_snapshots: list = field(default_factory=list)
    final: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return len(self.inner_steps)

    @property
    def total_grad_G(self) -> int:
        return self.grad_G_calls[-1] if self.grad_G_calls else 0

    @property
    def total_H(self) -> int:
        return self.H_calls[-1] if self.H_calls else 0


def trace_to_csv(trace: RunTrace, path) -> None:
    """Write the trace in the stable column order, header always included."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for i in range(trace.N):
            w.writerow([
                i + 1,
                trace.inner_steps[i],
                trace.grad_G_calls[i],
                trace.H_calls[i],
                repr(float(trace.gap_estimate[i])),
                repr(float(trace.consensus_x[i])),
                repr(float(trace.consensus_y[i])),
                repr(float(trace.wall_ms[i])),
            ])


def _check_run_inputs(problem: VIProblem, schedule: SlidingSchedule,
                      z0) -> np.ndarray:
    geom = problem.set_geometry
    v0 = _as_vector(z0, geom.dim)
    if not geom.feasible_set.contains(v0):
        raise DomainError("z0 lies outside the feasible set")
    if schedule.L < problem.L - 1e-9 * max(1.0, problem.L):
        raise ConfigurationError(
            f"schedule built for L = {schedule.L}, problem needs L >= {problem.L}")
    if schedule.M < problem.M - 1e-9 * max(1.0, problem.M):
        raise ConfigurationError(
            f"schedule built for M = {schedule.M}, problem needs M >= {problem.M}")
    return v0


def _sliding_loop(problem: VIProblem, schedule: SlidingSchedule, z0: np.ndarray,
                  h_oracle: Callable[[np.ndarray], np.ndarray],
                  retain_iterates: bool) -> tuple[np.ndarray, RunTrace]:
    geom = problem.set_geometry
    fset = geom.feasible_set
    trace = RunTrace()
    z_bar = z0.copy()
    z_prev = z0.copy()
    n_grad = 0
    n_h = 0
    for k in range(1, schedule.N + 1):
        t0 = time.perf_counter()
        gk = schedule.gamma[k - 1]
        bk = schedule.beta[k - 1]
        tk = int(schedule.T[k - 1])
        z_under = (1.0 - gk) * z_bar + gk * z_prev
        g_cached = problem.grad_G(z_under)  # constant across the inner loop
        n_grad += 1
        trace.communication_rounds += problem.rounds_per_grad_G
        z_t = z_prev.copy()
        z_tilde_sum = np.zeros_like(z_t)
        for t in range(1, tk + 1):
            et = schedule.eta(k, t)
            z_tilde_t = _prox_kernel(geom, g_cached + h_oracle(z_t), z_prev, bk, z_t, et)
            z_next = _prox_kernel(geom, g_cached + h_oracle(z_tilde_t), z_prev, bk, z_t, et)
            n_h += 2
            z_tilde_sum += z_tilde_t
            z_t = z_next
        z_tilde = z_tilde_sum / tk
        z_bar = (1.0 - gk) * z_bar + gk * z_tilde
        z_prev = z_t
        if not np.all(np.isfinite(z_bar)):
            raise DomainError(f"non-finite iterate produced at outer iteration {k}")
        if not (fset.contains(z_bar) and fset.contains(z_prev)):
            raise DomainError(f"iterate left the feasible set at outer iteration {k}")
        trace.inner_steps.append(tk)
        trace.grad_G_calls.append(n_grad)
        trace.H_calls.append(n_h)
        trace.gap_estimate.append(math.nan)
        trace.consensus_x.append(math.nan)
        trace.consensus_y.append(math.nan)
        trace.wall_ms.append((time.perf_counter() - t0) * 1000.0)
        if retain_iterates:
            trace.z_bar_snapshots.append(z_bar.copy())
            trace.z_snapshots.append(z_prev.copy())
            trace.z_under_snapshots.append(z_under.copy())
    trace.final = z_bar.copy()
    return z_bar, trace


def mps_run(problem: VIProblem, schedule: SlidingSchedule, z0,
            retain_iterates: bool = False) -> tuple[np.ndarray, RunTrace]:
    """Run the deterministic mirror-prox sliding method.

    Parameters
    ----------
    problem : VIProblem
        Deterministic problem (``sigma`` must be 0); its ``H`` is called twice
        per inner step, its ``grad_G`` once per outer iteration (cached at the
        sliding point, which does not change within the inner loop).
    schedule : SlidingSchedule
        Typically from :func:`deterministic_schedule`.
    z0 : array
        Feasible start.

    Returns
    -------
    (z_bar_N, RunTrace)
        The ergodic output point and per-iteration telemetry.
    """
    schedule.validate()
    if problem.sigma != 0.0:
        raise ConfigurationError("mps_run requires a deterministic problem (sigma = 0)")
    v0 = _check_run_inputs(problem, schedule, z0)
    return _sliding_loop(problem, schedule, v0, problem.H, retain_iterates)


def smps_run(problem: VIProblem, schedule: SlidingSchedule, z0, seed: int,
             retain_iterates: bool = False) -> tuple[np.ndarray, RunTrace]:
    """Run the stochastic variant: identical control flow to :func:`mps_run`
    with the two inner prox calls fed fresh independent samples
    H(z_k^{t-1}; zeta) and H(z_tilde_k^t; zeta'). Fully reproducible per seed.
    """
    schedule.validate()
    if problem.H_stochastic is None:
        raise ConfigurationError("smps_run needs problem.H_stochastic")
    v0 = _check_run_inputs(problem, schedule, z0)
    rng = np.random.default_rng(seed)

    def h_noisy(z: np.ndarray) -> np.ndarray:
        return problem.H_stochastic(z, rng)

    return _sliding_loop(problem, schedule, v0, h_noisy, retain_iterates)


def q_gap(problem: VIProblem, z_bar, z) -> float:
    """Gap function Q(z_bar, z) = G(z_bar) - G(z) + <H(z), z_bar - z>."""
    geom = problem.set_geometry
    v1 = _as_vector(z_bar, geom.dim)
    v2 = _as_vector(z, geom.dim)
    if not geom.feasible_set.contains(v1):
        raise DomainError("z_bar lies outside the feasible set")
    if not geom.feasible_set.contains(v2):
        raise DomainError("z lies outside the feasible set")
    if problem.value_G is None:
        raise ConfigurationError("q_gap needs problem.value_G")
    return float(problem.value_G(v1) - problem.value_G(v2)
                 + np.dot(problem.H(v2), v1 - v2))
