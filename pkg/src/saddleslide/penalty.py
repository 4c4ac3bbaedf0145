"""Penalty reformulation of consensus-constrained saddle problems.

The target problem is min over stacked x, max over stacked y of
F(x, y) = sum_i f_i(x_i, y_i) subject to consensus (W_x x = 0, W_y y = 0).
The constraints are moved into the objective as quadratic penalties
(R_alpha^2/eps) ||W_x x||^2 on the x side and a matching term on the y side,
with R^2 = (subgradient bound)^2 / lambda_min_plus.  Any eps-solution of the
penalized saddle problem is then an O(eps)-solution of the constrained one,
and its consensus residual ||W x|| is O(eps / R).

Sign note: the saddle objective subtracts the concave y-penalty, but the VI
operator stacks (grad_x, -grad_y), so the smooth part enters the solver as
the convex potential G(z) = (R_alpha^2/eps)||W_x x||^2 +
(R_beta^2/eps)||W_y y||^2 with gradient positive on both blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateNetworkError,
    DimensionError,
    ParameterError,
)
from .geometry import SQUARED_EUCLIDEAN, FeasibleSet, GeometrySpec, ProductSet
from .network import NetworkModel
from .sliding import VIProblem


@dataclass
class StackedSPP:
    """Sum-type saddle problem stacked over m nodes.

    ``locals`` holds one oracle per node; each exposes ``value(x, y)`` and
    ``h(x, y)`` returning the pair (subgradient of f_i in x, subgradient of
    -f_i in y), which are the two blocks of the monotone operator H.
    ``set_x`` / ``set_y`` are the per-node feasible sets, shared by all nodes.

    ``batched_H`` / ``batched_value`` are optional vectorized equivalents
    taking (X, Y) with node rows; instance factories provide them so the
    solver hot loop avoids a per-node Python loop. ``linear_H``, when set, is
    the dense matrix of the stacked operator for families where H is linear
    (bilinear saddles), letting the hot loop evaluate H as one matvec.
    ``operator_bound`` is a uniform bound on ||H(z)|| over the stacked set
    when known analytically, and ``operator_lipschitz`` the exact Lipschitz
    constant of H when H is smooth (bilinear instances); all default to None.
    """

    locals: list
    d_x: int
    d_y: int
    set_x: FeasibleSet
    set_y: FeasibleSet
    dgf: str = SQUARED_EUCLIDEAN
    batched_H: Optional[Callable[[np.ndarray, np.ndarray], tuple]] = None
    batched_value: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    linear_H: Optional[np.ndarray] = None
    subgrad_bound_x: Optional[float] = None
    subgrad_bound_y: Optional[float] = None
    operator_bound: Optional[float] = None
    operator_lipschitz: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.locals:
            raise ParameterError("StackedSPP needs at least one local oracle")
        if self.set_x.dim != self.d_x or self.set_y.dim != self.d_y:
            raise DimensionError("per-node set dimensions must match d_x / d_y")

    @property
    def m(self) -> int:
        return len(self.locals)

    @property
    def dim(self) -> int:
        return self.m * (self.d_x + self.d_y)

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Stacked vector -> (X, Y) with one node per row."""
        m, dx = self.m, self.d_x
        cut = m * dx
        return z[:cut].reshape(m, dx), z[cut:].reshape(m, self.d_y)

    def join(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.concatenate([np.ravel(X), np.ravel(Y)])

    def H(self, z: np.ndarray) -> np.ndarray:
        """Stacked operator (subgrad_x f_i; subgrad_y(-f_i)) over all nodes."""
        if self.linear_H is not None:
            return self.linear_H @ z
        X, Y = self.split(z)
        if self.batched_H is not None:
            Hx, Hy = self.batched_H(X, Y)
        else:
            Hx = np.empty_like(X)
            Hy = np.empty_like(Y)
            for i, loc in enumerate(self.locals):
                Hx[i], Hy[i] = loc.h(X[i], Y[i])
        return np.concatenate([Hx.ravel(), Hy.ravel()])

    def value(self, z: np.ndarray) -> float:
        """F(x, y) = sum_i f_i(x_i, y_i)."""
        X, Y = self.split(z)
        if self.batched_value is not None:
            return float(np.sum(self.batched_value(X, Y)))
        return float(sum(loc.value(X[i], Y[i]) for i, loc in enumerate(self.locals)))

    def stacked_set(self) -> ProductSet:
        return ProductSet([self.set_x] * self.m + [self.set_y] * self.m)

    def stacked_geometry(self) -> GeometrySpec:
        return GeometrySpec(dgf=self.dgf, feasible_set=self.stacked_set())

    def center(self) -> np.ndarray:
        """Canonical start: per-block set centers, stacked."""
        return self.stacked_set().center()


@dataclass(frozen=True)
class PenaltyCoefficients:
    """Squared penalty radii and the accuracy they were derived for."""

    R_alpha_sq: float
    R_beta_sq: float
    epsilon: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ParameterError("epsilon must be a positive real")
        for name in ("R_alpha_sq", "R_beta_sq"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be a finite nonnegative real")


def penalty_coefficients(spp: StackedSPP, net_x: NetworkModel,
                         net_y: NetworkModel, epsilon: float,
                         subgrad_bound_x: float,
                         subgrad_bound_y: float) -> PenaltyCoefficients:
    """R_alpha_sq = subgrad_bound_x^2 / lambda_min_plus(W_tilde_x), same in y.

    The bounds must dominate the stacked subgradient norms over the whole
    feasible set; a uniform over-estimate only strengthens the penalty
    guarantee. A network without a positive eigenvalue cannot support a
    penalty and raises DegenerateNetworkError.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ParameterError("epsilon must be a positive real")
    for name, v in (("subgrad_bound_x", subgrad_bound_x),
                    ("subgrad_bound_y", subgrad_bound_y)):
        if not (np.isfinite(v) and v >= 0):
            raise ParameterError(f"{name} must be a finite nonnegative real")
    if net_x.m != spp.m or net_y.m != spp.m:
        raise DimensionError("network node counts must match the stacked problem")
    if net_x.lambda_min_plus is None or net_y.lambda_min_plus is None:
        raise DegenerateNetworkError(
            "penalty coefficients need a network with lambda_min_plus > 0")
    return PenaltyCoefficients(
        R_alpha_sq=subgrad_bound_x ** 2 / net_x.lambda_min_plus,
        R_beta_sq=subgrad_bound_y ** 2 / net_y.lambda_min_plus,
        epsilon=float(epsilon))


def sample_operator_bound(spp: StackedSPP, samples: int, seed,
                          inflate: float = 1.1) -> float:
    """Empirical uniform bound on ||H||: max over sampled feasible stacked
    points, inflated by a safety factor."""
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = spp.stacked_set().sample(rng, samples)
    worst = 0.0
    for row in pts:
        worst = max(worst, float(np.linalg.norm(spp.H(row))))
    return inflate * worst


def build_penalized_vi(spp: StackedSPP, net_x: NetworkModel,
                       net_y: NetworkModel, coeffs: PenaltyCoefficients,
                       epsilon: float) -> VIProblem:
    """Assemble the penalized VI the sliding solver consumes.

    The smooth part is G(z) = (R_alpha^2/eps)||W_x x||^2 +
    (R_beta^2/eps)||W_y y||^2 with gradient ((2R_alpha^2/eps) W_tilde_x x,
    (2R_beta^2/eps) W_tilde_y y) evaluated blockwise through the per-edge
    product, L = max over blocks of (2R^2/eps) lambda_max. One grad_G
    evaluation costs one communication round when both blocks share a network
    (the x and y blocks ride the same exchange), two otherwise, zero when the
    network is degenerate (G vanishes identically and the problem reduces to
    the centralized one; L then falls back to max(M, 1) because the step-size
    schedule divides by L, and any upper bound is valid for a constant G).

    The nonsmooth part keeps the stacked subgradient operator H with the
    bounded-operator certificate M = L0^2 / (2 eps), delta = 2 eps, where L0
    is spp.operator_bound or, failing that, a sampled estimate.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ParameterError("epsilon must be a positive real")
    if abs(coeffs.epsilon - epsilon) > 1e-12 * max(1.0, epsilon):
        raise ConfigurationError(
            f"coefficients were derived for epsilon = {coeffs.epsilon}, got {epsilon}")
    if net_x.m != spp.m or net_y.m != spp.m:
        raise ConfigurationError(
            f"network node counts ({net_x.m}, {net_y.m}) must match m = {spp.m}")
    m, dx, dy = spp.m, spp.d_x, spp.d_y
    cx = 2.0 * coeffs.R_alpha_sq / epsilon
    cy = 2.0 * coeffs.R_beta_sq / epsilon
    shared = net_x is net_y
    cut = m * dx

    L_pen = max(cx * net_x.lambda_max, cy * net_y.lambda_max)
    degenerate = L_pen == 0.0

    L0 = spp.operator_bound
    if L0 is None:
        L0 = sample_operator_bound(spp, samples=2000, seed=0)
    M = L0 ** 2 / (2.0 * epsilon)
    delta = 2.0 * epsilon
    L = max(M, 1.0) if degenerate else L_pen

    if degenerate:
        def grad_G(z: np.ndarray) -> np.ndarray:
            return np.zeros_like(z)

        def value_G(z: np.ndarray) -> float:
            return 0.0

        rounds = 0
    elif shared:
        def grad_G(z: np.ndarray) -> np.ndarray:
            V = np.empty((m, dx + dy))
            V[:, :dx] = z[:cut].reshape(m, dx)
            V[:, dx:] = z[cut:].reshape(m, dy)
            P = net_x.block_product(V)
            out = np.empty_like(z)
            out[:cut] = (cx * P[:, :dx]).ravel()
            out[cut:] = (cy * P[:, dx:]).ravel()
            return out

        def value_G(z: np.ndarray) -> float:
            X = z[:cut].reshape(m, dx)
            Y = z[cut:].reshape(m, dy)
            qx = float(np.sum(X * net_x.block_product(X)))
            qy = float(np.sum(Y * net_y.block_product(Y)))
            return 0.5 * (cx * qx + cy * qy)

        rounds = 1
    else:
        def grad_G(z: np.ndarray) -> np.ndarray:
            X = z[:cut].reshape(m, dx)
            Y = z[cut:].reshape(m, dy)
            out = np.empty_like(z)
            out[:cut] = (cx * net_x.block_product(X)).ravel()
            out[cut:] = (cy * net_y.block_product(Y)).ravel()
            return out

        def value_G(z: np.ndarray) -> float:
            X = z[:cut].reshape(m, dx)
            Y = z[cut:].reshape(m, dy)
            qx = float(np.sum(X * net_x.block_product(X)))
            qy = float(np.sum(Y * net_y.block_product(Y)))
            return 0.5 * (cx * qx + cy * qy)

        rounds = 2

    return VIProblem(
        set_geometry=spp.stacked_geometry(),
        grad_G=grad_G,
        L=L,
        H=spp.H,
        M=M,
        delta=delta,
        L0=float(L0),
        value_G=value_G,
        rounds_per_grad_G=rounds,
    )
