"""Concrete saddle instances and their ground-truth oracles.

Two families are shipped. Matrix games put f_i(x, y) = y^T A_i x on a pair of
probability simplices; the operator H is linear and smooth, the exact
primal-dual gap has a closed form by vertex enumeration, and subgradient /
operator bounds are analytic. The l1 family puts
f_i(x, y) = ||B_i x - c_i||_1 + y^T C_i x - ||y||_1 on boxes; H is genuinely
nonsmooth with sign-vector subgradients (sign(0) := 0, the minimal-norm
choice) and bounds computable from the data norms and box radius.

Also here: numerical certification of the inexact-oracle inequality, the
sup-gap oracle for penalized bilinear problems, and a consensus-constrained
QP family with a reference accelerated projected-gradient solver used to
validate the penalty reformulation end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import (
    CertificationError,
    ConfigurationError,
    DimensionError,
    DomainError,
    ParameterError,
)
from .geometry import SQUARED_EUCLIDEAN, Box, FeasibleSet, Simplex
from .network import NetworkModel
from .penalty import StackedSPP, sample_operator_bound
from .sliding import VIProblem

MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


# -- matrix games --------------------------------------------------------------

class _BilinearLocal:
    """Per-node oracle for f_i(x, y) = y^T A_i x."""

    __slots__ = ("A",)

    def __init__(self, A: np.ndarray):
        self.A = A

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(y @ self.A @ x)

    def h(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.A.T @ y, -(self.A @ x)


def make_matrix_game(A_list, m: int) -> StackedSPP:
    """Stacked zero-sum game: node i plays f_i(x_i, y_i) = y_i^T A_i x_i.

    The average matrix is kept in ``meta["A_bar"]`` for the exact gap oracle.
    Subgradient and operator bounds are exact: over the simplices,
    sup ||A^T y|| is the largest row norm and sup ||A x|| the largest column
    norm, both attained at vertices; H is linear with Lipschitz constant
    max_i sigma_max(A_i) and the dense stacked matrix is retained so the
    solver evaluates H as a single matvec.
    """
    if m < 1 or len(A_list) != m:
        raise DimensionError(f"need exactly m = {m} payoff matrices, got {len(A_list)}")
    mats = [np.asarray(A, dtype=float) for A in A_list]
    d_y, d_x = mats[0].shape
    for A in mats:
        if A.ndim != 2 or A.shape != (d_y, d_x):
            raise DimensionError("all payoff matrices must share one shape")
        if not np.all(np.isfinite(A)):
            raise DomainError("payoff matrices must be finite")
    A3 = np.stack(mats)
    maxrow_sq = (A3 ** 2).sum(axis=2).max(axis=1)   # sup ||A_i^T y||^2 over simplex
    maxcol_sq = (A3 ** 2).sum(axis=1).max(axis=1)   # sup ||A_i x||^2 over simplex

    dim = m * (d_x + d_y)
    B_op = np.zeros((dim, dim))
    for i in range(m):
        xs = slice(i * d_x, (i + 1) * d_x)
        ys = slice(m * d_x + i * d_y, m * d_x + (i + 1) * d_y)
        B_op[xs, ys] = A3[i].T
        B_op[ys, xs] = -A3[i]

    def batched_H(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (np.einsum("nji,nj->ni", A3, Y), -np.einsum("nij,nj->ni", A3, X))

    def batched_value(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.einsum("nj,nji,ni->n", Y, A3, X)

    return StackedSPP(
        locals=[_BilinearLocal(A3[i]) for i in range(m)],
        d_x=d_x,
        d_y=d_y,
        set_x=Simplex(d_x),
        set_y=Simplex(d_y),
        dgf=SQUARED_EUCLIDEAN,
        batched_H=batched_H,
        batched_value=batched_value,
        linear_H=B_op,
        subgrad_bound_x=math.sqrt(float(maxrow_sq.sum())),
        subgrad_bound_y=math.sqrt(float(maxcol_sq.sum())),
        operator_bound=math.sqrt(float(maxrow_sq.sum() + maxcol_sq.sum())),
        operator_lipschitz=float(max(np.linalg.norm(A, 2) for A in mats)),
        meta={"family": "matrix_game", "A": A3, "A_bar": A3.mean(axis=0)},
    )


def random_matrix_game(m: int, d_x: int, d_y: int, seed,
                       scale: float = 1.0) -> StackedSPP:
    """m payoff matrices with entries uniform on [-scale, scale]."""
    rng = np.random.default_rng(seed)
    return make_matrix_game([scale * rng.uniform(-1.0, 1.0, (d_y, d_x))
                             for _ in range(m)], m)


def exact_gap_matrix_game(A_bar, x, y) -> float:
    """Exact primal-dual gap max_j (A x)_j - min_i (A^T y)_i.

    The inner sup/inf over the simplices are attained at vertices, so this is
    the true value of sup over feasible (x', y') of y'^T A x - y^T A x'.
    Nonnegative for feasible inputs by weak duality.
    """
    A = np.asarray(A_bar, dtype=float)
    vx = np.asarray(x, dtype=float)
    vy = np.asarray(y, dtype=float)
    if A.ndim != 2 or vx.shape != (A.shape[1],) or vy.shape != (A.shape[0],):
        raise DimensionError("gap oracle needs x, y matching the matrix shape")
    for v in (vx, vy):
        if np.any(v < -1e-9) or abs(float(v.sum()) - 1.0) > 1e-6:
            raise DomainError("gap oracle needs simplex-feasible x and y")
    return float(np.max(A @ vx) - np.min(A.T @ vy))


# -- l1-regularized bilinear saddles -------------------------------------------

class _L1Local:
    """Per-node oracle for f_i(x, y) = ||B x - c||_1 + y^T C x - ||y||_1."""

    __slots__ = ("B", "c", "C")

    def __init__(self, B: np.ndarray, c: np.ndarray, C: np.ndarray):
        self.B = B
        self.c = c
        self.C = C

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.abs(self.B @ x - self.c).sum() + y @ self.C @ x
                     - np.abs(y).sum())

    def h(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.sign(self.B @ x - self.c)
        return self.B.T @ s + self.C.T @ y, np.sign(y) - self.C @ x


def make_l1_saddle(B_list, c_list, C_list, box_radius: float) -> StackedSPP:
    """Stacked nonsmooth saddle on boxes [-box_radius, box_radius] per block.

    Subgradients use sign(0) = 0. The per-node bounds combine operator norms
    with the worst sign vector and box corner:
    ||B^T s + C^T y|| <= sigma_max(B) sqrt(p) + sigma_max(C) r sqrt(d_y) and
    ||sign(y) - C x|| <= sqrt(d_y) + sigma_max(C) r sqrt(d_x).
    """
    m = len(B_list)
    if m < 1 or len(c_list) != m or len(C_list) != m:
        raise DimensionError("B_list, c_list, C_list must have equal length >= 1")
    if not (np.isfinite(box_radius) and box_radius > 0):
        raise ParameterError("box_radius must be a positive real")
    B3 = np.stack([np.asarray(B, dtype=float) for B in B_list])
    c2 = np.stack([np.asarray(c, dtype=float) for c in c_list])
    C3 = np.stack([np.asarray(C, dtype=float) for C in C_list])
    p, d_x = B3.shape[1], B3.shape[2]
    d_y = C3.shape[1]
    if c2.shape != (m, p) or C3.shape != (m, d_y, d_x):
        raise DimensionError("inconsistent l1 instance dimensions")
    if not (np.all(np.isfinite(B3)) and np.all(np.isfinite(c2))
            and np.all(np.isfinite(C3))):
        raise DomainError("l1 instance data must be finite")
    r = float(box_radius)
    sig_B = np.array([np.linalg.norm(B3[i], 2) for i in range(m)])
    sig_C = np.array([np.linalg.norm(C3[i], 2) for i in range(m)])
    bx = sig_B * math.sqrt(p) + sig_C * r * math.sqrt(d_y)
    by = math.sqrt(d_y) + sig_C * r * math.sqrt(d_x)

    def batched_H(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        S = np.sign(np.einsum("npi,ni->np", B3, X) - c2)
        Hx = np.einsum("npi,np->ni", B3, S) + np.einsum("nji,nj->ni", C3, Y)
        Hy = np.sign(Y) - np.einsum("nij,nj->ni", C3, X)
        return Hx, Hy

    def batched_value(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        R = np.einsum("npi,ni->np", B3, X) - c2
        return (np.abs(R).sum(axis=1) + np.einsum("nj,nji,ni->n", Y, C3, X)
                - np.abs(Y).sum(axis=1))

    return StackedSPP(
        locals=[_L1Local(B3[i], c2[i], C3[i]) for i in range(m)],
        d_x=d_x,
        d_y=d_y,
        set_x=Box(-r * np.ones(d_x), r * np.ones(d_x)),
        set_y=Box(-r * np.ones(d_y), r * np.ones(d_y)),
        dgf=SQUARED_EUCLIDEAN,
        batched_H=batched_H,
        batched_value=batched_value,
        subgrad_bound_x=math.sqrt(float(np.sum(bx ** 2))),
        subgrad_bound_y=math.sqrt(float(np.sum(by ** 2))),
        operator_bound=math.sqrt(float(np.sum(bx ** 2 + by ** 2))),
        meta={"family": "l1_saddle", "B": B3, "c": c2, "C": C3, "box_radius": r},
    )


def random_l1_saddle(m: int, d_x: int, d_y: int, seed,
                     box_radius: float = 1.0) -> StackedSPP:
    """Random l1 instance with diagonal sensing matrices.

    Diagonal B keeps the x best response coordinate-separable, so the exact
    primal-dual gap oracle (:func:`l1_saddle_gap`) stays closed-form.
    """
    rng = np.random.default_rng(seed)
    B_list = [np.diag(rng.uniform(0.5, 1.5, d_x)) for _ in range(m)]
    c_list = [rng.uniform(-1.0, 1.0, d_x) for _ in range(m)]
    C_list = [rng.uniform(-0.5, 0.5, (d_y, d_x)) for _ in range(m)]
    return make_l1_saddle(B_list, c_list, C_list, box_radius)


def l1_saddle_gap(spp: StackedSPP, x, y) -> float:
    """Exact primal-dual gap of the node-averaged l1 objective at (x, y).

    Needs diagonal B_i. Both best responses are coordinate-separable: the y
    response is r * max(0, |(C_bar x)_j| - 1) per coordinate, and the x
    response minimizes a piecewise-linear function whose optimum sits at a
    box edge or a kink c_ij / b_ij, so scanning those candidates is exact.
    """
    if spp.meta.get("family") != "l1_saddle":
        raise ParameterError("l1_saddle_gap needs an l1 saddle instance")
    B3, c2, C3 = spp.meta["B"], spp.meta["c"], spp.meta["C"]
    r = spp.meta["box_radius"]
    m, p, d_x = B3.shape
    if p != d_x or np.max(np.abs(B3 - B3 * np.eye(d_x))) > 0.0:
        raise ParameterError("closed-form l1 gap needs diagonal B_i")
    vx = np.asarray(x, dtype=float)
    vy = np.asarray(y, dtype=float)
    if vx.shape != (d_x,) or vy.shape != (C3.shape[1],):
        raise DimensionError("l1 gap oracle got points of the wrong dimension")
    C_bar = C3.mean(axis=0)
    diag = B3[:, np.arange(d_x), np.arange(d_x)]          # (m, d_x)

    # sup over y' of f_bar(x, y'): separable, r * max(0, |(C_bar x)_j| - 1)
    resid = diag * vx[None, :] - c2
    f_sup = float(np.abs(resid).sum() / m
                  + r * np.maximum(0.0, np.abs(C_bar @ vx) - 1.0).sum())

    # inf over x' of f_bar(x', y): per coordinate, scan kinks and box edges
    g = C_bar.T @ vy
    f_inf = -float(np.abs(vy).sum())
    for j in range(d_x):
        bj = diag[:, j]
        cands = [-r, r]
        nz = bj != 0.0
        cands.extend(np.clip(c2[nz, j] / bj[nz], -r, r).tolist())
        t = np.array(cands)
        vals = np.abs(np.outer(bj, t) - c2[:, j][:, None]).sum(axis=0) / m + g[j] * t
        f_inf += float(vals.min())
    return f_sup - f_inf


# -- operator bound and oracle certification -----------------------------------

def operator_bound_L0(spp: StackedSPP, samples: int, seed) -> float:
    """Uniform bound on ||H|| over the stacked feasible set.

    Matrix games return the analytic supremum (exact, attained at vertices);
    other families return the sampled maximum inflated by 1.1.
    """
    if spp.meta.get("family") == "matrix_game":
        return float(spp.operator_bound)
    return sample_operator_bound(spp, samples, seed, inflate=1.1)


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a passed inexact-oracle certification."""

    M: float
    delta: float
    triples: int
    worst_slack: float
    mean_slack: float
    seed: object

    def __str__(self) -> str:
        return (f"certified ({self.triples} triples): M = {self.M}, "
                f"delta = {self.delta}, worst slack = {self.worst_slack:.3e}")


def certify_inexact_oracle(H: Callable[[np.ndarray], np.ndarray],
                           feasible_set: FeasibleSet, M: float, delta: float,
                           triples: int, seed) -> CertificateReport:
    """Sample feasible triples (z1, z2, z3) and check the inexact inequality

    <H(z1) - H(z2), z1 - z3> <= M/2 ||z1-z2||^2 + M/2 ||z1-z3||^2 + delta,

    with 1e-9 additive slack for float noise. Returns the report with the
    worst (smallest) observed slack; a violated triple raises
    CertificationError carrying the witness on the exception.
    """
    if triples < 1:
        raise ParameterError("triples must be >= 1")
    if not (np.isfinite(M) and M >= 0 and np.isfinite(delta) and delta >= 0):
        raise ParameterError("certification needs finite M >= 0 and delta >= 0")
    rng = np.random.default_rng(seed)
    Z1 = feasible_set.sample(rng, triples)
    Z2 = feasible_set.sample(rng, triples)
    Z3 = feasible_set.sample(rng, triples)
    H1 = np.empty_like(Z1)
    H2 = np.empty_like(Z2)
    for i in range(triples):
        H1[i] = H(Z1[i])
        H2[i] = H(Z2[i])
    d13 = Z1 - Z3
    lhs = np.einsum("ij,ij->i", H1 - H2, d13)
    rhs = (0.5 * M * np.einsum("ij,ij->i", Z1 - Z2, Z1 - Z2)
           + 0.5 * M * np.einsum("ij,ij->i", d13, d13) + delta)
    slack = rhs - lhs
    worst = int(np.argmin(slack))
    if slack[worst] < -1e-9:
        err = CertificationError(
            f"inexact-oracle condition violated: slack {slack[worst]:.3e} "
            f"at triple {worst} of {triples} (M = {M}, delta = {delta})")
        err.witness = (Z1[worst], Z2[worst], Z3[worst])
        raise err
    return CertificateReport(M=float(M), delta=float(delta), triples=triples,
                             worst_slack=float(slack[worst]),
                             mean_slack=float(slack.mean()), seed=seed)


# -- sup-gap oracle for penalized bilinear problems ----------------------------

def sup_gap_skew_linear(problem: VIProblem, z_bar, restarts: int = 8,
                        seed=0) -> float:
    """sup over feasible z of Q(z_bar, z) for skew-linear H and convex G.

    For skew-linear H, <H(z), z_bar - z> = -<H(z_bar), z>, so the supremum is
    a concave maximization G(z_bar) - min_z [G(z) + <H(z_bar), z>] solved by
    SLSQP over the simplex/box structure; every local optimum is global, the
    restarts only guard against solver stalls.
    """
    geom = problem.set_geometry
    fset = geom.feasible_set
    if problem.value_G is None:
        raise ConfigurationError("sup-gap oracle needs problem.value_G")
    zb = np.asarray(z_bar, dtype=float)
    if not fset.contains(zb):
        raise DomainError("z_bar lies outside the feasible set")
    h_zb = problem.H(zb)
    skew = abs(float(np.dot(h_zb, zb)))
    if skew > 1e-8 * (1.0 + np.linalg.norm(h_zb) * np.linalg.norm(zb)):
        raise ConfigurationError("H is not skew at z_bar; oracle inapplicable")
    G_zb = float(problem.value_G(zb))

    def f(z: np.ndarray) -> float:
        return float(problem.value_G(z) + h_zb @ z)

    def jac(z: np.ndarray) -> np.ndarray:
        return problem.grad_G(z) + h_zb

    bounds = []
    constraints = []
    off = 0
    for leaf in fset.leaves():
        a, b = off, off + leaf.dim
        if isinstance(leaf, Simplex):
            bounds.extend([(0.0, 1.0)] * leaf.dim)
            grad_row = np.zeros(fset.dim)
            grad_row[a:b] = 1.0
            constraints.append({
                "type": "eq",
                "fun": (lambda z, a=a, b=b: float(z[a:b].sum()) - 1.0),
                "jac": (lambda z, row=grad_row: row),
            })
        elif isinstance(leaf, Box):
            bounds.extend(list(zip(leaf.lower, leaf.upper)))
        else:
            raise ParameterError("sup-gap oracle supports simplex and box blocks")
        off += leaf.dim

    rng = np.random.default_rng(seed)
    starts = [zb, fset.center()]
    if restarts > len(starts):
        starts.extend(fset.sample(rng, restarts - len(starts)))
    best = min(f(s) for s in starts)
    for s in starts:
        res = optimize.minimize(f, s, jac=jac, method="SLSQP", bounds=bounds,
                                constraints=constraints,
                                options={"maxiter": 300, "ftol": 1e-12})
        cand = fset.project(res.x)
        best = min(best, f(cand))
    return G_zb - best


# -- consensus-constrained QPs and the reference solver ------------------------

@dataclass
class ConsensusQP:
    """min over stacked x of u(x) = sum_i (x_i^T P_i x_i / 2 + q_i^T x_i)
    subject to consensus W x = 0, with wide box bounds that stay inactive.

    ``R_sq`` is ||grad u(x*)||^2 / lambda_min_plus, the penalty radius the
    reformulation needs; ``U`` is the penalized objective
    u(x) + (R_sq / epsilon) ||W x||^2.
    """

    P: np.ndarray
    q: np.ndarray
    net: NetworkModel
    epsilon: float
    box_half_width: float
    R_sq: float
    w_star: np.ndarray
    u_star: float
    mu: float
    L_u: float

    @property
    def m(self) -> int:
        return self.P.shape[0]

    @property
    def d(self) -> int:
        return self.P.shape[2]

    def u(self, X: np.ndarray) -> float:
        quad = np.einsum("ni,nij,nj->", X, self.P, X)
        return float(0.5 * quad + np.sum(self.q * X))

    def grad_u(self, X: np.ndarray) -> np.ndarray:
        return np.einsum("nij,nj->ni", self.P, X) + self.q

    def penalty_scale(self) -> float:
        return 2.0 * self.R_sq / self.epsilon

    def U(self, X: np.ndarray) -> float:
        return self.u(X) + 0.5 * self.penalty_scale() * float(
            np.sum(X * self.net.block_product(X)))

    def grad_U(self, X: np.ndarray) -> np.ndarray:
        return self.grad_u(X) + self.penalty_scale() * self.net.block_product(X)

    def L_U(self) -> float:
        return self.L_u + self.penalty_scale() * self.net.lambda_max

    def project(self, X: np.ndarray) -> np.ndarray:
        w = self.box_half_width
        return np.clip(X, -w, w)

    def solve_penalized_exact(self) -> np.ndarray:
        """Unconstrained minimizer of U by one dense linear solve; valid while
        the box stays inactive (checked)."""
        m, d = self.m, self.d
        A = np.zeros((m * d, m * d))
        for i in range(m):
            A[i * d:(i + 1) * d, i * d:(i + 1) * d] = self.P[i]
        A += self.penalty_scale() * np.kron(self.net.W_tilde, np.eye(d))
        X = np.linalg.solve(A, -self.q.ravel()).reshape(m, d)
        if np.max(np.abs(X)) > self.box_half_width:
            raise DomainError("penalized minimizer escaped the box; widen it")
        return X


def make_consensus_qp(m: int, d: int, net: NetworkModel, epsilon: float,
                      seed) -> ConsensusQP:
    """Random strongly convex consensus QP; P_i eigenvalues in [0.5, 2]."""
    if net.m != m:
        raise DimensionError("network node count must equal m")
    if net.lambda_min_plus is None:
        raise ParameterError("consensus QP needs a connected network")
    rng = np.random.default_rng(seed)
    P = np.empty((m, d, d))
    for i in range(m):
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        P[i] = Q @ np.diag(rng.uniform(0.5, 2.0, d)) @ Q.T
    q = rng.uniform(-1.0, 1.0, (m, d))
    w_star = np.linalg.solve(P.sum(axis=0), -q.sum(axis=0))
    X_star = np.tile(w_star, (m, 1))
    g_star = np.einsum("nij,j->ni", P, w_star) + q
    R_sq = float(np.sum(g_star ** 2)) / net.lambda_min_plus
    u_star = float(0.5 * np.einsum("ni,nij,nj->", X_star, P, X_star)
                   + np.sum(q * X_star))
    eigs = np.linalg.eigvalsh(P)
    return ConsensusQP(P=P, q=q, net=net, epsilon=float(epsilon),
                       box_half_width=10.0, R_sq=R_sq, w_star=w_star,
                       u_star=u_star, mu=float(eigs.min()),
                       L_u=float(eigs.max()))


def accelerated_projected_gradient(grad: Callable[[np.ndarray], np.ndarray],
                                   project: Callable[[np.ndarray], np.ndarray],
                                   x0: np.ndarray, lipschitz: float, mu: float,
                                   tol: float, max_iter: int = 200000,
                                   return_path: bool = False):
    """Projected gradient with strong-convexity momentum (constant step 1/L,
    momentum (sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu))).

    Stops when the gradient-mapping norm L * ||y - project(y - grad(y)/L)||
    drops to ``tol``. Returns the final point, or (point, path) with all
    accepted iterates when ``return_path`` is set.
    """
    if not (lipschitz > 0 and 0 < mu <= lipschitz):
        raise ParameterError("needs 0 < mu <= lipschitz")
    theta = ((math.sqrt(lipschitz) - math.sqrt(mu))
             / (math.sqrt(lipschitz) + math.sqrt(mu)))
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    path = [x.copy()] if return_path else None
    for _ in range(max_iter):
        x_new = project(y - grad(y) / lipschitz)
        if lipschitz * float(np.linalg.norm(x_new - y)) <= tol:
            x = x_new
            if return_path:
                path.append(x.copy())
            break
        y = x_new + theta * (x_new - x)
        x = x_new
        if return_path:
            path.append(x.copy())
    else:
        raise DomainError(f"projected gradient did not reach tol = {tol} "
                          f"within {max_iter} iterations")
    return (x, path) if return_path else x


# -- instance files -------------------------------------------------------------

def _write_matrix(fh, label: str, A: np.ndarray) -> None:
    fh.write(f"matrix {label} {A.shape[0]} {A.shape[1]}\n")
    for row in A:
        fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _write_vector(fh, label: str, v: np.ndarray) -> None:
    fh.write(f"vector {label} {v.shape[0]}\n")
    fh.write(" ".join(repr(float(x)) for x in v) + "\n")


def save_instance(spp: StackedSPP, path) -> None:
    """Write the instance as structured text (dimensions header, matrices
    row-major). The format round-trips exactly: write -> read -> write yields
    identical bytes."""
    family = spp.meta.get("family")
    with open(path, "w") as fh:
        fh.write("saddleslide-instance 1\n")
        fh.write(f"family {family}\n")
        fh.write(f"m {spp.m}\nd_x {spp.d_x}\nd_y {spp.d_y}\n")
        if family == "matrix_game":
            for i in range(spp.m):
                _write_matrix(fh, f"A[{i}]", spp.meta["A"][i])
        elif family == "l1_saddle":
            fh.write(f"p {spp.meta['B'].shape[1]}\n")
            fh.write(f"box_radius {repr(float(spp.meta['box_radius']))}\n")
            for i in range(spp.m):
                _write_matrix(fh, f"B[{i}]", spp.meta["B"][i])
                _write_vector(fh, f"c[{i}]", spp.meta["c"][i])
                _write_matrix(fh, f"C[{i}]", spp.meta["C"][i])
        else:
            raise ParameterError(f"cannot serialize instance family {family!r}")


class _LineReader:
    def __init__(self, text: str):
        self.lines = [ln.rstrip("\n") for ln in text.splitlines()]
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise ConfigurationError("instance file ended early")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def expect_kv(self, key: str) -> str:
        parts = self.next().split()
        if len(parts) != 2 or parts[0] != key:
            raise ConfigurationError(f"instance file: expected '{key} <value>'")
        return parts[1]


def _read_matrix(rd: _LineReader, label: str) -> np.ndarray:
    parts = rd.next().split()
    if len(parts) != 4 or parts[0] != "matrix" or parts[1] != label:
        raise ConfigurationError(f"instance file: expected matrix {label}")
    rows, cols = int(parts[2]), int(parts[3])
    data = [[float(v) for v in rd.next().split()] for _ in range(rows)]
    A = np.array(data, dtype=float)
    if A.shape != (rows, cols):
        raise ConfigurationError(f"matrix {label} has inconsistent shape")
    return A


def _read_vector(rd: _LineReader, label: str) -> np.ndarray:
    parts = rd.next().split()
    if len(parts) != 3 or parts[0] != "vector" or parts[1] != label:
        raise ConfigurationError(f"instance file: expected vector {label}")
    n = int(parts[2])
    v = np.array([float(x) for x in rd.next().split()], dtype=float)
    if v.shape != (n,):
        raise ConfigurationError(f"vector {label} has inconsistent length")
    return v


def load_instance(path) -> StackedSPP:
    """Read an instance file written by :func:`save_instance`."""
    with open(path) as fh:
        rd = _LineReader(fh.read())
    header = rd.next().split()
    if header[:1] != ["saddleslide-instance"]:
        raise ConfigurationError(f"{path} is not an instance file")
    family = rd.expect_kv("family")
    m = int(rd.expect_kv("m"))
    d_x = int(rd.expect_kv("d_x"))
    d_y = int(rd.expect_kv("d_y"))
    if family == "matrix_game":
        A_list = [_read_matrix(rd, f"A[{i}]") for i in range(m)]
        for A in A_list:
            if A.shape != (d_y, d_x):
                raise ConfigurationError("payoff matrix shape mismatch in file")
        return make_matrix_game(A_list, m)
    if family == "l1_saddle":
        p = int(rd.expect_kv("p"))
        r = float(rd.expect_kv("box_radius"))
        B_list, c_list, C_list = [], [], []
        for i in range(m):
            B_list.append(_read_matrix(rd, f"B[{i}]"))
            c_list.append(_read_vector(rd, f"c[{i}]"))
            C_list.append(_read_matrix(rd, f"C[{i}]"))
            if B_list[-1].shape != (p, d_x) or C_list[-1].shape != (d_y, d_x):
                raise ConfigurationError("l1 matrix shape mismatch in file")
        return make_l1_saddle(B_list, c_list, C_list, r)
    raise ConfigurationError(f"unknown instance family {family!r} in {path}")
