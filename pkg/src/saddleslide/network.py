"""Gossip topologies, Laplacian spectra and communication accounting.

A network holds the gossip matrix W_tilde (a graph Laplacian for the shipped
topologies: symmetric PSD, kernel containing the all-ones consensus
direction), its PSD square root W, and the spectral constants lambda_max,
lambda_min_plus and chi = lambda_max / lambda_min_plus.

The algorithm's data path multiplies W_tilde blockwise via per-edge
exchanges (each node combines its neighbors' blocks with Laplacian weights);
the square root W is used only for diagnostics such as the consensus
violation norm, since it would not be locally computable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import (
    ConfigurationError,
    DegenerateNetworkError,
    DimensionError,
    DomainError,
    ParameterError,
)

TOPOLOGY_KINDS = ("ring", "path", "star", "complete", "erdos_renyi")

# Eigenvalues below 1e-9 * lambda_max count as zero when locating lambda_min_plus.
TAU_EIG_REL = 1e-9


def matrix_sqrt_psd(A: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalue noise in [-tol, 0) is clamped to zero; asymmetry beyond tol or
    an eigenvalue below -tol is a domain error.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("matrix_sqrt_psd needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix contains non-finite entries")
    if np.max(np.abs(A - A.T)) > tol:
        raise DomainError("matrix is not symmetric to the given tolerance")
    lam, U = np.linalg.eigh(0.5 * (A + A.T))
    if np.min(lam) < -tol:
        raise DomainError(f"matrix has eigenvalue {np.min(lam)} < -tol, not PSD")
    root = U @ np.diag(np.sqrt(np.clip(lam, 0.0, None))) @ U.T
    return 0.5 * (root + root.T)


@dataclass
class NetworkModel:
    """Immutable gossip-network description; see module docstring.

    ``lambda_min_plus`` is None exactly for the degenerate single-node /
    zero-matrix network, where no positive eigenvalue exists.
    """

    m: int
    edges: list
    W_tilde: np.ndarray
    W: np.ndarray
    lambda_max: float
    lambda_min_plus: Optional[float]
    chi: Optional[float]
    _edge_i: np.ndarray = field(repr=False, default=None)
    _edge_j: np.ndarray = field(repr=False, default=None)
    _edge_w: np.ndarray = field(repr=False, default=None)
    _degree: np.ndarray = field(repr=False, default=None)

    @staticmethod
    def from_matrix(W_tilde: np.ndarray, edges: Optional[list] = None) -> "NetworkModel":
        Wt = np.asarray(W_tilde, dtype=float)
        m = Wt.shape[0]
        if Wt.ndim != 2 or Wt.shape != (m, m):
            raise DimensionError("gossip matrix must be square")
        if m > 512:
            raise ParameterError("dense network storage is limited to m <= 512")
        scale = max(1.0, float(np.max(np.abs(Wt))))
        if np.max(np.abs(Wt - Wt.T)) > 1e-9 * scale:
            raise DomainError("gossip matrix must be symmetric")
        if np.max(np.abs(Wt @ np.ones(m))) > 1e-8 * scale:
            raise DomainError("gossip matrix kernel must contain the consensus direction")
        lam = np.linalg.eigvalsh(0.5 * (Wt + Wt.T))
        if lam.min() < -1e-9 * scale:
            raise DomainError("gossip matrix must be positive semidefinite")
        lam_max = float(lam.max())
        cutoff = TAU_EIG_REL * lam_max
        positive = lam[lam > cutoff]
        n_zero = int(lam.size - positive.size)
        if m >= 2 and n_zero != 1:
            raise DegenerateNetworkError(
                "gossip matrix kernel must be exactly the consensus line, found "
                f"{n_zero} zero eigenvalues (disconnected topology?)")
        lam_min_plus = float(positive.min()) if positive.size else None
        chi = lam_max / lam_min_plus if lam_min_plus else None
        W = matrix_sqrt_psd(Wt, tol=1e-9 * scale) if lam_max > 0 else np.zeros_like(Wt)
        if edges is None:
            edges = [(i, j) for i in range(m) for j in range(i + 1, m)
                     if abs(Wt[i, j]) > 1e-12 * scale]
        ei = np.array([e[0] for e in edges], dtype=np.intp)
        ej = np.array([e[1] for e in edges], dtype=np.intp)
        ew = np.array([-Wt[e[0], e[1]] for e in edges], dtype=float)
        deg = np.diag(Wt).astype(float).copy()
        return NetworkModel(m=m, edges=list(edges), W_tilde=Wt, W=W,
                            lambda_max=lam_max, lambda_min_plus=lam_min_plus,
                            chi=chi, _edge_i=ei, _edge_j=ej, _edge_w=ew, _degree=deg)

    @staticmethod
    def single_node() -> "NetworkModel":
        """Degenerate m = 1 network: zero gossip matrix, no penalty possible."""
        return NetworkModel.from_matrix(np.zeros((1, 1)), edges=[])

    def block_product(self, V: np.ndarray) -> np.ndarray:
        """W_tilde applied to an (m, block_dim) matrix via per-edge exchanges."""
        out = self._degree[:, None] * V
        if self._edge_i.size:
            np.subtract.at(out, self._edge_i, self._edge_w[:, None] * V[self._edge_j])
            np.subtract.at(out, self._edge_j, self._edge_w[:, None] * V[self._edge_i])
        return out


def _topology_edges(kind: str, m: int, p: Optional[float],
                    seed: Optional[int]) -> list:
    if kind == "complete":
        return [(i, j) for i in range(m) for j in range(i + 1, m)]
    if kind == "ring":
        if m == 2:
            return [(0, 1)]
        return [(i, (i + 1) % m) for i in range(m)]
    if kind == "path":
        return [(i, i + 1) for i in range(m - 1)]
    if kind == "star":
        return [(0, i) for i in range(1, m)]
    if kind == "erdos_renyi":
        if p is None or not (0.0 < p <= 1.0):
            raise ParameterError("erdos_renyi needs edge probability p in (0, 1]")
        rng = np.random.default_rng(seed)
        for _ in range(10000):
            edges = [(i, j) for i in range(m) for j in range(i + 1, m)
                     if rng.random() < p]
            if _connected(m, edges):
                return edges
        raise ParameterError(
            f"erdos_renyi(p={p}) failed to produce a connected graph in 10000 tries")
    raise ParameterError(f"unknown topology kind {kind!r}")


def _connected(m: int, edges: list) -> bool:
    adj = [[] for _ in range(m)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == m


def build_topology(kind: str, m: int, p: Optional[float] = None,
                   seed: Optional[int] = None) -> NetworkModel:
    """Unweighted graph Laplacian network for a named topology.

    ``erdos_renyi`` samples G(m, p) with the given seed and retries until the
    graph is connected; the deterministic kinds are connected by construction.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 2):
        raise ParameterError("build_topology needs m >= 2")
    edges = _topology_edges(kind, int(m), p, seed)
    Wt = np.zeros((m, m))
    for i, j in edges:
        Wt[i, i] += 1.0
        Wt[j, j] += 1.0
        Wt[i, j] -= 1.0
        Wt[j, i] -= 1.0
    return NetworkModel.from_matrix(Wt, edges=edges)


def communication_round(net: NetworkModel, stacked, counter) -> np.ndarray:
    """One synchronous gossip round: blockwise W_tilde product on a stacked
    vector of dimension m * block_dim; increments
    ``counter.communication_rounds`` by exactly 1.
    """
    v = np.asarray(stacked, dtype=float).ravel()
    if v.size % net.m != 0:
        raise DimensionError(
            f"stacked dimension {v.size} is not a multiple of m = {net.m}")
    bd = v.size // net.m
    out = net.block_product(v.reshape(net.m, bd)).ravel()
    counter.communication_rounds += 1
    return out


def consensus_violation(net: NetworkModel, stacked) -> float:
    """||W . stacked||_2 with the square-root matrix W applied blockwise."""
    v = np.asarray(stacked, dtype=float).ravel()
    if v.size % net.m != 0:
        raise DimensionError(
            f"stacked dimension {v.size} is not a multiple of m = {net.m}")
    V = v.reshape(net.m, v.size // net.m)
    return float(np.linalg.norm(net.W @ V))


# -- description files and matrix export --------------------------------------

def save_network_spec(path, kind: str, m: int, p: Optional[float] = None,
                      seed: Optional[int] = None) -> None:
    """Write the {kind, m, p, seed} description file."""
    with open(path, "w") as fh:
        yaml.safe_dump({"kind": kind, "m": int(m), "p": p, "seed": seed},
                       fh, sort_keys=True)


def load_network_spec(path) -> NetworkModel:
    """Build the network a description file describes."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "kind" not in data or "m" not in data:
        raise ConfigurationError(f"network file {path} must define kind and m")
    return build_topology(data["kind"], int(data["m"]),
                          p=data.get("p"), seed=data.get("seed"))


def export_matrix_csv(net: NetworkModel, which: str, path) -> None:
    """Dump W_tilde ("laplacian") or W ("sqrt") as dense CSV for external checks."""
    if which == "laplacian":
        mat = net.W_tilde
    elif which == "sqrt":
        mat = net.W
    else:
        raise ParameterError('which must be "laplacian" or "sqrt"')
    np.savetxt(path, mat, delimiter=",")
