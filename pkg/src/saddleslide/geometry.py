"""Feasible sets, Bregman geometry and the two-anchor prox mapping.

Points are dense float64 vectors; block structure lives in the feasible set.
Supported set kinds are boxes, euclidean balls, probability simplexes and
finite products of those. A geometry pairs a set with a distance generating
function: squared euclidean distance (any set) or negative entropy (simplex
blocks only).

The divergence convention is ``bregman_divergence(geom, a, b)`` = divergence
of ``a`` relative to the anchor ``b``; for entropy that is KL(a || b). The
solver measures distances from an anchor via ``bregman_divergence(geom, z,
anchor)``, which is the quantity the two-anchor prox penalizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, ParameterError

# Feasibility slack applied to every membership test.
TAU_FEAS = 1e-9
# Entropy terms clip their log arguments at this floor.
ENTROPY_CLIP = 1e-30

SQUARED_EUCLIDEAN = "squared_euclidean"
NEGATIVE_ENTROPY = "negative_entropy"


def _as_vector(p, dim: int) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.ndim != 1 or v.shape[0] != dim:
        raise DimensionError(f"expected a vector of length {dim}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("point contains non-finite entries")
    return v


class FeasibleSet:
    """Base class; subclasses implement contains/project over their own kind."""

    dim: int = 0
    kind: str = "abstract"

    def contains(self, p, tol: float = TAU_FEAS) -> bool:
        raise NotImplementedError

    def project(self, p) -> np.ndarray:
        raise NotImplementedError

    # Interior point used as a generic reference/start.
    def center(self) -> np.ndarray:
        raise NotImplementedError

    # Squared euclidean diameter, exact for every supported kind.
    def diameter_sq(self) -> float:
        raise NotImplementedError

    # n independent uniform-ish feasible points, one per row.
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    # Hot-loop projection hook: v is already a validated float vector.
    def _project_vec(self, v: np.ndarray) -> np.ndarray:
        return self.project(v)

    def leaves(self) -> list["FeasibleSet"]:
        return [self]


class Box(FeasibleSet):
    """Axis-aligned box {p : lower <= p <= upper}."""

    kind = "box"

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float).ravel()
        self.upper = np.asarray(upper, dtype=float).ravel()
        if self.lower.shape != self.upper.shape:
            raise DimensionError("box bounds must have equal length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise DomainError("box bounds must be finite")
        if np.any(self.lower > self.upper):
            raise DomainError("box has empty intervals (lower > upper)")
        self.dim = self.lower.shape[0]

    def contains(self, p, tol: float = TAU_FEAS) -> bool:
        v = _as_vector(p, self.dim)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def project(self, p) -> np.ndarray:
        return np.clip(_as_vector(p, self.dim), self.lower, self.upper)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def diameter_sq(self) -> float:
        return float(np.sum((self.upper - self.lower) ** 2))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


class Ball(FeasibleSet):
    """Euclidean ball {p : ||p - center|| <= radius}."""

    kind = "ball"

    def __init__(self, center, radius: float):
        self._center = np.asarray(center, dtype=float).ravel()
        if not np.all(np.isfinite(self._center)):
            raise DomainError("ball center must be finite")
        if not (np.isfinite(radius) and radius > 0):
            raise ParameterError("ball radius must be positive")
        self.radius = float(radius)
        self.dim = self._center.shape[0]

    def contains(self, p, tol: float = TAU_FEAS) -> bool:
        v = _as_vector(p, self.dim)
        return bool(np.linalg.norm(v - self._center) <= self.radius + tol)

    def project(self, p) -> np.ndarray:
        v = _as_vector(p, self.dim)
        d = v - self._center
        n = np.linalg.norm(d)
        if n <= self.radius:
            return v
        return self._center + d * (self.radius / n)

    def center(self) -> np.ndarray:
        return self._center.copy()

    def diameter_sq(self) -> float:
        return (2.0 * self.radius) ** 2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        dirs = rng.standard_normal((n, self.dim))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
        radii = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self._center + radii[:, None] * dirs


def _project_simplex_rows(V: np.ndarray) -> np.ndarray:
    # Euclidean projection of every row onto the probability simplex,
    # by the sorted cumulative-sum threshold rule.
    n, d = V.shape
    if d == 1:
        return np.ones_like(V)
    if d == 2:
        # closed form: project onto the line x0 + x1 = 1, then clip
        t = np.clip((V[:, 0] - V[:, 1] + 1.0) * 0.5, 0.0, 1.0)
        return np.stack((t, 1.0 - t), axis=1)
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    j = np.arange(1, d + 1, dtype=float)
    cond = U > css / j
    # largest index with cond true; cond[:, 0] is always true
    rho = d - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), rho] / (rho + 1.0)
    return np.maximum(V - theta[:, None], 0.0)


class Simplex(FeasibleSet):
    """Probability simplex {p >= 0, sum(p) = 1} in the given dimension."""

    kind = "simplex"

    def __init__(self, dim: int):
        if dim < 1:
            raise ParameterError("simplex dimension must be >= 1")
        self.dim = int(dim)

    def contains(self, p, tol: float = TAU_FEAS) -> bool:
        v = _as_vector(p, self.dim)
        return bool(np.all(v >= -tol) and abs(float(np.sum(v)) - 1.0) <= tol)

    def project(self, p) -> np.ndarray:
        v = _as_vector(p, self.dim)
        return _project_simplex_rows(v[None, :])[0]

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)

    def diameter_sq(self) -> float:
        # distance between two vertices, or 0 in dimension 1
        return 2.0 if self.dim > 1 else 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.dirichlet(np.ones(self.dim), size=n)


class ProductSet(FeasibleSet):
    """Finite product of sets, stored flat with per-factor slices.

    Consecutive equal-dimension simplex factors and consecutive box factors
    are grouped so that projection and membership run as a handful of array
    operations regardless of the number of factors.
    """

    kind = "product"

    def __init__(self, factors):
        leaf_list: list[FeasibleSet] = []
        for f in factors:
            leaf_list.extend(f.leaves())
        if not leaf_list:
            raise ParameterError("product set needs at least one factor")
        self.factors = leaf_list
        self.dim = sum(f.dim for f in leaf_list)
        self.slices: list[slice] = []
        off = 0
        for f in leaf_list:
            self.slices.append(slice(off, off + f.dim))
            off += f.dim
        self._groups = self._build_groups()

    def leaves(self) -> list[FeasibleSet]:
        return list(self.factors)

    def _build_groups(self):
        groups = []
        i = 0
        n = len(self.factors)
        while i < n:
            f = self.factors[i]
            start = self.slices[i].start
            if isinstance(f, Simplex):
                j = i
                while j + 1 < n and isinstance(self.factors[j + 1], Simplex) \
                        and self.factors[j + 1].dim == f.dim:
                    j += 1
                stop = self.slices[j].stop
                groups.append(("simplex", start, stop, f.dim, j - i + 1))
                i = j + 1
            elif isinstance(f, Box):
                j = i
                lows, ups = [f.lower], [f.upper]
                while j + 1 < n and isinstance(self.factors[j + 1], Box):
                    j += 1
                    lows.append(self.factors[j].lower)
                    ups.append(self.factors[j].upper)
                stop = self.slices[j].stop
                groups.append(("box", start, stop, np.concatenate(lows), np.concatenate(ups)))
                i = j + 1
            else:
                groups.append(("one", start, self.slices[i].stop, f, None))
                i += 1
        return groups

    def contains(self, p, tol: float = TAU_FEAS) -> bool:
        v = _as_vector(p, self.dim)
        for g in self._groups:
            if g[0] == "simplex":
                _, a, b, d, nb = g
                V = v[a:b].reshape(nb, d)
                if not (np.all(V >= -tol) and np.all(np.abs(V.sum(axis=1) - 1.0) <= tol)):
                    return False
            elif g[0] == "box":
                _, a, b, lo, up = g
                w = v[a:b]
                if not (np.all(w >= lo - tol) and np.all(w <= up + tol)):
                    return False
            else:
                _, a, b, f, _ = g
                if not f.contains(v[a:b], tol):
                    return False
        return True

    def project(self, p) -> np.ndarray:
        return self._project_vec(_as_vector(p, self.dim))

    def _project_vec(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        for g in self._groups:
            if g[0] == "simplex":
                _, a, b, d, nb = g
                out[a:b] = _project_simplex_rows(v[a:b].reshape(nb, d)).ravel()
            elif g[0] == "box":
                _, a, b, lo, up = g
                out[a:b] = np.clip(v[a:b], lo, up)
            else:
                _, a, b, f, _ = g
                out[a:b] = f.project(v[a:b])
        return out

    def center(self) -> np.ndarray:
        return np.concatenate([f.center() for f in self.factors])

    def diameter_sq(self) -> float:
        return float(sum(f.diameter_sq() for f in self.factors))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.hstack([f.sample(rng, n) for f in self.factors])


@dataclass(frozen=True)
class GeometrySpec:
    """A feasible set together with its distance generating function.

    Parameters
    ----------
    dgf : str
        Either ``"squared_euclidean"`` or ``"negative_entropy"``. Negative
        entropy may only be paired with a simplex or a product whose factors
        are all simplexes.
    feasible_set : FeasibleSet
        The constraint set the prox mapping outputs into.
    """

    dgf: str
    feasible_set: FeasibleSet
    _simplex_groups: tuple = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        if self.dgf not in (SQUARED_EUCLIDEAN, NEGATIVE_ENTROPY):
            raise ParameterError(f"unknown distance generating function: {self.dgf!r}")
        if self.dgf == NEGATIVE_ENTROPY:
            leaves = self.feasible_set.leaves()
            if not all(isinstance(f, Simplex) for f in leaves):
                raise ParameterError(
                    "negative entropy is only valid on simplex or product-of-simplex sets")
            groups = []
            off = 0
            for f in leaves:
                groups.append((off, off + f.dim))
                off += f.dim
            object.__setattr__(self, "_simplex_groups", tuple(groups))

    @property
    def dim(self) -> int:
        return self.feasible_set.dim


def project(feasible_set: FeasibleSet, p) -> np.ndarray:
    """Euclidean projection of ``p`` onto the set."""
    return feasible_set.project(p)


def _entropy_divergence(a: np.ndarray, b: np.ndarray) -> float:
    if np.any(b <= 0.0):
        raise DomainError("entropy divergence needs a strictly interior anchor")
    # a_i = 0 contributes exactly 0 because 0 * log(clip) = 0
    return float(np.dot(a, np.log(np.maximum(a, ENTROPY_CLIP)) - np.log(b)))


def bregman_divergence(geom: GeometrySpec, a, b) -> float:
    """Divergence of ``a`` relative to the anchor ``b`` under ``geom.dgf``.

    Squared euclidean gives ``0.5 * ||a - b||**2``; negative entropy on
    simplex blocks gives ``KL(a || b)``, which requires ``b`` strictly
    interior. Nonnegative, and zero exactly at ``a == b``.
    """
    va = _as_vector(a, geom.dim)
    vb = _as_vector(b, geom.dim)
    if not geom.feasible_set.contains(va):
        raise DomainError("first argument lies outside the feasible set")
    if not geom.feasible_set.contains(vb):
        raise DomainError("anchor lies outside the feasible set")
    if geom.dgf == SQUARED_EUCLIDEAN:
        d = va - vb
        return 0.5 * float(np.dot(d, d))
    return _entropy_divergence(va, vb)


def _softmax_rows(W: np.ndarray) -> np.ndarray:
    W = W - W.max(axis=1, keepdims=True)
    E = np.exp(W)
    P = E / E.sum(axis=1, keepdims=True)
    P = np.maximum(P, ENTROPY_CLIP)
    return P / P.sum(axis=1, keepdims=True)


def _prox_kernel(geom: GeometrySpec, g: np.ndarray, anchor_outer: np.ndarray,
                 beta: float, anchor_inner: np.ndarray, eta: float) -> np.ndarray:
    """Unchecked two-anchor prox; callers guarantee feasible finite inputs."""
    w = beta + eta
    if geom.dgf == SQUARED_EUCLIDEAN:
        v = (beta * anchor_outer + eta * anchor_inner - g) / w
        return geom.feasible_set._project_vec(v)
    logs = (beta * np.log(np.maximum(anchor_outer, ENTROPY_CLIP))
            + eta * np.log(np.maximum(anchor_inner, ENTROPY_CLIP)) - g) / w
    out = np.empty_like(logs)
    for a, b in geom._simplex_groups:
        d = b - a
        out[a:b] = _softmax_rows(logs[a:b].reshape(1, d)).ravel()
    return out


def prox_two_anchor(geom: GeometrySpec, g, anchor_outer, beta: float,
                    anchor_inner, eta: float) -> np.ndarray:
    """Minimize ``<g, z> + beta*V(z, anchor_outer) + eta*V(z, anchor_inner)``.

    ``V(z, anchor)`` is ``bregman_divergence(geom, z, anchor)``. Closed forms:
    squared euclidean projects ``(beta*a_out + eta*a_in - g) / (beta + eta)``
    onto the set; negative entropy is a per-block softmax of
    ``(beta*log a_out + eta*log a_in - g) / (beta + eta)``, evaluated in log
    space with max subtraction and clipped at the entropy floor.

    Parameters
    ----------
    g : array
        Linear term.
    anchor_outer, anchor_inner : array
        Feasible anchors; for entropy they must be strictly positive.
    beta, eta : float
        Nonnegative weights with ``beta + eta > 0``.
    """
    if not (np.isfinite(beta) and np.isfinite(eta)) or beta < 0 or eta < 0 or beta + eta <= 0:
        raise ParameterError("prox weights need beta >= 0, eta >= 0, beta + eta > 0")
    vg = _as_vector(g, geom.dim)
    ao = _as_vector(anchor_outer, geom.dim)
    ai = _as_vector(anchor_inner, geom.dim)
    if not geom.feasible_set.contains(ao):
        raise DomainError("outer anchor lies outside the feasible set")
    if not geom.feasible_set.contains(ai):
        raise DomainError("inner anchor lies outside the feasible set")
    if geom.dgf == NEGATIVE_ENTROPY and (np.any(ao <= 0.0) or np.any(ai <= 0.0)):
        raise DomainError("entropy prox needs strictly positive anchors")
    return _prox_kernel(geom, vg, ao, beta, ai, eta)


def _omega_sq_one(dgf: str, f: FeasibleSet, z0: np.ndarray) -> float:
    if dgf == NEGATIVE_ENTROPY:
        if np.any(z0 <= 0.0):
            raise DomainError("entropy omega bound needs a strictly interior start")
        return float(np.max(np.log(1.0 / z0)))
    if isinstance(f, Box):
        return 0.5 * float(np.sum(np.maximum((z0 - f.lower) ** 2, (f.upper - z0) ** 2)))
    if isinstance(f, Ball):
        return 0.5 * (f.radius + float(np.linalg.norm(z0 - f._center))) ** 2
    if isinstance(f, Simplex):
        # farthest vertex: 0.5 * (||z0||^2 + 1 - 2 min_i z0_i)
        return 0.5 * (float(np.dot(z0, z0)) + 1.0 - 2.0 * float(np.min(z0)))
    raise ParameterError(f"unsupported set kind {f.kind!r}")


def omega_sq_bound(geom: GeometrySpec, z0) -> float:
    """Exact value of ``sup_z V(z, z0)`` over the feasible set.

    Squared euclidean evaluates the farthest corner (box), antipodal point
    (ball) or farthest vertex (simplex); negative entropy on a simplex gives
    ``max_i log(1 / z0_i)``, which is ``log d`` at the uniform start. Products
    sum blockwise.
    """
    v = _as_vector(z0, geom.dim)
    if not geom.feasible_set.contains(v):
        raise DomainError("start point lies outside the feasible set")
    leaves = geom.feasible_set.leaves()
    total = 0.0
    off = 0
    for f in leaves:
        total += _omega_sq_one(geom.dgf, f, v[off:off + f.dim])
        off += f.dim
    return total
