"""Zonotope and interval-box primitives used throughout the reachability pipeline.

A zonotope is <c, G> = {c + G b : ||b||_inf <= 1}. All operations are pure;
set objects are immutable (backing arrays are marked read-only).
"""

import numpy as np
from scipy.optimize import linprog

from .expr import Expr, interval_range


class IndeterminateContainment(RuntimeError):
    """The containment LP could not be decided (solver failure)."""


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class Zonotope:
    __slots__ = ("c", "G")

    def __init__(self, center, generators=None):
        c = np.asarray(center, dtype=float).reshape(-1)
        if generators is None:
            G = np.zeros((c.shape[0], 0))
        else:
            G = np.asarray(generators, dtype=float)
            if G.ndim == 1:
                G = G.reshape(-1, 1)
        if G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise ValueError(
                f"generator matrix {G.shape} does not match center of length {c.shape[0]}"
            )
        self.c = _readonly(c)
        self.G = _readonly(G)

    @classmethod
    def point(cls, center):
        return cls(center)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def n_generators(self) -> int:
        return self.G.shape[1]

    def __repr__(self):
        return f"Zonotope(dim={self.dim}, generators={self.n_generators})"

    def __eq__(self, other):
        if not isinstance(other, Zonotope):
            return NotImplemented
        return np.array_equal(self.c, other.c) and np.array_equal(self.G, other.G)

    __hash__ = None

    def to_json(self) -> dict:
        return {"center": self.c.tolist(), "generators": self.G.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Zonotope":
        center = np.asarray(data["center"], dtype=float)
        rows = data.get("generators", [])
        if len(rows) == 0:
            return cls(center)
        G = np.asarray(rows, dtype=float)
        if G.size == 0:
            return cls(center)
        return cls(center, G)


class IntervalBox:
    __slots__ = ("lower", "upper")

    def __init__(self, lower, upper):
        lo = np.asarray(lower, dtype=float).reshape(-1)
        hi = np.asarray(upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds must have the same length")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        self.lower = _readonly(lo)
        self.upper = _readonly(hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def join(self, other: "IntervalBox") -> "IntervalBox":
        return IntervalBox(
            np.minimum(self.lower, other.lower), np.maximum(self.upper, other.upper)
        )

    def concat(self, other: "IntervalBox") -> "IntervalBox":
        return IntervalBox(
            np.concatenate([self.lower, other.lower]),
            np.concatenate([self.upper, other.upper]),
        )

    def __repr__(self):
        return f"IntervalBox({self.lower.tolist()}, {self.upper.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, IntervalBox):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    __hash__ = None


def linear_map(matrix, Z: Zonotope) -> Zonotope:
    """Image under a linear map: Gamma <c, G> = <Gamma c, Gamma G>."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != Z.dim:
        raise ValueError(f"map of shape {matrix.shape} cannot act on dim {Z.dim}")
    return Zonotope(matrix @ Z.c, matrix @ Z.G)


def minkowski_sum(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    if Z1.dim != Z2.dim:
        raise ValueError(f"dimension mismatch: {Z1.dim} vs {Z2.dim}")
    return Zonotope(Z1.c + Z2.c, np.hstack([Z1.G, Z2.G]))


def cartesian_product(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    G = np.zeros((Z1.dim + Z2.dim, Z1.n_generators + Z2.n_generators))
    G[: Z1.dim, : Z1.n_generators] = Z1.G
    G[Z1.dim :, Z1.n_generators :] = Z2.G
    return Zonotope(np.concatenate([Z1.c, Z2.c]), G)


def translate(Z: Zonotope, v) -> Zonotope:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != Z.dim:
        raise ValueError(f"dimension mismatch: {v.shape[0]} vs {Z.dim}")
    return Zonotope(Z.c + v, Z.G)


def interval_hull(Z: Zonotope) -> IntervalBox:
    """Tightest axis-aligned box containing Z: c +- sum_j |g_j|."""
    radius = np.sum(np.abs(Z.G), axis=1)
    return IntervalBox(Z.c - radius, Z.c + radius)


def zonotope_from_interval(lower, upper) -> Zonotope:
    """Axis-aligned box as a zonotope; zero-width axes contribute no generator."""
    box = IntervalBox(lower, upper)
    half = 0.5 * box.width
    keep = np.nonzero(half > 0.0)[0]
    G = np.zeros((box.dim, keep.size))
    G[keep, np.arange(keep.size)] = half[keep]
    return Zonotope(box.center, G)


def contains_point(Z: Zonotope, x, tol: float = 1e-9) -> bool:
    """Membership test via the feasibility LP {G b = x - c, ||b||_inf <= 1 + tol}.

    Solved as min ||b||_inf subject to G b = x - c. Raises
    IndeterminateContainment if the solver fails to decide.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != Z.dim:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {Z.dim}")
    d = x - Z.c
    m = Z.n_generators
    if m == 0:
        return bool(np.max(np.abs(d), initial=0.0) <= tol)
    # variables [b_1..b_m, t]; minimize t with -t <= b_i <= t
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    eye = np.eye(m)
    ones = np.ones((m, 1))
    A_ub = np.vstack([np.hstack([eye, -ones]), np.hstack([-eye, -ones])])
    b_ub = np.zeros(2 * m)
    A_eq = np.hstack([Z.G, np.zeros((Z.dim, 1))])
    bounds = [(None, None)] * m + [(0.0, None)]
    res = linprog(
        cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=d, bounds=bounds, method="highs"
    )
    if res.status == 2:  # infeasible: x - c is not in the range of G
        return False
    if not res.success:
        raise IndeterminateContainment(
            f"containment LP not decided (status {res.status}: {res.message})"
        )
    return bool(res.fun <= 1.0 + tol)


def reduce_order(Z: Zonotope, max_order: float) -> Zonotope:
    """Girard-style box reduction to at most max_order * dim generators.

    The smallest generators by 2-norm (ties broken by column index) are
    replaced by their interval hull; the result contains Z.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    n, m = Z.dim, Z.n_generators
    limit = int(np.floor(max_order * n))
    if m <= limit:
        return Z
    norms = np.linalg.norm(Z.G, axis=0)
    order = np.argsort(norms, kind="stable")
    n_boxed = m - (limit - n)
    boxed, kept = order[:n_boxed], np.sort(order[n_boxed:])
    radius = np.sum(np.abs(Z.G[:, boxed]), axis=1)
    keep_axes = np.nonzero(radius > 0.0)[0]
    box = np.zeros((n, keep_axes.size))
    box[keep_axes, np.arange(keep_axes.size)] = radius[keep_axes]
    return Zonotope(Z.c, np.hstack([Z.G[:, kept], box]))


def interval_eval(expression: Expr, box: IntervalBox) -> IntervalBox:
    """Rigorous range enclosure of a scalar expression over a box (1-dim result)."""
    lo, hi = interval_range(expression, box.lower, box.upper)
    return IntervalBox([lo], [hi])


def sample_points(Z: Zonotope, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points of Z as columns, via uniform coefficients b in [-1, 1]^gamma."""
    beta = rng.uniform(-1.0, 1.0, size=(Z.n_generators, n))
    return Z.c[:, None] + Z.G @ beta
