"""The four uncertainty sets that make the reachability recursion sound.

Z_wpsi bounds the lifted process noise, L_k the multi-step model residual
measured on data, Z_eps extends the data-driven bound to unseen states via a
Lipschitz/covering-radius argument, and the Lagrange remainder set (built in
`reach`) bounds the linearization error.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .identify import Dataset, KoopmanModel
from .sets import IntervalBox, Zonotope, zonotope_from_interval


class ResidualRolloutError(RuntimeError):
    """A model rollout left the dictionary's domain; residuals would be incomplete."""

    def __init__(self, failures):
        self.failures = failures  # list of (trajectory, step, n_bad_starts)
        detail = "; ".join(
            f"trajectory {i}, step {k}: {n} start(s) non-finite"
            for i, k, n in failures
        )
        super().__init__(f"residual rollout failed: {detail}")


@dataclass
class ResidualBank:
    """Residual vectors per prediction step: residuals[k-1] has shape (n_x, count_k)."""

    residuals: list
    n_x: int

    def __post_init__(self):
        for k, block in enumerate(self.residuals, start=1):
            if block.ndim != 2 or block.shape[0] != self.n_x:
                raise ValueError(f"residual block at step {k} has shape {block.shape}")

    @property
    def horizon(self) -> int:
        return len(self.residuals)

    @property
    def counts(self):
        return [block.shape[1] for block in self.residuals]


@dataclass
class ErrorSets:
    Z_wpsi: Zonotope
    L_k: list
    Z_eps: Zonotope
    L_star: np.ndarray
    delta: float
    L_psi: float = 0.0
    residual_counts: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "Z_wpsi": self.Z_wpsi.to_json(),
            "L_k": [z.to_json() for z in self.L_k],
            "Z_eps": self.Z_eps.to_json(),
            "L_star": np.asarray(self.L_star).tolist(),
            "delta": float(self.delta),
            "L_psi": float(self.L_psi),
            "residual_counts": list(self.residual_counts),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ErrorSets":
        return cls(
            Z_wpsi=Zonotope.from_json(data["Z_wpsi"]),
            L_k=[Zonotope.from_json(z) for z in data["L_k"]],
            Z_eps=Zonotope.from_json(data["Z_eps"]),
            L_star=np.asarray(data["L_star"], dtype=float),
            delta=float(data["delta"]),
            L_psi=float(data.get("L_psi", 0.0)),
            residual_counts=list(data.get("residual_counts", [])),
        )


def lifted_noise_zonotope(L_psi: float, Zw: Zonotope, p_phi: int) -> Zonotope:
    """<0, L_psi (||c_w||_inf + ||G_w||_inf) I> with the max-abs-row-sum matrix norm."""
    if L_psi < 0:
        raise ValueError("L_psi must be nonnegative")
    row_sums = np.sum(np.abs(Zw.G), axis=1)
    radius = L_psi * (
        np.max(np.abs(Zw.c), initial=0.0) + np.max(row_sums, initial=0.0)
    )
    center = np.zeros(p_phi)
    if radius == 0.0:
        return Zonotope(center)
    return Zonotope(center, radius * np.eye(p_phi))


def multi_step_residuals(data: Dataset, model: KoopmanModel, N: int) -> ResidualBank:
    """Projected k-step prediction errors for every admissible start column.

    Each start j seeds the rollout at the lifted sample phi(x_j); the model
    is advanced with the measured inputs and compared against the measured
    states, projected by C. Starts whose horizon exceeds the trajectory
    contribute their feasible prefix. Non-finite rollouts abort with a
    report rather than being dropped.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    dictionary = model.dictionary
    C = dictionary.C
    blocks = [[] for _ in range(N)]
    failures = []
    for i, tr in enumerate(data.trajectories):
        T = tr.length
        z_hat = dictionary.lift_states(tr.states[:, :T])
        for k in range(1, min(N, T) + 1):
            m = T - k + 1
            z_hat = model.step(z_hat[:, :m], tr.inputs[:, k - 1 : k - 1 + m])
            bad = ~np.all(np.isfinite(z_hat), axis=0)
            if np.any(bad):
                failures.append((i, k, int(np.sum(bad))))
                break
            blocks[k - 1].append(tr.states[:, k : k + m] - C @ z_hat)
    if failures:
        raise ResidualRolloutError(failures)
    stacked = []
    for k, block in enumerate(blocks, start=1):
        if not block:
            break
        stacked.append(np.hstack(block))
    return ResidualBank(stacked, data.n_x)


def residual_zonotopes(bank: ResidualBank) -> list:
    """Interval hull of the residual cloud at each step: L_k = <min..max>."""
    out = []
    for k, block in enumerate(bank.residuals, start=1):
        if block.shape[1] == 0:
            raise ValueError(f"no residuals available at step {k}")
        out.append(zonotope_from_interval(block.min(axis=1), block.max(axis=1)))
    return out


def estimate_lipschitz_and_delta(
    data: Dataset,
    domain: IntervalBox,
    grid_resolution: int = 20,
    inflation: float = 1.1,
):
    """Sampled per-dimension Lipschitz constants and the grid covering radius.

    L*_i is the largest slope |f_i(s) - f_i(s')| / ||s - s'||_2 over all
    pairs of transition samples s = [x; u] (noisy successors stand in for
    f), inflated by `inflation`. delta is the largest 2-norm distance from a
    deterministic grid over `domain` to the nearest in-domain sample. Both
    are heuristic stand-ins for the true constants.
    """
    S, F = data.transition_samples()
    d, T = S.shape
    if domain.dim != d:
        raise ValueError(f"domain must have dimension {d}, got {domain.dim}")
    if T < 2:
        raise ValueError("need at least 2 transition samples")

    sq = np.sum(S * S, axis=0)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * (S.T @ S)
    np.fill_diagonal(dist2, np.inf)
    dist = np.sqrt(np.maximum(dist2, 0.0))
    if not np.any(np.isfinite(dist) & (dist > 0.0)):
        raise ValueError("all transition samples coincide; slopes are undefined")
    dist[dist == 0.0] = np.inf
    L_star = np.empty(data.n_x)
    for i in range(data.n_x):
        gaps = np.abs(F[i][:, None] - F[i][None, :])
        L_star[i] = inflation * np.max(gaps / dist)

    inside = np.all(
        (S >= domain.lower[:, None]) & (S <= domain.upper[:, None]), axis=0
    )
    if not np.any(inside):
        raise ValueError("no data samples inside the requested domain")
    tree = cKDTree(S[:, inside].T)

    axes = [
        np.linspace(domain.lower[j], domain.upper[j], grid_resolution)
        if domain.upper[j] > domain.lower[j]
        else np.array([domain.lower[j]])
        for j in range(d)
    ]
    delta = 0.0
    # chunk over the first axis to keep the grid memory bounded
    tail = np.meshgrid(*axes[1:], indexing="ij") if d > 1 else []
    tail_flat = (
        np.stack([g.ravel() for g in tail]) if tail else np.zeros((0, 1))
    )
    for v in axes[0]:
        chunk = np.vstack([np.full(tail_flat.shape[1], v), tail_flat])
        dmin, _ = tree.query(chunk.T)
        delta = max(delta, float(np.max(dmin)))
    return L_star, delta


def epsilon_zonotope(L_star, delta: float) -> Zonotope:
    """Covering-radius uncertainty set <0, diag(L*_i delta / 2)>."""
    L_star = np.asarray(L_star, dtype=float).reshape(-1)
    if delta < 0 or np.any(L_star < 0):
        raise ValueError("delta and L* must be nonnegative")
    radius = 0.5 * delta * L_star
    keep = np.nonzero(radius > 0.0)[0]
    G = np.zeros((L_star.shape[0], keep.size))
    G[keep, np.arange(keep.size)] = radius[keep]
    return Zonotope(np.zeros(L_star.shape[0]), G)
