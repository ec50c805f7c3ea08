"""Reachable-set computation for the identified lifted model.

Each step linearizes the lifted dynamics g(z, u) = A z + B nu(z, u) at the
current set centers, bounds the Taylor remainder through interval Hessians
over the joint hull, propagates the zonotope through the linearization plus
the lifted-noise set, and projects back with the residual and covering sets.
"""

from dataclasses import dataclass, field

import numpy as np

from .dictionary import Dictionary, estimate_L_psi
from .errorsets import (
    ErrorSets,
    epsilon_zonotope,
    estimate_lipschitz_and_delta,
    lifted_noise_zonotope,
    multi_step_residuals,
    residual_zonotopes,
)
from .expr import interval_range
from .identify import Dataset, KoopmanModel
from .sets import (
    IntervalBox,
    Zonotope,
    cartesian_product,
    interval_hull,
    linear_map,
    minkowski_sum,
    reduce_order,
    translate,
)


class ReachStepError(RuntimeError):
    """Propagation failed at a specific step."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"reachability step {step} failed: {cause}")


@dataclass(frozen=True)
class ReachOptions:
    reduction_order: float = 20.0
    remainder_fixed_point: bool = False
    fixed_point_max_iter: int = 10
    ridge: float = 0.0
    estimator_seed: int = 0
    lpsi_samples: int = 4096
    lpsi_inflation: float = 1.1
    slope_inflation: float = 1.1
    delta_grid_resolution: int = 20

    def to_json(self) -> dict:
        return {
            "reduction_order": self.reduction_order,
            "remainder_fixed_point": self.remainder_fixed_point,
            "fixed_point_max_iter": self.fixed_point_max_iter,
            "ridge": self.ridge,
            "estimator_seed": self.estimator_seed,
            "lpsi_samples": self.lpsi_samples,
            "lpsi_inflation": self.lpsi_inflation,
            "slope_inflation": self.slope_inflation,
            "delta_grid_resolution": self.delta_grid_resolution,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ReachOptions":
        return cls(**data)


@dataclass
class ReachResult:
    lifted_sets: list  # R-bar_0 .. R-bar_N (p_phi-dim)
    projected_sets: list  # R'_1 .. R'_N (n_x-dim)
    remainder_sets: list  # Lagrange remainder zonotopes, one per step
    linearization_points: list  # (z*, u*) per step
    error_sets: ErrorSets
    options: ReachOptions = field(default_factory=ReachOptions)

    @property
    def horizon(self) -> int:
        return len(self.projected_sets)

    def to_json(self) -> dict:
        return {
            "lifted_sets": [z.to_json() for z in self.lifted_sets],
            "projected_sets": [z.to_json() for z in self.projected_sets],
            "remainder_sets": [z.to_json() for z in self.remainder_sets],
            "linearization_points": [
                {"z": z.tolist(), "u": u.tolist()}
                for z, u in self.linearization_points
            ],
            "error_sets": self.error_sets.to_json(),
            "options": self.options.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ReachResult":
        return cls(
            lifted_sets=[Zonotope.from_json(z) for z in data["lifted_sets"]],
            projected_sets=[Zonotope.from_json(z) for z in data["projected_sets"]],
            remainder_sets=[Zonotope.from_json(z) for z in data["remainder_sets"]],
            linearization_points=[
                (np.asarray(p["z"], dtype=float), np.asarray(p["u"], dtype=float))
                for p in data["linearization_points"]
            ],
            error_sets=ErrorSets.from_json(data["error_sets"]),
            options=ReachOptions.from_json(data["options"]),
        )

    def hull_rows(self):
        """(k, dim, lower, upper, width) rows for the projected sets."""
        rows = []
        for k, Z in enumerate(self.projected_sets, start=1):
            hull = interval_hull(Z)
            for i in range(Z.dim):
                rows.append(
                    (k, i + 1, hull.lower[i], hull.upper[i], hull.upper[i] - hull.lower[i])
                )
        return rows


def lift_initial_set(dictionary: Dictionary, X0: Zonotope) -> Zonotope:
    """Zonotope containing phi(X0): affine coordinates exactly, others boxed.

    Affine rows reuse X0's generators (cross-correlations kept); each
    nonlinear coordinate is enclosed by interval evaluation over the hull of
    X0 and gets its own axis generator.
    """
    if X0.dim != dictionary.n_x:
        raise ValueError(f"initial set dim {X0.dim} != state dim {dictionary.n_x}")
    hull = interval_hull(X0)
    nonlinear = [i for i, aff in enumerate(dictionary.phi_affine) if aff is None]
    p_phi, g0 = dictionary.p_phi, X0.n_generators
    c = np.zeros(p_phi)
    G = np.zeros((p_phi, g0 + len(nonlinear)))
    for i, aff in enumerate(dictionary.phi_affine):
        if aff is not None:
            a, b = aff
            c[i] = a @ X0.c + b
            G[i, :g0] = a @ X0.G
    for j, i in enumerate(nonlinear):
        lo, hi = interval_range(dictionary.phi[i], hull.lower, hull.upper)
        c[i] = 0.5 * (lo + hi)
        G[i, g0 + j] = 0.5 * (hi - lo)
    keep = np.any(G != 0.0, axis=0)
    return Zonotope(c, G[:, keep])


def linearize(model: KoopmanModel, z_star, u_star):
    """First-order model at (z*, u*): M = [g(z*, u*), A-bar, B-bar]."""
    z_star = np.asarray(z_star, dtype=float).reshape(-1)
    u_star = np.asarray(u_star, dtype=float).reshape(-1)
    Jz, Ju = model.dictionary.nu_jacobians(z_star, u_star)
    Abar = model.A + model.B @ Jz
    Bbar = model.B @ Ju
    g_star = model.step(z_star[:, None], u_star[:, None])[:, 0]
    M = np.hstack([g_star[:, None], Abar, Bbar])
    return M, Abar, Bbar


def lagrange_remainder(
    model: KoopmanModel,
    lifted_hull: IntervalBox,
    input_hull: IntervalBox,
    z_star,
    u_star,
) -> Zonotope:
    """Box bound on the Taylor remainder of g over the joint hull.

    For each lifted output i, |remainder_i| <= 0.5 * D^T |H_i| D where D is
    the per-coordinate maximum deviation of the joint hull from (z*, u*) and
    |H_i| the magnitude bound of sum_j B_ij * Hess(nu_j) over the hull.
    """
    dictionary = model.dictionary
    z_star = np.asarray(z_star, dtype=float).reshape(-1)
    u_star = np.asarray(u_star, dtype=float).reshape(-1)
    if not (lifted_hull.contains(z_star, tol=1e-9) and input_hull.contains(u_star, tol=1e-9)):
        raise ValueError("linearization point must lie inside the hulls")
    p_phi = dictionary.p_phi
    if dictionary.p_nu == 0:
        return Zonotope(np.zeros(p_phi))
    joint = lifted_hull.concat(input_hull)
    center = np.concatenate([z_star, u_star])
    D = np.maximum(joint.upper - center, center - joint.lower)
    hessians = dictionary.nu_hessian_bounds(joint)
    lo_stack = np.stack([h.lower for h in hessians])  # (p_nu, n_zu, n_zu)
    hi_stack = np.stack([h.upper for h in hessians])
    B_pos = np.maximum(model.B, 0.0)
    B_neg = np.minimum(model.B, 0.0)
    lo_sum = np.einsum("ij,jlm->ilm", B_pos, lo_stack) + np.einsum(
        "ij,jlm->ilm", B_neg, hi_stack
    )
    hi_sum = np.einsum("ij,jlm->ilm", B_pos, hi_stack) + np.einsum(
        "ij,jlm->ilm", B_neg, lo_stack
    )
    magnitude = np.maximum(np.abs(lo_sum), np.abs(hi_sum))
    bounds = 0.5 * np.einsum("l,ilm,m->i", D, magnitude, D)
    keep = np.nonzero(bounds > 0.0)[0]
    G = np.zeros((p_phi, keep.size))
    G[keep, np.arange(keep.size)] = bounds[keep]
    return Zonotope(np.zeros(p_phi), G)


def propagate_step(
    Rbar_k: Zonotope,
    U_k: Zonotope,
    M: np.ndarray,
    Lbar_k: Zonotope,
    Z_wpsi: Zonotope,
    z_star,
    u_star,
    reduction_order=None,
) -> Zonotope:
    """One lifted step: M ({1} x (R-bar_k - z*) x (U_k - u*)) + L-bar_k + Z_wpsi."""
    one = Zonotope.point([1.0])
    aug = cartesian_product(
        cartesian_product(one, translate(Rbar_k, -np.asarray(z_star, dtype=float))),
        translate(U_k, -np.asarray(u_star, dtype=float)),
    )
    nxt = minkowski_sum(minkowski_sum(linear_map(M, aug), Lbar_k), Z_wpsi)
    if reduction_order is not None:
        nxt = reduce_order(nxt, reduction_order)
    return nxt


def project_and_inflate(
    Rbar_next: Zonotope, C: np.ndarray, L_k: Zonotope, Z_eps: Zonotope
) -> Zonotope:
    """Project to the state space and add the residual and covering sets."""
    return minkowski_sum(minkowski_sum(linear_map(C, Rbar_next), L_k), Z_eps)


def _estimation_domains(data: Dataset, X0: Zonotope, inputs):
    lo_x = np.min(np.hstack([tr.states for tr in data.trajectories]), axis=1)
    hi_x = np.max(np.hstack([tr.states for tr in data.trajectories]), axis=1)
    state_box = IntervalBox(lo_x, hi_x).join(interval_hull(X0))
    lo_u = np.min(np.hstack([tr.inputs for tr in data.trajectories]), axis=1)
    hi_u = np.max(np.hstack([tr.inputs for tr in data.trajectories]), axis=1)
    input_box = IntervalBox(lo_u, hi_u)
    for U in inputs:
        input_box = input_box.join(interval_hull(U))
    return state_box, input_box


def reach(
    model: KoopmanModel,
    data: Dataset,
    X0: Zonotope,
    inputs,
    Zw: Zonotope,
    N: int,
    options: ReachOptions = None,
) -> ReachResult:
    """Propagate guaranteed over-approximations for N steps.

    `inputs` is a list of N input zonotopes or a single zonotope reused each
    step. Any failure aborts with the step index and cause.
    """
    options = options or ReachOptions()
    dictionary = model.dictionary
    if isinstance(inputs, Zonotope):
        inputs = [inputs] * N
    inputs = list(inputs)
    if len(inputs) < N:
        raise ValueError(f"need {N} input sets, got {len(inputs)}")
    if N < 0:
        raise ValueError("horizon must be nonnegative")

    state_box, input_box = _estimation_domains(data, X0, inputs)
    L_psi = dictionary.L_psi
    if L_psi is None:
        L_psi = estimate_L_psi(
            dictionary,
            state_box,
            input_box,
            samples=options.lpsi_samples,
            seed=options.estimator_seed,
            inflation=options.lpsi_inflation,
        )
    L_star, delta = estimate_lipschitz_and_delta(
        data,
        state_box.concat(input_box),
        grid_resolution=options.delta_grid_resolution,
        inflation=options.slope_inflation,
    )
    Z_eps = epsilon_zonotope(L_star, delta)
    Z_wpsi = lifted_noise_zonotope(L_psi, Zw, dictionary.p_phi)

    if N > 0:
        bank = multi_step_residuals(data, model, N)
        if bank.horizon < N:
            raise ValueError(
                f"data supports residuals only up to step {bank.horizon}, "
                f"but the horizon is {N}"
            )
        L_list = residual_zonotopes(bank)
        counts = bank.counts
    else:
        L_list, counts = [], []
    error_sets = ErrorSets(
        Z_wpsi=Z_wpsi,
        L_k=L_list,
        Z_eps=Z_eps,
        L_star=L_star,
        delta=delta,
        L_psi=L_psi,
        residual_counts=counts,
    )

    lifted = [lift_initial_set(dictionary, X0)]
    projected, remainders, points = [], [], []
    for k in range(N):
        try:
            Rbar_k, U_k = lifted[k], inputs[k]
            z_star, u_star = Rbar_k.c, U_k.c
            M, _, _ = linearize(model, z_star, u_star)
            lifted_hull, input_hull = interval_hull(Rbar_k), interval_hull(U_k)
            Lbar = lagrange_remainder(model, lifted_hull, input_hull, z_star, u_star)
            Rbar_next = propagate_step(
                Rbar_k, U_k, M, Lbar, Z_wpsi, z_star, u_star, options.reduction_order
            )
            if options.remainder_fixed_point:
                for _ in range(options.fixed_point_max_iter):
                    joint_hull = lifted_hull.join(interval_hull(Rbar_next))
                    refined = lagrange_remainder(
                        model, joint_hull, input_hull, z_star, u_star
                    )
                    candidate = propagate_step(
                        Rbar_k, U_k, M, refined, Z_wpsi, z_star, u_star,
                        options.reduction_order,
                    )
                    grew = np.max(
                        np.abs(
                            np.sum(np.abs(refined.G), axis=1)
                            - np.sum(np.abs(Lbar.G), axis=1)
                        ),
                        initial=0.0,
                    )
                    Lbar, Rbar_next = refined, candidate
                    if grew <= 1e-12:
                        break
            if not np.all(np.isfinite(Rbar_next.c)) or not np.all(
                np.isfinite(Rbar_next.G)
            ):
                raise FloatingPointError("lifted set became non-finite")
            projected.append(
                project_and_inflate(Rbar_next, dictionary.C, L_list[k], Z_eps)
            )
            lifted.append(Rbar_next)
            remainders.append(Lbar)
            points.append((z_star, u_star))
        except Exception as exc:
            if isinstance(exc, ReachStepError):
                raise
            raise ReachStepError(k, exc) from exc

    return ReachResult(
        lifted_sets=lifted,
        projected_sets=projected,
        remainder_sets=remainders,
        linearization_points=points,
        error_sets=error_sets,
        options=options,
    )


def with_dictionary_L_psi(dictionary: Dictionary, L_psi: float) -> Dictionary:
    """Copy of the dictionary with a pinned Lipschitz constant."""
    return Dictionary(dictionary.phi, dictionary.nu, dictionary.n_x, dictionary.n_u, L_psi)
