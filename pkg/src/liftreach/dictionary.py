"""Lifting dictionaries: psi = [phi(x); nu(z, u)] with analytic derivatives.

phi maps the state into the lifted space and must include the original
states (x = C phi(x)); nu collects the input-dependent observables, written
over the lifted coordinates z and the inputs u.
"""

from typing import NamedTuple

import numpy as np

from . import expr as ex
from .sets import IntervalBox


class IntervalMatrix(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray


def _var_names(prefix: str, count: int):
    return [f"{prefix}{i + 1}" for i in range(count)]


def state_projection(phi, n_x: int) -> np.ndarray:
    """Matrix C with C phi(x) = x, found by locating each state in phi."""
    C = np.zeros((n_x, len(phi)))
    for i in range(n_x):
        hits = [j for j, e in enumerate(phi) if isinstance(e, ex.Var) and e.index == i]
        if not hits:
            raise ValueError(f"lifting is not state-inclusive: x{i + 1} missing from phi")
        C[i, hits[0]] = 1.0
    return C


class Dictionary:
    """Immutable bundle of lifting expressions plus compiled evaluation caches."""

    def __init__(self, phi, nu, n_x: int, n_u: int, L_psi=None):
        self.phi = tuple(phi)
        self.nu = tuple(nu)
        self.n_x = int(n_x)
        self.n_u = int(n_u)
        self.L_psi = L_psi
        self.p_phi = len(self.phi)
        self.p_nu = len(self.nu)
        self.p = self.p_phi + self.p_nu
        self.C = state_projection(self.phi, self.n_x)

        n_zu = self.p_phi + self.n_u
        self._phi_bank = ex.compile_programs(self.phi, self.n_x)
        self._nu_bank = ex.compile_programs(self.nu, n_zu)
        # Jacobian programs, row-major over (feature j, variable l)
        jac = [ex.diff(e, l) for e in self.nu for l in range(n_zu)]
        self._nu_jac_bank = ex.compile_programs(jac, n_zu)
        # symmetric Hessian trees per nu feature (upper triangle)
        self._nu_hess = []
        for e in self.nu:
            grads = [ex.diff(e, l) for l in range(n_zu)]
            rows = [[None] * n_zu for _ in range(n_zu)]
            for l in range(n_zu):
                for m in range(l, n_zu):
                    rows[l][m] = rows[m][l] = ex.diff(grads[l], m)
            self._nu_hess.append(rows)
        # affine decomposition of phi where available (used to lift sets exactly)
        self.phi_affine = []
        for e in self.phi:
            try:
                self.phi_affine.append(ex.affine_coefficients(e, self.n_x))
            except ex.ExprError:
                self.phi_affine.append(None)

    @classmethod
    def from_expressions(cls, phi_strings, nu_strings, n_x: int, n_u: int, L_psi=None):
        x_names = _var_names("x", n_x)
        zu_names = _var_names("z", len(phi_strings)) + _var_names("u", n_u)
        phi = [ex.parse(s, x_names) for s in phi_strings]
        nu = [ex.parse(s, zu_names) for s in nu_strings]
        return cls(phi, nu, n_x, n_u, L_psi)

    # -- evaluation ---------------------------------------------------------

    def lift_states(self, x_points) -> np.ndarray:
        """phi applied column-wise: (n_x, m) -> (p_phi, m)."""
        return ex.eval_programs(self._phi_bank, x_points)

    def lift_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.n_x:
            raise ValueError(f"expected state of length {self.n_x}, got {x.shape[0]}")
        return self.lift_states(x[:, None])[:, 0]

    def nu_values(self, z_points, u_points) -> np.ndarray:
        """nu applied column-wise to stacked (z; u) points -> (p_nu, m)."""
        zu = np.vstack([np.atleast_2d(z_points), np.atleast_2d(u_points)])
        return ex.eval_programs(self._nu_bank, zu)

    def lift_pairs(self, x_points, u_points) -> np.ndarray:
        z = self.lift_states(x_points)
        return np.vstack([z, self.nu_values(z, np.atleast_2d(u_points))])

    def lift_pair(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        u = np.asarray(u, dtype=float).reshape(-1)
        if x.shape[0] != self.n_x or u.shape[0] != self.n_u:
            raise ValueError("state/input length mismatch with dictionary dimensions")
        return self.lift_pairs(x[:, None], u[:, None])[:, 0]

    # -- derivatives --------------------------------------------------------

    def nu_jacobians(self, z_star, u_star):
        """(d nu/d z, d nu/d u) at the point (z*, u*), shapes (p_nu, p_phi) and (p_nu, n_u)."""
        z_star = np.asarray(z_star, dtype=float).reshape(-1)
        u_star = np.asarray(u_star, dtype=float).reshape(-1)
        if z_star.shape[0] != self.p_phi or u_star.shape[0] != self.n_u:
            raise ValueError("linearization point does not match dictionary dimensions")
        point = np.concatenate([z_star, u_star])[:, None]
        n_zu = self.p_phi + self.n_u
        if self.p_nu == 0:
            return np.zeros((0, self.p_phi)), np.zeros((0, self.n_u))
        flat = ex.eval_programs(self._nu_jac_bank, point)[:, 0]
        J = flat.reshape(self.p_nu, n_zu)
        return J[:, : self.p_phi], J[:, self.p_phi :]

    def nu_hessian_bounds(self, box: IntervalBox):
        """Interval enclosure of each nu feature's Hessian over a (z, u) box."""
        n_zu = self.p_phi + self.n_u
        if box.dim != n_zu:
            raise ValueError(f"box must have dimension {n_zu}, got {box.dim}")
        out = []
        for rows in self._nu_hess:
            lo = np.zeros((n_zu, n_zu))
            hi = np.zeros((n_zu, n_zu))
            for l in range(n_zu):
                for m in range(l, n_zu):
                    e = rows[l][m]
                    if isinstance(e, ex.Const):
                        lo[l, m] = lo[m, l] = hi[l, m] = hi[m, l] = e.value
                    else:
                        a, b = ex.interval_range(e, box.lower, box.upper)
                        lo[l, m] = lo[m, l] = a
                        hi[l, m] = hi[m, l] = b
            out.append(IntervalMatrix(lo, hi))
        return out

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "phi": [ex.to_string(e) for e in self.phi],
            "nu": [ex.to_string(e) for e in self.nu],
            "state_dim": self.n_x,
            "input_dim": self.n_u,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Dictionary":
        return cls.from_expressions(
            data["phi"], data["nu"], data["state_dim"], data["input_dim"]
        )

    def __repr__(self):
        return (
            f"Dictionary(n_x={self.n_x}, n_u={self.n_u}, "
            f"p_phi={self.p_phi}, p_nu={self.p_nu})"
        )


def estimate_L_psi(
    dictionary: Dictionary,
    domain: IntervalBox,
    input_box: IntervalBox,
    samples: int = 4096,
    seed: int = 0,
    inflation: float = 1.1,
) -> float:
    """Sampled Lipschitz constant of psi in x, uniform in u, times `inflation`.

    Heuristic: the true constant is assumed to exist; the sampled maximum
    slope is a lower bound, so the result is only as sound as the margin.
    Deterministic for a fixed seed; a zero-width domain returns 0.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if domain.dim != dictionary.n_x or input_box.dim != dictionary.n_u:
        raise ValueError("domain/input box dimensions do not match dictionary")
    if np.all(domain.width == 0.0):
        return 0.0
    rng = np.random.default_rng(seed)

    def _uniform(box, n):
        return box.lower[:, None] + box.width[:, None] * rng.uniform(
            0.0, 1.0, size=(box.dim, n)
        )

    xa = _uniform(domain, samples)
    xb = _uniform(domain, samples)
    u = _uniform(input_box, samples)
    dist = np.linalg.norm(xa - xb, axis=0)
    valid = dist > 0.0
    if not np.any(valid):
        return 0.0
    psi_a = dictionary.lift_pairs(xa[:, valid], u[:, valid])
    psi_b = dictionary.lift_pairs(xb[:, valid], u[:, valid])
    slopes = np.linalg.norm(psi_a - psi_b, axis=0) / dist[valid]
    return float(inflation * np.max(slopes))


# ---------------------------------------------------------------------------
# builtin dictionaries
# ---------------------------------------------------------------------------


def poly2_exogenous() -> Dictionary:
    """Second-order polynomial lifting with bias, exogenous inputs nu = u."""
    return Dictionary.from_expressions(
        ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"], ["u1", "u2"], n_x=2, n_u=2
    )


def poly2_nonaffine() -> Dictionary:
    """Polynomial lifting with state-input cross terms for non-affine dynamics."""
    nu = [
        "u1",
        "u2",
        "z2*u1",
        "z2*u2",
        "z3*u1",
        "z3*u2",
        "u1^2",
        "u1*u2",
        "u2^2",
        "z4*u1",
        "z6*u2",
        "1",
    ]
    return Dictionary.from_expressions(
        ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"], nu, n_x=2, n_u=2
    )


def unicycle_trig() -> Dictionary:
    """Trigonometric lifting for planar vehicles with heading state x3."""
    phi = ["1", "x1", "x2", "sin(x3)", "cos(x3)", "x3", "sin(x3)^2", "cos(x3)^2"]
    nu = ["u1", "u2", "z5*u2", "z4*u2", "u2*tan(u1)", "u2*u1^2", "z6*u1"]
    return Dictionary.from_expressions(phi, nu, n_x=3, n_u=2)


def identity_lti(n_x: int, n_u: int) -> Dictionary:
    """Baseline lifting phi = [1; x], nu = u (fully linear lifted model)."""
    phi = ["1"] + _var_names("x", n_x)
    nu = _var_names("u", n_u)
    return Dictionary.from_expressions(phi, nu, n_x=n_x, n_u=n_u)


def builtin_dictionaries() -> dict:
    """Named constructors; each takes (n_x, n_u) and validates the dimensions."""

    def _fixed(factory, want_x, want_u, name):
        def make(n_x, n_u):
            if (n_x, n_u) != (want_x, want_u):
                raise ValueError(
                    f"dictionary {name!r} is for n_x={want_x}, n_u={want_u}"
                )
            return factory()

        return make

    return {
        "poly2": _fixed(poly2_exogenous, 2, 2, "poly2"),
        "poly2-nonaffine": _fixed(poly2_nonaffine, 2, 2, "poly2-nonaffine"),
        "unicycle": _fixed(unicycle_trig, 3, 2, "unicycle"),
        "identity-lti": identity_lti,
    }


def get_dictionary(name: str, n_x: int, n_u: int) -> Dictionary:
    registry = builtin_dictionaries()
    if name not in registry:
        raise ValueError(f"unknown dictionary {name!r}; options: {sorted(registry)}")
    return registry[name](n_x, n_u)
