"""Ground-truth simulators and the bounded-noise trajectory generator.

All step functions broadcast over column-stacked states/inputs and satisfy
step(x, u, w) = step(x, u, 0) + w.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .identify import Dataset, Trajectory
from .sets import Zonotope, sample_points


class SimulationError(RuntimeError):
    """A simulator produced an invalid state (domain violation or blow-up)."""


@dataclass(frozen=True)
class CSTRParams:
    rho: float = 1000.0
    Cp: float = 0.239
    dH: float = -5.0e4
    E_R: float = 8750.0
    k0: float = 7.2e10
    UA: float = 5.0e4
    q: float = 100.0
    V: float = 100.0
    Tf: float = 350.0
    CAf: float = 1.0
    CA0: float = 0.5
    T0: float = 350.0
    Tc0: float = 300.0
    Ts: float = 0.015


def cstr_step(params: CSTRParams, x, u, w):
    """Discretized stirred-tank reactor; states are deviations from (CA0, T0)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    p = params
    temp = x[1] + p.T0
    if np.any(temp <= 0.0):
        raise SimulationError("nonpositive temperature argument in CSTR exponential")
    arr = np.exp(-p.E_R / temp)
    qv = p.q * p.Ts / (2.0 * p.V)
    heat = p.Ts * p.UA / (2.0 * p.V * p.rho * p.Cp)
    x1 = (
        ((1.0 - qv - p.k0 * p.Ts * arr) * (x[0] + p.CA0) + (p.q / p.V) * p.CAf * p.Ts)
        / (1.0 + qv)
        + u[0] * p.Ts
        - p.CA0
    )
    x2 = (
        (
            (x[1] + p.T0) * (1.0 - qv - heat)
            + p.Ts * ((p.q / p.V) * p.Tf + (p.UA / (p.V * p.rho * p.Cp)) * p.Tc0)
        )
        / (1.0 + qv + heat)
        - (x[0] + p.CA0) * p.dH * p.k0 * p.Ts / (p.rho * p.Cp) * arr
        + u[1] * p.Ts
        - p.T0
    )
    return np.stack([x1, x2]) + w


def nonaffine_step(x, u, w, lam: float = 1.0, mu: float = -0.05, Ts: float = 0.01):
    """Discretized non-affine system with exponential input coupling."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    x1 = x[0] + Ts * (mu * x[0] - x[0]) + Ts * x[0] * np.exp(u[0])
    x2 = (
        x[1]
        + Ts * (lam * (x[1] - x[0] ** 2) - x[1])
        + Ts * (u[0] * u[1] + x[1] * np.exp(u[1]))
    )
    return np.stack([x1, x2]) + w


def unicycle_step(x, u, w, Ts: float = 0.05):
    """Discrete unicycle: planar position plus heading, velocity/turn-rate inputs."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    x1 = x[0] + Ts * u[0] * np.cos(x[2])
    x2 = x[1] + Ts * u[0] * np.sin(x[2])
    x3 = x[2] + Ts * u[1]
    return np.stack([x1, x2, x3]) + w


def toy_step(x, u, mu: float, lam: float, delta: float):
    """Two-state system whose lifting [x1, x2, x1^2] is exactly linear."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.stack([mu * x[0], lam * (x[1] - x[0] ** 2) + delta * u[0]])


@dataclass(frozen=True)
class SystemSpec:
    name: str
    state_dim: int
    input_dim: int
    step: Callable
    params: dict = field(default_factory=dict)


def get_system(name: str, **param_overrides) -> SystemSpec:
    if name == "cstr":
        params = CSTRParams(**param_overrides)
        return SystemSpec(
            "cstr", 2, 2, lambda x, u, w: cstr_step(params, x, u, w), {"Ts": params.Ts}
        )
    if name == "nonaffine":
        params = {"lam": 1.0, "mu": -0.05, "Ts": 0.01, **param_overrides}
        return SystemSpec(
            "nonaffine", 2, 2, lambda x, u, w: nonaffine_step(x, u, w, **params), params
        )
    if name == "unicycle":
        params = {"Ts": 0.05, **param_overrides}
        return SystemSpec(
            "unicycle", 3, 2, lambda x, u, w: unicycle_step(x, u, w, **params), params
        )
    if name == "toy":
        params = {"mu": 0.9, "lam": 0.5, "delta": 1.0, **param_overrides}
        return SystemSpec(
            "toy",
            2,
            1,
            lambda x, u, w: toy_step(x, u, **params) + np.asarray(w, dtype=float),
            params,
        )
    raise ValueError(f"unknown system {name!r}; options: cstr, nonaffine, unicycle, toy")


def generate_dataset(
    system: SystemSpec,
    X0: Zonotope,
    U: Zonotope,
    Zw: Zonotope,
    q: int,
    lengths,
    seed: int,
) -> Dataset:
    """Roll q noisy trajectories; deterministic per (seed, trajectory index).

    Initial states, inputs and noise are drawn with uniform zonotope
    coefficients (uniform beta, not uniform volume).
    """
    lengths = list(lengths)
    if len(lengths) != q:
        raise ValueError(f"expected {q} lengths, got {len(lengths)}")
    if any(t < 1 for t in lengths):
        raise ValueError("trajectory lengths must be >= 1")
    trajectories = []
    for i in range(q):
        rng = np.random.default_rng([seed, i])
        T = lengths[i]
        x = sample_points(X0, 1, rng)[:, 0]
        states = np.empty((system.state_dim, T + 1))
        inputs = np.empty((system.input_dim, T))
        states[:, 0] = x
        for k in range(T):
            u = sample_points(U, 1, rng)[:, 0]
            w = sample_points(Zw, 1, rng)[:, 0]
            try:
                x = system.step(x, u, w)
            except Exception as exc:
                raise SimulationError(
                    f"trajectory {i} failed at step {k}: {exc}"
                ) from exc
            if not np.all(np.isfinite(x)):
                raise SimulationError(
                    f"trajectory {i} produced a non-finite state at step {k}"
                )
            inputs[:, k] = u
            states[:, k + 1] = x
        trajectories.append(Trajectory(states, inputs))
    return Dataset(trajectories)
