"""Snapshot construction and least-squares identification of the lifted model."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary


@dataclass(frozen=True)
class Trajectory:
    """One input-state record: states (n_x, T+1), inputs (n_u, T)."""

    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        inputs = np.asarray(self.inputs, dtype=float)
        if states.ndim != 2 or inputs.ndim != 2:
            raise ValueError("states and inputs must be 2-D (dim x time)")
        if inputs.shape[1] != states.shape[1] - 1:
            raise ValueError(
                f"inputs must have one column less than states "
                f"({inputs.shape[1]} vs {states.shape[1]})"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)

    @property
    def length(self) -> int:
        return self.inputs.shape[1]


class Dataset:
    """q input-state trajectories sharing state/input dimensions."""

    def __init__(self, trajectories):
        trajectories = list(trajectories)
        if not trajectories:
            raise ValueError("dataset must contain at least one trajectory")
        n_x = trajectories[0].states.shape[0]
        n_u = trajectories[0].inputs.shape[0]
        for i, tr in enumerate(trajectories):
            if tr.states.shape[0] != n_x or tr.inputs.shape[0] != n_u:
                raise ValueError(f"trajectory {i} has inconsistent dimensions")
        self.trajectories = trajectories
        self.n_x = n_x
        self.n_u = n_u

    @property
    def n_trajectories(self) -> int:
        return len(self.trajectories)

    @property
    def total_transitions(self) -> int:
        return sum(tr.length for tr in self.trajectories)

    def concat(self, other: "Dataset") -> "Dataset":
        return Dataset(self.trajectories + other.trajectories)

    def transition_samples(self):
        """All (s, f(s)) pairs: s = [x_k; u_k] columns, successor x_{k+1} columns."""
        s_cols, f_cols = [], []
        for tr in self.trajectories:
            s_cols.append(np.vstack([tr.states[:, :-1], tr.inputs]))
            f_cols.append(tr.states[:, 1:])
        return np.hstack(s_cols), np.hstack(f_cols)

    def to_json(self) -> dict:
        return {
            "trajectories": [
                {
                    "states": tr.states.T.tolist(),
                    "inputs": tr.inputs.T.tolist(),
                }
                for tr in self.trajectories
            ],
            "state_dim": self.n_x,
            "input_dim": self.n_u,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Dataset":
        n_x, n_u = data["state_dim"], data["input_dim"]
        trajectories = []
        for rec in data["trajectories"]:
            states = np.asarray(rec["states"], dtype=float).T.reshape(n_x, -1)
            raw_inputs = np.asarray(rec["inputs"], dtype=float)
            inputs = raw_inputs.T.reshape(n_u, -1) if raw_inputs.size else np.zeros(
                (n_u, states.shape[1] - 1)
            )
            trajectories.append(Trajectory(states, inputs))
        return cls(trajectories)


def trajectory_to_csv(trajectory: Trajectory) -> str:
    """CSV with columns k, x1..xn, u1..um (inputs blank on the final row)."""
    n_x, n_u = trajectory.states.shape[0], trajectory.inputs.shape[0]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["k"] + [f"x{i + 1}" for i in range(n_x)] + [f"u{i + 1}" for i in range(n_u)]
    )
    T = trajectory.length
    for k in range(T + 1):
        row = [k] + [repr(v) for v in trajectory.states[:, k]]
        row += [repr(v) for v in trajectory.inputs[:, k]] if k < T else [""] * n_u
        writer.writerow(row)
    return buf.getvalue()


def trajectory_from_csv(text: str, n_x: int, n_u: int) -> Trajectory:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    body = rows[1:]  # header
    states = np.array([[float(r[1 + i]) for r in body] for i in range(n_x)])
    in_rows = body[:-1]
    inputs = np.array(
        [[float(r[1 + n_x + i]) for r in in_rows] for i in range(n_u)]
    ).reshape(n_u, -1)
    return Trajectory(states, inputs)


@dataclass(frozen=True)
class KoopmanModel:
    """Lifted linear model z+ = A z + B nu(z, u) with its dictionary."""

    A: np.ndarray
    B: np.ndarray
    dictionary: Dictionary

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float).reshape(A.shape[0], -1)
        p_phi, p_nu = self.dictionary.p_phi, self.dictionary.p_nu
        if A.shape != (p_phi, p_phi) or B.shape != (p_phi, p_nu):
            raise ValueError(
                f"model matrices {A.shape}/{B.shape} inconsistent with "
                f"dictionary (p_phi={p_phi}, p_nu={p_nu})"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def step(self, z_points, u_points) -> np.ndarray:
        """One model step for column-stacked lifted states."""
        z = np.atleast_2d(z_points)
        return self.A @ z + self.B @ self.dictionary.nu_values(z, u_points)

    def to_json(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "dictionary": self.dictionary.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "KoopmanModel":
        return cls(
            np.asarray(data["A"], dtype=float),
            np.asarray(data["B"], dtype=float),
            Dictionary.from_json(data["dictionary"]),
        )


def build_snapshots(data: Dataset, dictionary: Dictionary):
    """Lifted snapshot matrices (Psi (p, T), PhiPlus (p_phi, T)).

    Columns are ordered trajectory-major, then time-major; Psi stacks the
    lifted predecessors over the input observables, PhiPlus lifts the
    successors.
    """
    if data.n_x != dictionary.n_x or data.n_u != dictionary.n_u:
        raise ValueError(
            f"dataset dims ({data.n_x}, {data.n_u}) do not match dictionary "
            f"({dictionary.n_x}, {dictionary.n_u})"
        )
    psi_cols, plus_cols = [], []
    for tr in data.trajectories:
        z_minus = dictionary.lift_states(tr.states[:, :-1])
        nu_minus = dictionary.nu_values(z_minus, tr.inputs)
        psi_cols.append(np.vstack([z_minus, nu_minus]))
        plus_cols.append(dictionary.lift_states(tr.states[:, 1:]))
    return np.hstack(psi_cols), np.hstack(plus_cols)


def fit_koopman(Psi: np.ndarray, PhiPlus: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Minimize ||PhiPlus - K Psi||_F^2 (+ ridge ||K||_F^2) for K (p_phi, p).

    Solved through an SVD-backed least-squares factorization of Psi^T; with
    ridge = 0 and rank-deficient Psi this returns the minimum-norm minimizer.
    """
    Psi = np.asarray(Psi, dtype=float)
    PhiPlus = np.asarray(PhiPlus, dtype=float)
    if Psi.ndim != 2 or PhiPlus.ndim != 2 or Psi.shape[1] != PhiPlus.shape[1]:
        raise ValueError("snapshot matrices must share the column count")
    if Psi.shape[1] == 0:
        raise ValueError("cannot fit a model from empty data")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    lhs = Psi.T
    rhs = PhiPlus.T
    if ridge > 0:
        p = Psi.shape[0]
        lhs = np.vstack([lhs, np.sqrt(ridge) * np.eye(p)])
        rhs = np.vstack([rhs, np.zeros((p, PhiPlus.shape[0]))])
    solution, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return solution.T


def split_AB(K: np.ndarray, p_phi: int, p_nu: int):
    K = np.asarray(K, dtype=float)
    if K.shape[1] != p_phi + p_nu:
        raise ValueError(f"K has {K.shape[1]} columns, expected {p_phi + p_nu}")
    return K[:, :p_phi], K[:, p_phi:]


def identify_model(data: Dataset, dictionary: Dictionary, ridge: float = 0.0) -> KoopmanModel:
    """Snapshots, least squares and the A/B split in one call."""
    Psi, PhiPlus = build_snapshots(data, dictionary)
    K = fit_koopman(Psi, PhiPlus, ridge)
    A, B = split_AB(K, dictionary.p_phi, dictionary.p_nu)
    return KoopmanModel(A, B, dictionary)
