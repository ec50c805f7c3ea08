"""Scenario configuration: one JSON file drives reach, verify and compare."""

from dataclasses import dataclass, field

import numpy as np

from .reach import ReachOptions
from .sets import Zonotope


@dataclass
class Scenario:
    X0: Zonotope
    U: object  # Zonotope or list of Zonotopes
    Zw: Zonotope
    horizon: int
    reduction_order: float = 20.0
    ridge: float = 0.0
    estimator: dict = field(default_factory=dict)
    system: str | None = None
    dictionary: str | None = None
    baseline_dictionary: str = "identity-lti"

    def inputs_list(self, N: int):
        if isinstance(self.U, Zonotope):
            return [self.U] * N
        if len(self.U) < N:
            raise ValueError(f"scenario provides {len(self.U)} input sets, need {N}")
        return list(self.U[:N])

    def reach_options(self) -> ReachOptions:
        est = dict(self.estimator)
        return ReachOptions(
            reduction_order=self.reduction_order,
            ridge=self.ridge,
            estimator_seed=int(est.get("seed", 0)),
            lpsi_samples=int(est.get("lpsi_samples", 4096)),
            lpsi_inflation=float(est.get("inflation", 1.1)),
            slope_inflation=float(est.get("inflation", 1.1)),
            delta_grid_resolution=int(est.get("delta_grid_resolution", 20)),
        )

    def to_json(self) -> dict:
        U = (
            self.U.to_json()
            if isinstance(self.U, Zonotope)
            else [z.to_json() for z in self.U]
        )
        data = {
            "X0": self.X0.to_json(),
            "U": U,
            "Zw": self.Zw.to_json(),
            "horizon": self.horizon,
            "reduction_order": self.reduction_order,
            "ridge": self.ridge,
            "estimator": dict(self.estimator),
            "baseline_dictionary": self.baseline_dictionary,
        }
        if self.system:
            data["system"] = self.system
        if self.dictionary:
            data["dictionary"] = self.dictionary
        return data

    @classmethod
    def from_json(cls, data: dict) -> "Scenario":
        raw_U = data["U"]
        U = (
            [Zonotope.from_json(z) for z in raw_U]
            if isinstance(raw_U, list)
            else Zonotope.from_json(raw_U)
        )
        return cls(
            X0=Zonotope.from_json(data["X0"]),
            U=U,
            Zw=Zonotope.from_json(data["Zw"]),
            horizon=int(data["horizon"]),
            reduction_order=float(data.get("reduction_order", 20.0)),
            ridge=float(data.get("ridge", 0.0)),
            estimator=dict(data.get("estimator", {})),
            system=data.get("system"),
            dictionary=data.get("dictionary"),
            baseline_dictionary=data.get("baseline_dictionary", "identity-lti"),
        )


def default_scenario(system: str) -> Scenario:
    """Benchmark defaults: initial, input and noise sets plus horizon/dictionary."""
    if system in ("cstr", "nonaffine"):
        return Scenario(
            X0=Zonotope([0.5, 0.4], np.diag([0.05, 0.3])),
            U=Zonotope([-0.4, 1.4], np.diag([0.1, 0.2])),
            Zw=Zonotope([0.0, 0.0], np.array([[1e-4], [1e-4]])),
            horizon=10 if system == "cstr" else 50,
            system=system,
            dictionary="poly2" if system == "cstr" else "poly2-nonaffine",
        )
    if system == "unicycle":
        return Scenario(
            X0=Zonotope(np.zeros(3), np.diag([0.2, 0.2, 0.1])),
            U=Zonotope([1.0, 0.5], np.diag([0.1, 0.1])),
            Zw=Zonotope(np.zeros(3), np.diag([1e-4, 1e-4, 1e-4])),
            horizon=30,
            system="unicycle",
            dictionary="unicycle",
        )
    if system == "toy":
        return Scenario(
            X0=Zonotope([0.0, 0.0], np.eye(2)),
            U=Zonotope([0.0], np.array([[1.0]])),
            Zw=Zonotope.point([0.0, 0.0]),
            horizon=10,
            system="toy",
            dictionary=None,
        )
    raise ValueError(f"no default scenario for system {system!r}")
