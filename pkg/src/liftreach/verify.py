"""Empirical soundness checks and conservatism metrics for reach results."""

from dataclasses import dataclass, replace

import numpy as np

from .benchmarks import SystemSpec
from .dictionary import Dictionary
from .identify import Dataset, identify_model
from .reach import ReachOptions, ReachResult, reach
from .sets import Zonotope, contains_point, interval_hull, sample_points


class PipelineError(RuntimeError):
    """One branch of a pipeline comparison failed."""

    def __init__(self, branch: str, cause: Exception):
        self.branch = branch
        self.cause = cause
        super().__init__(f"{branch} pipeline failed: {cause}")


def contains_points(Z: Zonotope, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorized membership for column-stacked points.

    Fast paths: points beyond the interval hull are certainly outside, and a
    least-squares coefficient vector with ||b||_inf <= 1 + tol is an explicit
    membership witness. Everything else goes through the containment LP.
    """
    points = np.atleast_2d(points)
    m = points.shape[1]
    result = np.zeros(m, dtype=bool)
    diff = points - Z.c[:, None]
    radius = np.sum(np.abs(Z.G), axis=1)
    outside = np.any(np.abs(diff) > (1.0 + tol) * radius[:, None] + 1e-15, axis=0)
    undecided = ~outside
    if Z.n_generators == 0:
        result[undecided] = np.all(np.abs(diff[:, undecided]) <= tol, axis=0)
        return result
    if np.any(undecided):
        beta = np.linalg.pinv(Z.G) @ diff[:, undecided]
        witness = (np.max(np.abs(beta), axis=0) <= 1.0 + tol) & (
            np.max(np.abs(Z.G @ beta - diff[:, undecided]), axis=0) <= 1e-12
        )
        idx = np.nonzero(undecided)[0]
        result[idx[witness]] = True
        for j in idx[~witness]:
            result[j] = contains_point(Z, points[:, j], tol)
    return result


@dataclass
class ContainmentReport:
    fractions: np.ndarray  # per-step containment fraction
    first_violation: tuple | None  # (sample index, step, state) or None
    samples: int
    seed: int

    @property
    def all_contained(self) -> bool:
        return self.first_violation is None

    def to_json(self) -> dict:
        violation = None
        if self.first_violation is not None:
            s, k, x = self.first_violation
            violation = {"sample": int(s), "step": int(k), "state": x.tolist()}
        return {
            "fractions": self.fractions.tolist(),
            "first_violation": violation,
            "samples": self.samples,
            "seed": self.seed,
            "all_contained": self.all_contained,
        }


def monte_carlo_containment(
    system: SystemSpec,
    X0: Zonotope,
    inputs,
    Zw: Zonotope,
    result: ReachResult,
    samples: int,
    seed: int,
    tol: float = 1e-9,
) -> ContainmentReport:
    """Simulate true trajectories and check them against the projected sets.

    Violations are data, not errors; the report carries per-step fractions
    and the first violating sample (smallest step, then sample index).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    N = result.horizon
    if isinstance(inputs, Zonotope):
        inputs = [inputs] * N
    rng = np.random.default_rng(seed)
    x = sample_points(X0, samples, rng)
    fractions = np.empty(N)
    first_violation = None
    for k in range(N):
        u = sample_points(inputs[k], samples, rng)
        w = sample_points(Zw, samples, rng)
        x = system.step(x, u, w)
        inside = contains_points(result.projected_sets[k], x, tol)
        fractions[k] = np.mean(inside)
        if first_violation is None and not np.all(inside):
            bad = int(np.nonzero(~inside)[0][0])
            first_violation = (bad, k + 1, x[:, bad].copy())
    return ContainmentReport(fractions, first_violation, samples, seed)


def interval_width_metrics(result: ReachResult) -> np.ndarray:
    """Per-step interval-hull widths of the projected sets, shape (N, n_x)."""
    return np.array([interval_hull(Z).width for Z in result.projected_sets])


@dataclass
class ComparisonResult:
    widths_koopman: np.ndarray
    widths_baseline: np.ndarray
    result_koopman: ReachResult
    result_baseline: ReachResult

    def rows(self):
        """(k, dim, width_koopman, width_baseline, ratio) records."""
        out = []
        N, n_x = self.widths_koopman.shape
        for k in range(N):
            for i in range(n_x):
                wk = self.widths_koopman[k, i]
                wb = self.widths_baseline[k, i]
                ratio = wk / wb if wb > 0 else np.inf
                out.append((k + 1, i + 1, wk, wb, ratio))
        return out

    def to_json(self) -> dict:
        return {
            "widths_koopman": self.widths_koopman.tolist(),
            "widths_baseline": self.widths_baseline.tolist(),
        }


def run_pipeline(
    data: Dataset,
    dictionary: Dictionary,
    X0: Zonotope,
    inputs,
    Zw: Zonotope,
    N: int,
    options: ReachOptions = None,
) -> tuple:
    """Identify on the data and run reachability; returns (model, result)."""
    options = options or ReachOptions()
    model = identify_model(data, dictionary, ridge=options.ridge)
    return model, reach(model, data, X0, inputs, Zw, N, options)


def compare_pipelines(
    system: SystemSpec,
    data: Dataset,
    dict_koopman: Dictionary,
    dict_baseline: Dictionary,
    scenario,
) -> ComparisonResult:
    """Run the full pipeline with both dictionaries on identical data."""
    del system  # the comparison is purely data-driven; kept for CLI symmetry
    results = {}
    for branch, dictionary in (
        ("koopman", dict_koopman),
        ("baseline", dict_baseline),
    ):
        try:
            _, results[branch] = run_pipeline(
                data,
                dictionary,
                scenario.X0,
                scenario.inputs_list(scenario.horizon),
                scenario.Zw,
                scenario.horizon,
                scenario.reach_options(),
            )
        except Exception as exc:
            raise PipelineError(branch, exc) from exc
    return ComparisonResult(
        widths_koopman=interval_width_metrics(results["koopman"]),
        widths_baseline=interval_width_metrics(results["baseline"]),
        result_koopman=results["koopman"],
        result_baseline=results["baseline"],
    )


def scale_projected_generators(result: ReachResult, factor: float) -> ReachResult:
    """Copy of a result with every projected set's generators scaled (oracle checks)."""
    scaled = [Zonotope(Z.c, factor * Z.G) for Z in result.projected_sets]
    return replace(result, projected_sets=scaled)
