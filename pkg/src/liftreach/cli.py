"""Batch command-line front end.

Exit codes: 0 success, 2 input/config error, 3 computation failure,
4 verification violation.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .benchmarks import SimulationError, generate_dataset, get_system
from .dictionary import Dictionary, get_dictionary
from .errorsets import ResidualRolloutError
from .expr import ExprError, IntervalDomainError
from .identify import Dataset, KoopmanModel, identify_model
from .reach import ReachResult, ReachStepError, reach
from .scenario import Scenario, default_scenario
from .sets import Zonotope
from .verify import (
    PipelineError,
    compare_pipelines,
    monte_carlo_containment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_VIOLATION = 4

DEFAULT_LENGTHS = {"cstr": 10, "nonaffine": 60, "unicycle": 60, "toy": 60}


class ConfigError(ValueError):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _csv_path(path):
    root, ext = os.path.splitext(path)
    return root + ".csv" if ext.lower() == ".json" else path + ".csv"


def _load_scenario(path) -> Scenario:
    return Scenario.from_json(_load_json(path))


def _resolve_dictionary(spec: str, n_x: int, n_u: int) -> Dictionary:
    if os.path.exists(spec):
        return Dictionary.from_json(_load_json(spec))
    return get_dictionary(spec, n_x, n_u)


def cmd_simulate(args):
    scenario = default_scenario(args.system)
    config = _load_json(args.config) if args.config else {}
    q = int(config.get("q", 30))
    if "lengths" in config:
        lengths = [int(t) for t in config["lengths"]]
    else:
        lengths = [int(config.get("length", DEFAULT_LENGTHS[args.system]))] * q
    X0 = Zonotope.from_json(config["X0"]) if "X0" in config else scenario.X0
    U = Zonotope.from_json(config["U"]) if "U" in config else scenario.U
    Zw = Zonotope.from_json(config["Zw"]) if "Zw" in config else scenario.Zw
    system = get_system(args.system)
    data = generate_dataset(system, X0, U, Zw, q, lengths, args.seed)
    _write_json(args.out, data.to_json())
    print(
        f"simulated {q} {args.system} trajectories "
        f"({data.total_transitions} transitions) -> {args.out}"
    )
    return EXIT_OK


def cmd_identify(args):
    data = Dataset.from_json(_load_json(args.data))
    dictionary = _resolve_dictionary(args.dictionary, data.n_x, data.n_u)
    model = identify_model(data, dictionary, ridge=args.ridge)
    _write_json(args.out, model.to_json())
    print(
        f"identified lifted model (p_phi={dictionary.p_phi}, p_nu={dictionary.p_nu}) "
        f"from {data.total_transitions} transitions -> {args.out}"
    )
    return EXIT_OK


def cmd_reach(args):
    model = KoopmanModel.from_json(_load_json(args.model))
    data = Dataset.from_json(_load_json(args.data))
    scenario = _load_scenario(args.scenario)
    N = args.horizon if args.horizon is not None else scenario.horizon
    result = reach(
        model,
        data,
        scenario.X0,
        scenario.inputs_list(N),
        scenario.Zw,
        N,
        scenario.reach_options(),
    )
    _write_json(args.out, result.to_json())
    csv_out = _csv_path(args.out)
    with open(csv_out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "dim", "lower", "upper", "width"])
        writer.writerows(result.hull_rows())
    print(f"computed {N} reachable steps -> {args.out}, hull bounds -> {csv_out}")
    return EXIT_OK


def cmd_verify(args):
    result = ReachResult.from_json(_load_json(args.result))
    scenario = _load_scenario(args.scenario)
    system = get_system(args.system)
    report = monte_carlo_containment(
        system,
        scenario.X0,
        scenario.inputs_list(result.horizon),
        scenario.Zw,
        result,
        samples=args.samples,
        seed=args.seed,
    )
    _write_json(args.out, report.to_json())
    if report.all_contained:
        print(f"containment 100% over {args.samples} samples -> {args.out}")
        return EXIT_OK
    sample, step, _ = report.first_violation
    print(
        f"violation: sample {sample} leaves the reachable set at step {step} "
        f"(fractions written to {args.out})"
    )
    return EXIT_VIOLATION


def cmd_compare(args):
    data = Dataset.from_json(_load_json(args.data))
    scenario = _load_scenario(args.scenario)
    if not scenario.system or not scenario.dictionary:
        raise ConfigError("compare needs 'system' and 'dictionary' in the scenario")
    system = get_system(scenario.system)
    dict_k = _resolve_dictionary(scenario.dictionary, data.n_x, data.n_u)
    dict_b = _resolve_dictionary(scenario.baseline_dictionary, data.n_x, data.n_u)
    comparison = compare_pipelines(system, data, dict_k, dict_b, scenario)
    _write_json(args.out, comparison.to_json())
    csv_out = _csv_path(args.out)
    with open(csv_out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "dim", "width_koopman", "width_baseline"])
        for k, dim, wk, wb, _ in comparison.rows():
            writer.writerow([k, dim, wk, wb])
    final = comparison.widths_koopman[-1] / comparison.widths_baseline[-1]
    print(
        f"compared pipelines over {scenario.horizon} steps; final width ratios "
        f"{np.round(final, 4).tolist()} -> {csv_out}"
    )
    return EXIT_OK


def cmd_export_plot(args):
    result = ReachResult.from_json(_load_json(args.result))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "dim", "lower", "upper", "width"])
        writer.writerows(result.hull_rows())
    print(f"wrote {result.horizon * result.projected_sets[0].dim} hull rows -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftreach",
        description="Identify lifted linear models from data and compute "
        "guaranteed reachable-set over-approximations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a noisy benchmark dataset")
    p.add_argument("--system", required=True, choices=sorted(DEFAULT_LENGTHS))
    p.add_argument("--config", help="JSON with q, length(s) and set overrides")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="fit the lifted model by least squares")
    p.add_argument("--data", required=True)
    p.add_argument("--dictionary", required=True, help="builtin name or JSON file")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("reach", help="compute reachable-set over-approximations")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--horizon", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("verify", help="Monte-Carlo containment check of a result")
    p.add_argument("--result", required=True)
    p.add_argument("--system", required=True, choices=sorted(DEFAULT_LENGTHS))
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="lifted pipeline vs identity-LTI baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-plot", help="CSV of per-step interval hulls")
    p.add_argument("--result", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except (ConfigError, ExprError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except (
        ReachStepError,
        IntervalDomainError,
        ResidualRolloutError,
        SimulationError,
        PipelineError,
        ArithmeticError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_COMPUTE
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
