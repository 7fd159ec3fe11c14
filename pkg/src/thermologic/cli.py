"""Command-line front end.

Subcommands: ``classify``, ``cost``, ``optimize``, ``box-run``,
``cycle {rle-le, build, uncertain, partial}`` and ``qbound``.  Every run
writes ``manifest.json`` (config, input hashes, seed, versions) into the
output directory before any other file; identical configs and seeds
produce byte-identical outputs.  Energies are reported in units of
``k T_R`` unless ``--si`` is given.

Exit codes: 0 ok, 2 unparseable input, 3 validation failure, 4 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boxprotocol import ProtocolAbortError, reconcile, run_protocol
from .costs import (
    DEFAULT_SEED,
    expected_cost,
    glp_bounds,
    is_infinite,
    make_weights,
    minimize_expected_work,
    optimal_weights,
)
from .cycles import (
    build_reversible_cycle,
    evaluate_cycle,
    partial_operation_cost,
    rle_le_cycle,
    uncertain_operation_cost,
)
from .logic import classify as classify_op
from .logic import LogicError, shannon_entropy
from .quantum import QuantumError, default_setup, run_trials
from .serialize import (
    ScenarioParseError,
    format_float,
    load_scenario,
    parse_operation,
    render_energy,
    write_cost_csv,
    write_cost_json,
    write_ledger_csv,
    write_manifest,
    write_trials_csv,
    write_widths_tsv,
)
from .thermo import NATURAL_UNITS, StateThermo, ThermoError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def _common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--format", choices=("csv", "json", "both"), default="both")
    parser.add_argument(
        "--si",
        action="store_true",
        help="report energies in scenario units instead of multiples of kT_R",
    )


def _divisor(scenario, args) -> tuple[float, str]:
    if args.si:
        return 1.0, "scenario"
    return scenario.kT, "kT_R"


def _parse_weights(text, scenario):
    if text is None:
        return optimal_weights(scenario)
    values = [float(v) for v in text.split(",")]
    return make_weights(scenario, values)


def _config_of(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_classify(args) -> int:
    scenario = load_scenario(args.scenario)
    outdir = Path(args.out)
    write_manifest(outdir, "classify", _config_of(args), [args.scenario], args.seed)
    kind = classify_op(scenario.op)
    payload = {
        "deterministic": kind.deterministic,
        "reversible": kind.reversible,
        "input_entropy_bits": shannon_entropy(scenario.input_dist),
        "output_entropy_bits": shannon_entropy(scenario.output_dist),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    (outdir / "classify.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_cost(args) -> int:
    scenario = load_scenario(args.scenario)
    outdir = Path(args.out)
    write_manifest(outdir, "cost", _config_of(args), [args.scenario], args.seed)
    weights = _parse_weights(args.weights, scenario)
    report = expected_cost(scenario, weights)
    divisor, unit = _divisor(scenario, args)
    if args.format in ("csv", "both"):
        write_cost_csv(report, scenario, outdir / "report.csv", divisor)
    if args.format in ("json", "both"):
        write_cost_json(report, scenario, outdir / "report.json", divisor, unit)
    print(f"work_bound = {report.work_bound / divisor:.6f} {unit}")
    print(f"heat_bound = {report.heat_bound / divisor:.6f} {unit}")
    print(f"expected_work = {render_energy(report.expected_work, divisor)} {unit}")
    print(f"expected_heat = {render_energy(report.expected_heat, divisor)} {unit}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    scenario = load_scenario(args.scenario)
    outdir = Path(args.out)
    write_manifest(outdir, "optimize", _config_of(args), [args.scenario], args.seed)
    analytic = optimal_weights(scenario)
    numeric = minimize_expected_work(scenario, seed=args.seed)
    analytic_value = expected_cost(scenario, analytic).expected_work
    divisor, unit = _divisor(scenario, args)
    payload = {
        "energy_unit": unit,
        "analytic_weights": [float(v) for v in analytic.weights],
        "analytic_value": None if is_infinite(analytic_value) else analytic_value / divisor,
        "numeric_weights": [float(v) for v in numeric.weights],
        "numeric_value": numeric.value / divisor,
        "numeric_converged": numeric.converged,
        "weight_independent": analytic.weight_independent,
        "glp_work_bound": glp_bounds(scenario).work_bound / divisor,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    (outdir / "optimize.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_box_run(args) -> int:
    scenario = load_scenario(args.scenario)
    outdir = Path(args.out)
    write_manifest(outdir, "box-run", _config_of(args), [args.scenario], args.seed)
    weights = _parse_weights(args.weights, scenario)
    ledger = run_protocol(scenario, weights)
    divisor, unit = _divisor(scenario, args)
    write_ledger_csv(ledger, scenario, outdir / "ledger.csv", divisor)
    write_widths_tsv(ledger, scenario, outdir / "widths.tsv")
    check = reconcile(ledger, scenario, weights)
    for warning in ledger.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for (i, j), (work, heat) in sorted(ledger.trajectory_totals().items()):
        label = f"{scenario.op.input_labels[i]}->{scenario.op.output_labels[j]}"
        print(
            f"trajectory {label}: work = {work / divisor:.6f} {unit}, "
            f"heat = {heat / divisor:.6f} {unit}"
        )
    print(f"reconciled = {str(check.ok).lower()}")
    if not check.ok:
        for message in check.messages:
            print(f"error: {message}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_cycle_rle_le(args) -> int:
    outdir = Path(args.out)
    write_manifest(outdir, "cycle rle-le", _config_of(args), [], args.seed)
    report = rle_le_cycle(
        args.p, args.p_prime, model=args.model, temperature=args.temperature
    )
    kt = NATURAL_UNITS.k_B * args.temperature
    divisor = 1.0 if args.si else kt
    unit = "scenario" if args.si else "kT"
    payload = {
        "model": report.model,
        "p": report.p,
        "p_prime": report.p_prime,
        "energy_unit": unit,
        "stages": [
            {
                "name": s.name,
                "kind": s.kind,
                "work": s.work / divisor,
                "heat": s.heat / divisor,
                "mean_state_entropy_change_k": s.mean_state_entropy_change,
                "mixing_entropy_change_k": s.mixing_entropy_change,
                "bath_entropy_change_k": s.bath_entropy_change,
            }
            for s in report.stages
        ],
        "net_work": report.net_work / divisor,
        "net_heat": report.net_heat / divisor,
        "kl_nats": report.kl_nats,
        "reversible": report.reversible,
        "entropy_totals_k": report.entropy_totals,
    }
    (outdir / "cycle.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"net_work = {report.net_work / divisor:.6f} {unit}")
    print(f"kl = {report.kl_nats:.6f} nats")
    print(f"reversible = {str(report.reversible).lower()}")
    return EXIT_OK


def cmd_cycle_build(args) -> int:
    scenario = load_scenario(args.scenario)
    outdir = Path(args.out)
    write_manifest(outdir, "cycle build", _config_of(args), [args.scenario], args.seed)
    weights = _parse_weights(args.weights, scenario)
    spec = build_reversible_cycle(
        scenario.op,
        weights.weights,
        scenario.input_thermo,
        scenario.output_thermo,
        scenario.reference_temperature,
        scenario.units,
    )
    middle = (
        [float(v) for v in args.middle_input.split(",")] if args.middle_input else None
    )
    evaluation = evaluate_cycle(spec, middle_input=middle)
    divisor, unit = _divisor(scenario, args)
    payload = {
        "energy_unit": unit,
        "leg_works": [
            "INF" if is_infinite(c.expected_work) else c.expected_work / divisor
            for c in evaluation.leg_costs
        ],
        "total_work": "INF"
        if is_infinite(evaluation.total_work)
        else evaluation.total_work / divisor,
        "total_heat": "INF"
        if is_infinite(evaluation.total_heat)
        else evaluation.total_heat / divisor,
    }
    (outdir / "cycle.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"total_work = {payload['total_work']}")
    return EXIT_OK


def _thermo_from_config(entries, count, t_ref):
    if entries is None:
        uniform = StateThermo(0.5 * t_ref, 0.0, t_ref)
        return (uniform,) * count
    out = []
    for entry in entries:
        out.append(StateThermo(float(entry["E"]), float(entry["S"]), float(entry["T"])))
    if len(out) != count:
        raise ScenarioParseError(f"thermo table must list {count} states")
    return tuple(out)


def cmd_cycle_uncertain(args) -> int:
    config = json.loads(Path(args.config).read_text())
    outdir = Path(args.out)
    write_manifest(outdir, "cycle uncertain", _config_of(args), [args.config], args.seed)
    from .logic import DiscreteDistribution

    t_ref = float(config.get("reference_temperature", 1.0))
    branches = [
        (parse_operation(b["operation"]), float(b["probability"]))
        for b in config["branches"]
    ]
    dist = DiscreteDistribution(config["input"]["probs"])
    n_in = branches[0][0].n_inputs
    n_out = branches[0][0].n_outputs
    report = uncertain_operation_cost(
        branches,
        dist,
        _thermo_from_config(config.get("input_thermo"), n_in, t_ref),
        _thermo_from_config(config.get("output_thermo"), n_out, t_ref),
        reference_temperature=t_ref,
    )
    payload = {
        "branch_works": list(report.branch_works),
        "mean_branch_work": report.mean_branch_work,
        "restore_work": report.restore_work,
        "cycle_total": report.cycle_total,
        "mutual_information_nats": report.mutual_information_nats,
        "mutual_information_bits": report.mutual_information_nats / np.log(2.0),
        "excess": report.excess,
        "factorizes": report.factorizes,
    }
    (outdir / "uncertain.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    print(f"excess = {report.excess!r}")
    return EXIT_OK


def cmd_cycle_partial(args) -> int:
    config = json.loads(Path(args.config).read_text())
    outdir = Path(args.out)
    write_manifest(outdir, "cycle partial", _config_of(args), [args.config], args.seed)
    t_ref = float(config.get("reference_temperature", 1.0))
    op = parse_operation(config["operation"])
    report = partial_operation_cost(
        config["joint_prior"],
        op,
        _thermo_from_config(config.get("input_thermo"), op.n_inputs, t_ref),
        _thermo_from_config(config.get("output_thermo"), op.n_outputs, t_ref),
        reference_temperature=t_ref,
    )
    payload = {
        "forward_work": report.forward_work,
        "restore_work": report.restore_work,
        "cycle_total": report.cycle_total,
        "conditional_mutual_information_nats": report.conditional_mutual_information_nats,
        "conditional_mutual_information_bits": report.conditional_mutual_information_nats
        / np.log(2.0),
        "excess": report.excess,
        "product_prior": report.product_prior,
        "screens_off": report.screens_off,
    }
    (outdir / "partial.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    print(f"excess = {report.excess!r}")
    return EXIT_OK


def cmd_qbound(args) -> int:
    outdir = Path(args.out)
    inputs = [args.config] if args.config else []
    write_manifest(outdir, "qbound", _config_of(args), inputs, args.seed)
    if args.config:
        config = json.loads(Path(args.config).read_text())
    else:
        config = {}
    block_sizes = tuple(
        int(v) for v in str(config.get("system_blocks", args.blocks)).strip("[]").split(",")
    )
    setup = default_setup(
        system_block_sizes=block_sizes,
        env_dim=int(config.get("env_dim", args.env_dim)),
        reference_temperature=float(config.get("reference_temperature", args.t_ref)),
        input_probs=config.get("input_probs"),
        target_output_probs=config.get("target_output_probs"),
    )
    trials = int(config.get("trials", args.trials))
    seed = int(config.get("seed", args.seed))
    batch = run_trials(setup, trials, seed)
    write_trials_csv(batch, outdir / "trials.csv")
    print(f"trials = {trials}")
    print(f"violations: {batch.total_violations}")
    print(f"bound_violations = {batch.bound_violations}")
    print(f"subadditivity_violations = {batch.subadditivity_violations}")
    print(f"relative_entropy_violations = {batch.relative_entropy_violations}")
    print(f"respecting_trials = {batch.respecting_trials}")
    worst = min((r.slack for r in batch.results), default=0.0)
    print(f"min_slack = {format_float(worst)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermologic",
        description="Work, heat and entropy accounting for stochastic logical operations",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify an operation and report entropies")
    p.add_argument("scenario")
    _common_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("cost", help="per-transition and expected work/heat with bounds")
    p.add_argument("scenario")
    p.add_argument("--weights", help="comma-separated weights (default: optimal)")
    _common_flags(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("optimize", help="numeric weight optimisation cross-check")
    p.add_argument("scenario")
    _common_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("box-run", help="run the staged box implementation")
    p.add_argument("scenario")
    p.add_argument("--weights", help="comma-separated weights (default: optimal)")
    _common_flags(p)
    p.set_defaults(func=cmd_box_run)

    cycle = sub.add_parser("cycle", help="thermodynamic cycle analyses")
    cycle_sub = cycle.add_subparsers(dest="cycle_command", required=True)

    p = cycle_sub.add_parser("rle-le", help="unset-then-reset box cycle")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--p-prime", type=float, default=None)
    p.add_argument(
        "--model", choices=("uniform", "adiabatic_equilibrium"), default="uniform"
    )
    p.add_argument("--temperature", type=float, default=1.0)
    _common_flags(p)
    p.set_defaults(func=cmd_cycle_rle_le)

    p = cycle_sub.add_parser("build", help="embed an operation in a closed cycle")
    p.add_argument("scenario")
    p.add_argument("--weights", help="comma-separated weights (default: optimal)")
    p.add_argument("--middle-input", help="actual middle-stage input distribution")
    _common_flags(p)
    p.set_defaults(func=cmd_cycle_build)

    p = cycle_sub.add_parser("uncertain", help="uncertain-operation cycle excess")
    p.add_argument("config")
    _common_flags(p)
    p.set_defaults(func=cmd_cycle_uncertain)

    p = cycle_sub.add_parser("partial", help="partial-operation cycle excess")
    p.add_argument("config")
    _common_flags(p)
    p.set_defaults(func=cmd_cycle_partial)

    p = sub.add_parser("qbound", help="random-unitary sweep of the work bound")
    p.add_argument("--config", help="JSON trial configuration")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--blocks", default="2,2", help="system block sizes (default 2,2)")
    p.add_argument("--env-dim", type=int, default=8)
    p.add_argument("--t-ref", type=float, default=1.0)
    _common_flags(p)
    p.set_defaults(func=cmd_qbound)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioParseError, json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (LogicError, ThermoError, QuantumError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ProtocolAbortError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
