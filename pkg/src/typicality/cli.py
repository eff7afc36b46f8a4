"""Command-line interface.

Commands: subspace-info, bounds, experiment, spin-chain, purity-oracle.
Flags override config-file values; the merged config is echoed into every
output artifact together with the seed and a config hash.  Exit codes:
0 success, 2 argument/config errors, 3 a bound row violated beyond three
standard errors, 4 I/O errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import experiments, spin_chain
from .bounds import (
    average_distance_bound,
    distance_tail_bound,
    levy_tail,
    operator_basis_tail_bound,
    state_sphere_dim,
    suggested_epsilon,
    write_bound_table,
)
from .errors import TypicalityError
from .linalg import DEFAULT_DIMENSION_CAP, trace_norm
from .subspace import canonical_ensemble

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BOUND_VIOLATION = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="typicality",
        description="Constrained-subspace ensembles, Haar sampling and concentration bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_subspace_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--spin-chain", nargs=3, type=int, metavar=("N", "K", "NP"),
                       help="fixed-excitation chain: sites, system sites, excitations")
        p.add_argument("--full", nargs=2, type=int, metavar=("DS", "DE"),
                       help="unconstrained composite space")
        p.add_argument("--subspace-file", help="JSON subspace produced by this package")
        p.add_argument("--cap", type=int, help=f"dense dimension cap (default {DEFAULT_DIMENSION_CAP})")

    p_info = sub.add_parser("subspace-info", help="dimensions and marginal purities")
    add_subspace_args(p_info)
    p_info.add_argument("--output")
    p_info.add_argument("--format", choices=("json", "text"))
    p_info.add_argument("--config", help="JSON config file; flags override")

    p_bounds = sub.add_parser("bounds", help="closed-form bound table, no sampling")
    p_bounds.add_argument("--d-s", type=int, required=True)
    p_bounds.add_argument("--d-r", type=int, required=True)
    p_bounds.add_argument("--d-eff", type=float, help="defaults to d_R / d_S")
    p_bounds.add_argument("--epsilon", type=float, action="append",
                          help="repeatable; defaults to d_R^(-1/3)")
    p_bounds.add_argument("--output")
    p_bounds.add_argument("--format", choices=("csv", "json"))

    p_exp = sub.add_parser("experiment", help="seeded Monte Carlo distance experiment")
    add_subspace_args(p_exp)
    p_exp.add_argument("--trials", type=int)
    p_exp.add_argument("--seed", type=int)
    p_exp.add_argument("--epsilon", type=float)
    p_exp.add_argument("--xi", type=float,
                       help="typical-window half-width; adds the window filter bound row")
    p_exp.add_argument("--workers", type=int)
    p_exp.add_argument("--output", help="prefix for .csv and .json artifacts")
    p_exp.add_argument("--format", choices=("csv", "json", "both"))
    p_exp.add_argument("--config", help="JSON config file; flags override")

    p_chain = sub.add_parser("spin-chain", help="chain report: window, tails, bounds")
    p_chain.add_argument("--n", type=int, required=True)
    p_chain.add_argument("--k", type=int, required=True)
    p_chain.add_argument("--np", dest="num_excited", type=int, required=True)
    p_chain.add_argument("--xi", type=float, help="window half-width, default k^(2/3)")
    p_chain.add_argument("--epsilon", type=float, help="default d_R^(-1/3)")
    p_chain.add_argument("--mode", choices=("dense", "combinatorial"))
    p_chain.add_argument("--output")

    p_pur = sub.add_parser("purity-oracle", help="exact mean purity, optional MC cross-check")
    add_subspace_args(p_pur)
    p_pur.add_argument("--trials", type=int)
    p_pur.add_argument("--seed", type=int)
    p_pur.add_argument("--workers", type=int)
    p_pur.add_argument("--output")
    return parser


def _merge_config(args: argparse.Namespace, keys: tuple[str, ...]) -> None:
    """Fill argument slots still at None from the JSON config file."""
    path = getattr(args, "config", None)
    if not path:
        return
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    for key in keys:
        if getattr(args, key, None) is None and key.replace("_", "-") in data:
            setattr(args, key, data[key.replace("_", "-")])
        elif getattr(args, key, None) is None and key in data:
            setattr(args, key, data[key])


def _subspace_spec(args: argparse.Namespace) -> dict:
    given = [s for s in ("spin_chain", "full", "subspace_file") if getattr(args, s, None)]
    if len(given) != 1:
        raise TypicalityError(
            "exactly one of --spin-chain, --full, --subspace-file is required"
        )
    if args.spin_chain:
        n, k, np_ = (int(x) for x in args.spin_chain)
        return {"kind": "spin-chain", "n": n, "k": k, "num_excited": np_}
    if args.full:
        ds, de = (int(x) for x in args.full)
        return {"kind": "full", "dim_system": ds, "dim_environment": de}
    return {"kind": "file", "path": args.subspace_file}


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _cmd_subspace_info(args: argparse.Namespace) -> int:
    _merge_config(args, ("spin_chain", "full", "subspace_file", "cap", "format", "output"))
    cap = args.cap or DEFAULT_DIMENSION_CAP
    sub_ = experiments.resolve_subspace(_subspace_spec(args), cap=cap)
    ens = canonical_ensemble(sub_)
    info = {
        "dim_system": sub_.shape.dim_system,
        "dim_environment": sub_.shape.dim_environment,
        "dim_subspace": sub_.dim_subspace,
        "effective_env_dim": ens.effective_env_dim,
        "system_purity": ens.system_purity,
        "environment_purity": ens.environment_purity,
    }
    fh, close = _open_out(args.output)
    try:
        if (args.format or "text") == "json":
            json.dump(info, fh, indent=2, sort_keys=True)
            fh.write("\n")
        else:
            for key, value in info.items():
                fh.write(f"{key}: {value}\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace) -> int:
    d_s, d_r = args.d_s, args.d_r
    if d_s < 1 or d_r < 1:
        raise TypicalityError("--d-s and --d-r must be positive")
    d_eff = args.d_eff if args.d_eff is not None else d_r / d_s
    if d_eff <= 0:
        raise TypicalityError("--d-eff must be positive")
    epsilons = args.epsilon or [suggested_epsilon(d_r)]
    rows = []
    for eps in epsilons:
        tail = distance_tail_bound(d_s, d_r, d_eff, eps)
        rows.append(tail.table_row())
        rows.append({
            "d_S": d_s, "d_R": d_r, "d_E_eff": d_eff, "epsilon": eps,
            "eta": eps, "eta_prime": levy_tail(state_sphere_dim(d_r), 2.0, eps),
            "source_formula": "levy_tail",
        })
    sharp, loose = average_distance_bound(d_s, d_r, d_eff)
    rows.append({"d_S": d_s, "d_R": d_r, "d_E_eff": d_eff, "epsilon": "",
                 "eta": sharp, "eta_prime": "", "source_formula": "average_distance_eff"})
    rows.append({"d_S": d_s, "d_R": d_r, "d_E_eff": d_eff, "epsilon": "",
                 "eta": loose, "eta_prime": "", "source_formula": "average_distance_dr"})
    threshold, tail_value = operator_basis_tail_bound(d_s, d_r)
    rows.append({"d_S": d_s, "d_R": d_r, "d_E_eff": d_eff, "epsilon": "",
                 "eta": threshold, "eta_prime": tail_value,
                 "source_formula": "operator_basis_tail"})
    fh, close = _open_out(args.output)
    try:
        if (args.format or "csv") == "json":
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")
        else:
            write_bound_table(rows, fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    _merge_config(args, ("spin_chain", "full", "subspace_file", "cap", "trials",
                         "seed", "epsilon", "xi", "workers", "output", "format"))
    if args.seed is None:
        raise TypicalityError("--seed is required for sampling commands")
    spec = _subspace_spec(args)
    filter_spec = None
    if args.xi is not None:
        filter_spec = {"kind": "typical-window", "half_width": float(args.xi)}
    config = experiments.ExperimentConfig(
        subspace=spec,
        trials=args.trials or 1000,
        seed=args.seed,
        epsilon=args.epsilon,
        filter=filter_spec,
        workers=args.workers or 1,
        cap=args.cap or DEFAULT_DIMENSION_CAP,
    )
    result = experiments.run_distance_experiment(config)
    prefix = args.output or "experiment"
    fmt = args.format or "both"
    if fmt in ("csv", "both"):
        with open(f"{prefix}.csv", "w", encoding="utf-8", newline="") as fh:
            experiments.write_trials_csv(fh, result)
    if fmt in ("json", "both"):
        with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
            experiments.write_summary_json(fh, result)
    for row in result.bound_rows:
        status = "ok" if row.satisfied else "VIOLATED"
        extra = " (vacuous)" if row.vacuous else ""
        print(f"{row.name}: formula {row.formula_value:.6g}, "
              f"empirical {row.empirical_value:.6g} [{status}]{extra}")
    return EXIT_OK if result.all_bounds_satisfied else EXIT_BOUND_VIOLATION


def _cmd_spin_chain(args: argparse.Namespace) -> int:
    model = spin_chain.SpinChainModel(n=args.n, k=args.k, num_excited=args.num_excited)
    report = spin_chain.spin_chain_report(
        args.n, args.k, args.num_excited, half_width=args.xi, epsilon=args.epsilon
    )
    out = dataclasses.asdict(report)
    out["temperature"] = spin_chain.temperature(model)
    window = spin_chain.TypicalWindow(report.half_width, report.window_lo, report.window_hi)
    out["exact_tail"] = spin_chain.exact_typical_tail(model, window)
    lower, upper, exact = spin_chain.binomial_entropy_bounds(model.n, model.num_excited)
    out["dim_subspace_bounds"] = {"lower": lower, "upper": upper, "exact": exact}
    if (args.mode or "combinatorial") == "dense":
        sys_purity, env_purity = spin_chain.canonical_purities(model)
        out["effective_env_dim"] = 1.0 / env_purity
        out["system_purity"] = sys_purity
        exact_state = spin_chain.exact_canonical_state(model)
        approx = spin_chain.product_approximation(model)
        out["product_approximation_distance"] = trace_norm(exact_state - approx)
    fh, close = _open_out(args.output)
    try:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _cmd_purity_oracle(args: argparse.Namespace) -> int:
    cap = args.cap or DEFAULT_DIMENSION_CAP
    sub_ = experiments.resolve_subspace(_subspace_spec(args), cap=cap)
    exact = experiments.exact_average_purity(sub_, cap=cap)
    out = {"exact_average_purity": exact}
    status = EXIT_OK
    if args.trials:
        if args.seed is None:
            raise TypicalityError("--seed is required for sampling commands")
        mean, se = experiments.mc_average_purity(
            sub_, args.trials, args.seed, workers=args.workers or 1
        )
        z = 0.0 if se == 0 else (mean - exact) / se
        out.update({"mc_mean": mean, "mc_standard_error": se, "z_score": z,
                    "trials": args.trials, "seed": args.seed})
        if abs(z) > 3.0:
            status = EXIT_BOUND_VIOLATION
    fh, close = _open_out(args.output)
    try:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    return status


_COMMANDS = {
    "subspace-info": _cmd_subspace_info,
    "bounds": _cmd_bounds,
    "experiment": _cmd_experiment,
    "spin-chain": _cmd_spin_chain,
    "purity-oracle": _cmd_purity_oracle,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TypicalityError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
