"""Command-line front end.

Usage:
    wexpand expand --n 3
    wexpand cascade --n 4 --source epr --format csv
    wexpand optimize --grid 51
    wexpand verify

Exit codes: 0 success, 1 self-check or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from . import __version__
from .errors import WExpandError
from .fock import fidelity, swap_modes
from .optics import EXPANSION_REFLECTIVITY, Reflectivity
from .optimize import optimize_numeric, solve_closed_form
from .protocols import (
    CascadeSpec,
    FirstElement,
    Source,
    analytic_cascade_probability,
    build_w,
    expand_once,
    run_cascade,
    tashima_probability,
)
from .report import to_csv, to_json

SELF_CHECK_FIDELITY = 1e-6
VERIFY_TOLERANCE = 1e-9
OPTIMIZE_AGREEMENT = 1e-6

SCHEMES = (
    ("single_pdbs", Source.SINGLE_PHOTONS, FirstElement.PDBS),
    ("single_balanced", Source.SINGLE_PHOTONS, FirstElement.BALANCED),
    ("epr_pdbs", Source.EPR_SEED, FirstElement.PDBS),
)


@dataclass
class Document:
    data: dict
    csv_header: list[str]
    csv_rows: list[list]
    failure: str | None = None


def _reflectivity(args) -> Reflectivity:
    return Reflectivity(args.eta_h, args.eta_v)


def _is_expansion_setting(r: Reflectivity) -> bool:
    return r.is_close(EXPANSION_REFLECTIVITY)


def cmd_expand(args) -> Document:
    if args.n < 1:
        raise WExpandError(f"--n must be >= 1 for expand, got {args.n}")
    r = _reflectivity(args)
    rep = expand_once(build_w(args.n), args.n - 1, r)
    data = {
        "n_from": args.n,
        "n_to": args.n + 1,
        "eta_h": r.eta_h,
        "eta_v": r.eta_v,
        "success_probability": rep.success_probability,
        "analytic_probability": rep.analytic_probability,
        "fidelity_with_target": rep.fidelity_with_target,
        "steps": rep.steps,
        "state": rep.output_state.to_records(),
    }
    failure = None
    if _is_expansion_setting(r) and rep.fidelity_with_target < 1 - SELF_CHECK_FIDELITY:
        failure = f"self-check failed: fidelity {rep.fidelity_with_target:.12g} with W_{args.n + 1}"
    header = ["n_from", "success_probability", "analytic_probability", "fidelity"]
    rows = [[args.n, rep.success_probability, rep.analytic_probability, rep.fidelity_with_target]]
    return Document(data, header, rows, failure)


def cmd_cascade(args) -> Document:
    r = _reflectivity(args)
    spec = CascadeSpec(args.n, args.source, args.first, r)
    rep = run_cascade(spec)
    stages = [
        {
            "stage": s.stage,
            "n_from": s.n_from,
            "element": s.element,
            "probability": s.probability,
            "cumulative_probability": s.cumulative_probability,
            "fidelity": s.fidelity,
        }
        for s in rep.stages
    ]
    data = {
        "target_n": spec.target_n,
        "source": spec.source.value,
        "first_element": spec.first_element.value,
        "eta_h": r.eta_h,
        "eta_v": r.eta_v,
        "success_probability": rep.success_probability,
        "analytic_probability": rep.analytic_probability,
        "fidelity_with_target": rep.fidelity_with_target,
        "steps": rep.steps,
        "stages": stages,
        "state": rep.output_state.to_records(),
    }
    failure = None
    if _is_expansion_setting(r) and rep.fidelity_with_target < 1 - SELF_CHECK_FIDELITY:
        failure = f"self-check failed: fidelity {rep.fidelity_with_target:.12g} with W_{spec.target_n}"
    header = ["stage", "probability", "cumulative_probability", "fidelity"]
    rows = [[s.stage, s.probability, s.cumulative_probability, s.fidelity] for s in rep.stages]
    return Document(data, header, rows, failure)


def _result_dict(res) -> dict:
    return {
        "eta_h": res.eta_h,
        "eta_v": res.eta_v,
        "probability": res.probability,
        "fidelity": res.fidelity,
        "iterations": res.iterations,
        "converged": res.converged,
    }


def cmd_optimize(args) -> Document:
    n_from = args.n if args.n is not None else 2
    numeric = optimize_numeric(n_from, args.grid, args.refine_rounds)
    exact = solve_closed_form(n_from)
    deviation = max(abs(numeric.eta_h - exact.eta_h), abs(numeric.eta_v - exact.eta_v))
    agree = numeric.converged and deviation <= OPTIMIZE_AGREEMENT
    data = {
        "n_from": n_from,
        "grid": args.grid,
        "refine_rounds": args.refine_rounds,
        "numeric": _result_dict(numeric),
        "closed_form": _result_dict(exact),
        "max_eta_deviation": deviation,
        "agree": agree,
    }
    failure = None if agree else f"optimizer disagrees with closed form by {deviation:.3g} (converged={numeric.converged})"
    header = ["method", "eta_h", "eta_v", "probability", "fidelity", "iterations", "converged"]
    rows = [
        ["numeric", numeric.eta_h, numeric.eta_v, numeric.probability, numeric.fidelity, numeric.iterations, numeric.converged],
        ["closed_form", exact.eta_h, exact.eta_v, exact.probability, exact.fidelity, exact.iterations, exact.converged],
    ]
    return Document(data, header, rows, failure)


def verify_row(n: int) -> dict:
    formula: dict[str, float | None] = {}
    simulated: dict[str, float | None] = {}
    fidelities: dict[str, float | None] = {}
    for key, source, first in SCHEMES:
        try:
            spec = CascadeSpec(n, source, first)
        except WExpandError:
            formula[key] = simulated[key] = fidelities[key] = None
            continue
        rep = run_cascade(spec)
        formula[key] = analytic_cascade_probability(n, source, first)
        simulated[key] = rep.success_probability
        fidelities[key] = rep.fidelity_with_target
    formula["tashima"] = tashima_probability(n) if n >= 3 else None
    errors = [abs(formula[k] - simulated[k]) for k, *_ in SCHEMES if formula[k] is not None]
    worst_fid = min(f for f in fidelities.values() if f is not None)
    return {
        "N": n,
        "formula": formula,
        "simulated": simulated,
        "fidelity": fidelities,
        "max_abs_error": max(errors),
        "ok": max(errors) <= VERIFY_TOLERANCE and worst_fid >= 1 - VERIFY_TOLERANCE,
    }


def cmd_verify(args) -> Document:
    n_max = args.n if args.n is not None else 8
    if n_max < 2:
        raise WExpandError(f"--n must be >= 2 for verify, got {n_max}")
    rows = sorted((verify_row(n) for n in range(2, n_max + 1)), key=lambda row: row["N"])
    symmetric = all(
        fidelity(st, swap_modes(st, i, j)) >= 1 - VERIFY_TOLERANCE
        for n in range(2, min(n_max, 5) + 1)
        for st in [run_cascade(CascadeSpec(n)).output_state]
        for i in range(n)
        for j in range(i + 1, n)
    )
    comparisons = {
        "w3_epr_beats_tashima": analytic_cascade_probability(3, "epr") > tashima_probability(3),
        "w4_epr_below_tashima": analytic_cascade_probability(4, "epr") < tashima_probability(4),
    }
    all_ok = all(row["ok"] for row in rows) and symmetric and all(comparisons.values())
    data = {"rows": rows, "symmetric_outputs": symmetric, "comparisons": comparisons, "all_ok": all_ok}
    bad = [row["N"] for row in rows if not row["ok"]]
    failure = None if all_ok else f"verification failed for N={bad}, symmetric={symmetric}, comparisons={comparisons}"
    header = ["N"]
    for key, *_ in SCHEMES:
        header += [f"{key}_formula", f"{key}_simulated"]
    header += ["tashima_formula", "max_abs_error", "ok"]
    table = []
    for row in rows:
        line = [row["N"]]
        for key, *_ in SCHEMES:
            line += [row["formula"][key], row["simulated"][key]]
        line += [row["formula"]["tashima"], row["max_abs_error"], row["ok"]]
        table.append(line)
    return Document(data, header, table, failure)


COMMANDS = {"expand": cmd_expand, "cascade": cmd_cascade, "optimize": cmd_optimize, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wexpand", description="Simulate one-photon W-state expansion with linear optics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", dest="output_format")
    common.add_argument("-o", "--output", default="-", help="output path ('-' for stdout)")

    optics = argparse.ArgumentParser(add_help=False)
    optics.add_argument("--eta-h", type=float, default=EXPANSION_REFLECTIVITY.eta_h)
    optics.add_argument("--eta-v", type=float, default=EXPANSION_REFLECTIVITY.eta_v)

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("expand", parents=[common, optics], help="add one photon to W_n")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("cascade", parents=[common, optics], help="prepare W_N by repeated expansion")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--source", choices=[s.value for s in Source], default=Source.SINGLE_PHOTONS.value)
    p.add_argument("--first", choices=[f.value for f in FirstElement], default=FirstElement.PDBS.value)

    p = sub.add_parser("optimize", parents=[common], help="recover the reflectivities numerically")
    p.add_argument("--n", type=int, default=None, help="expand from W_n (default 2)")
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--refine-rounds", type=int, default=40)

    p = sub.add_parser("verify", parents=[common], help="closed forms against simulation for N = 2..n")
    p.add_argument("--n", type=int, default=None, help="largest N (default 8)")
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "output"}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = COMMANDS[args.command](args)
    except (WExpandError, ValueError) as exc:
        print(f"wexpand {args.command}: error: {exc}", file=sys.stderr)
        return 2

    if args.output_format == "json":
        text = to_json({"meta": {"version": __version__, "config": _config(args)}, "data": doc.data})
    else:
        text = to_csv(doc.csv_header, doc.csv_rows)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    if doc.failure:
        print(f"wexpand {args.command}: {doc.failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
