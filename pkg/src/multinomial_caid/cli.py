"""Capacity and capacity-achieving inputs of the multinomial channel, from the command line.

    multinomial-caid solve --n 5 --k 4
    multinomial-caid compare --n-max 10 --k 4
    multinomial-caid scaling --n-max 10 --k-list 2,3,4 --out scaling.csv
    multinomial-caid oracle --n 3 --k 2 --grid-res 0.001

Output is deterministic: JSON with sorted keys and floats rounded to 12
significant digits, CSV with '.' decimals and LF line endings.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys

import numpy as np

from .ba import blahut_arimoto
from .channel import AlphabetTooLarge, ChannelSpec, transition_matrix
from .dual import DualConfig
from .mdab import MdabConfig, MdabError, MdabResult, solve_sequence
from .oracle import DegenerateFit, ScalingRecord, asymptotic_capacity, grid_capacity, scaling_fit
from .simplex import expand, num_distinct_permutations, ordered_vertices

SCHEMA_VERSION = "1.0"
LOG2 = math.log(2.0)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_RESOURCE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def round12(value: float) -> float:
    return float(f"{value:.12g}")


def canonical(obj):
    """Round every float in a JSON-like structure to 12 significant digits."""
    if isinstance(obj, dict):
        return {key: canonical(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(val) for val in obj]
    if isinstance(obj, (float, np.floating)):
        return round12(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def config_digest(cfg: MdabConfig) -> str:
    blob = json.dumps(cfg.as_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def caid_document(result: MdabResult, cfg: MdabConfig) -> dict:
    atoms = []
    for loc, weight in zip(result.ordered_atoms, result.ordered_weights):
        perms = num_distinct_permutations(loc)
        atoms.append({
            "location": [float(v) for v in loc],
            "weight": float(weight),
            "distinct_permutations": perms,
            "expanded_weight_each": float(weight) / perms,
        })
    actions = [t.action for t in result.trace]
    spec = result.spec
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": {"n": spec.n, "k": spec.k, "flip_eps": spec.flip_eps},
        "config_digest": config_digest(cfg),
        "status": result.status,
        "capacity_bits": result.capacity_nats / LOG2,
        "capacity_nats": result.capacity_nats,
        "dual_bound_nats": result.dual_bound_nats,
        "gap_nats": result.gap_nats,
        "ordered_atoms": atoms,
        "support_size_m": result.support_size_m,
        "trace_summary": {
            "outer_iterations": len(result.trace),
            "adds": actions.count("add_vertex"),
            "moves": actions.count("move_atom"),
        },
    }


def uniform_composite_capacity(spec: ChannelSpec) -> float:
    """Capacity (nats) when inputs are restricted to uniform mixtures of 1..k letters."""
    dist = expand(ordered_vertices(spec.k), np.ones(spec.k))
    return blahut_arimoto(transition_matrix(dist.locations, spec)).mutual_info_nats


def _csv_text(header, rows, trailer=()) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(round12(v)) if isinstance(v, float) else v for v in row])
    for line in trailer:
        buf.write(line + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> MdabConfig:
    return MdabConfig(eps_gap=args.eps_gap, dual=DualConfig(starts=args.starts, seed=args.seed))


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not ks:
        raise argparse.ArgumentTypeError("empty --k-list")
    return ks


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multinomial-caid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(p):
        p.add_argument("--eps-gap", type=float, default=1e-4)
        p.add_argument("--starts", type=_positive_int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--flip-eps", type=float, default=0.0)
        p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="capacity and CAID for n reads")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--all", action="store_true", help="emit one document per n = 1..N")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    solver_flags(p)

    p = sub.add_parser("compare", help="M-DAB against the uniform-composite constellation")
    p.add_argument("--n-max", type=_positive_int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    solver_flags(p)

    p = sub.add_parser("scaling", help="capacity against CAID support size")
    p.add_argument("--n-max", type=_positive_int, required=True)
    p.add_argument("--k-list", type=_k_list, required=True)
    p.add_argument("--fit-min-n", type=int, default=2)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    solver_flags(p)

    p = sub.add_parser("oracle", help="lattice capacity and large-n approximation")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--grid-res", type=float, default=0.01)
    p.add_argument("--flip-eps", type=float, default=0.0)
    p.add_argument("--out", default=None)
    return parser


def cmd_solve(args) -> int:
    cfg = _config(args)
    results, code = _solve(args.n, args.k, cfg, args.flip_eps)
    chosen = results if args.all else results[-1:]
    if args.format == "json":
        docs = [caid_document(r, cfg) for r in chosen]
        text = dumps(docs if args.all else docs[0])
    else:
        rows = []
        for r in chosen:
            for loc, w in zip(r.ordered_atoms, r.ordered_weights):
                perms = num_distinct_permutations(loc)
                rows.append([r.spec.n, " ".join(repr(round12(v)) for v in loc), float(w), perms,
                             float(w) / perms, r.support_size_m, r.capacity_nats / LOG2])
        text = _csv_text(["n", "location", "weight", "distinct_permutations",
                          "expanded_weight_each", "support_size_m", "capacity_bits"], rows)
    _emit(text, args.out)
    return code


def _solve(n_max, k, cfg, flip_eps):
    try:
        return solve_sequence(n_max, k, cfg, flip_eps=flip_eps), EXIT_OK
    except MdabError as err:
        _report_error("no_convergence", str(err), n=err.n)
        return err.partial, EXIT_NO_CONVERGENCE


def cmd_compare(args) -> int:
    cfg = _config(args)
    results, code = _solve(args.n_max, args.k, cfg, args.flip_eps)
    rows = []
    for r in results:
        uniform = uniform_composite_capacity(r.spec) / LOG2
        rows.append([r.spec.n, r.capacity_nats / LOG2, uniform, 2.0, math.log2(15)])
    header = ["n", "capacity_mdab_bits", "capacity_uniform_composite_bits", "log2_4", "log2_15"]
    if args.format == "json":
        text = dumps([dict(zip(header, row)) for row in rows])
    else:
        text = _csv_text(header, rows)
    _emit(text, args.out)
    return code


def cmd_scaling(args) -> int:
    cfg = _config(args)
    records: list[ScalingRecord] = []
    code = EXIT_OK
    for k in args.k_list:
        results, status = _solve(args.n_max, k, cfg, args.flip_eps)
        code = max(code, status)
        records.extend(ScalingRecord(r.spec.n, k, r.capacity_nats / LOG2, r.support_size_m) for r in results)
    fit_records = [r for r in records if r.n >= args.fit_min_n]
    try:
        fit = scaling_fit(fit_records)
        fit_info = {"slope": fit.slope, "intercept": fit.intercept, "rmse": fit.rmse}
        trailer = f"# fit slope={round12(fit.slope)!r} intercept={round12(fit.intercept)!r} rmse={round12(fit.rmse)!r}"
    except DegenerateFit as err:
        fit_info = {"error": str(err)}
        trailer = f"# fit {err}"
    header = ["n", "k", "capacity_bits", "support_m"]
    rows = [[r.n, r.k, r.capacity_bits, r.support_m] for r in records]
    if args.format == "json":
        text = dumps({"records": [dict(zip(header, row)) for row in rows], "fit": fit_info})
    else:
        text = _csv_text(header, rows, [trailer])
    _emit(text, args.out)
    return code


def cmd_oracle(args) -> int:
    spec = ChannelSpec(args.n, args.k, args.flip_eps)
    grid = grid_capacity(spec, args.grid_res)
    asym = asymptotic_capacity(spec)
    doc = {
        "spec": {"n": spec.n, "k": spec.k, "flip_eps": spec.flip_eps},
        "grid_resolution": args.grid_res,
        "grid_capacity_nats": grid,
        "grid_capacity_bits": grid / LOG2,
        "asymptotic_capacity_nats": asym,
        "asymptotic_capacity_bits": asym / LOG2,
    }
    _emit(dumps(doc), args.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "scaling": cmd_scaling, "oracle": cmd_oracle}


def _report_error(kind: str, message: str, **extra):
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as err:
        _report_error("usage", str(err))
        return EXIT_USAGE
    except AlphabetTooLarge as err:
        _report_error("resource_cap", str(err))
        return EXIT_RESOURCE
    except ValueError as err:
        # invalid parameter values (k < 2, flip_eps out of range, bad resolution, ...)
        _report_error("usage", str(err))
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
