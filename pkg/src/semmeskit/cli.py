"""Command-line entry point.

Exit codes: 0 success, 1 a verification or criterion failed and --strict was
given (or a computation failed), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from . import criteria as crit
from . import estimates as est
from . import modulus as mod
from .embed import embed, verify_bilipschitz
from .errors import DomainError, SemmesError, SpaceError
from .necklace import NecklaceSolution, export_obj, place_case1, verify_necklace
from .treemetric import delta, delta_bounds
from .welding import (
    NodeAddress,
    condenser_at,
    expand,
    growth_order,
    load_space,
    max_genus,
    rho,
    upper_growth,
    validate,
)

HEADER = f"# semmeskit {__version__}"


class UsageError(Exception):
    pass


def _num(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _dump_json(payload: dict) -> str:
    return json.dumps({"generator": f"semmeskit {__version__}", **payload}, indent=2) + "\n"


def _text(lines: list[str]) -> str:
    return "\n".join([HEADER, *lines]) + "\n"


def _space(args):
    return load_space(args.space)


def _address(graph, text: str) -> NodeAddress:
    addr = NodeAddress.parse(text)
    condenser_at(graph, addr)
    return addr


def _ms(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--m expects comma-separated integers, got {text!r}")
    if any(m < 0 for m in out):
        raise UsageError("--m values must be >= 0")
    return out


# ---------------------------------------------------------------------------
# subcommands; each returns (output text, failed flag)


def cmd_validate(args):
    graph = _space(args)
    viol = validate(graph)
    if args.format == "json":
        payload = {"space": graph.name, "valid": not viol,
                   "violations": [{"kind": v.kind, "where": v.where, "message": v.message} for v in viol]}
        if not viol:
            payload.update(growth_order=growth_order(graph), upper_growth=upper_growth(graph),
                           max_genus=max_genus(graph))
        return _dump_json(payload), bool(viol)
    lines = [f"space: {graph.name}", f"valid: {'yes' if not viol else 'no'}"]
    lines += [f"violation: {v.kind} at {v.where}: {v.message}" for v in viol]
    if not viol:
        lines += [f"growth_order: {growth_order(graph)}", f"upper_growth: {upper_growth(graph)}",
                  f"max_genus: {max_genus(graph)}"]
    return _text(lines), bool(viol)


def cmd_expand(args):
    graph = _space(args)
    tree = expand(graph, args.depth, budget=args.budget)
    if args.format == "json":
        payload = {"space": graph.name, "depth": args.depth, "level_counts": tree.level_counts()}
        if args.list:
            payload["nodes"] = [{"address": str(a), "condenser": c} for a, c in tree.iter_nodes()]
        return _dump_json(payload), False
    lines = [f"space: {graph.name}", f"depth: {args.depth}",
             "level_counts: " + " ".join(map(str, tree.level_counts()))]
    if args.list:
        lines += [f"{a} {c}" for a, c in tree.iter_nodes()]
    return _text(lines), False


def cmd_distance(args):
    graph = _space(args)
    a, b = _address(graph, args.a), _address(graph, args.b)
    value = delta(a, b, args.lam)
    r = rho(a, b)
    lo, hi = delta_bounds(r, args.lam)
    if args.format == "json":
        return _dump_json({"a": str(a), "b": str(b), "lambda": args.lam, "rho": r, "delta": value,
                           "bounds": [lo, hi]}), False
    return _text([f"a: {a}", f"b: {b}", f"rho: {r}", f"delta: {_num(value)}",
                  f"bounds: [{_num(lo)}, {_num(hi)}]"]), False


def cmd_embed(args):
    graph = _space(args)
    tree = expand(graph, args.depth)
    emb = embed(tree, args.lam)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["address", "color"] + [f"x{i + 1}" for i in range(emb.dimension)])
    for i in range(tree.size):
        w.writerow([str(emb.address(i)), int(emb.colors[i])] + [repr(float(v)) for v in emb.coords[i]])
    table = HEADER + "\n" + buf.getvalue()
    report = verify_bilipschitz(emb) if args.verify else None
    failed = report is not None and not report.ok
    if args.out is None and report is None and args.format != "json":
        return table, False
    if args.out is not None:
        Path(args.out).write_text(table)
    summary = {"space": graph.name, "depth": args.depth, "lambda": args.lam, "nodes": tree.size,
               "dimension": emb.dimension, "local_bound": emb.local_bound, "m0": emb.m0,
               "separation": emb.separation}
    if report is not None:
        summary["verify"] = report.to_json()
    if args.format == "json":
        if args.out is None:
            summary["nodes_data"] = [
                {"address": str(emb.address(i)), "color": int(emb.colors[i]), "coords": emb.coords[i].tolist()}
                for i in range(tree.size)
            ]
        return _dump_json(summary), failed
    lines = [f"{k}: {_num(v)}" for k, v in summary.items() if k != "verify"]
    if report is not None:
        lines.append(f"verify: {'pass' if report.ok else 'FAIL'} ({report.pairs} pairs, ratio in "
                     f"[{_num(report.min_ratio)}, {_num(report.max_ratio)}] vs "
                     f"[{_num(report.lower)}, {_num(report.upper)}])")
        if report.failure:
            lines.append(f"failure: {report.failure}")
    if args.out is None:
        return table + "\n".join(lines) + "\n", failed
    return _text(lines), failed


def cmd_estimate(args):
    graph = _space(args)
    gamma = growth_order(graph)
    payload: dict = {"space": graph.name, "lambda": args.lam, "growth_order": gamma,
                     "ahlfors_regular": est.ahlfors_regular(args.lam, gamma), "llc": est.llc(graph)}
    if (args.a is None) != (args.b is None):
        raise UsageError("--a and --b must be given together")
    if args.level is not None:
        payload["diameter"] = est.diam_bounds(args.level, args.lam).to_json()
        if payload["ahlfors_regular"]:
            payload["measure"] = est.measure_bounds(args.level, args.lam, gamma).interval.to_json()
    if args.a is not None:
        a, b = _address(graph, args.a), _address(graph, args.b)
        payload["distance"] = est.point_distance_bounds(a, b, args.lam).to_json()
    if args.format == "json":
        return _dump_json(payload), False
    lines = []
    for k, v in payload.items():
        if isinstance(v, dict):
            lines.append(f"{k}: [{_num(v['lower'])}, {_num(v['upper'])}] ({v['normalization']})")
        else:
            lines.append(f"{k}: {_num(v)}")
    return _text(lines), False


def cmd_criteria(args):
    graph = _space(args)
    rep = crit.report(graph, args.lam, args.m)
    payload = rep.to_json()
    payload["verdict"] = rep.verdict()
    if args.lambda_prime is not None:
        payload["bing_product_inequivalence"] = {
            "lambda_prime": args.lambda_prime,
            "value": crit.bing_product_inequivalence(args.lam, args.lambda_prime),
            "citation": crit.CITE_BING_PRODUCT,
        }
    failed = rep.gates["excluded"].value is True
    if args.format == "json":
        return _dump_json(payload), failed
    lines = [f"space: {rep.space}", f"lambda: {_num(rep.lam)}", f"m: {rep.m}"]
    for name, g in rep.gates.items():
        detail = f" [{g.detail}]" if g.detail else ""
        lines.append(f"{name}: {_num(g.value)}{detail} -- {g.citation}")
    if "bing_product_inequivalence" in payload:
        b = payload["bing_product_inequivalence"]
        lines.append(f"bing_product_inequivalence(lambda'={_num(b['lambda_prime'])}): {b['value']} -- {b['citation']}")
    lines.append(f"verdict: {rep.verdict()}")
    return _text(lines), failed


def cmd_sweep(args):
    graph = _space(args)
    lams = crit.lambda_grid(args.lambda_from, args.lambda_to, args.steps)
    rows = crit.sweep(graph, lams, _ms(args.m))
    failed = any(r["excluded"] is True for r in rows)
    if args.format == "json":
        return _dump_json({"space": graph.name, "columns": list(crit.SWEEP_COLUMNS), "rows": rows}), failed
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(crit.SWEEP_COLUMNS)
    for r in rows:
        w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                    for c in crit.SWEEP_COLUMNS])
    return HEADER + "\n" + buf.getvalue(), failed


def _certificate_lines(cert) -> list[str]:
    lines = [f"{c.name}: {'pass' if c.ok else 'FAIL'} (margin {_num(c.margin)})"
             + (f" offending {c.offending}" if c.offending else "") for c in cert.checks]
    lines.append(f"result: {cert.statement if cert.ok else 'failed at ' + cert.failure}")
    return lines


def cmd_necklace_construct(args):
    sol = place_case1(args.I)
    cert = verify_necklace(sol)
    if args.out:
        sol.save(args.out)
    if args.obj:
        export_obj(sol, args.obj)
    if args.format == "json":
        payload = sol.to_json() if not args.out else {"parameters": sol.params.to_json(), "mu": sol.mu}
        payload["certificate"] = cert.to_json()
        return _dump_json(payload), not cert.ok
    p = sol.params
    lines = [f"I: {p.I}", f"K: {p.K}", f"lambda: {_num(p.lam)}", f"A: {_num(p.A)}", f"B: {_num(p.B)}",
             f"a: {_num(p.a)}", f"b: {_num(p.b)}", f"epsilon: {_num(p.eps)}", f"delta: {_num(p.delta)}",
             f"mu: {_num(sol.mu)}", f"tori: {len(sol.tori)}"]
    return _text(lines + _certificate_lines(cert)), not cert.ok


def cmd_necklace_verify(args):
    try:
        sol = NecklaceSolution.load(args.inp)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read necklace solution {args.inp}: {exc}")
    cert = verify_necklace(sol)
    if args.format == "json":
        return _dump_json({"tori": len(sol.tori), "certificate": cert.to_json()}), not cert.ok
    return _text([f"tori: {len(sol.tori)}"] + _certificate_lines(cert)), not cert.ok


def _modulus_output(args, result: mod.ModulusResult, extra: dict):
    if args.format == "json":
        return _dump_json({**extra, **result.to_json()}), False
    r = result.report
    lines = [f"{k}: {_num(v)}" for k, v in extra.items()]
    lines += [f"value: {_num(result.value)}", f"dual_bound: {_num(r.dual_bound)}",
              f"rounds: {r.rounds}", f"active_curves: {len(result.active)}",
              f"max_violation: {_num(r.max_violation)}", f"stationarity: {_num(r.stationarity)}",
              f"complementarity: {_num(r.complementarity)}"]
    if args.density:
        lines += [f"rho {v}: {_num(float(x))}" for v, x in zip(result.vertices, result.density)]
    return _text(lines), False


def cmd_modulus_solve(args):
    try:
        problem = mod.ModulusProblem.load(args.inp, args.p)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read modulus problem {args.inp}: {exc}")
    return _modulus_output(args, mod.solve(problem), {"p": problem.p, "curves": len(problem.curves)})


def cmd_modulus_grid(args):
    return _modulus_output(args, mod.solve(mod.grid_path_family(args.n)), {"n": args.n, "p": 2.0})


def cmd_modulus_gap(args):
    rep = mod.gap_analysis(args.space, args.lam, args.m, args.depth)
    failed = rep.excluded is True
    if args.format == "json":
        return _dump_json(rep.to_json()), failed
    lines = [f"space: {rep.space}", f"lambda: {_num(rep.lam)}", f"m: {rep.m}",
             f"normalization: {mod.WALL_NORMALIZATION}", "d circ lower upper ratio"]
    lines += [f"{r.d} {_num(r.circ)} {_num(r.lower)} {_num(r.upper)} {_num(r.ratio)}" for r in rep.rows]
    lines.append(f"log_ratio_slope: {_num(rep.slope)}")
    verdict = {None: "no rows", True: "diverging ratio: excluded", False: "bounded ratio: not excluded"}
    lines.append(f"verdict: {verdict[rep.excluded]}")
    return _text(lines), failed


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--strict", action="store_true", help="exit 1 when a verification or criterion fails")

    parser = argparse.ArgumentParser(prog="semmeskit", description="Decomposition-space toolkit.")
    parser.add_argument("--version", action="version", version=f"semmeskit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def space_cmd(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--space", required=True, help="builtin name or JSON file")
        p.set_defaults(func=func)
        return p

    space_cmd("validate", cmd_validate, "check a welding graph")

    p = space_cmd("expand", cmd_expand, "unfold the component tree")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--budget", type=int, default=None, help="node budget (default from environment)")
    p.add_argument("--list", action="store_true", help="list every node")

    p = space_cmd("distance", cmd_distance, "tree distance between two addresses")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)

    p = space_cmd("embed", cmd_embed, "Euclidean tree embedding")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--out", default=None, help="CSV path for coordinates")
    p.add_argument("--verify", action="store_true")

    p = space_cmd("estimate", cmd_estimate, "normalised size estimates")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)

    p = space_cmd("criteria", cmd_criteria, "parametrizability report")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--lambda-prime", type=float, default=None)

    p = sub.add_parser("sweep", help="criteria over a lambda grid")
    p.add_argument("--space", required=True)
    p.add_argument("--lambda-from", type=float, required=True)
    p.add_argument("--lambda-to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--m", default="0")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_sweep)

    neck = sub.add_parser("necklace", help="rectangular Antoine necklace")
    nsub = neck.add_subparsers(dest="action", required=True)
    p = nsub.add_parser("construct", parents=[common])
    p.add_argument("--I", dest="I", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--obj", default=None)
    p.set_defaults(func=cmd_necklace_construct)
    p = nsub.add_parser("verify", parents=[common])
    p.add_argument("--in", dest="inp", required=True)
    p.set_defaults(func=cmd_necklace_verify)

    modp = sub.add_parser("modulus", help="discrete p-modulus")
    msub = modp.add_subparsers(dest="action", required=True)
    p = msub.add_parser("solve", parents=[common])
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--density", action="store_true")
    p.set_defaults(func=cmd_modulus_solve)
    p = msub.add_parser("grid", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", action="store_true")
    p.set_defaults(func=cmd_modulus_grid)
    p = msub.add_parser("gap", parents=[common])
    p.add_argument("--space", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.set_defaults(func=cmd_modulus_gap)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text, failed = args.func(args)
    except (UsageError, DomainError, SpaceError) as exc:
        print(f"semmeskit: error: {exc}", file=sys.stderr)
        return 2
    except SemmesError as exc:
        print(f"semmeskit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"semmeskit: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return 1 if failed and args.strict else 0


if __name__ == "__main__":
    sys.exit(main())
