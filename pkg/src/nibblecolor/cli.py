"""Command line front end.

Instance documents are JSON:
  {"C": 2, "graphs": [{"id": "g1", "vertices": ["a","b"], "edges": [["a","b"]]}],
   "lists": {"a": [1,2], "b": [2,3]}, "matchings": {"a|b": [[2,2]]}}
The optional "matchings" block switches to correspondence (DP) mode.
Hypergraphs are JSON {"vertices": [...], "edges": [["u","v","w"], ...]}.

Exit status is 0 only when the requested command fully succeeded; `color` and
`edge-color` in particular fail unless the produced coloring verifies.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .finisher import FinisherConfig, PreconditionError, finish
from .instance import (
    dump_instance_document,
    read_instance_json,
    verify_coloring,
)
from .lab import (
    Hypergraph,
    LabBudgetError,
    check_bound_15i,
    construct_thm15ii,
    exact_expectations,
    exhaustive_list_chromatic,
    monte_carlo,
    random_linear_hypergraph,
)
from .nibble import NibbleParams, RoundFailedError, nibble_round
from .normalizer import normalize, pad_lists
from .pipeline import NonLinearError, edge_color_hypergraph, run_pipeline
from .schedule import build_schedule, schedule_csv


def _out(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_hypergraph(path: str) -> Hypergraph:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return Hypergraph(
        tuple(sorted(doc["vertices"])),
        tuple(sorted(tuple(sorted(e)) for e in doc["edges"])),
    )


def cmd_validate(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    report = instance.validate()
    doc = {
        "ok": report.ok,
        "violations": [
            {"code": v.code, "message": v.message, "witness": list(v.witness)}
            for v in report.violations
        ],
    }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if report.ok else 1


def cmd_schedule(args) -> int:
    sched = build_schedule(args.degree_bound, args.eps, args.overlap, args.p)
    _out(args, schedule_csv(sched))
    return 0


def cmd_nibble(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    sizes = {len(assignment[v]) for v in instance.vertex_registry}
    lam = args.list_size if args.list_size else max(sizes)
    dmax = args.degree_bound
    if dmax is None:
        from .compiled import compile_instance

        ci = compile_instance(instance, assignment)
        dmax = int(ci.member_cd.max()) if ci.n_triples else 0
    params = NibbleParams(
        float(lam), float(max(dmax, 1)), instance.c_bound, args.p, args.eps,
        strict=args.mode == "strict",
    )
    try:
        outcome = nibble_round(
            instance, assignment, params, args.mode, args.seed, args.max_resamples
        )
    except RoundFailedError as exc:
        print(f"round failed: {exc}", file=sys.stderr)
        return 1
    doc = {
        "kept": sorted(outcome.kept),
        "colored": {v: outcome.colored[v] for v in sorted(outcome.colored)},
        "new_lists": {v: list(cs) for v, cs in sorted(outcome.new_lists.items())},
        "resamples": outcome.resample_count,
        "truncate_target": outcome.truncate_target,
    }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.emit_stats:
        with open(args.emit_stats, "w", encoding="utf-8") as fh:
            fh.write("vertex,color,graph,d,a,k,t\n")
            for v, c, g, d, a, k, t in outcome.stats.rows():
                fh.write(f"{v},{c},{g},{d},{a},{k},{t}\n")
    return 0


def cmd_finish(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    config = FinisherConfig(
        factor_required=args.factor,
        max_resample_passes=args.max_passes,
        fallback=args.fallback,
    )
    try:
        result = finish(instance, assignment, None, config, args.seed, force=args.force)
    except PreconditionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    doc = result.report()
    if result.success:
        doc["coloring"] = {
            v: result.coloring.assignment[v] for v in sorted(result.coloring.assignment)
        }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if result.success else 1


def cmd_normalize(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    if args.pad_lists:
        assignment = pad_lists(assignment, args.list_size)
    out_inst, out_asgn, maps = normalize(
        instance, assignment, args.degree_bound, args.list_size, args.cap
    )
    doc = {
        "instance": dump_instance_document(out_inst, out_asgn),
        "vertex_to_original": maps.vertex_to_original,
        "color_to_original": {str(k): v for k, v in maps.color_to_original.items()},
        "projected_vertices": maps.plan.projected_vertices,
    }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_color(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    run = run_pipeline(
        instance,
        assignment,
        eps=args.eps,
        mode=args.mode,
        seed=args.seed,
        activation=args.p,
        round_cap=args.round_cap,
    )
    print(run.summary_table(), file=sys.stderr)
    doc = {
        "success": run.success,
        "stop_reason": run.stop_reason,
        "downgraded": run.downgraded,
        "rounds": len(run.rounds),
        "coloring": (
            {v: run.coloring.assignment[v] for v in sorted(run.coloring.assignment)}
            if run.coloring
            else None
        ),
        "failure": run.failure,
    }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if run.success else 1


def cmd_edge_color(args) -> int:
    h = _read_hypergraph(args.hypergraph)
    try:
        res = edge_color_hypergraph(h, args.eps, args.seed, args.p, args.round_cap)
    except NonLinearError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    print(res.run.summary_table(), file=sys.stderr)
    doc = {
        "success": res.success,
        "colors_used": res.colors_used,
        "edge_colors": [
            {"edge": list(e), "color": c} for e, c in sorted(res.edge_colors.items())
        ],
    }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if res.success else 1


def cmd_lab_exact(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    try:
        rep = exact_expectations(instance, assignment, args.p)
    except LabBudgetError as exc:
        print(f"refused: {exc} (size {exc.size})", file=sys.stderr)
        return 2
    lines = ["# quantity,key,exact,formula,abs_diff", "quantity,key,exact,formula,abs_diff"]
    for name, table in (
        ("ell", rep.ell),
        ("a", rep.a),
        ("k", rep.k),
        ("survive_prob", rep.survive_prob),
        ("member_no_conflict_prob", rep.member_no_conflict_prob),
    ):
        for key, row in sorted(table.items(), key=lambda kv: str(kv[0])):
            keystr = key if isinstance(key, str) else "|".join(str(x) for x in key)
            f = "" if row.formula is None else repr(row.formula)
            d = "" if row.abs_diff is None else repr(row.abs_diff)
            lines.append(f"{name},{keystr},{row.exact!r},{f},{d}")
    _out(args, "\n".join(lines) + "\n")
    return 0


def cmd_lab_mc(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    stream = open(args.stream, "w", encoding="utf-8") if args.stream else None
    try:
        rep = monte_carlo(
            instance, assignment, args.p, args.trials, args.seed, stream=stream
        )
    finally:
        if stream:
            stream.close()
    lines = [
        "# quantity,key,mean,se  (pooled rows average the quantity over its indices)",
        "quantity,key,mean,se",
    ]
    for name, est in rep.pooled.items():
        lines.append(f"pooled_{name},*,{est.mean!r},{est.se!r}")
    for name, table in (
        ("ell", rep.ell),
        ("a", rep.a),
        ("k", rep.k),
        ("survive_prob", rep.survive_prob),
        ("member_no_conflict_prob", rep.member_no_conflict_prob),
    ):
        for key, est in sorted(table.items(), key=lambda kv: str(kv[0])):
            keystr = key if isinstance(key, str) else "|".join(str(x) for x in key)
            lines.append(f"{name},{keystr},{est.mean!r},{est.se!r}")
    lines.append(f"eq41_violations,*,{rep.eq41_violations},")
    for (v, g), freq in sorted(rep.tail_freq.items()):
        lines.append(f"tail_freq,{v}|{g},{freq!r},")
    lines.append(f"tail_bound,*,{rep.tail_bound!r},")
    _out(args, "\n".join(lines) + "\n")
    return 0


def cmd_lab_chi(args) -> int:
    instance, assignment = read_instance_json(args.instance)
    try:
        if args.from_lists:
            verdict = exhaustive_list_chromatic(instance, assignment)
            doc = {
                "colorable": verdict.colorable,
                "coloring": verdict.coloring,
                "nodes_explored": verdict.nodes_explored,
            }
        else:
            witness = exhaustive_list_chromatic(instance)
            doc = {
                "chi": witness.chi,
                "coloring": witness.coloring,
                "nodes_explored": witness.nodes_explored,
            }
    except LabBudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_lab_t15ii(args) -> int:
    instance = construct_thm15ii(args.n)
    lists = {v: list(range(1, args.n + 2)) for v in instance.vertex_registry}
    from .instance import ListAssignment

    doc = dump_instance_document(instance, ListAssignment(lists))
    if args.check:
        rows = check_bound_15i([instance])
        doc["bound_check"] = [row.__dict__ for row in rows]
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_lab_gen_hypergraph(args) -> int:
    h = random_linear_hypergraph(args.n, args.k, args.degree, args.seed)
    doc = {
        "vertices": list(h.vertices),
        "edges": [list(e) for e in h.edges],
        "max_degree": h.max_degree(),
        "n_edges": len(h.edges),
    }
    _out(args, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_benchmark

    print(run_benchmark(args.n, args.k, args.degree, args.rounds, args.seed))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nibblecolor",
        description="Coloring engine and verification lab for nearly disjoint graph unions",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check instance invariants")
    p.add_argument("instance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("schedule", help="emit the iteration schedule as CSV")
    p.add_argument("--degree-bound", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--overlap", type=int, default=1)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("nibble", help="run one nibble round")
    p.add_argument("instance")
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--mode", choices=["practical", "strict"], default="practical")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-resamples", type=int, default=1000)
    p.add_argument("--emit-stats", metavar="CSV")
    p.add_argument("--list-size", type=float, default=None)
    p.add_argument("--degree-bound", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_nibble)

    p = sub.add_parser("finish", help="complete a coloring by resampling")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--factor", type=float, default=8.0)
    p.add_argument("--max-passes", type=int, default=2000)
    p.add_argument("--fallback", choices=["none", "backtracking"], default="backtracking")
    p.add_argument("--force", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_finish)

    p = sub.add_parser("normalize", help="embed so all degrees and sizes are exact")
    p.add_argument("instance")
    p.add_argument("--degree-bound", type=int, required=True)
    p.add_argument("--list-size", type=int, required=True)
    p.add_argument("--cap", type=int, default=1_000_000)
    p.add_argument("--pad-lists", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("color", help="run the full coloring pipeline")
    p.add_argument("instance")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--mode", choices=["practical", "strict"], default="practical")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--round-cap", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_color)

    p = sub.add_parser("edge-color", help="edge-color a linear hypergraph")
    p.add_argument("hypergraph")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--round-cap", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_edge_color)

    lab = sub.add_parser("lab", help="oracles and experiments")
    labsub = lab.add_subparsers(dest="lab_command", required=True)

    p = labsub.add_parser("exact", help="exact expectations by full enumeration")
    p.add_argument("instance")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lab_exact)

    p = labsub.add_parser("mc", help="Monte Carlo estimates with standard errors")
    p.add_argument("instance")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", metavar="CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lab_mc)

    p = labsub.add_parser("chi", help="exhaustive chromatic number / colorability")
    p.add_argument("instance")
    p.add_argument("--from-lists", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lab_chi)

    p = labsub.add_parser("construct-t15ii", help="three-graph union needing n+1 colors")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--check", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lab_t15ii)

    p = labsub.add_parser("gen-hypergraph", help="random linear hypergraph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--degree", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lab_gen_hypergraph)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--degree", type=int, default=20)
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
