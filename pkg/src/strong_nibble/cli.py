"""Command line front end: generate, color, analyze, schedule, oracle.

Exit codes: 0 success, 1 a verification failed, 2 bad input or flags.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import secrets
import sys
import warnings
from pathlib import Path

from . import generators
from .finisher import FinishConfig, complete
from .graph_core import GraphFormatError, conflict_graph, load_graph, verify_coloring, write_coloring
from .nibble import NibbleError, run_nibble, trace_csv
from .oracle import exact_strong_chromatic_index
from .schedule import ScheduleError, build_schedule, verify_schedule_properties
from .structure import (ConditionEntry, ConditionReport, build_family_X, default_threshold,
                        verify_general_conditions, vertex_friends)

SCHEMA = "strong-nibble/summary/v1"
ORACLE_MAX_EDGES = 40

log = logging.getLogger("strong_nibble")


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbits(63)
        print(f"seed={seed}", file=sys.stderr)
        return seed
    return args.seed


def _content_hash(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_generate(args) -> int:
    family = args.family.replace("-", "_")
    needs = {
        "cycle": ["n"], "complete_bipartite": ["a", "b"], "c5_blowup": ["t"],
        "random_regular": ["n", "d"], "projective": ["q"], "high_girth": ["n", "d", "g"],
    }[family]
    missing = [f"--{k}" for k in needs if getattr(args, k) is None]
    if missing:
        raise UsageError(f"family {args.family} needs {' '.join(missing)}")
    if family == "cycle":
        G = generators.gen_cycle(args.n)
    elif family == "complete_bipartite":
        G = generators.gen_complete_bipartite(args.a, args.b)
    elif family == "c5_blowup":
        G = generators.gen_c5_blowup(args.t)
    elif family == "random_regular":
        G = generators.gen_random_regular(args.n, args.d, _seed(args))
    elif family == "projective":
        G = generators.gen_projective_incidence(args.q)
    else:
        res = generators.gen_high_girth_regular(args.n, args.d, args.g, _seed(args))
        print(f"deleted_edges={res.deleted}", file=sys.stderr)
        G = res.graph
    _write(args.out, G.edge_list_text())
    return 0


def _schedule_delta(d: int, t: int) -> float:
    # max degree of L(G)^t is at most 2 d^t
    return max(2.0 * d ** t, 3.0)


def cmd_color(args) -> int:
    G = load_graph(args.graph, args.format)
    if G.m == 0:
        raise UsageError("graph has no edges")
    seed = _seed(args)
    cg = conflict_graph(G, args.t)
    d = G.max_degree
    delta = _schedule_delta(d, args.t)
    S = build_schedule(delta, args.epsilon, args.gamma, strict=False)
    k = args.k_override if args.k_override is not None else math.floor(S.L[0])
    FX = None
    if args.mode == "theory":
        theta = args.theta if args.theta is not None else default_threshold(d)
        FX = build_family_X(G, vertex_friends(G, theta), args.t)
    try:
        nib = run_nibble(cg, FX, S, args.mode, args.retry_budget, seed, k=k,
                         max_iterations=args.max_iterations)
    except NibbleError as exc:
        failed = [e.name for e in exc.report.entries if not e.passed]
        print(f"error: {exc} (failing: {', '.join(failed)})", file=sys.stderr)
        return 1
    done = complete(nib.state, FinishConfig(ratio_required=args.finish_ratio, seed=seed))
    report = verify_coloring(cg, done.coloring)
    total = len(done.coloring) == cg.n
    config = {
        "command": "color", "graph": str(args.graph), "t": args.t, "epsilon": args.epsilon,
        "gamma": args.gamma, "mode": args.mode, "seed": seed, "retry_budget": args.retry_budget,
        "k_override": args.k_override, "finish_ratio": args.finish_ratio,
        "max_iterations": args.max_iterations,
    }
    summary = {
        "schema": SCHEMA,
        "run_config": config,
        "input_hash": _content_hash(G.edge_list_text()),
        "n": G.n, "m": G.m, "max_degree": d, "conflict_max_degree": cg.max_degree,
        "schedule_delta": delta, "schedule_closed": S.closed, "i_star": S.i_star,
        "k_budget": k,
        "nibble_iterations": len(nib.trace), "nibble_halted": nib.halted,
        "nibble_colored": len(nib.coloring.assignments),
        "finish_method": done.method, "finish_resamplings": done.resamplings,
        "colors_used": report.colors_used,
        "brooks_bound": cg.max_degree + 1,
        "verified": report.valid and total,
        "oracle_value": None, "oracle_gap": None,
    }
    if G.m <= ORACLE_MAX_EDGES:
        res = exact_strong_chromatic_index(G, args.t, budget=2_000_000)
        if res.exact:
            summary["oracle_value"] = res.value
            summary["oracle_gap"] = report.colors_used - res.value
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_coloring(out / "coloring.txt", G, done.coloring)
    (out / "trace.csv").write_text(trace_csv(nib.trace))
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps({k: summary[k] for k in ("colors_used", "k_budget", "verified", "finish_method")}))
    return 0 if summary["verified"] else 1


def _vacuous_report() -> ConditionReport:
    entries = [ConditionEntry(cid, 0, math.inf, math.inf, True, "vacuous: empty graph")
               for cid in ("1", "2a", "2b", "2c", "3a", "3b")]
    return ConditionReport(entries, 0, "empty graph")


def cmd_analyze(args) -> int:
    G = load_graph(args.graph, args.format)
    if G.m == 0:
        rep = _vacuous_report()
    else:
        cg = conflict_graph(G, args.t)
        theta = args.theta if args.theta is not None else default_threshold(G.max_degree)
        FM = vertex_friends(G, theta)
        FX = build_family_X(G, FM, args.t)
        rep = verify_general_conditions(cg, FM, FX, args.gamma, args.epsilon, args.N)
    payload = json.loads(rep.to_json())
    payload["schema"] = SCHEMA.replace("summary", "conditions")
    payload["run_config"] = {"command": "analyze", "graph": str(args.graph), "t": args.t,
                             "gamma": args.gamma, "epsilon": args.epsilon, "N": args.N,
                             "theta": args.theta}
    payload["input_hash"] = _content_hash(G.edge_list_text())
    _write(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_schedule(args) -> int:
    if args.delta < 3:
        raise UsageError(f"Δ must be at least 3 so that ln Δ > 1 (got {args.delta})")
    closed = True
    try:
        S = build_schedule(args.delta, args.epsilon, args.gamma)
    except ScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        S = exc.schedule
        closed = False
    check = verify_schedule_properties(S)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.csv").write_text(S.to_csv())
        payload = {"schema": SCHEMA.replace("summary", "schedule"),
                   "run_config": {"command": "schedule", "delta": args.delta,
                                  "epsilon": args.epsilon, "gamma": args.gamma},
                   "i_star": S.i_star, **check.to_dict()}
        (out / "checks.json").write_text(json.dumps(payload, indent=2, default=str) + "\n")
    else:
        sys.stdout.write(S.to_csv())
    print(json.dumps({"closed": closed, "i_star": S.i_star, "ok": check.ok}), file=sys.stderr)
    return 0 if closed and check.ok else 1


def cmd_oracle(args) -> int:
    G = load_graph(args.graph, args.format)
    res = exact_strong_chromatic_index(G, args.t, budget=args.budget)
    cert_path = None
    if args.certificate and res.certificate is not None:
        write_coloring(args.certificate, G, res.certificate)
        cert_path = str(args.certificate)
    _write(args.out, res.to_json(cert_path) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strong-nibble", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated graph as an edge list")
    g.add_argument("--family", required=True,
                   choices=["cycle", "complete-bipartite", "c5-blowup", "random-regular",
                            "projective", "high-girth"])
    for name in ("n", "d", "t", "a", "b", "q", "g"):
        g.add_argument(f"--{name}", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    def graph_args(sp):
        sp.add_argument("graph")
        sp.add_argument("--format", choices=["edge-list", "dimacs"])
        sp.add_argument("--t", type=int, default=2)

    c = sub.add_parser("color", help="run the nibble pipeline and verify the result")
    graph_args(c)
    c.add_argument("--epsilon", type=float, default=0.5)
    c.add_argument("--gamma", type=float, default=0.5)
    c.add_argument("--mode", choices=["theory", "empirical"], default="empirical")
    c.add_argument("--seed", type=int)
    c.add_argument("--retry-budget", type=int, default=10)
    c.add_argument("--finish-ratio", type=float, default=8.0)
    c.add_argument("--k-override", type=int)
    c.add_argument("--theta", type=float)
    c.add_argument("--max-iterations", type=int, default=20)
    c.add_argument("--out", required=True, help="output directory")
    c.set_defaults(func=cmd_color)

    a = sub.add_parser("analyze", help="measure the structural conditions")
    graph_args(a)
    a.add_argument("--gamma", type=float, default=0.5)
    a.add_argument("--epsilon", type=float, default=0.5)
    a.add_argument("--N", type=int, default=1)
    a.add_argument("--theta", type=float)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("schedule", help="print the parameter trajectory and lemma checks")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--epsilon", type=float, default=0.5)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=cmd_schedule)

    o = sub.add_parser("oracle", help="exact strong chromatic index")
    graph_args(o)
    o.add_argument("--budget", type=int, default=5_000_000)
    o.add_argument("--certificate")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (UsageError, GraphFormatError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
