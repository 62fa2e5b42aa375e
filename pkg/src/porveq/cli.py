"""Command-line front end: ``porveq check|count|explore|oracle SPEC``.

Exit codes: 0 success / equivalent, 1 not equivalent (a witness is
printed), 2 usage or specification error.  Reports are deterministic.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .compressed_semantics import ExplorationTree, explore_compressed_symbolic
from .concrete_semantics import oracle_trace_equiv
from .equivalence_engine import MODES, NotInitialError, check_equivalence, check_inclusion, count_traces
from .process_calculus import SpecError, parse_spec
from .reduced_semantics import ChannelOrder, explore_reduced_symbolic
from .symbolic_core import initial_symbolic

EXIT_OK, EXIT_DIFFERENT, EXIT_ERROR = 0, 1, 2
DEFAULT_DEPTH = 3
DEFAULT_COUNT_DEPTH = 2
DEFAULT_BOUND = 8


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# spec loading


def bundled_specs() -> list:
    return sorted(p.name for p in resources.files("porveq").joinpath("specs").iterdir() if p.name.endswith(".spec"))


def resolve_spec(path: str) -> str:
    """Read a spec file; bare names fall back to the bundled specs."""
    p = Path(path)
    if p.is_file():
        return p.read_text()
    name = p.name if p.name.endswith(".spec") else p.name + ".spec"
    if name in bundled_specs():
        return resources.files("porveq").joinpath("specs", name).read_text()
    raise UsageError("no such spec file: %s (bundled: %s)" % (path, ", ".join(bundled_specs())))


def parse_defines(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError("-D expects NAME=VALUE, got %r" % item)
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load(args):
    spec = parse_spec(resolve_spec(args.spec), parse_defines(args.define))
    if args.order:
        chain = tuple(c.strip() for c in args.order.split("<"))
        if not all(chain):
            raise UsageError("--order expects channels separated by '<', e.g. a<b<c")
        spec = replace(spec, orders=[chain])
    q = spec.query(args.query)
    A, B = spec.query_processes(q)
    order = ChannelOrder(spec.channel_order())
    return spec, q, A, B, order


def default_jobs() -> int:
    env = os.environ.get("PORVEQ_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError("PORVEQ_JOBS must be an integer") from None
    return os.cpu_count() or 1


def run_all(fn, modes, jobs):
    """Run ``fn(mode)`` for every mode; results come back in mode order."""
    if jobs <= 1 or len(modes) <= 1:
        return [fn(m) for m in modes]
    with ProcessPoolExecutor(max_workers=min(jobs, len(modes))) as ex:
        return list(ex.map(fn, modes))


# ---------------------------------------------------------------------------
# commands


class _Check:
    """Picklable closure for running one mode in a worker."""

    def __init__(self, A, B, kind, depth, bound, order):
        self.A, self.B, self.kind, self.depth, self.bound, self.order = A, B, kind, depth, bound, order

    def __call__(self, mode):
        if self.kind == "incl":
            return check_inclusion(self.A, self.B, mode, self.depth, self.bound, self.order)
        return check_equivalence(self.A, self.B, mode, self.depth, self.bound, self.order)


class _Count:
    def __init__(self, A, depth, bound, order):
        self.A, self.depth, self.bound, self.order = A, depth, bound, order

    def __call__(self, mode):
        return count_traces(self.A, mode, self.depth, self.bound, self.order)


def cmd_check(args, out) -> int:
    _, q, A, B, order = load(args)
    if B is None:
        raise UsageError("query %s is a %s query; check needs 'equiv' or 'incl'" % (q.label, q.kind))
    depth = args.depth if args.depth is not None else DEFAULT_DEPTH
    bound = args.bound
    modes = list(MODES) if args.all_modes else [args.mode]
    verdicts = run_all(_Check(A, B, q.kind, depth, bound, order), modes, args.jobs)
    if args.format == "json":
        doc = {"query": q.label, "kind": q.kind, "verdicts": [v.to_json() for v in verdicts]}
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        for v in verdicts:
            out.write(format_verdict(q, v))
        if len(verdicts) > 1:
            out.write("\n%-20s %-14s %s\n" % ("mode", "result", "explored pairs"))
            for v in verdicts:
                out.write("%-20s %-14s %d\n" % (v.mode, v.result, v.explored))
    return EXIT_OK if all(v.holds for v in verdicts) else EXIT_DIFFERENT


def format_verdict(q, v) -> str:
    lines = ["query %s (%s), mode %s" % (q.label or "-", q.kind, v.mode), v.summary()]
    if v.holds:
        lines.append("  no counterexample within the bounds; this is not a proof beyond them")
    else:
        w = v.witness
        lines.append("  witness (%s side, %s):" % (w.side, w.reason))
        lines.append("    trace: %s" % (" . ".join(str(a) for a in w.trace) or "(empty)"))
        if w.theta:
            lines.append("    theta: %s" % ", ".join("%s -> %s" % (x, m) for x, m in w.theta))
        if w.test is not None:
            lines.append("    distinguishing test: %s = %s" % w.test)
        if len(v.witnesses) > 1:
            lines.append("  %d witnesses of the same length:" % len(v.witnesses))
            for other in v.witnesses:
                lines.append("    - " + other.describe())
    lines.append("  explored pairs: %d" % v.explored)
    return "\n".join(lines) + "\n"


def cmd_count(args, out) -> int:
    _, q, A, _, order = load(args)
    depth = args.depth if args.depth is not None else DEFAULT_COUNT_DEPTH
    modes = list(MODES) if args.all_modes else [args.mode]
    counts = run_all(_Count(A, depth, args.bound, order), modes, args.jobs)
    if args.format == "json":
        doc = {"query": q.label, "recipe_depth": depth, "visible_bound": args.bound, "counts": dict(zip(modes, counts))}
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out.write("maximal traces (recipe depth %d)\n" % depth)
        for m, n in zip(modes, counts):
            out.write("%-20s %d\n" % (m, n))
    return EXIT_OK


def explore_tree(A, mode, order, then_only=False) -> ExplorationTree:
    sp = initial_symbolic(A)
    if mode in ("reduced2", "reduced1"):
        return explore_reduced_symbolic(sp, order, then_only=then_only)
    if mode == "symbolic_compressed":
        return explore_compressed_symbolic(sp, then_only=then_only)
    raise UsageError("explore needs a symbolic mode (symbolic_compressed, reduced2 or reduced1)")


def emit_dot(tree: ExplorationTree, name: str = "blocks") -> str:
    """Graphviz rendering: solid edges are blocks, dashed edges point from a
    block to the block that produced a handle it must depend on, shaded
    nodes are improper (failing) blocks."""
    return tree.to_dot(name)


def cmd_explore(args, out) -> int:
    _, q, A, _, order = load(args)
    mode = args.mode if args.mode != "concrete" else "reduced2"
    tree = explore_tree(A, mode, order, args.no_else)
    if args.format == "dot":
        out.write(emit_dot(tree))
    elif args.format == "json":
        doc = {
            "query": q.label,
            "nodes": [{"id": n.id, "block": None if n.block is None else str(n.block),
                       "improper": bool(n.block is not None and n.block.improper)} for n in tree.nodes],
            "edges": [list(e) for e in tree.edges()],
            "dependencies": [[a, b, str(w)] for a, b, w in tree.dependency_edges()],
        }
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out.write("%d nodes, %d block edges, %d dependency edges, %d maximal traces\n"
                  % (len(tree.nodes), len(tree.edges()), len(tree.dependency_edges()), len(tree.paths())))
        for n in tree.leaves():
            if n.parent is None:
                continue
            out.write(" . ".join(str(b) for b in n.trace) + "\n")
            cur = n
            deps = []
            while cur.parent is not None:
                if cur.dependency:
                    deps.append("[%s] |> {%s}" % (",".join(str(X) for X in cur.block.inputs),
                                                   ",".join(sorted(str(w) for w in cur.dependency))))
                cur = tree.nodes[cur.parent]
            for d in reversed(deps):
                out.write("    " + d + "\n")
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    _, q, A, B, _ = load(args)
    if B is None:
        raise UsageError("query %s has no right-hand process" % q.label)
    depth = args.depth if args.depth is not None else DEFAULT_DEPTH
    bound = args.bound if args.bound is not None else DEFAULT_BOUND
    v = oracle_trace_equiv(A, B, bound, depth)
    if args.format == "json":
        out.write(json.dumps({"query": q.label, "verdict": v.to_json()}, indent=2, sort_keys=True) + "\n")
    else:
        out.write(format_verdict(q, v))
    return EXIT_OK if v.holds else EXIT_DIFFERENT


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="porveq", description="Bounded trace equivalence of security protocols "
                                "with block compression and partial-order reduction.")
    p.add_argument("--version", action="version", version="porveq " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats, mode_default):
        sp.add_argument("spec", help="spec file, or the name of a bundled spec")
        sp.add_argument("--query", help="query label (default: first query)")
        sp.add_argument("--mode", choices=MODES, default=mode_default)
        sp.add_argument("--depth", type=_positive, default=None, help="recipe height bound")
        sp.add_argument("--bound", type=_positive, default=None, help="visible-action bound")
        sp.add_argument("--format", choices=formats, default="text")
        sp.add_argument("-D", dest="define", action="append", default=[], metavar="NAME=VALUE",
                        help="override an @define of the spec")
        sp.add_argument("--order", help="channel order override, e.g. a<b<c")
        sp.add_argument("--jobs", type=_positive, default=None, help="worker processes (default: $PORVEQ_JOBS or CPU count)")

    c = sub.add_parser("check", help="decide equivalence or inclusion (default depth %d)" % DEFAULT_DEPTH)
    common(c, ("text", "json"), "reduced1")
    c.add_argument("--all-modes", action="store_true", help="run every semantics and compare")
    c.set_defaults(func=cmd_check)

    n = sub.add_parser("count", help="count maximal traces (default depth %d)" % DEFAULT_COUNT_DEPTH)
    common(n, ("text", "json"), "reduced2")
    n.add_argument("--all-modes", action="store_true", help="count under every semantics")
    n.set_defaults(func=cmd_count)

    e = sub.add_parser("explore", help="print the symbolic block tree")
    common(e, ("text", "json", "dot"), "reduced2")
    e.add_argument("--no-else", action="store_true", help="follow only the then-branches of conditionals")
    e.set_defaults(func=cmd_explore)

    o = sub.add_parser("oracle", help="brute-force concrete trace equivalence")
    common(o, ("text", "json"), "concrete")
    o.set_defaults(func=cmd_oracle)
    return p


def _positive(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer, got %r" % s) from None
    if v <= 0:
        raise argparse.ArgumentTypeError("expected a positive integer, got %r" % s)
    return v


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        if getattr(args, "jobs", None) is None:
            args.jobs = default_jobs()
        return args.func(args, out)
    except (UsageError, SpecError, NotInitialError) as e:
        sys.stderr.write("porveq: error: %s\n" % e)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
