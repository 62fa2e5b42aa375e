"""Compare the compiled and pure-Python recipe-saturation kernels.

Two measurements:

* ``micro``: both kernel modules are imported side by side and ``saturate``
  is timed on the bundled frames at several recipe depths;
* ``e2e``: whole ``porveq`` runs in fresh interpreters, once with the
  compiled kernel and once with ``PORVEQ_PURE=1``.

Usage::

    python benchmarks/bench_kernel.py            # both
    python benchmarks/bench_kernel.py micro --repeat 5
    python benchmarks/bench_kernel.py e2e --format json
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import subprocess
import sys
import time
from importlib import resources

from porveq import _kernel_py
from porveq.process_calculus import parse_spec
from porveq.term_algebra import E_AENC, App

try:
    from porveq import _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

BACKENDS = {"python": _kernel_py, "cython": _kernel_c}

MICRO = [
    # (frame pair, depth)
    (("phi0", "phi0"), 3),
    (("phi", "phi_prime"), 2),
    (("phi", "phi_prime"), 3),
    (("phi_plus", "phi_plus_prime"), 3),
]

E2E = [
    ("count parallel_n n=3", ["count", "--all-modes", "parallel_n", "-D", "n=3", "--jobs", "1"]),
    ("check Q0 all modes", ["check", "--all-modes", "private_auth", "--query", "Q0_vs_Q0prime", "--jobs", "1"]),
    ("check Q reduced1 depth 3", ["check", "--mode", "reduced1", "private_auth", "--query", "Q_vs_Qprime", "--jobs", "1"]),
    ("check PQ compressed depth 2", ["check", "--mode", "compressed", "--depth", "2", "private_auth", "--query", "PQ_vs_PQprime"]),
]


def _frames():
    text = resources.files("porveq").joinpath("specs/private_auth.spec").read_text()
    return parse_spec(text).frames


def _intern(table, t):
    if type(t) is App and t.args:
        return table.reduce(t.sym, tuple(_intern(table, a) for a in t.args))
    return table.leaf(t)


def _saturate_once(mod, frames, depth):
    table = mod.TermTable(E_AENC.compiled_rules())
    handles = frames[0].domain()
    atoms = [(tuple(_intern(table, f[h]) for f in frames), False) for h in handles]
    for c in ("ok", "start"):
        atoms.append((tuple(_intern(table, App(c)) for _ in frames), False))
    t = time.perf_counter()
    classes = mod.saturate(table, atoms, E_AENC.functions, depth, len(frames), False, None)
    return time.perf_counter() - t, len(classes[0])


def micro(repeat):
    frames = _frames()
    rows = []
    for (a, b), depth in MICRO:
        pair = (frames[a], frames[b])
        row = {"case": "%s/%s depth %d" % (a, b, depth)}
        for name, mod in BACKENDS.items():
            if mod is None:
                row[name] = None
                continue
            times, size = [], None
            for _ in range(repeat):
                dt, size = _saturate_once(mod, pair, depth)
                times.append(dt)
            row[name] = statistics.median(times)
            row["classes"] = size
        rows.append(row)
    return rows


def _timed_run(argv, pure):
    env = dict(os.environ)
    env.pop("PORVEQ_PURE", None)
    if pure:
        env["PORVEQ_PURE"] = "1"
    t = time.perf_counter()
    out = subprocess.run([sys.executable, "-m", "porveq.cli", *argv], env=env, capture_output=True, text=True)
    dt = time.perf_counter() - t
    if out.returncode not in (0, 1):
        raise RuntimeError(out.stderr)
    return dt, out.stdout


def e2e(repeat):
    rows = []
    for label, argv in E2E:
        row = {"case": label}
        outputs = {}
        for name, pure in (("cython", False), ("python", True)):
            if name == "cython" and _kernel_c is None:
                row[name] = None
                continue
            times = []
            for _ in range(repeat):
                dt, outputs[name] = _timed_run(argv, pure)
                times.append(dt)
            row[name] = statistics.median(times)
        row["same_output"] = len(set(outputs.values())) == 1
        rows.append(row)
    return rows


def _fmt(x):
    return "n/a" if x is None else "%.4f" % x


def print_table(title, rows, extra):
    print(title)
    print("  %-34s %10s %10s %8s  %s" % ("case", "cython s", "python s", "speedup", extra))
    for r in rows:
        speed = "%.1fx" % (r["python"] / r["cython"]) if r.get("cython") else "n/a"
        print("  %-34s %10s %10s %8s  %s" % (r["case"], _fmt(r.get("cython")), _fmt(r.get("python")), speed, r.get(extra)))
    print()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("which", nargs="?", choices=("micro", "e2e", "all"), default="all")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--format", choices=("text", "json"), default="text")
    args = ap.parse_args(argv)

    result = {}
    if args.which in ("micro", "all"):
        result["micro"] = micro(args.repeat)
    if args.which in ("e2e", "all"):
        result["e2e"] = e2e(args.repeat)

    if args.format == "json":
        print(json.dumps(result, indent=2))
        return 0
    if _kernel_c is None:
        print("compiled kernel not built; only the pure-Python kernel is timed\n")
    if "micro" in result:
        print_table("saturate() on bundled frames (median of %d)" % args.repeat, result["micro"], "classes")
    if "e2e" in result:
        print_table("porveq runs in fresh interpreters (median of %d)" % args.repeat, result["e2e"], "same_output")
    return 0


if __name__ == "__main__":
    sys.exit(main())
