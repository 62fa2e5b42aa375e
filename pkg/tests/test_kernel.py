"""The compiled and pure-Python saturation kernels must agree exactly."""

from __future__ import annotations

import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porveq import _kernel_py, kernel
from porveq.term_algebra import E_AENC, App, Name

try:
    from porveq import _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

needs_c = pytest.mark.skipif(_kernel_c is None, reason="compiled kernel not built")

LEAVES = [Name("a"), Name("b"), Name("k"), App("ok")]


def _intern(table, t):
    if type(t) is App and t.args:
        return table.reduce(t.sym, tuple(_intern(table, a) for a in t.args))
    return table.leaf(t)


terms = st.recursive(
    st.sampled_from(LEAVES),
    lambda c: st.one_of(
        st.builds(lambda s, t: App("pair", (s, t)), c, c),
        st.builds(lambda s: App("pk", (s,)), c),
        st.builds(lambda s: App("aenc", (s, App("pk", (Name("k"),)))), c),
    ),
    max_leaves=5,
)


def _run(mod, frames, depth, track, marked, split=False):
    table = mod.TermTable(E_AENC.compiled_rules())
    ncomp = len(frames)
    atoms = []
    for j in range(len(frames[0])):
        atoms.append((tuple(_intern(table, f[j]) for f in frames), j in marked))
    for c in ("ok", "start"):
        atoms.append((tuple(_intern(table, App(c)) for _ in frames), False))
    out = mod.saturate(table, atoms, E_AENC.functions, depth, ncomp, track, None, split)
    return [list(x) for x in out], list(table.nodes)


@needs_c
@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(terms, terms), min_size=1, max_size=3),
    st.integers(min_value=1, max_value=3),
    st.booleans(),
    st.sets(st.integers(min_value=0, max_value=2)),
    st.booleans(),
)
def test_backends_agree(rows, depth, track, marked, split):
    frames = [[r[0] for r in rows], [r[1] for r in rows]]
    if depth == 3 and len(rows) > 2:
        depth = 2  # keep the pure-Python side fast
    assert _run(_kernel_py, frames, depth, track, marked, split) == _run(_kernel_c, frames, depth, track, marked, split)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(terms, terms), min_size=1, max_size=3), st.integers(min_value=1, max_value=2))
def test_split_stop_truncates_the_full_enumeration(rows, depth):
    frames = [[r[0] for r in rows], [r[1] for r in rows]]
    full, _ = _run(_kernel_py, frames, depth, False, set())
    cut, _ = _run(_kernel_py, frames, depth, False, set(), True)
    assert [v[:len(cut[0])] for v in full] == cut
    lefts = [vec[0] for vec in cut[0]]
    if len(cut[0]) < len(full[0]):
        assert lefts[-1] in lefts[:-1]
    assert len(set(lefts[:-1])) == len(lefts) - 1


@needs_c
def test_reduce_agrees_on_decryption():
    for mod in (_kernel_py, _kernel_c):
        table = mod.TermTable(E_AENC.compiled_rules())
        m = _intern(table, Name("m"))
        c = _intern(table, App("aenc", (Name("m"), App("pk", (Name("k"),)))))
        k = _intern(table, Name("k"))
        assert table.reduce("adec", (c, k)) == m


def test_backend_is_selected_at_import():
    assert kernel.BACKEND in ("cython", "python")
    if _kernel_c is not None:
        assert kernel.BACKEND == "cython"


def test_pure_python_fallback_can_be_forced():
    env = dict(os.environ, PORVEQ_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from porveq import kernel; print(kernel.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
