"""Partial-order reduction of block traces.

Two blocks on different channels are *independent* when neither one's
outputs are used by the other's input recipes; swapping adjacent
independent blocks yields an equivalent trace.  Given a total order on
channels, only the lexicographically least trace of each class needs to
be explored.

Symbolically, when a block on channel ``c`` is appended to ``tr``, it must
depend on (use an output of) some block that would otherwise let it move
further left.  ``dep(tr, c)`` is that set of handles and is recorded as a
dependency constraint on the new block's recipe variables.

Two readings of "depends on" are offered:

* ``sat2`` (second order): some recipe of the block mentions one of the
  handles syntactically;
* ``sat1`` (first order): some received message cannot be deduced, within
  the recipe bound, from the frame without those handles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .compressed_semantics import Block, ExplorationTree, build_tree, symbolic_compressed_step
from .symbolic_core import ConstraintSystem, Dependency, SymbolicProcess
from .term_algebra import (
    E_AENC,
    Frame,
    Signature,
    deducible_values,
    handles,
    natural_key,
    normalize,
    substitute,
)


@dataclass(frozen=True)
class ChannelOrder:
    """Strict total order on channels, given smallest first."""

    chans: tuple

    def __post_init__(self):
        if len(set(self.chans)) != len(self.chans):
            raise ValueError("channel order lists a channel twice")

    def rank(self, c: str) -> int:
        try:
            return self.chans.index(c)
        except ValueError:
            raise KeyError("channel %r is not in the order" % c) from None

    def lt(self, a: str, b: str) -> bool:
        return self.rank(a) < self.rank(b)

    def key(self, trace: Sequence[Block]) -> tuple:
        return tuple(self.rank(b.chan) for b in trace)


def dep(trace: Sequence[Block], c: str, order: ChannelOrder) -> frozenset:
    """Handles one of which a block on ``c`` appended to ``trace`` must use.

    Let ``k`` be the last position whose channel is greater than ``c``
    such that every later block is on a channel smaller than ``c``; the
    result is every output of blocks ``k..n``, or empty if there is no
    such ``k``."""
    rc = order.rank(c)
    for k in range(len(trace) - 1, -1, -1):
        rk = order.rank(trace[k].chan)
        if rk > rc:
            out = set()
            for b in trace[k:]:
                out |= set(b.outputs)
            return frozenset(out)
        if rk == rc:
            return frozenset()
    return frozenset()


def all_dep(trace: Sequence[Block], order: ChannelOrder) -> list:
    """Dependency constraints of every block of ``trace`` (empty ones omitted)."""
    out = []
    for i, b in enumerate(trace):
        ws = dep(trace[:i], b.chan, order)
        if ws:
            out.append(Dependency(tuple(b.inputs), ws))
    return out


def reduced_successors(sp: SymbolicProcess, trace: Sequence[Block], order: ChannelOrder, sig: Signature = E_AENC, then_only: bool = False) -> list:
    """Symbolic block successors with their dependency constraint added."""
    out = []
    for block, nxt in symbolic_compressed_step(sp, sig, then_only):
        ws = dep(trace, block.chan, order)
        if ws:
            nxt = SymbolicProcess(nxt.procs, nxt.system.add(Dependency(tuple(block.inputs), ws)))
        out.append((block, nxt, ws or None))
    return out


def reduced_step(sp: SymbolicProcess, trace: Sequence[Block], order: ChannelOrder, sig: Signature = E_AENC) -> list:
    """``(block, sp')`` pairs; ``trace`` is the block trace leading to ``sp``."""
    return [(b, s) for b, s, _ in reduced_successors(sp, trace, order, sig)]


def explore_reduced_symbolic(sp: SymbolicProcess, order: ChannelOrder, sig: Signature = E_AENC, then_only: bool = False) -> ExplorationTree:
    return build_tree(sp, lambda n: reduced_successors(n.state, n.trace, order, sig, then_only))


# ---------------------------------------------------------------------------
# satisfaction of dependency constraints


def sat2(constraint: Dependency, theta: Mapping) -> bool:
    """Some recipe of the block mentions one of the handles."""
    if not constraint.ws:
        return True
    return any(handles(theta[X]) & constraint.ws for X in constraint.Xs)


def sat1(C: ConstraintSystem, constraint: Dependency, lam: Mapping, depth: int, sig: Signature = E_AENC) -> bool:
    """Some received message is not deducible without the handles."""
    if not constraint.ws:
        return True
    deds = {d.X: d for d in C.deductions()}
    for X in constraint.Xs:
        d = deds[X]
        avail = sorted(d.D - constraint.ws, key=lambda h: natural_key(h.name))
        sub = Frame((w, normalize(substitute(C.frame[w], lam), sig)) for w in avail)
        if lam[d.x] not in deducible_values(sub, depth, sig):
            return True
    return False


def sol2_filter(C: ConstraintSystem, theta: Mapping) -> bool:
    return all(sat2(c, theta) for c in C.dependencies())


def sol1_filter(C: ConstraintSystem, lam: Mapping, depth: int, sig: Signature = E_AENC) -> bool:
    return all(sat1(C, c, lam, depth, sig) for c in C.dependencies())


# ---------------------------------------------------------------------------
# concrete block traces


def block_independent(b1: Block, b2: Block) -> bool:
    """Blocks on different channels, neither reading the other's outputs."""
    if b1.chan == b2.chan:
        return False
    used1 = set()
    for M in b1.inputs:
        used1 |= handles(M)
    used2 = set()
    for M in b2.inputs:
        used2 |= handles(M)
    return not (set(b1.outputs) & used2) and not (set(b2.outputs) & used1)


def equivalent_traces(trace: Sequence[Block], limit: int = 100000) -> set:
    """All traces reachable by swapping adjacent independent blocks."""
    start = tuple(trace)
    seen = {start}
    todo = [start]
    while todo:
        tr = todo.pop()
        for i in range(len(tr) - 1):
            if block_independent(tr[i], tr[i + 1]):
                nt = tr[:i] + (tr[i + 1], tr[i]) + tr[i + 2 :]
                if nt not in seen:
                    if len(seen) >= limit:
                        raise ValueError("trace class too large to enumerate")
                    seen.add(nt)
                    todo.append(nt)
    return seen


def min_trace(trace: Sequence[Block], order: ChannelOrder) -> tuple:
    """Least trace of the class of ``trace`` in the lexicographic order
    induced by the channel order (brute force, meant for short traces)."""
    return min(equivalent_traces(trace), key=order.key)


def is_minimal(trace: Sequence[Block], order: ChannelOrder) -> bool:
    """Factor scan: ``trace`` is not minimal exactly when some block could
    move left past a block on a greater channel, i.e. it is independent of
    every block from that one up to itself."""
    tr = tuple(trace)
    for j in range(1, len(tr)):
        bj = tr[j]
        for k in range(j - 1, -1, -1):
            if not block_independent(tr[k], bj):
                break
            if order.lt(bj.chan, tr[k].chan):
                return False
    return True


def instantiate_trace(trace: Sequence[Block], theta: Mapping) -> tuple:
    """Concrete blocks obtained by replacing recipe variables."""
    return tuple(Block(b.chan, tuple(theta[X] for X in b.inputs), b.outputs) for b in trace)
