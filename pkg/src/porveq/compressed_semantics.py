"""Compressed (focused) semantics: traces made of whole blocks.

A block on channel ``c`` is a maximal run of one basic process: one or
more inputs followed by zero or more outputs, with conditionals resolved
silently in between.  Execution is *focused*: the stage records whether
the block still has to read (``i+``), may read more or start writing
(``i*``), or is writing (``o*``).

* A block is **proper** when it reads and then writes at least once; it
  stops in front of the next input or at ``0``.  The process continues.
* A block is **improper** when the process reaches ``0`` before writing
  anything.  Such a block can only end a trace: every process is dropped.

Both a concrete flavour (inputs are recipes, chosen as class
representatives) and a symbolic flavour (inputs are fresh recipe
variables, conditionals add constraints) are provided.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .concrete_semantics import InAct, OutAct, fresh_handle
from .process_calculus import DEAD, EMPTY, NULL, ExtendedProcess, If, In, Out, Proc, SimpleProcess, subst_proc
from .symbolic_core import (
    ConstraintSystem,
    Deduction,
    Diseq,
    Eq,
    SecondOrderVar,
    SymbolicProcess,
    SymIn,
    SymOut,
    fresh_input_vars,
    fresh_output_handle,
)
from .term_algebra import E_AENC, Frame, RecipeClasses, Signature, apply_recipe, eq_mod_E, normalize


class FocusStage(Enum):
    I_PLUS = "i+"
    I_STAR = "i*"
    O_STAR = "o*"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Block:
    """``in(c,M1)...in(c,Mk).out(c,w1)...out(c,wm)`` with ``k >= 1``.

    ``inputs`` holds recipes (concrete) or recipe variables (symbolic)."""

    chan: str
    inputs: tuple
    outputs: tuple

    @property
    def proper(self) -> bool:
        return bool(self.outputs)

    @property
    def improper(self) -> bool:
        return not self.outputs

    @property
    def skeleton(self) -> tuple:
        return (self.chan, len(self.inputs), len(self.outputs))

    def actions(self) -> list:
        symbolic = any(isinstance(M, SecondOrderVar) for M in self.inputs)
        ins = [(SymIn if symbolic else InAct)(self.chan, M) for M in self.inputs]
        outs = [(SymOut if symbolic else OutAct)(self.chan, w) for w in self.outputs]
        return ins + outs

    def visible_length(self) -> int:
        return len(self.inputs) + len(self.outputs)

    def __str__(self):
        return ".".join(str(a) for a in self.actions()) + ("" if self.proper else "[improper]")


@dataclass(frozen=True)
class FocusResult:
    """Outcome of one focused execution of a basic process.

    ``proc`` is the continuation for a proper block and ``DEAD`` for an
    improper one.  ``constraints`` is ``None`` in the concrete flavour."""

    block: Block
    proc: Proc
    frame: Frame
    constraints: Optional[tuple] = None


def _head_channel(P: Proc) -> Optional[str]:
    while type(P) is If:
        # the channel of a process is fixed; look through both branches
        for q in (P.then, P.else_):
            c = _head_channel(q)
            if c is not None:
                return c
        return None
    if type(P) in (In, Out):
        return P.chan
    return None


def focused_exec(
    P: Proc,
    phi: Frame,
    S: Optional[Sequence] = None,
    stage: FocusStage = FocusStage.I_PLUS,
    *,
    recipes: Optional[Sequence] = None,
    depth: int = 2,
    sig: Signature = E_AENC,
    then_only: bool = False,
) -> list:
    """All complete focused executions of the basic process ``P``.

    Concrete flavour (``S is None``): ``P`` must be closed.  Inputs use the
    given ``recipes`` in order (every recipe must be consumed), or else
    range over one representative per class of recipes of height at most
    ``depth``.

    Symbolic flavour: ``S`` is the current tuple of constraints over the
    frame ``phi``.  Each input adds a deduction constraint, each
    conditional branches with an equation or a disequation (only the
    equation when ``then_only`` is set)."""
    chan = _head_channel(P)
    if chan is None:
        return []
    if S is not None:
        return _focus_sym(P, chan, ConstraintSystem(phi, tuple(S)), stage, sig, then_only)
    return _focus_concrete(P, chan, phi, stage, recipes, depth, sig)


def _focus_concrete(P, chan, phi, stage, recipes, depth, sig):
    out = []
    pool = None

    def candidates():
        nonlocal pool
        if pool is None:
            rc = RecipeClasses([phi], depth, sig, domain=phi.domain())
            pool = [(rc.recipe(i), rc.value(i, 0)) for i in range(len(rc))]
        return pool

    def go(p, st, frame, ins, outs):
        while type(p) is If:
            p = p.then if eq_mod_E(p.u, p.v, sig) else p.else_
        if type(p) is In:
            if st is FocusStage.O_STAR:
                if recipes is None or len(ins) == len(recipes):
                    out.append(FocusResult(Block(chan, tuple(ins), tuple(outs)), p, frame))
                return
            if recipes is not None:
                if len(ins) == len(recipes):
                    return
                M = recipes[len(ins)]
                v = apply_recipe(M, frame, sig)
                go(subst_proc(p.cont, {p.var: v}), FocusStage.I_STAR, frame, ins + [M], outs)
                return
            for M, v in candidates():
                go(subst_proc(p.cont, {p.var: v}), FocusStage.I_STAR, frame, ins + [M], outs)
        elif type(p) is Out:
            if st is FocusStage.I_PLUS:
                return
            w = fresh_handle(frame)
            go(p.cont, FocusStage.O_STAR, frame.extend(w, normalize(p.term, sig)), ins, outs + [w])
        elif p == NULL:
            if recipes is not None and len(ins) != len(recipes):
                return
            if st is FocusStage.O_STAR:
                out.append(FocusResult(Block(chan, tuple(ins), tuple(outs)), NULL, frame))
            elif st is FocusStage.I_STAR:
                out.append(FocusResult(Block(chan, tuple(ins), ()), DEAD, frame))

    go(P, stage, phi, [], [])
    return out


def _focus_sym(P, chan, C, stage, sig, then_only):
    out = []

    def go(p, st, C, ins, outs):
        if type(p) is If:
            go(p.then, st, C.add(Eq(p.u, p.v)), ins, outs)
            if not then_only:
                go(p.else_, st, C.add(Diseq(p.u, p.v)), ins, outs)
        elif type(p) is In:
            if st is FocusStage.O_STAR:
                out.append(FocusResult(Block(chan, tuple(ins), tuple(outs)), p, C.frame, C.constraints))
                return
            X, x = fresh_input_vars(C)
            C2 = C.add(Deduction(frozenset(C.frame.domain()), X, x))
            go(subst_proc(p.cont, {p.var: x}), FocusStage.I_STAR, C2, ins + [X], outs)
        elif type(p) is Out:
            if st is FocusStage.I_PLUS:
                return
            w = fresh_output_handle(C.frame)
            go(p.cont, FocusStage.O_STAR, C.with_frame(C.frame.extend(w, normalize(p.term, sig))), ins, outs + [w])
        elif p == NULL:
            if st is FocusStage.O_STAR:
                out.append(FocusResult(Block(chan, tuple(ins), tuple(outs)), NULL, C.frame, C.constraints))
            elif st is FocusStage.I_STAR:
                out.append(FocusResult(Block(chan, tuple(ins), ()), DEAD, C.frame, C.constraints))

    go(P, stage, C, [], [])
    return out


def _after_block(procs: SimpleProcess, r: FocusResult) -> SimpleProcess:
    if r.block.improper:
        return EMPTY
    return procs.replace(r.block.chan, r.proc)


def compressed_step(A: ExtendedProcess, depth: int = 2, sig: Signature = E_AENC) -> list:
    """Concrete block successors ``(block, A')`` of an initial process;
    block inputs range over one recipe per class."""
    out = []
    for chan, p in A.procs:
        if type(p) is not In:
            continue
        for r in _focus_concrete(p, chan, A.frame, FocusStage.I_PLUS, None, depth, sig):
            out.append((r.block, ExtendedProcess(_after_block(A.procs, r), r.frame)))
    return out


def symbolic_compressed_step(sp: SymbolicProcess, sig: Signature = E_AENC, then_only: bool = False) -> list:
    """Symbolic block successors ``(block, sp')``; no satisfiability check."""
    out = []
    C = sp.system
    for chan, p in sp.procs:
        if type(p) is not In:
            continue
        for r in _focus_sym(p, chan, C, FocusStage.I_PLUS, sig, then_only):
            out.append((r.block, SymbolicProcess(_after_block(sp.procs, r), ConstraintSystem(r.frame, r.constraints))))
    return out


# ---------------------------------------------------------------------------
# exploration trees


@dataclass
class TreeNode:
    id: int
    state: SymbolicProcess
    parent: Optional[int] = None
    block: Optional[Block] = None
    trace: tuple = ()
    children: list = field(default_factory=list)
    dependency: Optional[frozenset] = None  # handles the block must depend on

    @property
    def visible_length(self) -> int:
        return sum(b.visible_length() for b in self.trace)


class ExplorationTree:
    """Every symbolic block trace of a process, as a tree rooted at the
    initial state.  Nodes are numbered in breadth-first order."""

    def __init__(self, root_state: SymbolicProcess):
        self.nodes = [TreeNode(0, root_state)]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def add(self, parent: TreeNode, block: Block, state: SymbolicProcess, dependency=None) -> TreeNode:
        n = TreeNode(len(self.nodes), state, parent.id, block, parent.trace + (block,), dependency=dependency)
        self.nodes.append(n)
        parent.children.append(n.id)
        return n

    def leaves(self) -> list:
        return [n for n in self.nodes if not n.children]

    def paths(self) -> list:
        """Block traces of the root-to-leaf paths."""
        return [n.trace for n in self.leaves() if n.parent is not None]

    def edges(self) -> list:
        return [(n.parent, n.id) for n in self.nodes if n.parent is not None]

    def producer(self, node: TreeNode, handle) -> Optional[int]:
        """Ancestor of ``node`` (inclusive) whose block output ``handle``."""
        cur = node
        while cur is not None and cur.block is not None:
            if handle in cur.block.outputs:
                return cur.id
            cur = self.nodes[cur.parent] if cur.parent is not None else None
        return None

    def dependency_edges(self) -> list:
        out = []
        for n in self.nodes:
            for w in sorted(n.dependency or (), key=lambda h: h.name):
                p = self.producer(self.nodes[n.parent], w)
                if p is not None:
                    out.append((n.id, p, w))
        return out

    def to_dot(self, name: str = "blocks") -> str:
        lines = ["digraph %s {" % name, '  node [shape=box, fontname="monospace"];']
        for n in self.nodes:
            label = "root" if n.block is None else _dot_escape(str(n.block).replace("[improper]", ""))
            attrs = 'label="%s"' % label
            if n.block is not None and n.block.improper:
                attrs += ", style=filled, fillcolor=gray80"
            lines.append("  n%d [%s];" % (n.id, attrs))
        for a, b in self.edges():
            lines.append("  n%d -> n%d;" % (a, b))
        for a, b, w in self.dependency_edges():
            lines.append('  n%d -> n%d [style=dashed, constraint=false, label="%s"];' % (a, b, _dot_escape(str(w))))
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def build_tree(sp: SymbolicProcess, successors) -> ExplorationTree:
    """Breadth-first tree of ``successors(node) -> [(block, state, dep)]``."""
    tree = ExplorationTree(sp)
    k = 0
    while k < len(tree.nodes):
        node = tree.nodes[k]
        for block, state, dep in successors(node):
            tree.add(node, block, state, dep)
        k += 1
    return tree


def explore_compressed_symbolic(sp: SymbolicProcess, sig: Signature = E_AENC, then_only: bool = False) -> ExplorationTree:
    """Full symbolic block tree (finite because processes are finite)."""
    return build_tree(sp, lambda n: [(b, s, None) for b, s in symbolic_compressed_step(n.state, sig, then_only)])
