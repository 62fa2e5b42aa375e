"""Ground-truth labelled semantics and a brute-force trace-equivalence oracle.

States are :class:`~porveq.process_calculus.ExtendedProcess` values with a
closed simple process.  Visible actions are inputs ``in(c, M)`` with ``M`` a
recipe and outputs ``out(c, w)`` with ``w`` a fresh handle; conditionals
reduce silently.

The oracle deliberately avoids the optimised machinery: it enumerates
recipes with the naive generator, evaluates them one by one and follows
sets of states exactly as the definitions describe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .process_calculus import ExtendedProcess, If, In, Out
from .term_algebra import (
    E_AENC,
    Handle,
    Signature,
    Term,
    UnknownHandleError,
    apply_recipe,
    eq_mod_E,
    handles,
    iter_recipes,
    normalize,
    static_equiv,
)
from .verdict import Verdict, Witness


@dataclass(frozen=True)
class InAct:
    chan: str
    recipe: Term

    def __str__(self):
        return "in(%s, %s)" % (self.chan, self.recipe)


@dataclass(frozen=True)
class OutAct:
    chan: str
    handle: Handle

    def __str__(self):
        return "out(%s, %s)" % (self.chan, self.handle)


@dataclass(frozen=True)
class _Tau:
    def __str__(self):
        return "tau"


TAU = _Tau()


def fresh_handle(frame) -> Handle:
    """Generated handles are numbered by frame position: ``w#k``."""
    return Handle("w#%d" % len(frame))


def step(A: ExtendedProcess, act, sig: Signature = E_AENC) -> set:
    """All successors of ``A`` by one application of a rule labelled ``act``."""
    out = set()
    if act == TAU:
        for chan, p in A.procs:
            if type(p) is If:
                nxt = p.then if eq_mod_E(p.u, p.v, sig) else p.else_
                out.add(ExtendedProcess(A.procs.replace(chan, nxt), A.frame))
        return out
    if isinstance(act, InAct):
        p = A.procs.get(act.chan)
        if type(p) is not In:
            return out
        try:
            u = apply_recipe(act.recipe, A.frame, sig)
        except UnknownHandleError:
            return out
        cont = _bind(p, u)
        out.add(ExtendedProcess(A.procs.replace(act.chan, cont), A.frame))
        return out
    if isinstance(act, OutAct):
        p = A.procs.get(act.chan)
        if type(p) is not Out or act.handle in A.frame:
            return out
        out.add(ExtendedProcess(A.procs.replace(act.chan, p.cont), A.frame.extend(act.handle, normalize(p.term, sig))))
        return out
    raise TypeError("unknown action %r" % (act,))


def _bind(p: In, u: Term):
    from .process_calculus import subst_proc

    return subst_proc(p.cont, {p.var: u})


def tau_closure(states: Iterable[ExtendedProcess], sig: Signature = E_AENC) -> frozenset:
    seen = set(states)
    todo = list(seen)
    while todo:
        s = todo.pop()
        for t in step(s, TAU, sig):
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return frozenset(seen)


def run(A: ExtendedProcess, tr: Iterable, sig: Signature = E_AENC) -> frozenset:
    """All ``B`` with ``A =tr=> B`` (silent steps interleaved freely)."""
    cur = tau_closure([A], sig)
    for act in tr:
        nxt = set()
        for s in cur:
            nxt |= step(s, act, sig)
        if not nxt:
            return frozenset()
        cur = tau_closure(nxt, sig)
    return cur


def independent_actions(a, b) -> bool:
    """Independence of visible actions (symmetric)."""
    if a.chan == b.chan:
        return False
    if isinstance(a, OutAct) and isinstance(b, OutAct):
        return True
    if isinstance(a, InAct) and isinstance(b, InAct):
        return True
    if isinstance(a, InAct):
        a, b = b, a
    return a.handle not in handles(b.recipe)


def enabled_actions(states: Iterable[ExtendedProcess]):
    """Channels with a pending input, and channels with a pending output."""
    ins, outs = set(), set()
    for s in states:
        for chan, p in s.procs:
            if type(p) is In:
                ins.add(chan)
            elif type(p) is Out:
                outs.add(chan)
    return ins, outs


def frame_of(states: frozenset):
    """Frames of a determinate state set coincide; return that frame."""
    for s in states:
        return s.frame
    return None


# ---------------------------------------------------------------------------
# oracle


class _RecipeGroups:
    """Naively enumerated recipes grouped by their values in two frames;
    the first (smallest) recipe of each group stands for the group."""

    def __init__(self, depth: int, sig: Signature):
        self.depth = depth
        self.sig = sig
        self.cache: dict = {}

    def reps(self, fa, fb) -> list:
        key = (fa, fb)
        got = self.cache.get(key)
        if got is None:
            dom = fa.domain() if fa is not None else fb.domain()
            seen = set()
            got = []
            for M in iter_recipes(sorted(dom, key=lambda h: h.name), self.depth, self.sig):
                va = apply_recipe(M, fa, self.sig) if fa is not None else None
                vb = apply_recipe(M, fb, self.sig) if fb is not None else None
                if (va, vb) not in seen:
                    seen.add((va, vb))
                    got.append(M)
            self.cache[key] = got
        return got


def _inputs(tr) -> tuple:
    return tuple(a.recipe for a in tr if isinstance(a, InAct))


def oracle_trace_equiv(
    A: ExtendedProcess,
    B: ExtendedProcess,
    visible_bound: int,
    recipe_depth: int,
    sig: Signature = E_AENC,
    max_witnesses: int = 32,
) -> Verdict:
    """Exhaustive bounded check of trace equivalence between closed processes."""
    groups = _RecipeGroups(recipe_depth, sig)
    layer = {(tau_closure([A], sig), tau_closure([B], sig)): ()}
    seen = set(layer)
    explored = 0
    for length in range(visible_bound + 1):
        failures = []
        for (SA, SB), tr in layer.items():
            explored += 1
            fa, fb = frame_of(SA), frame_of(SB)
            if fa is not None and fb is not None:
                v = static_equiv(fa, fb, recipe_depth, sig)
                if not v:
                    failures.append(Witness(tr, "left", "frames-distinguished", recipes=_inputs(tr), test=(v.M, v.N)))
        if failures:
            return _fail(failures, recipe_depth, visible_bound, explored, max_witnesses)
        if length == visible_bound:
            break
        nxt: dict = {}
        for (SA, SB), tr in layer.items():
            fa, fb = frame_of(SA), frame_of(SB)
            ia, oa = enabled_actions(SA)
            ib, ob = enabled_actions(SB)
            acts = []
            for chan in sorted(oa | ob):
                acts.append(OutAct(chan, fresh_handle(fa if fa is not None else fb)))
            for chan in sorted(ia | ib):
                for M in groups.reps(fa if chan in ia else None, fb if chan in ib else None):
                    acts.append(InAct(chan, M))
            for act in acts:
                ta = _after(SA, act, sig)
                tb = _after(SB, act, sig)
                if ta and not tb:
                    failures.append(Witness(tr + (act,), "left", "trace-unmatched", recipes=_inputs(tr + (act,))))
                elif tb and not ta:
                    failures.append(Witness(tr + (act,), "right", "trace-unmatched", recipes=_inputs(tr + (act,))))
                elif ta and tb:
                    key = (ta, tb)
                    if key not in seen:
                        seen.add(key)
                        nxt[key] = tr + (act,)
        if failures:
            return _fail(failures, recipe_depth, visible_bound, explored, max_witnesses)
        if not nxt:
            break
        layer = nxt
    return Verdict("equivalent", "concrete", recipe_depth, visible_bound, explored=explored, direction="oracle")


def _after(S, act, sig):
    nxt = set()
    for s in S:
        nxt |= step(s, act, sig)
    return tau_closure(nxt, sig) if nxt else frozenset()


def _fail(failures, depth, bound, explored, cap):
    uniq = []
    seen = set()
    # report left-side failures (A not included in B) before right-side ones
    for w in sorted(failures, key=lambda w: w.side != "left"):
        if w not in seen:
            seen.add(w)
            uniq.append(w)
    return Verdict(
        "not-included", "concrete", depth, bound, witness=uniq[0], witnesses=uniq[:cap], explored=explored, direction="oracle"
    )


def replay_witness(A, B, w: Witness, recipe_depth: int, sig: Signature = E_AENC) -> bool:
    """Check that a concrete witness really separates ``A`` and ``B``.

    Block traces are flattened to their actions first."""
    acts = []
    for item in w.trace:
        acts.extend(getattr(item, "actions", lambda: [item])())
    ra = run(A, acts, sig)
    rb = run(B, acts, sig)
    if w.reason in ("trace-unmatched", "solution-unmatched"):
        if bool(ra) != bool(rb):
            return True
        # a block that ends improperly on one side but outputs on the other:
        # the shared prefix runs on both, only one can continue with an output
        return bool(ra) and enabled_actions(ra)[1] != enabled_actions(rb)[1]
    if not ra or not rb:
        return False
    return not static_equiv(frame_of(ra), frame_of(rb), recipe_depth, sig)
