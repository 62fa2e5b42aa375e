"""Bounded trace inclusion and equivalence under five semantics.

``concrete``
    interleaving semantics, inputs ranging over one recipe per class of
    recipes that agree on both frames;
``compressed``
    the same, but executing whole blocks;
``symbolic_compressed``
    symbolic blocks; recipe assignments are enumerated per block, one per
    class of recipes agreeing on the frames of *all* states involved;
``reduced2`` / ``reduced1``
    symbolic blocks restricted by dependency constraints, read with
    second-order / first-order satisfaction.

All modes explore breadth first and report every counterexample of the
shortest failing length (up to a cap), left side first.  "Equivalent"
always means "no counterexample within the recipe and trace bounds".

The symbolic driver works on interned term ids: frames, first-order
assignments and constraint checks never build term objects except when a
frame pair has to be tested for static equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

from .compressed_semantics import Block, FocusStage, symbolic_compressed_step
from .concrete_semantics import InAct, OutAct
from .process_calculus import EMPTY, ExtendedProcess, If, In, Out, free_vars, is_initial
from .reduced_semantics import ChannelOrder, dep
from .symbolic_core import Deduction, Dependency, Diseq, Eq, SymbolicProcess, initial_symbolic
from .term_algebra import (
    E_AENC,
    App,
    Frame,
    Handle,
    Interner,
    RecipeClasses,
    Signature,
    Var,
    natural_key,
    static_equiv,
)
from .verdict import Verdict, Witness

MODES = ("concrete", "compressed", "symbolic_compressed", "reduced2", "reduced1")
SYMBOLIC_MODES = ("symbolic_compressed", "reduced2", "reduced1")


class NotInitialError(ValueError):
    """Block-based semantics only apply to processes whose every role
    starts with an input."""


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError("unknown mode %r (expected one of %s)" % (mode, ", ".join(MODES)))


def _require_initial(A, mode):
    if mode != "concrete" and not is_initial(A):
        raise NotInitialError(
            "mode %s needs an initial process (every role must start with an input); "
            "use --mode concrete or the oracle instead" % mode
        )


def _default_order(A, B=None) -> ChannelOrder:
    chans = set(A.procs.channels())
    if B is not None:
        chans |= set(B.procs.channels())
    return ChannelOrder(tuple(sorted(chans, key=natural_key)))


def _hkey(h):
    return natural_key(h.name)


# ---------------------------------------------------------------------------
# public API


def check_inclusion(
    A: ExtendedProcess,
    B: ExtendedProcess,
    mode: str,
    depth: int = 3,
    visible_bound: Optional[int] = None,
    order: Optional[ChannelOrder] = None,
    sig: Signature = E_AENC,
    max_witnesses: int = 32,
    side: str = "left",
) -> Verdict:
    """Is every (bounded) trace of ``A`` matched by ``B``?"""
    _check_mode(mode)
    _require_initial(A, mode)
    _require_initial(B, mode)
    if mode == "concrete":
        return _ConcreteDriver(depth, visible_bound if visible_bound is not None else 8, sig, side, max_witnesses).run(A, B)
    if mode == "compressed":
        return _CompressedDriver(depth, visible_bound, sig, side, max_witnesses).run(A, B)
    if order is None:
        order = _default_order(A, B)
    return _SymbolicDriver(mode, depth, visible_bound, order, sig, side, max_witnesses).run(A, B)


def check_equivalence(
    A: ExtendedProcess,
    B: ExtendedProcess,
    mode: str,
    depth: int = 3,
    visible_bound: Optional[int] = None,
    order: Optional[ChannelOrder] = None,
    sig: Signature = E_AENC,
    max_witnesses: int = 32,
) -> Verdict:
    """Both inclusions; a witness names the side whose trace is unmatched."""
    left = check_inclusion(A, B, mode, depth, visible_bound, order, sig, max_witnesses, "left")
    if not left.holds:
        left.direction = "equivalence"
        return left
    right = check_inclusion(B, A, mode, depth, visible_bound, order, sig, max_witnesses, "right")
    right.direction = "equivalence"
    right.explored += left.explored
    if right.holds:
        right.result = "equivalent"
    return right


def count_traces(
    A: ExtendedProcess,
    mode: str,
    depth: int = 2,
    visible_bound: Optional[int] = None,
    order: Optional[ChannelOrder] = None,
    sig: Signature = E_AENC,
) -> int:
    """Number of traces of maximal visible length.

    Concrete and compressed modes count distinct concrete traces whose
    input recipes are class representatives; symbolic modes count symbolic
    traces whose constraint system (with the mode's dependency reading)
    has a solution within the recipe bound."""
    _check_mode(mode)
    _require_initial(A, mode)
    if mode == "concrete":
        return _ConcreteDriver(depth, visible_bound, sig, "left", 0).count(A)
    if mode == "compressed":
        return _CompressedDriver(depth, visible_bound, sig, "left", 0).count(A)
    if order is None:
        order = _default_order(A)
    return _SymbolicDriver(mode, depth, visible_bound, order, sig, "left", 0).count(A)


# ---------------------------------------------------------------------------
# shared machinery


def _finish(failures, mode, depth, bound, explored, cap, side):
    uniq, seen = [], set()
    for w in failures:
        if w not in seen:
            seen.add(w)
            uniq.append(w)
    direction = "inclusion" if side == "left" else "reverse-inclusion"
    if uniq:
        return Verdict("not-included", mode, depth, bound, witness=uniq[0], witnesses=uniq[:cap], explored=explored,
                       direction=direction)
    return Verdict("included", mode, depth, bound, explored=explored, direction=direction)


def _inputs(tr) -> tuple:
    return tuple(a.recipe for a in tr if type(a) is InAct)


def _shared_interner(sig: Signature) -> Interner:
    """One interner per signature, so that recipe classes and
    static-equivalence results are reused across checks and modes."""
    got = sig._cache.get("engine-interner")
    if got is None or len(got.table) > _INTERNER_LIMIT:
        got = sig._cache["engine-interner"] = Interner(sig)
    return got


_INTERNER_LIMIT = 5_000_000


class _Base:
    """Interned terms, compiled term evaluation and the caches every driver
    needs.  Environments map variables to interned normal forms."""

    def __init__(self, depth, sig):
        self.depth, self.sig = depth, sig
        self.I = _shared_interner(sig)
        self._compiled: dict = {}
        self._classes = self.I.caches.setdefault(("classes", depth), {})
        self._static = self.I.caches.setdefault(("static", depth), {})

    def compile(self, t):
        """``t`` as a function from an environment to the id of the normal
        form of its instance."""
        f = self._compiled.get(t)
        if f is not None:
            return f
        if type(t) is Var:
            def f(env, t=t):
                return env[t]
        elif type(t) is App and t.args and not t._closed:
            subs = tuple(self.compile(a) for a in t.args)

            def f(env, subs=subs, sym=t.sym, reduce=self.I.table.reduce):
                return reduce(sym, tuple([g(env) for g in subs]))
        else:
            i = self.I.intern_normal(t)

            def f(env, i=i):
                return i
        self._compiled[t] = f
        return f

    def compile_checks(self, tests, outputs):
        """Straight-line code for a block's guards and outputs.

        Returns ``(check, emit)``: ``check(env)`` evaluates the
        (dis)equations in order and stops at the first one that fails;
        ``emit(env)`` returns the ids of the output terms.  Shared
        subterms are computed once."""
        ns = {"R": self.I.table.reduce}
        consts: dict = {}

        def const(obj):
            name = consts.get(obj)
            if name is None:
                name = consts[obj] = "k%d" % len(consts)
                ns[name] = obj
            return name

        def gen(terms_groups, tail):
            lines, memo = [], {}

            def emit(t):
                got = memo.get(t)
                if got is not None:
                    return got
                if type(t) is Var:
                    code = "env[%s]" % const(t)
                elif type(t) is App and t.args and not t._closed:
                    args = [emit(a) for a in t.args]
                    code = "R(%s, (%s,))" % (const(t.sym), ", ".join(args))
                else:
                    return const(self.I.intern_normal(t))
                name = "v%d" % len(memo)
                lines.append("    %s = %s" % (name, code))
                memo[t] = name
                return name

            for group in terms_groups:
                tail(lines, group, emit)
            return lines

        def test_tail(lines, test, emit):
            is_eq, u, v = test
            a, b = emit(u), emit(v)
            lines.append("    if (%s %s %s): return False" % (a, "!=" if is_eq else "==", b))

        body = gen(tests, test_tail)
        src = "def check(env):\n" + "\n".join(body + ["    return True"]) + "\n"
        outs = []

        def out_tail(lines, t, emit):
            outs.append(emit(t))

        body = gen(outputs, out_tail)
        src += "def emit(env):\n" + "\n".join(body + ["    return (%s)" % "".join(o + ", " for o in outs)]) + "\n"
        exec(compile(src, "<block-checks>", "exec"), ns)
        return ns["check"], ns["emit"]

    def classes(self, dom: tuple, comps: tuple, ws=None, track=False):
        key = (dom, comps, ws if track else None)
        rc = self._classes.get(key)
        if rc is None:
            rc = RecipeClasses([], self.depth, self.sig, domain=list(dom), marked=ws or (), track_marks=track,
                               interner=self.I, frame_ids=comps)
            self._classes[key] = rc
        return rc

    def static(self, fa: dict, fb: dict):
        hs = tuple(sorted(fa, key=_hkey))
        key = (tuple(fa[h] for h in hs), tuple(fb[h] for h in hs))
        got = self._static.get(key)
        if got is None:
            ext = self.I.extern
            got = static_equiv(Frame((h, ext(fa[h])) for h in hs), Frame((h, ext(fb[h])) for h in hs), self.depth, self.sig)
            self._static[key] = got
        return got

    def root_frame(self, A) -> dict:
        return {h: self.I.intern_normal(t) for h, t in A.frame.items()}


class _St:
    """Ground state of the environment machine: open processes, one
    environment per channel, and the frame as interned ids.  Conditionals
    are always resolved (they are deterministic and invisible)."""

    __slots__ = ("procs", "envs", "frame", "_key")

    def __init__(self, procs, envs, frame):
        self.procs, self.envs, self.frame = procs, envs, frame
        self._key = None


class _Machine(_Base):
    def __init__(self, depth, sig):
        super().__init__(depth, sig)
        self._fv: dict = {}

    def fv(self, p):
        got = self._fv.get(p)
        if got is None:
            got = self._fv[p] = frozenset(free_vars(p))
        return got

    def key(self, st: _St):
        if st._key is None:
            envs = tuple(
                (c, tuple(sorted((v.name, i) for v, i in st.envs.get(c, {}).items() if v in self.fv(p))))
                for c, p in st.procs
            )
            st._key = (st.procs, envs, tuple(sorted((h.name, i) for h, i in st.frame.items())))
        return st._key

    def _settle(self, procs, envs, chan):
        p = procs.get(chan)
        if type(p) is not If:
            return procs
        env = envs.get(chan, {})
        while type(p) is If:
            p = p.then if self.compile(p.u)(env) == self.compile(p.v)(env) else p.else_
        return procs.replace(chan, p)

    def start(self, A) -> _St:
        procs, envs = A.procs, {}
        for c in procs.channels():
            procs = self._settle(procs, envs, c)
        return _St(procs, envs, self.root_frame(A))

    def head(self, st: _St, chan):
        return st.procs.get(chan)

    def input(self, st: _St, chan, vid) -> Optional[_St]:
        p = st.procs.get(chan)
        if type(p) is not In:
            return None
        envs = dict(st.envs)
        env = dict(envs.get(chan, {}))
        env[p.var] = vid
        envs[chan] = env
        procs = self._settle(st.procs.replace(chan, p.cont), envs, chan)
        return _St(procs, envs, st.frame)

    def output(self, st: _St, chan):
        p = st.procs.get(chan)
        if type(p) is not Out:
            return None, None
        w = Handle("w#%d" % len(st.frame))
        frame = dict(st.frame)
        frame[w] = self.compile(p.term)(st.envs.get(chan, {}))
        return w, _St(self._settle(st.procs.replace(chan, p.cont), st.envs, chan), st.envs, frame)

    def pool(self, frames: Sequence[dict]):
        dom = tuple(sorted(frames[0], key=_hkey))
        comps = tuple(tuple(f[h] for h in dom) for f in frames)
        rc = self.classes(dom, comps)
        return rc, [rc.vector_ids(i) for i in range(len(rc))]

    def blocks(self, st: _St, chan, vecs, comp, fixed=None):
        """Focused executions of the role on ``chan``: ``(class indices,
        outputs, state, proper)``; inputs take the values of ``vecs`` in
        component ``comp`` (only the indices in ``fixed`` if given)."""
        out = []

        def go(st, stage, idxs, outs):
            p = st.procs.get(chan)
            if type(p) is In:
                if stage is FocusStage.O_STAR:
                    if fixed is None or len(idxs) == len(fixed):
                        out.append((tuple(idxs), tuple(outs), st, True))
                    return
                if fixed is not None:
                    if len(idxs) < len(fixed):
                        i = fixed[len(idxs)]
                        go(self.input(st, chan, vecs[i][comp]), FocusStage.I_STAR, idxs + [i], outs)
                    return
                for i in range(len(vecs)):
                    go(self.input(st, chan, vecs[i][comp]), FocusStage.I_STAR, idxs + [i], outs)
            elif type(p) is Out:
                if stage is FocusStage.I_PLUS:
                    return
                w, st2 = self.output(st, chan)
                go(st2, FocusStage.O_STAR, idxs, outs + [w])
            elif p is None:
                if fixed is not None and len(idxs) != len(fixed):
                    return
                if stage is FocusStage.O_STAR:
                    out.append((tuple(idxs), tuple(outs), st, True))
                elif stage is FocusStage.I_STAR:
                    out.append((tuple(idxs), (), _St(EMPTY, {}, st.frame), False))

        go(st, FocusStage.I_PLUS, [], [])
        return out

    def joint_blocks(self, sa: _St, sb: _St, chan, vecs):
        """Blocks of ``sa`` on ``chan`` (inputs from component 0) together
        with the state reached by ``sb`` on the same block (component 1), or
        ``None`` when ``sb`` cannot perform it.  Equivalent to calling
        :meth:`blocks` on ``sb`` once per block of ``sa``, in one walk."""
        out = []

        def leaf(sb, stage):
            if sb is None:
                return None
            q = sb.procs.get(chan)
            if stage is FocusStage.O_STAR:
                return sb if (type(q) is In or q is None) else None
            return _St(EMPTY, {}, sb.frame) if q is None else None

        def go(sa, sb, stage, idxs, outs):
            p = sa.procs.get(chan)
            q = None if sb is None else sb.procs.get(chan)
            if type(p) is In:
                if stage is FocusStage.O_STAR:
                    out.append((tuple(idxs), tuple(outs), sa, True, leaf(sb, stage)))
                    return
                follow = sb is not None and type(q) is In
                for i in range(len(vecs)):
                    v = vecs[i]
                    go(self.input(sa, chan, v[0]), self.input(sb, chan, v[1]) if follow else None,
                       FocusStage.I_STAR, idxs + [i], outs)
            elif type(p) is Out:
                if stage is FocusStage.I_PLUS:
                    return
                w, sa2 = self.output(sa, chan)
                sb2 = self.output(sb, chan)[1] if sb is not None and type(q) is Out else None
                go(sa2, sb2, FocusStage.O_STAR, idxs, outs + [w])
            elif p is None:
                if stage is FocusStage.O_STAR:
                    out.append((tuple(idxs), tuple(outs), sa, True, leaf(sb, stage)))
                elif stage is FocusStage.I_STAR:
                    out.append((tuple(idxs), (), _St(EMPTY, {}, sa.frame), False, leaf(sb, stage)))

        go(sa, sb, FocusStage.I_PLUS, [], [])
        return out


# ---------------------------------------------------------------------------
# concrete interleaving semantics


class _ConcreteDriver(_Machine):
    def __init__(self, depth, bound, sig, side, cap):
        super().__init__(depth, sig)
        self.bound, self.side, self.cap = bound, side, cap

    def run(self, A, B) -> Verdict:
        sa, sb = self.start(A), self.start(B)
        v = self.static(sa.frame, sb.frame)
        if not v:
            return _finish([Witness((), self.side, "frames-distinguished", test=(v.M, v.N))], "concrete", self.depth,
                           self.bound, 0, self.cap, self.side)
        layer = [(sa, sb, ())]
        seen = {(self.key(sa), self.key(sb))}
        explored = 0
        for _ in range(self.bound):
            failures, nxt = [], []
            for sa, sb, tr in layer:
                steps = []
                rc = vecs = None
                for chan, p in sa.procs:
                    if type(p) is Out:
                        w, a2 = self.output(sa, chan)
                        _, b2 = self.output(sb, chan)
                        steps.append((OutAct(chan, w), a2, b2))
                    elif type(p) is In:
                        if rc is None:
                            rc, vecs = self.pool([sa.frame, sb.frame])
                        for i, vec in enumerate(vecs):
                            steps.append((InAct(chan, rc.recipe(i)), self.input(sa, chan, vec[0]), self.input(sb, chan, vec[1])))
                for act, a2, b2 in steps:
                    explored += 1
                    t = tr + (act,)
                    if b2 is None:
                        failures.append(Witness(t, self.side, "trace-unmatched", recipes=_inputs(t)))
                        continue
                    v = self.static(a2.frame, b2.frame)
                    if not v:
                        failures.append(Witness(t, self.side, "frames-distinguished", recipes=_inputs(t), test=(v.M, v.N)))
                        continue
                    k = (self.key(a2), self.key(b2))
                    if k not in seen:
                        seen.add(k)
                        nxt.append((a2, b2, t))
            if failures or not nxt:
                return _finish(failures, "concrete", self.depth, self.bound, explored, self.cap, self.side)
            layer = nxt
        return _finish([], "concrete", self.depth, self.bound, explored, self.cap, self.side)

    def count(self, A) -> int:
        """Traces of maximal length, by dynamic programming over states
        (every trace leads to exactly one state)."""
        s = self.start(A)
        layer = {self.key(s): (s, 1)}
        best, length = 1, 0
        while layer and (self.bound is None or length < self.bound):
            nxt: dict = {}
            for s, n in layer.values():
                succs = []
                for chan, p in s.procs:
                    if type(p) is Out:
                        succs.append(self.output(s, chan)[1])
                    elif type(p) is In:
                        _, vecs = self.pool([s.frame])
                        succs.extend(self.input(s, chan, vec[0]) for vec in vecs)
                for t in succs:
                    k = self.key(t)
                    nxt[k] = (t, nxt[k][1] + n if k in nxt else n)
            length += 1
            if nxt:
                best = sum(n for _, n in nxt.values())
            layer = nxt
        return best


# ---------------------------------------------------------------------------
# compressed (block) semantics, concrete


class _CompressedDriver(_Machine):
    def __init__(self, depth, bound, sig, side, cap):
        super().__init__(depth, sig)
        self.bound, self.side, self.cap = bound, side, cap

    def run(self, A, B) -> Verdict:
        sa, sb = self.start(A), self.start(B)
        v = self.static(sa.frame, sb.frame)
        if not v:
            return _finish([Witness((), self.side, "frames-distinguished", test=(v.M, v.N))], "compressed", self.depth,
                           self.bound, 0, self.cap, self.side)
        layer = [(sa, sb, (), 0)]
        seen = {(self.key(sa), self.key(sb))}
        explored = 0
        while layer:
            failures, nxt = [], []
            for sa, sb, tr, vis in layer:
                rc = vecs = None
                for chan, p in sa.procs:
                    if type(p) is not In:
                        continue
                    if rc is None:
                        rc, vecs = self.pool([sa.frame, sb.frame])
                    for idxs, outs, a2, proper, b2 in self.joint_blocks(sa, sb, chan, vecs):
                        L = vis + len(idxs) + len(outs)
                        if self.bound is not None and L > self.bound:
                            continue
                        explored += 1
                        if b2 is None:
                            block = Block(chan, tuple(rc.recipe(i) for i in idxs), outs)
                            failures.append(Witness(tr + (block,), self.side, "trace-unmatched", recipes=block.inputs))
                            continue
                        if not proper:
                            # inputs leave the frame unchanged and the state is
                            # terminal: nothing more to check or explore
                            continue
                        block = Block(chan, tuple(rc.recipe(i) for i in idxs), outs)
                        t = tr + (block,)
                        v = self.static(a2.frame, b2.frame)
                        if not v:
                            failures.append(Witness(t, self.side, "frames-distinguished", recipes=block.inputs, test=(v.M, v.N)))
                            continue
                        k = (self.key(a2), self.key(b2))
                        if k not in seen:
                            seen.add(k)
                            nxt.append((a2, b2, t, L))
            if failures or not nxt:
                return _finish(failures, "compressed", self.depth, self.bound, explored, self.cap, self.side)
            layer = nxt
        return _finish([], "compressed", self.depth, self.bound, explored, self.cap, self.side)

    def count(self, A) -> int:
        s = self.start(A)
        layer = {self.key(s): (s, 1, 0)}
        by_len = {0: 1}
        while layer:
            nxt: dict = {}
            for s, n, vis in layer.values():
                vecs = None
                for chan, p in s.procs:
                    if type(p) is not In:
                        continue
                    if vecs is None:
                        _, vecs = self.pool([s.frame])
                    for idxs, outs, t, _ in self.blocks(s, chan, vecs, 0):
                        L = vis + len(idxs) + len(outs)
                        if self.bound is not None and L > self.bound:
                            continue
                        k = self.key(t)
                        nxt[k] = (t, nxt[k][1] + n if k in nxt else n, L)
            for _, n, L in nxt.values():
                by_len[L] = by_len.get(L, 0) + n
            layer = nxt
        return by_len[max(by_len)]


# ---------------------------------------------------------------------------
# symbolic block semantics


class _Succ:
    """One symbolic block successor with its checks compiled."""

    __slots__ = ("block", "node", "ws", "inputs", "xs", "check", "emit", "has_tests", "has_outputs", "skeleton", "avail")

    def __init__(self, block, node, ws, inputs, checks, dom):
        self.block = block
        self.node = node
        self.ws = ws  # dependency handles (frozenset) or None
        self.inputs = inputs  # ((X, x), ...)
        self.xs = tuple(x for _, x in inputs)
        self.has_tests, self.has_outputs, self.check, self.emit = checks
        self.skeleton = block.skeleton
        # frame positions usable without the dependency handles
        self.avail = tuple(k for k, h in enumerate(dom) if not ws or h not in ws)


class _Node:
    __slots__ = ("state", "trace", "succ", "fvl", "uid", "length", "dom")

    def __init__(self, state: SymbolicProcess, trace: tuple, uid: int, length: int, dom: tuple):
        self.state = state
        self.trace = trace
        self.succ = None
        self.fvl = tuple(sorted(state.procs.free_vars(), key=lambda v: natural_key(v.name)))
        self.uid = uid
        self.length = length
        self.dom = dom  # handles of the frame, in frame-tuple order


@dataclass
class _Config:
    node: _Node
    lam: dict  # only the variables still free in the processes
    frame: tuple  # interned values in node.dom order
    theta: tuple
    bset: tuple  # ((node, lam, frame), ...)


class _SymbolicDriver(_Base):
    """Breadth-first search over the symbolic block tree of the left
    process.  A configuration is a tree node, the values of the live
    variables, the instantiated frame and the matching states of the right
    process.  Recipe assignments are enumerated block by block, one per
    class of recipes that agree on every frame involved."""

    def __init__(self, mode, depth, bound, order, sig, side, cap):
        super().__init__(depth, sig)
        self.mode, self.bound, self.order = mode, bound, order
        self.side, self.cap = side, cap
        self._dedsets = self.I.caches.setdefault(("dedsets", depth), {})
        self._uid = 0

    def node(self, state, trace, length, dom) -> _Node:
        self._uid += 1
        return _Node(state, trace, self._uid, length, dom)

    def successors(self, n: _Node) -> list:
        if n.succ is not None:
            return n.succ
        out = []
        base = len(n.state.system.constraints)
        for block, st in symbolic_compressed_step(n.state, self.sig):
            ws = None
            if self.mode != "symbolic_compressed":
                ws = dep(n.trace, block.chan, self.order) or None
                if ws:
                    st = SymbolicProcess(st.procs, st.system.add(Dependency(tuple(block.inputs), ws)))
            length = n.length + block.visible_length()
            if self.bound is not None and length > self.bound:
                continue
            new = st.system.constraints[base:]
            inputs = tuple((c.X, c.x) for c in new if type(c) is Deduction)
            tests = tuple((type(c) is Eq, c.u, c.v) for c in new if type(c) in (Eq, Diseq))
            outputs = tuple(st.frame[w] for w in block.outputs)
            checks = (bool(tests), bool(outputs)) + self.compile_checks(tests, outputs)
            child = self.node(st, n.trace + (block,), length, n.dom + tuple(block.outputs))
            out.append(_Succ(block, child, ws, inputs, checks, n.dom))
        n.succ = out
        return out

    def dedset(self, dom: tuple, ids: tuple) -> frozenset:
        key = (dom, ids)
        got = self._dedsets.get(key)
        if got is None:
            rc = RecipeClasses([], self.depth, self.sig, domain=list(dom), interner=self.I, frame_ids=[ids])
            got = frozenset(rc.vector_ids(i)[0] for i in range(len(rc)))
            self._dedsets[key] = got
        return got

    def without_deps(self, succ: _Succ, dom: tuple, frame: tuple) -> frozenset:
        """Values deducible from ``frame`` without the block's dependency
        handles; an input outside this set satisfies the first-order
        reading of the dependency constraint."""
        avail = succ.avail
        return self.dedset(tuple(dom[k] for k in avail), tuple(frame[k] for k in avail))

    def static_t(self, dom, fa: tuple, fb: tuple):
        key = (fa, fb)
        got = self._static.get(key)
        if got is None:
            ext = self.I.extern
            got = static_equiv(Frame(zip(dom, map(ext, fa))), Frame(zip(dom, map(ext, fb))), self.depth, self.sig)
            self._static[key] = got
        return got

    def theta_for(self, rc, succ, combo):
        reduced2 = self.mode == "reduced2" and succ.ws
        out, used_mark = [], False
        for (X, _), i in zip(succ.inputs, combo):
            if reduced2 and not used_mark and rc.is_marked(i):
                out.append((X, rc.marked_recipe(i)))
                used_mark = True
            else:
                out.append((X, rc.recipe(i)))
        return tuple(out)

    # -- one block from one configuration --------------------------------
    def expand(self, cfg: _Config, succ: _Succ, with_b: bool):
        """Yield ``(combo, rc, lam, frame, bset, failure)`` for every class
        tuple accepted on the left.  ``lam`` is live only until the next
        item is requested."""
        dom = cfg.node.dom
        bframes = []
        if with_b:
            for _, _, bf in cfg.bset:
                if bf not in bframes:
                    bframes.append(bf)
        track = self.mode == "reduced2" and bool(succ.ws)
        rc = self.classes(dom, (cfg.frame,) + tuple(bframes), succ.ws, track)
        vecs = rc._vecs
        n = len(vecs)
        k = len(succ.inputs)
        xs = succ.xs
        ded = self.without_deps(succ, dom, cfg.frame) if self.mode == "reduced1" and succ.ws else None
        lam = dict(cfg.lam)
        check, emit = succ.check, succ.emit
        has_tests, has_outputs = succ.has_tests, succ.has_outputs
        bentries = []
        if with_b:
            for bnode, blam, bf in cfg.bset:
                cands = []
                for bs in self.successors(bnode):
                    if bs.skeleton == succ.skeleton:
                        bded = self.without_deps(bs, dom, bf) if self.mode == "reduced1" and bs.ws else None
                        cands.append((bs, bded))
                bentries.append((1 + bframes.index(bf), dict(blam), bf, cands))
        combos = ((i,) for i in range(n)) if k == 1 else product(range(n), repeat=k)
        for combo in combos:
            if track and not any(rc.is_marked(i) for i in combo):
                continue
            for x, i in zip(xs, combo):
                lam[x] = vecs[i][0]
            if has_tests and not check(lam):
                continue
            if ded is not None and all(lam[x] in ded for x in xs):
                continue
            frame = cfg.frame + emit(lam) if has_outputs else cfg.frame
            if not with_b:
                yield combo, rc, lam, frame, (), None
                continue
            bset = []
            test = None
            for comp, blam, bf, cands in bentries:
                for bs, bded in cands:
                    for x, i in zip(bs.xs, combo):
                        blam[x] = vecs[i][comp]
                    if bs.has_tests and not bs.check(blam):
                        continue
                    if bded is not None and all(blam[x] in bded for x in bs.xs):
                        continue
                    bframe = bf + bs.emit(blam) if bs.has_outputs else bf
                    v = self.static_t(bs.node.dom, frame, bframe)
                    if not v:
                        if test is None:
                            test = (v.M, v.N)
                        continue
                    bset.append((bs.node, {x: blam[x] for x in bs.node.fvl}, bframe))
            if bset:
                yield combo, rc, lam, frame, tuple(bset), None
            elif test is not None:
                yield combo, rc, lam, frame, (), ("frames-distinguished", test)
            else:
                yield combo, rc, lam, frame, (), ("solution-unmatched", None)

    # -- drivers -----------------------------------------------------------
    @staticmethod
    def _key(node, lam, frame, bset):
        bk = frozenset((bn.uid, tuple(bl[x] for x in bn.fvl), bf) for bn, bl, bf in bset)
        return (node.uid, tuple(lam[x] for x in node.fvl), frame, bk)

    def _root(self, A):
        dom = tuple(sorted(A.frame.domain(), key=_hkey))
        frame = self.root_frame(A)
        return self.node(initial_symbolic(A), (), 0, dom), tuple(frame[h] for h in dom)

    def run(self, A, B) -> Verdict:
        na, fa = self._root(A)
        nb, fb = self._root(B)
        explored = 0
        if set(na.dom) != set(nb.dom):
            w = Witness((), self.side, "frames-distinguished")
            return _finish([w], self.mode, self.depth, self.bound, 0, self.cap, self.side)
        v = self.static_t(na.dom, fa, fb)
        if not v:
            w = Witness((), self.side, "frames-distinguished", test=(v.M, v.N))
            return _finish([w], self.mode, self.depth, self.bound, 0, self.cap, self.side)
        layer = [_Config(na, {}, fa, (), ((nb, {}, fb),))]
        while layer:
            failures = []
            nxt: dict = {}
            for cfg in layer:
                for succ in self.successors(cfg.node):
                    child = succ.node
                    for combo, rc, lam, frame, bset, failure in self.expand(cfg, succ, True):
                        explored += 1
                        if failure is not None:
                            reason, test = failure
                            theta = self.theta_for(rc, succ, combo)
                            full = cfg.theta + theta
                            failures.append(Witness(child.trace, self.side, reason, recipes=tuple(M for _, M in full),
                                                    theta=full, test=test))
                            continue
                        key = self._key(child, lam, frame, bset)
                        if key not in nxt:
                            nxt[key] = _Config(child, {x: lam[x] for x in child.fvl}, frame,
                                               cfg.theta + self.theta_for(rc, succ, combo), bset)
            if failures:
                return _finish(failures, self.mode, self.depth, self.bound, explored, self.cap, self.side)
            layer = list(nxt.values())
        return _finish([], self.mode, self.depth, self.bound, explored, self.cap, self.side)

    def count(self, A) -> int:
        na, fa = self._root(A)
        layer = [_Config(na, {}, fa, (), ())]
        live = {0: {na.uid}}
        while layer:
            nxt: dict = {}
            for cfg in layer:
                for succ in self.successors(cfg.node):
                    child = succ.node
                    for combo, rc, lam, frame, _, _ in self.expand(cfg, succ, False):
                        key = self._key(child, lam, frame, ())
                        if key not in nxt:
                            nxt[key] = _Config(child, {x: lam[x] for x in child.fvl}, frame, (), ())
                        live.setdefault(child.length, set()).add(child.uid)
            layer = list(nxt.values())
        return len(live[max(live)])

    def solutions(self, A):
        """Every accepted ``(symbolic trace, theta)`` pair, one theta per
        class tuple, for cross-checking the reduction."""
        na, fa = self._root(A)
        layer = [_Config(na, {}, fa, (), ())]
        out = []
        while layer:
            nxt = []
            for cfg in layer:
                for succ in self.successors(cfg.node):
                    child = succ.node
                    for combo, rc, lam, frame, _, _ in self.expand(cfg, succ, False):
                        full = cfg.theta + self.theta_for(rc, succ, combo)
                        out.append((child.trace, dict(full)))
                        nxt.append(_Config(child, {x: lam[x] for x in child.fvl}, frame, full, ()))
            layer = nxt
        return out


def explored_solutions(A, mode, depth=2, order=None, sig: Signature = E_AENC) -> list:
    """All ``(symbolic block trace, theta)`` pairs a symbolic mode accepts."""
    if mode not in SYMBOLIC_MODES:
        raise ValueError("explored_solutions needs a symbolic mode")
    _require_initial(A, mode)
    if order is None:
        order = _default_order(A)
    return _SymbolicDriver(mode, depth, None, order, sig, "left", 0).solutions(A)


__all__ = [
    "MODES",
    "SYMBOLIC_MODES",
    "NotInitialError",
    "Verdict",
    "Witness",
    "check_equivalence",
    "check_inclusion",
    "count_traces",
    "explored_solutions",
]
