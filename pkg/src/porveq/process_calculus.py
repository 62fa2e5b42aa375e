"""Process syntax, simple/extended processes, and the ``.spec`` file format.

A *basic process* is a sequential role talking on a single channel; a
*simple process* is a multiset of basic processes on pairwise distinct
channels, represented here as a channel-sorted tuple.  An *extended*
process pairs a simple process with the attacker's frame.

Spec files
----------
Line comments start with ``//``.  Items::

    fun aenc/2          fun adec/2 destructor        const ok
    rewrite adec(aenc(x, pk(y)), y) -> x
    names ska, skb, n_a
    frame phi0 { w0 -> pk(ska), w1 -> pk(skb) }
    process Q(sk, pka) on c_B = in(c_B, y). if snd(adec(y, sk)) = pka then out(c_B, ok). 0 else 0
    order c_A < c_B
    query equiv Q_vs_Q2: { Q(skb, pk(ska)) } phi0 { Q(skb, pk(ska')) } phi0
    query count { P1, P2 } phi0

When no ``fun``/``const``/``rewrite`` item is present the asymmetric
encryption theory (``aenc pk pair adec fst snd ok start``) is assumed.

Parameterised families use a small textual preprocessor::

    @define n 2
    @for i in 1..$n sep "," { P$i }

``$name`` (or ``${name}`` when followed by word characters) is replaced
by the value of a definition or loop variable;
``-D n=3`` on the command line overrides ``@define``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .term_algebra import (
    App,
    CONSTANT,
    CONSTRUCTOR,
    DESTRUCTOR,
    E_AENC,
    Frame,
    Handle,
    Name,
    Signature,
    Term,
    Var,
    natural_key,
    normalize,
    substitute,
    variables,
)


class SpecError(Exception):
    """Malformed or ill-formed spec; carries a source position when known."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.message = message
        self.line = line
        self.col = col
        where = "" if line is None else "line %d, col %d: " % (line, col or 0)
        super().__init__(where + message)


# ---------------------------------------------------------------------------
# process AST


class Proc:
    __slots__ = ("_hash",)

    def __repr__(self):
        return show_proc(self)

    def __str__(self):
        return show_proc(self)


class _Null(Proc):
    __slots__ = ()

    def __init__(self):
        self._hash = hash("0")

    def __eq__(self, other):
        return type(other) is _Null

    def __hash__(self):
        return self._hash


class _Dead(Proc):
    """Marker for a role killed by an improper block end."""

    __slots__ = ()

    def __init__(self):
        self._hash = hash("_|_")

    def __eq__(self, other):
        return type(other) is _Dead

    def __hash__(self):
        return self._hash


NULL = _Null()
DEAD = _Dead()


class If(Proc):
    __slots__ = ("u", "v", "then", "else_")

    def __init__(self, u: Term, v: Term, then: Proc, else_: Proc = NULL):
        self.u, self.v, self.then, self.else_ = u, v, then, else_
        self._hash = hash(("if", u, v, then, else_))

    def __eq__(self, other):
        return (
            type(other) is If
            and other._hash == self._hash
            and other.u == self.u
            and other.v == self.v
            and other.then == self.then
            and other.else_ == self.else_
        )

    def __hash__(self):
        return self._hash


class In(Proc):
    __slots__ = ("chan", "var", "cont")

    def __init__(self, chan: str, var: Var, cont: Proc = NULL):
        self.chan, self.var, self.cont = chan, var, cont
        self._hash = hash(("in", chan, var, cont))

    def __eq__(self, other):
        return (
            type(other) is In
            and other._hash == self._hash
            and other.chan == self.chan
            and other.var == self.var
            and other.cont == self.cont
        )

    def __hash__(self):
        return self._hash


class Out(Proc):
    __slots__ = ("chan", "term", "cont")

    def __init__(self, chan: str, term: Term, cont: Proc = NULL):
        self.chan, self.term, self.cont = chan, term, cont
        self._hash = hash(("out", chan, term, cont))

    def __eq__(self, other):
        return (
            type(other) is Out
            and other._hash == self._hash
            and other.chan == self.chan
            and other.term == self.term
            and other.cont == self.cont
        )

    def __hash__(self):
        return self._hash


def show_proc(p: Proc) -> str:
    if p is NULL or type(p) is _Null:
        return "0"
    if type(p) is _Dead:
        return "_|_"
    if type(p) is In:
        return "in(%s, %s). %s" % (p.chan, p.var, show_proc(p.cont))
    if type(p) is Out:
        return "out(%s, %s). %s" % (p.chan, p.term, show_proc(p.cont))
    if type(p) is If:
        return "if %s = %s then %s else %s" % (p.u, p.v, show_proc(p.then), show_proc(p.else_))
    raise TypeError(p)


def proc_channels(p: Proc) -> set:
    out: set = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if type(q) is In:
            out.add(q.chan)
            stack.append(q.cont)
        elif type(q) is Out:
            out.add(q.chan)
            stack.append(q.cont)
        elif type(q) is If:
            stack.append(q.then)
            stack.append(q.else_)
    return out


def free_vars(p: Proc) -> set:
    if type(p) is In:
        return free_vars(p.cont) - {p.var}
    if type(p) is Out:
        return variables(p.term) | free_vars(p.cont)
    if type(p) is If:
        return variables(p.u) | variables(p.v) | free_vars(p.then) | free_vars(p.else_)
    return set()


def subst_proc(p: Proc, sigma: Mapping[Term, Term]) -> Proc:
    """Substitute free variables (capture-avoiding: input binders shadow)."""
    if not sigma:
        return p
    t = type(p)
    if t is In:
        inner = sigma
        if p.var in sigma:
            inner = {k: v for k, v in sigma.items() if k != p.var}
        return In(p.chan, p.var, subst_proc(p.cont, inner))
    if t is Out:
        return Out(p.chan, substitute(p.term, sigma), subst_proc(p.cont, sigma))
    if t is If:
        return If(substitute(p.u, sigma), substitute(p.v, sigma), subst_proc(p.then, sigma), subst_proc(p.else_, sigma))
    return p


def rename_binders(p: Proc, fresh) -> Proc:
    """Alpha-rename every input binder using ``fresh(var) -> Var``."""
    if type(p) is In:
        nv = fresh(p.var)
        return In(p.chan, nv, rename_binders(subst_proc(p.cont, {p.var: nv}), fresh))
    if type(p) is Out:
        return Out(p.chan, p.term, rename_binders(p.cont, fresh))
    if type(p) is If:
        return If(p.u, p.v, rename_binders(p.then, fresh), rename_binders(p.else_, fresh))
    return p


# ---------------------------------------------------------------------------
# simple and extended processes


class SimpleProcess:
    """Basic processes keyed by channel; null processes are dropped."""

    __slots__ = ("items", "_hash")

    def __init__(self, items: Iterable = ()):
        seen = {}
        for chan, p in items:
            if p == NULL:
                continue
            if chan in seen:
                raise SpecError("two basic processes on channel %s" % chan)
            seen[chan] = p
        self.items = tuple(sorted(seen.items(), key=lambda kv: natural_key(kv[0])))
        self._hash = hash(self.items)

    @classmethod
    def of(cls, *procs: Proc) -> "SimpleProcess":
        """Build from basic processes, reading each channel off its syntax."""
        items = []
        for p in procs:
            chans = proc_channels(p)
            if len(chans) > 1:
                raise SpecError("basic process uses several channels: %s" % sorted(chans))
            if p != NULL:
                if not chans:
                    raise SpecError("cannot infer the channel of %s" % show_proc(p))
                items.append((chans.pop(), p))
        return cls(items)

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __bool__(self):
        return bool(self.items)

    def channels(self) -> tuple:
        return tuple(c for c, _ in self.items)

    def get(self, chan) -> Optional[Proc]:
        for c, p in self.items:
            if c == chan:
                return p
        return None

    def replace(self, chan: str, p: Proc) -> "SimpleProcess":
        # items are already sorted and distinct: rebuild without re-sorting
        new = object.__new__(SimpleProcess)
        if p == NULL:
            new.items = tuple(kv for kv in self.items if kv[0] != chan)
        else:
            new.items = tuple((c, p) if c == chan else (c, q) for c, q in self.items)
        new._hash = hash(new.items)
        return new

    def free_vars(self) -> set:
        out: set = set()
        for _, p in self.items:
            out |= free_vars(p)
        return out

    def __eq__(self, other):
        return isinstance(other, SimpleProcess) and self.items == other.items

    def __hash__(self):
        return self._hash

    def __str__(self):
        return "{" + ", ".join(show_proc(p) for _, p in self.items) + "}"

    __repr__ = __str__


EMPTY = SimpleProcess()


class ExtendedProcess:
    __slots__ = ("procs", "frame", "_hash")

    def __init__(self, procs: SimpleProcess, frame: Frame):
        self.procs = procs
        self.frame = frame
        self._hash = hash((procs, frame))

    def __eq__(self, other):
        return isinstance(other, ExtendedProcess) and self.procs == other.procs and self.frame == other.frame

    def __hash__(self):
        return self._hash

    def __str__(self):
        return "<%s, %s>" % (self.procs, self.frame)

    __repr__ = __str__


def is_initial(A) -> bool:
    procs = A.procs if isinstance(A, ExtendedProcess) else A
    return all(type(p) is In for _, p in procs)


# ---------------------------------------------------------------------------
# spec file AST


@dataclass(frozen=True)
class ProcDef:
    name: str
    params: tuple  # of str
    channel: str
    body: Proc


@dataclass(frozen=True)
class ProcRef:
    name: str
    args: tuple  # of Term


@dataclass(frozen=True)
class Query:
    kind: str  # equiv | incl | count | explore
    label: Optional[str]
    left: tuple  # of ProcRef
    left_frame: str
    right: tuple = ()
    right_frame: Optional[str] = None


@dataclass
class SpecFile:
    signature: Signature = E_AENC
    declared_signature: bool = False
    names: tuple = ()
    frames: dict = field(default_factory=dict)  # name -> Frame
    processes: dict = field(default_factory=dict)  # name -> ProcDef
    orders: list = field(default_factory=list)  # list of channel chains
    queries: list = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, SpecFile):
            return NotImplemented
        return (
            self.signature == other.signature
            and set(self.names) == set(other.names)
            and self.frames == other.frames
            and self.processes == other.processes
            and self.orders == other.orders
            and self.queries == other.queries
        )

    def query(self, label: Optional[str] = None) -> Query:
        if label is None:
            if not self.queries:
                raise SpecError("spec declares no query")
            return self.queries[0]
        for q in self.queries:
            if q.label == label:
                return q
        raise SpecError("no query named %r (have: %s)" % (label, ", ".join(str(q.label) for q in self.queries)))

    def channels(self) -> set:
        return {d.channel for d in self.processes.values()}

    def channel_order(self, channels: Iterable[str] = ()) -> tuple:
        """Total order on channels: declared ``order`` chains, completed by a
        topological sort whose ties are broken by natural name order."""
        chans = set(channels) | self.channels()
        for chain in self.orders:
            chans |= set(chain)
        succ: dict = {c: set() for c in chans}
        indeg = {c: 0 for c in chans}
        for chain in self.orders:
            for a, b in zip(chain, chain[1:]):
                if b not in succ[a]:
                    succ[a].add(b)
                    indeg[b] += 1
        ready = sorted((c for c in chans if indeg[c] == 0), key=natural_key)
        out = []
        while ready:
            c = ready.pop(0)
            out.append(c)
            for d in sorted(succ[c], key=natural_key):
                indeg[d] -= 1
                if indeg[d] == 0:
                    ready.append(d)
            ready.sort(key=natural_key)
        if len(out) != len(chans):
            raise SpecError("channel order declarations are cyclic")
        return tuple(out)

    def build(self, refs: Sequence[ProcRef], frame_name: Optional[str]) -> ExtendedProcess:
        items = []
        for ref in refs:
            d = self.processes.get(ref.name)
            if d is None:
                raise SpecError("unknown process %r" % ref.name)
            items.append((d.channel, instantiate(d, list(ref.args))))
        if frame_name is None:
            frame = Frame()
        else:
            if frame_name not in self.frames:
                raise SpecError("unknown frame %r" % frame_name)
            frame = self.frames[frame_name]
        return ExtendedProcess(SimpleProcess(items), frame)

    def query_processes(self, q: Query):
        """``(A, B)`` for equivalence queries, ``(A, None)`` otherwise."""
        A = self.build(q.left, q.left_frame)
        if q.kind in ("equiv", "incl"):
            B = self.build(q.right, q.right_frame or q.left_frame)
            return A, B
        return A, None


def instantiate(d: ProcDef, args: Sequence[Term], sig: Signature = E_AENC) -> Proc:
    if len(args) != len(d.params):
        raise SpecError("process %s expects %d arguments, got %d" % (d.name, len(d.params), len(args)))
    sigma = {Var(p): normalize(a, sig) for p, a in zip(d.params, args)}
    return subst_proc(d.body, sigma)


# ---------------------------------------------------------------------------
# preprocessor

_DEFINE = re.compile(r"^\s*@define\s+([A-Za-z_]\w*)\s+(\S+)\s*$")
_FOR = re.compile(r'@for\s+([A-Za-z_]\w*)\s+in\s+(\S+?)\.\.(\S+?)\s+(?:sep\s+"([^"]*)"\s+)?\{')
_DOLLAR = re.compile(r"\$\{([A-Za-z_]\w*)\}|\$([A-Za-z_]\w*)")


def preprocess(text: str, defines: Optional[Mapping[str, str]] = None) -> str:
    env: dict = {}
    overrides = dict(defines or {})
    lines = []
    for line in text.split("\n"):
        m = _DEFINE.match(line)
        if m:
            env[m.group(1)] = _subst_dollars(m.group(2), {**env, **overrides}, None)
            lines.append("")  # keep line numbering
        else:
            lines.append(line)
    env.update(overrides)
    return _expand(_strip_comments("\n".join(lines)), env)


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("//", 1)[0] for line in text.split("\n"))


def _subst_dollars(s: str, env: Mapping[str, str], line_of) -> str:
    def rep(m):
        k = m.group(1) or m.group(2)
        if k not in env:
            raise SpecError("undefined template variable $%s" % k)
        return str(env[k])

    return _DOLLAR.sub(rep, s)


def _expand(text: str, env: Mapping[str, str]) -> str:
    out = []
    pos = 0
    while True:
        m = _FOR.search(text, pos)
        if not m:
            out.append(_subst_dollars(text[pos:], env, None))
            return "".join(out)
        out.append(_subst_dollars(text[pos : m.start()], env, None))
        depth = 1
        j = m.end()
        while j < len(text) and depth:
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
            j += 1
        if depth:
            raise SpecError("unterminated @for block")
        body = text[m.end() : j - 1]
        var = m.group(1)
        try:
            lo = int(_subst_dollars(m.group(2), env, None))
            hi = int(_subst_dollars(m.group(3), env, None))
        except ValueError:
            raise SpecError("@for bounds must be integers") from None
        sep = m.group(4) if m.group(4) is not None else " "
        parts = [_expand(body, {**env, var: str(i)}).strip() for i in range(lo, hi + 1)]
        out.append(sep.join(parts) if sep == " " else (sep + " ").join(parts))
        pos = j


# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<arrow>->)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_']*(?:\#[0-9]+)?)
      | (?P<punct>[(){},.=</:])
    """,
    re.VERBOSE,
)

KEYWORDS = {"fun", "const", "rewrite", "names", "frame", "process", "order", "query", "in", "out", "if", "then", "else", "on", "destructor"}
QUERY_KINDS = ("equiv", "incl", "count", "explore")


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    line, col0 = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SpecError("unexpected character %r" % text[pos], line, pos - col0 + 1)
        kind = m.lastgroup
        s = m.group()
        if kind == "ws":
            for k, ch in enumerate(s):
                if ch == "\n":
                    line += 1
                    col0 = pos + k + 1
        else:
            toks.append(Tok(kind if kind != "punct" else s, s, line, pos - col0 + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - col0 + 1))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0
        self.spec = SpecFile()
        self.fun_decls: list = []
        self.rewrites: list = []
        self._raw_frames: list = []
        self._raw_procs: list = []
        self._raw_queries: list = []

    # token helpers -------------------------------------------------------
    def peek(self, k=0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise SpecError(msg, tok.line, tok.col)

    def expect(self, kind, text=None) -> Tok:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            self.error("expected %s, found %r" % (text or kind, t.text or "end of input"))
        return self.next()

    def at_word(self, w) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text == w

    def ident(self, what="identifier") -> Tok:
        t = self.peek()
        if t.kind != "ident":
            self.error("expected %s, found %r" % (what, t.text or "end of input"))
        if "#" in t.text:
            self.error("identifier %s uses the reserved form w#k of generated handles" % t.text)
        return self.next()

    # items -----------------------------------------------------------------
    def parse(self) -> SpecFile:
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind != "ident":
                self.error("expected a declaration, found %r" % t.text)
            w = t.text
            if w == "fun":
                self.next()
                name = self.ident("symbol name")
                self.expect("/")
                n = int(self.expect("int").text)
                kind = CONSTRUCTOR
                if self.at_word("destructor"):
                    self.next()
                    kind = DESTRUCTOR
                self.fun_decls.append((name.text, n, kind, name))
            elif w == "const":
                self.next()
                name = self.ident("constant name")
                self.fun_decls.append((name.text, 0, CONSTANT, name))
            elif w == "rewrite":
                self.next()
                lhs = self.raw_term()
                self.expect("arrow")
                rhs = self.raw_term()
                self.rewrites.append((lhs, rhs, t))
            elif w == "names":
                self.next()
                ns = [self.ident("name").text]
                while self.peek().kind == ",":
                    self.next()
                    ns.append(self.ident("name").text)
                self.spec.names = self.spec.names + tuple(ns)
            elif w == "frame":
                self.next()
                fname = self.ident("frame name")
                self.expect("{")
                entries = []
                while self.peek().kind != "}":
                    h = self.ident("handle")
                    self.expect("arrow")
                    entries.append((h, self.raw_term()))
                    if self.peek().kind == ",":
                        self.next()
                self.expect("}")
                self._raw_frames.append((fname, entries))
            elif w == "process":
                self.next()
                pname = self.ident("process name")
                params = []
                if self.peek().kind == "(":
                    self.next()
                    if self.peek().kind != ")":
                        params.append(self.ident("parameter").text)
                        while self.peek().kind == ",":
                            self.next()
                            params.append(self.ident("parameter").text)
                    self.expect(")")
                if not self.at_word("on"):
                    self.error("expected 'on' followed by the process channel")
                self.next()
                chan = self.ident("channel")
                self.expect("=")
                body = self.raw_proc()
                self._raw_procs.append((pname, tuple(params), chan, body))
            elif w == "order":
                self.next()
                chain = [self.ident("channel").text]
                while self.peek().kind == "<":
                    self.next()
                    chain.append(self.ident("channel").text)
                self.spec.orders.append(tuple(chain))
            elif w == "query":
                self.next()
                kt = self.ident("query kind")
                if kt.text not in QUERY_KINDS:
                    self.error("unknown query kind %r" % kt.text, kt)
                label = None
                if self.peek().kind == "ident" and self.peek(1).kind == ":":
                    label = self.next().text
                    self.next()
                left = self.procset()
                lf = self.ident("frame name").text if self.peek().kind == "ident" and not self._starts_item() else None
                right, rf = (), None
                if kt.text in ("equiv", "incl"):
                    right = self.procset()
                    if self.peek().kind == "ident" and not self._starts_item():
                        rf = self.ident("frame name").text
                self._raw_queries.append((kt, label, left, lf, right, rf))
            else:
                self.error("unknown declaration %r" % w)
        return self.finish()

    def _starts_item(self) -> bool:
        return self.peek().text in ("fun", "const", "rewrite", "names", "frame", "process", "order", "query")

    def procset(self):
        self.expect("{")
        refs = []
        while self.peek().kind != "}":
            name = self.ident("process name")
            args = []
            if self.peek().kind == "(":
                self.next()
                if self.peek().kind != ")":
                    args.append(self.raw_term())
                    while self.peek().kind == ",":
                        self.next()
                        args.append(self.raw_term())
                self.expect(")")
            refs.append((name, args))
            if self.peek().kind == ",":
                self.next()
            elif self.peek().kind != "}":
                self.error("expected ',' or '}' in process set")
        self.expect("}")
        return refs

    # raw syntax (resolved later, once all declarations are known) --------
    def raw_term(self):
        t = self.ident("term")
        if self.peek().kind == "(":
            self.next()
            args = []
            if self.peek().kind != ")":
                args.append(self.raw_term())
                while self.peek().kind == ",":
                    self.next()
                    args.append(self.raw_term())
            self.expect(")")
            return ("app", t, args)
        return ("atom", t)

    def raw_proc(self):
        t = self.peek()
        if t.kind == "int" and t.text == "0":
            self.next()
            return ("0", t)
        if t.kind == "(":
            self.next()
            p = self.raw_proc()
            self.expect(")")
            return p
        if t.kind != "ident":
            self.error("expected a process, found %r" % (t.text or "end of input"))
        if t.text == "in":
            self.next()
            self.expect("(")
            c = self.ident("channel")
            self.expect(",")
            x = self.ident("variable")
            self.expect(")")
            self.expect(".")
            return ("in", c, x, self.raw_proc())
        if t.text == "out":
            self.next()
            self.expect("(")
            c = self.ident("channel")
            self.expect(",")
            u = self.raw_term()
            self.expect(")")
            self.expect(".")
            return ("out", c, u, self.raw_proc())
        if t.text == "if":
            self.next()
            u = self.raw_term()
            self.expect("=")
            v = self.raw_term()
            if not self.at_word("then"):
                self.error("expected 'then'")
            self.next()
            p = self.raw_proc()
            q = ("0", t)
            if self.at_word("else"):
                self.next()
                q = self.raw_proc()
            return ("if", u, v, p, q, t)
        self.error("expected a process, found %r" % t.text)

    # resolution --------------------------------------------------------------
    def finish(self) -> SpecFile:
        spec = self.spec
        if self.fun_decls or self.rewrites:
            syms = []
            arity = {}
            for name, n, kind, tok in self.fun_decls:
                if name in arity:
                    self.error("symbol %s declared twice" % name, tok)
                arity[name] = n
                syms.append((name, n, kind))
            rules = []
            for lhs, rhs, tok in self.rewrites:
                lt = self.resolve(lhs, arity, set(), rewrite=True)
                rt = self.resolve(rhs, arity, set(), rewrite=True)
                rules.append((lt, rt))
            try:
                spec.signature = Signature(tuple(syms), tuple(rules))
            except ValueError as e:
                raise SpecError(str(e)) from None
            spec.declared_signature = True
        self.arity = {s: n for s, n, _ in spec.signature.symbols}
        self.name_set = set(spec.names)
        for n in spec.names:
            if n in self.arity:
                self.error("%s declared both as a name and a symbol" % n)
        for fname, entries in self._raw_frames:
            if fname.text in spec.frames:
                self.error("frame %s declared twice" % fname.text, fname)
            items = []
            for h, t in entries:
                items.append((Handle(h.text), normalize(self.resolve(t, self.arity, set()), spec.signature)))
            try:
                spec.frames[fname.text] = Frame(items)
            except ValueError as e:
                self.error(str(e), fname)
        for pname, params, chan, body in self._raw_procs:
            if pname.text in spec.processes:
                self.error("process %s declared twice" % pname.text, pname)
            p = self.resolve_proc(body, chan.text, set(params))
            spec.processes[pname.text] = ProcDef(pname.text, params, chan.text, p)
        for kt, label, left, lf, right, rf in self._raw_queries:
            q = Query(
                kt.text,
                label,
                tuple(self.resolve_ref(r) for r in left),
                lf,
                tuple(self.resolve_ref(r) for r in right),
                rf,
            )
            for refs in (q.left, q.right):
                chans = [spec.processes[r.name].channel for r in refs]
                if len(set(chans)) != len(chans):
                    self.error("duplicate channel in a simple process of query %s" % (label or kt.text), kt)
            for f in (lf, rf):
                if f is not None and f not in spec.frames:
                    self.error("unknown frame %s" % f, kt)
            spec.queries.append(q)
        return spec

    def resolve_ref(self, r):
        name, args = r
        d = self.spec.processes.get(name.text)
        if d is None:
            self.error("unknown process %s" % name.text, name)
        if len(args) != len(d.params):
            self.error("process %s expects %d arguments, got %d" % (name.text, len(d.params), len(args)), name)
        return ProcRef(name.text, tuple(normalize(self.resolve(a, self.arity, set()), self.spec.signature) for a in args))

    def resolve(self, raw, arity, bound, rewrite=False) -> Term:
        if raw[0] == "app":
            tok, args = raw[1], raw[2]
            if tok.text not in arity:
                self.error("unknown function symbol %s" % tok.text, tok)
            if arity[tok.text] != len(args):
                self.error("%s expects %d arguments, got %d" % (tok.text, arity[tok.text], len(args)), tok)
            return App(tok.text, tuple(self.resolve(a, arity, bound, rewrite) for a in args))
        tok = raw[1]
        s = tok.text
        if s in bound:
            return Var(s)
        if s in arity:
            if arity[s] != 0:
                self.error("%s expects %d arguments" % (s, arity[s]), tok)
            return App(s)
        if rewrite:
            return Var(s)
        if s in getattr(self, "name_set", ()):
            return Name(s)
        self.error("unknown identifier %s" % s, tok)

    def resolve_proc(self, raw, chan, bound) -> Proc:
        k = raw[0]
        if k == "0":
            return NULL
        if k == "in":
            c, x = raw[1], raw[2]
            if c.text != chan:
                self.error("channel discipline: %s used in a process on %s" % (c.text, chan), c)
            if x.text in self.arity or x.text in self.name_set:
                self.error("input variable %s clashes with a declared symbol or name" % x.text, x)
            return In(chan, Var(x.text), self.resolve_proc(raw[3], chan, bound | {x.text}))
        if k == "out":
            c = raw[1]
            if c.text != chan:
                self.error("channel discipline: %s used in a process on %s" % (c.text, chan), c)
            return Out(chan, self.resolve(raw[2], self.arity, bound), self.resolve_proc(raw[3], chan, bound))
        if k == "if":
            return If(
                self.resolve(raw[1], self.arity, bound),
                self.resolve(raw[2], self.arity, bound),
                self.resolve_proc(raw[3], chan, bound),
                self.resolve_proc(raw[4], chan, bound),
            )
        raise AssertionError(k)


def parse_spec(text: str, defines: Optional[Mapping[str, str]] = None) -> SpecFile:
    """Parse (after template expansion) and statically check a spec."""
    return _Parser(tokenize(preprocess(text, defines))).parse()


def parse_process(text: str, channel: str, names: Iterable[str] = (), sig: Signature = E_AENC) -> Proc:
    """Convenience: parse a single basic-process body."""
    src = "names %s\nprocess _P on %s = %s" % (", ".join(names) or "_unused", channel, text)
    spec = parse_spec(src) if sig is E_AENC else None
    if spec is None:
        raise NotImplementedError("custom signatures: use parse_spec")
    return spec.processes["_P"].body


# ---------------------------------------------------------------------------
# printing


def print_spec(spec: SpecFile) -> str:
    """Render a spec that parses back to an equal :class:`SpecFile`."""
    lines = []
    if spec.declared_signature:
        for name, n, kind in spec.signature.symbols:
            if kind == CONSTANT:
                lines.append("const %s" % name)
            else:
                lines.append("fun %s/%d%s" % (name, n, " destructor" if kind == DESTRUCTOR else ""))
        for lhs, rhs in spec.signature.rewrite_rules:
            lines.append("rewrite %s -> %s" % (lhs, rhs))
    if spec.names:
        lines.append("names " + ", ".join(spec.names))
    for fname, fr in spec.frames.items():
        lines.append("frame %s { %s }" % (fname, ", ".join("%s -> %s" % (h, t) for h, t in fr.items())))
    for d in spec.processes.values():
        lines.append("process %s(%s) on %s = %s" % (d.name, ", ".join(d.params), d.channel, show_proc(d.body)))
    for chain in spec.orders:
        lines.append("order " + " < ".join(chain))
    for q in spec.queries:
        parts = ["query", q.kind]
        if q.label:
            parts.append(q.label + ":")
        parts.append(_show_refs(q.left))
        if q.left_frame:
            parts.append(q.left_frame)
        if q.kind in ("equiv", "incl"):
            parts.append(_show_refs(q.right))
            if q.right_frame:
                parts.append(q.right_frame)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _show_refs(refs) -> str:
    out = []
    for r in refs:
        out.append(r.name + ("(%s)" % ", ".join(str(a) for a in r.args) if r.args else ""))
    return "{" + ", ".join(out) + "}"
