"""Terms, the asymmetric-encryption rewrite theory, recipes and frames.

Messages are first-order terms over names, variables and function symbols.
Recipes are the same kind of tree but built from frame handles and public
symbols only.  Equality modulo the theory is decided by comparing normal
forms of a convergent rewrite system.

Intruder deduction and static equivalence are *bounded* by recipe height:
atoms (handles and public constants) have height 1 and ``f(M1..Mk)`` has
height ``1 + max(height(Mi))``.
"""

from __future__ import annotations

import re
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from . import kernel


class Term:
    """Base class of all terms.  Instances are immutable and hash-consed by
    value, so they can be used freely as dictionary keys."""

    __slots__ = ("_hash",)

    def __repr__(self) -> str:
        return str(self)

    def __lt__(self, other: "Term") -> bool:
        return recipe_key(self) < recipe_key(other)


class Name(Term):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("N", name))

    def __eq__(self, other):
        return type(other) is Name and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


class Var(Term):
    """First-order (message) variable."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("V", name))

    def __eq__(self, other):
        return type(other) is Var and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


class Handle(Term):
    """Frame handle ``w``; the leaves of recipes."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("W", name))

    def __eq__(self, other):
        return type(other) is Handle and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


class App(Term):
    """Function application; public constants are nullary applications."""

    __slots__ = ("sym", "args", "_closed")

    def __init__(self, sym: str, args: Sequence[Term] = ()):
        self.sym = sym
        self.args = tuple(args)
        self._hash = hash((sym, self.args))
        # no first-order variable below: substituting variables is a no-op
        self._closed = all(type(a) is not Var and (type(a) is not App or a._closed) for a in self.args)

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is App
            and other._hash == self._hash
            and other.sym == self.sym
            and other.args == self.args
        )

    def __hash__(self):
        return self._hash

    def __str__(self):
        if not self.args:
            return self.sym
        return "%s(%s)" % (self.sym, ",".join(str(a) for a in self.args))


def fn(sym: str, *args: Term) -> App:
    return App(sym, args)


class UnknownHandleError(KeyError):
    """A recipe mentions a handle outside the frame's domain."""


# ---------------------------------------------------------------------------
# ordering helpers

_DIGITS = re.compile(r"(\d+)")


@lru_cache(maxsize=65536)
def natural_key(s: str) -> tuple:
    """Split digit runs so that ``w2 < w10``."""
    parts = _DIGITS.split(s)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


def height(t: Term) -> int:
    if type(t) is App and t.args:
        return 1 + max(height(a) for a in t.args)
    return 1


def _head(t: Term) -> str:
    return t.sym if type(t) is App else t.name


def recipe_key(t: Term) -> tuple:
    """Total order on recipes: height, then head name, then arguments."""
    if type(t) is App and t.args:
        return (height(t), natural_key(t.sym), tuple(recipe_key(a) for a in t.args))
    return (1, natural_key(_head(t)), ())


def variables(t: Term) -> set:
    out: set = set()
    _collect(t, (Var,), out)
    return out


def handles(t: Term) -> set:
    out: set = set()
    _collect(t, (Handle,), out)
    return out


def names(t: Term) -> set:
    out: set = set()
    _collect(t, (Name,), out)
    return out


def _collect(t, kinds, out):
    if type(t) is App:
        for a in t.args:
            _collect(a, kinds, out)
    elif isinstance(t, kinds):
        out.add(t)


def is_ground(t: Term) -> bool:
    return not variables(t)


def substitute(t: Term, sigma: Mapping[Term, Term]) -> Term:
    """Replace leaves (variables, handles, or names) according to ``sigma``."""
    if not sigma:
        return t
    if all(type(k) is Var for k in sigma):
        return _subst_vars(t, sigma)
    if type(t) is App:
        if not t.args:
            return t
        new = tuple(substitute(a, sigma) for a in t.args)
        if new == t.args:
            return t
        return App(t.sym, new)
    return sigma.get(t, t)


def _subst_vars(t, sigma):
    if type(t) is App:
        if t._closed:
            return t
        new = tuple([_subst_vars(a, sigma) for a in t.args])
        return App(t.sym, new)
    if type(t) is Var:
        return sigma.get(t, t)
    return t


# ---------------------------------------------------------------------------
# signature and rewriting


CONSTRUCTOR = "constructor"
DESTRUCTOR = "destructor"
CONSTANT = "public-constant"


@dataclass(frozen=True)
class Signature:
    symbols: tuple  # ((name, arity, kind), ...)
    rewrite_rules: tuple  # ((lhs, rhs), ...)
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        arity = {}
        for name, n, kind in self.symbols:
            if name in arity:
                raise ValueError("duplicate symbol %r" % name)
            if kind not in (CONSTRUCTOR, DESTRUCTOR, CONSTANT):
                raise ValueError("bad symbol kind %r" % kind)
            if kind == CONSTANT and n != 0:
                raise ValueError("constant %r must have arity 0" % name)
            arity[name] = n
        heads = set()
        for lhs, rhs in self.rewrite_rules:
            if type(lhs) is not App or self.kind(lhs.sym) != DESTRUCTOR:
                raise ValueError("rewrite rule must be headed by a destructor: %s" % lhs)
            for a in lhs.args:
                if _mentions_destructor(a, self):
                    raise ValueError("rewrite left-hand side arguments must be destructor-free: %s" % lhs)
            if not variables(rhs) <= variables(lhs):
                raise ValueError("rewrite right-hand side has unbound variables: %s" % rhs)
            heads.add(lhs.sym)
        for name, _, kind in self.symbols:
            if kind == DESTRUCTOR and name not in heads:
                raise ValueError("destructor %r heads no rewrite rule" % name)

    def arity(self, sym: str) -> int:
        for name, n, _ in self.symbols:
            if name == sym:
                return n
        raise KeyError(sym)

    def kind(self, sym: str) -> Optional[str]:
        for name, _, k in self.symbols:
            if name == sym:
                return k
        return None

    @property
    def constants(self) -> list:
        return sorted((s for s, _, k in self.symbols if k == CONSTANT), key=natural_key)

    @property
    def functions(self) -> list:
        """Non-constant symbols as ``(name, arity)`` sorted by name."""
        return sorted(((s, n) for s, n, k in self.symbols if k != CONSTANT), key=lambda p: natural_key(p[0]))

    @property
    def destructors(self) -> frozenset:
        return frozenset(s for s, _, k in self.symbols if k == DESTRUCTOR)

    def rules_for(self, sym: str) -> list:
        got = self._cache.get(("rules", sym))
        if got is None:
            got = [r for r in self.rewrite_rules if r[0].sym == sym]
            self._cache[("rules", sym)] = got
        return got

    def compiled_rules(self) -> dict:
        """Rules in the tuple-pattern form understood by the kernel."""
        got = self._cache.get("compiled")
        if got is None:
            got = {}
            for lhs, rhs in self.rewrite_rules:
                slots: dict = {}
                pats = tuple(_compile_pattern(a, slots) for a in lhs.args)
                got.setdefault(lhs.sym, []).append((pats, _compile_pattern(rhs, slots)))
            self._cache["compiled"] = got
        return got


def _mentions_destructor(t, sig):
    if type(t) is App:
        if sig.kind(t.sym) == DESTRUCTOR:
            return True
        return any(_mentions_destructor(a, sig) for a in t.args)
    return False


def _compile_pattern(t: Term, slots: dict):
    if type(t) is Var:
        if t not in slots:
            slots[t] = len(slots)
        return (0, slots[t])
    if type(t) is App:
        return (1, t.sym, tuple(_compile_pattern(a, slots) for a in t.args))
    raise ValueError("rewrite rules may only contain variables and symbols, got %s" % t)


def _aenc_theory() -> Signature:
    x, y, x1, x2 = Var("x"), Var("y"), Var("x1"), Var("x2")
    return Signature(
        symbols=(
            ("aenc", 2, CONSTRUCTOR),
            ("pk", 1, CONSTRUCTOR),
            ("pair", 2, CONSTRUCTOR),
            ("adec", 2, DESTRUCTOR),
            ("fst", 1, DESTRUCTOR),
            ("snd", 1, DESTRUCTOR),
            ("ok", 0, CONSTANT),
            ("start", 0, CONSTANT),
        ),
        rewrite_rules=(
            (fn("adec", fn("aenc", x, fn("pk", y)), y), x),
            (fn("fst", fn("pair", x1, x2)), x1),
            (fn("snd", fn("pair", x1, x2)), x2),
        ),
    )


E_AENC = _aenc_theory()


def match(pattern: Term, t: Term, binding: dict) -> bool:
    """Syntactic matching; extends ``binding`` in place."""
    if type(pattern) is Var:
        prev = binding.get(pattern)
        if prev is None:
            binding[pattern] = t
            return True
        return prev == t
    if type(pattern) is App:
        if type(t) is not App or t.sym != pattern.sym or len(t.args) != len(pattern.args):
            return False
        return all(match(p, a, binding) for p, a in zip(pattern.args, t.args))
    return pattern == t


def normalize(t: Term, sig: Signature = E_AENC) -> Term:
    """Innermost rewriting to the unique normal form."""
    if type(t) is not App or not t.args:
        return t
    cache = sig._cache.setdefault("nf", {})
    got = cache.get(t)
    if got is not None:
        return got
    args = tuple(normalize(a, sig) for a in t.args)
    cur = t if args == t.args else App(t.sym, args)
    result = cur
    for lhs, rhs in sig.rules_for(cur.sym):
        binding: dict = {}
        if match(lhs, cur, binding):
            result = normalize(substitute(rhs, binding), sig)
            break
    if len(cache) > 200_000:
        cache.clear()
    cache[t] = result
    return result


def eq_mod_E(t: Term, u: Term, sig: Signature = E_AENC) -> bool:
    return normalize(t, sig) == normalize(u, sig)


def is_normal(t: Term, sig: Signature = E_AENC) -> bool:
    return normalize(t, sig) == t


def _walk(t, sigma):
    while type(t) is Var and t in sigma:
        t = sigma[t]
    return t


def _occurs(v, t, sigma):
    t = _walk(t, sigma)
    if t == v:
        return True
    if type(t) is App:
        return any(_occurs(v, a, sigma) for a in t.args)
    return False


def unify(t: Term, u: Term) -> Optional[dict]:
    """Most general syntactic unifier (with occurs check) or ``None``.

    The returned substitution is idempotent: its range mentions none of its
    domain variables."""
    sigma: dict = {}
    stack = [(t, u)]
    while stack:
        a, b = stack.pop()
        a = _walk(a, sigma)
        b = _walk(b, sigma)
        if a == b:
            continue
        if type(a) is Var:
            if _occurs(a, b, sigma):
                return None
            sigma[a] = b
        elif type(b) is Var:
            if _occurs(b, a, sigma):
                return None
            sigma[b] = a
        elif type(a) is App and type(b) is App:
            if a.sym != b.sym or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        else:
            return None
    return {v: _resolve(v, sigma) for v in sigma}


def _resolve(t, sigma):
    t = _walk(t, sigma)
    if type(t) is App and t.args:
        return App(t.sym, tuple(_resolve(a, sigma) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# frames


class Frame:
    """Ordered map from handles to terms.

    Equality and hashing ignore insertion order: two frames are equal when
    they are the same substitution."""

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, items: Iterable = ()):
        its = []
        m = {}
        for h, t in items:
            if isinstance(h, str):
                h = Handle(h)
            if h in m:
                raise ValueError("handle %s bound twice" % h)
            m[h] = t
            its.append((h, t))
        self._items = tuple(its)
        self._map = m
        self._hash = None

    def items(self):
        return self._items

    def domain(self) -> tuple:
        return tuple(h for h, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __contains__(self, h):
        return h in self._map

    def __getitem__(self, h):
        return self._map[h]

    def get(self, h, default=None):
        return self._map.get(h, default)

    def as_dict(self) -> dict:
        return dict(self._map)

    def extend(self, h: Handle, t: Term) -> "Frame":
        return Frame(self._items + ((h, t),))

    def restrict(self, hs) -> "Frame":
        keep = set(hs)
        return Frame((h, t) for h, t in self._items if h in keep)

    def map_terms(self, f) -> "Frame":
        return Frame((h, f(t)) for h, t in self._items)

    def is_closed(self) -> bool:
        return all(is_ground(t) for _, t in self._items)

    def __eq__(self, other):
        return isinstance(other, Frame) and self._map == other._map

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._items))
        return self._hash

    def __str__(self):
        return "{" + ", ".join("%s |> %s" % (h, t) for h, t in self._items) + "}"

    __repr__ = __str__


# ---------------------------------------------------------------------------
# recipes


def apply_recipe(M: Term, phi: Frame, sig: Signature = E_AENC) -> Term:
    """Normal form of ``M`` with every handle replaced by its frame image."""
    return normalize(_plug(M, phi), sig)


def _plug(M, phi):
    if type(M) is Handle:
        try:
            return phi[M]
        except KeyError:
            raise UnknownHandleError("handle %s not in frame domain %s" % (M, [str(h) for h in phi.domain()])) from None
    if type(M) is App:
        if not M.args:
            return M
        return App(M.sym, tuple(_plug(a, phi) for a in M.args))
    raise ValueError("%s is not a recipe (only handles and public symbols allowed)" % M)


def atoms_for(domain: Iterable[Handle], sig: Signature = E_AENC) -> list:
    """Height-1 recipes in enumeration order."""
    ats = [App(c) for c in sig.constants] + list(domain)
    return sorted(ats, key=recipe_key)


def iter_recipes(domain: Iterable[Handle], depth: int, sig: Signature = E_AENC) -> Iterator[Term]:
    """Every recipe over ``domain`` of height at most ``depth``, by increasing
    height and in :func:`recipe_key` order within a height.

    This is the naive generator; it is used by the brute-force oracle and
    the tests, never by the optimised engines."""
    levels = [atoms_for(domain, sig)]
    yield from levels[0]
    upto = list(levels[0])
    for h in range(2, depth + 1):
        level = []
        for sym, n in sig.functions:
            for args in _product_with_height(upto, n, h - 1):
                level.append(App(sym, args))
        level.sort(key=recipe_key)
        yield from level
        upto.extend(level)
        levels.append(level)


def _product_with_height(pool, n, need):
    from itertools import product

    for args in product(pool, repeat=n):
        if max(height(a) for a in args) == need:
            yield args


# ---------------------------------------------------------------------------
# recipe classes (value-vector saturation)


class Interner:
    """Hash-consing table shared by several class computations.

    Terms are mapped to small integers; applying a symbol to interned
    normal forms and rewriting at the head is a single kernel call."""

    def __init__(self, sig: Signature = E_AENC):
        self.sig = sig
        self.table = kernel.TermTable(sig.compiled_rules())
        self._in: dict = {}
        self._out: dict = {}
        self.caches: dict = {}  # for clients that reuse ids across computations

    def intern(self, t: Term) -> int:
        got = self._in.get(t)
        if got is not None:
            return got
        if type(t) is App:
            i = self.table.app(t.sym, tuple(self.intern(a) for a in t.args))
        else:
            i = self.table.leaf(t)
        self._in[t] = i
        return i

    def intern_normal(self, t: Term) -> int:
        """Intern the normal form of ``t`` (which may be reducible)."""
        if type(t) is App and t.args:
            return self.table.reduce(t.sym, tuple(self.intern_normal(a) for a in t.args))
        return self.intern(t)

    def extern(self, i: int) -> Term:
        got = self._out.get(i)
        if got is not None:
            return got
        node = self.table.nodes[i]
        if node[0] == -1:
            t = node[1]
        else:
            t = App(node[0], tuple(self.extern(c) for c in node[1]))
        self._out[i] = t
        return t

    def apply(self, sym: str, args: tuple) -> int:
        return self.table.reduce(sym, args)


class RecipeClasses:
    """Recipes up to a height bound, grouped by the tuple of values they
    take in each of ``frames``.

    All frames must share the same domain.  ``marked`` handles, when given
    together with ``track_marks=True``, additionally record per class the
    smallest member that mentions at least one marked handle.
    """

    def __init__(
        self,
        frames: Sequence[Frame],
        depth: int,
        sig: Signature = E_AENC,
        domain: Optional[Sequence[Handle]] = None,
        marked: Iterable[Handle] = (),
        track_marks: bool = False,
        stop: Optional[Sequence[Term]] = None,
        stop_on_split: bool = False,
        interner: Optional[Interner] = None,
        frame_ids: Optional[Sequence[Sequence[int]]] = None,
    ):
        """``frame_ids`` may give, per frame, the interned images of
        ``domain`` directly (the frames are then only used for their
        length); ``interner`` lets several computations share ids."""
        if domain is None:
            domain = frames[0].domain()
        self.frames = list(frames)
        self.sig = sig
        self.atoms = atoms_for(domain, sig)
        marked = set(marked)
        self.interner = interner if interner is not None else Interner(sig)
        table = self.interner.table
        pos = {h: k for k, h in enumerate(domain)}
        ncomp = len(frame_ids) if frame_ids is not None else len(self.frames)
        atom_rows = []
        for a in self.atoms:
            if type(a) is Handle:
                if frame_ids is not None:
                    vec = tuple(ids[pos[a]] for ids in frame_ids)
                else:
                    vec = tuple(self.interner.intern_normal(f[a]) for f in self.frames)
            else:
                vec = (self.intern(a),) * ncomp
            atom_rows.append((vec, a in marked))
        stop_vec = None
        if stop is not None:
            stop_vec = tuple(self.interner.intern_normal(t) for t in stop)
        self.stop_vec = stop_vec
        vecs, hs, mhs, reps, mreps = kernel.saturate(
            table, atom_rows, sig.functions, depth, ncomp, track_marks, stop_vec, stop_on_split
        )
        self._vecs = vecs
        self.heights = hs
        self.marked_heights = mhs
        self._reps = reps
        self._mreps = mreps
        self._rep_terms: dict = {}
        self._mrep_terms: dict = {}

    # interning -----------------------------------------------------------
    def intern(self, t: Term) -> int:
        return self.interner.intern(t)

    def extern(self, i: int) -> Term:
        return self.interner.extern(i)

    # queries ---------------------------------------------------------------
    def __len__(self):
        return len(self._vecs)

    def vector_ids(self, i: int) -> tuple:
        return self._vecs[i]

    def values(self, i: int) -> tuple:
        return tuple(self.extern(v) for v in self._vecs[i])

    def value(self, i: int, component: int) -> Term:
        return self.extern(self._vecs[i][component])

    def find(self, vec_terms: Sequence[Term]) -> Optional[int]:
        ids = tuple(self.intern(t) for t in vec_terms)
        for i, v in enumerate(self._vecs):
            if v == ids:
                return i
        return None

    def recipe(self, i: int) -> Term:
        got = self._rep_terms.get(i)
        if got is None:
            r = self._reps[i]
            if r[0] == -1:
                got = self.atoms[r[1]]
            else:
                got = App(r[0], tuple(self.recipe(a) for a in r[1]))
            self._rep_terms[i] = got
        return got

    def is_marked(self, i: int) -> bool:
        return self._mreps[i] is not None

    def marked_recipe(self, i: int) -> Optional[Term]:
        """Smallest member of class ``i`` mentioning a marked handle."""
        if self._mreps[i] is None:
            return None
        got = self._mrep_terms.get(i)
        if got is None:
            r = self._mreps[i]
            if r[0] == -1:
                got = self.atoms[r[1]]
            else:
                sym, args, j = r
                got = App(sym, tuple(self.marked_recipe(a) if k == j else self.recipe(a) for k, a in enumerate(args)))
            self._mrep_terms[i] = got
        return got


def deducible(phi: Frame, target: Term, depth: int, sig: Signature = E_AENC) -> Optional[Term]:
    """Smallest recipe of height <= ``depth`` whose value in ``phi`` is ``target``."""
    target = normalize(target, sig)
    rc = RecipeClasses([phi], depth, sig, stop=[target])
    if rc.stop_vec is not None and len(rc) and rc.vector_ids(len(rc) - 1) == rc.stop_vec:
        return rc.recipe(len(rc) - 1)
    return None


def deducible_values(phi: Frame, depth: int, sig: Signature = E_AENC) -> frozenset:
    """All values derivable from ``phi`` with recipes of height <= ``depth``."""
    key = ("dedset", phi, depth)
    got = sig._cache.get(key)
    if got is None:
        rc = RecipeClasses([phi], depth, sig)
        got = frozenset(rc.value(i, 0) for i in range(len(rc)))
        sig._cache[key] = got
    return got


@dataclass(frozen=True)
class Equivalent:
    depth: int

    def __bool__(self):
        return True

    def __str__(self):
        return "equivalent (bounded, depth %d)" % self.depth


@dataclass(frozen=True)
class Distinguished:
    M: Optional[Term]
    N: Optional[Term]
    reason: str = "test"

    def __bool__(self):
        return False

    def __str__(self):
        if self.M is None:
            return "distinguished (%s)" % self.reason
        return "distinguished(%s, %s)" % (self.M, self.N)


def static_equiv(phi: Frame, psi: Frame, depth: int, sig: Signature = E_AENC):
    """Bounded static equivalence.

    Returns :class:`Equivalent` or :class:`Distinguished` carrying a test
    pair ``(M, N)`` such that ``M = N`` holds in exactly one of the frames.
    The pair is deterministic: classes are scanned in recipe order, first
    grouping by the left frame's value, then by the right frame's.  The
    enumeration stops early at the first repeat of a left value."""
    if set(phi.domain()) != set(psi.domain()):
        return Distinguished(None, None, "domain mismatch")
    if phi == psi:
        return Equivalent(depth)
    cache = sig._cache.setdefault("static", {})
    key = (phi, psi, depth)
    got = cache.get(key)
    if got is not None:
        return got
    rc = RecipeClasses([phi, psi], depth, sig, domain=sorted(phi.domain(), key=recipe_key), stop_on_split=True)
    result = Equivalent(depth)
    vecs = rc._vecs
    for side in (0, 1):
        other = 1 - side
        first: dict = {}
        for i, v in enumerate(vecs):
            j = first.setdefault(v[side], i)
            if j != i and vecs[j][other] != v[other]:
                result = Distinguished(rc.recipe(i), rc.recipe(j))
                break
        if not result:
            break
    if len(cache) > 50_000:
        cache.clear()
    cache[key] = result
    return result


def distinguishes(M: Term, N: Term, phi: Frame, psi: Frame, sig: Signature = E_AENC) -> bool:
    """Replay a test pair: true iff it holds in exactly one frame."""
    return eq_mod_E(apply_recipe(M, phi, sig), apply_recipe(N, phi, sig), sig) != eq_mod_E(
        apply_recipe(M, psi, sig), apply_recipe(N, psi, sig), sig
    )
