"""Symbolic processes and second-order constraint systems.

Inputs are not enumerated: each input introduces a second-order variable
``X`` standing for the attacker's recipe and a first-order variable ``x``
for the received message, linked by a deduction constraint ``D |-X x``
(``D`` is the set of handles available when the input happened).
Conditionals add equations or disequations between first-order terms.

A *solution* ``theta`` maps every second-order variable to a recipe over
its own ``D``; the first-order assignment ``lambda`` then follows by
evaluating the recipes in dependency order.  Dependency constraints
``[X1..Xk] |> {w1..wm}`` are only inspected by the reduced semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .process_calculus import If, In, Out, SimpleProcess, subst_proc
from .term_algebra import (
    E_AENC,
    App,
    Frame,
    Handle,
    Signature,
    Term,
    UnknownHandleError,
    Var,
    apply_recipe,
    eq_mod_E,
    handles,
    iter_recipes,
    natural_key,
    normalize,
    substitute,
    unify,
    variables,
    RecipeClasses,
)


class SecondOrderVar(Term):
    """Recipe variable ``X``."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("X", name))

    def __eq__(self, other):
        return type(other) is SecondOrderVar and other.name == self.name

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


# ---------------------------------------------------------------------------
# constraints


def _handles_str(ws) -> str:
    return "{%s}" % ",".join(str(w) for w in sorted(ws, key=lambda h: natural_key(h.name)))


@dataclass(frozen=True)
class Deduction:
    D: frozenset  # handles available to the recipe
    X: SecondOrderVar
    x: Var

    def __str__(self):
        return "%s |-%s %s" % (_handles_str(self.D), self.X, self.x)


@dataclass(frozen=True)
class Eq:
    u: Term
    v: Term

    def __str__(self):
        return "%s =? %s" % (self.u, self.v)


@dataclass(frozen=True)
class Diseq:
    u: Term
    v: Term

    def __str__(self):
        return "%s !=? %s" % (self.u, self.v)


@dataclass(frozen=True)
class Dependency:
    Xs: tuple  # second-order variables of one block
    ws: frozenset  # handles one of which must be used

    def __str__(self):
        return "[%s] |> %s" % (",".join(str(X) for X in self.Xs), _handles_str(self.ws))


@dataclass(frozen=True)
class ConstraintSystem:
    """A frame whose terms may contain first-order variables, together with
    constraints.  Constraints are kept in creation order."""

    frame: Frame = Frame()
    constraints: tuple = ()

    def deductions(self) -> list:
        return [c for c in self.constraints if type(c) is Deduction]

    def equations(self) -> list:
        return [c for c in self.constraints if type(c) in (Eq, Diseq)]

    def dependencies(self) -> list:
        return [c for c in self.constraints if type(c) is Dependency]

    def fv1(self) -> set:
        out: set = set()
        for _, t in self.frame.items():
            out |= variables(t)
        for c in self.constraints:
            if type(c) is Deduction:
                out.add(c.x)
            elif type(c) in (Eq, Diseq):
                out |= variables(c.u) | variables(c.v)
        return out

    def fv2(self) -> set:
        out = {c.X for c in self.constraints if type(c) is Deduction}
        for c in self.constraints:
            if type(c) is Dependency:
                out |= set(c.Xs)
        return out

    def add(self, *cs) -> "ConstraintSystem":
        return ConstraintSystem(self.frame, self.constraints + tuple(cs))

    def with_frame(self, frame: Frame) -> "ConstraintSystem":
        return ConstraintSystem(frame, self.constraints)

    def dump(self) -> str:
        """Debug listing, one constraint per line."""
        lines = ["frame " + str(self.frame)]
        lines += [str(c) for c in self.constraints]
        return "\n".join(lines)

    def __str__(self):
        return self.dump()


def _dependency_order(C: ConstraintSystem) -> Optional[list]:
    """Deductions sorted so that a variable is solved before any deduction
    whose frame part mentions it; ``None`` when that is impossible."""
    deds = C.deductions()
    by_x = {d.x: d for d in deds}
    needs = {}
    for d in deds:
        vs = set()
        for w in d.D:
            t = C.frame.get(w)
            if t is None:
                return None
            vs |= variables(t)
        needs[d.x] = vs
    order, state = [], {}

    def visit(x):
        st = state.get(x)
        if st == 1:
            return False
        if st == 2:
            return True
        state[x] = 1
        for y in sorted(needs[x], key=lambda v: natural_key(v.name)):
            if y in by_x and not visit(y):
                return False
        state[x] = 2
        order.append(by_x[x])
        return True

    for d in deds:
        if not visit(d.x):
            return None
    return order


def well_formed(C: ConstraintSystem) -> bool:
    """Every variable is introduced by exactly one deduction, deduction
    frames only use existing handles, and first-order dependencies through
    the frame are acyclic."""
    deds = C.deductions()
    xs = [d.x for d in deds]
    Xs = [d.X for d in deds]
    if len(set(xs)) != len(xs) or len(set(Xs)) != len(Xs):
        return False
    if not C.fv1() <= set(xs):
        return False
    for c in C.dependencies():
        if not set(c.Xs) <= set(Xs):
            return False
    return _dependency_order(C) is not None


def check_solution(C: ConstraintSystem, theta: Mapping, sig: Signature = E_AENC) -> Optional[dict]:
    """The first-order assignment induced by ``theta`` if it satisfies every
    deduction, equation and disequation of ``C``; otherwise ``None``.

    Dependency constraints are ignored here.  Raises ``ValueError`` when
    ``theta`` does not cover exactly the deduction variables of ``C``."""
    order = _dependency_order(C)
    if order is None:
        raise ValueError("constraint system is not well formed")
    if set(theta) != {d.X for d in order}:
        raise ValueError("solution domain must be exactly the recipe variables of the system")
    lam: dict = {}
    for d in order:
        M = theta[d.X]
        if not handles(M) <= d.D:
            return None
        sub = Frame((w, normalize(substitute(C.frame[w], lam), sig)) for w in d.D)
        try:
            lam[d.x] = apply_recipe(M, sub, sig)
        except (UnknownHandleError, ValueError):
            return None
    for c in C.equations():
        same = eq_mod_E(substitute(c.u, lam), substitute(c.v, lam), sig)
        if same != (type(c) is Eq):
            return None
    return lam


@dataclass(frozen=True)
class Solution:
    theta: tuple  # ((X, recipe), ...) in deduction order
    lam: tuple  # ((x, value), ...)

    def theta_map(self) -> dict:
        return dict(self.theta)

    def lam_map(self) -> dict:
        return dict(self.lam)


def solve(
    C: ConstraintSystem,
    depth: int,
    sig: Signature = E_AENC,
    all_recipes: bool = False,
) -> Iterator[Solution]:
    """Solutions of ``C`` with recipes of height at most ``depth``.

    By default one solution is produced per distinct first-order
    assignment, using the smallest recipes; ``all_recipes=True`` instead
    yields every recipe tuple (naively enumerated, for small systems).

    Syntactic equations between destructor-free terms are unified first:
    when they have no unifier the system has no solution at all."""
    order = _dependency_order(C)
    if order is None:
        raise ValueError("constraint system is not well formed")
    for c in C.equations():
        if type(c) is Eq and _destructor_free(c.u, sig) and _destructor_free(c.v, sig):
            if unify(normalize(c.u, sig), normalize(c.v, sig)) is None:
                return
    eqs = C.equations()
    # check each (dis)equation as soon as all its variables are assigned
    ready_at: dict = {}
    assigned = set()
    for k, d in enumerate(order):
        assigned.add(d.x)
        for c in eqs:
            if c not in ready_at and (variables(c.u) | variables(c.v)) <= assigned:
                ready_at[c] = k
    if len(ready_at) != len(eqs):  # variables not introduced by any deduction
        return
    checks = [[c for c in eqs if ready_at[c] == k] for k in range(len(order))]
    if not order:
        if all(eq_mod_E(c.u, c.v, sig) == (type(c) is Eq) for c in eqs):
            yield Solution((), ())
        return

    def candidates(d, lam):
        sub = Frame((w, normalize(substitute(C.frame[w], lam), sig)) for w in sorted(d.D, key=lambda h: natural_key(h.name)))
        if all_recipes:
            for M in iter_recipes(sub.domain(), depth, sig):
                yield M, apply_recipe(M, sub, sig)
        else:
            rc = RecipeClasses([sub], depth, sig, domain=sub.domain())
            for i in range(len(rc)):
                yield rc.recipe(i), rc.value(i, 0)

    def go(k, theta, lam):
        if k == len(order):
            yield Solution(tuple(theta), tuple(sorted(lam.items(), key=lambda p: natural_key(p[0].name))))
            return
        d = order[k]
        for M, v in candidates(d, lam):
            lam[d.x] = v
            if all(eq_mod_E(substitute(c.u, lam), substitute(c.v, lam), sig) == (type(c) is Eq) for c in checks[k]):
                theta.append((d.X, M))
                yield from go(k + 1, theta, lam)
                theta.pop()
            del lam[d.x]

    yield from go(0, [], {})


def _destructor_free(t: Term, sig: Signature) -> bool:
    if type(t) is App:
        return t.sym not in sig.destructors and all(_destructor_free(a, sig) for a in t.args)
    return True


# ---------------------------------------------------------------------------
# symbolic processes


@dataclass(frozen=True)
class SymbolicProcess:
    procs: SimpleProcess
    system: ConstraintSystem

    @property
    def frame(self) -> Frame:
        return self.system.frame

    def __str__(self):
        return "(%s, %s, %d constraints)" % (self.procs, self.system.frame, len(self.system.constraints))


def initial_symbolic(A) -> SymbolicProcess:
    """Symbolic counterpart of an extended process with a ground frame."""
    return SymbolicProcess(A.procs, ConstraintSystem(A.frame, ()))


def fresh_input_vars(system: ConstraintSystem):
    """Fresh ``X#k``/``x#k`` numbered by the number of earlier inputs."""
    k = len(system.deductions())
    return SecondOrderVar("X#%d" % k), Var("x#%d" % k)


def fresh_output_handle(frame: Frame) -> Handle:
    return Handle("w#%d" % len(frame))


@dataclass(frozen=True)
class SymIn:
    chan: str
    X: SecondOrderVar

    def __str__(self):
        return "in(%s, %s)" % (self.chan, self.X)


@dataclass(frozen=True)
class SymOut:
    chan: str
    handle: Handle

    def __str__(self):
        return "out(%s, %s)" % (self.chan, self.handle)


@dataclass(frozen=True)
class _SymTau:
    branch: str  # "then" | "else"

    def __str__(self):
        return "tau"


def symbolic_step(sp: SymbolicProcess, sig: Signature = E_AENC) -> list:
    """All one-step successors ``(label, sp')`` of a symbolic process.

    Conditionals branch into a ``then`` successor guarded by an equation
    and an ``else`` successor guarded by a disequation; no satisfiability
    check is made."""
    out = []
    C = sp.system
    for chan, p in sp.procs:
        if type(p) is If:
            out.append((_SymTau("then"), SymbolicProcess(sp.procs.replace(chan, p.then), C.add(Eq(p.u, p.v)))))
            out.append((_SymTau("else"), SymbolicProcess(sp.procs.replace(chan, p.else_), C.add(Diseq(p.u, p.v)))))
        elif type(p) is In:
            X, x = fresh_input_vars(C)
            cont = subst_proc(p.cont, {p.var: x})
            ded = Deduction(frozenset(C.frame.domain()), X, x)
            out.append((SymIn(chan, X), SymbolicProcess(sp.procs.replace(chan, cont), C.add(ded))))
        elif type(p) is Out:
            w = fresh_output_handle(C.frame)
            nf = C.frame.extend(w, normalize(p.term, sig))
            out.append((SymOut(chan, w), SymbolicProcess(sp.procs.replace(chan, p.cont), C.with_frame(nf))))
    return out
