"""Terms, rewriting, unification, recipes, deduction and static equivalence."""

from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

import pytest
from conftest import term

from porveq.term_algebra import (
    E_AENC,
    App,
    Distinguished,
    Equivalent,
    Frame,
    Handle,
    Name,
    RecipeClasses,
    UnknownHandleError,
    Var,
    apply_recipe,
    deducible,
    distinguishes,
    eq_mod_E,
    height,
    is_normal,
    iter_recipes,
    normalize,
    static_equiv,
    substitute,
    unify,
)

# ---------------------------------------------------------------------------
# strategies

NAMES = [Name(n) for n in ("a", "b", "k", "k2")]
CONSTS = [App("ok"), App("start")]


def _grow(children):
    return st.one_of(
        st.builds(lambda s, t: App("pair", (s, t)), children, children),
        st.builds(lambda s, t: App("aenc", (s, t)), children, children),
        st.builds(lambda s: App("pk", (s,)), children),
        st.builds(lambda s, t: App("adec", (s, t)), children, children),
        st.builds(lambda s: App("fst", (s,)), children),
        st.builds(lambda s: App("snd", (s,)), children),
    )


ground_terms = st.recursive(st.sampled_from(NAMES + CONSTS), _grow, max_leaves=10)
VARS = [Var("x"), Var("y"), Var("z")]
constructor_terms = st.recursive(
    st.sampled_from(NAMES[:2] + VARS),
    lambda c: st.one_of(
        st.builds(lambda s, t: App("pair", (s, t)), c, c),
        st.builds(lambda s: App("pk", (s,)), c),
    ),
    max_leaves=6,
)


def outermost_normalize(t):
    """Independent reducer: repeatedly rewrite the outermost-leftmost redex
    (the engine rewrites innermost first)."""
    while True:
        r = _outer_step(t)
        if r is None:
            return t
        t = r


def _root_step(t):
    if type(t) is not App:
        return None
    if t.sym in ("fst", "snd") and type(t.args[0]) is App and t.args[0].sym == "pair":
        return t.args[0].args[0 if t.sym == "fst" else 1]
    if t.sym == "adec":
        c, k = t.args
        if type(c) is App and c.sym == "aenc":
            key = c.args[1]
            if type(key) is App and key.sym == "pk" and key.args[0] == k:
                return c.args[0]
    return None


def _outer_step(t):
    r = _root_step(t)
    if r is not None:
        return r
    if type(t) is App:
        for i, a in enumerate(t.args):
            r = _outer_step(a)
            if r is not None:
                return App(t.sym, t.args[:i] + (r,) + t.args[i + 1 :])
    return None


# ---------------------------------------------------------------------------
# rewriting


def test_normalize_decrypts_and_projects():
    c = term("aenc(pair(n, pk(ska)), pk(skb))")
    assert normalize(App("adec", (c, Name("skb")))) == term("pair(n, pk(ska))")
    assert normalize(term("snd(adec(aenc(pair(n, pk(ska)), pk(skb)), skb))")) == term("pk(ska)")
    assert normalize(Name("n")) == Name("n")


def test_stuck_destructors_stay_in_normal_form():
    assert normalize(term("adec(n, k)")) == term("adec(n, k)")
    assert normalize(term("adec(aenc(n, pk(k)), k2)")) == term("adec(aenc(n, pk(k)), k2)")
    assert is_normal(term("fst(n)"))


def test_eq_mod_E():
    assert eq_mod_E(term("snd(adec(aenc(pair(n,pk(ska)),pk(skb)),skb))"), term("pk(ska)"))
    assert eq_mod_E(Name("n"), Name("n"))
    assert not eq_mod_E(term("aenc(n, pk(k))"), term("aenc(n, pk(k2))"))


@given(ground_terms)
def test_normalize_is_idempotent(t):
    n = normalize(t)
    assert normalize(n) == n
    assert is_normal(n)


@given(ground_terms)
def test_rewriting_strategies_agree(t):
    assert normalize(t) == outermost_normalize(t)


# ---------------------------------------------------------------------------
# unification


def test_unify_examples():
    x, y = Var("x"), Var("y")
    assert unify(App("pair", (x, Name("n"))), App("pair", (Name("m"), y))) == {x: Name("m"), y: Name("n")}
    assert unify(x, x) == {}
    assert unify(Name("n"), Name("m")) is None


def test_unify_occurs_check():
    x = Var("x")
    assert unify(x, App("pk", (x,))) is None


@given(constructor_terms, constructor_terms)
def test_unifier_unifies_and_is_most_general(t, u):
    s = unify(t, u)
    if s is None:
        # no ground instance over the sampled atoms can be a unifier either
        for a in NAMES[:2]:
            for b in NAMES[:2]:
                for c in NAMES[:2]:
                    g = dict(zip(VARS, (a, b, c)))
                    assert substitute(t, g) != substitute(u, g)
        return
    assert substitute(t, s) == substitute(u, s)
    # any ground unifier factors through s: grounding s's image gives it back
    for a in NAMES[:2]:
        g = {v: a for v in VARS}
        ti, ui = substitute(t, g), substitute(u, g)
        if ti == ui:
            composed = {v: substitute(substitute(v, s), g) for v in VARS}
            assert substitute(t, composed) == ti


# ---------------------------------------------------------------------------
# recipes and deduction


def test_recipe_height():
    assert height(Handle("w1")) == 1
    assert height(App("ok")) == 1
    assert height(term("aenc(pair(w5,w1),w2)")) == 3


def test_apply_recipe(private_auth):
    phi_plus = private_auth.frames["phi_plus"]
    phi0 = private_auth.frames["phi0"]
    assert apply_recipe(term("aenc(pair(w5, w1), w2)"), phi_plus) == term("aenc(pair(n_a, pk(ska)), pk(skb))")
    assert apply_recipe(Handle("w0"), phi0) == term("pk(ska')")
    assert apply_recipe(App("start"), Frame()) == App("start")
    with pytest.raises(UnknownHandleError):
        apply_recipe(Handle("w9"), phi0)


def test_deducible(private_auth):
    phi0 = private_auth.frames["phi0"]
    phi_plus = private_auth.frames["phi_plus"]
    assert deducible(phi0, term("pk(ska)"), 1) == Handle("w1")
    target = term("aenc(pair(n_a,pk(ska)),pk(skb))")
    assert deducible(phi_plus, target, 3) in (term("aenc(pair(w5,w1),w2)"), Handle("w3"))
    assert deducible(phi0, Name("fresh"), 3) is None


def test_iter_recipes_order_is_height_first():
    dom = [Handle("w0")]
    rs = list(iter_recipes(dom, 2))
    hs = [height(r) for r in rs]
    assert hs == sorted(hs)
    assert rs[0] == Handle("w0") or height(rs[0]) == 1


small_frames = st.lists(ground_terms, min_size=1, max_size=3).map(
    lambda ts: Frame((Handle("w%d" % i), normalize(t)) for i, t in enumerate(ts))
)


@settings(max_examples=40, deadline=None)
@given(small_frames, ground_terms)
def test_deducible_is_sound(phi, t):
    t = normalize(t)
    M = deducible(phi, t, 2)
    if M is not None:
        assert apply_recipe(M, phi) == t
        assert height(M) <= 2
    else:
        assert all(apply_recipe(R, phi) != t for R in iter_recipes(phi.domain(), 2))


@settings(max_examples=30, deadline=None)
@given(small_frames, small_frames)
def test_recipe_classes_match_naive_enumeration(phi, psi):
    if len(psi) != len(phi):
        psi = Frame(zip(phi.domain(), [t for _, t in psi.items()] * 3))
    rc = RecipeClasses([phi, psi], 2, E_AENC)
    naive = {}
    for R in iter_recipes(phi.domain(), 2):
        v = (apply_recipe(R, phi), apply_recipe(R, psi))
        naive.setdefault(v, R)
    got = {(rc.value(i, 0), rc.value(i, 1)): rc.recipe(i) for i in range(len(rc))}
    assert set(got) == set(naive)
    # the class representative is the first recipe of the naive order
    for v, R in naive.items():
        assert got[v] == R


# ---------------------------------------------------------------------------
# static equivalence


def test_static_equivalence_of_honest_and_decoy_frames(private_auth):
    f = private_auth.frames
    assert isinstance(static_equiv(f["phi"], f["phi_prime"], 3), Equivalent)


def test_leaked_nonce_distinguishes_frames(private_auth):
    f = private_auth.frames
    v = static_equiv(f["phi_plus"], f["phi_plus_prime"], 3)
    assert isinstance(v, Distinguished)
    assert {v.M, v.N} == {term("aenc(pair(w5,w1),w2)"), Handle("w3")}
    assert distinguishes(v.M, v.N, f["phi_plus"], f["phi_plus_prime"])


def test_static_equivalence_is_reflexive(private_auth):
    phi0 = private_auth.frames["phi0"]
    assert static_equiv(phi0, phi0, 4)


def test_domain_mismatch_distinguishes(private_auth):
    f = private_auth.frames
    assert not static_equiv(f["phi0"], f["phi"], 2)


@settings(max_examples=40, deadline=None)
@given(small_frames, small_frames)
def test_static_equivalence_symmetric_with_replayable_witness(phi, psi):
    psi = Frame(zip(phi.domain(), ([t for _, t in psi.items()] * 3)[: len(phi)]))
    a, b = static_equiv(phi, psi, 2), static_equiv(psi, phi, 2)
    assert bool(a) == bool(b)
    if not a:
        assert distinguishes(a.M, a.N, phi, psi)
        assert distinguishes(b.M, b.N, psi, phi)
