"""Constraint systems, solutions, the bounded solver and symbolic steps."""

from __future__ import annotations

import random
from itertools import product

import pytest
from hypothesis import given, settings

from conftest import load_query, term
from procgen import random_pair, seeds

from porveq.process_calculus import ExtendedProcess, SimpleProcess, parse_process
from porveq.symbolic_core import (
    ConstraintSystem,
    Deduction,
    Diseq,
    Eq,
    SecondOrderVar,
    SymIn,
    SymOut,
    check_solution,
    initial_symbolic,
    solve,
    symbolic_step,
    well_formed,
)
from porveq.term_algebra import Frame, Handle, Name, Var, iter_recipes, normalize

Y, y = SecondOrderVar("Y"), Var("y")


def request_system(frames, accepted_key="pk(ska)"):
    """One input on the initial frame, accepted when its second component
    decrypts to ``accepted_key``."""
    phi0 = frames["phi0"]
    return ConstraintSystem(
        phi0,
        (
            Deduction(frozenset(phi0.domain()), Y, y),
            Eq(term("snd(adec(y, skb))", ["y"]), term(accepted_key)),
        ),
    )


def test_request_system_is_well_formed(private_auth):
    assert well_formed(request_system(private_auth.frames))
    assert well_formed(ConstraintSystem())


def test_duplicate_introduction_is_ill_formed(private_auth):
    phi0 = private_auth.frames["phi0"]
    D = frozenset(phi0.domain())
    C = ConstraintSystem(phi0, (Deduction(D, Y, y), Deduction(D, SecondOrderVar("Z"), y)))
    assert not well_formed(C)


def test_forwarded_request_is_a_solution(private_auth):
    C = request_system(private_auth.frames)
    lam = check_solution(C, {Y: term("aenc(pair(w1,w1),w2)")})
    assert lam == {y: term("aenc(pair(pk(ska),pk(ska)),pk(skb))")}


def test_forwarded_request_fails_for_the_other_key(private_auth):
    C = request_system(private_auth.frames, "pk(ska')")
    assert check_solution(C, {Y: term("aenc(pair(w1,w1),w2)")}) is None


def test_trivial_equation_has_empty_solution():
    C = ConstraintSystem(Frame(), (Eq(Name("n"), Name("n")),))
    assert check_solution(C, {}) == {}


def test_domain_mismatch_is_an_error(private_auth):
    C = request_system(private_auth.frames)
    with pytest.raises(ValueError):
        check_solution(C, {})


def test_recipe_must_use_available_handles(private_auth):
    phi = private_auth.frames["phi"]
    C = ConstraintSystem(phi, (Deduction(frozenset([Handle("w0")]), Y, y),))
    assert check_solution(C, {Y: Handle("w3")}) is None
    assert check_solution(C, {Y: Handle("w0")}) == {y: phi[Handle("w0")]}


def test_solver_finds_forwarded_request(private_auth):
    C = request_system(private_auth.frames)
    thetas = [s.theta_map()[Y] for s in solve(C, 3)]
    assert term("aenc(pair(w1,w1),w2)") in thetas


def test_solver_respects_the_other_key(private_auth):
    C = request_system(private_auth.frames, "pk(ska')")
    assert all(s.theta_map()[Y] != term("aenc(pair(w1,w1),w2)") for s in solve(C, 3, all_recipes=True))


def test_unsatisfiable_system_has_no_solution():
    C = ConstraintSystem(Frame(), (Eq(Name("n"), Name("m")),))
    assert list(solve(C, 3)) == []


# ---------------------------------------------------------------------------
# symbolic steps


def test_symbolic_request_then_reply(private_auth):
    _, A, _, _ = load_query("private_auth.spec", "Q0_vs_Q0prime")
    sp = initial_symbolic(A)
    (lab1, sp1), = symbolic_step(sp)
    assert isinstance(lab1, SymIn)
    then = [s for lab, s in symbolic_step(sp1) if lab.branch == "then"][0]
    (lab3, sp3), = symbolic_step(then)
    assert isinstance(lab3, SymOut) and lab3.handle == Handle("w#3")
    C = sp3.system
    d, eq = C.constraints
    assert d.D == frozenset(private_auth.frames["phi0"].domain())
    assert eq == Eq(term("snd(adec(x#0, skb))", ["x#0"]), term("pk(ska)"))
    lam = check_solution(C, {d.X: term("aenc(pair(w1,w1),w2)")})
    assert lam is not None
    reply = term("aenc(pair(fst(adec(x#0, skb)), pair(n_b, pk(skb))), pk(ska))", ["x#0"])
    assert C.frame[Handle("w#3")] == normalize(reply)


def test_output_extends_frame_with_next_handle():
    p = parse_process("out(c, n). 0", "c", ["n"])
    sp = initial_symbolic(ExtendedProcess(SimpleProcess([("c", p)]), Frame()))
    (lab, sp2), = symbolic_step(sp)
    assert lab.handle == Handle("w#0")
    assert sp2.frame == Frame([("w#0", Name("n"))])


def test_else_branch_of_trivial_test_is_unsatisfiable():
    p = parse_process("if n = n then 0 else 0", "c", ["n"])
    sp = initial_symbolic(ExtendedProcess(SimpleProcess([("c", p)]), Frame()))
    els = [s for lab, s in symbolic_step(sp) if lab.branch == "else"][0]
    assert Diseq(Name("n"), Name("n")) in els.system.constraints
    assert list(solve(els.system, 2)) == []


# ---------------------------------------------------------------------------
# properties on systems reached by random symbolic walks


def random_walk(seed: int, max_steps: int = 6):
    rng = random.Random(seed)
    _, A, _ = random_pair(seed)
    sp = initial_symbolic(A)
    states = [sp]
    for _ in range(rng.randint(1, max_steps)):
        succ = symbolic_step(sp)
        if not succ:
            break
        sp = rng.choice(succ)[1]
        states.append(sp)
    return states


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_steps_preserve_well_formedness_and_variable_scope(seed):
    for sp in random_walk(seed):
        assert well_formed(sp.system)
        assert sp.procs.free_vars() <= sp.system.fv1()


def brute_force_lambdas(C, depth):
    deds = C.deductions()
    pools = [list(iter_recipes(sorted(d.D, key=lambda h: h.name), depth)) for d in deds]
    out = set()
    for combo in product(*pools):
        lam = check_solution(C, {d.X: M for d, M in zip(deds, combo)})
        if lam is not None:
            out.add(frozenset(lam.items()))
    return out


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_solver_agrees_with_brute_force(seed):
    for sp in random_walk(seed, 4):
        C = sp.system
        if len(C.deductions()) > 2 or len(C.frame) > 2:
            continue
        got = {frozenset(s.lam) for s in solve(C, 2)}
        assert got == brute_force_lambdas(C, 2)
        for s in solve(C, 2):
            assert check_solution(C, s.theta_map()) == s.lam_map()
