"""Concrete semantics: steps, runs, the brute-force oracle, and invariance
of runs under swapping independent adjacent actions."""

from __future__ import annotations

import random

from hypothesis import given, settings

from conftest import load_query, term
from procgen import random_pair, seeds

from porveq.concrete_semantics import (
    InAct,
    OutAct,
    fresh_handle,
    independent_actions,
    oracle_trace_equiv,
    replay_witness,
    run,
    step,
    tau_closure,
)
from porveq.process_calculus import ExtendedProcess, In, Out, SimpleProcess, parse_process, parse_spec
from porveq.term_algebra import Frame, Handle, iter_recipes


def _single(body, chan="c", names=("n",)):
    p = parse_process(body, chan, names)
    return ExtendedProcess(SimpleProcess([(chan, p)]), Frame())


def test_input_then_output_step():
    A = _single("in(c, x). out(c, pair(x, n)). 0")
    (A1,) = step(A, InAct("c", term("ok")))
    (A2,) = step(A1, OutAct("c", Handle("w#0")))
    assert A2.frame[Handle("w#0")] == term("pair(ok, n)")
    assert not A2.procs


def test_input_with_unknown_handle_is_not_enabled():
    A = _single("in(c, x). 0")
    assert step(A, InAct("c", Handle("w7"))) == set()


def test_conditionals_are_silent():
    A = _single("in(c, x). if x = ok then out(c, n). 0 else 0")
    good = run(A, [InAct("c", term("ok")), OutAct("c", Handle("w#0"))])
    bad = run(A, [InAct("c", term("start")), OutAct("c", Handle("w#0"))])
    assert good and not bad


def test_fresh_handles_are_numbered_by_position():
    assert fresh_handle(Frame()) == Handle("w#0")
    assert fresh_handle(Frame([("w0", term("n"))])) == Handle("w#1")


def test_action_independence():
    a = InAct("c1", term("ok"))
    b = OutAct("c2", Handle("w#1"))
    assert independent_actions(a, b)
    assert not independent_actions(InAct("c1", Handle("w#1")), b)
    assert not independent_actions(a, InAct("c1", term("start")))


# ---------------------------------------------------------------------------
# oracle


def test_oracle_finds_forwarding_attack_and_witnesses_replay():
    _, A, B, _ = load_query("private_auth.spec", "Q0_vs_Q0prime")
    v = oracle_trace_equiv(A, B, 2, 3)
    assert v.result == "not-included"
    recipes = {str(r) for w in v.witnesses for r in w.recipes}
    assert "aenc(pair(w1,w1),w2)" in recipes
    for w in v.witnesses:
        assert replay_witness(A, B, w, 3)


def test_oracle_accepts_identical_processes():
    _, A, _, _ = load_query("private_auth.spec", "Q_vs_Qprime")
    assert oracle_trace_equiv(A, A, 2, 2).holds


def test_oracle_sees_extra_output():
    spec = parse_spec("names n\nframe e { }\nprocess P on c = in(c, x). 0\n"
                      "process Q on c = in(c, x). out(c, n). 0\nquery equiv q: { P } e { Q } e")
    A, B = spec.query_processes(spec.query())
    v = oracle_trace_equiv(A, B, 4, 2)
    assert not v.holds and v.witness.side == "right"


# ---------------------------------------------------------------------------
# permutation invariance


def random_executable_trace(A, rng: random.Random, length: int, depth: int = 2):
    """Walk ``A`` choosing enabled visible actions at random."""
    tr = []
    states = tau_closure([A])
    for _ in range(length):
        options = []
        for s in states:
            for chan, p in s.procs:
                if type(p) is In:
                    options.append(("in", chan, s.frame))
                elif type(p) is Out:
                    options.append(("out", chan, s.frame))
        if not options:
            break
        kind, chan, frame = rng.choice(sorted(options, key=lambda o: (o[0], o[1])))
        if kind == "in":
            recipes = list(iter_recipes(frame.domain(), depth))
            act = InAct(chan, rng.choice(recipes))
        else:
            act = OutAct(chan, fresh_handle(frame))
        nxt = run(A, tr + [act])
        if not nxt:
            break
        tr.append(act)
        states = nxt
    return tr


def random_independent_swaps(tr, rng: random.Random, rounds: int = 8):
    tr = list(tr)
    for _ in range(rounds):
        spots = [i for i in range(len(tr) - 1) if independent_actions(tr[i], tr[i + 1])]
        if not spots:
            break
        i = rng.choice(spots)
        tr[i], tr[i + 1] = tr[i + 1], tr[i]
    return tr


def permutation_violations(seed: int) -> int:
    """Runs of a random executable trace and of a permutation of it by
    independent adjacent swaps; 1 if they differ."""
    rng = random.Random(seed)
    _, A, _ = random_pair(seed)
    tr = random_executable_trace(A, rng, rng.randint(1, 6))
    tr2 = random_independent_swaps(tr, rng)
    return int(run(A, tr) != run(A, tr2))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_independent_swaps_preserve_runs(seed):
    assert permutation_violations(seed) == 0


def test_swap_of_dependent_actions_can_change_run():
    _, A, _, _ = load_query("private_auth.spec", "running")
    # the role on c_B cannot read w#3 before c_A outputs it
    tr = [InAct("c_A", term("start")), OutAct("c_A", Handle("w#3")), InAct("c_B", Handle("w#3"))]
    assert run(A, tr)
    assert not independent_actions(tr[1], tr[2])
    assert not run(A, [tr[0], tr[2], tr[1]])
