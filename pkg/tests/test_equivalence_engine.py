"""Verdicts, witnesses and trace counts under every semantics."""

from __future__ import annotations

import json
from math import comb, factorial

import pytest
from hypothesis import given, settings

from conftest import load_query
from procgen import random_pair, seeds

from porveq.concrete_semantics import oracle_trace_equiv, replay_witness
from porveq.equivalence_engine import (
    MODES,
    SYMBOLIC_MODES,
    NotInitialError,
    check_equivalence,
    check_inclusion,
    count_traces,
)
from porveq.process_calculus import ExtendedProcess, SimpleProcess, parse_spec
from porveq.reduced_semantics import ChannelOrder, instantiate_trace
from porveq.verdict import Witness


def concrete_witness(w: Witness) -> Witness:
    """Symbolic witnesses become concrete by instantiating their recipes."""
    if not w.theta:
        return w
    return Witness(instantiate_trace(w.trace, dict(w.theta)), w.side, w.reason, w.recipes, (), w.test)


def replays(A, B, v, depth) -> bool:
    return all(replay_witness(A, B, concrete_witness(w), depth) for w in v.witnesses)


# ---------------------------------------------------------------------------
# the forwarding attack on the responder without decoy


@pytest.fixture(scope="module")
def q0():
    return load_query("private_auth.spec", "Q0_vs_Q0prime")


@pytest.mark.parametrize("mode", MODES)
def test_forwarding_attack_found_in_every_mode(q0, mode):
    _, A, B, order = q0
    v = check_equivalence(A, B, mode, 3, None, order)
    assert v.result == "not-included"
    assert replays(A, B, v, 3)
    recipes = {str(r) for w in v.witnesses for r in (w.recipes or ())}
    recipes |= {str(M) for w in v.witnesses for _, M in w.theta}
    assert "aenc(pair(w1,w1),w2)" in recipes


@pytest.mark.parametrize("mode", SYMBOLIC_MODES)
def test_symbolic_witness_is_an_unmatched_solution(q0, mode):
    _, A, B, order = q0
    v = check_inclusion(A, B, mode, 3, None, order)
    w = v.witness
    assert w.side == "left" and w.reason == "solution-unmatched"
    (block,) = w.trace
    assert block.chan == "c_B" and len(block.inputs) == 1 and [str(h) for h in block.outputs] == ["w#3"]
    thetas = [dict(x.theta) for x in v.witnesses]
    assert any(str(t[block.inputs[0]]) == "aenc(pair(w1,w1),w2)" for t in thetas)


def test_witnesses_are_deterministic(q0):
    _, A, B, order = q0
    a = check_equivalence(A, B, "reduced1", 3, None, order)
    b = check_equivalence(A, B, "reduced1", 3, None, order)
    assert [w.describe() for w in a.witnesses] == [w.describe() for w in b.witnesses]


def test_verdict_serialises(q0):
    _, A, B, order = q0
    v = check_equivalence(A, B, "reduced2", 3, None, order)
    doc = json.loads(json.dumps(v.to_json()))
    assert doc["result"] == "not-included"
    assert doc["bounds"]["recipe_depth"] == 3
    assert doc["witness"]["reason"] == "solution-unmatched"


# ---------------------------------------------------------------------------
# equivalent pairs


@pytest.mark.parametrize("mode", MODES)
def test_decoy_responder_equivalent_at_depth_2(mode):
    _, A, B, order = load_query("private_auth.spec", "Q_vs_Qprime")
    v = check_equivalence(A, B, mode, 2, None, order)
    assert v.result == "equivalent"
    assert "bounded" in v.summary()


@pytest.mark.parametrize("mode", MODES)
def test_process_is_equivalent_to_itself(q0, mode):
    _, A, _, order = q0
    assert check_equivalence(A, A, mode, 2, None, order).holds


@pytest.mark.parametrize("mode", MODES)
def test_empty_processes_are_equivalent(private_auth, mode):
    E = ExtendedProcess(SimpleProcess(), private_auth.frames["phi0"])
    assert check_equivalence(E, E, mode, 2).result == "equivalent"


def test_full_protocol_reductions_explore_less():
    _, A, B, order = load_query("private_auth.spec", "PQ_vs_PQprime")
    vs = {m: check_equivalence(A, B, m, 2, None, order) for m in ("compressed", "symbolic_compressed", "reduced2", "reduced1")}
    assert all(v.result == "equivalent" for v in vs.values())
    assert vs["reduced2"].explored < vs["compressed"].explored
    assert vs["reduced1"].explored < vs["compressed"].explored
    assert vs["symbolic_compressed"].explored == vs["compressed"].explored


@pytest.mark.parametrize("mode", MODES)
def test_full_protocol_without_decoy_is_attacked(mode):
    _, A, B, order = load_query("private_auth.spec", "PQ0_vs_PQ0prime")
    v = check_equivalence(A, B, mode, 2, None, order)
    assert v.result == "not-included"
    assert replays(A, B, v, 2)


def test_block_modes_reject_non_initial_processes(private_auth):
    spec = parse_spec(open_bundled() + "\nquery equiv raw: { P(ska, pk(skb)) } phi0 { P(ska, pk(skb)) } phi0\n")
    A, B = spec.query_processes(spec.query("raw"))
    with pytest.raises(NotInitialError):
        check_equivalence(A, B, "compressed", 2)
    assert check_equivalence(A, B, "concrete", 2, 4).holds


def open_bundled():
    from conftest import bundled

    return bundled("private_auth.spec")


def test_unknown_mode_is_rejected(q0):
    _, A, B, _ = q0
    with pytest.raises(ValueError):
        check_equivalence(A, B, "fast", 2)


# ---------------------------------------------------------------------------
# counting


@pytest.mark.parametrize("n", [1, 2, 3])
def test_parallel_family_counts(n):
    _, A, _, order = load_query("parallel_n.spec", n=n)
    got = [count_traces(A, m, 2, None, order) for m in MODES]
    assert got == [factorial(2 * n) // 2**n, factorial(n), factorial(n), 1, 1]


@pytest.mark.parametrize("n", [1, 2])
def test_sequential_family_counts(n):
    _, A, _, order = load_query("sequential_n.spec", n=n)
    got = [count_traces(A, m, 2, None, order) for m in MODES]
    assert got == [comb(4 * n, 2 * n), comb(2 * n, n), comb(2 * n, n), 1, 1]


def test_second_order_reading_admits_spurious_dependencies_at_depth_3():
    # fst(pair(ok, w)) mentions w without needing it, so the second-order
    # reading keeps every interleaving while the first-order one does not
    _, A, _, order = load_query("parallel_n.spec", n=2)
    assert count_traces(A, "reduced2", 3, None, order) == 2
    assert count_traces(A, "reduced1", 3, None, order) == 1


def test_single_role_has_one_trace_in_every_mode():
    _, A, _, order = load_query("parallel_n.spec", n=1)
    assert {count_traces(A, m, 2, None, order) for m in MODES} == {1}


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_counts_shrink_along_the_reductions(seed):
    spec, A, _ = random_pair(seed, max_actions=3)
    order = ChannelOrder(spec.channel_order())
    c = {m: count_traces(A, m, 1, 6, order) for m in MODES}
    assert c["reduced1"] <= c["reduced2"] <= c["symbolic_compressed"]
    assert c["compressed"] <= c["concrete"]


# ---------------------------------------------------------------------------
# cross-checks between semantics on random pairs


def verdicts(seed):
    spec, A, B = random_pair(seed)
    order = ChannelOrder(spec.channel_order())
    out = {"oracle": oracle_trace_equiv(A, B, 6, 2).holds}
    for m in MODES:
        out[m] = check_equivalence(A, B, m, 2, 6, order).holds
    return out


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_semantics_agree_on_random_pairs(seed):
    v = verdicts(seed)
    assert v["oracle"] == v["compressed"] == v["symbolic_compressed"]
    assert v["symbolic_compressed"] == v["reduced2"] == v["reduced1"]
    assert v["concrete"] == v["oracle"]
