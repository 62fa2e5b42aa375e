"""Random small protocols, emitted as spec text.

Each generated pair shares its shape; the right process is either the left
one, or the left one with one name swapped, which makes both equivalent and
inequivalent pairs common.
"""

from __future__ import annotations

import random

from hypothesis import strategies as st

from porveq.process_calculus import parse_spec

NAMES = ("n1", "n2")


def _term(rng: random.Random, vars_: list, depth: int) -> str:
    atoms = list(NAMES) + ["ok"] + vars_
    if depth <= 0 or rng.random() < 0.45:
        return rng.choice(atoms)
    kind = rng.choice(("pair", "aenc", "pk", "adec", "fst", "snd"))
    if kind == "pair":
        return "pair(%s, %s)" % (_term(rng, vars_, depth - 1), _term(rng, vars_, depth - 1))
    if kind == "aenc":
        return "aenc(%s, pk(%s))" % (_term(rng, vars_, depth - 1), rng.choice(NAMES))
    if kind == "pk":
        return "pk(%s)" % rng.choice(NAMES)
    if kind == "adec":
        return "adec(%s, %s)" % (_term(rng, vars_, depth - 1), rng.choice(NAMES))
    return "%s(%s)" % (kind, _term(rng, vars_, depth - 1))


def _body(rng: random.Random, chan: str, budget: int, vars_: list, first: bool) -> str:
    if budget <= 0:
        return "0"
    choice = "in" if first else rng.choice(("in", "out", "out", "if", "stop"))
    if choice == "stop":
        return "0"
    if choice == "in":
        x = "x%s_%d" % (chan[1:], len(vars_))
        return "in(%s, %s). %s" % (chan, x, _body(rng, chan, budget - 1, vars_ + [x], False))
    if choice == "out":
        return "out(%s, %s). %s" % (chan, _term(rng, vars_, 2), _body(rng, chan, budget - 1, vars_, False))
    u, v = _term(rng, vars_, 2), rng.choice(["ok"] + list(NAMES) + ["pk(n1)"])
    then = _body(rng, chan, budget - 1, vars_, False)
    else_ = _body(rng, chan, budget - 1, vars_, False) if rng.random() < 0.5 else "0"
    return "if %s = %s then %s else %s" % (u, v, then, else_)


def _mutate(text: str, rng: random.Random) -> str:
    spots = [i for i in range(len(text) - 1) if text[i] == "n" and text[i + 1] in "12" and (i == 0 or not text[i - 1].isalnum())]
    if not spots or rng.random() < 0.3:
        return text
    i = rng.choice(spots)
    return text[: i + 1] + ("2" if text[i + 1] == "1" else "1") + text[i + 2 :]


def random_pair_spec(seed: int, max_procs: int = 2, max_actions: int = 4) -> str:
    rng = random.Random(seed)
    nproc = rng.randint(1, max_procs)
    left = []
    for k in range(1, nproc + 1):
        chan = "c%d" % k
        left.append("process L%d on %s = %s" % (k, chan, _body(rng, chan, rng.randint(1, max_actions), [], True)))
    right = [_mutate(p.replace("process L", "process R", 1), rng) for p in left]
    frame = rng.choice(("{ }", "{ w0 -> pk(n1) }", "{ w0 -> pk(n2) }"))
    lines = ["names %s" % ", ".join(NAMES), "frame phi %s" % frame] + left + right
    lines.append(
        "query equiv random: { %s } phi { %s } phi"
        % (", ".join("L%d" % k for k in range(1, nproc + 1)), ", ".join("R%d" % k for k in range(1, nproc + 1)))
    )
    return "\n".join(lines) + "\n"


def random_pair(seed: int, **kw):
    spec = parse_spec(random_pair_spec(seed, **kw))
    A, B = spec.query_processes(spec.query())
    return spec, A, B


seeds = st.integers(min_value=0, max_value=2**32 - 1)
