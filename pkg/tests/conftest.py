"""Shared helpers: loading bundled specs and writing terms as strings."""

from __future__ import annotations

import re
from importlib import resources

import pytest

from porveq.process_calculus import parse_spec
from porveq.reduced_semantics import ChannelOrder
from porveq.term_algebra import E_AENC, App, Handle, Name, Var

_TOK = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_'#]*|[(),])")


def term(text: str, variables=()):
    """Parse ``aenc(pair(w5,w1),w2)``-style text.  ``w<k>``/``w#<k>`` are
    handles, public constants and function symbols come from the default
    theory, identifiers listed in ``variables`` are first-order variables
    and every other identifier is a name."""
    toks = _TOK.findall(text)
    pos = 0

    def parse():
        nonlocal pos
        tok = toks[pos]
        pos += 1
        if pos < len(toks) and toks[pos] == "(":
            pos += 1
            args = [parse()]
            while toks[pos] == ",":
                pos += 1
                args.append(parse())
            assert toks[pos] == ")", text
            pos += 1
            return App(tok, args)
        if re.fullmatch(r"w#?\d+", tok):
            return Handle(tok)
        if tok in variables:
            return Var(tok)
        if E_AENC.kind(tok) is not None:
            return App(tok, ())
        return Name(tok)

    t = parse()
    assert pos == len(toks), "trailing input in %r" % text
    return t


def bundled(name: str) -> str:
    return resources.files("porveq").joinpath("specs", name).read_text()


def load_query(spec_name: str, label=None, **defines):
    spec = parse_spec(bundled(spec_name), {k: str(v) for k, v in defines.items()} or None)
    q = spec.query(label)
    A, B = spec.query_processes(q)
    return spec, A, B, ChannelOrder(spec.channel_order())


@pytest.fixture(scope="session")
def private_auth():
    return parse_spec(bundled("private_auth.spec"))
