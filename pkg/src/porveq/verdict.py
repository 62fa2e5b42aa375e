"""Verdicts and witnesses shared by the oracle and the engines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class Witness:
    """A counterexample to an inclusion.

    ``trace`` is a tuple of printable steps (actions or blocks); ``side``
    names the process that can do something the other cannot match.
    ``reason`` is one of ``trace-unmatched``, ``solution-unmatched`` or
    ``frames-distinguished``; in the latter case ``test`` holds the
    distinguishing recipe pair."""

    trace: tuple
    side: str
    reason: str
    recipes: tuple = ()
    theta: tuple = ()  # ((var, recipe), ...) for symbolic modes
    test: Optional[tuple] = None

    def describe(self) -> str:
        tr = " . ".join(str(a) for a in self.trace) or "(empty trace)"
        out = "%s side, %s: %s" % (self.side, self.reason, tr)
        if self.theta:
            out += "  with " + ", ".join("%s -> %s" % (x, m) for x, m in self.theta)
        if self.test is not None:
            out += "  test %s = %s" % self.test
        return out

    def to_json(self) -> dict:
        d = {
            "trace": [str(a) for a in self.trace],
            "side": self.side,
            "reason": self.reason,
            "recipes": [str(r) for r in self.recipes],
        }
        if self.theta:
            d["theta"] = {str(x): str(m) for x, m in self.theta}
        if self.test is not None:
            d["test"] = [str(self.test[0]), str(self.test[1])]
        return d


@dataclass
class Verdict:
    result: str  # equivalent | included | not-included
    mode: str
    depth: int
    visible_bound: Optional[int] = None
    witness: Optional[Witness] = None
    witnesses: list = field(default_factory=list)
    explored: int = 0
    direction: str = "equivalence"

    @property
    def holds(self) -> bool:
        return self.result != "not-included"

    def summary(self) -> str:
        if self.holds:
            bounds = "depth %d" % self.depth
            if self.visible_bound is not None:
                bounds += ", %d visible actions" % self.visible_bound
            return "%s (bounded, %s)" % (self.result, bounds)
        return "not-included"

    def to_json(self) -> dict:
        return {
            "result": self.result,
            "mode": self.mode,
            "direction": self.direction,
            "bounds": {"recipe_depth": self.depth, "visible_bound": self.visible_bound},
            "explored_pairs": self.explored,
            "witness": None if self.witness is None else self.witness.to_json(),
            "witnesses": [w.to_json() for w in self.witnesses],
        }
