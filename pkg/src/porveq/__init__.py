"""porveq: bounded trace-equivalence checking for simple processes.

Semantics available: ``concrete``, ``compressed``, ``symbolic_compressed``,
``reduced2`` and ``reduced1``.  See :mod:`porveq.equivalence_engine`.
"""

__version__ = "0.1.0"
