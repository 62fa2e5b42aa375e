"""Pure-Python recipe-class saturation kernel.

Terms are hash-consed into integer ids by :class:`TermTable`.  A node is
either a leaf ``(-1, payload)`` or an application ``(sym, child_ids)``.
Destructor rules are compiled into small tuple patterns:

* ``(0, k)``            -- pattern variable number ``k``
* ``(1, sym, subpats)`` -- application of symbol ``sym``

:func:`saturate` builds, level by level, every attacker recipe up to a
height bound, but keeps only one representative per *value vector* (the
tuple of normal forms the recipe takes in each of several frames).  The
representative is always the smallest recipe in enumeration order.

The compiled twin lives in ``_kernel_c.pyx`` and must stay behaviourally
identical; ``tests/test_kernel.py`` checks both against each other.
"""

from __future__ import annotations

from itertools import product

INF = 1 << 30


class TermTable:
    def __init__(self, rules=None):
        self.key2id = {}
        self.nodes = []
        self.rules = rules or {}

    def __len__(self):
        return len(self.nodes)

    def leaf(self, payload):
        key = (-1, payload)
        i = self.key2id.get(key)
        if i is None:
            i = len(self.nodes)
            self.key2id[key] = i
            self.nodes.append(key)
        return i

    def app(self, sym, children):
        key = (sym, children)
        i = self.key2id.get(key)
        if i is None:
            i = len(self.nodes)
            self.key2id[key] = i
            self.nodes.append(key)
        return i

    def reduce(self, sym, children):
        """Apply ``sym`` to normal children and rewrite at the head."""
        rules = self.rules.get(sym)
        if rules is not None:
            for pats, rhs in rules:
                binding = {}
                ok = True
                for p, c in zip(pats, children):
                    if not self._match(p, c, binding):
                        ok = False
                        break
                if ok:
                    return self._build(rhs, binding)
        return self.app(sym, children)

    def _match(self, pat, node_id, binding):
        if pat[0] == 0:
            prev = binding.get(pat[1])
            if prev is None:
                binding[pat[1]] = node_id
                return True
            return prev == node_id
        node = self.nodes[node_id]
        if node[0] != pat[1]:
            return False
        for sp, c in zip(pat[2], node[1]):
            if not self._match(sp, c, binding):
                return False
        return True

    def _build(self, pat, binding):
        if pat[0] == 0:
            return binding[pat[1]]
        return self.reduce(pat[1], tuple(self._build(s, binding) for s in pat[2]))


def _tuples_with_new(n, start, k):
    """All k-tuples over range(n), in lexicographic order, having at least
    one coordinate >= start."""
    if k == 0:
        return
    if k == 1:
        for a in range(start, n):
            yield (a,)
        return
    for a in range(n):
        if a >= start:
            for rest in product(range(n), repeat=k - 1):
                yield (a,) + rest
        else:
            for rest in _tuples_with_new(n, start, k - 1):
                yield (a,) + rest


def _splits(seen, vec):
    """Record the first component of ``vec``; true when an earlier class
    already had that value (the two classes then differ elsewhere)."""
    v = vec[0]
    if v in seen:
        return True
    seen[v] = True
    return False


def saturate(table, atoms, functions, depth, ncomp, track_marks=False, stop_vec=None, stop_on_split=False):
    """Enumerate recipe classes up to height ``depth``.

    ``atoms`` is a list of ``(value_vector, marked)`` in enumeration order;
    ``functions`` a list of ``(sym, arity)`` sorted by symbol name.
    With ``stop_on_split`` enumeration stops right after the first class
    whose value in the first component equals that of an earlier class.

    Returns ``(vecs, heights, mheights, reps, mreps)`` where ``reps[i]`` is
    ``(-1, atom_index)`` or ``(sym, arg_class_indices)`` and ``mreps[i]`` is
    the smallest member mentioning a marked atom, encoded as ``(-1, k)`` or
    ``(sym, args, j)`` with ``j`` the argument that uses its marked member.
    """
    vecs = []
    hs = []
    mhs = []
    reps = []
    mreps = []
    index = {}
    split = stop_on_split and ncomp > 1
    seen = {}
    for k, (vec, marked) in enumerate(atoms):
        i = index.get(vec)
        if i is None:
            index[vec] = len(vecs)
            vecs.append(vec)
            hs.append(1)
            mhs.append(1 if marked else INF)
            reps.append((-1, k))
            mreps.append((-1, k) if marked else None)
            if stop_vec is not None and vec == stop_vec:
                return vecs, hs, mhs, reps, mreps
            if split and _splits(seen, vec):
                return vecs, hs, mhs, reps, mreps
        elif marked and mhs[i] > 1:
            mhs[i] = 1
            mreps[i] = (-1, k)
    reduce = table.reduce
    level_start = 0
    for h in range(2, depth + 1):
        n = len(vecs)
        for sym, arity in functions:
            if arity == 0:
                continue
            tuples = product(range(n), repeat=arity) if track_marks else _tuples_with_new(n, level_start, arity)
            for args in tuples:
                hmax = 0
                for a in args:
                    if hs[a] > hmax:
                        hmax = hs[a]
                ch = hmax + 1
                cm = INF
                mj = -1
                if track_marks:
                    for j in range(arity):
                        mj_h = mhs[args[j]]
                        if mj_h >= INF:
                            continue
                        m = mj_h
                        for i2 in range(arity):
                            if i2 != j and hs[args[i2]] > m:
                                m = hs[args[i2]]
                        if m + 1 < cm:
                            cm = m + 1
                            mj = j
                if ch != h and cm != h:
                    continue
                if ncomp == 1:
                    vec = (reduce(sym, tuple([vecs[a][0] for a in args])),)
                else:
                    vec = tuple([reduce(sym, tuple([vecs[a][c] for a in args])) for c in range(ncomp)])
                i = index.get(vec)
                if i is None:
                    if ch != h:
                        # cannot happen: a cheaper plain member would exist
                        continue
                    index[vec] = len(vecs)
                    vecs.append(vec)
                    hs.append(h)
                    reps.append((sym, args))
                    if cm == h:
                        mhs.append(h)
                        mreps.append((sym, args, mj))
                    else:
                        mhs.append(INF)
                        mreps.append(None)
                    if stop_vec is not None and vec == stop_vec:
                        return vecs, hs, mhs, reps, mreps
                    if split and _splits(seen, vec):
                        return vecs, hs, mhs, reps, mreps
                elif cm == h and mhs[i] > h:
                    mhs[i] = h
                    mreps[i] = (sym, args, mj)
        level_start = n
    return vecs, hs, mhs, reps, mreps
