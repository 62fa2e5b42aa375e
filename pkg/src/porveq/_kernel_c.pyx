# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of ``_kernel_py``.

Same data layout and results; the level loop is specialised for unary and
binary symbols, which covers every bundled theory.  Higher arities fall
back to the generic tuple iterator.
"""

from itertools import product

from ._kernel_py import _tuples_with_new

cdef int INF = 1 << 30


cdef class TermTable:
    cdef public dict key2id
    cdef public list nodes
    cdef public dict rules

    def __init__(self, rules=None):
        self.key2id = {}
        self.nodes = []
        self.rules = rules or {}

    def __len__(self):
        return len(self.nodes)

    cpdef int leaf(self, payload):
        key = (-1, payload)
        i = self.key2id.get(key)
        if i is None:
            i = len(self.nodes)
            self.key2id[key] = i
            self.nodes.append(key)
        return i

    cpdef int app(self, sym, tuple children):
        key = (sym, children)
        i = self.key2id.get(key)
        if i is None:
            i = len(self.nodes)
            self.key2id[key] = i
            self.nodes.append(key)
        return i

    cpdef int reduce(self, sym, tuple children):
        cdef dict binding
        cdef bint ok
        rules = self.rules.get(sym)
        if rules is not None:
            for pats, rhs in rules:
                binding = {}
                ok = True
                for k in range(len(pats)):
                    if not self._match(pats[k], children[k], binding):
                        ok = False
                        break
                if ok:
                    return self._build(rhs, binding)
        return self.app(sym, children)

    cdef bint _match(self, tuple pat, int node_id, dict binding):
        cdef tuple node
        cdef tuple subs
        cdef tuple kids
        if pat[0] == 0:
            prev = binding.get(pat[1])
            if prev is None:
                binding[pat[1]] = node_id
                return True
            return prev == node_id
        node = self.nodes[node_id]
        if node[0] != pat[1]:
            return False
        subs = pat[2]
        kids = node[1]
        for k in range(len(subs)):
            if not self._match(subs[k], kids[k], binding):
                return False
        return True

    cdef int _build(self, tuple pat, dict binding):
        if pat[0] == 0:
            return binding[pat[1]]
        return self.reduce(pat[1], tuple([self._build(s, binding) for s in pat[2]]))


cdef class _State:
    cdef public list vecs, hs, mhs, reps, mreps
    cdef public dict index
    cdef public int ncomp
    cdef public bint track
    cdef public object stop_vec
    cdef public bint stopped
    cdef public bint split
    cdef public dict seen

    def __init__(self, int ncomp, bint track, stop_vec, bint split=False):
        self.vecs = []
        self.hs = []
        self.mhs = []
        self.reps = []
        self.mreps = []
        self.index = {}
        self.ncomp = ncomp
        self.track = track
        self.stop_vec = stop_vec
        self.stopped = False
        self.split = split and ncomp > 1
        self.seen = {}


cdef bint _splits(_State st, tuple vec):
    v = vec[0]
    if v in st.seen:
        return True
    st.seen[v] = True
    return False


cdef inline bint _offer(_State st, TermTable table, sym, tuple args, int h):
    """Consider ``sym(args)`` at level ``h``; return True to stop."""
    cdef int arity = len(args)
    cdef int hmax = 0, ch, cm = INF, mj = -1, m, j, i2, a, c
    cdef list hs = st.hs
    cdef list mhs = st.mhs
    cdef list vecs = st.vecs
    for j in range(arity):
        a = args[j]
        if <int>hs[a] > hmax:
            hmax = hs[a]
    ch = hmax + 1
    if st.track:
        for j in range(arity):
            m = mhs[args[j]]
            if m >= INF:
                continue
            for i2 in range(arity):
                if i2 != j and <int>hs[args[i2]] > m:
                    m = hs[args[i2]]
            if m + 1 < cm:
                cm = m + 1
                mj = j
    if ch != h and cm != h:
        return False
    if st.ncomp == 1:
        vec = (table.reduce(sym, tuple([vecs[a][0] for a in args])),)
    else:
        vec = tuple([table.reduce(sym, tuple([vecs[a][c] for a in args])) for c in range(st.ncomp)])
    i = st.index.get(vec)
    if i is None:
        if ch != h:
            return False
        st.index[vec] = len(vecs)
        vecs.append(vec)
        hs.append(h)
        st.reps.append((sym, args))
        if cm == h:
            mhs.append(h)
            st.mreps.append((sym, args, mj))
        else:
            mhs.append(INF)
            st.mreps.append(None)
        if st.stop_vec is not None and vec == st.stop_vec:
            st.stopped = True
            return True
        if st.split and _splits(st, vec):
            st.stopped = True
            return True
    elif cm == h and <int>mhs[i] > h:
        mhs[i] = h
        st.mreps[i] = (sym, args, mj)
    return False


def saturate(table, atoms, functions, int depth, int ncomp, track_marks=False, stop_vec=None, stop_on_split=False):
    cdef _State st = _State(ncomp, bool(track_marks), stop_vec, bool(stop_on_split))
    cdef TermTable tt = table
    cdef int k, h, n, level_start, a, b, arity
    for k, (vec, marked) in enumerate(atoms):
        i = st.index.get(vec)
        if i is None:
            st.index[vec] = len(st.vecs)
            st.vecs.append(vec)
            st.hs.append(1)
            st.mhs.append(1 if marked else INF)
            st.reps.append((-1, k))
            st.mreps.append((-1, k) if marked else None)
            if stop_vec is not None and vec == stop_vec:
                return st.vecs, st.hs, st.mhs, st.reps, st.mreps
            if st.split and _splits(st, vec):
                return st.vecs, st.hs, st.mhs, st.reps, st.mreps
        elif marked and st.mhs[i] > 1:
            st.mhs[i] = 1
            st.mreps[i] = (-1, k)
    level_start = 0
    for h in range(2, depth + 1):
        n = len(st.vecs)
        for sym, arity in functions:
            if arity == 0:
                continue
            if arity == 1:
                for a in range(0 if st.track else level_start, n):
                    if _offer(st, tt, sym, (a,), h):
                        return st.vecs, st.hs, st.mhs, st.reps, st.mreps
            elif arity == 2:
                for a in range(n):
                    for b in range(0 if (st.track or a >= level_start) else level_start, n):
                        if _offer(st, tt, sym, (a, b), h):
                            return st.vecs, st.hs, st.mhs, st.reps, st.mreps
            else:
                tuples = product(range(n), repeat=arity) if st.track else _tuples_with_new(n, level_start, arity)
                for args in tuples:
                    if _offer(st, tt, sym, tuple(args), h):
                        return st.vecs, st.hs, st.mhs, st.reps, st.mreps
        level_start = n
    return st.vecs, st.hs, st.mhs, st.reps, st.mreps
