# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: same API and semantics as _kernels_py, built for speed.

Words cross the boundary as Python sequences of signed letters or as packed
integers; handle states as packed integers.  See _kernels_py for the packing
conventions (the two modules must agree bit for bit).
"""

from libc.stdint cimport uint64_t
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector
from cython.operator cimport dereference as deref, preincrement as inc

BACKEND_KIND = "compiled"

cdef int MAX_LEN = 38  # packing headroom: base 7 needs 7^len * 64 < 2^64 for len <= 20


# ---------------------------------------------------------------------------
# word packing

cdef uint64_t _pack(int* w, int n, int base) noexcept:
    cdef uint64_t acc = 0
    cdef int t, code, v
    for t in range(n):
        v = w[t]
        code = 2 * v - 1 if v > 0 else -2 * v
        acc = acc * base + code
    return acc * 64 + n


cdef int _unpack(uint64_t packed, int base, int* out) noexcept:
    cdef int n = <int>(packed & 63)
    cdef uint64_t acc = packed >> 6
    cdef int t, code
    for t in range(n - 1, -1, -1):
        code = <int>(acc % base)
        acc = acc // base
        if code & 1:
            out[t] = (code + 1) // 2
        else:
            out[t] = -(code // 2)
    return n


def pack_word(values, int degree):
    """Pack a signed-letter word into one integer, leftmost letter first."""
    cdef int w[64]
    cdef int n = 0
    cdef int v
    for v in values:
        w[n] = v
        n += 1
    return _pack(w, n, 2 * degree - 1)


def unpack_word(packed, int degree):
    cdef int w[64]
    cdef int n = _unpack(<uint64_t>packed, 2 * degree - 1, w)
    return tuple(w[t] for t in range(n))


# ---------------------------------------------------------------------------
# handle reduction

cdef void _free_inplace(vector[int]& w) noexcept:
    cdef vector[int] stack
    cdef size_t t
    for t in range(w.size()):
        if stack.size() > 0 and stack.back() == -w[t]:
            stack.pop_back()
        else:
            stack.push_back(w[t])
    w.swap(stack)


cdef bint _dehornoy(vector[int]& w) noexcept:
    cdef int p, q, i, e, v, iq, n
    cdef size_t t
    cdef vector[int] out
    cdef bint found
    _free_inplace(w)
    while w.size() > 0:
        n = <int>w.size()
        found = False
        for q in range(n):
            iq = w[q] if w[q] > 0 else -w[q]
            p = q - 1
            while p >= 0:
                v = w[p] if w[p] > 0 else -w[p]
                if v <= iq:
                    if w[p] == -w[q]:
                        found = True
                    break
                p -= 1
            if found:
                break
        if not found:
            return False
        e = 1 if w[p] > 0 else -1
        i = w[p] if w[p] > 0 else -w[p]
        out.clear()
        for t in range(<size_t>p):
            out.push_back(w[t])
        for t in range(<size_t>(p + 1), <size_t>q):
            v = w[t] if w[t] > 0 else -w[t]
            if v == i + 1:
                out.push_back(-e * (i + 1))
                out.push_back(i if w[t] > 0 else -i)
                out.push_back(e * (i + 1))
            else:
                out.push_back(w[t])
        for t in range(<size_t>(q + 1), w.size()):
            out.push_back(w[t])
        w.swap(out)
        _free_inplace(w)
    return True


def dehornoy_trivial(values, int degree):
    """Decide triviality by repeated handle elimination."""
    cdef vector[int] w
    cdef int v
    for v in values:
        w.push_back(v)
    return _dehornoy(w)


# ---------------------------------------------------------------------------
# bounded rewriting search

cdef void _word_neighbors(uint64_t packed, int degree, int cap, int base,
                          vector[uint64_t]& out) noexcept:
    cdef int w[40]
    cdef int nb[42]
    cdef int n = _unpack(packed, base, w)
    cdef int t, u, i, j, ci, a, b, c, e, mid
    out.clear()
    for t in range(n - 1):
        if w[t] == -w[t + 1]:
            for u in range(t):
                nb[u] = w[u]
            for u in range(t + 2, n):
                nb[u - 2] = w[u]
            out.push_back(_pack(nb, n - 2, base))
    if n + 2 <= cap:
        for t in range(n + 1):
            for u in range(t):
                nb[u] = w[u]
            for u in range(t, n):
                nb[u + 2] = w[u]
            for i in range(1, degree):
                nb[t] = i
                nb[t + 1] = -i
                out.push_back(_pack(nb, n + 2, base))
                nb[t] = -i
                nb[t + 1] = i
                out.push_back(_pack(nb, n + 2, base))
    for t in range(n - 1):
        a = w[t]
        b = w[t + 1]
        i = a if a > 0 else -a
        j = b if b > 0 else -b
        if i - j >= 2 or j - i >= 2:
            for u in range(n):
                nb[u] = w[u]
            nb[t] = b
            nb[t + 1] = a
            out.push_back(_pack(nb, n, base))
    for t in range(n - 2):
        a = w[t]
        b = w[t + 1]
        c = w[t + 2]
        i = a if a > 0 else -a
        j = b if b > 0 else -b
        ci = c if c > 0 else -c
        if ci != i or (i - j != 1 and j - i != 1):
            continue
        if (a > 0) == (c > 0):
            if (a > 0) == (b > 0) and a == c:
                for u in range(n):
                    nb[u] = w[u]
                nb[t] = b
                nb[t + 1] = a
                nb[t + 2] = b
                out.push_back(_pack(nb, n, base))
        else:
            e = 1 if a > 0 else -1
            mid = i if b > 0 else -i
            for u in range(n):
                nb[u] = w[u]
            nb[t] = -e * j
            nb[t + 1] = mid
            nb[t + 2] = e * j
            out.push_back(_pack(nb, n, base))


def word_reaches_identity(values, int degree, int excursion_cap, max_states):
    cdef int base = 2 * degree - 1
    cdef uint64_t cap_states = <uint64_t>max_states
    cdef int w[64]
    cdef int n = 0
    cdef int v
    if excursion_cap > MAX_LEN:
        raise ValueError(f"excursion cap {excursion_cap} exceeds kernel limit {MAX_LEN}")
    for v in values:
        w[n] = v
        n += 1
    cdef uint64_t start = _pack(w, n, base)
    if start == 0:
        return True
    cdef unordered_set[uint64_t] seen
    cdef vector[uint64_t] frontier, nxt, nbs
    cdef uint64_t p, q
    cdef size_t t, r
    seen.insert(start)
    frontier.push_back(start)
    while frontier.size() > 0:
        nxt.clear()
        for t in range(frontier.size()):
            p = frontier[t]
            _word_neighbors(p, degree, excursion_cap, base, nbs)
            for r in range(nbs.size()):
                q = nbs[r]
                if q == 0:
                    return True
                if seen.count(q) == 0:
                    seen.insert(q)
                    if seen.size() > cap_states:
                        raise RuntimeError("rewriting search exceeded state budget")
                    nxt.push_back(q)
        frontier.swap(nxt)
    return False


def identity_component(int degree, int universe_len, int excursion_cap, max_states):
    """All words of length <= universe_len reachable from the empty word."""
    cdef int base = 2 * degree - 1
    cdef uint64_t cap_states = <uint64_t>max_states
    if excursion_cap > MAX_LEN:
        raise ValueError(f"excursion cap {excursion_cap} exceeds kernel limit {MAX_LEN}")
    cdef unordered_set[uint64_t] seen
    cdef vector[uint64_t] frontier, nxt, nbs
    cdef uint64_t p, q
    cdef size_t t, r
    seen.insert(0)
    frontier.push_back(0)
    while frontier.size() > 0:
        nxt.clear()
        for t in range(frontier.size()):
            p = frontier[t]
            _word_neighbors(p, degree, excursion_cap, base, nbs)
            for r in range(nbs.size()):
                q = nbs[r]
                if seen.count(q) == 0:
                    seen.insert(q)
                    if seen.size() > cap_states:
                        raise RuntimeError("component search exceeded state budget")
                    nxt.push_back(q)
        frontier.swap(nxt)
    out = []
    cdef unordered_set[uint64_t].iterator it = seen.begin()
    while it != seen.end():
        p = deref(it)
        if (p & 63) <= <uint64_t>universe_len:
            out.append(p)
        inc(it)
    return out


def trivial_words(int degree, int max_len):
    """Packed trivial words of length <= max_len, decided by handle reduction."""
    cdef int base = 2 * degree - 1
    cdef int nletters = 2 * (degree - 1)
    cdef int w[40]
    cdef int codes[40]
    cdef int perm[40]
    cdef int n, t, v, i, x
    cdef bint ok, done
    cdef vector[int] buf
    out = []
    out.append(pack_word((), degree))
    if max_len > 24:
        raise ValueError(f"enumeration length {max_len} exceeds kernel limit")
    for n in range(2, max_len + 1, 2):
        for t in range(n):
            codes[t] = 0
        done = False
        while not done:
            # codes -> signed letters: 0..nletters-1 maps to +1,-1,+2,-2,..
            for t in range(n):
                v = codes[t] // 2 + 1
                w[t] = v if codes[t] % 2 == 0 else -v
            for x in range(degree + 1):
                perm[x] = x
            for t in range(n):
                i = w[t] if w[t] > 0 else -w[t]
                perm[i], perm[i + 1] = perm[i + 1], perm[i]
            ok = True
            for x in range(1, degree + 1):
                if perm[x] != x:
                    ok = False
                    break
            if ok:
                buf.clear()
                for t in range(n):
                    buf.push_back(w[t])
                if _dehornoy(buf):
                    out.append(_pack(w, n, base))
            # odometer step
            t = n - 1
            while t >= 0:
                codes[t] += 1
                if codes[t] < nletters:
                    break
                codes[t] = 0
                t -= 1
            if t < 0:
                done = True
    return out


# ---------------------------------------------------------------------------
# integer handle-state search

cdef uint64_t _pack_state(int* m, int* n, int g) noexcept:
    # pairs must arrive sorted by (m, n); chunk order matches pair order
    cdef uint64_t acc = g
    cdef int t
    for t in range(g - 1, -1, -1):
        acc = (acc << 10) | <uint64_t>(((m[t] + 16) << 5) | (n[t] + 16))
    return acc


cdef int _unpack_state(uint64_t packed, int* m, int* n) noexcept:
    cdef int g = 0
    cdef uint64_t acc = packed
    cdef int c
    while acc >= 1024:
        c = <int>(acc & 1023)
        m[g] = (c >> 5) - 16
        n[g] = (c & 31) - 16
        g += 1
        acc >>= 10
    return g


def pack_handle_state(pairs):
    cdef int m[6]
    cdef int n[6]
    cdef int g = 0
    cdef int tm, tn, t, u
    for mm, nn in pairs:
        if g >= 6:
            raise ValueError("too many handles to pack")
        if abs(mm) > 15 or abs(nn) > 15:
            raise ValueError(f"coordinate out of packing range: ({mm}, {nn})")
        m[g] = mm
        n[g] = nn
        g += 1
    for t in range(1, g):
        tm = m[t]
        tn = n[t]
        u = t - 1
        while u >= 0 and (m[u] > tm or (m[u] == tm and n[u] > tn)):
            m[u + 1] = m[u]
            n[u + 1] = n[u]
            u -= 1
        m[u + 1] = tm
        n[u + 1] = tn
    return _pack_state(m, n, g)


def unpack_handle_state(packed):
    cdef int m[6]
    cdef int n[6]
    cdef int g = _unpack_state(<uint64_t>packed, m, n)
    return tuple((m[t], n[t]) for t in range(g))


cdef inline void _try_push(int* sm, int* sn, int g, int k, int mk, int nk,
                           int l, int ml, int nl, int bound,
                           vector[uint64_t]& out) noexcept:
    cdef int m2[6]
    cdef int n2[6]
    cdef int t, u, tm, tn
    if mk > bound or mk < -bound or nk > bound or nk < -bound:
        return
    if l >= 0 and (ml > bound or ml < -bound or nl > bound or nl < -bound):
        return
    for t in range(g):
        m2[t] = sm[t]
        n2[t] = sn[t]
    m2[k] = mk
    n2[k] = nk
    if l >= 0:
        m2[l] = ml
        n2[l] = nl
    for t in range(1, g):
        tm = m2[t]
        tn = n2[t]
        u = t - 1
        while u >= 0 and (m2[u] > tm or (m2[u] == tm and n2[u] > tn)):
            m2[u + 1] = m2[u]
            n2[u + 1] = n2[u]
            u -= 1
        m2[u + 1] = tm
        n2[u + 1] = tn
    out.push_back(_pack_state(m2, n2, g))


cdef void _state_neighbors(uint64_t packed, int bound, vector[uint64_t]& out) noexcept:
    cdef int m[6]
    cdef int n[6]
    cdef int g = _unpack_state(packed, m, n)
    cdef int k, l
    out.clear()
    for k in range(g):
        _try_push(m, n, g, k, -m[k], -n[k], -1, 0, 0, bound, out)
        _try_push(m, n, g, k, m[k], n[k] + 2 * m[k], -1, 0, 0, bound, out)
        _try_push(m, n, g, k, m[k], n[k] - 2 * m[k], -1, 0, 0, bound, out)
        _try_push(m, n, g, k, -n[k], m[k], -1, 0, 0, bound, out)
        _try_push(m, n, g, k, n[k], -m[k], -1, 0, 0, bound, out)
        for l in range(g):
            if l == k:
                continue
            _try_push(m, n, g, k, m[k], n[k] + n[l], l, m[l] - m[k], n[l], bound, out)
            _try_push(m, n, g, k, m[k], n[k] - n[l], l, m[l] + m[k], n[l], bound, out)
            if n[l] == 0:
                _try_push(m, n, g, l, m[l] + m[k], 0, -1, 0, 0, bound, out)
                _try_push(m, n, g, l, m[l] - m[k], 0, -1, 0, 0, bound, out)
            if m[k] == 0:
                _try_push(m, n, g, k, 0, n[k] + m[l], -1, 0, 0, bound, out)
                _try_push(m, n, g, k, 0, n[k] - m[l], -1, 0, 0, bound, out)


def handle_ball(packed_state, int budget, int bound, max_states):
    """States reachable from packed_state in at most budget moves."""
    if bound > 15:
        raise ValueError(f"bound {bound} exceeds packing range 15")
    cdef uint64_t cap_states = <uint64_t>max_states
    cdef uint64_t start = <uint64_t>pack_handle_state(unpack_handle_state(packed_state))
    cdef unordered_set[uint64_t] seen
    cdef vector[uint64_t] frontier, nxt, nbs
    cdef uint64_t p, q
    cdef size_t t, r
    cdef int step
    seen.insert(start)
    frontier.push_back(start)
    for step in range(budget):
        nxt.clear()
        for t in range(frontier.size()):
            p = frontier[t]
            _state_neighbors(p, bound, nbs)
            for r in range(nbs.size()):
                q = nbs[r]
                if seen.count(q) == 0:
                    seen.insert(q)
                    if seen.size() > cap_states:
                        raise RuntimeError("handle search exceeded state budget")
                    nxt.push_back(q)
        frontier.swap(nxt)
        if frontier.size() == 0:
            break
    out = []
    cdef unordered_set[uint64_t].iterator it = seen.begin()
    while it != seen.end():
        out.append(deref(it))
        inc(it)
    return out
