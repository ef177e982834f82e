"""Pure Python kernels: word triviality, rewriting search, handle-state search.

The compiled extension exports the same names with the same semantics; the
selector in kernels.py picks whichever is available.  Words travel as lists
or tuples of signed integers (+i for the i-th positive generator letter, -i
for its inverse) and, across kernel boundaries, as packed integers.
"""

from __future__ import annotations

from typing import Iterable, Sequence

BACKEND_KIND = "pure"


# ---------------------------------------------------------------------------
# word packing

def pack_word(values: Sequence[int], degree: int) -> int:
    """Pack a signed-letter word into one integer, leftmost letter first."""
    base = 2 * degree - 1
    acc = 0
    for v in values:
        code = 2 * abs(v) - (1 if v > 0 else 0)
        acc = acc * base + code
    # length prefix keeps distinct-length words distinct (codes never use 0)
    return acc * 64 + len(values)


def unpack_word(packed: int, degree: int) -> tuple[int, ...]:
    base = 2 * degree - 1
    acc, length = divmod(packed, 64)
    out = []
    for _ in range(length):
        acc, code = divmod(acc, base)
        v, r = divmod(code + 1, 2)
        out.append(v if r == 0 else -v)
    out.reverse()
    return tuple(out)


# ---------------------------------------------------------------------------
# handle reduction

def _free(values: list[int]) -> list[int]:
    stack: list[int] = []
    for v in values:
        if stack and stack[-1] == -v:
            stack.pop()
        else:
            stack.append(v)
    return stack


def _find_handle(w: list[int]) -> tuple[int, int] | None:
    # leftmost-closing critical segment: w[p] = inverse of w[q], every letter
    # strictly between them has larger index
    for q in range(len(w)):
        iq = abs(w[q])
        for p in range(q - 1, -1, -1):
            if abs(w[p]) <= iq:
                if w[p] == -w[q]:
                    return p, q
                break
    return None


def dehornoy_trivial(values: Sequence[int], degree: int) -> bool:
    """Decide triviality by repeated handle elimination.

    A handle is a segment e v e^-1 where e is a letter and every letter of v
    has strictly larger index.  Eliminating the leftmost-closing handle
    (delete the pair, push index i+1 letters through: x -> e^-1 x' e with the
    index dropped by the braid relation) terminates, and the result is empty
    exactly for words representing the identity.
    """
    w = _free(list(values))
    while w:
        hit = _find_handle(w)
        if hit is None:
            return False
        p, q = hit
        e = 1 if w[p] > 0 else -1
        i = abs(w[p])
        out = w[:p]
        for v in w[p + 1 : q]:
            if abs(v) == i + 1:
                out.append(-e * (i + 1))
                out.append(i if v > 0 else -i)
                out.append(e * (i + 1))
            else:
                out.append(v)
        out.extend(w[q + 1 :])
        w = _free(out)
    return True


# ---------------------------------------------------------------------------
# bounded rewriting search

def _word_neighbors(vals: tuple[int, ...], degree: int, cap: int) -> list[tuple[int, ...]]:
    n = len(vals)
    out = []
    for t in range(n - 1):
        if vals[t] == -vals[t + 1]:
            out.append(vals[:t] + vals[t + 2 :])
    if n + 2 <= cap:
        for t in range(n + 1):
            for i in range(1, degree):
                for v in (i, -i):
                    out.append(vals[:t] + (v, -v) + vals[t:])
    for t in range(n - 1):
        a, b = vals[t], vals[t + 1]
        if abs(abs(a) - abs(b)) >= 2:
            out.append(vals[:t] + (b, a) + vals[t + 2 :])
    for t in range(n - 2):
        a, b, c = vals[t], vals[t + 1], vals[t + 2]
        i, j = abs(a), abs(b)
        if abs(c) != i or abs(i - j) != 1:
            continue
        if (a > 0) == (c > 0):
            # i j i -> j i j needs all three signs equal
            if (a > 0) == (b > 0) and a == c:
                out.append(vals[:t] + (b, a, b) + vals[t + 3 :])
        else:
            # i^e j^d i^-e -> j^-e i^d j^e
            e = 1 if a > 0 else -1
            mid = i if b > 0 else -i
            out.append(vals[:t] + (-e * j, mid, e * j) + vals[t + 3 :])
    return out


def word_reaches_identity(
    values: Sequence[int], degree: int, excursion_cap: int, max_states: int
) -> bool:
    start = tuple(values)
    if not start:
        return True
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for vals in frontier:
            for nb in _word_neighbors(vals, degree, excursion_cap):
                if not nb:
                    return True
                if nb not in seen:
                    seen.add(nb)
                    if len(seen) > max_states:
                        raise RuntimeError("rewriting search exceeded state budget")
                    nxt.append(nb)
        frontier = nxt
    return False


def identity_component(
    degree: int, universe_len: int, excursion_cap: int, max_states: int
) -> list[int]:
    """All words of length <= universe_len reachable from the empty word.

    Breadth-first closure under the rewriting moves, with intermediate words
    allowed up to excursion_cap letters.  Returns packed words.
    """
    start: tuple[int, ...] = ()
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for vals in frontier:
            for nb in _word_neighbors(vals, degree, excursion_cap):
                if nb not in seen:
                    seen.add(nb)
                    if len(seen) > max_states:
                        raise RuntimeError("component search exceeded state budget")
                    nxt.append(nb)
        frontier = nxt
    return [pack_word(vals, degree) for vals in seen if len(vals) <= universe_len]


def trivial_words(degree: int, max_len: int) -> list[int]:
    """Packed trivial words of length <= max_len, decided by handle reduction."""
    out = []
    if dehornoy_trivial((), degree):
        out.append(pack_word((), degree))
    letters = [v for i in range(1, degree) for v in (i, -i)]
    level: list[tuple[int, ...]] = [()]
    for n in range(1, max_len + 1):
        level = [t + (v,) for t in level for v in letters]
        if n % 2:
            continue  # odd-length words are never trivial
        for vals in level:
            if _permutation_is_identity(vals, degree) and dehornoy_trivial(vals, degree):
                out.append(pack_word(vals, degree))
    return out


def _permutation_is_identity(vals: Sequence[int], degree: int) -> bool:
    perm = list(range(degree + 1))
    for v in vals:
        i = abs(v)
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
    return all(perm[x] == x for x in range(1, degree + 1))


# ---------------------------------------------------------------------------
# integer handle-state search

_COORD_LIMIT = 15  # packing uses 5 bits per signed coordinate
_MAX_HANDLES = 6


def pack_handle_state(pairs: Sequence[tuple[int, int]]) -> int:
    """Pack a sorted tuple of (m, n) pairs; coordinates must fit in [-15, 15]."""
    if len(pairs) > _MAX_HANDLES:
        raise ValueError(f"too many handles to pack: {len(pairs)}")
    chunks = []
    for m, n in pairs:
        if abs(m) > _COORD_LIMIT or abs(n) > _COORD_LIMIT:
            raise ValueError(f"coordinate out of packing range: ({m}, {n})")
        chunks.append(((m + 16) << 5) | (n + 16))
    chunks.sort()
    acc = len(pairs)
    for c in reversed(chunks):
        acc = (acc << 10) | c
    return acc


def unpack_handle_state(packed: int) -> tuple[tuple[int, int], ...]:
    chunks = []
    acc = packed
    while acc >= 1 << 10:
        chunks.append(acc & 0x3FF)
        acc >>= 10
    return tuple(((c >> 5) - 16, (c & 0x1F) - 16) for c in chunks)


def _state_neighbors(
    state: tuple[tuple[int, int], ...], bound: int
) -> list[tuple[tuple[int, int], ...]]:
    g = len(state)
    out = []

    def push(k: int, pair: tuple[int, int], l: int = -1, pair_l: tuple[int, int] = (0, 0)) -> None:
        if abs(pair[0]) > bound or abs(pair[1]) > bound:
            return
        if l >= 0 and (abs(pair_l[0]) > bound or abs(pair_l[1]) > bound):
            return
        s = list(state)
        s[k] = pair
        if l >= 0:
            s[l] = pair_l
        out.append(tuple(sorted(s)))

    for k in range(g):
        m, n = state[k]
        push(k, (-m, -n))
        push(k, (m, n + 2 * m))
        push(k, (m, n - 2 * m))
        push(k, (-n, m))
        push(k, (n, -m))
        for l in range(g):
            if l == k:
                continue
            ml, nl = state[l]
            push(k, (m, n + nl), l, (ml - m, nl))
            push(k, (m, n - nl), l, (ml + m, nl))
            if nl == 0:
                push(l, (ml + m, 0))
                push(l, (ml - m, 0))
            if m == 0:
                push(k, (0, n + ml))
                push(k, (0, n - ml))
    return out


def handle_ball(
    packed_state: int, budget: int, bound: int, max_states: int
) -> list[int]:
    """States reachable from packed_state in at most budget moves.

    Moves are the integer shadows of the handle moves (inversion, twisting,
    quarter rotation, slides both ways, and both transfer families, the
    latter gated by their zero preconditions).  States whose coordinates
    leave [-bound, bound] are pruned.  Returns packed states.
    """
    if bound > _COORD_LIMIT:
        raise ValueError(f"bound {bound} exceeds packing range {_COORD_LIMIT}")
    start = tuple(sorted(unpack_handle_state(packed_state)))
    seen = {start}
    frontier = [start]
    for _ in range(budget):
        nxt = []
        for s in frontier:
            for t in _state_neighbors(s, bound):
                if t not in seen:
                    seen.add(t)
                    if len(seen) > max_states:
                        raise RuntimeError("handle search exceeded state budget")
                    nxt.append(t)
        frontier = nxt
        if not frontier:
            break
    return [pack_handle_state(s) for s in seen]
