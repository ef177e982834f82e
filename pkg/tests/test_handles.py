import math

import pytest
from hypothesis import given, settings, strategies as st

from handleforge.braid import BraidWord, parse_word
from handleforge.handles import (
    BudgetExceeded,
    DecoratedHandle,
    DegenerateAllZero,
    DiagonalType,
    HandleLabel,
    HandleSystem,
    HandleTrace,
    IllegalStep,
    IndexOutOfRange,
    Invert,
    NonTrivialLabel,
    OffType,
    PreconditionViolated,
    Rotate,
    Slide,
    Transfer7,
    Transfer9,
    Twist,
    ZeroType,
    apply_handle_move,
    classify_standard,
    enumerate_reachable,
    format_handles,
    format_trace_moves,
    inverse_moves,
    normalize_general,
    normalize_hirose,
    normalize_with_stabilizer,
    parse_handles,
    parse_trace_moves,
    replay_trace,
    system_invariants,
)

TRIV = HandleLabel(())


def h(m, n, label=TRIV):
    return DecoratedHandle(label, m, n)


def gen(i, sign=1):
    return HandleLabel(((i, sign),))


def sys_of(*pairs, g=None, labels=None):
    handles = []
    for t, pair in enumerate(pairs):
        label = labels[t] if labels else TRIV
        handles.append(DecoratedHandle(label, pair[0], pair[1]))
    if g is None:
        g = max(
            (abs(gv) for hd in handles for gv, _ in hd.label.word), default=0
        )
    return HandleSystem(g, tuple(handles))


def entries(s):
    return tuple((hd.m, hd.n) for hd in s.handles)


@st.composite
def trivial_systems(draw, max_handles=3, bound=5):
    g = draw(st.integers(1, max_handles))
    pairs = [
        (draw(st.integers(-bound, bound)), draw(st.integers(-bound, bound)))
        for _ in range(g)
    ]
    return sys_of(*pairs)


@st.composite
def labeled_systems(draw, max_handles=3, bound=5):
    count = draw(st.integers(1, max_handles))
    g = count
    handles = []
    for _ in range(count):
        word = []
        for _ in range(draw(st.integers(0, 2))):
            word.append((draw(st.integers(1, g)), draw(st.sampled_from((1, -1)))))
        handles.append(
            DecoratedHandle(
                HandleLabel.reduce(tuple(word)),
                draw(st.integers(-bound, bound)),
                draw(st.integers(-bound, bound)),
            )
        )
    return HandleSystem(g, tuple(handles))


def legal_moves(s):
    g = len(s.handles)
    out = []
    for k in range(1, g + 1):
        hd = s.handles[k - 1]
        out.append(Invert(k))
        out.append(Twist(k, 1))
        out.append(Twist(k, -1))
        if hd.label.is_trivial:
            out.append(Rotate(k, "cw"))
            out.append(Rotate(k, "ccw"))
        for l in range(1, g + 1):
            if l == k:
                continue
            out.append(Slide(k, l, "A"))
            out.append(Slide(k, l, "B"))
            other = s.handles[l - 1]
            if other.label.is_trivial and other.n == 0:
                out.append(Transfer7(k, l, 1))
                out.append(Transfer7(k, l, -1))
            if hd.m == 0:
                out.append(Transfer9(k, l, 1))
                out.append(Transfer9(k, l, -1))
    return out


class TestLabels:
    def test_trivial(self):
        assert TRIV.is_trivial
        assert not gen(1).is_trivial

    def test_multiply_free_reduces(self):
        assert (gen(1) * gen(1, -1)).is_trivial
        assert (gen(1) * gen(2)).word == ((1, 1), (2, 1))

    def test_inverse(self):
        ab = gen(1) * gen(2)
        assert (ab * ab.inverse()).is_trivial
        assert ab.inverse().word == ((2, -1), (1, -1))

    def test_abelianized(self):
        w = gen(1) * gen(2, -1) * gen(1)
        assert w.abelianized(3) == (2, -1, 0)


class TestMoves:
    def test_invert(self):
        s = sys_of((2, 3), labels=[gen(1)], g=1)
        r = apply_handle_move(s, Invert(1))
        assert r.handles[0] == DecoratedHandle(gen(1, -1), -2, -3)

    def test_invert_is_self_inverse(self):
        s = sys_of((2, 3), labels=[gen(1)], g=1)
        assert apply_handle_move(apply_handle_move(s, Invert(1)), Invert(1)) == s

    def test_twist(self):
        s = sys_of((2, 3))
        assert entries(apply_handle_move(s, Twist(1, 1))) == ((2, 7),)
        assert entries(apply_handle_move(s, Twist(1, -1))) == ((2, -1),)

    def test_twist_fixes_zero_cocore(self):
        s = sys_of((0, 5))
        assert entries(apply_handle_move(s, Twist(1, 1))) == ((0, 5),)

    def test_rotate(self):
        s = sys_of((2, 3))
        assert entries(apply_handle_move(s, Rotate(1, "cw"))) == ((-3, 2),)
        assert entries(apply_handle_move(s, Rotate(1, "ccw"))) == ((3, -2),)

    def test_rotate_directions_invert_each_other(self):
        s = sys_of((2, 3))
        r = apply_handle_move(apply_handle_move(s, Rotate(1, "cw")), Rotate(1, "ccw"))
        assert r == s

    def test_rotate_needs_trivial_label(self):
        s = sys_of((2, 3), labels=[gen(1)], g=1)
        with pytest.raises(PreconditionViolated):
            apply_handle_move(s, Rotate(1, "cw"))

    def test_slide_a(self):
        s = sys_of((2, 3), (5, 7), labels=[gen(1), gen(2)], g=2)
        r = apply_handle_move(s, Slide(1, 2, "A"))
        assert r.handles[0] == DecoratedHandle(gen(1) * gen(2), 2, 10)
        assert r.handles[1] == DecoratedHandle(gen(2), 3, 7)

    def test_slide_b(self):
        s = sys_of((2, 3), (5, 7), labels=[gen(1), gen(2)], g=2)
        r = apply_handle_move(s, Slide(1, 2, "B"))
        assert r.handles[0] == DecoratedHandle(gen(2, -1) * gen(1), 2, -4)
        assert r.handles[1] == DecoratedHandle(gen(2), 7, 7)

    def test_transfer7(self):
        s = sys_of((2, 3), (5, 0))
        r = apply_handle_move(s, Transfer7(1, 2, 1))
        assert entries(r) == ((2, 3), (7, 0))

    def test_transfer7_needs_zero_coreloop(self):
        s = sys_of((2, 3), (5, 1))
        with pytest.raises(PreconditionViolated):
            apply_handle_move(s, Transfer7(1, 2, 1))

    def test_transfer7_needs_trivial_target(self):
        s = sys_of((2, 3), (5, 0), labels=[TRIV, gen(1)], g=1)
        with pytest.raises(PreconditionViolated):
            apply_handle_move(s, Transfer7(1, 2, 1))

    def test_transfer9(self):
        s = sys_of((0, 3), (5, 7))
        r = apply_handle_move(s, Transfer9(1, 2, 1))
        assert entries(r) == ((0, 8), (5, 7))

    def test_transfer9_needs_zero_cocore(self):
        s = sys_of((1, 3), (5, 7))
        with pytest.raises(PreconditionViolated):
            apply_handle_move(s, Transfer9(1, 2, 1))

    def test_two_handle_moves_need_distinct_indices(self):
        s = sys_of((1, 0), (2, 0))
        with pytest.raises(PreconditionViolated):
            apply_handle_move(s, Slide(1, 1, "A"))

    def test_index_out_of_range(self):
        s = sys_of((1, 0))
        with pytest.raises(IndexOutOfRange):
            apply_handle_move(s, Invert(2))
        with pytest.raises(IndexOutOfRange):
            apply_handle_move(s, Invert(0))

    @given(labeled_systems(), st.data())
    @settings(deadline=None, max_examples=200)
    def test_every_move_reverses_exactly(self, s, data):
        moves = legal_moves(s)
        if not moves:
            return
        mv = data.draw(st.sampled_from(moves))
        r = apply_handle_move(s, mv)
        for back in inverse_moves(mv):
            r = apply_handle_move(r, back)
        assert r == s


class TestInvariants:
    def test_frozen_example(self):
        inv = system_invariants(sys_of((2, 4), (6, 2)))
        assert (inv.d, inv.pairing, inv.residue) == (2, 20, 4)

    def test_empty_system(self):
        inv = system_invariants(HandleSystem(0, ()))
        assert (inv.d, inv.pairing, inv.residue) == (0, 0, None)

    def test_unit_handle(self):
        inv = system_invariants(sys_of((1, 1)))
        assert (inv.d, inv.pairing, inv.residue) == (1, 1, 1)

    @given(labeled_systems(), st.data())
    @settings(deadline=None, max_examples=300)
    def test_move_deltas(self, s, data):
        moves = legal_moves(s)
        if not moves:
            return
        mv = data.draw(st.sampled_from(moves))
        before = system_invariants(s)
        after = system_invariants(apply_handle_move(s, mv))
        assert after.d == before.d
        assert after.residue == before.residue
        delta = after.pairing - before.pairing
        if isinstance(mv, Twist):
            hd = s.handles[mv.k - 1]
            assert delta == mv.sign * 2 * hd.m * hd.m
        elif isinstance(mv, Rotate):
            hd = s.handles[mv.k - 1]
            assert delta == -2 * hd.m * hd.n
        else:
            assert delta == 0

    @given(labeled_systems(), st.data())
    @settings(deadline=None, max_examples=200)
    def test_m_gcd_preserved_except_rotation(self, s, data):
        moves = [m for m in legal_moves(s) if not isinstance(m, Rotate)]
        if not moves:
            return
        mv = data.draw(st.sampled_from(moves))
        r = apply_handle_move(s, mv)
        assert math.gcd(*(hd.m for hd in s.handles)) == math.gcd(
            *(hd.m for hd in r.handles)
        )


class TestNormalizeGeneral:
    def test_euclid_pair(self):
        result, trace = normalize_general(sys_of((4, 0), (6, 0)))
        assert entries(result) == ((2, 0), (0, 0))
        assert replay_trace(trace) == result

    def test_already_normal_single(self):
        s = sys_of((1, 0), labels=[gen(1)], g=1)
        result, trace = normalize_general(s)
        assert result == s
        assert trace.steps == ()

    def test_coprime_pair(self):
        s = sys_of((3, 1), (5, 2), labels=[gen(1), gen(2)], g=2)
        result, trace = normalize_general(s)
        assert result.handles[0].m == 1
        assert replay_trace(trace) == result

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            normalize_general(HandleSystem(0, ()))

    @given(labeled_systems(max_handles=4))
    @settings(deadline=None, max_examples=150)
    def test_shape_and_replay(self, s):
        result, trace = normalize_general(s)
        assert replay_trace(trace) == result
        assert trace.initial == s
        ms = [hd.m for hd in result.handles]
        ns = [hd.n for hd in result.handles]
        assert all(m == 0 for m in ms[1:])
        assert all(n == 0 for n in ns[2:])
        assert ms[0] == math.gcd(*(hd.m for hd in s.handles))
        assert len(result.handles) == len(s.handles)


class TestNormalizeWithStabilizer:
    def test_worked_pair(self):
        s = sys_of((2, 1), (4, 3), labels=[gen(1), gen(2)], g=2)
        result, trace = normalize_with_stabilizer(s)
        assert entries(result) == ((0, 1), (0, 1), (2, 7))
        assert result.handles[2].label.abelianized(2) == (1, 2)
        assert result.handles[0].label == gen(1)
        assert result.handles[1].label == gen(2)
        assert replay_trace(trace) == result

    def test_single_unit(self):
        result, trace = normalize_with_stabilizer(sys_of((1, 0), labels=[gen(1)], g=1))
        assert entries(result) == ((0, 0), (1, 0))
        assert replay_trace(trace) == result

    def test_single_diagonal(self):
        result, _ = normalize_with_stabilizer(sys_of((3, 3), labels=[gen(1)], g=1))
        assert entries(result) == ((0, 0), (3, 3))
        assert result.handles[1].label.abelianized(1) == (1,)

    def test_all_zero_cocores_rejected(self):
        with pytest.raises(DegenerateAllZero):
            normalize_with_stabilizer(sys_of((0, 5), (0, 3)))

    @given(labeled_systems(max_handles=3, bound=4))
    @settings(deadline=None, max_examples=100)
    def test_shape_and_replay(self, s):
        if all(hd.m == 0 for hd in s.handles):
            with pytest.raises(DegenerateAllZero):
                normalize_with_stabilizer(s)
            return
        result, trace = normalize_with_stabilizer(s)
        assert replay_trace(trace) == result
        m = math.gcd(*(hd.m for hd in s.handles))
        pairing = sum(hd.m * hd.n for hd in s.handles)
        g = len(s.handles)
        assert len(result.handles) == g + 1
        last = result.handles[-1]
        assert (last.m, last.n) == (m, pairing // m)
        for j, hd in enumerate(result.handles[:-1]):
            assert hd.m == 0
            assert 0 <= hd.n < m
            assert hd.label == s.handles[j].label
        # the collector's label abelianizes to the m_j/m combination of inputs
        gc = s.generator_count
        expect = [0] * gc
        for hd in s.handles:
            for t, e in enumerate(hd.label.abelianized(gc)):
                expect[t] += (hd.m // m) * e
        assert last.label.abelianized(gc) == tuple(expect)


class TestClassifyStandard:
    def test_off_type(self):
        tag = classify_standard(sys_of((2, 4), (6, 0)))
        assert tag == OffType(2)
        final = replay_trace(tag.trace)
        assert entries(final) == ((0, 0), (0, 0), (2, 0))

    def test_diagonal_type(self):
        tag = classify_standard(sys_of((2, 4), (6, 2)))
        assert tag == DiagonalType(2)
        final = replay_trace(tag.trace)
        assert entries(final) == ((0, 0), (0, 0), (2, 2))

    def test_unit_diagonal(self):
        assert classify_standard(sys_of((1, 1))) == DiagonalType(1)

    def test_zero_type(self):
        tag = classify_standard(sys_of((0, 0), (0, 0)))
        assert tag == ZeroType()
        assert entries(replay_trace(tag.trace)) == ((0, 0), (0, 0), (0, 0))

    def test_nontrivial_label_rejected(self):
        with pytest.raises(NonTrivialLabel):
            classify_standard(sys_of((1, 0), labels=[gen(1)], g=1))

    def test_pure_coreloop_system(self):
        tag = classify_standard(sys_of((0, 3)))
        assert tag == OffType(3)
        assert entries(replay_trace(tag.trace)) == ((0, 0), (3, 0))

    @given(trivial_systems(max_handles=3, bound=6))
    @settings(deadline=None, max_examples=150)
    def test_trace_lands_on_claimed_form(self, s):
        tag = classify_standard(s)
        final = replay_trace(tag.trace)
        g = len(s.handles)
        assert all(e == (0, 0) for e in entries(final)[:g])
        expect = {
            "diagonal": (tag.k, tag.k),
            "off": (tag.k, 0),
            "zero": (0, 0),
        }[tag.kind]
        assert entries(final)[g] == expect


class TestNormalizeHirose:
    def test_zero_handle(self):
        tag = normalize_hirose(sys_of((0, 0)))
        assert tag == ZeroType()

    def test_single_handle_cross_check(self):
        s = sys_of((2, 1))
        tag = normalize_hirose(s)
        assert tag == classify_standard(s)

    def test_split_unit_pair(self):
        tag = normalize_hirose(sys_of((1, 0), (0, 1)))
        assert tag == OffType(1)
        assert entries(replay_trace(tag.trace)) == ((1, 0), (0, 0))

    def test_nontrivial_label_rejected(self):
        with pytest.raises(NonTrivialLabel):
            normalize_hirose(sys_of((1, 0), labels=[gen(1)], g=1))

    @given(trivial_systems(max_handles=3, bound=6))
    @settings(deadline=None, max_examples=150)
    def test_agrees_with_classification_and_replays(self, s):
        tag = normalize_hirose(s)
        assert tag == classify_standard(s)
        final = replay_trace(tag.trace)
        assert tag.trace.initial == s
        assert len(final.handles) == len(s.handles)
        expect = {
            "diagonal": (tag.k, tag.k),
            "off": (tag.k, 0),
            "zero": (0, 0),
        }[tag.kind]
        assert entries(final)[0] == expect
        assert all(e == (0, 0) for e in entries(final)[1:])


class TestReplay:
    def test_empty_trace(self):
        s = sys_of((1, 1))
        assert replay_trace(HandleTrace(s, ())) == s

    def test_illegal_step_reports_index(self):
        s = sys_of((1, 0), (2, 0), labels=[TRIV, gen(1)], g=1)
        trace = HandleTrace(s, (Invert(1), Rotate(2, "cw"), Invert(1)))
        with pytest.raises(IllegalStep) as exc:
            replay_trace(trace)
        assert exc.value.index == 1

    def test_out_of_range_step(self):
        trace = HandleTrace(sys_of((1, 0)), (Invert(3),))
        with pytest.raises(IllegalStep) as exc:
            replay_trace(trace)
        assert exc.value.index == 0


class TestEnumerateReachable:
    def test_all_zero_is_isolated(self):
        ball = enumerate_reachable(sys_of((0, 0)), 1, 3)
        assert ball == {sys_of((0, 0))}

    def test_rotation_neighbor(self):
        ball = enumerate_reachable(sys_of((1, 0)), 2, 3)
        assert sys_of((0, -1)) in ball

    def test_budget_exceeded(self):
        with pytest.raises(BudgetExceeded):
            enumerate_reachable(sys_of((1, 0), (0, 1)), 6, 9, max_states=50)

    @given(trivial_systems(max_handles=2, bound=2))
    @settings(deadline=None, max_examples=30)
    def test_reachable_systems_share_invariants(self, s):
        inv = system_invariants(s)
        for r in enumerate_reachable(s, 3, 5):
            got = system_invariants(r)
            assert (got.d, got.residue) == (inv.d, inv.residue)

    def test_labeled_path_matches_kernel_path(self):
        s = sys_of((1, 2), (2, 0))
        slow = enumerate_reachable(s, 3, 4, force_slow=True)
        fast = enumerate_reachable(s, 3, 4)
        assert slow == fast


class TestTextFormats:
    def test_handles_round_trip(self):
        text = "handles g=2 degree=4 pattern=s1 s2\ng1 2 1\ng1.g2^-1 4 3\n"
        s = parse_handles(text)
        assert s.generator_count == 2
        assert s.pattern_braid == parse_word("s1 s2", 4)
        assert s.handles[0] == DecoratedHandle(gen(1), 2, 1)
        assert s.handles[1] == DecoratedHandle(gen(1) * gen(2, -1), 4, 3)
        assert parse_handles(format_handles(s)) == s

    def test_trivial_label_round_trip(self):
        text = "handles g=0 degree=2 pattern=e\n1 3 -4\n"
        s = parse_handles(text)
        assert s.handles[0] == DecoratedHandle(TRIV, 3, -4)
        assert parse_handles(format_handles(s)) == s

    def test_bad_inputs_rejected(self):
        for text in (
            "nothandles g=1 degree=2 pattern=e\n",
            "handles g=1 degree=2 pattern=e\ng2 1 0\n",
            "handles g=1 degree=2 pattern=e\ng1 1\n",
            "handles g=1 degree=2 pattern=e\ng1 one 0\n",
            "handles degree=2 pattern=e\n",
        ):
            with pytest.raises(ValueError):
                parse_handles(text)

    def test_trace_round_trip(self):
        moves = (
            Invert(1),
            Twist(1, 1),
            Rotate(2, "cw"),
            Slide(1, 2, "A"),
            Transfer7(1, 2, 1),
            Transfer9(1, 2, -1),
        )
        text = format_trace_moves(moves)
        assert text.splitlines() == [
            "invert 1",
            "twist 1 +",
            "rotate 2 cw",
            "slide 1 over 2 A",
            "transfer7 1 2 +",
            "transfer9 1 2 -",
        ]
        assert parse_trace_moves(text) == moves

    def test_bad_trace_rejected(self):
        for text in ("invert", "twist 1 2", "slide 1 over 1 C", "wobble 3"):
            with pytest.raises(ValueError):
                parse_trace_moves(text)
