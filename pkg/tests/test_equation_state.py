import pytest

from conftest import corpus
from tracesolve.equation_state import (
    Solution, StateError, build_initial, canonical_state, check_solution, is_final, make_state,
    rename_state, segments, state_from_json, state_to_json, validate_state, weight,
)
from tracesolve.trace_core import FRESH_BASE, MARKER


@pytest.fixture
def toy2():
    inst = corpus("toy2")
    ctx = inst.context()
    return inst, ctx, inst.initial_state(ctx)


def test_initial_state_layout(toy2):
    inst, ctx, st = toy2
    (X,) = inst.variables
    a, A = inst.constants()
    # # X # X a # a X # A X~ # X~ A # X~ #
    assert st.W == (MARKER, X, MARKER, X, a, MARKER, a, X, MARKER,
                    A, X + 1, MARKER, X + 1, A, MARKER, X + 1, MARKER)
    assert len(st.W) == inst.init_length()
    assert validate_state(ctx, st) == []
    assert segments(st.W)[0] == (X,)
    assert st.X == frozenset({X})


def test_weight_components(toy2):
    inst, ctx, st = toy2
    n, omega, omega2, typed, nb = weight(ctx, st)
    assert n == len(st.W)
    assert omega == 4 * 0       # a and A use every resource of a one-resource instance
    assert typed == n           # no types yet
    assert nb == len(st.B)


def test_toy1_initial_weight():
    # hand-computed from the weight definition
    inst = corpus("toy1")
    ctx = inst.context()
    assert weight(ctx, inst.initial_state(ctx)) == (13, 2, 10, 13, 5)


def test_solution_check(toy2):
    inst, ctx, st = toy2
    (X,) = inst.variables
    a, A = inst.constants()
    assert check_solution(ctx, st, {X: (a, a)}) == []
    # a and A share a resource, so A a and a A are different traces
    assert check_solution(ctx, st, {X: (A,)}) == ["sigma(W) differs from sigma(W~)"]
    assert check_solution(ctx, st, {X: (MARKER,)}) == [
        "sigma(X) contains the marker"]
    assert check_solution(ctx, st, {}) == ["sigma undefined on X"]


def test_unsolvable_substitution_is_caught():
    inst = corpus("fin_const")      # X = a b with a, b independent
    ctx = inst.context()
    st = inst.initial_state(ctx)
    (X,) = inst.variables
    a, A, b, B = inst.constants()
    assert check_solution(ctx, st, {X: (b, a)}) == []     # same trace as a b
    assert check_solution(ctx, st, {X: (a,)}) == ["sigma(W) differs from sigma(W~)"]


def test_validate_state_finds_broken_symmetry(toy2):
    inst, ctx, st = toy2
    a, A = inst.constants()
    W = list(st.W)
    W[4] = A        # X A in one segment, but the partner still reads a~ X~
    bad = make_state(ctx, W, st.B, st.X, st.rho, st.mu)
    assert any("no involuted partner" in i for i in validate_state(ctx, bad))
    assert any("marker count" in i for i in validate_state(ctx, st, initial_markers=3))


def test_marker_needs_zero_monoid(toy2):
    inst, ctx, st = toy2
    ctx2 = inst.context()
    ctx2.mu0 = dict(ctx2.mu0)
    ctx2.mu0[MARKER] = ctx2.monoid.unit
    with pytest.raises(StateError, match="marker"):
        build_initial(ctx2, inst.lhs, inst.rhs)


def test_final_state_recognised():
    inst = corpus("toy1")
    ctx = inst.context()
    (c,) = ctx.distinguished()
    W = (MARKER, c, MARKER, c ^ 1, MARKER)
    st = make_state(ctx, W, {MARKER, c, c ^ 1}, (), {c: 1}, {c: ctx.monoid.unit})
    assert is_final(ctx, st)
    assert not is_final(ctx, inst.initial_state(ctx))


def test_canonical_names_ignore_fresh_ids(toy2):
    inst, ctx, st = toy2
    (X,) = inst.variables
    a, A = inst.constants()
    f, g = FRESH_BASE + 40, FRESH_BASE + 8

    def with_letter(c):
        W = (MARKER, X, MARKER, c, MARKER, c ^ 1, MARKER, X + 1, MARKER)
        return make_state(ctx, W, set(st.B) | {c, c ^ 1}, {X}, {c: 1, X: 1},
                          {c: 0, X: 0})
    s1, ren1 = canonical_state(ctx, with_letter(f))
    s2, ren2 = canonical_state(ctx, with_letter(g))
    assert s1 == s2
    assert FRESH_BASE in s1.W
    assert ren1[f] == FRESH_BASE
    assert rename_state(ctx, s1, {}) == s1


def test_state_json_roundtrip(toy2):
    inst, ctx, st = toy2
    assert state_from_json(state_to_json(st)) == st


def test_solution_copy_is_independent():
    s = Solution({2000000: (2,)})
    t = s.copy()
    t.sigma[2000000] = ()
    assert s.sigma[2000000] == (2,)
