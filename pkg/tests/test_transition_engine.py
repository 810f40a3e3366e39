import pytest

from conftest import corpus
from tracesolve.equation_state import Solution, check_solution
from tracesolve.recompression_search import forward_path
from tracesolve.transition_engine import (
    COMPRESSION, FINAL, SUBSTITUTION, Label, TransitionError, apply_endo, apply_to_distinguished,
    collapse_transition, compose_labels, compression_state, final_transition, fresh_constants,
    fresh_variables, full_endo, initial_transition, pop_left, pop_right, pullback,
    remove_empty, validate_compression, validate_label, verify_step,
)
from tracesolve.trace_core import FRESH_BASE, FRESH_VAR_BASE, MARKER


@pytest.fixture
def toy2():
    inst = corpus("toy2")
    ctx = inst.context()
    (X,) = inst.variables
    a, A = inst.constants()
    return inst, ctx, inst.initial_state(ctx), X, a, A


def test_label_roundtrip_and_renaming(toy2):
    ctx = toy2[1]
    lab = Label.make(COMPRESSION, endo={FRESH_BASE: (2, 3)})
    assert Label.from_json(lab.to_json()) == lab
    assert lab.norm() == 2
    ren = lab.with_renaming({FRESH_BASE: FRESH_BASE + 6})
    # the stored target calls the letter f3, the raw target f0
    assert ren.apply(ctx, (FRESH_BASE + 6,)) == (2, 3)
    sub = Label.make(SUBSTITUTION, tau={FRESH_VAR_BASE: (2, FRESH_VAR_BASE)})
    assert Label.from_json(sub.to_json()) == sub
    assert sub.apply(ctx, (2, 3)) == (2, 3)


def test_endomorphisms_close_under_bar(toy2):
    inst, ctx, st, X, a, A = toy2
    f = FRESH_BASE
    h = full_endo(ctx, {f: (a, a, A)})
    assert h[f + 1] == (a, A, A)
    assert apply_endo(ctx, {f: (a, A)}, (f, MARKER, f + 1)) == (a, A, MARKER, a, A)


def test_initial_transition_pops_minimal_letters(toy2):
    inst, ctx, st, X, a, A = toy2
    sol = Solution({X: (a, a)})
    st1, sol1, lab = initial_transition(ctx, st, sol)
    assert lab.kind == SUBSTITUTION and lab.tau_map == {X: (a, X)}
    assert sol1.sigma == {X: (a,)}
    assert verify_step(ctx, st, sol, lab, st1, sol1, initial=True) == []


def test_pops_and_pullback(toy2):
    inst, ctx, st, X, a, A = toy2
    sol = Solution({X: (a, a, a)})
    st1, sol1, lab = initial_transition(ctx, st, sol)
    st2, sol2, lab2 = pop_right(ctx, st1, sol1, X)
    assert lab2.tau_map == {X: (X, a)}
    assert verify_step(ctx, st1, sol1, lab2, st2, sol2) == []
    assert pullback(ctx, st1, lab2, sol2.sigma) == {X: (a, a)}
    st3, sol3, lab3 = pop_left(ctx, st2, sol2, X)
    assert X not in st3.X and sol3.sigma == {}
    assert verify_step(ctx, st2, sol2, lab3, st3, sol3) == []
    assert check_solution(ctx, st3, {}) == []
    with pytest.raises(TransitionError):
        pop_left(ctx, st3, Solution({X: ()}), X)


def test_remove_empty(toy2):
    inst, ctx, st, X, a, A = toy2
    st2, sol2, lab = remove_empty(ctx, st, Solution({X: ()}), [X])
    assert not st2.X and lab.tau_map == {X: ()}
    assert check_solution(ctx, st2, {}) == []


def test_compression_validation_rejects_bad_labels(toy2):
    inst, ctx, st, X, a, A = toy2
    st1, sol1, _ = initial_transition(ctx, st, Solution({X: (a, a, a)}))
    # a -> a a is not allowed to touch a base letter
    issues = validate_compression(ctx, st1, st1, {a: (a, a)})
    assert any("base letter" in i for i in issues)
    # a new letter whose image does not give back W
    f = fresh_constants(st1, 1)[0]
    W2 = tuple(f if x == a else x for x in st1.W)
    st2 = compression_state(ctx, st1, W2, {f: (a, a)})
    assert "W is not h(W')" in validate_compression(ctx, st1, st2, {f: (a, a)})


def test_fresh_ids_avoid_existing(toy2):
    inst, ctx, st, X, a, A = toy2
    assert fresh_constants(st, 2) == [FRESH_BASE, FRESH_BASE + 2]
    assert fresh_constants(st, 1, used=[FRESH_BASE + 1]) == [FRESH_BASE + 2]
    assert fresh_variables(st, 1) == [FRESH_VAR_BASE]


def test_final_and_collapse_need_variable_free_state(toy2):
    inst, ctx, st, X, a, A = toy2
    with pytest.raises(TransitionError):
        final_transition(ctx, st, Solution({X: ()}))
    with pytest.raises(TransitionError):
        collapse_transition(ctx, st, Solution({X: ()}))


def test_composed_labels_give_back_the_solution(toy2):
    inst, ctx, st, X, a, A = toy2
    path = forward_path(ctx, st, {X: (a, a, a)})
    assert path.steps[-1].label.kind == FINAL
    assert apply_to_distinguished(ctx, path.labels) == [(a, a, a)]
    (c,) = ctx.distinguished()
    assert compose_labels(ctx, path.labels) == {c: (a, a, a)}
    for step in path.steps:
        assert validate_label(ctx, step.src, step.dst, step.label,
                              initial=step is path.steps[0]) == []
