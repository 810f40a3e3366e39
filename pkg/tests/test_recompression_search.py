import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import corpus
from tracesolve.equation_state import bar_any, is_final, weight
from tracesolve.group_reduction import reduce_instance
from tracesolve.oracle import enumerate_bruteforce
from tracesolve.recompression_search import (
    SearchError, forward_path, mirror_positions, resource_order,
)
from tracesolve.solution_nfa import certified_path
from tracesolve.transition_engine import COMPRESSION, FINAL, apply_to_distinguished


def test_resource_sets_by_size():
    assert resource_order(2) == [0b01, 0b10, 0b11]
    assert resource_order(3)[:3] == [1, 2, 4] and resource_order(3)[-1] == 7


def test_mirror_positions_pair_bars():
    inst = corpus("conj_pair")
    ctx = inst.context()
    s0 = inst.initial_state(ctx)
    m = mirror_positions(ctx, s0)
    assert set(m) == {i for i, x in enumerate(s0.W) if x != 0}
    for i, j in m.items():
        assert m[j] == i
        assert s0.W[j] == bar_any(ctx, s0.W[i])


def check_path(red, values):
    ctx, path = certified_path(red, values)
    assert is_final(ctx, path.states[-1])
    assert path.steps[-1].label.kind == FINAL
    assert red.project(apply_to_distinguished(ctx, path.labels)) == tuple(values)
    s = path.stats
    assert not s.weight_violations and not s.budget_violations
    assert all(ok for _, ok, _ in s.fixed_checks)
    assert all(ok for _, ok, _ in s.remove_checks)
    assert all(covered >= need for _, _, covered, need in s.partitions)
    for step in path.steps:
        if step.label.kind == COMPRESSION:
            assert weight(ctx, step.dst) < weight(ctx, step.src)
    return path


SOLUTIONS = {name: sorted(enumerate_bruteforce(corpus(name), 3))
             for name in ("toy3", "conj_pair", "self_inv_commute", "raag_conj")}


@pytest.mark.parametrize("name", sorted(SOLUTIONS))
@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(data=st.data())
def test_forward_paths_reach_final_states(name, data):
    values = data.draw(st.sampled_from(SOLUTIONS[name]))
    check_path(reduce_instance(corpus(name)), values)


def test_strict_mode_refuses_non_solutions():
    inst = corpus("toy2")
    ctx = inst.context()
    (X,) = inst.variables
    a, A = inst.constants()
    with pytest.raises(SearchError):
        forward_path(ctx, inst.initial_state(ctx), {X: (A,)}, strict=True)


def test_path_lengths_stay_within_budget():
    red = reduce_instance(corpus("fin_two_var_inf"))
    ctx, path = certified_path(red, SOLUTIONS_TWO[0])
    assert path.stats.max_length < ctx.budgets.eq_length
    assert path.stats.max_var_occurrences <= ctx.budgets.var_occurrences


SOLUTIONS_TWO = sorted(enumerate_bruteforce(corpus("fin_two_var_inf"), 3),
                       key=lambda t: (-sum(map(len, t)), t))
