import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus
from tracesolve.group_reduction import (
    SEPARATOR, _cancel, reduce_instance, reducedness_morphism,
)
from tracesolve.instance import InstanceError, parse_instance
from tracesolve.oracle import check_tuple, enumerate_bruteforce, is_group_reduced
from tracesolve.trace_core import normal_form


def test_plain_monoid_instances_pass_through():
    inst = corpus("toy2")
    red = reduce_instance(inst)
    assert red.kind == "identity" and red.target is inst
    assert red.project(((2,),)) == ((2,),)


def test_torsion_is_rejected():
    doc = {"mode": "group", "resources": ["r"], "constants": [{"name": "s", "rho": ["r"]}],
           "variables": [{"name": "X"}], "equation": {"lhs": "X", "rhs": "s"}}
    with pytest.raises(InstanceError, match="torsion"):
        reduce_instance(parse_instance(doc))


def test_cancel_splits_at_the_overlap():
    inst = corpus("raag_free_const")        # a, b on one resource: a free group
    a, A, b, B = inst.constants()
    A_, Z, B_ = _cancel((a, b), (B, a), inst.alphabet.bar, inst.dep)
    assert (A_, Z, B_) == ((a,), (b,), (a,))
    assert _cancel((a,), (b,), inst.alphabet.bar, inst.dep) == ((a,), (), (b,))


def test_cancel_uses_commutation():
    inst = corpus("raag_commute")           # a and b commute
    a, A, b, B = inst.constants()
    A_, Z, B_ = _cancel((a, b), (A,), inst.alphabet.bar, inst.dep)
    assert (A_, Z, B_) == ((b,), (a,), ())


@pytest.mark.parametrize("name", ["raag_commute", "raag_conj", "raag_free_commute",
                                  "raag_free_const", "raag_square"])
def test_group_solutions_lift_to_monoid_solutions(name):
    inst = corpus(name)
    red = reduce_instance(inst)
    assert red.kind == "group"
    t = red.target
    assert SEPARATOR in t.show(t.lhs)
    for vals in enumerate_bruteforce(inst, 3):
        sigma = red.lift(vals)
        lifted = tuple(sigma[X] for X in t.variables)
        assert check_tuple(t, lifted) == [], (vals, lifted)
        assert red.project(lifted) == vals


def test_project_rejects_unreduced_values():
    inst = corpus("raag_commute")
    red = reduce_instance(inst)
    a, A, b, B = inst.constants()
    k = red.target.k
    assert red.project(((a, A),) + ((),) * (k - 1)) is None


def test_self_involuting_letters_split():
    inst = corpus("self_inv_commute")
    red = reduce_instance(inst)
    assert red.kind == "split"
    t = red.target
    assert not t.alphabet.self_involuting
    for vals in enumerate_bruteforce(inst, 3):
        sigma = red.lift(vals)
        lifted = tuple(sigma[X] for X in t.variables)
        assert check_tuple(t, lifted) == []
        assert red.project(lifted) == vals


def test_split_constraint_rejects_stray_halves():
    inst = corpus("palindrome_self")
    t = reduce_instance(inst).target
    names = {t.alphabet.name(a): a for a in t.constants()}
    (X,) = t.variables
    assert check_tuple(t, ((names["s+"], names["s-"]),)) == []
    assert check_tuple(t, ((names["s+"],),)) == ["constraint of X violated"]
    assert check_tuple(t, ((names["s-"], names["s+"]),)) == ["constraint of X violated"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=6))
def test_reducedness_monoid_on_instance_alphabet(idx):
    inst = corpus("raag_free_commute")
    mon, morph = reducedness_morphism(inst)
    letters = inst.constants()
    w = normal_form([letters[i] for i in idx], inst.dep)
    assert (not mon.is_zero(morph.eval(w))) == is_group_reduced(w, inst.alphabet.bar, inst.dep)
