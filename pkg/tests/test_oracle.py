import itertools

import pytest

from conftest import corpus, corpus_files
from tracesolve.instance import parse_instance
from tracesolve.oracle import (
    OracleError, check_tuple, enumerate_bruteforce, format_tuple, group_reduce,
    is_group_reduced, variable_candidates,
)

# solution counts at bound 3, produced by the brute-force enumeration and frozen
COUNTS_AT_3 = {
    "commute_indep": 0, "conj_pair": 103, "fin_commute_inf": 26, "fin_const": 1,
    "fin_constrained": 2, "fin_partial_inf": 10, "fin_self_cancel": 1, "fin_split": 3,
    "fin_square": 1, "fin_two_var_inf": 277, "fin_unsat_counts": 0, "fin_unsat_noconst": 0,
    "palindrome_self": 8, "raag_commute": 25, "raag_conj": 25, "raag_free_commute": 7,
    "raag_free_const": 1, "raag_square": 1, "rand0001": 1, "rand0003": 0, "rand0004": 0,
    "rand0005": 0, "rand0006": 0, "rand0007": 0, "rand0010": 1, "rand0011": 49, "rand0019": 4,
    "rand0022": 1, "self_inv_commute": 26, "toy1": 1, "toy2": 4, "toy3": 55, "toy4": 2,
}


def words(inst, *tuples):
    names = {inst.alphabet.name(a): a for a in inst.constants()}
    return {tuple(tuple(names[t] for t in w.split()) for w in t) for t in tuples}


def test_corpus_counts_are_stable():
    got = {p.stem: len(enumerate_bruteforce(corpus(p.stem), 3)) for p in corpus_files()}
    assert got == COUNTS_AT_3


def test_toy_solutions_by_hand():
    toy1 = corpus("toy1")
    assert enumerate_bruteforce(toy1, 3) == words(toy1, ("a",))
    toy2 = corpus("toy2")
    assert enumerate_bruteforce(toy2, 3) == words(toy2, ("",), ("a",), ("a a",), ("a a a",))
    toy4 = corpus("toy4")   # odd number of a's
    assert enumerate_bruteforce(toy4, 3) == words(toy4, ("a",), ("a a a",))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_fast_enumeration_equals_plain_product(path):
    inst = corpus(path.stem)
    cands = [variable_candidates(inst, X, 2) for X in inst.variables]
    plain = {c for c in itertools.product(*cands) if not check_tuple(inst, c)}
    assert enumerate_bruteforce(inst, 2) == plain


def test_check_tuple_explains():
    inst = corpus("toy1")
    (good,) = words(inst, ("a",))
    assert check_tuple(inst, good) == []
    (bad,) = words(inst, ("a a",))
    assert check_tuple(inst, bad) == ["the two sides differ"]
    assert "wrong number of components" in check_tuple(inst, good + good)
    toy4 = corpus("toy4")
    (even,) = words(toy4, ("a a",))
    assert check_tuple(toy4, even) == ["constraint of X violated"]


def test_group_reduction_of_words():
    inst = corpus("raag_commute")       # a, b on separate resources
    alpha, dep = inst.alphabet, inst.dep
    a, A, b, B = inst.constants()
    assert group_reduce((a, b, A), alpha.bar, dep) == (b,)
    assert group_reduce((a, b, B, A), alpha.bar, dep) == ()
    assert is_group_reduced((a, b), alpha.bar, dep)
    assert not is_group_reduced((b, a, B), alpha.bar, dep)
    assert check_tuple(inst, ((a, A),)) == ["X is not reduced"]


def test_candidate_cap():
    with pytest.raises(OracleError, match="cap"):
        enumerate_bruteforce(corpus("toy3"), 4, cap=100)


def test_format_tuple():
    inst = corpus("fin_split")
    (t,) = words(inst, ("", "a b"))
    assert format_tuple(inst, t) == "(1, a b)"


def test_variable_candidates_respect_resources():
    doc = {"resources": ["r1", "r2"],
           "constants": [{"name": "a", "bar": "A", "rho": ["r1"]},
                         {"name": "b", "bar": "B", "rho": ["r2"]}],
           "variables": [{"name": "X", "rho": ["r2"]}],
           "equation": {"lhs": "X", "rhs": "X"}}
    inst = parse_instance(doc)
    assert variable_candidates(inst, inst.variables[0], 1) == [(), (4,), (5,)]
