import json

import pytest

from conftest import corpus
from tracesolve.oracle import enumerate_bruteforce
from tracesolve.solution_nfa import (
    EndoNFA, build_certified, build_exhaustive, load_nfa, save_nfa,
)


@pytest.fixture(scope="module")
def toy2_nfa():
    return build_certified(corpus("toy2"), 3).trim()


def test_certified_nfa_reproduces_oracle(toy2_nfa):
    assert toy2_nfa.solutions(bound=3) == enumerate_bruteforce(corpus("toy2"), 3)
    assert toy2_nfa.is_satisfiable()
    assert toy2_nfa.check_edges() == []
    assert toy2_nfa.replay() == []
    assert len(toy2_nfa.paths) == 4 and not toy2_nfa.failures


def test_cycle_gives_longer_solutions(toy2_nfa):
    # at bound 3 no two recorded paths share a loop yet
    assert toy2_nfa.find_cycle() is None
    nfa = build_certified(corpus("toy2"), 4).trim()
    cycle = nfa.find_cycle()
    assert cycle is not None and nfa.has_infinitely_many()
    edges = nfa.edges
    assert edges[cycle[-1]].dst == edges[cycle[0]].src
    # going round the cycle more often yields solutions beyond the bound
    longer = nfa.solutions(max_paths=200, max_len=60, extra_loops=2)
    top = max(len(t[0]) for t in longer)
    assert top == 6
    assert longer <= enumerate_bruteforce(corpus("toy2"), top)


def test_finite_instance_has_no_cycle():
    nfa = build_certified(corpus("fin_square"), 3).trim()
    assert nfa.find_cycle() is None
    assert len(nfa.solutions()) == 1


def test_unsat_instance_gives_empty_automaton():
    nfa = build_certified(corpus("fin_unsat_counts"), 3).trim()
    assert not nfa.is_satisfiable() and nfa.solutions() == set()


def test_stop_on_cycle_cuts_construction():
    full = build_certified(corpus("fin_commute_inf"), 4)
    early = build_certified(corpus("fin_commute_inf"), 4, stop_on_cycle=True)
    assert early.find_cycle() is not None
    assert len(early.paths) < len(full.paths) and early.stopped_early


def test_json_roundtrip(toy2_nfa, tmp_path):
    doc = toy2_nfa.to_json()
    assert doc["schema"] == "tracesolve-nfa/1"
    again = EndoNFA.from_json(json.loads(json.dumps(doc)))
    assert again.same_as(toy2_nfa)
    assert again.solutions(bound=3) == toy2_nfa.solutions(bound=3)
    p = tmp_path / "nfa.json"
    save_nfa(toy2_nfa, p)
    assert load_nfa(p).same_as(toy2_nfa)
    with pytest.raises(ValueError):
        EndoNFA.from_json(dict(doc, schema="other"))


def test_dot_and_summary(toy2_nfa):
    dot = toy2_nfa.to_dot()
    assert dot.startswith("digraph nfa {") and dot.rstrip().endswith("}")
    s = toy2_nfa.summary()
    assert s["edges"] == len(toy2_nfa.edges) and s["useful"] <= s["states"]


def test_construction_is_deterministic():
    a = build_certified(corpus("toy3"), 2)
    b = build_certified(corpus("toy3"), 2)
    assert a.same_as(b)


def test_parallel_construction_matches(toy2_nfa):
    par = build_certified(corpus("toy2"), 3, jobs=2).trim()
    assert par.same_as(toy2_nfa)


def test_exhaustive_mode_is_sound():
    nfa = build_exhaustive(corpus("toy2"), max_states=300).trim()
    found = nfa.solutions(bound=3)
    assert found and found <= enumerate_bruteforce(corpus("toy2"), 3)
    assert nfa.check_edges() == []
