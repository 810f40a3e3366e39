import copy
import json

import pytest

from conftest import CORPUS, corpus
from tracesolve.instance import InstanceError, instance_to_json, load_instance, parse_instance

BASE = {
    "schema": "tracesolve-instance/1",
    "resources": ["r1", "r2"],
    "constants": [{"name": "a", "bar": "A", "rho": ["r1"]},
                  {"name": "b", "bar": "B", "rho": ["r2"]}],
    "variables": [{"name": "X"}],
    "equation": {"lhs": "X a", "rhs": "a X"},
}


def variant(**changes):
    d = copy.deepcopy(BASE)
    for k, v in changes.items():
        d[k] = v
    return d


def test_parse_basic():
    inst = parse_instance(BASE)
    assert inst.k == 1 and inst.mode == "monoid"
    assert inst.show(inst.lhs) == "X a"
    assert inst.var_rho[inst.variables[0]] == 0b11
    assert inst.init_length() == 2 * 3 + 2 * 4 + 3


@pytest.mark.parametrize("doc,msg", [
    (variant(schema="other/1"), "unknown schema"),
    (variant(mode="ring"), "mode must be"),
    (variant(resources=[]), "resources must be"),
    (variant(equation={"lhs": "X c", "rhs": "X"}), "unknown letter 'c'"),
    (variant(constants=[{"name": "a", "bar": "A", "rho": []}]), "empty resource set"),
    (variant(constants=[{"name": "a", "bar": "A", "rho": ["r9"]}]), "unknown resource"),
    (variant(variables=[{"name": "a"}]), "duplicate name"),
    (variant(variables=[{"name": "X", "bar": "X"}]), "self-involuting"),
    (variant(distinguished=["Y"]), "distinguished"),
])
def test_parse_errors(doc, msg):
    with pytest.raises(InstanceError, match=msg):
        parse_instance(doc)


Z2 = {"elements": ["e", "o", "0"], "unit": "e", "zero": "0",
      "mult": [["e", "o", "0"], ["o", "e", "0"], ["0", "0", "0"]],
      "inv": ["e", "o", "0"], "images": {"a": "o"}}


def test_monoid_images_and_bars():
    inst = parse_instance(variant(monoid=Z2))
    a, A, b, B = inst.constants()
    o = inst.monoid.index("o")
    assert inst.const_mu[a] == inst.const_mu[A] == o
    assert inst.const_mu[b] == inst.monoid.unit
    # the marker has its own zero, distinct from the file's
    assert inst.monoid.zero != inst.user_zero


def test_monoid_errors():
    bad = copy.deepcopy(Z2)
    bad["images"] = {"a": "0"}
    with pytest.raises(InstanceError, match="maps to zero"):
        parse_instance(variant(monoid=bad))
    bad = copy.deepcopy(Z2)
    bad["mult"][0][1] = "e"
    with pytest.raises(InstanceError, match="unit"):
        parse_instance(variant(monoid=bad))
    with pytest.raises(InstanceError, match="constrained to zero"):
        parse_instance(variant(monoid=Z2, variables=[{"name": "X", "mu": "0"}]))


def test_mu_allowed_excludes_zeros():
    inst = parse_instance(variant(monoid=Z2))
    X = inst.variables[0]
    allowed = [e for e in range(inst.monoid.size) if inst.mu_allowed(X, e)]
    assert [inst.monoid.keys[e] for e in allowed] == ["e", "o"]
    assert len(inst.mu_assignments()) == 2


def test_roundtrip_through_json():
    for name in ("toy4", "fin_constrained", "palindrome_self", "raag_conj"):
        inst = corpus(name)
        again = parse_instance(json.loads(json.dumps(instance_to_json(inst))))
        assert again.lhs == inst.lhs and again.rhs == inst.rhs
        assert again.const_mu == inst.const_mu
        assert again.var_mu == inst.var_mu
        assert again.monoid.size == inst.monoid.size


def test_load_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InstanceError, match="invalid JSON"):
        load_instance(p)
    with pytest.raises(InstanceError):
        load_instance(tmp_path / "missing.json")
    assert load_instance(CORPUS / "toy1.json").name == "toy1"
