import numpy as np
import pytest
from hypothesis import given, settings

from bruteforce import bf_reduced
from conftest import alphabet_and_words
from tracesolve.finite_constraints import (
    ZERO, ConstraintError, ConstraintMorphism, FiniteMonoid, adjoin_zero, build_reduction_monoid,
    dual_product, materialize, product_monoid, transformation_monoid, trivial_monoid,
)
from tracesolve.trace_core import is_reduced


def z2():
    return FiniteMonoid(np.array([[0, 1], [1, 0]]), np.array([0, 1]), 0, None, ["e", "o"])


def test_validate_accepts_small_monoids():
    z2().validate()
    trivial_monoid().validate()
    adjoin_zero(z2()).validate()


@pytest.mark.parametrize("mult,inv,unit,msg", [
    ([[0, 1], [1, 1]], [0, 1], 1, "unit"),
    ([[0, 1], [1, 0]], [1, 0], 0, "fix the unit"),
    ([[0, 1, 2], [1, 2, 0], [2, 0, 1]], [0, 1, 2], 0, None),   # Z3 with identity as bar: fine
    ([[0, 1, 2], [1, 2, 2], [2, 2, 1]], [0, 1, 2], 0, "associative"),
])
def test_validate_rejects(mult, inv, unit, msg):
    m = FiniteMonoid(np.array(mult), np.array(inv), unit)
    if msg is None:
        m.validate()
    else:
        with pytest.raises(ConstraintError, match=msg):
            m.validate()


def test_anti_automorphism_is_checked():
    # x -> x is not an anti-automorphism of a noncommutative monoid
    f = transformation_monoid(2, {"s": (1, 1), "t": (0, 0)})[0]
    with pytest.raises(ConstraintError, match="anti-automorphism"):
        f.validate()


def test_adjoin_zero_absorbs():
    m = adjoin_zero(z2())
    assert m.size == 3 and m.zero == 2
    assert m.product([1, 2, 1]) == 2
    assert adjoin_zero(m) is m


def test_materialize_closes_generators():
    mon, gens = materialize({"g": 1}, lambda x, y: (x + y) % 4, lambda x: (-x) % 4, 0)
    assert mon.size == 4
    mon.validate()
    assert mon.keys[gens["g"]] == 1


def test_materialize_budget():
    with pytest.raises(ConstraintError, match="budget"):
        materialize({"g": 1}, lambda x, y: (x + y) % 50, lambda x: (-x) % 50, 0, budget=10)


def test_products_are_monoids_with_involution():
    m = adjoin_zero(z2())
    p, _ = product_monoid(m, z2())
    p.validate()
    assert p.zero is not None
    d, _ = dual_product(m)
    d.validate()
    f, gens = transformation_monoid(3, {"x": (1, 2, 2)})
    assert f.size == 3      # id, x, x^2
    assert f.mul(gens["x"], gens["x"]) == f.keys.index((2, 2, 2))


def test_morphism_checks():
    m = z2()
    ok = ConstraintMorphism(m, {2: 1, 3: 1})
    ok.check_involution(lambda x: x ^ 1)
    assert ok.eval([2, 3, 2]) == 1
    with pytest.raises(ConstraintError):
        ok.eval([9])
    f, gens = transformation_monoid(2, {"s": (1, 1), "t": (0, 0)})
    bad = ConstraintMorphism(f, {2: gens["s"], 4: gens["t"]})

    class AllIndependent:
        def independent(self, x, y):
            return True
    with pytest.raises(ConstraintError, match="commute"):
        bad.check_well_defined([2, 4], AllIndependent())


def test_reduction_monoid_is_valid():
    from tracesolve.trace_core import ResourceAlphabet
    alpha = ResourceAlphabet(["r1", "r2"])
    alpha.add_pair("a", "A", 1)
    alpha.add_pair("b", "B", 2)
    mon, morph = build_reduction_monoid(alpha.constants(), alpha.rho, alpha.bar)
    mon.validate()
    morph.check_involution(alpha.bar)
    morph.check_well_defined(alpha.constants(), alpha.dependence())
    assert mon.keys[mon.zero] == ZERO


@settings(max_examples=1000, deadline=None)
@given(alphabet_and_words(count=1, max_len=6))
def test_reduction_monoid_detects_cancellation(data):
    alpha, (w,) = data
    dep = alpha.dependence()
    mon, morph = build_reduction_monoid(alpha.constants(), alpha.rho, alpha.bar)
    nonzero = not mon.is_zero(morph.eval(w))
    assert nonzero == is_reduced(w, alpha.bar, dep) == bf_reduced(w, alpha.bar, dep)
