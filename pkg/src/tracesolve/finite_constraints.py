"""Finite monoids with involution used as rational constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .trace_core import Dependence

DEFAULT_ELEMENT_BUDGET = 4096


class ConstraintError(ValueError):
    pass


@dataclass
class FiniteMonoid:
    """Elements are 0..n-1; `keys` keeps a readable label per element."""

    mult: np.ndarray
    inv: np.ndarray
    unit: int
    zero: int | None = None
    keys: list = field(default_factory=list)

    def __post_init__(self):
        self.mult = np.asarray(self.mult, dtype=np.int32)
        self.inv = np.asarray(self.inv, dtype=np.int32)
        if not self.keys:
            self.keys = list(range(self.size))

    @property
    def size(self) -> int:
        return len(self.inv)

    def mul(self, x: int, y: int) -> int:
        return int(self.mult[x, y])

    def product(self, xs: Iterable[int]) -> int:
        acc = self.unit
        m = self.mult
        for x in xs:
            acc = int(m[acc, x])
        return acc

    def is_zero(self, x: int) -> bool:
        return self.zero is not None and x == self.zero

    def index(self, key) -> int:
        return self.keys.index(key)

    def validate(self, exhaustive_limit: int = 256) -> None:
        n = self.size
        m = self.mult
        if m.shape != (n, n):
            raise ConstraintError("multiplication table has the wrong shape")
        if m.min(initial=0) < 0 or m.max(initial=0) >= n:
            raise ConstraintError("multiplication table leaves the element set")
        u = self.unit
        if not (np.all(m[u, :] == np.arange(n)) and np.all(m[:, u] == np.arange(n))):
            raise ConstraintError("unit is not neutral")
        inv = self.inv
        if not np.all(inv[inv] == np.arange(n)):
            raise ConstraintError("involution is not involutive")
        if inv[u] != u:
            raise ConstraintError("involution does not fix the unit")
        # inv(xy) = inv(y) inv(x)
        if not np.all(inv[m] == m[np.ix_(inv, inv)].T):
            raise ConstraintError("involution is not an anti-automorphism")
        if self.zero is not None:
            z = self.zero
            if not (np.all(m[z, :] == z) and np.all(m[:, z] == z)):
                raise ConstraintError("zero is not absorbing")
        if n <= exhaustive_limit:
            if not np.array_equal(m[m], m[:, m]):
                raise ConstraintError("multiplication is not associative")


@dataclass
class ConstraintMorphism:
    target: FiniteMonoid
    image: dict[int, int]

    def eval(self, word: Iterable[int]) -> int:
        m = self.target.mult
        acc = self.target.unit
        img = self.image
        for x in word:
            try:
                acc = int(m[acc, img[x]])
            except KeyError:
                raise ConstraintError(f"letter {x} has no constraint image") from None
        return acc

    def __call__(self, x: int) -> int:
        return self.image[x]

    def check_involution(self, bar: Callable[[int], int]) -> None:
        inv = self.target.inv
        for x, e in self.image.items():
            b = bar(x)
            if b in self.image and self.image[b] != inv[e]:
                raise ConstraintError(f"image of bar({x}) is not the involute")

    def check_well_defined(self, letters: Sequence[int], dep: Dependence) -> None:
        """Images of independent letters must commute."""
        m = self.target.mult
        for i, x in enumerate(letters):
            for y in letters[i + 1:]:
                if dep.independent(x, y):
                    a, b = self.image[x], self.image[y]
                    if m[a, b] != m[b, a]:
                        raise ConstraintError(
                            f"images of independent letters {x}, {y} do not commute")


def materialize(gens: Mapping[Hashable, Hashable],
                mul: Callable[[Hashable, Hashable], Hashable],
                inv: Callable[[Hashable], Hashable],
                unit: Hashable,
                zero: Hashable | None = None,
                budget: int = DEFAULT_ELEMENT_BUDGET) -> tuple[FiniteMonoid, dict]:
    """Submonoid generated by `gens` (closed under involution).

    Returns the monoid and a map from generator labels to element ids.
    """
    keys = [unit]
    seen = {unit: 0}
    if zero is not None:
        seen[zero] = 1
        keys.append(zero)
    frontier = []
    gen_keys = []
    for g in gens.values():
        for k in (g, inv(g)):
            if k not in seen:
                seen[k] = len(keys)
                keys.append(k)
                frontier.append(k)
            gen_keys.append(k)
    gen_keys = list(dict.fromkeys(gen_keys))
    while frontier:
        nxt = []
        for k in frontier:
            for g in gen_keys:
                for p in (mul(k, g), mul(g, k), inv(k)):
                    if p not in seen:
                        seen[p] = len(keys)
                        keys.append(p)
                        nxt.append(p)
                        if len(keys) > budget:
                            raise ConstraintError(
                                f"monoid closure exceeds the element budget {budget}")
        frontier = nxt
    n = len(keys)
    table = np.empty((n, n), dtype=np.int32)
    for i, a in enumerate(keys):
        for j, b in enumerate(keys):
            p = mul(a, b)
            if p not in seen:
                raise ConstraintError("closure is not multiplicatively closed")
            table[i, j] = seen[p]
    invt = np.array([seen[inv(k)] for k in keys], dtype=np.int32)
    mon = FiniteMonoid(table, invt, 0, 1 if zero is not None else None, keys)
    return mon, {g: seen[k] for g, k in gens.items()}


def trivial_monoid() -> FiniteMonoid:
    """{1, 0}: the smallest monoid able to hold the marker's zero."""
    return FiniteMonoid(np.array([[0, 1], [1, 1]]), np.array([0, 1]), 0, 1, ["1", "0"])


def adjoin_zero(n: FiniteMonoid) -> FiniteMonoid:
    if n.zero is not None:
        return n
    k = n.size
    table = np.full((k + 1, k + 1), k, dtype=np.int32)
    table[:k, :k] = n.mult
    inv = np.append(n.inv, k)
    return FiniteMonoid(table, inv, n.unit, k, list(n.keys) + ["0"])


# -- the reducedness monoid ---------------------------------------------------

ZERO = "0"


def build_reduction_monoid(letters: Sequence[int], rho: Callable[[int], int],
                           bar: Callable[[int], int],
                           forbidden: set[tuple[int, int]] | None = None,
                           budget: int = DEFAULT_ELEMENT_BUDGET
                           ) -> tuple[FiniteMonoid, ConstraintMorphism]:
    """Triples (P, S, R) of minimal letters, resources and maximal letters.

    A product is zero as soon as a maximal letter of the left factor meets a
    minimal letter of the right factor in a forbidden pair (default: a a-bar).
    """
    if forbidden is None:
        forbidden = {(a, bar(a)) for a in letters}

    def mul(x, y):
        if x == ZERO or y == ZERO:
            return ZERO
        p, s, r = x
        p2, s2, r2 = y
        for a in r:
            for b in p2:
                if (a, b) in forbidden:
                    return ZERO
        pp = p | frozenset(a for a in p2 if not rho(a) & s)
        rr = r2 | frozenset(a for a in r if not rho(a) & s2)
        return (pp, s | s2, rr)

    def inv(x):
        if x == ZERO:
            return ZERO
        p, s, r = x
        return (frozenset(bar(a) for a in r), s, frozenset(bar(a) for a in p))

    unit = (frozenset(), 0, frozenset())
    gens = {a: (frozenset([a]), rho(a), frozenset([a])) for a in letters}
    mon, img = materialize(gens, mul, inv, unit, ZERO, budget)
    return mon, ConstraintMorphism(mon, dict(img))


# -- products -------------------------------------------------------------------

def _rees_pair_ops(n1: FiniteMonoid, n2: FiniteMonoid, dual: bool):
    z1, z2 = n1.zero, n2.zero

    def norm(p):
        if p == ZERO:
            return p
        a, b = p
        if (z1 is not None and a == z1) or (z2 is not None and b == z2):
            return ZERO
        return p

    def mul(x, y):
        if x == ZERO or y == ZERO:
            return ZERO
        if dual:
            return norm((n1.mul(x[0], y[0]), n2.mul(y[1], x[1])))
        return norm((n1.mul(x[0], y[0]), n2.mul(x[1], y[1])))

    return norm, mul


def product_monoid(n1: FiniteMonoid, n2: FiniteMonoid,
                   gens: Mapping[Hashable, tuple[int, int]] | None = None,
                   budget: int = DEFAULT_ELEMENT_BUDGET):
    """Direct product; pairs with a zero component collapse to one zero.

    With `gens` only the generated part is built and the generator map is
    returned alongside; otherwise all pairs are materialised.
    """
    norm, mul = _rees_pair_ops(n1, n2, dual=False)
    has_zero = n1.zero is not None or n2.zero is not None

    def inv(x):
        if x == ZERO:
            return ZERO
        return (int(n1.inv[x[0]]), int(n2.inv[x[1]]))

    unit = (n1.unit, n2.unit)
    if gens is None:
        gens = {(a, b): (a, b) for a in range(n1.size) for b in range(n2.size)}
    gens = {g: norm(v) for g, v in gens.items()}
    return materialize(gens, mul, inv, unit, ZERO if has_zero else None, budget)


def dual_product(n: FiniteMonoid, gens: Mapping[Hashable, tuple[int, int]] | None = None,
                 budget: int = DEFAULT_ELEMENT_BUDGET):
    """N x N^T with (x, y^T)(x', y'^T) = (x x', (y' y)^T) and bar (x, y^T) = (y, x^T).

    The involution of N itself is not used.
    """
    norm, mul = _rees_pair_ops(n, n, dual=True)

    def inv(x):
        if x == ZERO:
            return ZERO
        return (x[1], x[0])

    unit = (n.unit, n.unit)
    if gens is None:
        gens = {(a, b): (a, b) for a in range(n.size) for b in range(n.size)}
    gens = {g: norm(v) for g, v in gens.items()}
    return materialize(gens, mul, inv, unit, ZERO if n.zero is not None else None, budget)


def transformation_monoid(states: int, letter_maps: Mapping[Hashable, Sequence[int]],
                          budget: int = DEFAULT_ELEMENT_BUDGET):
    """Transition monoid of a deterministic automaton (no involution: bar = id).

    Used as the left factor of a dual product, which supplies the involution.
    """
    def mul(f, g):  # first f then g
        return tuple(g[i] for i in f)

    unit = tuple(range(states))
    gens = {a: tuple(m) for a, m in letter_maps.items()}
    return materialize(gens, mul, lambda f: f, unit, None, budget)
