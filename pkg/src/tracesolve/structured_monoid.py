"""Resource monoids extended by a type relation.

A type pair (x, y) makes x commute with y on top of the resource-based
commutation.  Letter types are what the solver uses; quasi-letter types
(x and y two-letter words a a-bar) are supported for equality and factor
tests by explicit rewriting.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .trace_core import Dependence, factor_of, normal_form

DEFAULT_NODE_BUDGET = 200_000


class BudgetExceeded(RuntimeError):
    pass


Key = int | tuple


@dataclass
class TypeRelation:
    pairs: dict = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Key, Key]]) -> "TypeRelation":
        out: dict = {}
        clash = []
        for x, y in pairs:
            if x in out and out[x] != y:
                clash.append(x)
            out[x] = y
        rel = cls(out)
        rel._clash = clash
        return rel

    def letter_pairs(self) -> dict[int, int]:
        return {x: y for x, y in self.pairs.items() if isinstance(x, int)}

    def quasi_pairs(self) -> dict[tuple, tuple]:
        return {x: y for x, y in self.pairs.items() if isinstance(x, tuple)}

    def __len__(self):
        return len(self.pairs)


def _bar_key(k: Key, bar: Callable[[int], int]) -> Key:
    if isinstance(k, tuple):
        return tuple(bar(x) for x in reversed(k))
    return bar(k)


def validate_type(theta: TypeRelation, B: set[int], X: set[int],
                  rho: Callable[[int], int], bar: Callable[[int], int],
                  is_a_letter: Callable[[int], bool]) -> list[str]:
    """Violations of the type-relation invariants (empty list: ok)."""
    issues = []
    for x in getattr(theta, "_clash", []):
        issues.append(f"functionality: {x!r} has two types")
    for x, y in theta.pairs.items():
        bx, by = _bar_key(x, bar), _bar_key(y, bar)
        if theta.pairs.get(bx) != by:
            issues.append(f"involution closure: missing ({bx!r}, {by!r})")
        ys = y if isinstance(y, tuple) else (y,)
        if any(is_a_letter(c) or c in X for c in ys):
            issues.append(f"range: {y!r} involves a base constant or a variable")
        if any(c not in B for c in ys):
            issues.append(f"range: {y!r} not in B")
        if isinstance(x, tuple):
            if len(x) != 2 or x[1] != bar(x[0]) or len(ys) != 2:
                issues.append(f"shape: {x!r} is not a quasi-letter of matching length")
            elif is_a_letter(x[0]):
                issues.append(f"shape: {x!r} uses a base constant")
        elif x in X:
            pass
        else:
            if is_a_letter(x):
                issues.append(f"shape: base constant {x} has a type")
            if x not in B:
                issues.append(f"domain: {x} not in B")
            if isinstance(y, int) and x in B and y in B and rho(x) != rho(y):
                issues.append(f"resources: {x} and its type {y} differ")
    return issues


def _rewrites(word: tuple, dep: Dependence, quasi: Mapping[tuple, tuple]):
    n = len(word)
    for i in range(n - 1):
        if dep.independent(word[i], word[i + 1]):
            yield word[:i] + (word[i + 1], word[i]) + word[i + 2:]
    for x, y in quasi.items():
        for u, v in ((x, y), (y, x)):
            k = len(u) + len(v)
            for i in range(n - k + 1):
                if word[i:i + len(u)] == u and word[i + len(u):i + k] == v:
                    yield word[:i] + v + u + word[i + k:]


def rewrite_class(word: Sequence[int], dep: Dependence, quasi: Mapping[tuple, tuple],
                  budget: int = DEFAULT_NODE_BUDGET) -> set[tuple]:
    start = tuple(word)
    seen = {start}
    todo = deque([start])
    while todo:
        w = todo.popleft()
        for w2 in _rewrites(w, dep, quasi):
            if w2 not in seen:
                seen.add(w2)
                if len(seen) > budget:
                    raise BudgetExceeded(f"rewriting class exceeds {budget} words")
                todo.append(w2)
    return seen


def homogeneous_dependence(rho: Callable[[int], int] | Mapping[int, int],
                           theta: TypeRelation | Mapping | None) -> Dependence:
    if isinstance(theta, TypeRelation):
        th = theta.letter_pairs()
    else:
        th = dict(theta or {})
    return Dependence(rho, th)


def homogeneous_equal(u: Sequence[int], v: Sequence[int],
                      rho: Callable[[int], int] | Mapping[int, int],
                      theta: TypeRelation | Mapping | None = None,
                      budget: int = DEFAULT_NODE_BUDGET) -> bool:
    dep = homogeneous_dependence(rho, theta)
    quasi = theta.quasi_pairs() if isinstance(theta, TypeRelation) else {}
    if not quasi:
        return normal_form(u, dep) == normal_form(v, dep)
    if sorted(u) != sorted(v):
        return False
    return tuple(v) in rewrite_class(u, dep, quasi, budget)


def homogeneous_factor(u: Sequence[int], v: Sequence[int],
                       rho: Callable[[int], int] | Mapping[int, int],
                       theta: TypeRelation | Mapping | None = None,
                       budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """Is u a factor of v in the monoid (v = p u q)?"""
    if len(u) > len(v):
        return False
    cu, cv = {}, {}
    for x in u:
        cu[x] = cu.get(x, 0) + 1
    for x in v:
        cv[x] = cv.get(x, 0) + 1
    if any(cv.get(x, 0) < k for x, k in cu.items()):
        return False
    dep = homogeneous_dependence(rho, theta)
    quasi = theta.quasi_pairs() if isinstance(theta, TypeRelation) else {}
    if not quasi:
        return factor_of(u, v, dep)
    # with quasi-letter types: every split p, q of the class of v
    target = tuple(u)
    cls = rewrite_class(v, dep, quasi, budget)
    m = len(u)
    for w in cls:
        for i in range(len(w) - m + 1):
            if homogeneous_equal(w[i:i + m], target, rho, theta, budget):
                return True
    return False
