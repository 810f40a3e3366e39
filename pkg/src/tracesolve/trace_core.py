"""Traces over a resource alphabet with involution.

Letters are small integers.  The id space is partitioned so that the kind of
a letter can be read off its id:

    0                      the marker #
    2 .. LIFT_BASE-1       base constants (bar pairs are (2i, 2i+1))
    LIFT_BASE ..           lifted copies (a, S), id = LIFT_BASE + S*1024 + a
    DIST_BASE ..           distinguished letters c_1 .. c_k of final states
    FRESH_BASE ..          constants created by compressions
    VAR_BASE ..            variables of the input equation
    FRESH_VAR_BASE ..      variables created by substitutions

Every non-marker letter x has bar x ^ 1, except base constants declared
self-involuting (only legal before `group_reduction.eliminate_self_involuting`).
A trace is stored as its canonical word: the linearisation obtained by always
emitting the least letter among the minimal remaining positions.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

MARKER = 0
LIFT_BASE = 10_000
LIFT_STRIDE = 1024
DIST_BASE = 500_000
FRESH_BASE = 1_000_000
VAR_BASE = 2_000_000
FRESH_VAR_BASE = 3_000_000
MAX_RESOURCES = 8

Word = tuple


class TraceError(ValueError):
    pass


def is_variable(x: int) -> bool:
    return x >= VAR_BASE


def is_lifted(x: int) -> bool:
    return LIFT_BASE <= x < DIST_BASE


def is_fresh(x: int) -> bool:
    return FRESH_BASE <= x < VAR_BASE


def is_distinguished(x: int) -> bool:
    return DIST_BASE <= x < FRESH_BASE


def is_base(x: int) -> bool:
    return x < LIFT_BASE


def is_a_letter(x: int) -> bool:
    """Letters fixed by every transition label: #, base constants and lifted copies."""
    return x < DIST_BASE


def lifted(a: int, s: int) -> int:
    if not is_base(a) or a == MARKER:
        raise TraceError(f"only base constants can be lifted, got {a}")
    return LIFT_BASE + s * LIFT_STRIDE + a


def unlift(x: int) -> int:
    if is_lifted(x):
        return (x - LIFT_BASE) % LIFT_STRIDE
    return x


def lift_set(x: int) -> int:
    return (x - LIFT_BASE) // LIFT_STRIDE


def distinguished(i: int) -> int:
    return DIST_BASE + 2 * i


def popcount(m: int) -> int:
    return bin(m).count("1")


@dataclass
class ResourceAlphabet:
    """Base constants with resources, bars and display names."""

    resources: list[str]
    names: dict[int, str] = field(default_factory=dict)
    rho_base: dict[int, int] = field(default_factory=dict)
    self_involuting: set[int] = field(default_factory=set)

    def __post_init__(self):
        if len(self.resources) > MAX_RESOURCES:
            raise TraceError(
                f"{len(self.resources)} resources exceed the cap of {MAX_RESOURCES}")
        self.names.setdefault(MARKER, "#")
        self.rho_base.setdefault(MARKER, self.full)

    @property
    def full(self) -> int:
        return (1 << len(self.resources)) - 1

    def add_pair(self, name: str, bar_name: str, rho: int) -> tuple[int, int]:
        if rho == 0:
            raise TraceError(f"constant {name!r} has an empty resource set")
        if rho & ~self.full:
            raise TraceError(f"constant {name!r} uses an unknown resource")
        base = 2 + 2 * (len([x for x in self.rho_base if x != MARKER]) // 2)
        if base + 1 >= LIFT_STRIDE:
            raise TraceError("too many constants")
        if name == bar_name:
            self.self_involuting.add(base)
            self.names[base] = name
            self.rho_base[base] = rho
            # keep ids paired; the odd slot stays unused
            self.rho_base[base + 1] = rho
            self.names[base + 1] = name + "~unused"
            return base, base
        self.names[base], self.names[base + 1] = name, bar_name
        self.rho_base[base] = self.rho_base[base + 1] = rho
        return base, base + 1

    def constants(self) -> list[int]:
        """Base constants other than the marker (without unused slots)."""
        out = []
        for x in sorted(self.rho_base):
            if x == MARKER:
                continue
            if x ^ 1 in self.self_involuting and x & 1:
                continue
            out.append(x)
        return out

    def bar(self, x: int) -> int:
        if x == MARKER or x in self.self_involuting:
            return x
        if is_lifted(x):
            return lifted(self.bar(unlift(x)), lift_set(x))
        return x ^ 1

    def rho(self, x: int) -> int:
        if is_lifted(x):
            return lift_set(x)
        try:
            return self.rho_base[x]
        except KeyError:
            raise TraceError(f"unknown letter {x}") from None

    def name(self, x: int) -> str:
        if x in self.names:
            return self.names[x]
        if is_lifted(x):
            return f"({self.name(unlift(x))},{self.set_name(lift_set(x))})"
        if is_distinguished(x):
            i = (x - DIST_BASE) // 2 + 1
            return f"c{i}" + ("~" if x & 1 else "")
        if is_fresh(x):
            return f"f{(x - FRESH_BASE) // 2}" + ("~" if x & 1 else "")
        if is_variable(x):
            base = VAR_BASE if x < FRESH_VAR_BASE else FRESH_VAR_BASE
            tag = "X" if x < FRESH_VAR_BASE else "Z"
            return f"{tag}{(x - base) // 2}" + ("~" if x & 1 else "")
        return f"?{x}"

    def set_name(self, s: int) -> str:
        return "{" + ",".join(r for i, r in enumerate(self.resources) if s >> i & 1) + "}"

    def words(self, word: Iterable[int]) -> str:
        return " ".join(self.name(x) for x in word)

    def dependence(self, theta: Mapping[int, int] | None = None,
                   extra_rho: Mapping[int, int] | None = None) -> "Dependence":
        rho = dict(extra_rho or {})
        return Dependence(lambda x: rho[x] if x in rho else self.rho(x), theta)


class Dependence:
    """Independence relation: disjoint resources or a type pair."""

    __slots__ = ("_rho", "_cache", "_pairs", "theta")

    def __init__(self, rho: Callable[[int], int] | Mapping[int, int],
                 theta: Mapping[int, int] | None = None):
        self._rho = rho if callable(rho) else rho.__getitem__
        self._cache: dict[int, int] = {}
        self._pairs: dict[tuple[int, int], bool] = {}
        self.theta = dict(theta or {})

    def rho(self, x: int) -> int:
        r = self._cache.get(x)
        if r is None:
            r = self._cache[x] = self._rho(x)
        return r

    def rho_word(self, word: Iterable[int]) -> int:
        m = 0
        for x in word:
            m |= self.rho(x)
        return m

    def independent(self, x: int, y: int) -> bool:
        key = (x, y)
        r = self._pairs.get(key)
        if r is None:
            if x == y:
                r = False
            elif not self.rho(x) & self.rho(y):
                r = True
            else:
                th = self.theta
                r = bool(th) and (th.get(x) == y or th.get(y) == x)
            self._pairs[key] = self._pairs[(y, x)] = r
        return r


def predecessors(word: Sequence[int], dep: Dependence) -> list[list[int]]:
    """For each position, the earlier positions it depends on directly."""
    preds: list[list[int]] = []
    for j, y in enumerate(word):
        preds.append([i for i in range(j) if not dep.independent(word[i], y)])
    return preds


def normal_form(word: Iterable[int], dep: Dependence) -> Word:
    """Lexicographically least representative of the trace."""
    word = tuple(word)
    n = len(word)
    if n < 2:
        return word
    indep = dep.independent
    letters = list(dict.fromkeys(word))
    if not any(indep(x, y) for i, x in enumerate(letters) for y in letters[i + 1:]):
        return word     # nothing commutes
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    # linking to the latest occurrence of each dependent letter is enough:
    # earlier occurrences of that letter sit below it already
    last: dict[int, int] = {}
    for j, y in enumerate(word):
        for z, i in last.items():
            if not indep(z, y):
                succ[i].append(j)
                indeg[j] += 1
        last[y] = j
    heap = [(word[i], i) for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        x, i = heapq.heappop(heap)
        out.append(x)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, (word[j], j))
    return tuple(out)


@dataclass(frozen=True)
class Trace:
    word: Word
    dep: Dependence = field(compare=False, hash=False, repr=False)

    @classmethod
    def of(cls, word: Iterable[int], dep: Dependence) -> "Trace":
        return cls(normal_form(word, dep), dep)

    def __len__(self):
        return len(self.word)

    def __mul__(self, other: "Trace") -> "Trace":
        return Trace.of(self.word + other.word, self.dep)


def trace_equal(u: Iterable[int], v: Iterable[int], dep: Dependence) -> bool:
    return normal_form(u, dep) == normal_form(v, dep)


def order_relation(word: Sequence[int], dep: Dependence) -> list[int]:
    """Bitmask per position of all positions strictly below it."""
    below = [0] * len(word)
    last: dict[int, int] = {}
    for j, y in enumerate(word):
        m = 0
        for z, i in last.items():
            if not dep.independent(z, y):
                m |= below[i] | (1 << i)
        below[j] = m
        last[y] = j
    return below


def hasse_arcs(word: Sequence[int], dep: Dependence) -> list[tuple[int, int]]:
    """Arcs of the Hasse diagram, as pairs of 0-based positions of `word`."""
    below = order_relation(word, dep)
    arcs = []
    for j in range(len(word)):
        cand = below[j]
        covered = 0
        i = cand
        while i:
            low = i & -i
            p = low.bit_length() - 1
            covered |= below[p]
            i ^= low
        direct = cand & ~covered
        while direct:
            low = direct & -direct
            arcs.append((low.bit_length() - 1, j))
            direct ^= low
    arcs.sort()
    return arcs


def min_positions(word: Sequence[int], dep: Dependence) -> list[int]:
    return [j for j, y in enumerate(word)
            if all(dep.independent(word[i], y) for i in range(j))]


def max_positions(word: Sequence[int], dep: Dependence) -> list[int]:
    n = len(word)
    return [i for i, x in enumerate(word)
            if all(dep.independent(x, word[j]) for j in range(i + 1, n))]


def min_elements(word: Sequence[int], dep: Dependence) -> set[int]:
    return {word[i] for i in min_positions(word, dep)}


def max_elements(word: Sequence[int], dep: Dependence) -> set[int]:
    return {word[i] for i in max_positions(word, dep)}


def involute_word(word: Sequence[int], bar: Callable[[int], int]) -> Word:
    return tuple(bar(x) for x in reversed(word))


def involute(word: Sequence[int], bar: Callable[[int], int], dep: Dependence) -> Word:
    return normal_form(involute_word(word, bar), dep)


def is_reduced(word: Sequence[int], bar: Callable[[int], int], dep: Dependence) -> bool:
    """No factor a a-bar in any representative, i.e. no such Hasse arc."""
    w = tuple(word)
    return not any(w[j] == bar(w[i]) for i, j in hasse_arcs(w, dep))


def remove_position(word: Sequence[int], i: int) -> Word:
    return tuple(word[:i]) + tuple(word[i + 1:])


def occurrence_sets(v: Sequence[int], w: Sequence[int]) -> Iterable[list[int]]:
    """Candidate position sets of w for a factor v: runs of equal letters stay consecutive."""
    need: dict[int, int] = {}
    for x in v:
        need[x] = need.get(x, 0) + 1
    where: dict[int, list[int]] = {}
    for i, x in enumerate(w):
        where.setdefault(x, []).append(i)
    letters = sorted(need)
    choices = []
    for x in letters:
        pos = where.get(x, [])
        k = need[x]
        if len(pos) < k:
            return
        choices.append([pos[s:s + k] for s in range(len(pos) - k + 1)])

    def rec(i, acc):
        if i == len(choices):
            yield sorted(acc)
            return
        for c in choices[i]:
            yield from rec(i + 1, acc + c)

    yield from rec(0, [])


def factor_of(v: Sequence[int], w: Sequence[int], dep: Dependence) -> bool:
    """Is v a factor of w, i.e. w = p v q for some traces p, q?

    A position set P of w is a factor occurrence exactly when it is convex in
    the dependence order and the induced trace equals v.
    """
    v = normal_form(v, dep)
    w = normal_form(w, dep)
    if len(v) > len(w):
        return False
    if not v:
        return True
    below = order_relation(w, dep)
    for P in occurrence_sets(v, w):
        pm = 0
        for p in P:
            pm |= 1 << p
        convex = True
        for r in range(len(w)):
            if pm >> r & 1:
                continue
            # r lies strictly between two members of P
            if below[r] & pm and any(below[p] >> r & 1 for p in P):
                convex = False
                break
        if convex and normal_form([w[p] for p in P], dep) == v:
            return True
    return False


def project_pi0(word: Iterable[int], base_dep: Dependence) -> Word:
    """Forget the resource component of lifted letters."""
    return normal_form([unlift(x) for x in word], base_dep)


def parikh(word: Iterable[int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for x in word:
        out[x] = out.get(x, 0) + 1
    return out
