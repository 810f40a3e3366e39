"""Extended equations (automaton states), their weights and solutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .finite_constraints import ConstraintMorphism, FiniteMonoid
from .structured_monoid import TypeRelation, validate_type
from .trace_core import (
    DIST_BASE, FRESH_BASE, FRESH_VAR_BASE, MARKER, VAR_BASE, Dependence,
    ResourceAlphabet, distinguished, involute_word, is_a_letter, is_fresh,
    is_variable, normal_form, popcount, unlift,
)


class StateError(ValueError):
    pass


@dataclass
class Budgets:
    factor: int = 64
    eq_length: int = 0        # |C|: bound on |W| and on fresh letters
    var_occurrences: int = 0
    steps: int = 20_000

    def scaled(self, n: int, occ: int) -> "Budgets":
        return Budgets(self.factor, self.eq_length or self.factor * n,
                       self.var_occurrences or self.factor * max(occ, 1), self.steps)


@dataclass
class Context:
    """Everything about an instance that no transition changes."""

    alphabet: ResourceAlphabet
    monoid: FiniteMonoid
    mu0: dict[int, int]               # base constants (and #) -> element
    variables: list[int]              # original variables (even ids)
    var_names: dict[int, str] = field(default_factory=dict)
    var_rho: dict[int, int] = field(default_factory=dict)
    var_mu: dict[int, int] = field(default_factory=dict)
    budgets: Budgets = field(default_factory=Budgets)

    @property
    def k(self) -> int:
        return len(self.variables)

    @property
    def n_resources(self) -> int:
        return len(self.alphabet.resources)

    @property
    def full(self) -> int:
        return self.alphabet.full

    @cached_property
    def base_dep(self) -> Dependence:
        return Dependence(self.alphabet.rho)

    def distinguished(self) -> list[int]:
        return [distinguished(i) for i in range(self.k)]

    def bar(self, x: int) -> int:
        return self.alphabet.bar(x)

    def rho_a(self, x: int) -> int:
        return self.alphabet.rho(x)

    def mu_a(self, x: int) -> int:
        return self.mu0[unlift(x)]

    def name(self, x: int) -> str:
        if x in self.var_names:
            return self.var_names[x]
        if x ^ 1 in self.var_names and is_variable(x):
            return self.var_names[x ^ 1] + "~"
        return self.alphabet.name(x)

    def show(self, word: Iterable[int]) -> str:
        return " ".join(self.name(x) for x in word) or "1"


@dataclass(frozen=True)
class ExtendedEquation:
    """(W, B, X, rho, theta, mu).

    `B` lists the explicit constants: the base alphabet with # plus letters
    created by compressions.  Lifted copies (a, S) belong to every B
    implicitly and are not counted in the weight.  `X` holds the even ids of
    variables; bars are implied.  `rho`/`mu` entries exist for every
    non-base letter of B and for every variable and its bar.
    """

    W: tuple
    B: frozenset
    X: frozenset
    rho_items: tuple
    mu_items: tuple
    theta_items: tuple = ()

    @cached_property
    def rho(self) -> dict[int, int]:
        return dict(self.rho_items)

    @cached_property
    def mu(self) -> dict[int, int]:
        return dict(self.mu_items)

    @cached_property
    def theta(self) -> dict[int, int]:
        return dict(self.theta_items)

    def variables_with_bars(self) -> set[int]:
        return set(self.X) | {x ^ 1 for x in self.X}


def rho_of(ctx: Context, st: ExtendedEquation, x: int) -> int:
    r = st.rho.get(x)
    if r is None:
        return ctx.rho_a(x)
    return r


def mu_of(ctx: Context, st: ExtendedEquation, x: int) -> int:
    m = st.mu.get(x)
    if m is None:
        return ctx.mu_a(x)
    return m


def dependence(ctx: Context, st: ExtendedEquation, theta: Mapping | None = None) -> Dependence:
    r = st.rho
    rho_a = ctx.rho_a
    return Dependence(lambda x: r[x] if x in r else rho_a(x),
                      st.theta if theta is None else theta)


def make_state(ctx: Context, W: Sequence[int], B: Iterable[int], X: Iterable[int],
               rho: Mapping[int, int], mu: Mapping[int, int],
               theta: Mapping[int, int] | None = None) -> ExtendedEquation:
    """Build a state; fills bar entries and normalises W."""
    inv = ctx.monoid.inv
    r, m = {}, {}
    for x, v in rho.items():
        if is_a_letter(x):
            continue
        r[x] = v
        r.setdefault(bar_any(ctx, x), v)
    for x, v in mu.items():
        if is_a_letter(x):
            continue
        m[x] = int(v)
        m.setdefault(bar_any(ctx, x), int(inv[v]))
    th = dict(theta or {})
    for x, y in list(th.items()):
        th.setdefault(bar_any(ctx, x), bar_any(ctx, y))
    Xs = frozenset(x & ~1 for x in X)
    keep = set(B) | {x for v in Xs for x in (v, v ^ 1)}
    r = {x: v for x, v in r.items() if x in keep}
    m = {x: v for x, v in m.items() if x in keep}
    dep = Dependence(lambda x: r[x] if x in r else ctx.rho_a(x), th)
    Wn = normal_form(W, dep)
    return ExtendedEquation(Wn, frozenset(B), Xs, tuple(sorted(r.items())),
                            tuple(sorted(m.items())), tuple(sorted(th.items())))


def bar_any(ctx: Context, x: int) -> int:
    if x >= DIST_BASE:
        return x ^ 1
    return ctx.bar(x)


def involute_state_word(ctx: Context, W: Sequence[int]) -> tuple:
    return involute_word(W, lambda x: bar_any(ctx, x))


# -- initial and final states ---------------------------------------------------

def build_initial(ctx: Context, U: Sequence[int], V: Sequence[int]) -> ExtendedEquation:
    """#X1#...#Xk#U#V#U~#V~#Xk~#...#X1~#."""
    h = [MARKER]
    for X in ctx.variables:
        h += [X, MARKER]
    bar = lambda w: list(involute_state_word(ctx, w))
    W = h + list(U) + [MARKER] + list(V) + [MARKER] + bar(U) + [MARKER] + bar(V) + bar(h)
    B = {MARKER} | set(ctx.alphabet.constants())
    rho = {X: ctx.var_rho[X] for X in ctx.variables}
    mu = {X: ctx.var_mu[X] for X in ctx.variables}
    st = make_state(ctx, W, B, ctx.variables, rho, mu)
    issues = validate_state(ctx, st, initial_markers=W.count(MARKER))
    if issues:
        raise StateError("; ".join(issues))
    return st


def marker_count(st: ExtendedEquation) -> int:
    return st.W.count(MARKER)


def segments(W: Sequence[int]) -> list[tuple]:
    """The #-free pieces between consecutive markers."""
    out, cur = [], []
    for x in W[1:]:
        if x == MARKER:
            out.append(tuple(cur))
            cur = []
        else:
            cur.append(x)
    return out


def validate_state(ctx: Context, st: ExtendedEquation,
                   initial_markers: int | None = None) -> list[str]:
    """Well-formedness: markers, constraint zero pattern, closure under bar."""
    issues = []
    W = st.W
    if not W or W[0] != MARKER or W[-1] != MARKER:
        issues.append("W does not begin and end with #")
    if initial_markers is not None and W.count(MARKER) != initial_markers:
        issues.append("marker count changed")
    if ctx.budgets.eq_length and len(W) >= ctx.budgets.eq_length:
        issues.append(f"|W| = {len(W)} exceeds the budget {ctx.budgets.eq_length}")
    mon = ctx.monoid
    if mon.zero is None or mu_of(ctx, st, MARKER) != mon.zero:
        issues.append("marker does not map to zero")
    vars_ = st.variables_with_bars()
    for x in set(W):
        if x == MARKER:
            continue
        if x not in st.B and not is_a_letter(x) and x not in vars_:
            issues.append(f"letter {ctx.name(x)} is neither in B nor a variable")
        if mon.is_zero(mu_of(ctx, st, x)):
            issues.append(f"letter {ctx.name(x)} maps to zero")
    if st.theta:
        issues += validate_type(TypeRelation(dict(st.theta)), set(st.B), vars_,
                                lambda x: rho_of(ctx, st, x), lambda x: bar_any(ctx, x),
                                is_a_letter)
    dep = dependence(ctx, st)
    segs = [normal_form(s, dep) for s in segments(W)]
    segset = set(segs)
    for s in segs:
        if mon.is_zero(mon.product(mu_of(ctx, st, x) for x in s)):
            issues.append(f"segment {ctx.show(s)} maps to zero")
        sb = normal_form(involute_state_word(ctx, s), dep)
        if sb not in segset:
            issues.append(f"segment {ctx.show(s)} has no involuted partner")
    return issues


def is_final(ctx: Context, st: ExtendedEquation) -> bool:
    if st.X or st.theta:
        return False
    dep = dependence(ctx, st)
    if normal_form(involute_state_word(ctx, st.W), dep) != st.W:
        return False
    want = [MARKER]
    for c in ctx.distinguished():
        want += [c, MARKER]
    if ctx.k == 0:
        return True
    # the prefix #c1#...#ck# is read along the marker structure
    segs = segments(st.W)
    return all(segs[i] == (c,) for i, c in enumerate(ctx.distinguished()))


# -- weights --------------------------------------------------------------------

def weight(ctx: Context, st: ExtendedEquation) -> tuple[int, int, int, int, int]:
    R = ctx.n_resources
    W = st.W
    vars_ = st.variables_with_bars()
    consts = [x for x in W if x not in vars_]
    omega = sum(R - popcount(rho_of(ctx, st, x)) for x in consts)
    omega2 = len(W) - len(set(consts))
    return (len(W), omega, omega2, len(W) - len(st.theta), len(st.B))


def max_norm(ctx: Context, st: ExtendedEquation) -> int:
    return max(weight(ctx, st))


# -- solutions ------------------------------------------------------------------

@dataclass
class Solution:
    """sigma on even variable ids; alpha on non-A constants."""

    sigma: dict[int, tuple]
    alpha: dict[int, tuple] = field(default_factory=dict)

    def copy(self) -> "Solution":
        return Solution(dict(self.sigma), dict(self.alpha))


def sigma_of(ctx: Context, sigma: Mapping[int, tuple], x: int) -> tuple:
    if x & 1:
        return involute_state_word(ctx, sigma[x ^ 1])
    return tuple(sigma[x])


def substitute(ctx: Context, st: ExtendedEquation, sigma: Mapping[int, tuple],
               W: Sequence[int] | None = None) -> tuple:
    vars_ = st.variables_with_bars()
    out = []
    for x in (st.W if W is None else W):
        if x in vars_:
            out.extend(sigma_of(ctx, sigma, x))
        else:
            out.append(x)
    return tuple(out)


def alpha_word(alpha: Mapping[int, tuple], word: Iterable[int]) -> tuple:
    out = []
    for x in word:
        img = alpha.get(x)
        if img is None:
            out.append(x)
        else:
            out.extend(img)
    return tuple(out)


def check_solution(ctx: Context, st: ExtendedEquation, sigma: Mapping[int, tuple],
                   alpha: Mapping[int, tuple] | None = None) -> list[str]:
    """Violations of the solution conditions (empty list: a solution)."""
    issues = []
    for X in st.X:
        if X not in sigma:
            issues.append(f"sigma undefined on {ctx.name(X)}")
    if issues:
        return issues
    mon = ctx.monoid
    dep = dependence(ctx, st)
    vars_ = st.variables_with_bars()
    for X in st.X:
        s = sigma[X]
        for x in s:
            if x in vars_ or is_variable(x):
                issues.append(f"sigma({ctx.name(X)}) contains a variable")
            elif x not in st.B and not is_a_letter(x):
                issues.append(f"sigma({ctx.name(X)}) uses {ctx.name(x)} outside B")
            elif x == MARKER:
                issues.append(f"sigma({ctx.name(X)}) contains the marker")
        if issues:
            continue
        if mon.product(mu_of(ctx, st, x) for x in s) != mu_of(ctx, st, X):
            issues.append(f"constraint of {ctx.name(X)} violated")
        if dep.rho_word(s) & ~rho_of(ctx, st, X):
            issues.append(f"resources of {ctx.name(X)} violated")
        y = st.theta.get(X)
        if y is not None and any(x != y for x in s):
            issues.append(f"type of {ctx.name(X)} violated")
    if issues:
        return issues
    left = substitute(ctx, st, sigma)
    right = substitute(ctx, st, sigma, involute_state_word(ctx, st.W))
    if normal_form(left, dep) != normal_form(right, dep):
        issues.append("sigma(W) differs from sigma(W~)")
    if alpha is not None:
        for c, img in alpha.items():
            if c not in st.B:
                continue
            if any(not is_a_letter(x) or x == MARKER for x in img):
                issues.append(f"alpha({ctx.name(c)}) leaves A")
                continue
            if dep.rho_word(img) & ~rho_of(ctx, st, c):
                issues.append(f"alpha({ctx.name(c)}) violates resources")
            if mon.product(ctx.mu_a(x) for x in img) != mu_of(ctx, st, c):
                issues.append(f"alpha({ctx.name(c)}) violates the constraint")
    return issues


def solution_weight(sigma: Mapping[int, tuple], alpha: Mapping[int, tuple] | None = None) -> int:
    alpha = alpha or {}
    return sum(len(alpha_word(alpha, s)) for s in sigma.values())


def state_solution_weight(ctx: Context, st: ExtendedEquation, sol: Solution):
    return (solution_weight(sol.sigma, sol.alpha), weight(ctx, st))


def project_solution(ctx: Context, word: Iterable[int], alpha: Mapping[int, tuple]) -> tuple:
    """pi0 alpha of a word, as a trace over the base alphabet."""
    return normal_form([unlift(x) for x in alpha_word(alpha, word)], ctx.base_dep)


# -- canonical renaming ------------------------------------------------------------

def _renameable(x: int) -> bool:
    return is_fresh(x) or x >= FRESH_VAR_BASE


def canonical_state(ctx: Context, st: ExtendedEquation,
                    frontier_cap: int = 64) -> tuple[ExtendedEquation, dict[int, int]]:
    """Rename created constants and variables by first occurrence.

    Returns the renamed state and the renaming (old id -> new id).  A greedy
    linearisation of W emits the least available letter; letters not yet
    named rank after named ones, ordered by rename-invariant data, and ties
    between them are explored as branches (pruned to the lexicographically
    least partial output).
    """
    dep = dependence(ctx, st)
    W = st.W
    n = len(W)
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for j in range(n):
        for i in range(j):
            if not dep.independent(W[i], W[j]):
                succ[i].append(j)
                indeg[j] += 1
    theta = st.theta
    targets = set(theta.values())

    def inv_key(x):
        return (0 if is_fresh(x) else 1, rho_of(ctx, st, x), mu_of(ctx, st, x),
                x in theta, x in targets, theta.get(x, -1) if not _renameable(theta.get(x, -1)) else -2)

    def new_id(x, counters):
        if is_fresh(x):
            i = counters[0]
            counters[0] += 1
            return FRESH_BASE + 2 * i
        i = counters[1]
        counters[1] += 1
        return FRESH_VAR_BASE + 2 * i

    # a branch: (emitted, indeg, assign, counters)
    branches = [((), tuple(indeg), {}, [0, 0])]
    for _ in range(n):
        best = None
        nxt = []
        for emitted, deg, assign, counters in branches:
            avail = [i for i in range(n) if deg[i] == 0 and i not in _emitted_set(emitted)]
            keyed = []
            for i in avail:
                x = W[i]
                if not _renameable(x):
                    keyed.append(((0, x), i, None))
                elif x in assign:
                    keyed.append(((0, assign[x]), i, None))
                else:
                    keyed.append(((1,) + inv_key(x), i, x))
            kmin = min(k for k, _, _ in keyed)
            for k, i, x in keyed:
                if k != kmin:
                    continue
                a2, c2 = dict(assign), list(counters)
                if x is not None:
                    y = new_id(x, c2)
                    a2[x] = y
                    a2[x ^ 1] = y ^ 1
                    out_letter = y
                else:
                    out_letter = kmin[1]
                d2 = list(deg)
                for j in succ[i]:
                    d2[j] -= 1
                d2[i] = -1
                cand = (emitted + ((i, out_letter),), tuple(d2), a2, c2)
                if best is None or out_letter < best:
                    best = out_letter
                    nxt = [cand]
                elif out_letter == best:
                    nxt.append(cand)
        # deduplicate on the assignment
        seen = set()
        branches = []
        for b in nxt:
            key = tuple(sorted(b[2].items())), b[1]
            if key in seen:
                continue
            seen.add(key)
            branches.append(b)
            if len(branches) >= frontier_cap:
                break
    results = []
    for emitted, _, assign, counters in branches:
        assign = dict(assign)
        rest = sorted((x for x in list(st.B) + list(st.variables_with_bars())
                       if _renameable(x) and x not in assign),
                      key=lambda x: (inv_key(x), x))
        for x in rest:
            if x in assign:
                continue
            y = new_id(x, counters)
            assign[x] = y
            assign[x ^ 1] = y ^ 1
        renamed = rename_state(ctx, st, assign)
        results.append((_encode(renamed), renamed, assign))
    results.sort(key=lambda t: t[0])
    _, renamed, assign = results[0]
    return renamed, {x: y for x, y in assign.items() if x != y}


def _emitted_set(emitted):
    return {i for i, _ in emitted}


def _encode(st: ExtendedEquation):
    return (st.W, tuple(sorted(st.B)), tuple(sorted(st.X)), st.rho_items, st.mu_items,
            st.theta_items)


def rename_state(ctx: Context, st: ExtendedEquation, ren: Mapping[int, int]) -> ExtendedEquation:
    f = lambda x: ren.get(x, x)
    rho = {f(x): v for x, v in st.rho.items()}
    mu = {f(x): v for x, v in st.mu.items()}
    theta = {f(x): f(y) for x, y in st.theta.items()}
    return make_state(ctx, [f(x) for x in st.W], {f(x) for x in st.B},
                      {f(x) for x in st.X}, rho, mu, theta)


def state_key(st: ExtendedEquation):
    return _encode(st)


def dump_state(ctx: Context, st: ExtendedEquation) -> str:
    lines = [f"W: {ctx.show(st.W)}"]
    extra = sorted(x for x in st.B if not is_a_letter(x))
    lines.append("B+: " + ", ".join(
        f"{ctx.name(x)}[rho={ctx.alphabet.set_name(st.rho[x])},mu={st.mu[x]}]" for x in extra))
    lines.append("X: " + ", ".join(
        f"{ctx.name(x)}[rho={ctx.alphabet.set_name(st.rho[x])},mu={st.mu[x]}]" for x in sorted(st.X)))
    if st.theta:
        lines.append("theta: " + ", ".join(f"{ctx.name(x)}->{ctx.name(y)}"
                                           for x, y in sorted(st.theta.items())))
    lines.append(f"weight: {weight(ctx, st)}")
    return "\n".join(lines)


def state_to_json(st: ExtendedEquation) -> dict:
    return {"W": list(st.W), "B": sorted(st.B), "X": sorted(st.X),
            "rho": [list(p) for p in st.rho_items], "mu": [list(p) for p in st.mu_items],
            "theta": [list(p) for p in st.theta_items]}


def state_from_json(d: Mapping) -> ExtendedEquation:
    return ExtendedEquation(tuple(d["W"]), frozenset(d["B"]), frozenset(d["X"]),
                            tuple(tuple(p) for p in d["rho"]), tuple(tuple(p) for p in d["mu"]),
                            tuple(tuple(p) for p in d["theta"]))
