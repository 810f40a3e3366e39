"""Brute-force ground truth: every bounded solution by exhaustive substitution.

Deliberately dumb.  Only trace arithmetic from trace_core is used; nothing
here knows about states, transitions or automata.
"""

from __future__ import annotations

import itertools
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance
from .trace_core import Dependence, MARKER, is_variable, normal_form

DEFAULT_CANDIDATE_CAP = 2_000_000


class OracleError(RuntimeError):
    pass


def _dep(inst: Instance) -> Dependence:
    return inst.dep


def group_reduce(word: Sequence[int], bar, dep: Dependence) -> tuple:
    """Cancel factors a a-bar (up to commutation) until none is left."""
    w = list(normal_form(word, dep))
    changed = True
    while changed:
        changed = False
        for p in range(len(w)):
            a = w[p]
            for q in range(p + 1, len(w)):
                y = w[q]
                if y == bar(a):
                    del w[q]
                    del w[p]
                    changed = True
                    break
                if not dep.independent(a, y):
                    break
            if changed:
                w = list(normal_form(w, dep))
                break
    return tuple(w)


def is_group_reduced(word: Sequence[int], bar, dep: Dependence) -> bool:
    return len(group_reduce(word, bar, dep)) == len(word)


def variable_candidates(inst: Instance, X: int, L: int) -> list[tuple]:
    """All traces of length <= L over letters allowed in X, one word per class."""
    alpha = inst.alphabet
    dep = _dep(inst)
    letters = [a for a in alpha.constants() if alpha.rho(a) & ~inst.var_rho[X] == 0]
    mon = inst.monoid
    out, seen = [], set()
    for n in range(L + 1):
        for w in itertools.product(letters, repeat=n):
            nf = normal_form(w, dep)
            if nf in seen:
                continue
            seen.add(nf)
            if inst.mode == "group" and not is_group_reduced(nf, alpha.bar, dep):
                continue
            m = mon.product(inst.const_mu[x] for x in nf)
            if not inst.mu_allowed(X, m):
                continue
            out.append(nf)
    return out


def substitute(inst: Instance, word: Sequence[int], sigma: dict[int, tuple]) -> list[int]:
    alpha = inst.alphabet
    out = []
    for x in word:
        if is_variable(x):
            s = sigma[x & ~1]
            if x & 1:
                out.extend(alpha.bar(y) for y in reversed(s))
            else:
                out.extend(s)
        else:
            out.append(x)
    return out


def check_tuple(inst: Instance, values: Sequence[Sequence[int]]) -> list[str]:
    """Why a tuple (in the order of inst.variables) is not a solution; [] if it is."""
    alpha = inst.alphabet
    dep = _dep(inst)
    mon = inst.monoid
    issues = []
    sigma = {}
    for X, s in zip(inst.variables, values):
        s = tuple(s)
        name = inst.var_names[X]
        if any(x == MARKER or is_variable(x) or x not in alpha.rho_base for x in s):
            issues.append(f"{name} uses a letter outside the alphabet")
            continue
        if any(alpha.rho(x) & ~inst.var_rho[X] for x in s):
            issues.append(f"resources of {name} violated")
        m = mon.product(inst.const_mu[x] for x in s)
        if mon.is_zero(m):
            issues.append(f"{name} maps to zero")
        elif not inst.mu_allowed(X, m):
            issues.append(f"constraint of {name} violated")
        if inst.mode == "group" and not is_group_reduced(s, alpha.bar, dep):
            issues.append(f"{name} is not reduced")
        sigma[X] = s
    if len(values) != inst.k:
        issues.append("wrong number of components")
    if issues:
        return issues
    if not sides_agree(inst, sigma):
        issues.append("the two sides differ")
    return issues


def sides_agree(inst: Instance, sigma: dict[int, tuple]) -> bool:
    """lhs and rhs are equal under sigma (components are not checked)."""
    alpha, dep = inst.alphabet, _dep(inst)
    left = substitute(inst, inst.lhs, sigma)
    right = substitute(inst, inst.rhs, sigma)
    if inst.mode == "group":
        return group_reduce(left, alpha.bar, dep) == group_reduce(right, alpha.bar, dep)
    return normal_form(left, dep) == normal_form(right, dep)


def _count_vectors(inst: Instance, cands: list[list[tuple]]):
    """Letter-count contribution of each candidate, plus the constant part.

    In monoid mode both sides must have equal letter counts, so a tuple can
    only solve the equation when the contributions cancel the constant part.
    Returns None in group mode.
    """
    if inst.mode == "group":
        return None
    alpha = inst.alphabet
    index = {a: i for i, a in enumerate(inst.constants())}
    n = len(index)

    def vec(word, sign=1):
        v = np.zeros(n, dtype=np.int64)
        for x in word:
            v[index[x]] += sign
        return v

    const = vec([x for x in inst.lhs if not is_variable(x)]) \
        - vec([x for x in inst.rhs if not is_variable(x)])
    coeff: Counter = Counter()
    for side, sign in ((inst.lhs, 1), (inst.rhs, -1)):
        for x in side:
            if is_variable(x):
                coeff[x] += sign
    out = []
    for X, cs in zip(inst.variables, cands):
        rows = []
        for w in cs:
            v = coeff[X] * vec(w) + coeff[X ^ 1] * vec([alpha.bar(y) for y in w])
            rows.append(tuple(int(t) for t in v))
        out.append(rows)
    return tuple(int(t) for t in const), out


def enumerate_bruteforce(inst: Instance, L: int, cap: int = DEFAULT_CANDIDATE_CAP) -> set[tuple]:
    """All solution tuples with |sigma(X_i)| <= L, as canonical words."""
    cands = [variable_candidates(inst, X, L) for X in inst.variables]
    total = 1
    for c in cands:
        total *= max(len(c), 1)
    if total > cap:
        raise OracleError(f"{total} candidate tuples exceed the cap {cap}")
    # candidates already meet resources, constraints and reducedness
    out = set()
    X = inst.variables
    counts = _count_vectors(inst, cands)
    if counts is None or not cands:
        for combo in itertools.product(*cands):
            if sides_agree(inst, dict(zip(X, combo))):
                out.add(tuple(combo))
        return out
    const, vecs = counts
    # index the last variable's candidates by their count vector
    last: dict[tuple, list[tuple]] = {}
    for w, v in zip(cands[-1], vecs[-1]):
        last.setdefault(v, []).append(w)
    heads = [list(zip(c, v)) for c, v in zip(cands[:-1], vecs[:-1])]
    for head in itertools.product(*heads):
        acc = list(const)
        for _, v in head:
            for i, t in enumerate(v):
                acc[i] += t
        for w in last.get(tuple(-t for t in acc), ()):
            combo = tuple(h for h, _ in head) + (w,)
            if sides_agree(inst, dict(zip(X, combo))):
                out.add(combo)
    return out


def count_at_least(inst: Instance, L: int) -> int:
    return len(enumerate_bruteforce(inst, L))


def format_tuple(inst: Instance, t: Iterable[Sequence[int]]) -> str:
    return "(" + ", ".join(" ".join(inst.alphabet.name(x) for x in w) or "1" for w in t) + ")"
