"""Reductions to the plain monoid setting the search understands.

Two rewritings live here:

* group semantics -> monoid semantics, by spelling out the free reduction
  of each side as a chain of cancellation steps and forcing every original
  variable to be reduced with the reducedness monoid;
* self-involuting letters a = a-bar -> a pair a+ / a- with a = a+ a-, kept
  honest by a small automaton in the constraint monoid.

Each produces a `Reduction` that maps solutions forwards (for guiding the
search) and backwards (for reporting).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from .finite_constraints import (
    ZERO, ConstraintMorphism, FiniteMonoid, build_reduction_monoid, materialize, product_monoid,
)
from .instance import Instance, InstanceError
from .oracle import is_group_reduced
from .trace_core import (
    MARKER, VAR_BASE, Dependence, ResourceAlphabet, is_variable, max_positions, min_positions,
    normal_form,
)

SEPARATOR = "#sep"


@dataclass
class Reduction:
    original: Instance
    target: Instance
    lift: Callable[[Sequence[tuple]], dict]           # original tuple -> target sigma
    project: Callable[[Sequence[tuple]], tuple | None]  # target tuple -> original tuple
    kind: str = "identity"


def identity_reduction(inst: Instance) -> Reduction:
    return Reduction(inst, inst,
                     lambda vals: {X: tuple(w) for X, w in zip(inst.variables, vals)},
                     lambda vals: tuple(tuple(w) for w in vals))


def reduce_instance(inst: Instance) -> Reduction:
    """Pick the rewriting an instance needs (possibly none)."""
    if inst.mode == "group":
        if inst.alphabet.self_involuting:
            names = sorted(inst.alphabet.name(a) for a in inst.alphabet.self_involuting)
            raise InstanceError(
                f"self-involuting letters {names} have order two in a group; "
                "only torsion-free groups are supported", "mode")
        return group_to_monoid(inst)
    if inst.alphabet.self_involuting:
        return eliminate_self_involuting(inst)
    return identity_reduction(inst)


def _copy_alphabet(alpha: ResourceAlphabet, extra_resources: Sequence[str] = ()) -> ResourceAlphabet:
    out = ResourceAlphabet(list(alpha.resources) + list(extra_resources))
    for a in alpha.constants():
        b = alpha.bar(a)
        if b < a:
            continue
        got = out.add_pair(alpha.name(a), alpha.name(b), alpha.rho(a))
        assert got == (a, b)
    return out


# -- reducedness ---------------------------------------------------------------------------

def attach_reducedness(inst: Instance, extra: Sequence[tuple[str, str, int]] = (),
                       extra_resources: Sequence[str] = ()):
    """Product of the instance monoid with the reducedness monoid.

    Returns (alphabet, monoid, const_mu, component, added): `component(e)`
    is the instance-monoid part of e, None for zero (a non-reduced trace).
    `extra` adds constant pairs (name, bar, rho).
    """
    alpha = _copy_alphabet(inst.alphabet, extra_resources)
    added = [alpha.add_pair(n, b, r) for n, b, r in extra]
    base = inst.alphabet.constants()
    # the extra letters take part in the reducedness monoid so that they block
    # cancellation across them; they map to the unit of the instance monoid
    red, morph = build_reduction_monoid(alpha.constants(), alpha.rho, alpha.bar)
    N = inst.monoid
    gens = {a: (inst.const_mu[a], morph(a)) for a in base}
    for pair in added:
        for x in pair:
            gens[x] = (N.unit, morph(x))
    mon, genmap = product_monoid(N, red, gens)
    const_mu = {a: genmap[a] for a in gens}
    const_mu[MARKER] = mon.zero
    keys = mon.keys

    def component(e):
        k = keys[e]
        return None if k == ZERO else k[0]
    return alpha, mon, const_mu, component, added


def _cancel(P: Sequence[int], f: Sequence[int], bar, dep: Dependence):
    """Split P = A Z and f = Z-bar B with A B reduced (both inputs reduced)."""
    P, f = list(P), list(f)
    zs = []
    while True:
        hit = None
        for i in max_positions(P, dep):
            for j in min_positions(f, dep):
                if f[j] == bar(P[i]):
                    hit = (i, j)
                    break
            if hit:
                break
        if hit is None:
            break
        i, j = hit
        zs.append(P[i])
        del P[i]
        del f[j]
    Z = tuple(reversed(zs))
    return normal_form(P, dep), normal_form(Z, dep), normal_form(f, dep)


def group_to_monoid(inst: Instance) -> Reduction:
    """U = V in the group  <=>  a chain of monoid equations.

    Reading a side left to right with P the reduced prefix, the next factor
    f meets P as P = A Z, f = Z-bar B and the new prefix is A B.  The two
    final prefixes must agree letter for letter.  Equations are joined by a
    separator letter that depends on everything and that no variable may use.
    """
    src = inst.alphabet
    sep_res = "~sep"
    while sep_res in src.resources:
        sep_res += "~"
    full = (1 << (len(src.resources) + 1)) - 1
    alpha, mon, const_mu, npart, added = attach_reducedness(
        inst, [(SEPARATOR, SEPARATOR + "~", full)], [sep_res])
    sep = added[0][0]
    dep = src.dependence()
    bar = src.bar

    variables = list(inst.variables)
    var_names = dict(inst.var_names)
    var_rho = dict(inst.var_rho)
    used = {nm for nm in var_names.values()}
    nxt = [VAR_BASE + 2 * (max((X - VAR_BASE) // 2 for X in variables) + 1 if variables else 0)]

    def new_var(tag):
        X = nxt[0]
        nxt[0] += 2
        name = tag
        while name in used:
            name = "_" + name
        used.update({name, name + "~"})
        var_names[X], var_names[X + 1] = name, name + "~"
        var_rho[X] = src.full
        variables.append(X)
        return X

    eqs = []
    plan = []       # (side, step, A, Z, B) for lifting

    def chain(word, side):
        if not word:
            return []
        P = [word[0]]
        for step, x in enumerate(word[1:], 1):
            A = new_var(f"A{side}{step}")
            Z = new_var(f"Z{side}{step}")
            B = new_var(f"B{side}{step}")
            eqs.append((tuple(P), (A, Z)))
            eqs.append(((x,), (Z + 1, B)))
            plan.append((side, step, A, Z, B))
            P = [A, B]
        return P

    PU = chain(inst.lhs, "u")
    PV = chain(inst.rhs, "v")
    eqs.append((tuple(PU), tuple(PV)))
    lhs, rhs = [], []
    for i, (l, r) in enumerate(eqs):
        if i:
            lhs.append(sep)
            rhs.append(sep)
        lhs += l
        rhs += r

    originals = set(inst.variables)

    def mu_filter(X, e):
        n = npart(e)
        if n is None:
            return False
        if X in originals:
            return inst.mu_allowed(X, n)
        return True

    # originals must be reduced: only elements with a nonzero reducedness part
    var_mu = {X: None for X in variables}
    target = Instance(alpha, mon, const_mu, variables, var_names, var_rho, var_mu,
                      tuple(lhs), tuple(rhs), "monoid", inst.name + "/monoid", None, mu_filter)

    def value(x, sigma):
        if is_variable(x):
            s = sigma[x & ~1]
            return tuple(bar(y) for y in reversed(s)) if x & 1 else tuple(s)
        return (x,)

    def lift(vals):
        sigma = {X: normal_form(w, dep) for X, w in zip(inst.variables, vals)}
        for word, side in ((inst.lhs, "u"), (inst.rhs, "v")):
            if not word:
                continue
            P = value(word[0], sigma)
            for step, x in enumerate(word[1:], 1):
                A, Z, B = next((a, z, b) for s_, k, a, z, b in plan if s_ == side and k == step)
                a, z, b = _cancel(P, value(x, sigma), bar, dep)
                sigma[A], sigma[Z], sigma[B] = a, z, b
                P = normal_form(a + b, dep)
        return sigma

    k = inst.k

    def project(vals):
        out = tuple(tuple(w) for w in vals[:k])
        if not all(is_group_reduced(w, bar, dep) for w in out):
            return None
        return out
    return Reduction(inst, target, lift, project, "group")


# -- self-involuting letters ---------------------------------------------------------------

def eliminate_self_involuting(inst: Instance) -> Reduction:
    """Split each a = a-bar into a+ a- and constrain solutions to the image.

    For every such a an automaton reads the letters sharing a resource with
    a (states: free, open, dead); a+ opens, a- closes, anything else while
    open kills.  A value lies in the image exactly when every automaton
    returns to the free state.  The constraint monoid pairs the instance
    monoid with the transition monoid, each in a dual product so that the
    new letters get a proper involution.
    """
    src = inst.alphabet
    selfinv = sorted(src.self_involuting)
    alpha = ResourceAlphabet(list(src.resources))
    image: dict[int, tuple] = {}
    plus_minus = {}
    for a in src.constants():
        b = src.bar(a)
        if a in src.self_involuting:
            p, m = alpha.add_pair(src.name(a) + "+", src.name(a) + "-", src.rho(a))
            image[a] = (p, m)
            plus_minus[p] = (a, "+")
            plus_minus[m] = (a, "-")
        elif b > a:
            x, y = alpha.add_pair(src.name(a), src.name(b), src.rho(a))
            image[a], image[b] = (x,), (y,)
    back = {}
    for a, w in image.items():
        if len(w) == 1:
            back[w[0]] = (a,)
        else:
            back[w[0]], back[w[1]] = (a,), ()
    letters = alpha.constants()
    n_auto = len(selfinv)
    states = list(itertools.product(range(3), repeat=n_auto))
    sidx = {s: i for i, s in enumerate(states)}

    def step(state, x):
        out = list(state)
        for j, a in enumerate(selfinv):
            if not alpha.rho(x) & src.rho(a) or out[j] == 2:
                continue
            pm = plus_minus.get(x)
            if pm == (a, "+"):
                out[j] = 1 if out[j] == 0 else 2
            elif pm == (a, "-"):
                out[j] = 0 if out[j] == 1 else 2
            elif out[j] == 1:
                out[j] = 2
        return tuple(out)

    tmaps = {x: tuple(sidx[step(s, x)] for s in states) for x in letters}
    N = inst.monoid

    def nu(x):
        pm = plus_minus.get(x)
        if pm is None:
            return inst.const_mu[back[x][0]]
        return inst.const_mu[pm[0]] if pm[1] == "+" else N.unit

    def compose(f, g):
        return tuple(g[i] for i in f)

    def mul(u, v):
        if u == ZERO or v == ZERO:
            return ZERO
        n1, t1, n2, t2 = u
        m1, s1, m2, s2 = v
        p1, p2 = N.mul(n1, m1), N.mul(m2, n2)
        if N.is_zero(p1) or N.is_zero(p2):
            return ZERO
        return (p1, compose(t1, s1), p2, compose(s2, t2))

    def inv(u):
        if u == ZERO:
            return ZERO
        n1, t1, n2, t2 = u
        return (n2, t2, n1, t1)

    ident = tuple(range(len(states)))
    gens = {x: (nu(x), tmaps[x], nu(alpha.bar(x)), tmaps[alpha.bar(x)]) for x in letters}
    mon, genmap = materialize(gens, mul, inv, (N.unit, ident, N.unit, ident), ZERO)
    const_mu = {x: genmap[x] for x in letters}
    const_mu[MARKER] = mon.zero
    keys = mon.keys
    start = sidx[tuple([0] * n_auto)]

    def mu_filter(X, e):
        k = keys[e]
        if k == ZERO or k[1][start] != start:
            return False
        return inst.mu_allowed(X, k[0])

    def iota(word):
        return tuple(y for x in word for y in image[x])

    var_mu = {X: None for X in inst.variables}
    target = Instance(alpha, mon, const_mu, list(inst.variables), dict(inst.var_names),
                      dict(inst.var_rho), var_mu, _map_word(inst.lhs, image),
                      _map_word(inst.rhs, image), "monoid", inst.name + "/split", None, mu_filter)
    dep2 = alpha.dependence()
    dep = src.dependence()

    def lift(vals):
        return {X: normal_form(iota(w), dep2) for X, w in zip(inst.variables, vals)}

    def project(vals):
        out = []
        for w in vals:
            out.append(normal_form(tuple(y for x in w for y in back[x]), dep))
        return tuple(out)
    return Reduction(inst, target, lift, project, "split")


def _map_word(word, image):
    out = []
    for x in word:
        if is_variable(x):
            out.append(x)
        else:
            out += image[x]
    return tuple(out)


def reducedness_morphism(inst: Instance) -> tuple[FiniteMonoid, ConstraintMorphism]:
    """The reducedness monoid N_L of an instance's alphabet."""
    a = inst.alphabet
    return build_reduction_monoid(a.constants(), a.rho, a.bar)
