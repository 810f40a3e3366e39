"""Transitions between extended equations and their endomorphism labels.

A substitution label carries tau (old variable -> word over new letters and
variables) and the identity endomorphism.  A compression label carries h
(new constant -> word over old constants); W = h(W').  Labels always point
backwards: solutions of the target are pulled back to the source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .equation_state import (
    Context, ExtendedEquation, Solution, alpha_word, bar_any, check_solution,
    dependence, involute_state_word, is_final, make_state, mu_of, project_solution,
    rho_of, segments, sigma_of, substitute, validate_state, weight,
)
from .trace_core import (
    FRESH_BASE, FRESH_VAR_BASE, MARKER, VAR_BASE, is_a_letter, is_variable,
    min_positions, max_positions, normal_form,
)

SUBSTITUTION = "substitution"
COMPRESSION = "compression"
FINAL = "final-compression"


@dataclass(frozen=True)
class Label:
    """A transition label in the names of the source and of the raw target.

    `ren` maps the ids of the stored (canonically renamed) target back to
    the raw target ids.  On a substitution edge it is the only part acting
    on constants: a letter-to-letter renaming.
    """

    kind: str
    endo: tuple = ()   # sorted (letter, word)
    tau: tuple = ()    # sorted (variable, word)
    ren: tuple = ()    # sorted (stored id, raw id)

    @staticmethod
    def make(kind: str, endo: Mapping | None = None, tau: Mapping | None = None,
             ren: Mapping | None = None) -> "Label":
        e = tuple(sorted((x, tuple(w)) for x, w in (endo or {}).items()))
        t = tuple(sorted((x, tuple(w)) for x, w in (tau or {}).items()))
        r = tuple(sorted((x, y) for x, y in (ren or {}).items() if x != y))
        return Label(kind, e, t, r)

    @property
    def endo_map(self) -> dict[int, tuple]:
        return dict(self.endo)

    @property
    def tau_map(self) -> dict[int, tuple]:
        return dict(self.tau)

    @property
    def ren_map(self) -> dict[int, int]:
        return dict(self.ren)

    def norm(self) -> int:
        return sum(len(w) for _, w in self.endo) + sum(len(w) for _, w in self.tau)

    def with_renaming(self, dst_ren: Mapping[int, int]) -> "Label":
        """Attach the renaming raw id -> stored id applied to the target."""
        back = {y: x for x, y in dst_ren.items()}
        return Label.make(self.kind, self.endo_map, self.tau_map, back)

    def apply(self, ctx: Context, word: Iterable[int]) -> tuple:
        """The endomorphism of this edge on a word over the stored target's letters."""
        r = self.ren_map
        w = tuple(r.get(x, x) for x in word)
        if self.kind == SUBSTITUTION:
            return w
        return apply_endo(ctx, full_endo(ctx, self.endo_map), w)

    def to_json(self) -> dict:
        return {"kind": self.kind,
                "endo": [[x, list(w)] for x, w in self.endo],
                "tau": [[x, list(w)] for x, w in self.tau],
                "ren": [[x, y] for x, y in self.ren]}

    @staticmethod
    def from_json(d: Mapping) -> "Label":
        return Label.make(d["kind"], {x: w for x, w in d["endo"]}, {x: w for x, w in d["tau"]},
                          {x: y for x, y in d.get("ren", [])})


class TransitionError(ValueError):
    pass


def apply_endo(ctx: Context, endo: Mapping[int, tuple], word: Iterable[int]) -> tuple:
    out = []
    for x in word:
        img = endo.get(x)
        if img is None and x & 1 and not is_a_letter(x):
            base = endo.get(x ^ 1)
            if base is not None:
                img = involute_state_word(ctx, base)
        if img is None:
            out.append(x)
        else:
            out.extend(img)
    return tuple(out)


def full_endo(ctx: Context, endo: Mapping[int, tuple]) -> dict[int, tuple]:
    """Close an endomorphism under bars."""
    out = dict(endo)
    for x, w in endo.items():
        b = bar_any(ctx, x)
        out.setdefault(b, involute_state_word(ctx, w))
    return out


def apply_tau(ctx: Context, tau: Mapping[int, tuple], word: Iterable[int]) -> tuple:
    out = []
    for x in word:
        if is_variable(x) and (x & ~1) in tau:
            img = tau[x & ~1]
            out.extend(involute_state_word(ctx, img) if x & 1 else img)
        else:
            out.append(x)
    return tuple(out)


# -- fresh identifiers -------------------------------------------------------------

def fresh_constants(st: ExtendedEquation, count: int, used: Iterable[int] = ()) -> list[int]:
    taken = set(st.B) | set(used)
    out, c = [], FRESH_BASE
    while len(out) < count:
        if c not in taken and c ^ 1 not in taken:
            out.append(c)
        c += 2
    return out


def fresh_variables(st: ExtendedEquation, count: int, used: Iterable[int] = ()) -> list[int]:
    taken = set(st.X) | set(used)
    out, v = [], FRESH_VAR_BASE
    while len(out) < count:
        if v not in taken:
            out.append(v)
        v += 2
    return out


# -- substitutions ---------------------------------------------------------------------

def apply_substitution(ctx: Context, st: ExtendedEquation, tau: Mapping[int, tuple],
                       new_vars: Mapping[int, tuple] | None = None,
                       updates: Mapping[int, tuple] | None = None) -> ExtendedEquation:
    """tau(W); `new_vars` and `updates` give (rho, mu, type-or-None) per variable."""
    new_vars = dict(new_vars or {})
    updates = dict(updates or {})
    W = apply_tau(ctx, tau, st.W)
    keep = [X for X in st.X if X not in tau]
    for w in tau.values():
        keep += [y & ~1 for y in w if is_variable(y)]
    keep = sorted(set(keep))
    rho, mu, theta = {}, {}, {}
    for X in keep:
        if X in new_vars or X in updates:
            r, m, t = (new_vars.get(X) or updates.get(X))
        else:
            r, m, t = st.rho[X], st.mu[X], st.theta.get(X)
        rho[X], mu[X] = r, m
        if t is not None:
            theta[X] = t
    for x, y in st.theta.items():
        if not is_variable(x):
            theta[x] = y
    for c in st.B:
        if not is_a_letter(c):
            rho[c], mu[c] = st.rho[c], st.mu[c]
    return make_state(ctx, W, st.B, keep, rho, mu, theta)


def _in_xbx(word: Sequence[int]) -> bool:
    kinds = ["v" if is_variable(x) else "c" for x in word]
    s = "".join(kinds)
    stripped = s.strip("v")
    return bool(stripped) and set(stripped) == {"c"}


def validate_substitution(ctx: Context, st: ExtendedEquation, st2: ExtendedEquation,
                          tau: Mapping[int, tuple], initial: bool = False) -> list[str]:
    issues = []
    dep2 = dependence(ctx, st2)
    if normal_form(apply_tau(ctx, tau, st.W), dep2) != st2.W:
        issues.append("W' is not tau(W)")
    if st2.W == st.W and st2.X == st.X:
        issues.append("substitution is trivial")
    if st2.B != st.B:
        issues.append("B changed")
    mon = ctx.monoid
    for X, w in tau.items():
        if X not in st.X:
            issues.append(f"tau defined on unknown variable {ctx.name(X)}")
            continue
        if w and not _in_xbx(w):
            issues.append(f"tau({ctx.name(X)}) is not of the form X*B+X*")
        r2 = dep2.rho_word(w)
        r = rho_of(ctx, st, X)
        if initial:
            if r2 & ~r:
                issues.append(f"rho grows on {ctx.name(X)}")
        elif r2 != r:
            issues.append(f"rho != rho' tau on {ctx.name(X)}")
        if mon.product(mu_of(ctx, st2, y) for y in w) != mu_of(ctx, st, X):
            issues.append(f"mu != mu' tau on {ctx.name(X)}")
        y = st.theta.get(X)
        if y is not None and any(z != y and not (is_variable(z) and st2.theta.get(z) == y)
                                 for z in w):
            issues.append(f"type of {ctx.name(X)} not preserved")
        for z in w:
            if not is_variable(z) and z not in st.B and not is_a_letter(z):
                issues.append(f"tau({ctx.name(X)}) uses {ctx.name(z)} outside B")
    for X in st.X:
        if X not in tau and X in st2.X:
            if st2.rho[X] != st.rho[X] or st2.mu[X] != st.mu[X] or \
                    st2.theta.get(X) != st.theta.get(X):
                issues.append(f"untouched variable {ctx.name(X)} changed")
    for x, y in st.theta.items():
        if not is_variable(x) and st2.theta.get(x) != y:
            issues.append("type of a constant changed")
    issues += _morphism_issues(ctx, st, st2, lambda w: apply_tau(ctx, tau, w), dep2)
    if ctx.budgets.eq_length and sum(len(w) for w in tau.values()) > ctx.budgets.eq_length:
        issues.append("substitution norm exceeds the budget")
    issues += validate_state(ctx, st2)
    return issues


def _morphism_issues(ctx, src, dst, f, dep_dst) -> list[str]:
    """f must send independent letters of `src` (occurring in W) to commuting words."""
    dep = dependence(ctx, src)
    letters = sorted(set(src.W) - {MARKER})
    issues = []
    for i, x in enumerate(letters):
        for y in letters[i + 1:]:
            if dep.independent(x, y):
                fx, fy = f((x,)), f((y,))
                if normal_form(fx + fy, dep_dst) != normal_form(fy + fx, dep_dst):
                    issues.append(f"images of {ctx.name(x)} and {ctx.name(y)} do not commute")
    return issues


# -- compressions ------------------------------------------------------------------------

def validate_compression(ctx: Context, st: ExtendedEquation, st2: ExtendedEquation,
                         endo: Mapping[int, tuple], final: bool = False) -> list[str]:
    issues = []
    h = full_endo(ctx, endo)
    for c, w in h.items():
        if is_a_letter(c):
            issues.append(f"h moves the base letter {ctx.name(c)}")
        if bar_any(ctx, c) == c:
            issues.append(f"self-involuting letter {ctx.name(c)}")
        if not w and not final:
            issues.append(f"h({ctx.name(c)}) is empty")
        if any(is_variable(x) for x in w):
            issues.append(f"h({ctx.name(c)}) contains a variable")
    dep = dependence(ctx, st)
    dep2 = dependence(ctx, st2)
    if normal_form(apply_endo(ctx, h, st2.W), dep) != st.W:
        issues.append("W is not h(W')")
    if st2.X != st.X:
        issues.append("variables changed")
    for X in st.X:
        for x in (X, X ^ 1):
            if st2.rho.get(x) != st.rho.get(x) or st2.mu.get(x) != st.mu.get(x):
                issues.append(f"variable {ctx.name(x)} changed")
            if st2.theta.get(x) != st.theta.get(x):
                issues.append(f"type of {ctx.name(x)} changed")
    if not (st.B <= st2.B or st2.B <= st.B):
        issues.append("B neither grows nor shrinks")
    if not any(h.get(c, (c,)) != (c,) for c in h) and st.B == st2.B and not final:
        issues.append("compression is trivial")
    mon = ctx.monoid
    for c in st2.B:
        if is_a_letter(c):
            continue
        img = h.get(c)
        if img is None:
            if c not in st.B:
                issues.append(f"new letter {ctx.name(c)} has no image")
                continue
            img = (c,)
        r2, r = rho_of(ctx, st2, c), dep.rho_word(img)
        if r2 & r != r or (r2 != r and len(img) != 1):
            issues.append(f"rho' != rho h on {ctx.name(c)}")
        if mu_of(ctx, st2, c) != mon.product(mu_of(ctx, st, x) for x in img):
            issues.append(f"mu' != mu h on {ctx.name(c)}")
        for x in img:
            if x not in st.B and not is_a_letter(x):
                issues.append(f"h({ctx.name(c)}) uses {ctx.name(x)} outside B")
    for X in st.X:
        y = st.theta.get(X)
        if y is not None and any(z != y for z in h.get(y, (y,))):
            issues.append(f"h moves the type of {ctx.name(X)}")
    issues += _morphism_issues(ctx, st2, st, lambda w: apply_endo(ctx, h, w), dep)
    for x, y in st2.theta.items():
        hx, hy = apply_endo(ctx, h, (x,)), apply_endo(ctx, h, (y,))
        if normal_form(hx + hy, dep) != normal_form(hy + hx, dep):
            issues.append(f"type pair {ctx.name(x)},{ctx.name(y)} not respected by h")
    if not final and not weight(ctx, st2) < weight(ctx, st):
        issues.append("compression does not decrease the weight")
    issues += validate_state(ctx, st2)
    return issues


def compression_state(ctx: Context, st: ExtendedEquation, W2: Sequence[int],
                      endo: Mapping[int, tuple], theta: Mapping[int, int] | None = None,
                      drop: Iterable[int] = ()) -> ExtendedEquation:
    """Target state of a compression: new letters get rho/mu of their images."""
    h = full_endo(ctx, endo)
    dep = dependence(ctx, st)
    mon = ctx.monoid
    drop = set(drop)
    B = (set(st.B) | set(h)) - drop
    rho, mu = {}, {}
    for c in B:
        if is_a_letter(c):
            continue
        if c in h:
            rho[c] = dep.rho_word(h[c])
            mu[c] = mon.product(mu_of(ctx, st, x) for x in h[c])
        else:
            rho[c], mu[c] = st.rho[c], st.mu[c]
    for X in st.X:
        rho[X], mu[X] = st.rho[X], st.mu[X]
    th = {x: y for x, y in st.theta.items() if is_variable(x)}
    if theta is None:
        th.update({x: y for x, y in st.theta.items() if not is_variable(x) and x in B})
    else:
        th.update(theta)
    return make_state(ctx, W2, B, st.X, rho, mu, th)


# -- pulling solutions back --------------------------------------------------------------

def unrename_target(ctx: Context, label: Label, st2: ExtendedEquation,
                    sigma2: Mapping[int, tuple] | None = None):
    """The raw target (and its solution) behind a stored edge."""
    from .equation_state import rename_state
    r = label.ren_map
    if not r:
        return st2, (dict(sigma2) if sigma2 is not None else None)
    raw = rename_state(ctx, st2, r)
    if sigma2 is None:
        return raw, None
    f = lambda x: r.get(x, x)
    return raw, {f(X): tuple(f(x) for x in w) for X, w in sigma2.items()}


def pullback(ctx: Context, st: ExtendedEquation, label: Label,
             sigma2: Mapping[int, tuple]) -> dict[int, tuple]:
    r = label.ren_map
    if r:
        f = lambda x: r.get(x, x)
        sigma2 = {f(X): tuple(f(x) for x in w) for X, w in sigma2.items()}
    if label.kind == SUBSTITUTION:
        tau = label.tau_map
        out = {}
        for X in st.X:
            w = tau.get(X, (X,))
            out[X] = substitute_word(ctx, sigma2, w)
        return out
    h = full_endo(ctx, label.endo_map)
    return {X: apply_endo(ctx, h, sigma2[X]) for X in st.X}


def substitute_word(ctx: Context, sigma: Mapping[int, tuple], word: Iterable[int]) -> tuple:
    out = []
    for x in word:
        if is_variable(x):
            out.extend(sigma_of(ctx, sigma, x))
        else:
            out.append(x)
    return tuple(out)


def extend_alpha(ctx: Context, alpha: Mapping[int, tuple], label: Label) -> dict[int, tuple]:
    """alpha' = alpha h on the letters introduced by a compression."""
    out = dict(alpha)
    if label.kind == SUBSTITUTION:
        return out
    for c, w in full_endo(ctx, label.endo_map).items():
        out[c] = alpha_word(alpha, w)
    return out


def validate_label(ctx: Context, st: ExtendedEquation, st2: ExtendedEquation,
                   label: Label, initial: bool = False) -> list[str]:
    raw, _ = unrename_target(ctx, label, st2)
    if label.kind == SUBSTITUTION:
        return validate_substitution(ctx, st, raw, label.tau_map, initial=initial)
    if label.kind == FINAL:
        return validate_final(ctx, st, raw, label)
    return validate_compression(ctx, st, raw, label.endo_map)


def verify_step(ctx: Context, st: ExtendedEquation, sol: Solution, label: Label,
                st2: ExtendedEquation, sol2: Solution, initial: bool = False) -> list[str]:
    """Transition validity, the new solution, pullback equality, forward property."""
    if label.kind == SUBSTITUTION:
        issues = validate_substitution(ctx, st, st2, label.tau_map, initial=initial)
    else:
        issues = validate_compression(ctx, st, st2, label.endo_map, final=label.kind == FINAL)
    if issues:
        return issues
    issues = check_solution(ctx, st2, sol2.sigma, sol2.alpha)
    if issues:
        return ["target solution: " + i for i in issues]
    back = pullback(ctx, st, label, sol2.sigma)
    dep = dependence(ctx, st)
    for X in st.X:
        if normal_form(back[X], dep) != normal_form(sol.sigma[X], dep):
            if not initial:
                return [f"pullback differs on {ctx.name(X)}"]
    left = project_solution(ctx, substitute(ctx, st, sol.sigma), sol.alpha)
    right = project_solution(ctx, substitute(ctx, st2, sol2.sigma), sol2.alpha)
    if left != right and not initial:
        return ["forward property fails"]
    return []


# -- basic operations ------------------------------------------------------------------------

def pop_left(ctx: Context, st: ExtendedEquation, sol: Solution, X: int,
             letters: Sequence[int] | None = None):
    """tau(X) = u X with u a product of minimal letters of sigma(X)."""
    dep = dependence(ctx, st)
    s = sol.sigma[X]
    if not s:
        raise TransitionError("nothing to pop")
    if letters is None:
        letters = [s[min_positions(s, dep)[0]]]
    rest = list(s)
    for a in letters:
        i = rest.index(a)
        if any(not dep.independent(rest[j], a) for j in range(i)):
            raise TransitionError("popped letter is not minimal")
        del rest[i]
    return _pop(ctx, st, sol, X, tuple(letters), tuple(rest), left=True)


def pop_right(ctx: Context, st: ExtendedEquation, sol: Solution, X: int,
              letters: Sequence[int] | None = None):
    dep = dependence(ctx, st)
    s = sol.sigma[X]
    if not s:
        raise TransitionError("nothing to pop")
    if letters is None:
        letters = [s[max_positions(s, dep)[-1]]]
    rest = list(s)
    for a in letters:
        i = len(rest) - 1 - rest[::-1].index(a)
        if any(not dep.independent(rest[j], a) for j in range(i + 1, len(rest))):
            raise TransitionError("popped letter is not maximal")
        del rest[i]
    return _pop(ctx, st, sol, X, tuple(letters), tuple(rest), left=False)


def _pop(ctx, st, sol, X, u, rest, left):
    mon = ctx.monoid
    if rest:
        tau = {X: (u + (X,)) if left else ((X,) + u)}
        dep = dependence(ctx, st)
        r = dep.rho_word(rest)
        # keep rho(X) = rho(sigma(X)) when the popped letters allow it
        if dep.rho_word(u) | r != st.rho[X]:
            r = st.rho[X]
        upd = {X: (r, mon.product(mu_of(ctx, st, x) for x in rest), st.theta.get(X))}
    else:
        tau = {X: u}
        upd = {}
    st2 = apply_substitution(ctx, st, tau, updates=upd)
    sigma2 = {Y: w for Y, w in sol.sigma.items() if Y != X}
    if rest:
        sigma2[X] = normal_form(rest, dependence(ctx, st2))
    return st2, Solution(sigma2, dict(sol.alpha)), Label.make(SUBSTITUTION, tau=tau)


def remove_empty(ctx: Context, st: ExtendedEquation, sol: Solution, Xs: Iterable[int]):
    tau = {X: () for X in Xs}
    st2 = apply_substitution(ctx, st, tau)
    sigma2 = {Y: w for Y, w in sol.sigma.items() if Y not in tau}
    return st2, Solution(sigma2, dict(sol.alpha)), Label.make(SUBSTITUTION, tau=tau)


def initial_transition(ctx: Context, st: ExtendedEquation, sol: Solution):
    """Delete empty variables, shrink rho(X) to rho(sigma(X)), pop minimal letters."""
    dep = dependence(ctx, st)
    mon = ctx.monoid
    tau, upd = {}, {}
    sigma2 = {}
    for X in st.X:
        s = sol.sigma[X]
        if not s:
            tau[X] = ()
            continue
        mins = min_positions(s, dep)
        u = tuple(s[i] for i in mins)
        rest = tuple(x for i, x in enumerate(s) if i not in set(mins))
        if rest:
            tau[X] = u + (X,)
            upd[X] = (dep.rho_word(rest), mon.product(mu_of(ctx, st, x) for x in rest), None)
            sigma2[X] = rest
        else:
            tau[X] = u
    st2 = apply_substitution(ctx, st, tau, updates=upd)
    dep2 = dependence(ctx, st2)
    sigma2 = {X: normal_form(w, dep2) for X, w in sigma2.items()}
    return st2, Solution(sigma2, dict(sol.alpha)), Label.make(SUBSTITUTION, tau=tau)


def final_transition(ctx: Context, st: ExtendedEquation, sol: Solution):
    """h(c_i) = the i-th #-block; the target is a final state."""
    if st.X:
        raise TransitionError("final transition needs a variable-free state")
    segs = segments(st.W)
    k = ctx.k
    dist = ctx.distinguished()
    endo = {}
    for i, c in enumerate(dist):
        endo[c] = segs[i]
    # rebuild W' block by block: first k blocks become c_i, the mirrored ones c_i-bar
    n = len(segs)
    new_segs = []
    # with types left over, W is symmetric only up to typed commutations; the
    # middle segments then collapse to one letter per mirrored pair
    collapse = bool(st.theta)
    fresh = iter(fresh_constants(st, n))
    for j, s in enumerate(segs):
        if j < k:
            new_segs.append((dist[j],))
        elif j >= n - k:
            new_segs.append((dist[n - 1 - j] ^ 1,))
        elif collapse and s and j <= n - 1 - j:
            e = next(fresh)
            if j == n - 1 - j:
                raise TransitionError("self-mirrored middle segment")
            endo[e] = s
            new_segs.append((e,))
        elif collapse and s:
            mate = new_segs[n - 1 - j]
            new_segs.append((mate[0] ^ 1,))
        else:
            new_segs.append(s)
    W2 = [MARKER]
    for s in new_segs:
        W2 += list(s) + [MARKER]
    h = full_endo(ctx, endo)
    mon = ctx.monoid
    dep = dependence(ctx, st)
    used = set(W2)
    B = {c for c in st.B if c in used or is_a_letter(c)} | set(h)
    rho, mu = {}, {}
    for c in B:
        if is_a_letter(c):
            continue
        img = h.get(c, (c,))
        rho[c] = ctx.full if c in h else st.rho[c]
        mu[c] = mon.product(mu_of(ctx, st, x) for x in img)
    st2 = make_state(ctx, W2, B, (), rho, mu, {})
    return st2, Solution({}, extend_alpha(ctx, sol.alpha, Label.make(FINAL, endo))), \
        Label.make(FINAL, endo)


def collapse_transition(ctx: Context, st: ExtendedEquation, sol: Solution):
    """Variable-free state: each mirrored pair of segments becomes one letter pair.

    Types are dropped.  The target is symmetric letter by letter, whatever
    commutations the source needed for its symmetry.
    """
    if st.X:
        raise TransitionError("collapse needs a variable-free state")
    segs = segments(st.W)
    n = len(segs)
    fresh = iter(fresh_constants(st, n))
    endo: dict[int, tuple] = {}
    new_segs: list[tuple] = [()] * n
    for j in range(n // 2):
        s = segs[j]
        if not s:
            continue
        e = next(fresh)
        endo[e] = s
        new_segs[j] = (e,)
        new_segs[n - 1 - j] = (e ^ 1,)
    if n % 2:
        raise TransitionError("self-mirrored middle segment")
    W2 = [MARKER]
    for s in new_segs:
        W2 += list(s) + [MARKER]
    # B only grows here; unused letters stay until a later step drops them
    st2 = compression_state(ctx, st, W2, endo, theta={})
    label = Label.make(COMPRESSION, endo)
    return st2, Solution({}, extend_alpha(ctx, sol.alpha, label)), label


def validate_final(ctx: Context, st: ExtendedEquation, st2: ExtendedEquation,
                   label: Label) -> list[str]:
    """The final step: W = h(W'), W' = W'-bar, prefix #c1#...#ck#."""
    issues = []
    h = full_endo(ctx, label.endo_map)
    dep = dependence(ctx, st)
    if normal_form(apply_endo(ctx, h, st2.W), dep) != st.W:
        issues.append("W is not h(W')")
    if not is_final(ctx, st2):
        issues.append("target is not final")
    mon = ctx.monoid
    for c, w in h.items():
        if mu_of(ctx, st2, c) != mon.product(mu_of(ctx, st, x) for x in w):
            issues.append(f"mu' != mu h on {ctx.name(c)}")
        if dep.rho_word(w) & ~rho_of(ctx, st2, c):
            issues.append(f"rho h exceeds rho' on {ctx.name(c)}")
    return issues


# -- composing labels -------------------------------------------------------------------------

def compose_labels(ctx: Context, labels: Sequence[Label],
                   letters: Iterable[int] | None = None) -> dict[int, tuple]:
    """h1 ... ht on the letters of the last state (default: the distinguished ones)."""
    out = {}
    for x in (ctx.distinguished() if letters is None else letters):
        w = (x,)
        for lab in reversed(labels):
            w = lab.apply(ctx, w)
        out[x] = w
    return out


def apply_to_distinguished(ctx: Context, labels: Sequence[Label]) -> list[tuple]:
    comp = compose_labels(ctx, labels)
    out = []
    for c in ctx.distinguished():
        w = comp.get(c, (c,))
        out.append(project_solution(ctx, w, {}))
    return out
