"""Forward paths: from the initial state and a concrete solution to a final state.

Every nondeterministic choice of the construction is answered by looking at
the concrete solution.  Each emitted step is verified (transition validity,
target solution, pullback, forward property) before it is committed; when a
compression cannot be realised the search falls back to popping, which is
always valid, so a path is produced for every solution.
"""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .equation_state import (
    Context, ExtendedEquation, Solution, StateError, alpha_word, bar_any,
    build_initial, canonical_state, dependence, involute_state_word, mu_of,
    project_solution, rho_of, solution_weight, substitute, weight,
)
from .trace_core import (
    MARKER, Dependence, is_a_letter, is_variable, lifted, min_positions,
    normal_form, order_relation, popcount, unlift,
)
from .transition_engine import (
    COMPRESSION, FINAL, SUBSTITUTION, Label, TransitionError, apply_substitution,
    collapse_transition, compression_state, extend_alpha, final_transition, fresh_constants,
    fresh_variables, initial_transition, pop_left, pop_right, remove_empty,
    validate_final, verify_step,
)

log = logging.getLogger(__name__)


class SearchError(RuntimeError):
    pass


class BudgetError(SearchError):
    pass


class Unrealisable(Exception):
    """A compression plan that does not yield a valid transition."""


def mirror_positions(ctx: Context, st: ExtendedEquation) -> dict[int, int]:
    """Position i of W -> the position holding its bar in the mirror segment."""
    from .equation_state import segments
    dep = dependence(ctx, st)
    bounds, start = [], 1
    for seg in segments(st.W):
        bounds.append((start, seg))
        start += len(seg) + 1
    by_content: dict[tuple, list[int]] = {}
    for k, (_, seg) in enumerate(bounds):
        by_content.setdefault(seg, []).append(k)
    out: dict[int, int] = {}
    for seg, ks in by_content.items():
        inv = involute_state_word(ctx, seg)
        partner = normal_form(inv, dep)
        ks2 = by_content.get(partner)
        if ks2 is None or len(ks2) != len(ks):
            raise Unrealisable("W is not closed under the involution")
        # occurrence matching: t-th x in seg <-> t-th bar(x) in the partner
        occ: dict[int, list[int]] = {}
        for t, y in enumerate(partner):
            occ.setdefault(y, []).append(t)
        seen: dict[int, int] = {}
        local = {}
        for t, y in enumerate(inv):
            n = seen.get(y, 0)
            seen[y] = n + 1
            local[len(seg) - 1 - t] = occ[y][n]
        for idx, k in enumerate(ks):
            k2 = ks2[len(ks2) - 1 - idx]
            s1, s2 = bounds[k][0], bounds[k2][0]
            for t, t2 in local.items():
                out[s1 + t] = s2 + t2
    return out


def resource_order(n_resources: int) -> list[int]:
    return sorted(range(1, 1 << n_resources), key=lambda m: (popcount(m), m))


@dataclass
class Step:
    src: ExtendedEquation
    label: Label
    dst: ExtendedEquation
    solution: Solution          # solution of dst, in dst's canonical names
    note: str = ""


@dataclass
class PathStats:
    fixed_checks: list = field(default_factory=list)      # (S, ok, detail)
    remove_checks: list = field(default_factory=list)     # (S, ok, detail)
    partitions: list = field(default_factory=list)        # (S, k, covered)
    weight_violations: list = field(default_factory=list)
    budget_violations: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)
    annotations: list = field(default_factory=list)
    max_length: int = 0
    max_var_occurrences: int = 0


@dataclass
class ForwardPath:
    initial: ExtendedEquation
    initial_solution: Solution
    steps: list[Step]
    stats: PathStats

    @property
    def states(self) -> list[ExtendedEquation]:
        return [self.initial] + [s.dst for s in self.steps]

    @property
    def labels(self) -> list[Label]:
        return [s.label for s in self.steps]


# -- the expanded word sigma(W) ------------------------------------------------------------

class Expansion:
    """sigma(W) position by position, with the involution correspondence J."""

    def __init__(self, ctx: Context, st: ExtendedEquation, sigma: Mapping[int, tuple],
                 typed: bool = False):
        self.ctx, self.st = ctx, st
        E, slots, spans = [], [], []
        for i, x in enumerate(st.W):
            start = len(E)
            if is_variable(x):
                X = x & ~1
                s = sigma[X]
                L = len(s)
                for t in range(L):
                    if x & 1:
                        E.append(bar_any(ctx, s[L - 1 - t]))
                        slots.append((i, X, L - 1 - t, True))
                    else:
                        E.append(s[t])
                        slots.append((i, X, t, False))
            else:
                E.append(x)
                slots.append((i, None, -1, False))
            spans.append((start, len(E)))
        self.E, self.slots, self.spans = E, slots, spans
        self.n = len(E)
        self.dep = dependence(ctx, st) if typed else dependence(ctx, st, theta={})
        self.below = order_relation(E, self.dep)
        self._J = None

    def visible(self, p: int) -> bool:
        return self.slots[p][1] is None

    def wpos(self, p: int) -> int:
        return self.slots[p][0]

    @property
    def J(self) -> list[int]:
        if self._J is None:
            E = self.E
            n = self.n
            Ebar = involute_state_word(self.ctx, E)
            occ, occbar = {}, {}
            for p, x in enumerate(E):
                occ.setdefault(x, []).append(p)
            for q, x in enumerate(Ebar):
                occbar.setdefault(x, []).append(q)
            J = [0] * n
            for x, ps in occ.items():
                qs = occbar.get(x, [])
                if len(qs) != len(ps):
                    raise Unrealisable("sigma(W) is not involution-symmetric")
                for p, q in zip(ps, qs):
                    J[p] = n - 1 - q
            self._J = J
        return self._J

    def less(self, p: int, q: int) -> bool:
        return bool(self.below[q] >> p & 1)

    def linked(self, p: int, q: int) -> bool:
        """p < q with nothing in between (a Hasse arc)."""
        if not self.less(p, q):
            return False
        mid = self.below[q] & ~self.below[p] & ~(1 << p)
        while mid:
            low = mid & -mid
            r = low.bit_length() - 1
            if self.below[r] >> p & 1:
                return False
            mid ^= low
        return True

    def chains(self, member: Callable[[int], bool], link: Callable[[int, int], bool] | None = None
               ) -> list[list[int]]:
        """Maximal sequences of member positions, consecutive ones Hasse-linked."""
        pos = [p for p in range(self.n) if member(p)]
        runs, cur = [], []
        for p in pos:
            if cur and self.linked(cur[-1], p) and (link is None or link(cur[-1], p)):
                cur.append(p)
            else:
                if cur:
                    runs.append(cur)
                cur = [p]
        if cur:
            runs.append(cur)
        return runs

    def neighbours_rho(self, p: int) -> int:
        m = 0
        for q in range(self.n):
            if q != p and (self.linked(p, q) or self.linked(q, p)):
                m |= self.dep.rho(self.E[q])
        return m


def s_letter(ctx: Context, st: ExtendedEquation, x: int, S: int) -> bool:
    return x != MARKER and not is_variable(x) and rho_of(ctx, st, x) == S


# -- the guided context ----------------------------------------------------------------------

class Guide:
    def __init__(self, ctx: Context, st: ExtendedEquation, sol: Solution,
                 strict: bool = False, seed: int = 0):
        self.ctx = ctx
        self.st = st
        self.sol = sol
        self.steps: list[Step] = []
        self.stats = PathStats()
        self.strict = strict
        self.rng = random.Random(seed)
        n = len(st.W)
        occ = sum(1 for x in st.W if is_variable(x))
        self.length_budget = ctx.budgets.eq_length or ctx.budgets.factor * n
        self.occ_budget = ctx.budgets.var_occurrences or ctx.budgets.factor * max(occ, 1)
        self.step_budget = ctx.budgets.steps

    # bookkeeping ---------------------------------------------------------------------------

    def measure(self, st: ExtendedEquation, sol: Solution):
        return (solution_weight(sol.sigma, sol.alpha), weight(self.ctx, st))

    def commit(self, st2: ExtendedEquation, sol2: Solution, label: Label, note: str,
               initial: bool = False) -> bool:
        ctx = self.ctx
        if label.kind == FINAL:
            issues = validate_final(ctx, self.st, st2, label)
        else:
            issues = verify_step(ctx, self.st, self.sol, label, st2, sol2, initial=initial)
        if issues:
            log.debug("rejected %s: %s", note, issues[:3])
            if self.strict:
                raise SearchError(f"{note}: {issues}")
            return False
        if label.kind != FINAL and not initial:
            before, after = self.measure(self.st, self.sol), self.measure(st2, sol2)
            if not after < before:
                self.stats.weight_violations.append((note, before, after))
                if self.strict:
                    raise SearchError(f"{note}: weight does not decrease")
                return False
        if label.kind == COMPRESSION and not weight(ctx, st2) < weight(ctx, self.st):
            self.stats.weight_violations.append((note, weight(ctx, self.st), weight(ctx, st2)))
            return False
        canon, ren = canonical_state(ctx, st2)
        keep = {c for c in st2.B if not is_a_letter(c)}
        sol2 = Solution({X: w for X, w in sol2.sigma.items() if X in st2.X},
                        {c: w for c, w in sol2.alpha.items() if c in keep})
        sol_c = rename_solution(sol2, ren)
        lab = label.with_renaming(ren)
        self.steps.append(Step(self.st, lab, canon, sol_c, note))
        self.st, self.sol = canon, sol_c
        L = len(canon.W)
        occ = sum(1 for x in canon.W if is_variable(x))
        self.stats.max_length = max(self.stats.max_length, L)
        self.stats.max_var_occurrences = max(self.stats.max_var_occurrences, occ)
        if L > self.length_budget or occ > self.occ_budget:
            self.stats.budget_violations.append((note, L, occ))
            raise BudgetError(f"budget exceeded at {note}: |W|={L}, occurrences={occ}")
        if len(self.steps) > self.step_budget:
            raise BudgetError("step budget exceeded")
        return True

    def attempt(self, build: Callable[[], tuple], note: str) -> bool:
        try:
            st2, sol2, label = build()
        except (Unrealisable, TransitionError, StateError) as e:
            log.debug("unrealisable %s: %s", note, e)
            return False
        return self.commit(st2, sol2, label, note)

    def rewrite_solution(self, sol2: Solution, note: str) -> bool:
        """Switch to another solution of the same state (no transition)."""
        from .equation_state import check_solution
        if check_solution(self.ctx, self.st, sol2.sigma, sol2.alpha):
            return False
        before = project_solution(self.ctx, substitute(self.ctx, self.st, self.sol.sigma),
                                  self.sol.alpha)
        after = project_solution(self.ctx, substitute(self.ctx, self.st, sol2.sigma), sol2.alpha)
        if before != after:
            return False
        self.sol = sol2
        self.stats.annotations.append(note)
        return True

    @property
    def dep(self) -> Dependence:
        return dependence(self.ctx, self.st)

    def expansion(self, typed: bool = False) -> Expansion:
        return Expansion(self.ctx, self.st, self.sol.sigma, typed=typed)

    # elementary moves ----------------------------------------------------------------------

    def pop_all(self, Xs: Iterable[int] | None = None, note: str = "pop all") -> None:
        """tau(X) = sigma(X): always valid, removes the variables."""
        Xs = sorted(self.st.X if Xs is None else Xs)
        if not Xs:
            return
        tau = {X: tuple(self.sol.sigma[X]) for X in Xs}
        st2 = apply_substitution(self.ctx, self.st, tau)
        sigma2 = {Y: w for Y, w in self.sol.sigma.items() if Y not in tau}
        ok = self.commit(st2, Solution(sigma2, dict(self.sol.alpha)),
                         Label.make(SUBSTITUTION, tau=tau), note)
        if not ok:
            # one variable at a time never fails
            for X in Xs:
                tau = {X: tuple(self.sol.sigma[X])}
                st2 = apply_substitution(self.ctx, self.st, tau)
                sigma2 = {Y: w for Y, w in self.sol.sigma.items() if Y != X}
                if not self.commit(st2, Solution(sigma2, dict(self.sol.alpha)),
                                   Label.make(SUBSTITUTION, tau=tau), note):
                    raise SearchError(f"cannot pop {self.ctx.name(X)}")
        self.stats.fallbacks.append(note)

    def pop_prefix(self, X: int, letters: Sequence[int], note: str) -> bool:
        return self.attempt(lambda: pop_left(self.ctx, self.st, self.sol, X, letters), note)

    def pop_suffix(self, X: int, letters: Sequence[int], note: str) -> bool:
        return self.attempt(lambda: pop_right(self.ctx, self.st, self.sol, X, letters), note)

    def drop_empty(self) -> None:
        empty = [X for X in self.st.X if not self.sol.sigma.get(X)]
        if empty:
            if not self.attempt(lambda: remove_empty(self.ctx, self.st, self.sol, empty),
                                "remove empty variables"):
                raise SearchError("cannot remove empty variables")

    # cleanup -------------------------------------------------------------------------------

    def cleanup(self) -> None:
        """Remove invisible letters (solution rewrite) and useless ones (compression)."""
        ctx, st = self.ctx, self.st
        inW = set(st.W)
        inTheta = set(st.theta.values()) | set(st.theta)
        extra = {c for c in st.B if not is_a_letter(c) and c not in inW and c not in inTheta}
        if not extra:
            return
        used = set()
        for w in self.sol.sigma.values():
            used |= set(w)
        invisible = {c for c in extra if c in used}
        if invisible:
            sigma2 = {}
            for X, w in self.sol.sigma.items():
                out = []
                for x in w:
                    if x in invisible:
                        r = rho_of(ctx, st, x)
                        out.extend(lifted(unlift(a), r) for a in self.sol.alpha[x])
                    else:
                        out.append(x)
                sigma2[X] = normal_form(out, self.dep)
            if not self.rewrite_solution(Solution(sigma2, dict(self.sol.alpha)),
                                         "remove invisible letters"):
                return
        drop = {c for c in extra} | {bar_any(ctx, c) for c in extra}
        drop = {c for c in drop if c not in set(self.st.W) and c not in inTheta}

        def build():
            st2 = compression_state(ctx, self.st, self.st.W, {}, drop=drop)
            alpha2 = {c: w for c, w in self.sol.alpha.items() if c not in drop}
            return st2, Solution(dict(self.sol.sigma), alpha2), Label.make(COMPRESSION)
        self.attempt(build, "remove useless letters")

    # the generic contraction ----------------------------------------------------------------

    def contract(self, ex: Expansion, groups: list[list[int]], keyed: bool = True,
                 rho_override: Callable[[tuple], int] | None = None,
                 theta_for: Callable[[tuple], int | None] | None = None,
                 linearise_symmetric: bool = False):
        """Compress factors of sigma(W) into fresh letters.

        `groups` are factors (E-positions) that are entirely visible or lie in a
        single variable occurrence.  They are closed under J and under the
        correspondence between occurrences of a variable before letters are
        assigned; with `keyed` all groups spelling the same word share a letter.
        """
        ctx, st = self.ctx, self.st
        J = ex.J
        mirror = mirror_positions(ctx, st)
        owner: dict[int, int] = {}
        gl: list[tuple] = []

        def add(g) -> int:
            g = tuple(sorted(g))
            if g and g[0] in owner:
                gid = owner[g[0]]
                if gl[gid] != g:
                    raise Unrealisable("overlapping groups")
                return gid
            for p in g:
                if p in owner:
                    raise Unrealisable("overlapping groups")
            gid = len(gl)
            gl.append(g)
            for p in g:
                owner[p] = gid
            return gid

        # occurrences of each variable: W positions
        occ: dict[int, list[int]] = {}
        for i, x in enumerate(st.W):
            if is_variable(x):
                occ.setdefault(x & ~1, []).append(i)

        def var_images(g):
            i, X, _, _ = ex.slots[g[0]]
            offs = sorted(ex.slots[p][2] for p in g)
            out = []
            for j in occ[X]:
                a, b = ex.spans[j]
                pos = [p for p in range(a, b) if ex.slots[p][2] in offs]
                out.append((tuple(pos), st.W[j] & 1 != st.W[i] & 1))
            return out

        # closure, recording relations: (gid, gid2, same_polarity)
        rel = []
        todo = [add(g) for g in groups]
        seen = set()
        while todo:
            gid = todo.pop()
            if gid in seen:
                continue
            seen.add(gid)
            g = gl[gid]
            kinds = {ex.slots[p][0] if ex.slots[p][1] is not None else None for p in g}
            vis = [ex.visible(p) for p in g]
            if any(vis) and not all(vis):
                raise Unrealisable("group mixes visible and invisible positions")
            if not all(vis) and len(kinds) != 1:
                raise Unrealisable("group spans several variable occurrences")
            j = add([J[p] for p in g])
            rel.append((gid, j, False))
            todo.append(j)
            if all(vis):
                # the mirror of the factor in W itself
                try:
                    img = [mirror[ex.wpos(p)] for p in g]
                except KeyError:
                    raise Unrealisable("factor touches a marker") from None
                m = add([ex.spans[i][0] for i in img])
                rel.append((gid, m, False))
                todo.append(m)
            if not all(vis):
                for pos, flip in var_images(g):
                    k = add(pos)
                    rel.append((gid, k, not flip))
                    todo.append(k)

        # polarity classes
        parent = list(range(len(gl)))
        pol = [0] * len(gl)

        def find(x):
            if parent[x] == x:
                return x, 0
            r, p = find(parent[x])
            parent[x] = r
            pol[x] ^= p
            return r, pol[x]
        for a, b, same in rel:
            ra, pa = find(a)
            rb, pb = find(b)
            want = 0 if same else 1
            if ra == rb:
                if pa ^ pb != want:
                    raise Unrealisable("inconsistent orientation")
            else:
                parent[rb] = ra
                pol[rb] = pa ^ pb ^ want

        def word(gid):
            return normal_form([ex.E[p] for p in gl[gid]], ex.dep)

        dep = self.dep
        classes: dict[int, list[int]] = {}
        for gid in range(len(gl)):
            r, _ = find(gid)
            classes.setdefault(r, []).append(gid)
        letter_of_class: dict[int, int] = {}
        flip_class: dict[int, int] = {}
        by_word: dict[tuple, int] = {}
        fresh_iter = iter(fresh_constants(st, 2 * len(classes) + 2))
        endo: dict[int, tuple] = {}
        rho_new: dict[int, int] = {}
        theta_new: dict[int, int] = {}
        for r, members in sorted(classes.items()):
            pos_member = next(g for g in members if find(g)[1] == 0)
            w = word(pos_member)
            wb = normal_form(involute_state_word(ctx, w), dep)
            key = (w, rho_override(w) if rho_override else None)
            keyb = (wb, key[1])
            if keyed and key in by_word:
                letter_of_class[r], flip_class[r] = by_word[key], 0
                continue
            if keyed and keyb in by_word and wb != w:
                letter_of_class[r], flip_class[r] = by_word[keyb], 1
                continue
            c = next(fresh_iter)
            letter_of_class[r], flip_class[r] = c, 0
            by_word[key] = c
            endo[c] = tuple(w)
            if rho_override:
                rho_new[c] = rho_override(w)
            if theta_for:
                t = theta_for(w)
                if t is not None:
                    theta_new[c] = t
                    theta_new[c ^ 1] = bar_any(ctx, t)

        def letter(gid):
            r, p = find(gid)
            c = letter_of_class[r]
            return c ^ (p ^ flip_class[r])

        # check every group spells its letter's image
        for gid in range(len(gl)):
            c = letter(gid)
            img = endo[c] if c in endo else involute_state_word(ctx, endo[c ^ 1])
            if normal_form(img, dep) != word(gid):
                raise Unrealisable("groups of one class spell different words")

        # W level
        node_of = list(range(len(st.W)))
        node_letter = list(st.W)
        for gid, g in enumerate(gl):
            if ex.visible(g[0]):
                ws = [ex.wpos(p) for p in g]
                for i in ws:
                    node_of[i] = ws[0]
                node_letter[ws[0]] = letter(gid)
        if linearise_symmetric:
            W2 = self._symmetric_order(ex, node_of, node_letter)
        else:
            W2 = _quotient_order(st.W, dep, node_of, node_letter)

        # variable level
        sigma2 = {}
        for X, s in self.sol.sigma.items():
            i0 = occ[X][0]
            a, b = ex.spans[i0]
            flip = st.W[i0] & 1
            s_node = list(range(len(s)))
            s_letter = list(s)
            for p in range(a, b):
                gid = owner.get(p)
                if gid is None:
                    continue
                offs = sorted(ex.slots[q][2] for q in gl[gid])
                c = letter(gid)
                if flip:
                    c = bar_any(ctx, c)
                for o in offs:
                    s_node[o] = offs[0]
                s_letter[offs[0]] = c
            sigma2[X] = _quotient_order(s, dep, s_node, s_letter)

        rho_fn = None
        # constant types only matter while some variable is typed
        if any(is_variable(x) for x in st.theta):
            th = {x: y for x, y in st.theta.items() if not is_variable(x)}
        else:
            th = {}
        st2 = compression_state(ctx, st, W2, endo, theta={**th, **theta_new})
        if rho_new:
            from .equation_state import make_state
            rho = dict(st2.rho)
            for c, r in rho_new.items():
                rho[c] = rho[c ^ 1] = r
            st2 = make_state(ctx, W2, st2.B, st2.X, rho, st2.mu, st2.theta)
        dep2 = dependence(ctx, st2)
        sigma2 = {X: normal_form(w, dep2) for X, w in sigma2.items()}
        label = Label.make(COMPRESSION, endo)
        alpha2 = extend_alpha(ctx, self.sol.alpha, label)
        return st2, Solution(sigma2, alpha2), label

    def _symmetric_order(self, ex: Expansion, node_of, node_letter):
        """A linearisation of W that the involution maps onto its reverse."""
        st = self.st
        dep = self.dep
        J = ex.J
        nodes = sorted(set(node_of))
        members = {u: [i for i in range(len(st.W)) if node_of[i] == u] for u in nodes}
        epos = {u: set() for u in nodes}
        for u, ws in members.items():
            for i in ws:
                a, b = ex.spans[i]
                epos[u] |= set(range(a, b))
        by_pos = {}
        for u, ps in epos.items():
            for p in ps:
                by_pos[p] = u
        JW = {}
        for u, ps in epos.items():
            if not ps:
                raise Unrealisable("empty node")
            img = {J[p] for p in ps}
            targets = {by_pos[q] for q in img}
            if len(targets) != 1 or epos[next(iter(targets))] != img:
                raise Unrealisable("involution does not act on W positions")
            JW[u] = next(iter(targets))
        preds = {u: set() for u in nodes}
        W = st.W
        for j in range(len(W)):
            for i in range(j):
                u, v = node_of[i], node_of[j]
                if u != v and not dep.independent(W[i], W[j]):
                    preds[v].add(u)
        remaining = set(nodes)
        front, back = [], []
        while remaining:
            cands = [u for u in remaining if not (preds[u] & remaining)]
            if not cands:
                raise Unrealisable("cyclic quotient")
            u = min(cands)
            v = JW[u]
            front.append(u)
            remaining.discard(u)
            if v != u:
                succ_rem = [w for w in remaining if v in preds[w] and w != v]
                if succ_rem or v not in remaining:
                    raise Unrealisable("mirror node is not maximal")
                back.append(v)
                remaining.discard(v)
        order = front + back[::-1]
        return [node_letter[u] for u in order]

    # phases ---------------------------------------------------------------------------------

    def s_letters_present(self, S: int) -> bool:
        ctx, st = self.ctx, self.st
        if any(s_letter(ctx, st, x, S) for x in st.W):
            return True
        return any(s_letter(ctx, st, x, S) for w in self.sol.sigma.values() for x in w)

    def s_variables(self, S: int) -> list[int]:
        return [X for X in sorted(self.st.X) if self.st.rho[X] == S]

    # typed blocks -----------------------------------------------------------------------------

    def pure_variables(self, a: int) -> dict[int, int]:
        """Variables whose solution is a power of a (1) or of a-bar (-1), length >= 2."""
        out = {}
        ab = bar_any(self.ctx, a)
        for X, s in self.sol.sigma.items():
            if len(s) >= 2 and all(x == a for x in s):
                out[X] = 1
            elif len(s) >= 2 and all(x == ab for x in s):
                out[X] = -1
        return out

    def typed_blocks(self, S: int) -> None:
        ctx = self.ctx
        done = set()
        while True:
            letters = sorted({x for w in self.sol.sigma.values() for x in w
                              if s_letter(ctx, self.st, x, S)})
            target = None
            for a in letters:
                key = min(a, bar_any(ctx, a))
                if key in done:
                    continue
                if self.pure_variables(key):
                    target = key
                    break
            if target is None:
                return
            done.add(target)
            self._typed_block_phase(target, S)

    def _uncross_nonpure(self, a: int) -> None:
        ctx = self.ctx
        ab = bar_any(ctx, a)
        pure = self.pure_variables(a)
        for X in sorted(self.st.X):
            if X in pure or X not in self.sol.sigma:
                continue
            for letter in (a, ab):
                s = self.sol.sigma.get(X, ())
                p = _prefix_power(s, letter, self.dep)
                if p and p < len(s):
                    self.pop_prefix(X, [letter] * p, "uncross block prefix")
                s = self.sol.sigma.get(X, ())
                q = _suffix_power(s, letter, self.dep)
                if q and q < len(s):
                    self.pop_suffix(X, [letter] * q, "uncross block suffix")

    def _typed_block_phase(self, a: int, S: int) -> None:
        ctx = self.ctx
        ab = bar_any(ctx, a)
        self._uncross_nonpure(a)
        pure = self.pure_variables(a)
        if not pure:
            return
        # T0: one typed letter per visible a, matched across the involution; sigma uses c
        ok = self.attempt(lambda: self._typing_compression(a), "typed blocks: rename")
        if not ok:
            self.pop_all(pure, "typed blocks: fallback")
            return
        # T1 / T2 loop; the canonical renaming may move c, so look it up every round
        first = True
        while True:
            c = self._typed_target
            if c < 0:
                break
            typed = [X for X in sorted(self.st.X) if self.st.theta.get(X) in (c, c ^ 1)]
            if first:
                movers = [X for X in sorted(self.st.X)
                          if self.sol.sigma[X] and set(self.sol.sigma[X]) <= {c, c ^ 1}
                          and X not in typed]
            else:
                movers = typed
            if not movers:
                break
            ok = self.attempt(lambda: self._typed_pop(movers, c, first), "typed blocks: pop")
            if not ok:
                self.pop_all(movers, "typed blocks: fallback pop")
                break
            first = False
            ok = self.attempt(lambda: self._absorb(self._typed_target), "typed blocks: absorb")
            if not ok:
                c = self._typed_target
                self.pop_all([X for X in self.st.X
                              if self.st.theta.get(X) in (c, c ^ 1)], "typed blocks: fallback")
                break
        self._untype()

    def _typing_compression(self, a: int):
        """h(d) = a for one typed letter d per class of visible a-positions.

        Classes join positions related by the involution of sigma(W) (mirror
        runs, visible positions in reversed order) and by the involution of W
        itself (mirror segments), so W' keeps both symmetries.
        """
        ctx, st = self.ctx, self.st
        ab = bar_any(ctx, a)
        ex = self.expansion()
        pure = self.pure_variables(a)
        J = ex.J
        parent: dict[int, int] = {}

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(i, j):
            parent.setdefault(i, i)
            parent.setdefault(j, j)
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
        for i, x in enumerate(st.W):
            if x in (a, ab):
                parent.setdefault(i, i)
        for R in ex.chains(lambda p: ex.E[p] == a):
            for p in R:
                if not ex.visible(p) and ex.slots[p][1] not in pure:
                    raise Unrealisable("run meets a non-pure variable")
            vis = [p for p in R if ex.visible(p)]
            mvis = sorted(q for q in (J[p] for p in R) if ex.visible(q))
            if len(mvis) != len(vis):
                raise Unrealisable("visible counts differ across the involution")
            for p, q in zip(vis, reversed(mvis)):
                union(ex.wpos(p), ex.wpos(q))
        for i, j in mirror_positions(ctx, st).items():
            if st.W[i] in (a, ab):
                union(i, j)
        if not parent:
            raise Unrealisable("no visible letter to type")
        c = fresh_constants(st, 1)[0]
        used = {c, c ^ 1}
        letter_of: dict[int, int] = {}
        endo = {c: (a,)}
        theta = {}
        W2 = list(st.W)
        for i in sorted(parent):
            r = find(i)
            if r not in letter_of:
                d = fresh_constants(st, 1, used)[0]
                used |= {d, d ^ 1}
                letter_of[r] = d
                endo[d] = (a,) if st.W[r] == a else (ab,)
                theta[d], theta[d ^ 1] = (c, c ^ 1) if st.W[r] == a else (c ^ 1, c)
            d = letter_of[r]
            W2[i] = d if st.W[i] == st.W[r] else d ^ 1
        sigma2 = dict(self.sol.sigma)
        for X, sgn in pure.items():
            sigma2[X] = tuple(c if sgn > 0 else c ^ 1 for _ in sigma2[X])
        th = {x: y for x, y in st.theta.items() if not is_variable(x)}
        th.update(theta)
        st2 = compression_state(ctx, st, W2, endo, theta=th)
        dep2 = dependence(ctx, st2)
        sigma2 = {X: normal_form(w, dep2) for X, w in sigma2.items()}
        label = Label.make(COMPRESSION, endo)
        return st2, Solution(sigma2, extend_alpha(ctx, self.sol.alpha, label)), label

    @property
    def _typed_target(self) -> int:
        # the renaming after commit may have moved the letter; find it through the types
        vals = [y for x, y in self.st.theta.items() if not is_variable(x)]
        return min(vals) & ~1 if vals else -1

    def _typed_pop(self, movers: list[int], c: int, first: bool):
        ctx, st = self.ctx, self.st
        mon = ctx.monoid
        tau, new_vars, upd = {}, {}, {}
        sigma2 = {Y: w for Y, w in self.sol.sigma.items()}
        fresh = iter(fresh_variables(st, len(movers)))
        for X in movers:
            s = self.sol.sigma[X]
            x0 = s[0]
            rest = s[1:]
            if not rest:
                tau[X] = (x0,)
                del sigma2[X]
                continue
            if first:
                Y = next(fresh)
                tau[X] = (x0, Y)
                new_vars[Y] = (st.rho[X], mon.product(mu_of(ctx, st, x) for x in rest), x0)
                del sigma2[X]
                sigma2[Y] = rest
            else:
                tau[X] = (x0, X)
                upd[X] = (st.rho[X], mon.product(mu_of(ctx, st, x) for x in rest), x0)
                sigma2[X] = rest
        st2 = apply_substitution(ctx, st, tau, new_vars=new_vars, updates=upd)
        return st2, Solution(sigma2, dict(self.sol.alpha)), Label.make(SUBSTITUTION, tau=tau)

    def _absorb(self, c: int):
        """Absorb visible c's into the typed letter of their run."""
        ctx, st = self.ctx, self.st
        cb = c ^ 1
        typed_letters = {x for x, y in st.theta.items() if not is_variable(x) and y in (c, cb)}
        ex = self.expansion()
        member = lambda p: ex.E[p] in (c, cb) or ex.E[p] in typed_letters
        # runs under the untyped order, split by orientation
        runs = ex.chains(lambda p: member(p) and _orient(ex.E[p], c, st) > 0) + \
            ex.chains(lambda p: member(p) and _orient(ex.E[p], c, st) < 0)
        J = ex.J
        run_of = {}
        for k, R in enumerate(runs):
            for p in R:
                run_of[p] = k
        keep_types = any(st.theta.get(X) in (c, cb) for X in st.X) and \
            any(len(self.sol.sigma[X]) >= 1 for X in st.X if st.theta.get(X) in (c, cb))
        endo: dict[int, tuple] = {}
        remove_w: set[int] = set()
        place: dict[int, int] = {}
        used: set[int] = set()
        theta_new: dict[int, int] = {}
        done = set()
        for k, R in enumerate(runs):
            if k in done:
                continue
            mk = {run_of[J[p]] for p in R if J[p] in run_of}
            if len(mk) != 1:
                raise Unrealisable("run has no unique mirror")
            k2 = mk.pop()
            done |= {k, k2}
            R2 = runs[k2]
            new = [p for p in R if ex.visible(p) and ex.E[p] in (c, cb)]
            new2 = [p for p in R2 if ex.visible(p) and ex.E[p] in (c, cb)]
            if len(new) != len(new2):
                raise Unrealisable("absorbed counts differ across the involution")
            if not new:
                continue
            x = ex.E[new[0]]
            holders = [p for p in R if ex.visible(p) and ex.E[p] in typed_letters]
            if holders:
                d = ex.E[holders[0]]
                if not any(ex.visible(q) and ex.E[q] == bar_any(ctx, d) for q in R2):
                    raise Unrealisable("mirror run lacks the partner letter")
                want = (d,) + (x,) * len(new)
                if endo.get(d, want) != want or bar_any(ctx, d) in endo:
                    raise Unrealisable("letter absorbs different amounts")
                endo[d] = want
                remove_w |= {ex.wpos(p) for p in new + new2}
            else:
                d = fresh_constants(st, 1, used)[0]
                used |= {d, d ^ 1}
                endo[d] = (x,) * len(new)
                theta_new[d], theta_new[d ^ 1] = x, bar_any(ctx, x)
                place[ex.wpos(new[0])] = d
                place[ex.wpos(new2[0])] = d ^ 1
                remove_w |= {ex.wpos(p) for p in new[1:] + new2[1:]}
        # letters for the mirror side follow from the bar closure of endo
        W2 = []
        for i, y in enumerate(st.W):
            if i in place:
                W2.append(place[i])
            elif i not in remove_w:
                W2.append(y)
        if keep_types:
            th = {x: y for x, y in st.theta.items() if not is_variable(x)}
            th.update(theta_new)
        else:
            th = {}
        st2 = compression_state(ctx, st, W2, endo, theta=th)
        dep2 = dependence(ctx, st2)
        sigma2 = {X: normal_form(w, dep2) for X, w in self.sol.sigma.items()}
        label = Label.make(COMPRESSION, endo)
        return st2, Solution(sigma2, extend_alpha(ctx, self.sol.alpha, label)), label

    def _untype(self) -> None:
        """Drop remaining constant types once no typed variable is left."""
        st = self.st
        if any(is_variable(x) for x in st.theta):
            # typed variables survived (fallback): pop them
            self.pop_all([x for x in st.X if x in st.theta], "untype: pop typed variables")
        self.cleanup()

    # untyped blocks ---------------------------------------------------------------------------

    def blocks(self, S: int) -> bool:
        ctx = self.ctx
        changed = False
        for _ in range(4):
            ex = self.expansion()
            is_s = lambda p: s_letter(ctx, self.st, ex.E[p], S)
            runs = ex.chains(is_s, link=lambda p, q: ex.E[p] == ex.E[q])
            blocks = [R for R in runs if len(R) >= 2]
            if not blocks:
                return changed
            if self._uncross(ex, blocks, "uncross blocks"):
                changed = True
                continue
            groups = [R for R in blocks]
            if self.attempt(lambda: self.contract(ex, groups), "block compression"):
                changed = True
                self.cleanup()
                continue
            return changed
        return changed

    def _uncross(self, ex: Expansion, factors: list[list[int]], note: str) -> bool:
        """Pop the variable parts of factors that mix visible and invisible positions."""
        acted = False
        for R in factors:
            parts = {}
            for p in R:
                key = ex.slots[p][0] if not ex.visible(p) else None
                parts.setdefault(key, []).append(p)
            if len(parts) <= 1:
                continue
            for key, ps in parts.items():
                if key is None:
                    continue
                i = key
                X = self.st.W[i] & ~1
                if X not in self.sol.sigma:
                    continue
                offs = sorted(ex.slots[p][2] for p in ps)
                s = self.sol.sigma[X]
                letters = [s[o] for o in offs]
                bar = self.st.W[i] & 1
                a, b = ex.spans[i]
                at_start = ps[0] == a
                at_end = ps[-1] == b - 1
                # in X's own orientation
                left = (at_start and not bar) or (at_end and bar)
                if left:
                    ok = self.pop_prefix(X, _order_by_offsets(s, offs), note)
                else:
                    ok = self.pop_suffix(X, _order_by_offsets(s, offs)[::-1], note)
                if ok:
                    return True
                self.pop_all([X], note + ": fallback")
                return True
        return acted

    # quasi-blocks -----------------------------------------------------------------------------

    def quasi_blocks(self, S: int) -> bool:
        ctx = self.ctx
        changed = False
        for _ in range(4):
            ex = self.expansion()
            is_s = lambda p: s_letter(ctx, self.st, ex.E[p], S)
            runs = ex.chains(is_s, link=lambda p, q: ex.E[q] == bar_any(ctx, ex.E[p])
                             and ex.E[p] != ex.E[q])
            qb = [R for R in runs if len(R) >= 2]
            if not qb:
                return changed
            if self._uncross(ex, qb, "uncross quasi-blocks"):
                changed = True
                continue
            if self.attempt(lambda: self.contract(ex, qb, keyed=False), "quasi-block compression"):
                changed = True
                self.cleanup()
                continue
            return changed
        return changed

    # pairs ------------------------------------------------------------------------------------

    def pairs(self, S: int) -> bool:
        ctx = self.ctx
        ex = self.expansion()
        is_s = lambda p: s_letter(ctx, self.st, ex.E[p], S)
        runs = ex.chains(is_s)
        links = [(R[i], R[i + 1]) for R in runs for i in range(len(R) - 1)]
        links = [(p, q) for p, q in links if ex.E[q] != bar_any(ctx, ex.E[p])]
        if not links:
            return False
        letters = sorted({min(ex.E[p], bar_any(ctx, ex.E[p])) for R in runs for p in R})
        k = sum(len(R) for R in runs if len(R) >= 3 and all(ex.visible(p) for p in R))
        vis_links = [(p, q) for p, q in links if ex.visible(p) and ex.visible(q)]
        plus = self.choose_partition(letters, vis_links, links, ex)
        chosen = [(p, q) for p, q in links if ex.E[p] in plus and ex.E[q] not in plus]
        covered = sum(1 for p, q in chosen if ex.visible(p) and ex.visible(q))
        need = -(-k // 16)
        self.stats.partitions.append((S, k, covered, need))
        if not chosen:
            return False
        crossing = [[p, q] for p, q in chosen
                    if ex.visible(p) != ex.visible(q)
                    or (not ex.visible(p) and ex.slots[p][0] != ex.slots[q][0])]
        if crossing:
            for p, q in crossing:
                # pop the invisible end(s)
                for r in (p, q):
                    if not ex.visible(r):
                        if self._uncross(ex, [[r, -1]] if False else [[p, q]], "uncross pair"):
                            return True
                        i = ex.slots[r][0]
                        X = self.st.W[i] & ~1
                        self.pop_all([X], "uncross pair: fallback")
                        return True
        groups = [[p, q] for p, q in chosen]
        if self.attempt(lambda: self.contract(ex, groups), "pair compression"):
            self.cleanup()
            return True
        return False

    def choose_partition(self, letters: list[int], vis_links, links, ex: Expansion) -> set[int]:
        ctx = self.ctx
        m = len(letters)

        def score(plus):
            v = sum(1 for p, q in vis_links if ex.E[p] in plus and ex.E[q] not in plus)
            a = sum(1 for p, q in links if ex.E[p] in plus and ex.E[q] not in plus)
            return (v, a)

        def make(bits):
            plus = set()
            for i, a in enumerate(letters):
                plus.add(a if bits >> i & 1 else bar_any(ctx, a))
            return plus
        if m <= 12:
            best = max(range(1 << m), key=lambda b: (score(make(b)), -b))
            return make(best)
        best, bs = None, None
        for _ in range(64):
            b = self.rng.getrandbits(m)
            s = score(make(b))
            if bs is None or s > bs:
                best, bs = b, s
        return make(best)

    # FixedResources(S) ------------------------------------------------------------------------

    def visible_run_issues(self, S: int) -> list[str]:
        ctx = self.ctx
        ex = self.expansion()
        runs = ex.chains(lambda p: s_letter(ctx, self.st, ex.E[p], S))
        out = []
        for R in runs:
            vis = [ex.visible(p) for p in R]
            if any(vis) and not all(vis):
                out.append("crossing S-run")
            elif all(vis) and len(R) >= 3:
                out.append(f"visible S-run of length {len(R)}")
        return out

    def fixed_resources(self, S: int) -> None:
        for rnd in range(16):
            self.typed_blocks(S)
            self.drop_empty()
            progressed = self.blocks(S)
            progressed |= self.quasi_blocks(S)
            progressed |= self.pairs(S)
            self.drop_empty()
            issues = self.visible_run_issues(S)
            if not issues and not progressed:
                break
            if rnd >= 8 and issues:
                holders = [X for X in self.st.X
                           if any(s_letter(self.ctx, self.st, x, S) for x in self.sol.sigma[X])]
                self.pop_all(holders, "fixed resources: fallback")
        svars = self.s_variables(S)
        if svars:
            self.pop_all(svars, "eliminate S-variables")
            for _ in range(16):
                p = self.blocks(S) | self.quasi_blocks(S) | self.pairs(S)
                if not p:
                    break
        if not self.st.X and (self.st.theta or self.visible_run_issues(S)):
            self.attempt(lambda: collapse_transition(self.ctx, self.st, self.sol),
                         "collapse segments")
        issues = self.visible_run_issues(S) + \
            [f"S-variable {self.ctx.name(X)}" for X in self.s_variables(S)]
        self.stats.fixed_checks.append((S, not issues, issues))

    # Remove(S) -------------------------------------------------------------------------------

    def expose(self, S: int) -> None:
        """Split variables so that every S-letter becomes visible."""
        ctx = self.ctx
        for _ in range(64):
            holders = [X for X in sorted(self.st.X)
                       if any(s_letter(ctx, self.st, x, S) for x in self.sol.sigma[X])]
            if not holders:
                return
            X = holders[0]
            if not self.attempt(lambda: self._split_at_first(X, S), "expose S-letter"):
                self.pop_all([X], "expose: fallback")
        holders = [X for X in self.st.X
                   if any(s_letter(ctx, self.st, x, S) for x in self.sol.sigma[X])]
        self.pop_all(holders, "expose: budget fallback")

    def _split_at_first(self, X: int, S: int):
        ctx, st = self.ctx, self.st
        dep = self.dep
        mon = ctx.monoid
        s = self.sol.sigma[X]
        p = next(i for i, x in enumerate(s) if s_letter(ctx, st, x, S))
        below = order_relation(s, dep)
        down = [i for i in range(len(s)) if below[p] >> i & 1]
        rest = [i for i in range(len(s)) if i != p and i not in down]
        D = tuple(s[i] for i in down)
        Rw = tuple(s[i] for i in rest)
        tau_w = []
        new_vars = {}
        sigma2 = {Y: w for Y, w in self.sol.sigma.items() if Y != X}
        if D:
            Y = fresh_variables(st, 1)[0]
            tau_w.append(Y)
            new_vars[Y] = (dep.rho_word(D), mon.product(mu_of(ctx, st, x) for x in D), None)
            sigma2[Y] = D
        tau_w.append(s[p])
        upd = {}
        if Rw:
            tau_w.append(X)
            upd[X] = (st.rho[X], mon.product(mu_of(ctx, st, x) for x in Rw), None)
            sigma2[X] = Rw
        tau = {X: tuple(tau_w)}
        st2 = apply_substitution(ctx, st, tau, new_vars=new_vars, updates=upd)
        dep2 = dependence(ctx, st2)
        sigma2 = {Y: normal_form(w, dep2) for Y, w in sigma2.items()}
        return st2, Solution(sigma2, dict(self.sol.alpha)), Label.make(SUBSTITUTION, tau=tau)

    def remove_resource_set(self, S: int) -> None:
        ctx = self.ctx
        self.expose(S)
        self.drop_empty()
        for attempt in range(2):
            ex = self.expansion()
            pos = [p for p in range(ex.n) if s_letter(ctx, self.st, ex.E[p], S)]
            if not pos:
                break
            J = ex.J
            targets = {}
            for p in pos:
                T = S | ex.neighbours_rho(p) | ex.neighbours_rho(J[p])
                if T == S:
                    T = ctx.full
                targets[p] = T
            groups = [[p] for p in pos]
            tmap = {}
            for p in pos:
                tmap[(ex.E[p],)] = max(tmap.get((ex.E[p],), 0), targets[p])
            # one letter per J-class; resources are the union over the class
            ok = self.attempt(lambda: self.contract(
                ex, groups, keyed=False,
                rho_override=lambda w: _class_rho(w, tmap, ctx),
                linearise_symmetric=True), "lift S-letters")
            if ok:
                break
            if self.st.X:
                self.pop_all(None, "lift: fallback")
            else:
                raise SearchError("lifting failed on a variable-free state")
        self.cleanup()
        leftovers = [x for x in self.st.W if s_letter(ctx, self.st, x, S)]
        leftovers += [x for w in self.sol.sigma.values() for x in w if s_letter(ctx, self.st, x, S)]
        leftovers += [x for x in self.st.B if not is_a_letter(x) and s_letter(ctx, self.st, x, S)]
        self.stats.remove_checks.append((S, not leftovers,
                                         [ctx.name(x) for x in leftovers][:5]))


def _class_rho(w, tmap, ctx):
    r = tmap.get(tuple(w))
    if r is None:
        r = tmap.get(tuple(involute_state_word(ctx, w)), ctx.full)
    return r


def _orient(x: int, c: int, st: ExtendedEquation) -> int:
    if x == c:
        return 1
    if x == c ^ 1:
        return -1
    t = st.theta.get(x)
    if t == c:
        return 1
    if t == c ^ 1:
        return -1
    return 0


def _prefix_power(s: Sequence[int], a: int, dep: Dependence) -> int:
    n = 0
    rest = list(s)
    while rest:
        mins = [rest[i] for i in min_positions(rest, dep)]
        if a not in mins:
            break
        rest.remove(a)
        n += 1
    return n


def _suffix_power(s: Sequence[int], a: int, dep: Dependence) -> int:
    return _prefix_power(list(reversed(s)), a, dep)


def _order_by_offsets(s, offs):
    return [s[o] for o in sorted(offs)]


def _quotient_order(word: Sequence[int], dep: Dependence, node_of: list[int],
                    node_letter: list[int]) -> list[int]:
    n = len(word)
    nodes = sorted(set(node_of))
    preds = {u: set() for u in nodes}
    for j in range(n):
        for i in range(j):
            u, v = node_of[i], node_of[j]
            if u != v and not dep.independent(word[i], word[j]):
                preds[v].add(u)
    out = []
    remaining = set(nodes)
    while remaining:
        cands = [u for u in remaining if not (preds[u] & remaining)]
        if not cands:
            raise Unrealisable("contraction creates a cycle")
        u = min(cands)
        out.append(node_letter[u])
        remaining.discard(u)
    return out


def rename_solution(sol: Solution, ren: Mapping[int, int]) -> Solution:
    f = lambda x: ren.get(x, x)
    sigma = {f(X): tuple(f(x) for x in w) for X, w in sol.sigma.items()}
    alpha = {f(c): w for c, w in sol.alpha.items()}
    return Solution(sigma, alpha)


# -- the forward path ---------------------------------------------------------------------------

def forward_path(ctx: Context, st0: ExtendedEquation, sigma0: Mapping[int, tuple],
                 strict: bool = False) -> ForwardPath:
    """A verified path from the initial state to a final state guided by sigma0."""
    sol0 = Solution({X: tuple(w) for X, w in sigma0.items()}, {})
    g = Guide(ctx, st0, sol0, strict=strict)
    st1, sol1, lab = initial_transition(ctx, st0, sol0)
    if st1.W == st0.W and st1.X == st0.X:
        if st0.X:
            raise SearchError("initial transition is trivial")
    else:
        if not g.commit(st1, sol1, lab, "initial", initial=True):
            raise SearchError("initial transition rejected")
    for S in resource_order(ctx.n_resources):
        if not g.st.X and not g.st.theta:
            break
        if not g.s_letters_present(S) and not g.s_variables(S):
            continue
        g.fixed_resources(S)
        if not g.st.X and not g.st.theta:
            break
        if S != ctx.full:
            g.remove_resource_set(S)
    if g.st.X:
        g.pop_all(None, "final: pop remaining variables")
    st2, sol2, lab = final_transition(ctx, g.st, g.sol)
    if not g.commit(st2, sol2, lab, "final"):
        raise SearchError("final transition rejected")
    return ForwardPath(st0, sol0, g.steps, g.stats)
