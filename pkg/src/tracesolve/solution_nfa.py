"""The NFA of extended equations whose accepting paths spell out solutions.

Two ways to build one:

* `build_certified`: every brute-force solution up to a length bound is
  walked to a final state by the recompression search; the paths are merged
  on canonical states.  This is the default.
* `build_exhaustive`: breadth-first expansion with a small move vocabulary
  (pops, removals, pair compressions) and no solution in hand.  Only for
  toy instances; it misses solutions the vocabulary cannot reach.

A label carries an endomorphism; composing them along an accepting path and
reading off the distinguished letters yields a solution tuple.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .equation_state import (
    Context, ExtendedEquation, StateError, canonical_state, check_solution, is_final,
    make_state, mu_of, rho_of, state_from_json, state_key, state_to_json, weight,
)
from .group_reduction import Reduction, reduce_instance
from .instance import Instance, instance_to_json, parse_instance
from .oracle import enumerate_bruteforce
from .recompression_search import ForwardPath, SearchError, forward_path
from .trace_core import MARKER, is_a_letter, is_variable, normal_form
from .transition_engine import (
    COMPRESSION, FINAL, SUBSTITUTION, Label, TransitionError, apply_substitution,
    apply_to_distinguished, compression_state, final_transition, pullback, validate_final,
    validate_label,
)

log = logging.getLogger(__name__)

SCHEMA = "tracesolve-nfa/1"


@dataclass
class Edge:
    src: int
    label: Label
    dst: int


@dataclass
class EndoNFA:
    reduction: Reduction
    ctx: Context
    states: list[ExtendedEquation] = field(default_factory=list)
    index: dict = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)
    edge_set: set = field(default_factory=set)
    initials: set[int] = field(default_factory=set)
    finals: set[int] = field(default_factory=set)
    records: dict[int, list] = field(default_factory=lambda: defaultdict(list))
    visits: dict[int, int] = field(default_factory=dict)
    paths: list[list[int]] = field(default_factory=list)     # edge ids of recorded paths
    path_stats: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    bound: int | None = None
    mode: str = "certified"
    stopped_early: bool = False

    @property
    def instance(self) -> Instance:
        return self.reduction.original

    # construction ------------------------------------------------------------------------

    def add_state(self, st: ExtendedEquation) -> int:
        key = state_key(st)
        i = self.index.get(key)
        if i is None:
            i = len(self.states)
            self.states.append(st)
            self.index[key] = i
        return i

    def add_edge(self, src: int, label: Label, dst: int) -> int:
        key = (src, label, dst)
        if key in self.edge_set:
            return next(i for i, e in enumerate(self.edges)
                        if e.src == src and e.dst == dst and e.label == label)
        self.edge_set.add(key)
        self.edges.append(Edge(src, label, dst))
        return len(self.edges) - 1

    def add_path(self, path: ForwardPath) -> list[int]:
        s = self.add_state(path.initial)
        self.initials.add(s)
        ids = [s]
        eids = []
        self.records[s].append(dict(path.initial_solution.sigma))
        for step in path.steps:
            t = self.add_state(step.dst)
            eids.append(self.add_edge(s, step.label, t))
            self.records[t].append(dict(step.solution.sigma))
            ids.append(t)
            s = t
        self.finals.add(s)
        for i in set(ids):
            self.visits[i] = max(self.visits.get(i, 0), ids.count(i))
        self.paths.append(eids)
        self.path_stats.append(path.stats)
        return eids

    # structure ---------------------------------------------------------------------------

    def successors(self) -> dict[int, list[int]]:
        out = defaultdict(list)
        for i, e in enumerate(self.edges):
            out[e.src].append(i)
        return out

    def useful_states(self) -> set[int]:
        fwd = self._closure(self.initials, lambda e: (e.src, e.dst))
        bwd = self._closure(self.finals, lambda e: (e.dst, e.src))
        return fwd & bwd

    def _closure(self, start, orient) -> set[int]:
        adj = defaultdict(list)
        for e in self.edges:
            a, b = orient(e)
            adj[a].append(b)
        seen = set(start)
        todo = list(start)
        while todo:
            x = todo.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return seen

    def trim(self) -> "EndoNFA":
        """Drop states that are not on an accepting path (ids are kept)."""
        keep = self.useful_states()
        edges = [e for e in self.edges if e.src in keep and e.dst in keep]
        remap = {}
        new_edges = []
        for i, e in enumerate(self.edges):
            if e.src in keep and e.dst in keep:
                remap[i] = len(new_edges)
                new_edges.append(e)
        self.edges = edges
        self.edge_set = {(e.src, e.label, e.dst) for e in edges}
        self.paths = [[remap[i] for i in p] for p in self.paths if all(i in remap for i in p)]
        self.initials &= keep
        self.finals &= keep
        return self

    def is_satisfiable(self) -> bool:
        return bool(self.useful_states() & self.initials)

    def find_cycle(self) -> list[int] | None:
        """A cycle through useful states as a list of edge ids, or None."""
        keep = self.useful_states()
        adj = defaultdict(list)
        for i, e in enumerate(self.edges):
            if e.src in keep and e.dst in keep:
                adj[e.src].append(i)
        color = {}
        for root in sorted(keep):
            if root in color:
                continue
            stack = [(root, iter(adj[root]))]
            color[root] = 1
            via = {}
            while stack:
                v, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    color[v] = 2
                    stack.pop()
                    continue
                w = self.edges[nxt].dst
                if color.get(w) == 1:
                    cyc = [nxt]
                    x = v
                    while x != w:
                        eid = via[x]
                        cyc.append(eid)
                        x = self.edges[eid].src
                    return list(reversed(cyc))
                if w not in color:
                    color[w] = 1
                    via[w] = nxt
                    stack.append((w, iter(adj[w])))
        return None

    def has_infinitely_many(self) -> bool:
        return self.find_cycle() is not None

    # solutions ---------------------------------------------------------------------------

    def path_tuple(self, eids: list[int]) -> tuple | None:
        labels = [self.edges[i].label for i in eids]
        vals = apply_to_distinguished(self.ctx, labels)
        return self.reduction.project(vals)

    def accepting_paths(self, max_paths: int = 500, max_len: int | None = None,
                        extra_loops: int = 0) -> Iterator[list[int]]:
        """Recorded paths first, then a depth-first walk with a visit cap per state.

        A state may be entered as often as some recorded path entered it (at
        least twice), plus `extra_loops`.
        """
        seen = set()
        n = 0
        for p in self.paths:
            if n >= max_paths:
                return
            key = tuple(p)
            if key in seen:
                continue
            seen.add(key)
            n += 1
            yield list(p)
        longest = max((len(p) for p in self.paths), default=0)
        limit = max_len if max_len is not None else 2 * longest + 4
        succ = self.successors()
        useful = self.useful_states()
        for s0 in sorted(self.initials & useful):
            path: list[int] = []
            count = defaultdict(int)
            count[s0] = 1

            def dfs(s):
                nonlocal n
                if n >= max_paths:
                    return
                if s in self.finals:
                    key = tuple(path)
                    if key not in seen:
                        seen.add(key)
                        n += 1
                        yield list(path)
                if len(path) >= limit:
                    return
                for eid in succ.get(s, ()):
                    t = self.edges[eid].dst
                    if t not in useful:
                        continue
                    cap = max(2, self.visits.get(t, 1)) + extra_loops
                    if count[t] >= cap:
                        continue
                    count[t] += 1
                    path.append(eid)
                    yield from dfs(t)
                    path.pop()
                    count[t] -= 1
                    if n >= max_paths:
                        return
            yield from dfs(s0)

    def solutions(self, bound: int | None = None, max_paths: int = 500,
                  max_len: int | None = None, extra_loops: int = 0) -> set[tuple]:
        out = set()
        for p in self.accepting_paths(max_paths, max_len, extra_loops):
            t = self.path_tuple(p)
            if t is None:
                continue
            if bound is not None and any(len(w) > bound for w in t):
                continue
            out.add(t)
        return out

    # checks ------------------------------------------------------------------------------

    def check_edges(self) -> list[str]:
        """Every edge is a valid transition and pulls recorded solutions back."""
        problems = []
        for i, e in enumerate(self.edges):
            src, dst = self.states[e.src], self.states[e.dst]
            iss = validate_label(self.ctx, src, dst, e.label, initial=e.src in self.initials)
            if iss:
                problems.append(f"edge {i}: {'; '.join(iss)}")
                continue
            for sigma2 in self.records.get(e.dst, [])[:8]:
                back = pullback(self.ctx, src, e.label, sigma2)
                iss = check_solution(self.ctx, src, back)
                if iss:
                    problems.append(f"edge {i}: pullback fails: {'; '.join(iss)}")
                    break
        return problems

    def replay(self, max_paths: int = 500) -> list[str]:
        """Composed tuples along accepting paths must solve the instance."""
        from .oracle import check_tuple
        problems = []
        for p in self.accepting_paths(max_paths):
            t = self.path_tuple(p)
            if t is None:
                continue
            iss = check_tuple(self.instance, t)
            if iss:
                problems.append(f"path {p}: {'; '.join(iss)}")
        return problems

    # export ------------------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "mode": self.mode,
            "bound": self.bound,
            "instance": instance_to_json(self.instance),
            "states": [dict(state_to_json(st), id=i) for i, st in enumerate(self.states)],
            "edges": [{"src": e.src, "dst": e.dst, "label": e.label.to_json()}
                      for e in self.edges],
            "initial": sorted(self.initials),
            "final": sorted(self.finals),
            "visits": {str(k): v for k, v in sorted(self.visits.items())},
            "paths": self.paths,
        }

    @staticmethod
    def from_json(d: dict) -> "EndoNFA":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unknown NFA schema {d.get('schema')!r}")
        inst = parse_instance(d["instance"])
        red = reduce_instance(inst)
        nfa = EndoNFA(red, red.target.context(), bound=d.get("bound"), mode=d.get("mode", ""))
        for s in d["states"]:
            nfa.add_state(state_from_json(s))
        for e in d["edges"]:
            nfa.add_edge(e["src"], Label.from_json(e["label"]), e["dst"])
        nfa.initials = set(d["initial"])
        nfa.finals = set(d["final"])
        nfa.visits = {int(k): v for k, v in d.get("visits", {}).items()}
        nfa.paths = [list(p) for p in d.get("paths", [])]
        return nfa

    def same_as(self, other: "EndoNFA") -> bool:
        return (self.states == other.states and self.initials == other.initials
                and self.finals == other.finals
                and [(e.src, e.label, e.dst) for e in self.edges]
                == [(e.src, e.label, e.dst) for e in other.edges])

    def to_dot(self) -> str:
        ctx = self.ctx
        lines = ["digraph nfa {", "  rankdir=LR;", '  node [shape=box, fontsize=9];']
        for i, st in enumerate(self.states):
            shape = "doublecircle" if i in self.finals else "box"
            text = ctx.show(st.W).replace('"', "'")
            if len(text) > 60:
                text = text[:57] + "..."
            lines.append(f'  s{i} [shape={shape}, label="{i}: {text}"];')
            if i in self.initials:
                lines.append(f"  init{i} [shape=point]; init{i} -> s{i};")
        for e in self.edges:
            parts = [f"{ctx.name(x)}->{ctx.show(w)}" for x, w in e.label.tau]
            parts += [f"{ctx.name(x)}->{ctx.show(w)}" for x, w in e.label.endo]
            text = (e.label.kind[0] + ": " + ", ".join(parts)).replace('"', "'")
            if len(text) > 50:
                text = text[:47] + "..."
            lines.append(f'  s{e.src} -> s{e.dst} [label="{text}", fontsize=8];')
        lines.append("}")
        return "\n".join(lines)

    def summary(self) -> dict:
        useful = self.useful_states()
        return {"states": len(self.states), "edges": len(self.edges),
                "initial": len(self.initials), "final": len(self.finals),
                "useful": len(useful), "paths": len(self.paths)}


# -- building -------------------------------------------------------------------------------

def mu_of_values(inst: Instance, sigma: dict) -> dict:
    mon = inst.monoid
    return {X: mon.product(inst.const_mu[x] for x in sigma[X]) for X in inst.variables}


def certified_path(red: Reduction, values, factor: int = 64) -> tuple[Context, ForwardPath]:
    t = red.target
    sigma = red.lift(values)
    ctx = t.context(mu_of_values(t, sigma), factor=factor)
    st0 = t.initial_state(ctx)
    return ctx, forward_path(ctx, st0, sigma)


def _certify_worker(args):
    doc, values, factor = args
    red = reduce_instance(parse_instance(doc))
    try:
        return values, certified_path(red, values, factor)[1], None
    except (SearchError, TransitionError, StateError) as e:
        return values, None, str(e)


def build_certified(inst: Instance, bound: int, factor: int = 64,
                    solutions: Iterable[tuple] | None = None, jobs: int = 1,
                    stop_on_cycle: bool = False) -> EndoNFA:
    """Merge one verified forward path per brute-force solution.

    Solutions go in by total length.  With `stop_on_cycle` the construction
    ends as soon as the automaton has a cycle (enough for an infinity verdict).
    """
    red = reduce_instance(inst)
    sols = enumerate_bruteforce(inst, bound) if solutions is None else solutions
    sols = sorted(sols, key=lambda t: (sum(map(len, t)), t))
    nfa = EndoNFA(red, red.target.context(factor=factor), bound=bound, mode="certified")
    chunk = max(1, 4 * jobs) if stop_on_cycle else max(1, len(sols))
    pool = None
    if jobs > 1 and len(sols) > 1:
        from concurrent.futures import ProcessPoolExecutor
        doc = instance_to_json(inst)
        pool = ProcessPoolExecutor(jobs)
    try:
        for lo in range(0, len(sols), chunk):
            part = sols[lo:lo + chunk]
            if pool is not None:
                results = list(pool.map(_certify_worker, [(doc, v, factor) for v in part]))
            else:
                results = []
                for vals in part:
                    try:
                        results.append((vals, certified_path(red, vals, factor)[1], None))
                    except (SearchError, TransitionError, StateError) as e:
                        results.append((vals, None, str(e)))
            # merging in solution order keeps state ids deterministic
            for vals, path, err in results:
                if path is None:
                    nfa.failures.append((vals, err))
                    log.warning("no path for %s: %s", vals, err)
                    continue
                nfa.add_path(path)
            if stop_on_cycle and nfa.find_cycle() is not None:
                nfa.stopped_early = lo + chunk < len(sols)
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return nfa


# -- exhaustive construction (toy sizes) -----------------------------------------------------

def _moves(ctx: Context, st: ExtendedEquation, initial: bool) -> Iterator[tuple]:
    """Candidate (label, raw target) pairs from a fixed vocabulary."""
    consts = sorted({x for x in st.W if not is_variable(x) and x != MARKER})
    mon = ctx.monoid
    dep_rho = lambda x: rho_of(ctx, st, x)
    if not st.X:
        try:
            st2, _, lab = final_transition(ctx, st, _empty_solution())
        except (TransitionError, StateError):
            return
        if not validate_final(ctx, st, st2, lab):
            yield lab, st2
        return
    for X in sorted(st.X):
        rX, mX = rho_of(ctx, st, X), mu_of(ctx, st, X)
        if mX == mon.unit:
            yield Label.make(SUBSTITUTION, tau={X: ()}), None
        for a in consts:
            ra, ma = dep_rho(a), mu_of(ctx, st, a)
            if ra & ~rX:
                continue
            if ma == mX and (ra == rX or initial):
                yield Label.make(SUBSTITUTION, tau={X: (a,)}), None
            for m in range(mon.size):
                if mon.is_zero(m):
                    continue
                if mon.mul(ma, m) == mX:
                    yield Label.make(SUBSTITUTION, tau={X: (a, X)}), (X, rX, m)
                if mon.mul(m, ma) == mX:
                    yield Label.make(SUBSTITUTION, tau={X: (X, a)}), (X, rX, m)
    # pair compressions ab -> c on adjacent constants
    W = st.W
    pairs = set()
    for i in range(len(W) - 1):
        a, b = W[i], W[i + 1]
        if a == MARKER or b == MARKER or is_variable(a) or is_variable(b) or a == b:
            continue
        pairs.add((a, b))
    for a, b in sorted(pairs):
        yield Label.make(COMPRESSION, endo={0: (a, b)}), None


def _empty_solution():
    from .equation_state import Solution
    return Solution({}, {})


def _apply_move(ctx: Context, st: ExtendedEquation, lab: Label, extra, initial: bool):
    from .transition_engine import fresh_constants, full_endo, validate_compression, \
        validate_substitution
    from .equation_state import bar_any
    if lab.kind == FINAL:
        return extra, lab
    if lab.kind == SUBSTITUTION:
        upd = {}
        if extra is not None:
            X, r, m = extra
            upd = {X: (r, m, None)}
        try:
            st2 = apply_substitution(ctx, st, lab.tau_map, updates=upd)
        except (TransitionError, StateError):
            return None
        if validate_substitution(ctx, st, st2, lab.tau_map, initial=initial):
            return None
        return st2, lab
    (_, (a, b)), = lab.endo
    c = fresh_constants(st, 1)[0]
    cb = c ^ 1
    endo = {c: (a, b), cb: (bar_any(ctx, b), bar_any(ctx, a))}
    if (a, b) == (bar_any(ctx, b), bar_any(ctx, a)):
        return None
    W = list(st.W)
    W2, i = [], 0
    while i < len(W):
        if i + 1 < len(W) and (W[i], W[i + 1]) == (a, b):
            W2.append(c)
            i += 2
        elif i + 1 < len(W) and (W[i], W[i + 1]) == endo[cb]:
            W2.append(cb)
            i += 2
        else:
            W2.append(W[i])
            i += 1
    try:
        st2 = compression_state(ctx, st, W2, {c: (a, b)}, None, set())
    except (TransitionError, StateError, TypeError):
        return None
    lab2 = Label.make(COMPRESSION, endo={c: (a, b)})
    if validate_compression(ctx, st, st2, lab2.endo_map):
        return None
    return st2, lab2


def build_exhaustive(inst: Instance, max_states: int = 2000, max_len: int | None = None,
                     factor: int = 64) -> EndoNFA:
    """Breadth-first expansion from every admissible initial state."""
    red = reduce_instance(inst)
    t = red.target
    nfa = EndoNFA(red, t.context(factor=factor), mode="exhaustive")
    limit = max_len or 2 * t.init_length()
    queue = deque()
    for mu in t.mu_assignments():
        ctx = t.context(mu, factor=factor)
        try:
            st0 = t.initial_state(ctx)
        except StateError:
            continue
        i = nfa.add_state(st0)
        nfa.initials.add(i)
        queue.append(i)
    ctx = nfa.ctx
    done = set()
    while queue and len(nfa.states) < max_states:
        i = queue.popleft()
        if i in done:
            continue
        done.add(i)
        st = nfa.states[i]
        if is_final(ctx, st):
            nfa.finals.add(i)
            continue
        initial = i in nfa.initials
        for lab, extra in _moves(ctx, st, initial):
            res = _apply_move(ctx, st, lab, extra, initial)
            if res is None:
                continue
            st2, lab2 = res
            if len(st2.W) > limit:
                continue
            if lab2.kind == FINAL:
                j = nfa.add_state(st2)
                nfa.finals.add(j)
                nfa.add_edge(i, lab2, j)
                continue
            canon, ren = canonical_state(ctx, st2)
            j = nfa.add_state(canon)
            nfa.add_edge(i, lab2.with_renaming(ren), j)
            if j not in done:
                queue.append(j)
    return nfa


def save_nfa(nfa: EndoNFA, path) -> None:
    with open(path, "w") as fh:
        json.dump(nfa.to_json(), fh)


def load_nfa(path) -> EndoNFA:
    with open(path) as fh:
        return EndoNFA.from_json(json.load(fh))
