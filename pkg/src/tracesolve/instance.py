"""Instance files (JSON, "tracesolve-instance/1") and their validation."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .equation_state import Budgets, Context, build_initial
from .finite_constraints import (
    ConstraintError, ConstraintMorphism, FiniteMonoid, adjoin_zero, trivial_monoid,
)
from .trace_core import (
    MARKER, VAR_BASE, Dependence, ResourceAlphabet, TraceError, is_variable,
)

SCHEMA = "tracesolve-instance/1"


class InstanceError(ValueError):
    def __init__(self, msg: str, where: str = ""):
        super().__init__(f"{where}: {msg}" if where else msg)
        self.where = where


@dataclass
class Instance:
    """An equation lhs = rhs with constraints, over monoid or group semantics."""

    alphabet: ResourceAlphabet
    monoid: FiniteMonoid
    const_mu: dict[int, int]             # base constants and # -> element
    variables: list[int]                 # even ids, in output order
    var_names: dict[int, str]            # both parities
    var_rho: dict[int, int]
    var_mu: dict[int, int | None]        # None: unconstrained
    lhs: tuple
    rhs: tuple
    mode: str = "monoid"
    name: str = ""
    source: Any = None
    mu_filter: Any = None                # optional (X, element) -> bool
    user_zero: int | None = None         # the file's own zero: absorbing, but not the marker's

    @property
    def k(self) -> int:
        return len(self.variables)

    def name_of(self, x: int) -> str:
        if x in self.var_names:
            return self.var_names[x]
        return self.alphabet.name(x)

    def show(self, word: Iterable[int]) -> str:
        return " ".join(self.name_of(x) for x in word) or "1"

    def constants(self) -> list[int]:
        return self.alphabet.constants()

    @cached_property
    def dep(self) -> Dependence:
        """Resource dependence on base constants (shared, so its pair cache stays warm)."""
        return self.alphabet.dependence()

    def mu_assignments(self) -> list[dict[int, int]]:
        """Every admissible choice of mu on the variables (nonzero elements)."""
        mon = self.monoid
        choices = []
        for X in self.variables:
            m = self.var_mu.get(X)
            if m is None:
                choices.append([e for e in range(mon.size) if self.mu_allowed(X, e)])
            else:
                choices.append([m])
        return [dict(zip(self.variables, combo)) for combo in itertools.product(*choices)]

    def mu_allowed(self, X: int, e: int) -> bool:
        m = self.var_mu.get(X)
        if self.monoid.is_zero(e) or e == self.user_zero or (m is not None and e != m):
            return False
        return self.mu_filter is None or self.mu_filter(X, e)

    def init_length(self) -> int:
        """|W_init| = 2(2k+1) + 2|lhs| + 2|rhs| + 3."""
        return 2 * (2 * self.k + 1) + 2 * (len(self.lhs) + len(self.rhs)) + 3

    def init_var_occurrences(self) -> int:
        n = sum(1 for x in self.lhs + self.rhs if is_variable(x))
        return 2 * (self.k + n)

    def context(self, var_mu: Mapping[int, int] | None = None, factor: int = 64) -> Context:
        var_mu = dict(var_mu or {X: self.monoid.unit for X in self.variables})
        budgets = Budgets(factor=factor).scaled(self.init_length(), self.init_var_occurrences())
        return Context(self.alphabet, self.monoid, dict(self.const_mu), list(self.variables),
                       dict(self.var_names), dict(self.var_rho), var_mu, budgets)

    def initial_state(self, ctx: Context):
        return build_initial(ctx, self.lhs, self.rhs)


def _tokens(w: Any, where: str) -> list[str]:
    if w is None:
        return []
    if isinstance(w, str):
        return w.split()
    if isinstance(w, list) and all(isinstance(t, str) for t in w):
        return list(w)
    raise InstanceError("a word must be a string or a list of names", where)


def load_instance(path: str | Path) -> Instance:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise InstanceError(f"invalid JSON ({e.msg}) at line {e.lineno}", str(p)) from None
    except OSError as e:
        raise InstanceError(str(e), str(p)) from None
    inst = parse_instance(data, where=str(p))
    inst.name = inst.name or p.stem
    return inst


def parse_instance(data: Mapping, where: str = "<instance>") -> Instance:
    if not isinstance(data, Mapping):
        raise InstanceError("top level must be an object", where)
    schema = data.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise InstanceError(f"unknown schema {schema!r}", where)
    mode = data.get("mode", "monoid")
    if mode not in ("monoid", "group"):
        raise InstanceError(f"mode must be 'monoid' or 'group', got {mode!r}", where)
    resources = data.get("resources")
    if not isinstance(resources, list) or not resources:
        raise InstanceError("resources must be a nonempty list of names", where + ".resources")
    try:
        alpha = ResourceAlphabet([str(r) for r in resources])
    except TraceError as e:
        raise InstanceError(str(e), where + ".resources") from None
    ridx = {r: i for i, r in enumerate(alpha.resources)}

    def rset(v, w):
        if not isinstance(v, list):
            raise InstanceError("rho must be a list of resource names", w)
        m = 0
        for r in v:
            if r not in ridx:
                raise InstanceError(f"unknown resource {r!r}", w)
            m |= 1 << ridx[r]
        return m

    names: dict[str, int] = {"#": MARKER}
    for i, c in enumerate(data.get("constants", [])):
        w = f"{where}.constants[{i}]"
        name = c.get("name")
        bar = c.get("bar", name)
        if not name or not isinstance(name, str):
            raise InstanceError("constant without a name", w)
        for nm in {name, bar}:
            if nm in names:
                raise InstanceError(f"duplicate letter name {nm!r}", w)
        r = rset(c.get("rho", []), w + ".rho")
        if r == 0:
            raise InstanceError(
                f"constant {name!r} has an empty resource set; empty-resource letters are "
                "not supported", w + ".rho")
        try:
            a, b = alpha.add_pair(name, bar, r)
        except TraceError as e:
            raise InstanceError(str(e), w) from None
        names[name], names[bar] = a, b

    var_names, var_rho, var_mu_raw = {}, {}, {}
    variables = []
    vnames: dict[str, int] = {}
    for i, v in enumerate(data.get("variables", [])):
        w = f"{where}.variables[{i}]"
        name = v.get("name")
        if not name or not isinstance(name, str):
            raise InstanceError("variable without a name", w)
        bar = v.get("bar", name + "~")
        X = VAR_BASE + 2 * i
        for nm in (name, bar):
            if nm in names or nm in vnames:
                raise InstanceError(f"duplicate name {nm!r}", w)
        if name == bar:
            raise InstanceError("a variable cannot be self-involuting", w)
        vnames[name], vnames[bar] = X, X + 1
        var_names[X], var_names[X + 1] = name, bar
        variables.append(X)
        var_rho[X] = rset(v["rho"], w + ".rho") if "rho" in v else alpha.full
        if var_rho[X] == 0:
            raise InstanceError("a variable needs a nonempty resource set", w)
        var_mu_raw[X] = v.get("mu")

    order = data.get("distinguished")
    if order is not None:
        if sorted(order) != sorted(var_names[X] for X in variables):
            raise InstanceError("distinguished must list every variable once",
                                where + ".distinguished")
        variables = [vnames[nm] for nm in order]

    # constraint monoid
    mdata = data.get("monoid")
    const_mu: dict[int, int] = {}
    user_zero = None
    if mdata is None:
        mon = trivial_monoid()
        elem = {"1": 0, "0": 1}
        images = {}
    else:
        w = where + ".monoid"
        elements = [str(e) for e in mdata.get("elements", [])]
        if not elements:
            raise InstanceError("monoid needs elements", w)
        elem = {e: i for i, e in enumerate(elements)}

        def el(e, ww):
            if str(e) not in elem:
                raise InstanceError(f"unknown element {e!r}", ww)
            return elem[str(e)]
        try:
            mult = np.array([[el(e, w + ".mult") for e in row] for row in mdata["mult"]])
            inv = np.array([el(e, w + ".inv") for e in mdata["inv"]])
            unit = el(mdata["unit"], w + ".unit")
        except KeyError as e:
            raise InstanceError(f"monoid lacks {e.args[0]!r}", w) from None
        user_zero = el(mdata["zero"], w + ".zero") if mdata.get("zero") is not None else None
        mon = FiniteMonoid(mult, inv, unit, user_zero, elements)
        try:
            mon.validate()
        except ConstraintError as e:
            raise InstanceError(str(e), w) from None
        # the marker gets a zero of its own, so factors may evaluate to the file's zero
        mon = adjoin_zero(FiniteMonoid(mult, inv, unit, None, elements))
        images = {k: el(v, w + f".images.{k}") for k, v in mdata.get("images", {}).items()}
    for nm in images:
        if nm not in names and nm not in vnames:
            raise InstanceError(f"image for unknown letter {nm!r}", where + ".monoid.images")
    for nm, a in names.items():
        if a == MARKER:
            continue
        if nm in images:
            const_mu[a] = images[nm]
    for a in alpha.constants():
        b = alpha.bar(a)
        if a not in const_mu and b in const_mu:
            const_mu[a] = int(mon.inv[const_mu[b]])
        const_mu.setdefault(a, mon.unit)
    const_mu[MARKER] = mon.zero
    var_mu: dict[int, int | None] = {}
    for X in variables:
        m = var_mu_raw[X]
        nm, nb = var_names[X], var_names[X + 1]
        if m is None and nm in images:
            m = images[nm]
        elif m is None and nb in images:
            m = int(mon.inv[images[nb]])
        elif m is not None:
            m = elem.get(str(m))
            if m is None:
                raise InstanceError(f"unknown element for variable {nm!r}", where + ".variables")
        if m is not None and (mon.is_zero(m) or m == user_zero):
            raise InstanceError(f"variable {nm!r} is constrained to zero", where + ".variables")
        var_mu[X] = m
    morph = ConstraintMorphism(mon, {a: const_mu[a] for a in alpha.constants()})
    try:
        morph.check_involution(alpha.bar)
        morph.check_well_defined(alpha.constants(), alpha.dependence())
    except ConstraintError as e:
        raise InstanceError(str(e), where + ".monoid.images") from None
    for a in alpha.constants():
        if mon.is_zero(const_mu[a]) or const_mu[a] == user_zero:
            raise InstanceError(f"constant {alpha.name(a)!r} maps to zero", where + ".monoid")

    eq = data.get("equation", {})

    def word(key):
        out = []
        for t in _tokens(eq.get(key), f"{where}.equation.{key}"):
            if t in vnames:
                out.append(vnames[t])
            elif t in names and t != "#":
                out.append(names[t])
            else:
                raise InstanceError(f"unknown letter {t!r}", f"{where}.equation.{key}")
        return tuple(out)
    lhs, rhs = word("lhs"), word("rhs")
    return Instance(alpha, mon, const_mu, variables, var_names, var_rho, var_mu, lhs, rhs,
                    mode, data.get("name", ""), data, None, user_zero)


def instance_to_json(inst: Instance) -> dict:
    """Inverse of parse_instance (for instances built in code)."""
    alpha = inst.alphabet
    consts = []
    for a in alpha.constants():
        b = alpha.bar(a)
        if b < a:
            continue
        consts.append({"name": alpha.name(a), "bar": alpha.name(b),
                       "rho": [r for i, r in enumerate(alpha.resources) if alpha.rho(a) >> i & 1]})
    mon = inst.monoid
    # the last element is the adjoined marker zero; it is implicit in the file
    n = mon.size - 1
    keys = [str(k) for k in mon.keys[:n]]
    if len(set(keys)) != len(keys):
        keys = [f"e{i}" for i in range(n)]
    out = {
        "schema": SCHEMA,
        "name": inst.name,
        "mode": inst.mode,
        "resources": list(alpha.resources),
        "constants": consts,
        "variables": [],
        "monoid": {
            "elements": keys,
            "unit": keys[mon.unit],
            "zero": keys[inst.user_zero] if inst.user_zero is not None else None,
            "mult": [[keys[int(e)] for e in row[:n]] for row in mon.mult[:n]],
            "inv": [keys[int(e)] for e in mon.inv[:n]],
            "images": {alpha.name(a): keys[inst.const_mu[a]] for a in alpha.constants()},
        },
        "equation": {"lhs": [inst.name_of(x) for x in inst.lhs],
                     "rhs": [inst.name_of(x) for x in inst.rhs]},
    }
    for X in sorted(inst.variables):
        v = {"name": inst.var_names[X], "bar": inst.var_names[X + 1],
             "rho": [r for i, r in enumerate(alpha.resources) if inst.var_rho[X] >> i & 1]}
        if inst.var_mu.get(X) is not None:
            v["mu"] = keys[inst.var_mu[X]]
        out["variables"].append(v)
    out["distinguished"] = [inst.var_names[X] for X in inst.variables]
    return out
