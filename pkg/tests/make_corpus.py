"""Regenerate tests/data/corpus/*.json (hand-written plus seeded random instances).

    python3 tests/make_corpus.py

The random part uses a fixed seed and keeps an instance only after the
oracle has classified it, so the files are reproducible.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
OUT = HERE / "data" / "corpus"
SEED = 20260

AB = [{"name": "a", "bar": "A", "rho": ["r1"]}, {"name": "b", "bar": "B", "rho": ["r2"]}]
A_ONLY = [{"name": "a", "bar": "A", "rho": ["r1"]}]
SHARED = [{"name": "a", "bar": "A", "rho": ["r1"]}, {"name": "b", "bar": "B", "rho": ["r1"]}]


def inst(name, lhs, rhs, constants=AB, variables=({"name": "X"},), resources=("r1", "r2"),
         mode="monoid", monoid=None, **extra):
    d = {"schema": "tracesolve-instance/1", "name": name, "mode": mode,
         "resources": list(resources), "constants": list(constants),
         "variables": [dict(v) for v in variables], "equation": {"lhs": lhs, "rhs": rhs}}
    if monoid:
        d["monoid"] = monoid
    d.update(extra)
    return d


Z2 = {"elements": ["e", "o", "0"], "unit": "e", "zero": "0",
      "mult": [["e", "o", "0"], ["o", "e", "0"], ["0", "0", "0"]],
      "inv": ["e", "o", "0"], "images": {"a": "o", "A": "o"}}

# {1, x, 0} with x x = 0: at most one occurrence of a or A
AT_MOST_ONE = {"elements": ["1", "x", "0"], "unit": "1", "zero": "0",
               "mult": [["1", "x", "0"], ["x", "0", "0"], ["0", "0", "0"]],
               "inv": ["1", "x", "0"], "images": {"a": "x", "A": "x"}}

HAND = [
    # the four toys
    inst("toy1", "X", "a", variables=[{"name": "X", "rho": ["r1"]}]),
    inst("toy2", "X a", "a X", constants=A_ONLY, resources=["r1"],
         variables=[{"name": "X", "rho": ["r1"]}]),
    inst("toy3", "X Y", "Y X", constants=A_ONLY, resources=["r1"],
         variables=[{"name": "X"}, {"name": "Y"}]),
    inst("toy4", "X a", "a X", constants=A_ONLY, resources=["r1"], monoid=Z2,
         variables=[{"name": "X", "mu": "o"}]),
    # finiteness, known by hand
    inst("fin_const", "X", "a b"),
    inst("fin_commute_inf", "X a", "a X"),
    inst("fin_unsat_noconst", "a b", "b a", constants=SHARED, variables=[]),
    inst("fin_split", "X Y", "a b", constants=SHARED, resources=["r1"],
         variables=[{"name": "X"}, {"name": "Y"}]),
    inst("fin_unsat_counts", "X b", "a X", constants=SHARED, resources=["r1"]),
    inst("fin_self_cancel", "X X~", "", ),
    inst("fin_two_var_inf", "X Y", "Y X", constants=SHARED, resources=["r1"],
         variables=[{"name": "X"}, {"name": "Y"}]),
    inst("fin_partial_inf", "X a b", "a b X"),
    inst("fin_constrained", "X a", "a X", constants=A_ONLY, resources=["r1"],
         monoid=AT_MOST_ONE),
    inst("fin_square", "X X", "a a b b"),
    # more monoid instances
    inst("commute_indep", "X a", "b X"),
    inst("conj_pair", "X a Y", "Y a X", constants=SHARED, resources=["r1"],
         variables=[{"name": "X"}, {"name": "Y"}]),
    inst("palindrome_self", "X", "X~",
         constants=[{"name": "s", "rho": ["r1"]}, {"name": "b", "bar": "B", "rho": ["r2"]}]),
    inst("self_inv_commute", "X s", "s X",
         constants=[{"name": "s", "rho": ["r1"]}, {"name": "b", "bar": "B", "rho": ["r2"]}]),
    # right-angled Artin groups
    inst("raag_commute", "X a", "a X", mode="group"),
    inst("raag_free_const", "X", "a B", constants=SHARED, resources=["r1"], mode="group"),
    inst("raag_square", "X X", "a a", constants=SHARED, resources=["r1"], mode="group"),
    inst("raag_conj", "X a X~", "a", mode="group"),
    inst("raag_free_commute", "X a", "a X", constants=SHARED, resources=["r1"], mode="group"),
]


def random_instances(n_sat=5, n_unsat=5, seed=SEED):
    sys.path.insert(0, str(HERE.parent / "src"))
    from tracesolve.instance import parse_instance
    from tracesolve.oracle import enumerate_bruteforce

    rng = np.random.default_rng(seed)
    sat, unsat = [], []
    tries = 0
    while (len(sat) < n_sat or len(unsat) < n_unsat) and tries < 5000:
        tries += 1
        rhos = [["r1"], ["r2"], ["r1", "r2"]]
        consts = [{"name": "a", "bar": "A", "rho": rhos[rng.integers(3)]},
                  {"name": "b", "bar": "B", "rho": rhos[rng.integers(3)]}]
        nvars = int(rng.integers(1, 3))
        vars_ = [{"name": nm} for nm in ["X", "Y"][:nvars]]
        letters = ["a", "A", "b", "B"] + [v["name"] for v in vars_] \
            + [v["name"] + "~" for v in vars_]
        weights = np.array([1, 0.4, 1, 0.4] + [1.5] * nvars + [0.4] * nvars)
        weights /= weights.sum()
        total = int(rng.integers(3, 8))
        cut = int(rng.integers(1, total))
        word = [str(x) for x in rng.choice(letters, size=total, p=weights)]
        if not any(w[0] in "XY" for w in word):
            continue
        d = inst(f"rand{tries:04d}", " ".join(word[:cut]), " ".join(word[cut:]),
                 constants=consts, variables=vars_)
        i = parse_instance(d)
        try:
            n = len(enumerate_bruteforce(i, 3, cap=200_000))
        except Exception:
            continue
        if n > 60:
            continue            # keep the certification cheap
        if n and len(sat) < n_sat:
            sat.append(d)
        elif not n and len(unsat) < n_unsat:
            unsat.append(d)
    return sat + unsat


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    docs = HAND + random_instances()
    for d in docs:
        (OUT / f"{d['name']}.json").write_text(json.dumps(d, indent=1) + "\n")
    print(f"wrote {len(docs)} instances to {OUT}")


if __name__ == "__main__":
    main()
