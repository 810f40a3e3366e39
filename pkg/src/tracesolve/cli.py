"""Command line front end.

Exit codes: 0 satisfiable / success, 1 unsatisfiable / mismatch, 2 error.
"""

from __future__ import annotations

import json
import logging
import sys

import click

from .equation_state import StateError, weight
from .group_reduction import reduce_instance
from .instance import Instance, InstanceError, load_instance
from .oracle import OracleError, check_tuple, enumerate_bruteforce, format_tuple
from .recompression_search import SearchError
from .solution_nfa import build_certified, build_exhaustive, certified_path
from .trace_core import TraceError
from .transition_engine import TransitionError, apply_to_distinguished

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2

ERRORS = (InstanceError, OracleError, SearchError, TransitionError, StateError, TraceError)


def _fail(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_ERROR)


def _load(path: str) -> Instance:
    try:
        inst = load_instance(path)
        reduce_instance(inst)       # rejects torsion and unsupported letters early
        return inst
    except ERRORS as e:
        _fail(str(e))


def _build(inst: Instance, bound: int, mode: str, jobs: int, stop_on_cycle: bool = False):
    try:
        if mode == "exhaustive":
            nfa = build_exhaustive(inst)
        else:
            nfa = build_certified(inst, bound, jobs=jobs, stop_on_cycle=stop_on_cycle)
    except ERRORS as e:
        _fail(str(e))
    for vals, err in nfa.failures:
        click.echo(f"warning: no certified path for {format_tuple(inst, vals)}: {err}", err=True)
    return nfa.trim()


def _sorted_tuples(inst: Instance, tuples) -> list[str]:
    return [format_tuple(inst, t) for t in sorted(tuples, key=lambda t: (
        tuple(len(w) for w in t), format_tuple(inst, t)))]


def _plural(n: int, word: str) -> str:
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging (-vv for debug).")
def main(verbose: int) -> None:
    """Equations over trace monoids and right-angled Artin groups."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


bound_opt = click.option("--bound", "-L", default=4, show_default=True,
                         help="Length bound for the certified construction.")
mode_opt = click.option("--mode", type=click.Choice(["certify", "exhaustive"]), default="certify",
                        show_default=True, help="How the NFA is built.")
jobs_opt = click.option("--jobs", "-j", default=1, show_default=True,
                        help="Worker processes for certification.")


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@bound_opt
@mode_opt
@jobs_opt
def sat(file, bound, mode, jobs):
    """Decide satisfiability (relative to --bound in certify mode)."""
    inst = _load(file)
    nfa = _build(inst, bound, mode, jobs)
    ok = nfa.is_satisfiable()
    if ok:
        click.echo("VERDICT sat")
    elif mode == "certify":
        click.echo("VERDICT unsat")
        click.echo(f"(no solution with all components of length <= {bound})")
    else:
        # the exhaustive vocabulary is limited: no path proves nothing
        click.echo("VERDICT unknown")
        click.echo("(no accepting path among the exhaustive moves)")
    sys.exit(EXIT_OK if ok else EXIT_NO)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@bound_opt
@mode_opt
@jobs_opt
def finite(file, bound, mode, jobs):
    """Finitely or infinitely many solutions; infinite comes with a cycle."""
    inst = _load(file)
    nfa = _build(inst, bound, mode, jobs, stop_on_cycle=True)
    cycle = nfa.find_cycle()
    if cycle is not None:
        click.echo("VERDICT finite=no")
        states = [nfa.edges[i].src for i in cycle] + [nfa.edges[cycle[-1]].dst]
        click.echo("infinite (cycle found): " + " -> ".join(f"s{s}" for s in states))
        sys.exit(EXIT_OK)
    n = len(nfa.solutions())
    if mode == "certify":
        try:
            more = len(enumerate_bruteforce(inst, bound + 1))
        except OracleError as e:
            _fail(str(e))
        if more > n:
            click.echo(f"VERDICT finite=unknown@{bound}")
            click.echo(f"no cycle at bound {bound}, but solutions of length {bound + 1} exist")
            sys.exit(EXIT_OK)
        click.echo("VERDICT finite=yes")
        click.echo(f"finite with {_plural(n, 'solution')} (no cycle found at bound {bound})")
    else:
        click.echo("VERDICT finite=unknown")
        click.echo(f"no cycle among the exhaustive moves ({_plural(n, 'solution')} found)")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--bound", "-L", default=3, show_default=True,
              help="Report tuples whose components have length <= L.")
@click.option("--max-paths", default=500, show_default=True)
@click.option("--loops", default=0, show_default=True,
              help="Extra rounds through each cycle; longer tuples are then kept.")
@mode_opt
@jobs_opt
def solutions(file, bound, max_paths, loops, mode, jobs):
    """Enumerate solutions from the NFA (sorted)."""
    inst = _load(file)
    nfa = _build(inst, bound, mode, jobs)
    found = nfa.solutions(bound=None if loops else bound, max_paths=max_paths, extra_loops=loops)
    for line in _sorted_tuples(inst, found):
        click.echo(line)
    click.echo(f"COUNT {len(found)}")


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["dot", "json"]), default="json",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output file (default: stdout).")
@bound_opt
@mode_opt
@jobs_opt
def nfa(file, fmt, out, bound, mode, jobs):
    """Export the trimmed NFA as DOT or JSON."""
    inst = _load(file)
    a = _build(inst, bound, mode, jobs)
    text = a.to_dot() if fmt == "dot" else json.dumps(a.to_json(), indent=1)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        s = a.summary()
        click.echo(f"wrote {out}: {s['states']} states, {s['edges']} edges")
    else:
        click.echo(text)


def _parse_solution(inst: Instance, path: str) -> tuple:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        _fail(f"{path}: {e}")
    if not isinstance(data, dict):
        _fail(f"{path}: expected an object mapping variable names to words")
    names = {inst.alphabet.name(a): a for a in inst.constants()}
    out = []
    for X in inst.variables:
        nm = inst.var_names[X]
        if nm not in data:
            _fail(f"{path}: no value for {nm}")
        w = data[nm]
        toks = w.split() if isinstance(w, str) else list(w)
        try:
            out.append(tuple(names[t] for t in toks))
        except KeyError as e:
            _fail(f"{path}: unknown letter {e.args[0]!r} in {nm}")
    return tuple(out)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--solution", "solution_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='JSON object {"X": "a b", ...}.')
def certify(file, solution_file):
    """Walk one solution to a final state and check the composed labels."""
    inst = _load(file)
    vals = _parse_solution(inst, solution_file)
    issues = check_tuple(inst, vals)
    if issues:
        click.echo("not a solution: " + "; ".join(issues))
        sys.exit(EXIT_NO)
    red = reduce_instance(inst)
    try:
        ctx, path = certified_path(red, vals)
    except ERRORS as e:
        _fail(str(e))
    click.echo(f"initial  |W|={len(path.initial.W)}  weight={weight(ctx, path.initial)}")
    for i, st in enumerate(path.steps, 1):
        click.echo(f"{i:3d} {st.label.kind:18s} |W|={len(st.dst.W):3d} "
                   f"weight={weight(ctx, st.dst)}  {st.note}")
    got = red.project(apply_to_distinguished(ctx, path.labels))
    click.echo(f"composed: {format_tuple(inst, got) if got is not None else 'invalid'}")
    ok = got == tuple(vals)
    click.echo("MATCH" if ok else "MISMATCH")
    sys.exit(EXIT_OK if ok else EXIT_NO)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--bound", "-L", default=3, show_default=True)
def oracle(file, bound):
    """Brute-force solutions (sorted)."""
    inst = _load(file)
    try:
        found = enumerate_bruteforce(inst, bound)
    except OracleError as e:
        _fail(str(e))
    for line in _sorted_tuples(inst, found):
        click.echo(line)
    click.echo(f"COUNT {len(found)}")


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--bound", "-L", default=3, show_default=True)
@click.option("--max-paths", default=500, show_default=True)
@jobs_opt
def check(file, bound, max_paths, jobs):
    """Compare the NFA's solutions with the brute-force oracle."""
    inst = _load(file)
    try:
        want = enumerate_bruteforce(inst, bound)
    except OracleError as e:
        _fail(str(e))
    a = _build(inst, bound, "certify", jobs)
    got = a.solutions(bound=bound, max_paths=max_paths)
    problems = a.check_edges() + a.replay(max_paths)
    for p in problems:
        click.echo(f"unsound: {p}")
    if got == want and not problems:
        click.echo(f"MATCH {_plural(len(got), 'tuple')}")
        sys.exit(EXIT_OK)
    for line in _sorted_tuples(inst, want - got):
        click.echo(f"missing {line}")
    for line in _sorted_tuples(inst, got - want):
        click.echo(f"extra {line}")
    click.echo(f"MISMATCH {len(got)} vs {len(want)}")
    sys.exit(EXIT_NO)


if __name__ == "__main__":
    main()
