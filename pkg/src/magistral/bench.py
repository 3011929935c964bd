"""The four standard benchmark families and the benchmark runner.

Instances are deterministic in (family, size, seed).  The runner executes
each case under one or more engine configurations, records timing and search
statistics per run, enforces answer agreement across configurations that
finished, and writes one CSV row per run.
"""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass

from .errors import AnswersDisagree, Interrupted
from .parser import parse_program
from .solver import SearchStats, answer
from .syntax import Atom, Constant, Program, Query, fact

SIMPLE_PATH_RULES = """\
sp(X,X) v not_sp(X,X) :- edge(X,Y).
sp(X,Y) v not_sp(X,Y) :- sp(X,Z), edge(Z,Y).
path(X,Y) :- sp(X,Y).
path(X,Y) :- not_sp(X,Y).
not_sp(X,Z) :- path(X,Y1), path(X,Y2), Y1 <> Y2, edge(Y1,Z), edge(Y2,Z).
"""

RELATED_RULES = """\
father(X,Y) v brother(X,Y) :- related(X,Y).
ancestor(X,Y) :- father(X,Y).
ancestor(X,Y) :- father(X,Z), ancestor(Z,Y).
"""

STRATEGIC_RULES = """\
st(C1) v st(C2) v st(C3) v st(C4) :- produced_by(P,C1,C2,C3,C4).
st(C) :- controlled_by(C,C1,C2,C3,C4), st(C1), st(C2), st(C3), st(C4).
"""

CONFORMANT_RULES = """\
trans(X,Y) v trans(X,Z) :- ptrans(X,Y,Z).
reach(X,Y) :- trans(X,Y).
reach(X,Y) :- reach(X,Z), trans(Z,Y).
"""

FAMILY_MODES = {
    "simple_path": "brave",
    "related": "brave",
    "strategic": "brave",
    "conformant": "cautious",
}

CONFIGS = {"off": "off", "dms": "on", "dms_subsume": "on_subsume"}

CSV_COLUMNS = (
    "family",
    "size",
    "seed",
    "config",
    "answer",
    "choices",
    "ground_rules",
    "time_ground_ms",
    "time_search_ms",
    "timeout",
)


@dataclass(frozen=True)
class BenchCase:
    family: str
    size: int
    seed: int
    program: Program
    query: Query


@dataclass(frozen=True)
class BenchRow:
    family: str
    size: int
    seed: int
    config: str
    answer: str
    choices: int
    ground_rules: int
    time_ground_ms: float
    time_search_ms: float
    timeout: bool

    def as_record(self) -> dict:
        return {
            "family": self.family,
            "size": self.size,
            "seed": self.seed,
            "config": self.config,
            "answer": self.answer,
            "choices": self.choices,
            "ground_rules": self.ground_rules,
            "time_ground_ms": round(self.time_ground_ms, 3),
            "time_search_ms": round(self.time_search_ms, 3),
            "timeout": self.timeout,
        }


def _grid_nodes(n_side: int, corner_start: str, corner_end: str, inner: str) -> list[list[str]]:
    """n x n node names with the two corners renamed to the query constants."""
    names = [[f"{inner}{i}_{j}" for j in range(n_side)] for i in range(n_side)]
    names[0][0] = corner_start
    names[n_side - 1][n_side - 1] = corner_end
    return names


def _grid_arcs(names: list[list[str]]) -> list[tuple[str, str]]:
    """Arcs to the right and downward neighbours."""
    n = len(names)
    arcs = []
    for i in range(n):
        for j in range(n):
            if j + 1 < n:
                arcs.append((names[i][j], names[i][j + 1]))
            if i + 1 < n:
                arcs.append((names[i][j], names[i + 1][j]))
    return arcs


def gen_simple_path(n_side: int) -> BenchCase:
    if n_side < 2:
        raise ValueError("the grid needs at least two nodes per side")
    names = _grid_nodes(n_side, "a", "b", "n")
    rules = list(parse_program(SIMPLE_PATH_RULES).rules)
    for src, dst in _grid_arcs(names):
        rules.append(fact(Atom("edge", (Constant(src), Constant(dst)))))
    query = Query((Atom("sp", (Constant("a"), Constant("b"))),))
    return BenchCase("simple_path", n_side, 0, Program.create(rules), query)


def gen_related(n_side: int) -> BenchCase:
    if n_side < 2:
        raise ValueError("the grid needs at least two nodes per side")
    names = _grid_nodes(n_side, "p1", "p2", "q")
    rules = list(parse_program(RELATED_RULES).rules)
    for src, dst in _grid_arcs(names):
        rules.append(fact(Atom("related", (Constant(src), Constant(dst)))))
    query = Query((Atom("ancestor", (Constant("p1"), Constant("p2"))),))
    return BenchCase("related", n_side, 0, Program.create(rules), query)


def _pad4(companies: list[str]) -> tuple[str, str, str, str]:
    """Fill four slots by cycling the given producers/controllers."""
    return tuple(companies[i % len(companies)] for i in range(4))  # type: ignore[return-value]


def gen_strategic(n_companies: int, n_products: int, seed: int) -> BenchCase:
    if n_companies < 2:
        raise ValueError("need at least two companies")
    rng = random.Random(seed)
    companies = [f"c{i + 1}" for i in range(n_companies)]
    rules = list(parse_program(STRATEGIC_RULES).rules)
    for k in range(n_products):
        producers = rng.sample(companies, rng.randint(1, min(4, n_companies)))
        slots = _pad4(producers)
        rules.append(
            fact(Atom("produced_by", (Constant(f"g{k + 1}"), *map(Constant, slots))))
        )
    for company in companies:
        if rng.random() < 0.5:
            others = [c for c in companies if c != company]
            if not others:
                continue
            controllers = rng.sample(others, rng.randint(1, min(4, len(others))))
            slots = _pad4(controllers)
            rules.append(
                fact(Atom("controlled_by", (Constant(company), *map(Constant, slots))))
            )
    query = Query((Atom("st", (Constant("c1"),)), Atom("st", (Constant("c2"),))))
    return BenchCase("strategic", n_companies, seed, Program.create(rules), query)


def gen_conformant(depth: int) -> BenchCase:
    """A complete binary tree of transitions rooted at state 0; every leaf
    steps to the goal state 1, so the plan is conformant by construction."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rules = list(parse_program(CONFORMANT_RULES).rules)
    last_internal = 2 ** depth - 1  # heap positions 1..2^(d+1)-1, leaves after this

    def state(heap_position: int) -> int:
        return 0 if heap_position == 1 else heap_position

    for p in range(1, 2 ** (depth + 1)):
        if p <= last_internal:
            children = (state(2 * p), state(2 * p + 1))
        else:
            children = (1, 1)
        rules.append(
            fact(Atom("ptrans", (Constant(state(p)), Constant(children[0]), Constant(children[1]))))
        )
    query = Query((Atom("reach", (Constant(0), Constant(1))),))
    return BenchCase("conformant", depth, 0, Program.create(rules), query)


def generate_case(family: str, size: int, seed: int = 0) -> BenchCase:
    if family == "simple_path":
        return gen_simple_path(size)
    if family == "related":
        return gen_related(size)
    if family == "strategic":
        return gen_strategic(size, max(2, size - 1), seed)
    if family == "conformant":
        return gen_conformant(size)
    raise ValueError(f"unknown benchmark family '{family}'")


def run_case(case: BenchCase, config: str, timeout: float | None) -> BenchRow:
    use_dms = CONFIGS[config]
    mode = FAMILY_MODES[case.family]
    stats = SearchStats()
    timed_out = False
    answer_text = ""
    t0 = time.perf_counter()
    try:
        outcome = answer(case.query, case.program, mode, use_dms, timeout=timeout, stats=stats)
        answer_text = "true" if outcome.is_true else "false"
    except Interrupted:
        timed_out = True
        stats.time_search = max(0.0, time.perf_counter() - t0 - stats.time_ground)
    return BenchRow(
        family=case.family,
        size=case.size,
        seed=case.seed,
        config=config,
        answer=answer_text,
        choices=stats.choices,
        ground_rules=stats.ground_rules,
        time_ground_ms=stats.time_ground * 1000.0,
        time_search_ms=stats.time_search * 1000.0,
        timeout=timed_out,
    )


def run_suite(
    families,
    sizes,
    configs=("off", "dms"),
    timeout: float | None = 30.0,
    out_path=None,
    seed: int = 0,
) -> list[BenchRow]:
    """Run families x sizes x configs; `sizes` is a list applied to every
    family or a mapping family -> list.  Answers must agree across the
    configurations that completed."""
    rows: list[BenchRow] = []
    for family in families:
        family_sizes = sizes[family] if isinstance(sizes, dict) else sizes
        for size in family_sizes:
            case = generate_case(family, size, seed)
            completed: dict[str, str] = {}
            for config in configs:
                row = run_case(case, config, timeout)
                rows.append(row)
                if not row.timeout:
                    completed[config] = row.answer
            if len(set(completed.values())) > 1:
                raise AnswersDisagree(
                    f"{family}/{size}: configurations disagree: {completed}"
                )
    if out_path is not None:
        write_csv(rows, out_path)
    return rows


def write_csv(rows: list[BenchRow], out_path) -> None:
    with open(out_path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())
