"""Acceptance suite: one test per criterion, one PASS line per criterion.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

from __future__ import annotations

import random
import time

import pytest

from magistral.errors import CapacityExceeded, UnsafeRule, UnstratifiedProgram
from magistral.integration import build_repair_program, merge_facts, parse_mapping, parse_schema
from magistral.optimizer import prune_redundant, subsumes_exact, subsumes_greedy
from magistral.oracle import (
    PartialInterpretation,
    base_atoms,
    enumerate_stable_models,
    is_unfounded_set,
    matching_substitutions,
)
from magistral.bench import gen_conformant, gen_related, gen_simple_path, run_suite
from magistral.parser import parse_program, parse_query
from magistral.rewriter import dms, magic_variant, magic_variant_stages, rewrite
from magistral.solver import answer
from magistral.syntax import normalize_query

from conftest import atom, random_program, random_query, rules_of

EXAMPLE_9_MAGIC = """\
magic__sc__b(C2) :- magic__sc__b(C1), produced_by(P,C1,C2).
magic__sc__b(C1) :- magic__sc__b(C2), produced_by(P,C1,C2).
magic__sc__b(C1) :- magic__sc__b(C), controlled_by(C,C1,C2,C3).
magic__sc__b(C2) :- magic__sc__b(C), controlled_by(C,C1,C2,C3).
magic__sc__b(C3) :- magic__sc__b(C), controlled_by(C,C1,C2,C3).
"""

EXAMPLE_9_MODIFIED = """\
sc(C1) v sc(C2) :- magic__sc__b(C1), magic__sc__b(C2), produced_by(P,C1,C2).
sc(C2) v sc(C1) :- magic__sc__b(C2), magic__sc__b(C1), produced_by(P,C1,C2).
sc(C) :- magic__sc__b(C), controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).
"""

EXAMPLE_10_MAGIC = EXAMPLE_9_MAGIC + "magic__sc__b(C) :- magic__nsc__b(C).\n"
EXAMPLE_10_MODIFIED = (
    EXAMPLE_9_MODIFIED + "nsc(C) :- magic__nsc__b(C), company(C), not sc(C).\n"
)


def report(criterion: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"PASS {criterion}{suffix}")


def oracle_both(goal, program, *, max_candidates=15):
    models = enumerate_stable_models(program, max_candidates=max_candidates)
    assert models
    per_model = [matching_substitutions(goal, m) for m in models]
    return (
        frozenset(set().union(*per_model)),
        frozenset(set.intersection(*per_model)),
    )


def test_criterion_1_golden_rewritings(psc, pnsc, path_program):
    started = time.perf_counter()

    output = dms(parse_query("sc(c)?"), psc)
    assert output.seed.head[0] == atom("magic__sc__b(c)")
    assert len(output.magic_rules) == 5 and len(output.modified_rules) == 3
    assert set(output.magic_rules) == rules_of(EXAMPLE_9_MAGIC)
    assert set(output.modified_rules) == rules_of(EXAMPLE_9_MODIFIED)

    output = dms(parse_query("nsc(c)?"), pnsc)
    assert output.seed.head[0] == atom("magic__nsc__b(c)")
    assert len(output.magic_rules) + len(output.modified_rules) == 10
    assert set(output.magic_rules) == rules_of(EXAMPLE_10_MAGIC)
    assert set(output.modified_rules) == rules_of(EXAMPLE_10_MODIFIED)

    query = parse_query("path(1,5)?")
    rewritten = dms(query, path_program).program()
    hand = parse_program(
        "magicpathbb(1,5).\n"
        "path(X,Y) :- pathbb(X,Y).\n"
        "magicpathbb(Z,Y) :- magicpathbb(X,Y), edge(X,Z).\n"
        "pathbb(X,Y) :- magicpathbb(X,Y), edge(X,Y).\n"
        "pathbb(X,Y) :- magicpathbb(X,Y), edge(X,Z), pathbb(Z,Y).\n"
        "edge(1,3). edge(2,4). edge(3,5).\n",
        allow_magic=True,
    )
    goal = query.atoms[0]
    ours = oracle_both(goal, rewritten)
    theirs = oracle_both(goal, hand)
    assert ours == theirs
    assert ours[0]  # path(1,5) is true

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    report("criterion-1", f"golden rewritings in {elapsed:.2f}s")


def test_criterion_2_query_equivalence_suite():
    started = time.perf_counter()
    rng = random.Random(240808)
    checked = regenerated = 0
    while checked < 1000:
        program = random_program(rng)
        query = random_query(rng, program, fresh_constant=rng.random() < 0.1)
        normalized, goal = normalize_query(program, query)
        try:
            brave_p, cautious_p = oracle_both(goal, normalized, max_candidates=13)
            output = rewrite(normalized, goal)
            brave_d, cautious_d = oracle_both(goal, output.program(), max_candidates=17)
        except CapacityExceeded:
            regenerated += 1
            continue
        assert brave_p == brave_d, (str(program), str(query))
        assert cautious_p == cautious_d, (str(program), str(query))
        for mode, expected in (("brave", brave_p), ("cautious", cautious_p)):
            for magic in ("off", "on", "on_subsume"):
                got = answer(query, program, mode, magic)
                assert got.substitutions == expected, (str(program), str(query), mode, magic)
        checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 300
    report("criterion-2", f"{checked} programs, {regenerated} regenerated, {elapsed:.0f}s")


def test_criterion_3_unique_model_after_rewriting():
    started = time.perf_counter()
    rng = random.Random(360906)
    checked = regenerated = 0
    while checked < 200:
        program = random_program(rng, disjunctive=False)
        query = random_query(rng, program)
        normalized, goal = normalize_query(program, query)
        output = rewrite(normalized, goal)
        try:
            models = enumerate_stable_models(output.program(), max_candidates=17)
        except CapacityExceeded:
            regenerated += 1
            continue
        assert len(models) == 1, (str(program), str(query))
        checked += 1
    elapsed = time.perf_counter() - started
    report("criterion-3", f"{checked} rewritten programs all single-model, {elapsed:.0f}s")


def test_criterion_4_unfounded_set_fidelity(psc):
    m_sc = frozenset({atom("produced_by(p,c,c1)"), atom("sc(c)")})
    partial = PartialInterpretation(m_sc, base_atoms(psc))
    assert is_unfounded_set({atom("sc(c1)")}, partial, psc)
    assert not is_unfounded_set({atom("sc(c)"), atom("sc(c1)")}, partial, psc)

    rng = random.Random(480808)
    sampled = 0
    while sampled < 500:
        program = random_program(rng)
        try:
            models = enumerate_stable_models(program, max_candidates=12)
            universe = sorted(base_atoms(program, max_atoms=2000), key=str)
        except CapacityExceeded:
            continue
        for model in models:
            true_atoms = sorted(model, key=str)
            t = frozenset(rng.sample(true_atoms, rng.randint(0, len(true_atoms))))
            partial = PartialInterpretation(t, frozenset(universe))
            for _ in range(4):
                if sampled >= 500:
                    break
                candidate = frozenset(rng.sample(universe, min(rng.randint(1, 4), len(universe))))
                if is_unfounded_set(candidate, partial, program):
                    assert not candidate & model, (str(program), candidate, model)
                sampled += 1
            if sampled >= 500:
                break
    report("criterion-4", f"{sampled} sampled unfounded-set instances")


def test_criterion_5_magic_variant_fidelity(psc):
    query = parse_query("sc(c)?")
    m_sc = frozenset({atom("produced_by(p,c,c1)"), atom("sc(c)")})
    stages = magic_variant_stages(m_sc, query, psc)
    assert stages[0] == frozenset({atom("produced_by(p,c,c1)")})
    assert stages[1] == stages[0] | {atom("magic__sc__b(c)")}
    assert stages[2] == stages[1] | {atom("sc(c)"), atom("magic__sc__b(c1)")}
    assert stages[-1] == frozenset({
        atom("produced_by(p,c,c1)"), atom("magic__sc__b(c)"),
        atom("magic__sc__b(c1)"), atom("sc(c)"),
    })

    rng = random.Random(560808)
    checked = 0
    while checked < 300:
        program = random_program(rng)
        query = random_query(rng, program)
        normalized, goal = normalize_query(program, query)
        try:
            models = enumerate_stable_models(normalized, max_candidates=12)
            output = rewrite(normalized, goal)
            rewritten_models = enumerate_stable_models(output.program(), max_candidates=16)
        except CapacityExceeded:
            continue
        for model in models:
            variant = magic_variant(model, query, program)
            assert variant in rewritten_models, (str(program), str(query))
            assert matching_substitutions(goal, variant) == matching_substitutions(goal, model)
        checked += 1
    report("criterion-5", f"{checked} programs, every variant stable and query-agreeing")


def test_criterion_6_subsumption(psc):
    output = dms(parse_query("sc(c)?"), psc)
    pruned = prune_redundant(output.program(), "greedy")
    kept = [r for r in pruned.rules if r in output.modified_rules]
    assert kept == [output.modified_rules[0], output.modified_rules[2]]
    assert output.modified_rules[1] not in pruned.rules

    rng = random.Random(680808)
    pairs = unsound = 0
    rules = []
    while pairs < 10_000:
        if len(rules) < 2:
            rules = [r for r in random_program(rng).rules]
            continue
        first, second = rng.choice(rules), rng.choice(rules)
        witness = subsumes_greedy(first, second)
        if witness is not None:
            theta = witness.as_dict()
            head_ok = {a.substitute(theta) for a in first.head} <= set(second.head)
            body_ok = all(
                lit.atom.substitute(theta)
                in (second.body_neg if lit.negated else second.body_pos)
                for lit in first.body
            )
            if not (head_ok and body_ok):
                unsound += 1
            try:
                if not subsumes_exact(first, second):
                    unsound += 1
            except CapacityExceeded:
                pass
        pairs += 1
        if rng.random() < 0.2:
            rules = []
    assert unsound == 0
    report("criterion-6", f"{pairs} random pairs, zero unsound witnesses")


@pytest.mark.filterwarnings("ignore")
def test_criterion_7_dynamic_pruning_trend():
    started = time.perf_counter()

    conformant = run_suite(
        ["conformant"], {"conformant": [4, 5, 6, 7, 8, 9, 10]},
        configs=("off", "dms"), timeout=30.0,
    )
    by_depth: dict[int, dict[str, object]] = {}
    for row in conformant:
        by_depth.setdefault(row.size, {})[row.config] = row

    ratios = []
    off_timed_out_with_fast_dms = False
    for depth in sorted(by_depth):
        off = by_depth[depth]["off"]
        dms_row = by_depth[depth]["dms"]
        dms_total = dms_row.time_ground_ms + dms_row.time_search_ms
        if off.timeout and not dms_row.timeout and dms_total < 5000:
            off_timed_out_with_fast_dms = True
        if not off.timeout and not dms_row.timeout:
            off_total = off.time_ground_ms + off.time_search_ms
            ratios.append(dms_total / max(off_total, 1e-9))
    inversions = sum(1 for a, b in zip(ratios, ratios[1:]) if b > a)
    assert inversions <= 1, ratios
    assert off_timed_out_with_fast_dms, "expected a depth where off times out and dms stays under 5s"

    graph = run_suite(
        ["simple_path", "related"], [4, 8, 16],
        configs=("off", "dms"), timeout=60.0,
    )
    for family in ("simple_path", "related"):
        largest = [r for r in graph if r.family == family and r.size == 16]
        counts = {r.config: r.ground_rules for r in largest}
        assert counts["dms"] > 0 and counts["off"] > 0
        assert counts["dms"] < 0.5 * counts["off"], (family, counts)

    elapsed = time.perf_counter() - started
    assert elapsed < 600
    report("criterion-7", f"trend + ground-size gap in {elapsed:.0f}s")


def test_criterion_8_integration_toy():
    schema = parse_schema("relation r/2 key 1.")
    mapping = parse_mapping("r_D(X,Y) :- r_s(X,Y).", schema)
    query = parse_query("r(a,V)?")
    program = build_repair_program(schema, mapping, query)
    full = merge_facts(program, parse_program("r_s(a,1). r_s(a,2).").rules)

    models = enumerate_stable_models(full)
    assert len(models) == 2

    goal = query.atoms[0]
    brave, cautious = oracle_both(goal, full)
    assert cautious == frozenset()
    assert {str(s.as_dict()["V"]) for s in brave} == {"1", "2"}

    for mode, expected in (("brave", brave), ("cautious", cautious)):
        for magic in ("off", "on", "on_subsume"):
            got = answer(query, full, mode, magic)
            assert got.substitutions == expected
    report("criterion-8", "2 repairs; cautious empty, brave {1,2}; rewriting agrees")


def test_criterion_9_validation_gates():
    for case in (
        gen_simple_path(3).program,
        gen_related(3).program,
        gen_conformant(2).program,
    ):
        reparsed = parse_program(str(case))
        assert reparsed.rules == case.rules
    from magistral.bench import gen_strategic

    strategic = gen_strategic(4, 3, 7).program
    assert parse_program(str(strategic)).rules == strategic.rules

    with pytest.raises(UnstratifiedProgram) as unstratified:
        parse_program("p :- not p.")
    assert unstratified.value.span is not None

    with pytest.raises(UnsafeRule) as unsafe:
        parse_program("p(X) v q(Y) :- e(X).")
    assert unsafe.value.variable == "Y"
    assert unsafe.value.span is not None
    assert unsafe.value.span.line == 1
    report("criterion-9", "benchmark encodings validate; bad programs rejected with spans")
