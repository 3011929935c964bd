from __future__ import annotations

import random

import pytest

from magistral.errors import CapacityExceeded, PreconditionFailed
from magistral.oracle import enumerate_stable_models, full_ground, is_unfounded_set
from magistral.oracle import PartialInterpretation, base_atoms, matching_substitutions
from magistral.parser import parse_program, parse_query
from magistral.rewriter import (
    AdornedPredicate,
    build_query_seed,
    dms,
    killed_set,
    magic_variant,
    magic_variant_stages,
)
from magistral.syntax import Atom, Query, normalize_query

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
    EXAMPLE_9_MODIFIED
    + "nsc(C) :- magic__nsc__b(C), company(C), not sc(C).\n"
)


class TestQuerySeed:
    def test_bound_query(self):
        seed, first = build_query_seed(Query((atom("sc(c)"),)))
        assert first == AdornedPredicate("sc", "b")
        assert seed.is_fact and seed.head[0] == atom("magic__sc__b(c)")

    def test_fully_bound_binary_query(self):
        seed, first = build_query_seed(Query((atom("path(1,5)"),)))
        assert first == AdornedPredicate("path", "bb")
        assert seed.head[0] == atom("magic__path__bb(1,5)")

    def test_free_query_yields_propositional_seed(self):
        seed, first = build_query_seed(Query((atom("g(X)"),)))
        assert first == AdornedPredicate("g", "f")
        assert seed.head[0] == Atom("magic__g__f", ())


class TestGoldenRewritings:
    def test_strategic_example(self, psc):
        output = dms(parse_query("sc(c)?"), psc)
        assert output.seed.head[0] == atom("magic__sc__b(c)")
        assert set(output.magic_rules) == rules_of(EXAMPLE_9_MAGIC)
        assert set(output.modified_rules) == rules_of(EXAMPLE_9_MODIFIED)
        assert len(output.magic_rules) == 5
        assert len(output.modified_rules) == 3
        assert set(output.edb_rules) == rules_of("produced_by(p,c,c1).")

    def test_strategic_with_negation(self, pnsc):
        output = dms(parse_query("nsc(c)?"), pnsc)
        assert output.seed.head[0] == atom("magic__nsc__b(c)")
        assert set(output.magic_rules) == rules_of(EXAMPLE_10_MAGIC)
        assert set(output.modified_rules) == rules_of(EXAMPLE_10_MODIFIED)
        assert len(output.magic_rules) + len(output.modified_rules) == 10

    def test_path_rewriting(self, path_program):
        output = dms(parse_query("path(1,5)?"), path_program)
        assert output.seed.head[0] == atom("magic__path__bb(1,5)")
        assert set(output.magic_rules) == rules_of(
            "magic__path__bb(Z,Y) :- magic__path__bb(X,Y), edge(X,Z).\n"
        )
        assert set(output.modified_rules) == rules_of(
            "path(X,Y) :- magic__path__bb(X,Y), edge(X,Y).\n"
            "path(X,Y) :- magic__path__bb(X,Y), edge(X,Z), path(Z,Y).\n"
        )

    def test_path_answers_match_hand_rewriting(self, path_program):
        # the classic four-phase rewriting keeps adorned copies and a query
        # rule; both must give the same answer on the example facts
        hand = parse_program(
            "magicpathbb(1,5).\n"
            "path(X,Y) :- pathbb(X,Y).\n"
            "magicpathbb(Z,Y) :- magicpathbb(X,Y), edge(X,Z).\n"
            "pathbb(X,Y) :- magicpathbb(X,Y), edge(X,Y).\n"
            "pathbb(X,Y) :- magicpathbb(X,Y), edge(X,Z), pathbb(Z,Y).\n"
            "edge(1,3). edge(2,4). edge(3,5).\n",
            allow_magic=True,  # seed fact for a rule-defined predicate
        )
        query = parse_query("path(1,5)?")
        from magistral.oracle import answer_query

        ours = answer_query(query, dms(query, path_program).program(), "brave")
        theirs = answer_query(query, hand, "brave")
        assert ours.is_true and theirs.is_true

    def test_magic_rules_have_empty_negative_bodies(self, pnsc):
        rng = random.Random(2)
        programs = [pnsc] + [random_program(rng) for _ in range(30)]
        for program in programs:
            query = random_query(rng, program)
            output = dms(query, program)
            for rule in (output.seed, *output.magic_rules):
                assert not rule.body_neg

    def test_termination_bound(self):
        # every adorned predicate is processed at most once
        rng = random.Random(3)
        for _ in range(30):
            program = random_program(rng)
            query = random_query(rng, program)
            output = dms(query, program)
            names = [name for name, _ in output.magic_map]
            assert len(names) == len(set(names))
            bound = sum(2 ** arity for arity in program.predicates().values())
            assert len(names) <= bound

    def test_edb_query_passes_through(self, psc):
        output = dms(parse_query("produced_by(p,c,c1)?"), psc)
        assert output.magic_rules == ()
        assert output.modified_rules == ()
        assert set(output.edb_rules) == rules_of("produced_by(p,c,c1).")


class TestGroundShape:
    def test_modified_instances_mirror_original_instances(self):
        # dropping the magic guards from a modified ground instance lands in
        # the original ground program (rules compared as head/body sets)
        rng = random.Random(11)
        checked = 0
        while checked < 25:
            program = random_program(rng)
            query = random_query(rng, program)
            normalized, goal = normalize_query(program, query)
            output = dms(query, program)
            magic_names = {name for name, _ in output.magic_map}
            try:
                rewritten_ground = full_ground(output.program(), max_rules=20000)
                original_ground = full_ground(normalized, max_rules=20000)
            except CapacityExceeded:
                continue
            originals = {
                (frozenset(r.head), frozenset(r.body)) for r in original_ground
            }
            for rule in rewritten_ground:
                if rule.head[0].predicate in magic_names:
                    continue
                if rule.is_fact:
                    continue
                stripped = (
                    frozenset(rule.head),
                    frozenset(l for l in rule.body if l.atom.predicate not in magic_names),
                )
                assert stripped in originals
            checked += 1


class TestMagicVariant:
    def test_example_stage_sequence(self, psc):
        m_sc = frozenset({atom("produced_by(p,c,c1)"), atom("sc(c)")})
        stages = magic_variant_stages(m_sc, parse_query("sc(c)?"), psc)
        assert stages[0] == frozenset({atom("produced_by(p,c,c1)")})
        assert stages[1] == stages[0] | {atom("magic__sc__b(c)")}
        assert stages[2] == stages[1] | {atom("sc(c)"), atom("magic__sc__b(c1)")}
        assert stages[-1] == stages[2]

    def test_variant_of_edb_only_interpretation(self, psc):
        edb = frozenset({atom("produced_by(p,c,c1)")})
        variant = magic_variant(edb, parse_query("sc(c)?"), psc)
        standard = {a for a in variant if not a.predicate.startswith("magic__")}
        assert standard == edb
        assert atom("magic__sc__b(c)") in variant

    def test_variant_restricted_to_base_is_contained(self, psc):
        rng = random.Random(17)
        for _ in range(20):
            program = random_program(rng)
            query = random_query(rng, program)
            try:
                models = enumerate_stable_models(program, max_candidates=12)
            except CapacityExceeded:
                continue
            for model in models:
                variant = magic_variant(model, query, program)
                restricted = {a for a in variant if a.predicate in program.predicates()}
                assert restricted <= model

    def test_variant_of_stable_model_is_stable_for_rewriting(self, psc):
        # the lifting of each stable model is a stable model of the rewritten
        # program that agrees on the query
        query = parse_query("sc(c)?")
        output = dms(query, psc)
        rewritten_models = enumerate_stable_models(output.program())
        for model in enumerate_stable_models(psc):
            variant = magic_variant(model, query, psc)
            assert variant in rewritten_models
            assert matching_substitutions(atom("sc(c)"), variant) == matching_substitutions(
                atom("sc(c)"), model
            )


class TestKilledSet:
    def test_example_killed_atoms(self, psc):
        query = parse_query("sc(c)?")
        m_prime = magic_variant(
            frozenset({atom("produced_by(p,c,c1)"), atom("sc(c)")}), query, psc
        )
        killed = killed_set(m_prime, m_prime, query, psc)
        assert atom("sc(c1)") in killed
        assert atom("produced_by(p,c1,c)") in killed
        assert atom("controlled_by(c,c1,c1,c1)") in killed
        assert not killed & m_prime
        # everything killed is either false extensional or has a magic twin
        base = base_atoms(psc)
        assert killed <= base
        expected = {
            a for a in base
            if a not in m_prime and (
                a.predicate in ("produced_by", "controlled_by")
                or (a.predicate == "sc" and Atom("magic__sc__b", a.args) in m_prime)
            )
        }
        assert killed == expected

    def test_killed_set_is_unfounded(self, psc):
        query = parse_query("sc(c)?")
        for model in enumerate_stable_models(dms(query, psc).program()):
            killed = killed_set(model, model, query, psc)
            restricted = frozenset(a for a in model if a.predicate in psc.predicates())
            partial = PartialInterpretation(restricted, base_atoms(psc))
            assert is_unfounded_set(killed, partial, psc)

    def test_precondition_checked(self, psc):
        query = parse_query("sc(c)?")
        not_a_model = frozenset({atom("sc(c)")})
        with pytest.raises(PreconditionFailed):
            killed_set(not_a_model, not_a_model, query, psc)
