from __future__ import annotations

import random

import pytest

from magistral.errors import CapacityExceeded, Interrupted
from magistral.oracle import enumerate_stable_models, full_ground, is_model, reduct
from magistral.parser import parse_program, parse_query
from magistral.solver import (
    Deadline,
    SearchStats,
    answer,
    enumerate_models,
    intelligent_ground,
    solve,
)
from magistral.bench import gen_related, gen_simple_path

from conftest import atom, generate_checked_case, random_program


class TestGrounding:
    def test_fact_only_program(self):
        db = intelligent_ground(parse_program("p(a). q(b)."))
        assert db.rules == []
        assert db.truth(atom("p(a)")) is True
        assert db.truth(atom("q(b)")) is True
        assert db.truth(atom("p(b)")) is False

    def test_strategic_keeps_the_disjunctive_instance(self, psc):
        db = intelligent_ground(psc)
        assert len(db.rules) == 1
        rule = db.rules[0]
        assert set(rule.head) == {atom("sc(c)"), atom("sc(c1)")}
        assert rule.body == ()  # the true fact is simplified away
        assert db.truth(atom("sc(c)")) is None

    def test_deterministic_chains_are_decided(self, path_program):
        db = intelligent_ground(path_program)
        assert db.rules == []
        assert db.truth(atom("path(1,5)")) is True
        assert db.truth(atom("path(2,4)")) is True
        assert db.truth(atom("path(1,2)")) is False

    def test_rewritten_path_grounds_only_relevant_atoms(self, path_program):
        from magistral.rewriter import dms

        output = dms(parse_query("path(1,5)?"), path_program)
        db = intelligent_ground(output.program())
        assert db.truth(atom("path(1,5)")) is True
        # the branch through node 2 is irrelevant to the query
        assert atom("path(2,4)") not in db.possible

    def test_stratified_negation_evaluated(self):
        program = parse_program("p(X) :- e(X), not q(X). q(X) :- f(X). e(a). e(b). f(b).")
        db = intelligent_ground(program)
        assert db.rules == []
        assert db.truth(atom("p(a)")) is True
        assert db.truth(atom("p(b)")) is False

    def test_capacity(self, psc):
        with pytest.raises(CapacityExceeded):
            intelligent_ground(psc, max_instances=0)

    def test_timeout(self):
        case = gen_simple_path(8)
        with pytest.raises(Interrupted):
            intelligent_ground(case.program, deadline=Deadline(0.01))


class TestSolve:
    def test_enumerate_matches_oracle(self, psc):
        db = intelligent_ground(psc)
        models = solve(db, "enumerate")
        assert set(models) == set(enumerate_stable_models(psc))

    def test_every_model_is_stable(self):
        rng = random.Random(5005)
        checked = 0
        while checked < 40:
            program = random_program(rng)
            try:
                expected = enumerate_stable_models(program, max_candidates=14)
            except CapacityExceeded:
                continue
            models, _ = enumerate_models(program)
            assert set(models) == set(expected)
            ground = full_ground(program)
            for model in models:
                assert is_model(model, reduct(ground, model))
            checked += 1

    def test_targeted_modes(self, psc):
        db = intelligent_ground(psc)
        stats = SearchStats()
        holds, witness = solve(db, "brave", atom("sc(c)"), stats=stats)
        assert holds and witness is not None and atom("sc(c)") in witness
        holds, counter = solve(db, "cautious", atom("sc(c)"), stats=stats)
        assert not holds and counter is not None and atom("sc(c)") not in counter

    def test_unique_model_shortcut(self, path_program):
        db = intelligent_ground(path_program)
        stats = SearchStats()
        holds, _ = solve(db, "brave", atom("path(1,5)"), stats=stats, unique_model=True)
        assert holds
        assert stats.choices == 0  # everything was decided deterministically


class TestAnswerPipeline:
    def test_agreement_with_oracle_across_modes(self):
        rng = random.Random(6006)
        for _ in range(60):
            program, query, brave, cautious = generate_checked_case(rng)
            for mode, expected in (("brave", brave), ("cautious", cautious)):
                for magic in ("off", "on", "on_subsume", "auto"):
                    outcome = answer(query, program, mode, magic)
                    assert outcome.substitutions == expected, (program, query, mode, magic)

    def test_witness_strips_magic_atoms(self, psc):
        outcome = answer(parse_query("sc(c)?"), psc, "brave", "on", want_witness=True)
        assert outcome.witness is not None
        assert all(not a.predicate.startswith("magic__") for a in outcome.witness)

    def test_stats_populated(self, psc):
        outcome = answer(parse_query("sc(c)?"), psc, "brave", "off")
        assert outcome.stats.ground_rules >= 1
        assert outcome.stats.time_ground >= 0.0
        assert outcome.stats.time_search >= 0.0

    def test_timeout_interrupts(self):
        case = gen_simple_path(8)
        with pytest.raises(Interrupted):
            answer(case.query, case.program, "brave", "off", timeout=0.05)


class TestMagicPruning:
    def test_ground_size_shrinks_on_guarded_families(self):
        # at tiny sizes the rewriting's fixed overhead can dominate; the
        # advantage is asymptotic, so measure where it has set in
        for case in (gen_simple_path(4), gen_related(8)):
            stats_off = SearchStats()
            stats_dms = SearchStats()
            try:
                answer(case.query, case.program, "brave", "off", timeout=20, stats=stats_off)
            except Interrupted:
                pass
            try:
                answer(case.query, case.program, "brave", "on", timeout=20, stats=stats_dms)
            except Interrupted:
                pass
            assert 0 < stats_dms.ground_rules < stats_off.ground_rules
