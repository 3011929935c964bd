"""Shared fixtures: the worked example programs and a seeded generator for
safe stratified disjunctive programs used by the property suites."""

from __future__ import annotations

import itertools
import random

import pytest

from magistral.errors import CapacityExceeded
from magistral.oracle import enumerate_stable_models, matching_substitutions
from magistral.parser import parse_program
from magistral.syntax import (
    Atom,
    Constant,
    Program,
    Query,
    Rule,
    Variable,
    neg,
    normalize_query,
    pos,
)

STRATEGIC_EXAMPLE = """\
sc(C1) v sc(C2) :- produced_by(P,C1,C2).
sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).
produced_by(p,c,c1).
"""

STRATEGIC_NEGATION_EXAMPLE = """\
sc(C1) v sc(C2) :- produced_by(P,C1,C2).
sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).
nsc(C) :- company(C), not sc(C).
company(c).
produced_by(p,c,c1).
"""

PATH_EXAMPLE = """\
path(X,Y) :- edge(X,Y).
path(X,Y) :- edge(X,Z), path(Z,Y).
edge(1,3).
edge(2,4).
edge(3,5).
"""


@pytest.fixture
def psc() -> Program:
    return parse_program(STRATEGIC_EXAMPLE)


@pytest.fixture
def pnsc() -> Program:
    return parse_program(STRATEGIC_NEGATION_EXAMPLE)


@pytest.fixture
def path_program() -> Program:
    return parse_program(PATH_EXAMPLE)


def atom(text: str) -> Atom:
    """Parse a single ground-or-nonground atom (magic names allowed, no
    safety gate)."""
    from magistral.parser import _Parser, _tokenize

    parser = _Parser(_tokenize(text.strip() + "?"), allow_magic=True)
    while parser.peek().kind != "eof":
        parser.statement()
    assert parser.query is not None
    return parser.query.atoms[0]


def rules_of(text: str) -> set[Rule]:
    return set(parse_program(text, allow_magic=True).rules)


CONSTANT_POOL = [Constant("a"), Constant("b"), Constant("c")]
VARIABLE_POOL = [Variable("X"), Variable("Y"), Variable("Z")]


def random_program(
    rng: random.Random, *, max_constants: int = 3, disjunctive: bool = True
) -> Program:
    """A safe, stratified disjunctive program within the documented bounds:
    at most 4 rule-defined predicates of arity <= 2, at most 3 constants,
    at most 7 rules, at most 2 head atoms.  Negation only refers to strictly
    lower strata, so the result is stratified by construction."""
    consts = CONSTANT_POOL[: rng.randint(1, max_constants)]
    edb = [(f"e{i}", rng.randint(0, 2)) for i in range(rng.randint(1, 2))]
    idb = [
        (f"p{i}", rng.choice((0, 1, 1, 2)), rng.randint(0, 2))
        for i in range(rng.randint(1, 4))
    ]
    rules: list[Rule] = []
    for name, arity in edb:
        combos = list(itertools.product(consts, repeat=arity))
        rng.shuffle(combos)
        for combo in combos[: rng.randint(0, len(combos))]:
            rules.append(Rule.create((Atom(name, combo),)))

    def random_atom(pool, variables):
        name, arity = rng.choice(pool)
        args = tuple(
            rng.choice(variables) if variables and rng.random() < 0.7 else rng.choice(consts)
            for _ in range(arity)
        )
        return Atom(name, args)

    for _ in range(rng.randint(1, 7)):
        level = rng.randint(0, 2)
        head_pool = [(n, a) for n, a, l in idb if l == level]
        if not head_pool:
            continue
        variables = VARIABLE_POOL[: rng.randint(1, 3)]
        body = []
        positive_pool = edb + [(n, a) for n, a, l in idb if l <= level]
        for _ in range(rng.randint(1, 3)):
            body.append(pos(random_atom(positive_pool, variables)))
        negative_pool = edb + [(n, a) for n, a, l in idb if l < level]
        if negative_pool and rng.random() < 0.4:
            body.append(neg(random_atom(negative_pool, variables)))
        n_heads = rng.randint(1, 2) if disjunctive else 1
        head = tuple(
            dict.fromkeys(random_atom(head_pool, variables) for _ in range(n_heads))
        )
        covered = {
            v for lit in body if not lit.negated for v in lit.atom.variables()
        }
        everywhere = {v for a in head for v in a.variables()} | {
            v for lit in body for v in lit.atom.variables()
        }
        unsafe = everywhere - covered
        if unsafe:
            theta = {v: rng.choice(consts) for v in unsafe}
            head = tuple(dict.fromkeys(a.substitute(theta) for a in head))
            body = [l.substitute(theta) for l in body]
        rules.append(Rule.create(head, body))
    if not rules:
        rules.append(Rule.create((Atom("e0", ()),)))
    return Program.create(rules)


def random_query(rng: random.Random, program: Program, *, fresh_constant: bool = False) -> Query:
    """A partially bound single-atom query over the program's predicates."""
    name, arity = rng.choice(list(program.predicates().items()))
    consts = list(program.constants()) or [Constant("a")]
    if fresh_constant:
        consts = consts + [Constant("zz")]
    args = []
    for i in range(arity):
        if rng.random() < 0.5:
            args.append(rng.choice(consts))
        else:
            args.append(Variable(f"Q{i}"))
    return Query((Atom(name, tuple(args)),))


def oracle_answers(query: Query, program: Program, *, max_candidates: int = 15):
    """(brave, cautious) substitution sets from one model enumeration.
    Raises CapacityExceeded for instances beyond desk scale."""
    normalized, goal = normalize_query(program, query)
    models = enumerate_stable_models(normalized, max_candidates=max_candidates)
    assert models, "stratified disjunctive programs always have a stable model"
    per_model = [matching_substitutions(goal, m) for m in models]
    brave = frozenset(set().union(*per_model))
    cautious = frozenset(set.intersection(*per_model))
    return brave, cautious


def generate_checked_case(
    rng: random.Random, *, max_candidates: int = 15, fresh_constant_rate: float = 0.1
):
    """A (program, query) pair small enough for oracle enumeration."""
    while True:
        program = random_program(rng)
        query = random_query(
            rng, program, fresh_constant=rng.random() < fresh_constant_rate
        )
        try:
            brave, cautious = oracle_answers(query, program, max_candidates=max_candidates)
        except CapacityExceeded:
            continue
        return program, query, brave, cautious
