"""Redundant-rule elimination by subsumption.

A rule is subsumed when some substitution maps another rule's head into its
head and that rule's body into its body, literal polarity respected.  The
greedy checker is sound but incomplete (no backtracking); the exact checker
is complete and serves as its oracle at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CapacityExceeded
from .syntax import Atom, Constant, Program, Rule, Term

DEFAULT_MAX_VARIABLES = 12

HEAD = "head"
POS = "pos"
NEG = "neg"


@dataclass(frozen=True)
class SubsumptionWitness:
    """A substitution from the subsuming rule's variables to terms of the
    subsumed rule, validated on construction."""

    theta: tuple[tuple[str, Term], ...]

    def as_dict(self) -> dict[str, Term]:
        return dict(self.theta)


def _items(rule: Rule) -> list[tuple[str, Atom]]:
    out = [(HEAD, a) for a in rule.head]
    out += [(POS, l.atom) for l in rule.body if not l.negated]
    out += [(NEG, l.atom) for l in rule.body if l.negated]
    return out


def _targets(rule: Rule) -> dict[str, list[Atom]]:
    return {
        HEAD: list(rule.head),
        POS: [l.atom for l in rule.body if not l.negated],
        NEG: [l.atom for l in rule.body if l.negated],
    }


def _extend(theta: dict[str, Term], source: Atom, target: Atom) -> dict[str, Term] | None:
    if source.predicate != target.predicate or source.arity != target.arity:
        return None
    out = dict(theta)
    for s, t in zip(source.args, target.args):
        if isinstance(s, Constant):
            if s != t:
                return None
        else:
            bound = out.get(s.name)
            if bound is None:
                out[s.name] = t
            elif bound != t:
                return None
    return out


def _valid_witness(theta: dict[str, Term], subsumer: Rule, subsumed: Rule) -> bool:
    head = set(subsumed.head)
    pos_atoms = {l.atom for l in subsumed.body if not l.negated}
    neg_atoms = {l.atom for l in subsumed.body if l.negated}
    for atom in subsumer.head:
        if atom.substitute(theta) not in head:
            return False
    for lit in subsumer.body:
        image = lit.atom.substitute(theta)
        if image not in (neg_atoms if lit.negated else pos_atoms):
            return False
    return True


def subsumes_greedy(subsumer: Rule, subsumed: Rule) -> SubsumptionWitness | None:
    """Greedy matching: repeatedly pick the unmatched atom of the subsuming
    rule with the most unmatched variables, bind it to the first compatible
    atom, never backtrack.  A returned witness is always valid; None only
    means no witness was found."""
    items = _items(subsumer)
    targets = _targets(subsumed)
    theta: dict[str, Term] = {}
    section_rank = {HEAD: 0, POS: 1, NEG: 2}
    order = list(range(len(items)))

    while order:
        def unmatched_vars(i: int) -> int:
            return sum(1 for v in items[i][1].variables() if v not in theta)

        best = max(order, key=lambda i: (unmatched_vars(i), -section_rank[items[i][0]], -i))
        order.remove(best)
        section, atom = items[best]
        extended = None
        for target in targets[section]:
            extended = _extend(theta, atom, target)
            if extended is not None:
                break
        if extended is None:
            return None
        theta = extended

    if not _valid_witness(theta, subsumer, subsumed):
        return None
    return SubsumptionWitness(tuple(sorted(theta.items())))


def subsumes_exact(
    subsumer: Rule, subsumed: Rule, *, max_variables: int = DEFAULT_MAX_VARIABLES
) -> bool:
    """Complete subsumption decision by backtracking search."""
    n_vars = len(subsumer.variables()) + len(subsumed.variables())
    if n_vars > max_variables:
        raise CapacityExceeded(
            f"{n_vars} combined variables exceed the exact-matching cap of {max_variables}"
        )
    items = _items(subsumer)
    targets = _targets(subsumed)

    def search(i: int, theta: dict[str, Term]) -> bool:
        if i == len(items):
            return True
        section, atom = items[i]
        for target in targets[section]:
            extended = _extend(theta, atom, target)
            if extended is not None and search(i + 1, extended):
                return True
        return False

    return search(0, {})


def prune_redundant(program: Program, mode: str = "greedy") -> Program:
    """Single forward pass: a rule is dropped when an earlier retained rule
    subsumes it, so of two variants the earlier one wins."""
    if mode == "greedy":
        def check(subsumer: Rule, subsumed: Rule) -> bool:
            return subsumes_greedy(subsumer, subsumed) is not None
    elif mode == "exact":
        def check(subsumer: Rule, subsumed: Rule) -> bool:
            return subsumes_exact(subsumer, subsumed)
    else:
        raise ValueError(f"unknown subsumption mode '{mode}'")

    retained: list[Rule] = []
    for rule in program.rules:
        if any(check(kept, rule) for kept in retained):
            continue
        retained.append(rule)
    return Program.create(retained, program.query)
