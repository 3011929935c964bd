"""Reference semantics, deliberately naive.

Everything here trades speed for obvious correctness: grounding enumerates
every substitution, stable models are found by exhaustive candidate
enumeration plus an explicit subset-minimality check.  These functions are
the oracle the practical solver is tested against; capacity caps keep them
desk-scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .errors import CapacityExceeded, ValidationError
from .syntax import (
    Atom,
    Constant,
    Literal,
    PredicateKind,
    Program,
    Query,
    Rule,
    Substitution,
    classify_predicates,
    eval_builtin,
    normalize_query,
    program_universe,
)

DEFAULT_MAX_GROUND_RULES = 50_000
DEFAULT_MAX_CANDIDATE_ATOMS = 24

Interpretation = frozenset[Atom]


@dataclass(frozen=True)
class GroundProgram:
    rules: frozenset[Rule]

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class PartialInterpretation:
    """Atoms in `true` hold, atoms outside `not_false` are false, the rest
    are undefined."""

    true: frozenset[Atom]
    not_false: frozenset[Atom]

    def __post_init__(self) -> None:
        if not self.true <= self.not_false:
            raise ValidationError("true atoms must be a subset of the not-false atoms")


@dataclass(frozen=True)
class AnswerSet:
    mode: str  # "brave" | "cautious"
    variables: tuple[str, ...]
    substitutions: frozenset[Substitution]

    @property
    def is_true(self) -> bool:
        return bool(self.substitutions)


def ground_builtins(rule: Rule) -> Rule | None:
    """Evaluate the (ground) builtin atoms of a ground rule; None when some
    builtin is false (the instance can never fire)."""
    kept: list[Literal] = []
    for lit in rule.body:
        atom = lit.atom
        if atom.is_builtin:
            left, right = atom.args
            assert isinstance(left, Constant) and isinstance(right, Constant)
            if not eval_builtin(atom.predicate, left, right):
                return None
        else:
            kept.append(lit)
    return Rule.create(rule.head, kept)


def full_ground(program: Program, *, max_rules: int = DEFAULT_MAX_GROUND_RULES) -> GroundProgram:
    """Every instance of every rule over the program's universe, builtins
    evaluated away."""
    universe = program_universe(program)
    out: set[Rule] = set()
    for rule in program.rules:
        variables = rule.variables()
        for combo in product(universe, repeat=len(variables)):
            theta = dict(zip(variables, combo))
            grounded = ground_builtins(rule.substitute(theta))
            if grounded is not None:
                out.add(grounded)
                if len(out) > max_rules:
                    raise CapacityExceeded(
                        f"grounding exceeds {max_rules} rules; the oracle is desk-scale only"
                    )
    return GroundProgram(frozenset(out))


def reduct(ground: GroundProgram, interp: Interpretation) -> GroundProgram:
    """Drop rules whose negative body intersects the interpretation, strip
    negative literals from the rest."""
    out: set[Rule] = set()
    for rule in ground:
        if any(a in interp for a in rule.body_neg):
            continue
        out.add(Rule.create(rule.head, (l for l in rule.body if not l.negated)))
    return GroundProgram(frozenset(out))


def is_model(interp: Interpretation, ground: GroundProgram) -> bool:
    for rule in ground:
        body_true = all(a in interp for a in rule.body_pos) and not any(
            a in interp for a in rule.body_neg
        )
        if body_true and not any(a in interp for a in rule.head):
            return False
    return True


def derivable_upper_bound(ground: GroundProgram) -> frozenset[Atom]:
    """Least fixpoint treating every head atom of a firing rule as derivable
    and ignoring negative literals.  Every stable model is a subset of it."""
    possible: set[Atom] = set()
    changed = True
    pending = list(ground)
    while changed:
        changed = False
        remaining = []
        for rule in pending:
            if all(a in possible for a in rule.body_pos):
                possible.update(rule.head)
                changed = True
            else:
                remaining.append(rule)
        pending = remaining
    return frozenset(possible)


class _Masked:
    """Candidate-space bitmask view of a ground program.

    Facts hold in every candidate interpretation and atoms outside the
    positive upper bound are false in every stable model, so both are folded
    away: what remains is a set of candidate atoms (one bit each) and rules
    whose literals refer to candidates only."""

    def __init__(self, ground: GroundProgram, max_candidates: int):
        possible = derivable_upper_bound(ground)
        facts = {r.head[0] for r in ground if not r.body and len(r.head) == 1}
        head_atoms: dict[Atom, None] = {}
        for rule in ground:
            if all(a in possible for a in rule.body_pos):
                for a in rule.head:
                    head_atoms.setdefault(a, None)
        self.facts = facts
        self.candidates = [a for a in head_atoms if a not in facts]
        if len(self.candidates) > max_candidates:
            raise CapacityExceeded(
                f"{len(self.candidates)} candidate atoms exceed the cap of {max_candidates}"
            )
        bit = {a: 1 << i for i, a in enumerate(self.candidates)}
        self.n_candidates = len(self.candidates)
        self.rules: list[tuple[int, int, int]] = []
        seen_rules: set[tuple[int, int, int]] = set()
        for rule in ground:
            if not all(a in possible for a in rule.body_pos):
                continue  # the body can never become true
            if any(a in facts for a in rule.head):
                continue  # satisfied in every candidate interpretation
            if any(a in facts for a in rule.body_neg):
                continue  # deleted from every reduct
            head = pos = neg = 0
            for a in rule.head:
                head |= bit[a]
            for a in rule.body_pos:
                if a not in facts:
                    pos |= bit[a]
            for a in rule.body_neg:
                neg |= bit.get(a, 0)  # underivable negative atoms are true
            key = (head, pos, neg)
            if key not in seen_rules:
                seen_rules.add(key)
                self.rules.append(key)

    def stable_masks(self) -> list[int]:
        """Candidate masks that are models of their own reduct, minimality
        not yet checked."""
        n = self.n_candidates
        if _numpy is not None and n > 16:
            return self._stable_masks_vectorized()
        out = []
        rules = self.rules
        for mask in range(1 << n):
            ok = True
            for head, pos_body, neg_body in rules:
                if neg_body & mask:
                    continue  # deleted by the reduct
                if pos_body & mask == pos_body and not head & mask:
                    ok = False
                    break
            if ok:
                out.append(mask)
        return out

    def _stable_masks_vectorized(self) -> list[int]:
        np = _numpy
        out: list[int] = []
        total = 1 << self.n_candidates
        chunk = 1 << 22
        for start in range(0, total, chunk):
            stop = min(start + chunk, total)
            masks = np.arange(start, stop, dtype=np.uint32)
            alive = np.ones(stop - start, dtype=bool)
            for head, pos_body, neg_body in self.rules:
                violated = (
                    ((masks & np.uint32(neg_body)) == 0)
                    & ((masks & np.uint32(pos_body)) == np.uint32(pos_body))
                    & ((masks & np.uint32(head)) == 0)
                )
                alive &= ~violated
            out.extend(int(m) for m in masks[alive])
        return out

    def is_minimal(self, mask: int) -> bool:
        """No proper subset (facts pinned) models the reduct of `mask`."""
        if mask == 0:
            return True
        reduct_rules = [(h, p) for h, p, n in self.rules if not n & mask]
        sub = (mask - 1) & mask
        while True:
            smaller_model = True
            for h, p in reduct_rules:
                if p & sub == p and not h & sub:
                    smaller_model = False
                    break
            if smaller_model:
                return False
            if sub == 0:
                break
            sub = (sub - 1) & mask
        return True

    def to_interpretation(self, mask: int) -> Interpretation:
        atoms = set(self.facts)
        for i, a in enumerate(self.candidates):
            if mask >> i & 1:
                atoms.add(a)
        return frozenset(atoms)


try:
    import numpy as _numpy
except ImportError:  # pragma: no cover
    _numpy = None


def enumerate_stable_models(
    program: Program,
    *,
    max_candidates: int = DEFAULT_MAX_CANDIDATE_ATOMS,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> frozenset[Interpretation]:
    """All subset-minimal models of the reduct, by brute force."""
    ground = full_ground(program, max_rules=max_rules)
    masked = _Masked(ground, max_candidates)
    return frozenset(
        masked.to_interpretation(mask)
        for mask in masked.stable_masks()
        if masked.is_minimal(mask)
    )


def is_unfounded_set(
    atoms: frozenset[Atom] | set[Atom],
    partial: PartialInterpretation,
    program: Program,
    *,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> bool:
    """Check the four escape conditions on every ground rule whose head meets
    the candidate set.

    Instances whose positive body mentions an extensional atom that is not a
    fact are skipped: extensional atoms are never derived, so such instances
    cannot fire in any stable model (the convention the worked examples use
    when listing ground programs)."""
    x = frozenset(atoms)
    true, not_false = partial.true, partial.not_false
    kinds = classify_predicates(program)
    edb_facts = program.edb_facts()

    def never_fires(rule: Rule) -> bool:
        return any(
            kinds.get(a.predicate) is PredicateKind.EDB and a not in edb_facts
            for a in rule.body_pos
        )

    for rule in full_ground(program, max_rules=max_rules):
        if not x & set(rule.head):
            continue
        if never_fires(rule):
            continue
        if not set(rule.body_pos) <= not_false:
            continue  # (1.a) body cannot become true
        if set(rule.body_neg) & true:
            continue  # (1.b) a negative literal is already false
        if set(rule.body_pos) & x:
            continue  # (2) support would come from the set itself
        if set(rule.head) & (true - x):
            continue  # (3) satisfied by a true head atom outside the set
        return False
    return True


def match_atom(pattern: Atom, atom: Atom) -> dict[str, Constant] | None:
    if pattern.predicate != atom.predicate or pattern.arity != atom.arity:
        return None
    theta: dict[str, Constant] = {}
    for p, a in zip(pattern.args, atom.args):
        assert isinstance(a, Constant)
        if isinstance(p, Constant):
            if p != a:
                return None
        else:
            bound = theta.get(p.name)
            if bound is None:
                theta[p.name] = a
            elif bound != a:
                return None
    return theta


def matching_substitutions(pattern: Atom, interp: Interpretation) -> set[Substitution]:
    out = set()
    for atom in interp:
        theta = match_atom(pattern, atom)
        if theta is not None:
            out.add(Substitution.of(theta))
    return out


def answer_query(
    query: Query,
    program: Program,
    mode: str,
    *,
    max_candidates: int = DEFAULT_MAX_CANDIDATE_ATOMS,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> AnswerSet:
    """Brave or cautious answers computed from the full stable-model set."""
    if mode not in ("brave", "cautious"):
        raise ValidationError(f"unknown reasoning mode '{mode}'")
    normalized, goal = normalize_query(program, query)
    models = enumerate_stable_models(
        normalized, max_candidates=max_candidates, max_rules=max_rules
    )
    per_model = [matching_substitutions(goal, m) for m in models]
    if not per_model:
        raise ValidationError("program has no stable model")
    if mode == "brave":
        subs = set().union(*per_model)
    else:
        subs = set.intersection(*per_model)
    return AnswerSet(mode, goal.variables(), frozenset(subs))


def base_atoms(program: Program, *, max_atoms: int = 200_000) -> frozenset[Atom]:
    """The full base: every ground atom over the program's predicates and
    universe."""
    universe = program_universe(program)
    kinds = classify_predicates(program)
    out: set[Atom] = set()
    total = 0
    for pred, arity in program.predicates().items():
        if kinds.get(pred) is PredicateKind.BUILTIN:
            continue
        total += len(universe) ** arity
        if total > max_atoms:
            raise CapacityExceeded(f"base larger than {max_atoms} atoms")
        for combo in product(universe, repeat=arity):
            out.add(Atom(pred, combo))
    return frozenset(out)
