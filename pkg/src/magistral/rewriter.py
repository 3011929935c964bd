"""Dynamic magic-set rewriting for disjunctive programs with stratified
negation, plus the diagnostic constructions used by the test suite (magic
variants of interpretations and killed-atom sets).

The rewriting simulates a top-down evaluation of the query: adorned
predicates describe call patterns, magic rules derive which calls are
relevant, and every original rule is kept (unadorned) with one magic guard
per head atom.  Because magic predicates can be defined through disjunctive
rules, their extension may differ between stable models, which lets the
model search prune dynamically.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import PreconditionFailed, ValidationError
from .oracle import (
    DEFAULT_MAX_GROUND_RULES,
    Interpretation,
    base_atoms,
    full_ground,
    is_model,
    reduct,
)
from .syntax import (
    Atom,
    Constant,
    Literal,
    PredicateKind,
    Program,
    Query,
    Rule,
    classify_predicates,
    normalize_query,
    pos,
)
from .sips import (
    HEAD,
    NEG,
    Adornment,
    AtomOcc,
    Sips,
    check_adornment,
    compute_adornment,
    default_sips,
    rule_occurrences,
)

MAGIC_PREFIX = "magic__"
ADORNMENT_SEP = "__"


@dataclass(frozen=True)
class AdornedPredicate:
    predicate: str
    adornment: Adornment

    @property
    def magic_name(self) -> str:
        if self.adornment:
            return f"{MAGIC_PREFIX}{self.predicate}{ADORNMENT_SEP}{self.adornment}"
        return f"{MAGIC_PREFIX}{self.predicate}"

    @property
    def adorned_name(self) -> str:
        if self.adornment:
            return f"{self.predicate}{ADORNMENT_SEP}{self.adornment}"
        return self.predicate

    def __str__(self) -> str:
        return self.adorned_name


def magic_atom(ap: AdornedPredicate, args: tuple) -> Atom:
    """The magic version: only the arguments at bound positions survive."""
    bound = tuple(t for t, letter in zip(args, ap.adornment) if letter == "b")
    return Atom(ap.magic_name, bound)


@dataclass(frozen=True)
class AdornedRule:
    """A rule together with the adornments computed for its IDB occurrences.
    Head occurrences are listed with the propagated one first; that order is
    also the order of the magic guards in the modified rule."""

    rule: Rule
    sips: Sips
    head_order: tuple[AtomOcc, ...]
    adornments: tuple[tuple[AtomOcc, AdornedPredicate], ...]

    def adornment_of(self, occ: AtomOcc) -> AdornedPredicate | None:
        for o, ap in self.adornments:
            if o == occ:
                return ap
        return None

    def __str__(self) -> str:
        adorned = dict(self.adornments)

        def show(occ: AtomOcc) -> str:
            ap = adorned.get(occ)
            name = ap.adorned_name if ap else occ.atom.predicate
            shown = Atom(name, occ.atom.args)
            return str(shown)

        head = " v ".join(show(o) for o in self.head_order)
        body_occs = [o for o in rule_occurrences(self.rule) if o.section != HEAD]
        body_occs.sort(key=lambda o: o.index)
        parts = []
        for occ in body_occs:
            text = show(occ)
            parts.append(f"not {text}" if occ.section == NEG else text)
        return f"{head} :- {', '.join(parts)}." if parts else f"{head}."


@dataclass(frozen=True)
class RewriteOutput:
    """The rewritten program: seed + magic rules + modified rules, to be
    joined with the untouched extensional part."""

    query_atom: Atom
    seed: Rule
    seed_predicate: AdornedPredicate
    magic_rules: tuple[Rule, ...]
    modified_rules: tuple[Rule, ...]
    edb_rules: tuple[Rule, ...]
    magic_map: tuple[tuple[str, AdornedPredicate], ...]

    def magic_predicates(self) -> dict[str, AdornedPredicate]:
        return dict(self.magic_map)

    def program(self) -> Program:
        rules = (self.seed, *self.magic_rules, *self.modified_rules, *self.edb_rules)
        return Program.create(rules, Query((self.query_atom,)))


def build_query_seed(query: Query) -> tuple[Rule, AdornedPredicate]:
    """Adorn the query atom (b per constant, f per variable) and produce the
    magic fact over its bound arguments."""
    if len(query.atoms) != 1:
        raise ValidationError("the query must be folded to a single atom first")
    atom = query.atoms[0]
    adornment = "".join("b" if isinstance(t, Constant) else "f" for t in atom.args)
    ap = AdornedPredicate(atom.predicate, adornment)
    return Rule((magic_atom(ap, atom.args),)), ap


def adorn_rule(
    rule: Rule,
    head: Atom,
    ap: AdornedPredicate,
    pending: deque[AdornedPredicate],
    done: set[AdornedPredicate],
    kinds: dict[str, PredicateKind],
) -> AdornedRule:
    """Propagate `ap`'s binding through `rule` starting at `head`; newly seen
    adorned predicates are queued on `pending`."""
    if head.predicate != ap.predicate:
        raise ValidationError("adorned predicate does not match the head atom")
    check_adornment(ap.adornment, head.arity)
    sips = default_sips(rule, head, ap.adornment)
    adorned: list[tuple[AtomOcc, AdornedPredicate]] = []
    for occ in rule_occurrences(rule):
        if kinds.get(occ.atom.predicate) is not PredicateKind.IDB:
            continue
        if occ == sips.head_occ:
            # The propagated occurrence keeps the call pattern it was reached
            # with; recomputing it (constants or repeated head variables) would
            # guard the modified rule with a magic atom nothing derives.
            adorned.append((occ, ap))
            continue
        occ_ap = AdornedPredicate(occ.atom.predicate, compute_adornment(occ, sips))
        adorned.append((occ, occ_ap))
        if occ_ap not in done and occ_ap not in pending:
            pending.append(occ_ap)
    head_occs = [o for o in rule_occurrences(rule) if o.section == HEAD]
    propagated = sips.head_occ
    head_order = (propagated, *(o for o in head_occs if o != propagated))
    return AdornedRule(rule, sips, head_order, tuple(adorned))


def generate_magic_rules(adorned: AdornedRule) -> list[Rule]:
    """One magic rule per adorned occurrence other than the propagated head
    atom: its magic version is derived from the head's magic atom plus the
    positive body atoms that precede the occurrence."""
    sips = adorned.sips
    head_occ = sips.head_occ
    head_ap = adorned.adornment_of(head_occ)
    assert head_ap is not None
    guard = magic_atom(head_ap, head_occ.atom.args)
    out: list[Rule] = []
    for occ, occ_ap in adorned.adornments:
        if occ == head_occ:
            continue
        body: list[Literal] = [pos(guard)]
        body += [pos(p.atom) for p in sips.providers(occ)]
        out.append(Rule.create((magic_atom(occ_ap, occ.atom.args),), body))
    return out


def modify_rule(adorned: AdornedRule) -> Rule:
    """The original rule with one magic guard per head atom; standard atoms
    keep their original predicates."""
    guards: list[Literal] = []
    for occ in adorned.head_order:
        ap = adorned.adornment_of(occ)
        assert ap is not None, "head atoms of processed rules are IDB"
        guards.append(pos(magic_atom(ap, occ.atom.args)))
    head = tuple(occ.atom for occ in adorned.head_order)
    return Rule.create(head, (*guards, *adorned.rule.body))


def dms(query: Query, program: Program) -> RewriteOutput:
    """The full rewriting: fold/repair the query, then run the adorn /
    generate / modify loop to fixpoint over a FIFO queue of adorned
    predicates."""
    normalized, goal = normalize_query(program, query)
    return rewrite(normalized, goal)


def rewrite(program: Program, goal: Atom) -> RewriteOutput:
    """The rewriting loop for an already-normalized program and query atom."""
    kinds = classify_predicates(program)
    seed, seed_ap = build_query_seed(Query((goal,)))

    idb_rules = [
        r for r in program.rules
        if any(kinds.get(a.predicate) is PredicateKind.IDB for a in r.head)
    ]
    edb_rules = tuple(r for r in program.rules if r not in idb_rules)

    pending: deque[AdornedPredicate] = deque()
    done: set[AdornedPredicate] = set()
    if kinds.get(seed_ap.predicate) is PredicateKind.IDB:
        pending.append(seed_ap)
    magic_rules: dict[Rule, None] = {}
    modified_rules: dict[Rule, None] = {}
    magic_map: dict[str, AdornedPredicate] = {seed_ap.magic_name: seed_ap}

    while pending:
        ap = pending.popleft()
        done.add(ap)
        magic_map.setdefault(ap.magic_name, ap)
        for rule in idb_rules:
            for head in rule.head:
                if head.predicate != ap.predicate:
                    continue
                adorned = adorn_rule(rule, head, ap, pending, done, kinds)
                for m in generate_magic_rules(adorned):
                    magic_rules.setdefault(m, None)
                modified_rules.setdefault(modify_rule(adorned), None)

    for ap in done:
        magic_map.setdefault(ap.magic_name, ap)
    for rule in magic_rules:
        assert not rule.body_neg, "magic rules must have empty negative bodies"

    return RewriteOutput(
        query_atom=goal,
        seed=seed,
        seed_predicate=seed_ap,
        magic_rules=tuple(magic_rules),
        modified_rules=tuple(modified_rules),
        edb_rules=edb_rules,
        magic_map=tuple(sorted(magic_map.items())),
    )


def magic_variant_stages(
    interp: Interpretation,
    query: Query,
    program: Program,
    *,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> list[Interpretation]:
    """The closure sequence that lifts an interpretation of the original
    program to one of the rewritten program: start from the extensional
    facts; repeatedly import atoms of `interp` whose magic version is already
    present and fire ground magic rules whose bodies hold."""
    normalized, goal = normalize_query(program, query)
    out = rewrite(normalized, goal)
    magic_preds = out.magic_predicates()
    kinds = classify_predicates(normalized)
    edb_atoms = frozenset(
        r.head[0] for r in normalized.rules
        if r.is_fact and kinds.get(r.head[0].predicate) is PredicateKind.EDB
    )

    magic_ground = [
        r
        for r in full_ground(out.program(), max_rules=max_rules)
        if r.head[0].predicate in magic_preds and len(r.head) == 1
    ]

    by_predicate: dict[str, list[Atom]] = {}
    for atom in interp:
        by_predicate.setdefault(atom.predicate, []).append(atom)

    stages = [frozenset(edb_atoms)]
    current = set(edb_atoms)
    while True:
        imported: set[Atom] = set()
        for atom in current:
            ap = magic_preds.get(atom.predicate)
            if ap is None:
                continue
            for candidate in by_predicate.get(ap.predicate, ()):
                if magic_atom(ap, candidate.args) == atom:
                    imported.add(candidate)
        fired = {
            r.head[0]
            for r in magic_ground
            if all(a in current for a in r.body_pos)
        }
        nxt = current | imported | fired
        if nxt == current:
            break
        stages.append(frozenset(nxt))
        current = nxt
    return stages


def magic_variant(
    interp: Interpretation,
    query: Query,
    program: Program,
    *,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> Interpretation:
    return magic_variant_stages(interp, query, program, max_rules=max_rules)[-1]


def killed_set(
    m_prime: Interpretation,
    n_prime: Interpretation,
    query: Query,
    program: Program,
    *,
    max_rules: int = DEFAULT_MAX_GROUND_RULES,
) -> frozenset[Atom]:
    """Atoms of the original base that are false in `n_prime` yet query
    relevant: extensional atoms, and atoms with a true magic counterpart."""
    normalized, goal = normalize_query(program, query)
    out = rewrite(normalized, goal)
    ground = full_ground(out.program(), max_rules=max_rules)
    if not is_model(m_prime, ground):
        raise PreconditionFailed("the first interpretation is not a model of the rewriting")
    if not n_prime <= m_prime:
        raise PreconditionFailed("the second interpretation must be contained in the first")
    if not is_model(n_prime, reduct(ground, m_prime)):
        raise PreconditionFailed("the second interpretation is not a model of the reduct")

    magic_preds = out.magic_predicates()
    kinds = classify_predicates(normalized)
    magic_true: set[tuple[str, str, tuple]] = set()
    for atom in n_prime:
        ap = magic_preds.get(atom.predicate)
        if ap is not None:
            magic_true.add((ap.predicate, ap.adornment, atom.args))

    killed: set[Atom] = set()
    for atom in base_atoms(normalized):
        if atom in n_prime:
            continue
        if kinds.get(atom.predicate) is PredicateKind.EDB:
            killed.add(atom)
            continue
        for pred, adornment, bound_args in magic_true:
            if pred != atom.predicate:
                continue
            projected = tuple(
                t for t, letter in zip(atom.args, adornment) if letter == "b"
            )
            if projected == bound_args:
                killed.add(atom)
                break
    return frozenset(killed)
