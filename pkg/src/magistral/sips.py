"""Sideways information passing.

A strategy is built per (rule, head atom, adornment): the head atom precedes
every other atom occurrence; positive non-builtin body atoms are processed in
a greedy chain (most bound argument positions first, ties by body order); an
atom passes bindings only when at least one of its arguments is already
bound, and then it binds exactly its not-yet-bound variables.  Other head
atoms and negative body atoms come last: they receive every binding and
provide none.  Builtins take no part at all.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .syntax import Atom, Constant, Rule

Adornment = str  # a string over the alphabet {'b', 'f'}

HEAD = "head"
POS = "pos"
NEG = "neg"


def check_adornment(adornment: str, arity: int) -> None:
    if len(adornment) != arity or any(c not in "bf" for c in adornment):
        raise ValidationError(f"adornment '{adornment}' does not fit arity {arity}")


@dataclass(frozen=True)
class AtomOcc:
    """One atom occurrence inside a rule (section plus position)."""

    section: str
    index: int
    atom: Atom


def rule_occurrences(rule: Rule) -> list[AtomOcc]:
    occs = [AtomOcc(HEAD, i, a) for i, a in enumerate(rule.head)]
    occs += [AtomOcc(POS, i, l.atom) for i, l in enumerate(rule.body) if not l.negated]
    occs += [AtomOcc(NEG, i, l.atom) for i, l in enumerate(rule.body) if l.negated]
    return occs


@dataclass(frozen=True)
class Sips:
    rule: Rule
    head_occ: AtomOcc
    adornment: Adornment
    chain: tuple[AtomOcc, ...]
    bind_items: tuple[tuple[AtomOcc, frozenset[str]], ...]

    def __post_init__(self) -> None:
        # structural guarantees of a valid strategy
        assert self.head_occ.section == HEAD
        for occ, bound in self.bind_items:
            assert bound <= set(occ.atom.variables())
            if occ != self.head_occ and occ.section != POS:
                assert not bound, "only the head and positive body atoms may bind"

    @property
    def binds(self) -> dict[AtomOcc, frozenset[str]]:
        return dict(self.bind_items)

    def provides(self, occ: AtomOcc) -> bool:
        """Whether `occ` can pass bindings to atoms processed after it."""
        return bool(self.binds.get(occ))

    def providers(self, target: AtomOcc) -> tuple[AtomOcc, ...]:
        """Positive body occurrences that precede `target`, in chain order.

        A chain atom precedes `target` when its bindings flow into it: it
        binds a variable of `target`, or of another provider in between (the
        transitive closure keeps the order transitive).  Atoms whose bindings
        never reach the target stay incomparable to it, so magic rules do not
        drag along join partners the call pattern does not need."""
        if target == self.head_occ:
            return ()
        prefix = [c for c in self.chain if c != target]
        if target in self.chain:
            prefix = self.chain[: self.chain.index(target)]
        binds = self.binds
        needed = set(target.atom.variables())
        chosen: list[AtomOcc] = []
        for occ in reversed(prefix):
            if binds[occ] & needed:
                chosen.append(occ)
                needed |= set(occ.atom.variables())
        chosen.reverse()
        return tuple(chosen)

    def precedes(self, first: AtomOcc, second: AtomOcc) -> bool:
        """The strict partial order over atom occurrences."""
        if first == second:
            return False
        if first == self.head_occ:
            return True
        if second == self.head_occ:
            return False
        return first in self.providers(second)

    def bound_before(self, target: AtomOcc) -> frozenset[str]:
        bound = set(self.binds[self.head_occ])
        for provider in self.providers(target):
            bound |= self.binds[provider]
        return frozenset(bound)


def default_sips(rule: Rule, head: Atom, adornment: Adornment) -> Sips:
    """The engine's built-in strategy (see the module docstring)."""
    check_adornment(adornment, head.arity)
    occs = rule_occurrences(rule)
    head_occ = next((o for o in occs if o.section == HEAD and o.atom == head), None)
    if head_occ is None:
        raise ValidationError(f"atom {head} is not a head atom of: {rule}")

    head_binds = frozenset(
        t.name
        for t, letter in zip(head.args, adornment)
        if letter == "b" and not isinstance(t, Constant)
    )
    binds: dict[AtomOcc, frozenset[str]] = {o: frozenset() for o in occs}
    binds[head_occ] = head_binds

    bound = set(head_binds)
    remaining = [o for o in occs if o.section == POS and not o.atom.is_builtin]
    chain: list[AtomOcc] = []
    while remaining:
        def score(occ: AtomOcc) -> int:
            return sum(
                1
                for t in occ.atom.args
                if isinstance(t, Constant) or t.name in bound
            )

        best = max(remaining, key=lambda o: (score(o), -o.index))
        remaining.remove(best)
        chain.append(best)
        if score(best) > 0:
            newly = frozenset(
                t.name
                for t in best.atom.args
                if not isinstance(t, Constant) and t.name not in bound
            )
            binds[best] = newly
            bound |= newly

    return Sips(rule, head_occ, adornment, tuple(chain), tuple(binds.items()))


def compute_adornment(target: AtomOcc | Atom, sips: Sips) -> Adornment:
    """Adorn one atom occurrence: an argument is bound when it is a constant,
    a head variable bound by the head adornment, or a variable provided by a
    positive body atom processed earlier."""
    occ = _resolve(target, sips)
    if occ == sips.head_occ:
        bound_vars = sips.binds[sips.head_occ]
    else:
        bound_vars = sips.bound_before(occ)
    return "".join(
        "b" if isinstance(t, Constant) or t.name in bound_vars else "f"
        for t in occ.atom.args
    )


def _resolve(target: AtomOcc | Atom, sips: Sips) -> AtomOcc:
    if isinstance(target, AtomOcc):
        return target
    for occ in rule_occurrences(sips.rule):
        if occ.atom == target:
            return occ
    raise ValidationError(f"atom {target} does not occur in: {sips.rule}")
