"""Consistent query answering over a global schema with key and exclusion
dependencies.

The compiler turns declared dependencies plus GAV mapping rules into a
disjunctive repair program: conflicting tuples are nondeterministically
thrown out (`_out` relations), every surviving tuple is collected back, and
the stable models are exactly the repairs.  Consistent answers are then the
cautious consequences of the program over the source facts.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .errors import ValidationError
from .parser import parse_program
from .syntax import Atom, Constant, Program, Query, Rule, Variable, neg, pos

OUT_SUFFIX = "_out"
RETRIEVED_SUFFIX = "_D"

_RELATION_RE = re.compile(
    r"relation\s+(?P<name>[a-z][A-Za-z0-9_]*)\s*/\s*(?P<arity>\d+)"
    r"(?:\s+key\s+(?P<key>\d+(?:\s*,\s*\d+)*))?\s*\."
)
_KEY_RE = re.compile(
    r"key\s+(?P<name>[a-z][A-Za-z0-9_]*)\s+(?P<key>\d+(?:\s*,\s*\d+)*)\s*\."
)
_EXCLUDE_RE = re.compile(
    r"exclude\s+(?P<r>[a-z][A-Za-z0-9_]*)\s*\[(?P<rpos>\d+(?:\s*,\s*\d+)*)\]\s+"
    r"(?P<s>[a-z][A-Za-z0-9_]*)\s*\[(?P<spos>\d+(?:\s*,\s*\d+)*)\]\s*\."
)


@dataclass(frozen=True)
class GlobalSchema:
    relations: tuple[tuple[str, int], ...]
    keys: tuple[tuple[str, tuple[int, ...]], ...] = ()
    exclusions: tuple[tuple[str, tuple[int, ...], str, tuple[int, ...]], ...] = ()

    def arity(self, name: str) -> int:
        for rel, arity in self.relations:
            if rel == name:
                return arity
        raise ValidationError(f"relation '{name}' is not declared")

    def validate(self) -> None:
        names = [rel for rel, _ in self.relations]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate relation declaration")
        for rel, positions in self.keys:
            arity = self.arity(rel)
            if not positions:
                raise ValidationError(f"empty key on '{rel}'")
            if set(positions) == set(range(1, arity + 1)):
                raise ValidationError(f"key on '{rel}' must leave a non-key position")
            for p in positions:
                if not 1 <= p <= arity:
                    raise ValidationError(f"key position {p} outside arity of '{rel}'")
        for r, xs, s, ws in self.exclusions:
            if len(xs) != len(ws):
                raise ValidationError("exclusion position lists differ in length")
            for rel, positions in ((r, xs), (s, ws)):
                arity = self.arity(rel)
                for p in positions:
                    if not 1 <= p <= arity:
                        raise ValidationError(
                            f"exclusion position {p} outside arity of '{rel}'"
                        )


@dataclass(frozen=True)
class Mapping:
    """GAV mapping: one non-disjunctive positive rule per view over the
    sources, heads named `<relation>_D`."""

    rules: tuple[Rule, ...]

    def validate(self, schema: GlobalSchema) -> None:
        declared = {rel for rel, _ in schema.relations}
        for rule in self.rules:
            if len(rule.head) != 1 or rule.body_neg:
                raise ValidationError(f"mapping rules must be positive and single-headed: {rule}")
            head = rule.head[0]
            if not head.predicate.endswith(RETRIEVED_SUFFIX):
                raise ValidationError(
                    f"mapping heads must use the '{RETRIEVED_SUFFIX}' suffix: {rule}"
                )
            base = head.predicate[: -len(RETRIEVED_SUFFIX)]
            if base not in declared:
                raise ValidationError(f"mapping head '{head.predicate}' has no declared relation")
            if head.arity != schema.arity(base):
                raise ValidationError(f"mapping head arity mismatch for '{base}'")


def parse_schema(text: str) -> GlobalSchema:
    """The declaration format:  `relation r/3 key 1,2.`  plus optional extra
    `key r 1,3.` lines and `exclude r[1] s[1].` lines; '%' comments."""
    relations: list[tuple[str, int]] = []
    keys: list[tuple[str, tuple[int, ...]]] = []
    exclusions: list[tuple[str, tuple[int, ...], str, tuple[int, ...]]] = []
    for raw_line in text.splitlines():
        line = raw_line.split("%", 1)[0].strip()
        if not line:
            continue
        m = _RELATION_RE.fullmatch(line)
        if m:
            relations.append((m["name"], int(m["arity"])))
            if m["key"]:
                keys.append((m["name"], _positions(m["key"])))
            continue
        m = _KEY_RE.fullmatch(line)
        if m:
            keys.append((m["name"], _positions(m["key"])))
            continue
        m = _EXCLUDE_RE.fullmatch(line)
        if m:
            exclusions.append((m["r"], _positions(m["rpos"]), m["s"], _positions(m["spos"])))
            continue
        raise ValidationError(f"cannot parse schema line: {raw_line.strip()!r}")
    schema = GlobalSchema(tuple(relations), tuple(keys), tuple(exclusions))
    schema.validate()
    return schema


def _positions(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(" ", "").split(","))


def parse_mapping(text: str, schema: GlobalSchema) -> Mapping:
    program = parse_program(text)
    mapping = Mapping(program.rules)
    mapping.validate(schema)
    return mapping


def _key_args(key_positions: tuple[int, ...], arity: int, value_prefix: str) -> tuple:
    return tuple(
        Variable(f"X{p}") if p in key_positions else Variable(f"{value_prefix}{p}")
        for p in range(1, arity + 1)
    )


def encode_key_dependency(relation: str, key_positions: tuple[int, ...], arity: int) -> list[Rule]:
    """One disjunctive rule per non-key position: two retrieved tuples that
    agree on the key but differ there cannot both survive."""
    if not key_positions:
        raise ValidationError("empty key")
    key = tuple(sorted(set(key_positions)))
    non_key = [p for p in range(1, arity + 1) if p not in key]
    if not non_key:
        raise ValidationError("key covers every position")
    first = _key_args(key, arity, "Y")
    second = _key_args(key, arity, "Z")
    out: list[Rule] = []
    retrieved = relation + RETRIEVED_SUFFIX
    removed = relation + OUT_SUFFIX
    for m in non_key:
        out.append(
            Rule.create(
                (Atom(removed, first), Atom(removed, second)),
                (
                    pos(Atom(retrieved, first)),
                    pos(Atom(retrieved, second)),
                    pos(Atom("<>", (Variable(f"Y{m}"), Variable(f"Z{m}")))),
                ),
            )
        )
    return out


def encode_exclusion_dependency(
    r: str, r_positions: tuple[int, ...], s: str, s_positions: tuple[int, ...],
    r_arity: int, s_arity: int,
) -> Rule:
    """Shared-variable form: tuples of r and s that agree on the excluded
    positions conflict, so one of them is thrown out."""
    if len(r_positions) != len(s_positions):
        raise ValidationError("exclusion position lists differ in length")
    shared = {p: Variable(f"X{i + 1}") for i, p in enumerate(r_positions)}
    r_args = tuple(
        shared.get(p, Variable(f"Y{p}")) for p in range(1, r_arity + 1)
    )
    shared_s = {p: Variable(f"X{i + 1}") for i, p in enumerate(s_positions)}
    s_args = tuple(
        shared_s.get(p, Variable(f"Z{p}")) for p in range(1, s_arity + 1)
    )
    return Rule.create(
        (Atom(r + OUT_SUFFIX, r_args), Atom(s + OUT_SUFFIX, s_args)),
        (pos(Atom(r + RETRIEVED_SUFFIX, r_args)), pos(Atom(s + RETRIEVED_SUFFIX, s_args))),
    )


def _collect_rule(relation: str, arity: int) -> Rule:
    args = tuple(Variable(f"W{p}") for p in range(1, arity + 1))
    return Rule.create(
        (Atom(relation, args),),
        (
            pos(Atom(relation + RETRIEVED_SUFFIX, args)),
            neg(Atom(relation + OUT_SUFFIX, args)),
        ),
    )


def build_repair_program(schema: GlobalSchema, mapping: Mapping, query: Query) -> Program:
    """Key rules + exclusion rules + mapping + collection, ready for cautious
    answering over the source facts."""
    schema.validate()
    mapping.validate(schema)
    for atom in query.atoms:
        if all(atom.predicate != rel for rel, _ in schema.relations):
            raise ValidationError(
                f"query predicate '{atom.predicate}' is not a global relation"
            )
        if atom.arity != schema.arity(atom.predicate):
            raise ValidationError(f"query arity mismatch on '{atom.predicate}'")
    rules: list[Rule] = []
    for rel, positions in schema.keys:
        rules.extend(encode_key_dependency(rel, positions, schema.arity(rel)))
    for r, xs, s, ws in schema.exclusions:
        rules.append(
            encode_exclusion_dependency(r, xs, s, ws, schema.arity(r), schema.arity(s))
        )
    rules.extend(mapping.rules)
    for rel, arity in schema.relations:
        rules.append(_collect_rule(rel, arity))
    return Program.create(rules, query)


_CONSTANT_RE = re.compile(r"[a-z][A-Za-z0-9_]*|\d+")


def load_csv_facts(text: str, predicate: str) -> list[Rule]:
    """Positional CSV, no header, one file per source predicate.  Cells must
    be valid constant tokens (lowercase symbols or non-negative integers)."""
    facts: list[Rule] = []
    arity: int | None = None
    for row_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        if arity is None:
            arity = len(row)
        elif len(row) != arity:
            raise ValidationError(
                f"{predicate}: row {row_no} has {len(row)} columns, expected {arity}"
            )
        args = []
        for cell in row:
            token = cell.strip()
            if not _CONSTANT_RE.fullmatch(token):
                raise ValidationError(
                    f"{predicate}: row {row_no}: {token!r} is not a constant token"
                )
            args.append(Constant(int(token) if token.isdigit() else token))
        facts.append(Rule((Atom(predicate, tuple(args)),)))
    return facts


def merge_facts(program: Program, facts) -> Program:
    return Program.create((*program.rules, *facts), program.query)
