"""Text syntax for programs, queries and interpretations.

Grammar (comments run from '%' to end of line):

    rule     :=  head [ ":-" body ] "."
    head     :=  atom { ("v" | "|") atom }
    body     :=  literal { "," literal }
    literal  :=  [ "not" ] atom  |  term op term      op in { "<>", "!=", "<", "=" }
    atom     :=  ident [ "(" term { "," term } ")" ]
    term     :=  constant | variable | "_"
    query    :=  atom { "," atom } "?"                at most one per file

Identifiers starting lowercase are predicate/constant symbols, identifiers
starting uppercase (or with '_') are variables; a bare '_' is an anonymous
variable expanded to a fresh one.  '!=' is an alias of '<>'.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import (
    ArityMismatch,
    MixedClassification,
    ParseError,
    SourceSpan,
    UnsafeRule,
    UnstratifiedProgram,
)
from .syntax import (
    Atom,
    Constant,
    Literal,
    Program,
    Query,
    Rule,
    Term,
    Variable,
    check_safety,
    check_stratification,
    mixed_predicates,
)

RESERVED_PREFIX = "magic__"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<implies>:-)
  | (?P<neq><>|!=)
  | (?P<op>[<=])
  | (?P<punct>[(),.?|])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(line, col, 1))
        kind = m.lastgroup or ""
        raw = m.group()
        span = SourceSpan(line, col, len(raw))
        if kind not in ("ws", "comment"):
            if kind == "neq":
                tokens.append(_Token("op", "<>", span))
            elif kind == "ident" and raw == "not":
                tokens.append(_Token("not", raw, span))
            else:
                tokens.append(_Token(kind, raw, span))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            col = len(raw) - raw.rindex("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(_Token("eof", "", SourceSpan(line, col, 0)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], allow_magic: bool):
        self.tokens = tokens
        self.i = 0
        self.allow_magic = allow_magic
        self.arities: dict[str, tuple[int, SourceSpan]] = {}
        self.rules: list[Rule] = []
        self.rule_spans: list[SourceSpan] = []
        self.rule_var_spans: list[dict[str, SourceSpan]] = []
        self.query: Query | None = None
        self.anon_counter = 0
        self.var_spans: dict[str, SourceSpan] = {}

    def _at_disjunction(self) -> bool:
        tok = self.peek()
        return tok.text == "|" or (tok.kind == "ident" and tok.text == "v")

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.span)
        return tok

    def parse(self) -> Program:
        while self.peek().kind != "eof":
            self.statement()
        program = Program.create(self.rules, self.query)
        self.check_semantics(program)
        return program

    def statement(self) -> None:
        start = self.peek().span
        self.anon_counter = 0
        self.var_spans = {}
        first = self.atom()
        if self.peek().text == "," or self.peek().text == "?":
            atoms = [first]
            while self.peek().text == ",":
                self.next()
                atoms.append(self.atom())
            end = self.expect("punct", "?")
            if any(a.is_builtin for a in atoms):
                raise ParseError("builtin atoms cannot appear in a query", start)
            if self.query is not None:
                raise ParseError("only one query per file is allowed", end.span)
            self.query = Query(tuple(atoms))
            return
        head = [first]
        while self._at_disjunction():
            self.next()
            head.append(self.atom())
        for atom in head:
            if atom.is_builtin:
                raise ParseError("builtin atoms cannot appear in a rule head", start)
        body: list[Literal] = []
        if self.peek().kind == "implies":
            self.next()
            body.append(self.literal())
            while self.peek().text == ",":
                self.next()
                body.append(self.literal())
        self.expect("punct", ".")
        self.rules.append(Rule.create(head, body))
        self.rule_spans.append(start)
        self.rule_var_spans.append(self.var_spans)

    def literal(self) -> Literal:
        if self.peek().kind == "not":
            span = self.next().span
            atom = self.atom()
            if atom.is_builtin:
                raise ParseError("builtin atoms cannot be negated", span)
            return Literal(atom, True)
        return Literal(self.atom(), False)

    def atom(self) -> Atom:
        tok = self.peek()
        if tok.kind == "int" or (tok.kind == "ident" and self._is_variable(tok.text)):
            return self.builtin_atom()
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(f"expected an atom, found {tok.text or 'end of input'!r}", tok.span)
        name = tok.text
        if not self.allow_magic and name.startswith(RESERVED_PREFIX):
            raise ParseError(f"predicate names may not start with the reserved prefix '{RESERVED_PREFIX}'", tok.span)
        args: list[Term] = []
        if self.peek().text == "(":
            self.next()
            args.append(self.term())
            while self.peek().text == ",":
                self.next()
                args.append(self.term())
            self.expect("punct", ")")
        if self.peek().kind == "op":
            # infix builtin whose left side happened to be a constant symbol
            if args:
                raise ParseError("comparison operands must be terms", self.peek().span)
            op = self.next()
            right = self.term()
            return Atom(op.text, (Constant(name), right))
        self.note_arity(name, len(args), tok.span)
        return Atom(name, tuple(args))

    def builtin_atom(self) -> Atom:
        left = self.term()
        op = self.next()
        if op.kind != "op":
            raise ParseError(f"expected a comparison operator, found {op.text!r}", op.span)
        right = self.term()
        return Atom(op.text, (left, right))

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "int":
            return Constant(int(tok.text))
        if tok.kind != "ident":
            raise ParseError(f"expected a term, found {tok.text or 'end of input'!r}", tok.span)
        if tok.text == "_":
            self.anon_counter += 1
            name = f"__{self.anon_counter}"
            self.var_spans.setdefault(name, tok.span)
            return Variable(name)
        if self._is_variable(tok.text):
            self.var_spans.setdefault(tok.text, tok.span)
            return Variable(tok.text)
        return Constant(tok.text)

    @staticmethod
    def _is_variable(name: str) -> bool:
        return name[0].isupper() or name.startswith("_")

    def note_arity(self, name: str, arity: int, span: SourceSpan) -> None:
        known = self.arities.get(name)
        if known is not None and known[0] != arity:
            raise ArityMismatch(
                f"predicate '{name}' used with arity {arity} but previously with arity {known[0]}",
                span,
            )
        self.arities.setdefault(name, (arity, span))

    def check_semantics(self, program: Program) -> None:
        # self.rules may contain duplicates that Program.create drops; spans
        # align with the raw list.
        for rule, span, var_spans in zip(self.rules, self.rule_spans, self.rule_var_spans):
            v = check_safety(rule)
            if v is not None:
                raise UnsafeRule(
                    f"unsafe variable '{v}' in rule: {rule}", v, var_spans.get(v, span)
                )
        cycle = check_stratification(program)
        if cycle is not None:
            offending = self._span_of_negative_edge(cycle)
            raise UnstratifiedProgram(
                "recursion through negation: " + " -> ".join(cycle), cycle, offending
            )
        if not self.allow_magic:
            bad = mixed_predicates(program)
            if bad:
                span = next(
                    (span for rule, span in zip(self.rules, self.rule_spans)
                     if rule.is_fact and rule.head[0].predicate == bad[0]),
                    None,
                )
                raise MixedClassification(
                    f"predicate '{bad[0]}' has facts but is also defined by rules", span
                )
        if program.query:
            for atom in program.query.atoms:
                if atom.predicate not in self.arities:
                    continue
                if self.arities[atom.predicate][0] != atom.arity:
                    raise ArityMismatch(
                        f"query uses '{atom.predicate}' with arity {atom.arity}",
                        self.arities[atom.predicate][1],
                    )

    def _span_of_negative_edge(self, cycle: tuple[str, ...]) -> SourceSpan | None:
        preds = set(cycle)
        for rule, span in zip(self.rules, self.rule_spans):
            for head in rule.head:
                if head.predicate in preds:
                    for lit in rule.body:
                        if lit.negated and lit.atom.predicate in preds:
                            return span
        return None


def parse_program(text: str, *, allow_magic: bool = False) -> Program:
    """Parse and validate a program (safety, stratification, arity and the
    EDB/IDB split).  `allow_magic` accepts rewritten programs that contain
    reserved magic predicates and magic facts."""
    return _Parser(_tokenize(text), allow_magic).parse()


def parse_query(text: str) -> Query:
    """Parse a standalone query, with or without the trailing '?'."""
    stripped = text.strip()
    if not stripped.endswith("?"):
        stripped += "?"
    parser = _Parser(_tokenize(stripped), allow_magic=False)
    while parser.peek().kind != "eof":
        parser.statement()
    if parser.query is None or parser.rules:
        raise ParseError("expected a query", SourceSpan(1, 1, len(text)))
    return parser.query


def format_program(program: Program) -> str:
    """Canonical text form; `parse_program(format_program(p))` is structurally
    equal to `p` for valid programs."""
    return str(program) + ("\n" if program.rules or program.query else "")


def format_rule(rule: Rule) -> str:
    return str(rule)


def format_interpretation(atoms) -> str:
    return "{" + ", ".join(str(a) for a in sorted(atoms, key=_atom_key)) + "}"


def _atom_key(atom: Atom):
    return (atom.predicate, tuple(str(t) for t in atom.args))
