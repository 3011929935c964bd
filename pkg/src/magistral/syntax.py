"""Abstract syntax of disjunctive Datalog with stratified negation.

Terms, atoms, rules, programs and queries are immutable; all derived
information (predicate classification, dependency graph, safety) is computed
by pure functions, so values can be shared freely across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import count

from .errors import MixedClassification, UnsafeRule, UnstratifiedProgram, ValidationError

BUILTIN_PREDICATES = ("<>", "<", "=")

ARTIFICIAL_CONSTANT = "u0"


@dataclass(frozen=True)
class Constant:
    """An alphanumeric symbol starting lowercase, or a non-negative integer."""

    value: str | int

    def __lt__(self, other: "Constant") -> bool:
        return _const_key(self.value) < _const_key(other.value)

    def __str__(self) -> str:
        return str(self.value)


def _const_key(value: str | int) -> tuple[int, str | int]:
    return (0, value) if isinstance(value, int) else (1, value)


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Constant | Variable


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_builtin(self) -> bool:
        return self.predicate in BUILTIN_PREDICATES

    @property
    def is_ground(self) -> bool:
        return all(isinstance(t, Constant) for t in self.args)

    def variables(self) -> tuple[str, ...]:
        """Variable names in order of first occurrence."""
        seen: dict[str, None] = {}
        for t in self.args:
            if isinstance(t, Variable):
                seen.setdefault(t.name, None)
        return tuple(seen)

    def substitute(self, theta: dict[str, Term]) -> "Atom":
        return Atom(self.predicate, tuple(
            theta.get(t.name, t) if isinstance(t, Variable) else t for t in self.args
        ))

    def __str__(self) -> str:
        if self.is_builtin:
            return f"{self.args[0]} {self.predicate} {self.args[1]}"
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def substitute(self, theta: dict[str, Term]) -> "Literal":
        return Literal(self.atom.substitute(theta), self.negated)

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)


def pos(atom: Atom) -> Literal:
    return Literal(atom, False)


def neg(atom: Atom) -> Literal:
    return Literal(atom, True)


@dataclass(frozen=True)
class Rule:
    """A disjunctive rule.  Head atoms and body literals are kept in stored
    order (ties and output conventions depend on it) but compare as written.
    """

    head: tuple[Atom, ...]
    body: tuple[Literal, ...] = ()

    @classmethod
    def create(cls, head, body=()) -> "Rule":
        """Build a rule, dropping duplicate head atoms / body literals while
        preserving first-occurrence order (head and body are sets)."""
        h = tuple(dict.fromkeys(head))
        b = tuple(dict.fromkeys(body))
        if not h:
            raise ValidationError("a rule needs at least one head atom")
        return cls(h, b)

    @property
    def body_pos(self) -> tuple[Atom, ...]:
        """Positive body atoms, builtins included."""
        return tuple(l.atom for l in self.body if not l.negated)

    @property
    def body_pos_std(self) -> tuple[Atom, ...]:
        """Positive non-builtin body atoms."""
        return tuple(l.atom for l in self.body if not l.negated and not l.atom.is_builtin)

    @property
    def body_builtins(self) -> tuple[Atom, ...]:
        return tuple(l.atom for l in self.body if not l.negated and l.atom.is_builtin)

    @property
    def body_neg(self) -> tuple[Atom, ...]:
        return tuple(l.atom for l in self.body if l.negated)

    @property
    def is_fact(self) -> bool:
        return not self.body and len(self.head) == 1 and self.head[0].is_ground

    @property
    def is_ground(self) -> bool:
        return all(a.is_ground for a in self.head) and all(l.atom.is_ground for l in self.body)

    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for atom in self.head:
            for v in atom.variables():
                seen.setdefault(v, None)
        for lit in self.body:
            for v in lit.atom.variables():
                seen.setdefault(v, None)
        return tuple(seen)

    def substitute(self, theta: dict[str, Term]) -> "Rule":
        return Rule.create(
            (a.substitute(theta) for a in self.head),
            (l.substitute(theta) for l in self.body),
        )

    def __str__(self) -> str:
        head = " v ".join(map(str, self.head))
        if not self.body:
            return f"{head}."
        return f"{head} :- {', '.join(map(str, self.body))}."


def fact(atom: Atom) -> Rule:
    return Rule((atom,))


@dataclass(frozen=True)
class Query:
    """A conjunctive query; single-atom in the core theory, folded otherwise."""

    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValidationError("a query needs at least one atom")

    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for atom in self.atoms:
            for v in atom.variables():
                seen.setdefault(v, None)
        return tuple(seen)

    def constants(self) -> tuple[Constant, ...]:
        seen: dict[Constant, None] = {}
        for atom in self.atoms:
            for t in atom.args:
                if isinstance(t, Constant):
                    seen.setdefault(t, None)
        return tuple(seen)

    def __str__(self) -> str:
        return ", ".join(map(str, self.atoms)) + "?"


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]
    query: Query | None = None

    @classmethod
    def create(cls, rules, query: Query | None = None) -> "Program":
        return cls(tuple(dict.fromkeys(rules)), query)

    def predicates(self) -> dict[str, int]:
        """Non-builtin predicate -> arity, in order of first occurrence."""
        out: dict[str, int] = {}
        for rule in self.rules:
            for atom in (*rule.head, *(l.atom for l in rule.body)):
                if not atom.is_builtin:
                    out.setdefault(atom.predicate, atom.arity)
        if self.query:
            for atom in self.query.atoms:
                out.setdefault(atom.predicate, atom.arity)
        return out

    def constants(self) -> tuple[Constant, ...]:
        seen: dict[Constant, None] = {}
        for rule in self.rules:
            for atom in (*rule.head, *(l.atom for l in rule.body)):
                for t in atom.args:
                    if isinstance(t, Constant):
                        seen.setdefault(t, None)
        return tuple(seen)

    def edb_facts(self) -> frozenset[Atom]:
        kinds = classify_predicates(self)
        return frozenset(
            r.head[0] for r in self.rules
            if r.is_fact and kinds.get(r.head[0].predicate) is PredicateKind.EDB
        )

    def __str__(self) -> str:
        lines = [str(r) for r in self.rules]
        if self.query:
            lines.append(str(self.query))
        return "\n".join(lines)


@dataclass(frozen=True)
class Substitution:
    """An answer substitution: a total mapping from variables to constants."""

    bindings: tuple[tuple[str, Constant], ...]

    @classmethod
    def of(cls, mapping: dict[str, Constant]) -> "Substitution":
        return cls(tuple(sorted(mapping.items())))

    def as_dict(self) -> dict[str, Constant]:
        return dict(self.bindings)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{v}={c}" for v, c in self.bindings) + "}"


class PredicateKind(enum.Enum):
    EDB = "edb"
    IDB = "idb"
    BUILTIN = "builtin"


def classify_predicates(program: Program) -> dict[str, PredicateKind]:
    """EDB/IDB split: a predicate is IDB iff it heads a nonempty-body rule or
    a disjunctive rule; builtins are neither."""
    kinds: dict[str, PredicateKind] = {}
    for rule in program.rules:
        idb_head = bool(rule.body) or len(rule.head) > 1
        for atom in rule.head:
            if idb_head:
                kinds[atom.predicate] = PredicateKind.IDB
            else:
                kinds.setdefault(atom.predicate, PredicateKind.EDB)
        for lit in rule.body:
            p = lit.atom.predicate
            if lit.atom.is_builtin:
                kinds[p] = PredicateKind.BUILTIN
            else:
                kinds.setdefault(p, PredicateKind.EDB)
    if program.query:
        for atom in program.query.atoms:
            kinds.setdefault(atom.predicate, PredicateKind.EDB)
    # Facts for rule-defined predicates would make the predicate both kinds.
    for rule in program.rules:
        if not rule.body and len(rule.head) == 1:
            continue
        for atom in rule.head:
            kinds[atom.predicate] = PredicateKind.IDB
    return kinds


def mixed_predicates(program: Program) -> list[str]:
    """Predicates that have ground facts and also head proper rules."""
    kinds = classify_predicates(program)
    with_facts = {r.head[0].predicate for r in program.rules if not r.body and len(r.head) == 1}
    return sorted(p for p in with_facts if kinds[p] is PredicateKind.IDB)


def check_mixed_classification(program: Program) -> None:
    bad = mixed_predicates(program)
    if bad:
        raise MixedClassification(
            f"predicate '{bad[0]}' has facts but is also defined by rules"
        )


def check_safety(rule: Rule) -> str | None:
    """First unsafe variable (not covered by a positive non-builtin body
    atom), scanning head then body left to right; None when safe."""
    covered = {v for atom in rule.body_pos_std for v in atom.variables()}
    for atom in (*rule.head, *(l.atom for l in rule.body)):
        for v in atom.variables():
            if v not in covered:
                return v
    return None


def dependency_edges(program: Program) -> list[tuple[str, str, bool]]:
    """(head predicate, body predicate, negated?) over non-builtin atoms."""
    edges: list[tuple[str, str, bool]] = []
    for rule in program.rules:
        for head in rule.head:
            for lit in rule.body:
                if not lit.atom.is_builtin:
                    edges.append((head.predicate, lit.atom.predicate, lit.negated))
    return edges


def check_stratification(program: Program) -> tuple[str, ...] | None:
    """None when no dependency cycle crosses a negative edge; otherwise one
    witness cycle as a predicate sequence starting and ending at the same
    predicate."""
    edges = dependency_edges(program)
    adj: dict[str, set[str]] = {}
    for h, b, _ in edges:
        adj.setdefault(h, set()).add(b)
        adj.setdefault(b, set())
    sccs = _tarjan(adj)
    comp = {node: i for i, members in enumerate(sccs) for node in members}
    for h, b, negated in edges:
        if negated and comp[h] == comp[b]:
            return _cycle_through(adj, {n for n in adj if comp[n] == comp[h]}, h, b)
    return None


def _tarjan(adj: dict[str, set[str]]) -> list[list[str]]:
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = count()

    def visit(root: str) -> None:
        # Iterative DFS; recursion depth is unbounded on long chains.
        work = [(root, iter(sorted(adj[root])))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = next(counter)
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(adj[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                members = []
                while True:
                    m = stack.pop()
                    on_stack.discard(m)
                    members.append(m)
                    if m == node:
                        break
                sccs.append(members)

    for node in sorted(adj):
        if node not in index:
            visit(node)
    return sccs


def _cycle_through(adj: dict[str, set[str]], scc: set[str], src: str, dst: str) -> tuple[str, ...]:
    """A cycle src -> dst -> ... -> src inside one SCC (BFS back to src)."""
    if dst == src:
        return (src, src)
    parents: dict[str, str] = {dst: src}
    frontier = [dst]
    while frontier:
        nxt_frontier = []
        for node in frontier:
            for succ in sorted(adj[node]):
                if succ == src:
                    return _trace(parents, src, node)
                if succ in scc and succ not in parents:
                    parents[succ] = node
                    nxt_frontier.append(succ)
        frontier = nxt_frontier
    return (src, dst, src)


def _trace(parents: dict[str, str], src: str, last: str) -> tuple[str, ...]:
    path = [last]
    cur = last
    while cur != src:
        cur = parents[cur]
        path.append(cur)
    path.reverse()
    return tuple(path + [src])


def validate_program(program: Program) -> None:
    """Safety plus stratification gate; raises on the first violation."""
    for rule in program.rules:
        v = check_safety(rule)
        if v is not None:
            raise UnsafeRule(f"unsafe variable '{v}' in rule: {rule}", v)
    cycle = check_stratification(program)
    if cycle is not None:
        raise UnstratifiedProgram(
            "recursion through negation: " + " -> ".join(cycle), cycle
        )


def eval_builtin(predicate: str, left: Constant, right: Constant) -> bool:
    """Ground comparison.  Equality and inequality are defined across kinds
    (an integer never equals a symbol); ordering is not."""
    same_kind = isinstance(left.value, int) == isinstance(right.value, int)
    if predicate == "=":
        return same_kind and left.value == right.value
    if predicate == "<>":
        return not (same_kind and left.value == right.value)
    if predicate == "<":
        if not same_kind:
            raise ValidationError(f"cannot order {left} and {right} (different kinds)")
        return left.value < right.value  # type: ignore[operator]
    raise ValidationError(f"unknown builtin '{predicate}'")


def program_universe(program: Program, extra: tuple[Constant, ...] = ()) -> tuple[Constant, ...]:
    """All constants of the program (sorted); a single artificial constant
    when there are none."""
    consts = set(program.constants()) | set(extra)
    if not consts:
        consts = {Constant(ARTIFICIAL_CONSTANT)}
    return tuple(sorted(consts))


def fresh_predicate(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    for i in count():
        name = f"{base}{i}"
        if name not in taken:
            return name
    raise AssertionError


def normalize_query(program: Program, query: Query) -> tuple[Program, Atom]:
    """Fold a conjunctive query into a fresh auxiliary rule and make sure the
    query's constants occur in the program (a fresh fact is added otherwise).
    Returns the adjusted program and the single query atom."""
    taken = set(program.predicates())
    for query_atom in query.atoms:
        if query_atom.predicate not in taken:
            raise ValidationError(
                f"query predicate '{query_atom.predicate}' does not occur in the program"
            )
    rules = list(program.rules)

    if len(query.atoms) == 1:
        goal = query.atoms[0]
    else:
        args: dict[Term, None] = {}
        for atom in query.atoms:
            for t in atom.args:
                args.setdefault(t, None)
        aux = fresh_predicate("aux_query", taken)
        taken.add(aux)
        goal = Atom(aux, tuple(args))
        rules.append(Rule.create((goal,), tuple(pos(a) for a in query.atoms)))

    known = set(program.constants())
    if any(c not in known for c in query.constants()):
        anchor = fresh_predicate("query_constants", taken)
        rules.append(fact(Atom(anchor, tuple(query.constants()))))

    return Program.create(rules, Query((goal,))), goal
