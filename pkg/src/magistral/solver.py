"""The practical two-phase engine: deterministic bottom-up grounding, then
a backtracking model search over the residual ground program.

Grounding derives only definite knowledge: an upper bound of derivable atoms
(negation ignored), a lower bound of deterministically true atoms, and a
simplified rule set mentioning only genuinely undecided atoms.  The search
assigns undecided atoms one by one with two propagation rules: unit
propagation on rule heads, and falsification of atoms whose every potential
supporting rule has died.  The latter is what turns magic atoms into dynamic
pruning: assuming a magic atom false kills every rule it guards, which
cascades falsity through the subprogram that became irrelevant.  Total
candidates pass an explicit minimality check against the reduct.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

from .errors import CapacityExceeded, Interrupted, ValidationError
from .optimizer import prune_redundant
from .oracle import Interpretation, matching_substitutions
from .rewriter import rewrite
from .syntax import (
    Atom,
    Constant,
    Program,
    Query,
    Rule,
    Substitution,
    eval_builtin,
    normalize_query,
)

DEFAULT_MAX_INSTANCES = 2_000_000


class Deadline:
    """Cooperative wall-clock timeout shared by grounding and search."""

    __slots__ = ("expires_at", "counter")

    def __init__(self, seconds: float | None):
        self.expires_at = None if seconds is None else time.monotonic() + seconds
        self.counter = 0

    def check(self, every: int = 2048) -> None:
        if self.expires_at is None:
            return
        self.counter += 1
        if self.counter % every == 0 and time.monotonic() > self.expires_at:
            raise Interrupted("timeout expired")


@dataclass
class SearchStats:
    choices: int = 0
    ground_rules: int = 0
    time_ground: float = 0.0
    time_search: float = 0.0


@dataclass
class GroundRuleDB:
    """Residual ground program: rules reference only undecided atoms."""

    rules: list[Rule]
    definite_true: frozenset[Atom]
    possible: frozenset[Atom]
    undefined: tuple[Atom, ...]

    def truth(self, atom: Atom) -> bool | None:
        """True / False for decided atoms, None for undecided ones."""
        if atom in self.definite_true:
            return True
        if atom in self.undefined:
            return None
        return False


class _AtomStore:
    """Ground atoms grouped by predicate, stamped with arrival order, with
    lazy per-position indexes.  Arrival stamps let the semi-naive join derive
    every instance exactly once (each instance fires when its latest atom is
    the delta)."""

    def __init__(self) -> None:
        self.by_pred: dict[str, dict[tuple, int]] = {}
        self.index: dict[tuple[str, int], dict[Constant, list[tuple]]] = {}
        self.clock = 0

    def add(self, pred: str, args: tuple) -> int | None:
        bucket = self.by_pred.setdefault(pred, {})
        if args in bucket:
            return None
        self.clock += 1
        bucket[args] = self.clock
        for (p, i), idx in self.index.items():
            if p == pred:
                idx.setdefault(args[i], []).append(args)
        return self.clock

    def stamp(self, pred: str, args: tuple) -> int:
        return self.by_pred[pred][args]

    def candidates(self, pred: str, bound: dict[int, Constant]) -> list[tuple]:
        rows = self.by_pred.get(pred)
        if not rows:
            return []
        if bound:
            position, value = next(iter(bound.items()))
            idx = self.index.get((pred, position))
            if idx is None:
                idx = {}
                for args in rows:
                    idx.setdefault(args[position], []).append(args)
                self.index[(pred, position)] = idx
            return idx.get(value, [])
        return list(rows)


def _match_pattern(pattern: Atom, args: tuple, theta: dict) -> dict | None:
    """Extend theta so that pattern maps onto args; never mutates theta."""
    out = theta
    for p, a in zip(pattern.args, args):
        if isinstance(p, Constant):
            if p != a:
                return None
        else:
            bound = out.get(p.name)
            if bound is None:
                if out is theta:
                    out = dict(theta)
                out[p.name] = a
            elif bound != a:
                return None
    return out


def intelligent_ground(
    program: Program,
    *,
    deadline: Deadline | None = None,
    max_instances: int = DEFAULT_MAX_INSTANCES,
) -> GroundRuleDB:
    """Relevance-driven instantiation plus deterministic simplification."""
    deadline = deadline or Deadline(None)
    store = _AtomStore()
    instances: dict[tuple[int, tuple], Rule] = {}
    agenda: list[Atom] = []

    rules = list(program.rules)
    rule_info = []
    for idx, rule in enumerate(rules):
        rule_info.append(
            {
                "rule": rule,
                "vars": rule.variables(),
                "pos": [l.atom for l in rule.body if not l.negated and not l.atom.is_builtin],
                "builtins": rule.body_builtins,
            }
        )

    by_pred_pos: dict[str, list[tuple[int, int]]] = {}
    for idx, info in enumerate(rule_info):
        for k, atom in enumerate(info["pos"]):
            by_pred_pos.setdefault(atom.predicate, []).append((idx, k))

    def builtins_hold(builtins, theta) -> bool | None:
        """False when a fully bound builtin fails; None when some builtin is
        still unbound (cannot be decided yet)."""
        decided = True
        for b in builtins:
            left = theta.get(b.args[0].name, b.args[0]) if not isinstance(b.args[0], Constant) else b.args[0]
            right = theta.get(b.args[1].name, b.args[1]) if not isinstance(b.args[1], Constant) else b.args[1]
            if isinstance(left, Constant) and isinstance(right, Constant):
                if not eval_builtin(b.predicate, left, right):
                    return False
            else:
                decided = False
        return True if decided else None

    def emit(idx: int, theta: dict) -> None:
        info = rule_info[idx]
        key = (idx, tuple(theta.get(v) for v in info["vars"]))
        if key in instances:
            return
        rule = info["rule"]
        # builtins were checked during the join; they drop out of the instance
        grounded = Rule.create(
            (a.substitute(theta) for a in rule.head),
            (l.substitute(theta) for l in rule.body if not l.atom.is_builtin),
        )
        instances[key] = grounded
        if len(instances) > max_instances:
            raise CapacityExceeded(f"grounding exceeds {max_instances} rule instances")
        for head_atom in grounded.head:
            if store.add(head_atom.predicate, head_atom.args):
                agenda.append(head_atom)

    def join(idx: int, fixed_k: int, fixed_args: tuple, delta_stamp: int) -> None:
        """Instantiate rule `idx` with subgoal `fixed_k` pinned to the newly
        derived atom.  Other subgoals only take atoms that arrived before the
        delta (or at positions after `fixed_k`, no later than it), so every
        instance is derived exactly once.  Remaining subgoals are joined most-
        bound-first."""
        info = rule_info[idx]
        pats: list[Atom] = info["pos"]
        builtins = info["builtins"]

        def extend(remaining: list[int], theta: dict) -> None:
            deadline.check()
            if not remaining:
                if not builtins or builtins_hold(builtins, theta) is True:
                    # safety guarantees every builtin is bound here
                    emit(idx, theta)
                return
            best_i = None
            best_bound: dict[int, Constant] = {}
            for i in remaining:
                pattern = pats[i]
                bound = {
                    pos_i: (theta[t.name] if not isinstance(t, Constant) else t)
                    for pos_i, t in enumerate(pattern.args)
                    if isinstance(t, Constant) or t.name in theta
                }
                if best_i is None or len(bound) > len(best_bound):
                    best_i, best_bound = i, bound
            pattern = pats[best_i]
            rest = [i for i in remaining if i != best_i]
            rows = store.by_pred.get(pattern.predicate, {})
            for args in store.candidates(pattern.predicate, best_bound):
                stamp = rows[args]
                if stamp > delta_stamp or (stamp == delta_stamp and best_i < fixed_k):
                    continue
                extended = _match_pattern(pattern, args, theta)
                if extended is None:
                    continue
                if builtins and builtins_hold(builtins, extended) is False:
                    continue
                extend(rest, extended)

        theta0 = _match_pattern(pats[fixed_k], fixed_args, {})
        if theta0 is None:
            return
        if builtins and builtins_hold(builtins, theta0) is False:
            return
        extend([i for i in range(len(pats)) if i != fixed_k], theta0)

    # seed: rules without positive non-builtin atoms are ground by safety
    for idx, info in enumerate(rule_info):
        if not info["pos"]:
            if builtins_hold(info["builtins"], {}) is not False:
                emit(idx, {})

    cursor = 0
    while cursor < len(agenda):
        atom = agenda[cursor]
        cursor += 1
        deadline.check(every=64)
        delta_stamp = store.stamp(atom.predicate, atom.args)
        for idx, k in by_pred_pos.get(atom.predicate, ()):
            join(idx, k, atom.args, delta_stamp)

    possible = frozenset(
        Atom(pred, args) for pred, rows in store.by_pred.items() for args in rows
    )

    # deterministic simplification to fixpoint
    active = list(dict.fromkeys(instances.values()))
    definite_true: set[Atom] = set()
    definite_false: set[Atom] = set()
    while True:
        changed = False
        simplified: dict[Rule, None] = {}
        heads_seen: set[Atom] = set()
        for rule in active:
            deadline.check()
            if any(h in definite_true for h in rule.head):
                changed = True
                continue
            if any(n in definite_true for n in rule.body_neg):
                changed = True
                continue
            if any(p in definite_false for p in rule.body_pos):
                changed = True
                continue
            body = []
            for lit in rule.body:
                a = lit.atom
                if lit.negated and (a not in possible or a in definite_false):
                    changed = True
                    continue
                if not lit.negated and a in definite_true:
                    changed = True
                    continue
                body.append(lit)
            new_rule = Rule.create(rule.head, body) if len(body) != len(rule.body) else rule
            if len(new_rule.head) == 1 and not new_rule.body:
                if new_rule.head[0] not in definite_true:
                    definite_true.add(new_rule.head[0])
                    changed = True
                continue
            simplified.setdefault(new_rule, None)
            heads_seen.update(new_rule.head)
        active = list(simplified)
        for atom in possible:
            if (
                atom not in definite_true
                and atom not in definite_false
                and atom not in heads_seen
            ):
                definite_false.add(atom)
                changed = True
        if not changed:
            break

    undefined = tuple(
        dict.fromkeys(
            a
            for rule in active
            for a in (*rule.head, *(l.atom for l in rule.body))
        )
    )
    return GroundRuleDB(active, frozenset(definite_true), possible, undefined)


_HEAD, _POS, _NEG = 0, 1, 2


class _Search:
    """Backtracking search over the undecided atoms of a GroundRuleDB."""

    def __init__(self, db: GroundRuleDB, stats: SearchStats, deadline: Deadline):
        self.db = db
        self.stats = stats
        self.deadline = deadline
        self.atoms = list(db.undefined)
        self.aid = {a: i for i, a in enumerate(self.atoms)}
        n = len(self.atoms)
        self.rules: list[tuple[list[int], list[int], list[int]]] = []
        occurrences = [0] * n
        self.watch: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
        for ri, rule in enumerate(db.rules):
            head = [self.aid[a] for a in rule.head]
            pos_ids = [self.aid[a] for a in rule.body_pos]
            neg_ids = [self.aid[a] for a in rule.body_neg]
            self.rules.append((head, pos_ids, neg_ids))
            for j, a in enumerate(head):
                self.watch[a].append((ri, _HEAD, j))
                occurrences[a] += 1
            for a in pos_ids:
                self.watch[a].append((ri, _POS, 0))
                occurrences[a] += 1
            for a in neg_ids:
                self.watch[a].append((ri, _NEG, 0))
                occurrences[a] += 1

        # Branch in first-occurrence order: the grounder emits instances
        # bottom-up from the facts, so this follows the derivation structure
        # and lets support cascades settle pruned regions before the search
        # ever branches inside them.
        self.order = list(range(n))
        self.occurrences = occurrences
        self._init_loop_supports()
        self.val: list[int] = [-1] * n  # -1 undefined, 0 false, 1 true
        self.pos_undef = [len(p) for _, p, _ in self.rules]
        self.pos_false = [0] * len(self.rules)
        self.neg_undef = [len(ng) for _, _, ng in self.rules]
        self.neg_true = [0] * len(self.rules)
        self.head_true = [0] * len(self.rules)
        self.head_undef = [len(h) for h, _, _ in self.rules]
        self.sup_active = [[True] * len(h) for h, _, _ in self.rules]
        self.support = [0] * n
        for h, _, _ in self.rules:
            for a in h:
                self.support[a] += 1
        self.trail: list[tuple] = []

    def _init_loop_supports(self) -> None:
        """Group atoms into positive-dependency loops.  A rule whose positive
        body stays outside a loop is one of its external supports; it stops
        supporting the loop when its body dies or a head atom OUTSIDE the
        loop becomes true (a true head atom inside the loop does not excuse
        it).  Once every external support of a loop is gone, the whole loop
        is unfounded and is falsified, which per-atom support counting alone
        cannot see."""
        n = len(self.atoms)
        adj: list[list[int]] = [[] for _ in range(n)]
        self_loop = [False] * n
        for head, pos_ids, _ in self.rules:
            for h in head:
                for b in pos_ids:
                    if h == b:
                        self_loop[h] = True
                    else:
                        adj[h].append(b)
        sccs = _atom_sccs(adj)
        self.scc_of = [-1] * n
        members: list[list[int]] = []
        for component in sccs:
            if len(component) > 1 or self_loop[component[0]]:
                idx = len(members)
                members.append(component)
                for a in component:
                    self.scc_of[a] = idx
        self.scc_members = members
        self.rule_sccs: list[tuple[int, ...]] = []
        self.pair_alive: dict[tuple[int, int], bool] = {}
        self.scc_ext = [0] * len(members)
        for ri, (head, pos_ids, _) in enumerate(self.rules):
            sccs_here: list[int] = []
            for h in head:
                scc = self.scc_of[h]
                if scc < 0 or scc in sccs_here:
                    continue
                if not set(self.scc_members[scc]).intersection(pos_ids):
                    sccs_here.append(scc)
                    self.pair_alive[(ri, scc)] = True
                    self.scc_ext[scc] += 1
            self.rule_sccs.append(tuple(sccs_here))

    # -- assignment plumbing -------------------------------------------------
    #
    # Counter updates happen atomically at assignment time so that undo (which
    # walks the trail) is always their exact inverse; rule re-examination is
    # deferred to a pending queue processed by _propagate.

    def _assign(self, a: int, value: int, pending: list[int]) -> bool:
        if self.val[a] != -1:
            return self.val[a] == value
        self.val[a] = value
        self.trail.append(("A", a))
        for ri, role, _ in self.watch[a]:
            if role == _HEAD:
                self.head_undef[ri] -= 1
                if value == 1:
                    self.head_true[ri] += 1
            elif role == _POS:
                self.pos_undef[ri] -= 1
                if value == 0:
                    self.pos_false[ri] += 1
            else:
                self.neg_undef[ri] -= 1
                if value == 1:
                    self.neg_true[ri] += 1
            pending.append(ri)
        return True

    def _deactivate(self, ri: int, j: int, pending: list[int]) -> bool:
        if not self.sup_active[ri][j]:
            return True
        self.sup_active[ri][j] = False
        self.trail.append(("S", ri, j))
        atom = self.rules[ri][0][j]
        self.support[atom] -= 1
        if self.support[atom] == 0:
            if self.val[atom] == 1:
                return False
            if self.val[atom] == -1 and not self._assign(atom, 0, pending):
                return False
        return True

    def _kill_loop_pair(self, ri: int, scc: int, pending: list[int]) -> bool:
        if not self.pair_alive[(ri, scc)]:
            return True
        self.pair_alive[(ri, scc)] = False
        self.trail.append(("K", ri, scc))
        self.scc_ext[scc] -= 1
        if self.scc_ext[scc] == 0:
            for member in self.scc_members[scc]:
                if self.val[member] == 1:
                    return False
                if self.val[member] == -1 and not self._assign(member, 0, pending):
                    return False
        return True

    def _body_dead(self, ri: int) -> bool:
        return self.pos_false[ri] > 0 or self.neg_true[ri] > 0

    def _on_rule_event(self, ri: int, pending: list[int]) -> bool:
        head, _, _ = self.rules[ri]
        if self._body_dead(ri):
            for j in range(len(head)):
                if not self._deactivate(ri, j, pending):
                    return False
            for scc in self.rule_sccs[ri]:
                if not self._kill_loop_pair(ri, scc, pending):
                    return False
            return True
        if self.head_true[ri] >= 1:
            # a true head atom outside a loop means this rule cannot be the
            # loop's external support in any extension
            for scc in self.rule_sccs[ri]:
                if not self.pair_alive[(ri, scc)]:
                    continue
                if any(self.val[h] == 1 and self.scc_of[h] != scc for h in head):
                    if not self._kill_loop_pair(ri, scc, pending):
                        return False
        if self.head_true[ri] >= 2:
            for j in range(len(head)):
                if not self._deactivate(ri, j, pending):
                    return False
        elif self.head_true[ri] == 1:
            for j, atom in enumerate(head):
                if self.val[atom] != 1:
                    if not self._deactivate(ri, j, pending):
                        return False
        if self.pos_undef[ri] == 0 and self.neg_undef[ri] == 0:
            # body is decided and true
            if self.head_true[ri] == 0:
                if self.head_undef[ri] == 0:
                    return False
                if self.head_undef[ri] == 1:
                    for atom in head:
                        if self.val[atom] == -1:
                            return self._assign(atom, 1, pending)
        return True

    def _propagate(self, pending: list[int]) -> bool:
        i = 0
        while i < len(pending):
            self.deadline.check()
            ri = pending[i]
            i += 1
            if not self._on_rule_event(ri, pending):
                return False
        return True

    def _undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            if entry[0] == "A":
                a = entry[1]
                value = self.val[a]
                for ri, role, j in self.watch[a]:
                    if role == _HEAD:
                        self.head_undef[ri] += 1
                        if value == 1:
                            self.head_true[ri] -= 1
                    elif role == _POS:
                        self.pos_undef[ri] += 1
                        if value == 0:
                            self.pos_false[ri] -= 1
                    else:
                        self.neg_undef[ri] += 1
                        if value == 1:
                            self.neg_true[ri] -= 1
                self.val[a] = -1
            elif entry[0] == "S":
                _, ri, j = entry
                self.sup_active[ri][j] = True
                self.support[self.rules[ri][0][j]] += 1
            else:
                _, ri, scc = entry
                self.pair_alive[(ri, scc)] = True
                self.scc_ext[scc] += 1

    # -- stability -----------------------------------------------------------

    def _is_stable(self) -> bool:
        """No proper submodel of the reduct below the current candidate."""
        true_ids = [i for i, v in enumerate(self.val) if v == 1]
        if not true_ids:
            return True
        clauses: list[tuple[list[int], list[int]]] = []  # (remove-one-of, keep-one-of)
        for head, pos_ids, neg_ids in self.rules:
            if any(self.val[a] == 1 for a in neg_ids):
                continue
            if any(self.val[a] == 0 for a in pos_ids):
                continue
            kept_heads = [a for a in head if self.val[a] == 1]
            clauses.append((pos_ids, kept_heads))
        return not _smaller_model(true_ids, clauses, self.deadline)

    # -- search --------------------------------------------------------------

    def run(self, assumptions: list[tuple[int, int]], on_model, stop) -> None:
        """DFS over undecided atoms; `on_model` is called for every stable
        candidate, `stop()` truthy ends the search."""
        pending: list[int] = []
        for scc, count in enumerate(self.scc_ext):
            # loops with no external support at all are unfounded outright
            if count == 0:
                for member in self.scc_members[scc]:
                    if self.val[member] == -1 and not self._assign(member, 0, pending):
                        return
        for atom, value in assumptions:
            if not self._assign(atom, value, pending):
                return
        if not self._propagate(pending):
            return

        decisions: list[tuple[int, int, int]] = []  # (atom, tried values, trail mark)
        while True:
            choice = next((i for i in self.order if self.val[i] == -1), None)
            if choice is None:
                if self._is_stable():
                    on_model(frozenset(
                        self.db.definite_true
                        | {self.atoms[i] for i, v in enumerate(self.val) if v == 1}
                    ))
                    if stop():
                        return
                ok = False  # force backtracking to look for more models
            else:
                self.stats.choices += 1
                decisions.append((choice, 1, len(self.trail)))
                pending = []
                ok = self._assign(choice, 0, pending) and self._propagate(pending)
            while not ok:
                if not decisions:
                    return
                atom, tried, mark = decisions.pop()
                self._undo_to(mark)
                if tried == 1:
                    decisions.append((atom, 2, mark))
                    pending = []
                    ok = self._assign(atom, 1, pending) and self._propagate(pending)
                else:
                    ok = False


def _atom_sccs(adj: list[list[int]]) -> list[list[int]]:
    """Tarjan over an integer adjacency list, iterative."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            node, edge_i = work[-1]
            if edge_i < len(adj[node]):
                work[-1] = (node, edge_i + 1)
                nxt = adj[node][edge_i]
                if index[nxt] == -1:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack[nxt] = True
                    work.append((nxt, 0))
                elif on_stack[nxt]:
                    low[node] = min(low[node], index[nxt])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[node])
                if low[node] == index[node]:
                    members = []
                    while True:
                        m = stack.pop()
                        on_stack[m] = False
                        members.append(m)
                        if m == node:
                            break
                    sccs.append(members)
    return sccs


def _smaller_model(true_ids: list[int], clauses, deadline: Deadline) -> bool:
    """SAT-style search for a model of the reduct that drops at least one of
    the candidate's atoms (definite atoms are pinned outside)."""
    ids = {a: i for i, a in enumerate(true_ids)}
    n = len(true_ids)
    # clause literals: ("drop", atom) satisfied when atom removed,
    # ("keep", atom) satisfied when atom kept
    encoded: list[list[tuple[int, bool]]] = []
    for pos_ids, kept_heads in clauses:
        lits = [(ids[a], False) for a in pos_ids] + [(ids[a], True) for a in kept_heads]
        encoded.append(lits)
    watch: list[list[int]] = [[] for _ in range(n)]
    for ci, lits in enumerate(encoded):
        for a, _ in lits:
            watch[a].append(ci)

    val: list[int] = [-1] * n  # 1 kept, 0 removed
    trail: list[int] = []

    def clause_state(ci: int) -> tuple[bool, int | None, bool | None]:
        """(satisfied, unit_atom, unit_value)."""
        unit = None
        undef = 0
        for a, keep in encoded[ci]:
            v = val[a]
            if v == -1:
                undef += 1
                unit = (a, keep)
            elif (v == 1) == keep:
                return True, None, None
        if undef == 1 and unit is not None:
            return False, unit[0], unit[1]
        return False, None, undef > 0

    def assign(a: int, value: int) -> bool:
        if val[a] != -1:
            return val[a] == value
        val[a] = value
        trail.append(a)
        queue = [a]
        while queue:
            deadline.check()
            x = queue.pop()
            for ci in watch[x]:
                satisfied, unit_atom, rest = clause_state(ci)
                if satisfied:
                    continue
                if unit_atom is not None:
                    forced = 1 if rest else 0
                    if val[unit_atom] == -1:
                        val[unit_atom] = forced
                        trail.append(unit_atom)
                        queue.append(unit_atom)
                    elif val[unit_atom] != forced:
                        return False
                elif rest is False:
                    return False  # all literals false
        return True

    def undo(mark: int) -> None:
        while len(trail) > mark:
            val[trail.pop()] = -1

    def dfs() -> bool:
        deadline.check()
        choice = next((i for i in range(n) if val[i] == -1), None)
        if choice is None:
            return any(v == 0 for v in val)
        for value in (0, 1):
            mark = len(trail)
            if assign(choice, value) and dfs():
                return True
            undo(mark)
        return False

    limit = sys.getrecursionlimit()
    if n + 100 > limit:
        sys.setrecursionlimit(n * 2 + 1000)
    try:
        return dfs()
    finally:
        sys.setrecursionlimit(limit)


def solve(
    db: GroundRuleDB,
    mode: str = "enumerate",
    target: Atom | None = None,
    *,
    deadline: Deadline | None = None,
    stats: SearchStats | None = None,
    unique_model: bool = False,
    max_models: int | None = None,
) -> list[Interpretation] | tuple[bool, Interpretation | None] | frozenset[Substitution]:
    """Enumerate stable models, or answer an atom pattern bravely/cautiously.

    Ground targets assume the query truth value up front (true for brave,
    false for cautious) and stop at the first witness resp. counter-model;
    magic atoms take part in propagation like any other atom, which
    deactivates rules that are irrelevant under the current assumptions.
    Non-ground patterns enumerate: brave reasoning accumulates matching
    substitutions, cautious reasoning starts from the first model's matches
    and lets every further model eliminate some (stopping early when none
    are left)."""
    deadline = deadline or Deadline(None)
    stats = stats or SearchStats()
    stats.ground_rules = len(db.rules)
    t0 = time.perf_counter()
    try:
        if mode == "enumerate":
            models: list[Interpretation] = []
            limit = 1 if unique_model else max_models

            def stop() -> bool:
                return limit is not None and len(models) >= limit

            search = _Search(db, stats, deadline)
            search.run([], models.append, stop)
            return models
        if mode not in ("brave", "cautious"):
            raise ValidationError(f"unknown solve mode '{mode}'")
        assert target is not None
        if not target.is_ground:
            return _solve_pattern(db, mode, target, stats, deadline, unique_model)
        known = db.truth(target)
        if known is True:
            witness = _first_model(db, stats, deadline)
            return True, witness
        if known is False:
            witness = None if mode == "brave" else _first_model(db, stats, deadline)
            return False, witness
        if unique_model:
            model = _first_model(db, stats, deadline)
            holds = model is not None and target in model
            return holds, model
        atom_id = db.undefined.index(target)
        found: list[Interpretation] = []
        search = _Search(db, stats, deadline)
        assumed = 1 if mode == "brave" else 0
        search.run([(atom_id, assumed)], found.append, lambda: bool(found))
        if mode == "brave":
            return (True, found[0]) if found else (False, None)
        return (False, found[0]) if found else (True, None)
    finally:
        stats.time_search += time.perf_counter() - t0


def _solve_pattern(
    db: GroundRuleDB,
    mode: str,
    target: Atom,
    stats: SearchStats,
    deadline: Deadline,
    unique_model: bool,
) -> frozenset[Substitution]:
    state: dict = {"subs": None, "count": 0}

    def on_model(model: Interpretation) -> None:
        matches = matching_substitutions(target, model)
        state["count"] += 1
        if mode == "brave":
            state["subs"] = matches if state["subs"] is None else state["subs"] | matches
        else:
            state["subs"] = matches if state["subs"] is None else state["subs"] & matches

    def stop() -> bool:
        if unique_model and state["count"] >= 1:
            return True
        return mode == "cautious" and state["subs"] == set()

    search = _Search(db, stats, deadline)
    search.run([], on_model, stop)
    if state["subs"] is None:
        raise ValidationError("program has no stable model")
    return frozenset(state["subs"])


def _first_model(db: GroundRuleDB, stats: SearchStats, deadline: Deadline) -> Interpretation | None:
    found: list[Interpretation] = []
    search = _Search(db, stats, deadline)
    search.run([], found.append, lambda: True)
    return found[0] if found else None


@dataclass(frozen=True)
class AnswerOutcome:
    mode: str
    variables: tuple[str, ...]
    substitutions: frozenset[Substitution]
    stats: SearchStats
    witness: Interpretation | None

    @property
    def is_true(self) -> bool:
        return bool(self.substitutions)


def answer(
    query: Query,
    program: Program,
    mode: str,
    use_dms: str = "auto",
    *,
    timeout: float | None = None,
    want_witness: bool = False,
    max_instances: int = DEFAULT_MAX_INSTANCES,
    stats: SearchStats | None = None,
) -> AnswerOutcome:
    """Full pipeline: normalize the query, optionally rewrite, ground, solve.

    `use_dms`: "on", "off", "on_subsume", or "auto" (rewrite exactly when the
    query carries at least one constant).  A caller-supplied `stats` object is
    filled in progressively, so partial figures survive a timeout."""
    if mode not in ("brave", "cautious"):
        raise ValidationError(f"unknown reasoning mode '{mode}'")
    if use_dms not in ("auto", "on", "off", "on_subsume"):
        raise ValidationError(f"unknown magic-set setting '{use_dms}'")
    deadline = Deadline(timeout)
    stats = stats if stats is not None else SearchStats()

    normalized, goal = normalize_query(program, query)
    if use_dms == "auto":
        use_dms = "on" if query.constants() else "off"

    if use_dms in ("on", "on_subsume"):
        output = rewrite(normalized, goal)
        solved_program = output.program()
        if use_dms == "on_subsume":
            solved_program = prune_redundant(solved_program, "greedy")
    else:
        solved_program = normalized

    unique_model = all(len(r.head) == 1 for r in program.rules)

    t0 = time.perf_counter()
    db = intelligent_ground(solved_program, deadline=deadline, max_instances=max_instances)
    stats.time_ground = time.perf_counter() - t0
    stats.ground_rules = len(db.rules)

    original_preds = set(program.predicates()) | {goal.predicate}

    def strip(model: Interpretation | None) -> Interpretation | None:
        if model is None:
            return None
        return frozenset(a for a in model if a.predicate in original_preds)

    if goal.is_ground:
        holds, witness = solve(
            db, mode, goal, deadline=deadline, stats=stats, unique_model=unique_model
        )
        subs = frozenset([Substitution.of({})]) if holds else frozenset()
        return AnswerOutcome(
            mode, goal.variables(), subs, stats, strip(witness) if want_witness else None
        )

    subs = solve(db, mode, goal, deadline=deadline, stats=stats, unique_model=unique_model)
    assert isinstance(subs, frozenset)
    return AnswerOutcome(mode, goal.variables(), subs, stats, None)


def enumerate_models(
    program: Program,
    *,
    timeout: float | None = None,
    max_models: int | None = None,
) -> tuple[list[Interpretation], SearchStats]:
    """All stable models of a program (no rewriting), deterministic order."""
    deadline = Deadline(timeout)
    stats = SearchStats()
    t0 = time.perf_counter()
    db = intelligent_ground(program, deadline=deadline)
    stats.time_ground = time.perf_counter() - t0
    unique_model = all(len(r.head) == 1 for r in program.rules)
    models = solve(
        db,
        "enumerate",
        deadline=deadline,
        stats=stats,
        unique_model=unique_model,
        max_models=max_models,
    )
    assert isinstance(models, list)
    return models, stats
