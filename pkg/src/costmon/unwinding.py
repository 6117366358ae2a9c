"""Unwinding of budgeted dependency formulas against a dependency graph.

Each dependency operator whose right operand names dependent variables is
replaced by a conjunction of per-process dependency formulas discovered by
backward traversal from the producer of the target variable.  The global
budget q is split into local budgets: a process keeps q minus the cheapest
cost of the downstream stretch separating it from the target's producer
(its own cost is part of its local budget, not of the discount).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .depgraph import DependencyGraph, GraphError, Process
from .formulas import (
    And,
    Atom,
    Eventually,
    Formula,
    Globally,
    Next,
    Not,
    Or,
    QDep,
    Until,
    atoms,
    conj,
    ordered_atoms,
)


class InfeasibleConstraintError(ValueError):
    """The cheapest downstream path already exceeds the global budget."""


@dataclass(frozen=True)
class QDepTuple:
    left: Formula
    right: Formula
    bound: int


@dataclass(frozen=True)
class UnwoundFormula:
    formula: Formula
    entries: Tuple[Tuple[str, QDep], ...]  # (producing pid, emitted conjunct)
    constraint_table: Dict[QDep, int]
    provenance: Dict[QDep, str]

    def constraints_by_formula(self) -> Dict[QDep, int]:
        return dict(self.constraint_table)


def extract_qdep(f: Formula) -> List[QDepTuple]:
    """All dependency operators in pre-order; duplicates preserved."""
    out: List[QDepTuple] = []

    def walk(g: Formula):
        if isinstance(g, QDep):
            out.append(QDepTuple(g.left, g.right, g.bound))
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (Not, Next, Eventually, Globally)):
            walk(g.sub)
        elif isinstance(g, (And, Or, Until)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return out


def local_constraint(g: DependencyGraph, from_pid: str, target: str, q: int) -> int:
    """Local budget for ``from_pid``: q minus the cheapest downstream cost
    toward the producer of ``target`` (from_pid's own cost excluded)."""
    if target not in g.producer:
        raise GraphError("variable %s has no producer" % target)
    downstream = g.min_downstream_cost(from_pid, target)
    if downstream is None:
        raise GraphError("process %s has no path to the producer of %s"
                         % (from_pid, target))
    c = q - downstream
    if c < 0:
        path = min(
            (p for p in g.dependency_paths(target, from_pid=from_pid)),
            key=lambda p: g.path_cost(p[1:]))
        raise InfeasibleConstraintError(
            "budget %d cannot cover path %s (downstream cost %d)"
            % (q, " -> ".join(path), downstream))
    return c


def apply_dependency_rule(p: Process, v: str, c: int) -> QDep:
    """Dependency formula of process ``p`` for its output ``v`` with local
    budget ``c``: the conjunction of all inputs on the left, ``v`` on the
    right.  Multi-output processes yield one formula per requested output."""
    if v not in p.outputs:
        raise GraphError("%s is not an output of %s" % (v, p.pid))
    if not p.inputs:
        raise GraphError("process %s has no inputs to depend on" % p.pid)
    left = conj([Atom(name) for name in p.inputs])
    return QDep(left, Atom(v), c)


def _unwind_tuple(tup: QDepTuple, g: DependencyGraph):
    """Backward traversal per dependent variable of the tuple's right
    operand.  Returns the emitted (pid, conjunct, budget) list in discovery
    order; empty when nothing is dependent."""
    emitted: List[Tuple[str, QDep]] = []
    budgets: Dict[QDep, int] = {}
    for v_root in ordered_atoms(tup.right):
        if v_root not in g.producer:
            continue
        worklist = [v_root]
        seen = {v_root}
        while worklist:
            v = worklist.pop(0)
            p = g.by_pid[g.producer[v]]
            c = local_constraint(g, p.pid, v_root, tup.bound)
            conjunct = apply_dependency_rule(p, v, c)
            if conjunct not in budgets:
                emitted.append((p.pid, conjunct))
                budgets[conjunct] = c
            for name in ordered_atoms(conjunct.left):
                if name != v and name in g.producer and name not in seen:
                    seen.add(name)
                    worklist.append(name)
    return emitted, budgets


def _replace_qdep(f: Formula, target: QDep, replacement: Formula,
                  distribute_g: bool) -> Formula:
    """Replace occurrences of ``target`` in ``f``.  Directly under G the
    replacement conjunction is split so G distributes over it."""
    if f == target:
        return replacement
    if isinstance(f, Globally):
        if f.sub == target and distribute_g and isinstance(replacement, And):
            parts = _flatten_and(replacement)
            return conj([Globally(p) for p in parts])
        return Globally(_replace_qdep(f.sub, target, replacement, distribute_g))
    if isinstance(f, (Not, Next)):
        return type(f)(_replace_qdep(f.sub, target, replacement, distribute_g))
    if isinstance(f, Eventually):
        return Eventually(_replace_qdep(f.sub, target, replacement, distribute_g))
    if isinstance(f, (And, Or, Until)):
        return type(f)(_replace_qdep(f.left, target, replacement, distribute_g),
                       _replace_qdep(f.right, target, replacement, distribute_g))
    return f


def _flatten_and(f: Formula) -> List[Formula]:
    if isinstance(f, And):
        return _flatten_and(f.left) + _flatten_and(f.right)
    return [f]


def unwind(f: Formula, g: DependencyGraph) -> UnwoundFormula:
    """Unwind every dependency operator of ``f`` whose right operand names
    dependent variables.  Returns the transformed formula plus the budget
    table keyed by emitted conjunct."""
    for name in atoms(f):
        if name not in g.producer and name not in g.environment:
            raise GraphError("formula variable %s is unknown to the graph" % name)
    result = f
    all_entries: List[Tuple[str, QDep]] = []
    table: Dict[QDep, int] = {}
    provenance: Dict[QDep, str] = {}
    for tup in extract_qdep(f):
        emitted, budgets = _unwind_tuple(tup, g)
        if not emitted:
            continue
        replacement = conj([q for _, q in emitted])
        original = QDep(tup.left, tup.right, tup.bound)
        result = _replace_qdep(result, original, replacement, distribute_g=True)
        for pid, conjunct in emitted:
            if conjunct not in table:
                all_entries.append((pid, conjunct))
                table[conjunct] = budgets[conjunct]
                provenance[conjunct] = pid
    return UnwoundFormula(result, tuple(all_entries), table, provenance)
