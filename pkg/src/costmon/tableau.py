"""Tree-shaped tableau construction for the extended temporal language.

Labels are ordered, duplicate-free tuples of formulas.  Expansion picks the
first formula (insertion order) that is not a literal, an atomic dependency,
or a next-step obligation, and applies its rule.  Time steps via the X-rule
once a label is poised.  Termination comes from the LOOP rule (tick a
repeated poised label) and the PRUNE rule (cross a thrice-repeated label
with no eventuality progress).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

from .formulas import (
    And,
    Atom,
    Eventually,
    FALSE,
    FalseF,
    Formula,
    Globally,
    Next,
    Not,
    Or,
    QDep,
    TRUE,
    TrueF,
    Until,
    nnf,
)

# Hard ceiling on tableau size.  Per-branch LOOP/PRUNE checks make every
# build finite, but formulas nesting several eventualities under G have
# worst-case exponential trees; past this many nodes the builder raises
# instead of grinding on.  Every formula the pipeline workflow produces
# stays orders of magnitude below the ceiling.
NODE_LIMIT = 30000


@dataclass
class TableauNode:
    label: Tuple[Formula, ...]
    children: List["TableauNode"] = field(default_factory=list)
    status: str = "interior"  # interior | ticked | crossed
    rule: str = ""

    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Branch:
    nodes: Tuple[TableauNode, ...]
    outcome: str  # ticked | crossed

    @property
    def leaf(self) -> TableauNode:
        return self.nodes[-1]


def is_literal(f: Formula) -> bool:
    if isinstance(f, (TrueF, FalseF, Atom)):
        return True
    if isinstance(f, Not):
        return isinstance(f.sub, (Atom, QDep))
    return False


def is_atomic_qdep(f: Formula) -> bool:
    """A dependency formula whose operands carry no further top-level
    connectives to distribute over (left operand free of And/Or)."""
    return isinstance(f, QDep) and not isinstance(f.left, (And, Or))


def _needs_dist(f: Formula) -> bool:
    return isinstance(f, QDep) and isinstance(f.left, (And, Or))


def apply_dist(f: Formula) -> Formula:
    """Distribute a dependency over its left operand's And/Or structure;
    the right operand is left untouched.  Non-matching input is returned
    unchanged."""
    if not isinstance(f, QDep):
        return f
    left = f.left
    if isinstance(left, And):
        return And(apply_dist(QDep(left.left, f.right, f.bound)),
                   apply_dist(QDep(left.right, f.right, f.bound)))
    if isinstance(left, Or):
        return Or(apply_dist(QDep(left.left, f.right, f.bound)),
                  apply_dist(QDep(left.right, f.right, f.bound)))
    return f


def _dedup(items) -> Tuple[Formula, ...]:
    """Duplicate-free label, lightly simplified: an eventuality whose goal
    already stands in the label is dropped (it is satisfied here and now),
    and a bare `true` is dropped unless it is all the label says.  Both
    preserve the label's conjunction reading; without them poised labels
    rarely repeat exactly and the LOOP rule starves."""
    seen = set()
    out = []
    for f in items:
        if f not in seen:
            seen.add(f)
            out.append(f)
    kept = []
    for f in out:
        if isinstance(f, Eventually) and f.sub in seen:
            continue
        if isinstance(f, Until) and f.right in seen:
            continue
        kept.append(f)
    if len(kept) > 1:
        kept = [f for f in kept if not isinstance(f, TrueF)] or kept
    return tuple(kept)


def _child_labels(label, idx, *repls) -> List[Tuple[Formula, ...]]:
    """Labels a fan-out rule hands its children, distinct ones only."""
    out: List[Tuple[Formula, ...]] = []
    for repl in repls:
        lab = _replace(label, idx, *repl)
        if lab not in out:
            out.append(lab)
    return out


def _replace(label: Tuple[Formula, ...], idx: int, *repl: Formula) -> Tuple[Formula, ...]:
    out = list(label[:idx]) + list(repl) + list(label[idx + 1:])
    return _dedup(out)


def _is_poised(label: Tuple[Formula, ...]) -> bool:
    return all(is_literal(f) or is_atomic_qdep(f) or isinstance(f, Next)
               for f in label)


def _has_contradiction(label: Tuple[Formula, ...]) -> bool:
    if any(f == FALSE for f in label):
        return True
    positives = {f for f in label if isinstance(f, Atom)}
    for f in label:
        if isinstance(f, Not) and isinstance(f.sub, Atom) and f.sub in positives:
            return True
    return False


def _eventualities(label: Tuple[Formula, ...]) -> frozenset:
    evs = set()
    for f in label:
        if isinstance(f, Eventually):
            evs.add(f)
        elif isinstance(f, Until):
            evs.add(f)
    return frozenset(evs)


def _satisfies(label: Tuple[Formula, ...], ev: Formula) -> bool:
    # an eventuality F g / p U g counts as satisfied in a label where its
    # goal formula g appears
    goal = ev.sub if isinstance(ev, Eventually) else ev.right
    return goal in label


class _Builder:
    def __init__(self):
        self.count = 0

    def node(self, label: Tuple[Formula, ...]) -> TableauNode:
        self.count += 1
        if self.count > NODE_LIMIT:
            raise RuntimeError("tableau exceeded %d nodes" % NODE_LIMIT)
        return TableauNode(label)

    def expand(self, node: TableauNode, history: List[Tuple[Formula, ...]],
               poised_history: List[Tuple[Formula, ...]]):
        label = node.label
        if _has_contradiction(label):
            node.status = "crossed"
            node.rule = "contradiction"
            return
        # PRUNE: the label's third appearance is cut when the stretch since
        # the previous appearance satisfied no eventuality that the stretch
        # before it did not already satisfy
        occurrences = [i for i, past in enumerate(history) if past == label]
        if len(occurrences) >= 2:
            prev, last = occurrences[-2], occurrences[-1]
            evs = _eventualities(label)
            earlier = {ev for ev in evs
                       if any(_satisfies(mid, ev) for mid in history[prev + 1:last])}
            recent = {ev for ev in evs
                      if any(_satisfies(mid, ev) for mid in history[last + 1:])}
            if recent <= earlier:
                node.status = "crossed"
                node.rule = "PRUNE"
                return
        if len(occurrences) >= 4:
            # hard backstop: no described rule fired after four repeats
            node.status = "crossed"
            node.rule = "PRUNE"
            return
        if _is_poised(label):
            if label in poised_history:
                node.status = "ticked"
                node.rule = "LOOP"
                return
            nexts = [f.sub for f in label if isinstance(f, Next)]
            if not nexts:
                node.status = "ticked"
                node.rule = "open"
                return
            child = self.node(_dedup(nexts))
            node.rule = "X"
            node.children.append(child)
            self.expand(child, history + [label], poised_history + [label])
            return
        # first non-poised member decides the rule
        for idx, f in enumerate(label):
            if is_literal(f) or is_atomic_qdep(f) or isinstance(f, Next):
                continue
            if isinstance(f, And):
                node.rule = "AND"
                child = self.node(_replace(label, idx, f.left, f.right))
                node.children.append(child)
                self.expand(child, history + [label], poised_history)
                return
            if isinstance(f, Or):
                node.rule = "OR"
                for lab in _child_labels(label, idx, (f.left,), (f.right,)):
                    node.children.append(self.node(lab))
                for child in node.children:
                    self.expand(child, history + [label], poised_history)
                return
            if isinstance(f, Globally):
                node.rule = "G"
                child = self.node(_replace(label, idx, f.sub, Next(f)))
                node.children.append(child)
                self.expand(child, history + [label], poised_history)
                return
            if isinstance(f, Eventually):
                node.rule = "F"
                for lab in _child_labels(label, idx, (f.sub,), (Next(f),)):
                    node.children.append(self.node(lab))
                for child in node.children:
                    self.expand(child, history + [label], poised_history)
                return
            if isinstance(f, Until):
                node.rule = "U"
                for lab in _child_labels(label, idx, (f.right,), (f.left, Next(f))):
                    node.children.append(self.node(lab))
                for child in node.children:
                    self.expand(child, history + [label], poised_history)
                return
            if _needs_dist(f):
                node.rule = "DIST"
                child = self.node(_replace(label, idx, apply_dist(f)))
                node.children.append(child)
                self.expand(child, history + [label], poised_history)
                return
            if isinstance(f, Not):
                # safety net: push one negation step and continue
                node.rule = "NNF"
                child = self.node(_replace(label, idx, nnf(f)))
                node.children.append(child)
                self.expand(child, history + [label], poised_history)
                return
            raise TypeError("no tableau rule for %r" % (f,))
        raise AssertionError("non-poised label with no expandable member")


def build_tableau(f: Formula) -> TableauNode:
    """Build the full tableau for ``f`` (normalized internally)."""
    root_formula = nnf(f)
    builder = _Builder()
    root = builder.node((root_formula,))
    if root_formula == TRUE:
        root.status = "ticked"
        root.rule = "open"
        return root
    builder.expand(root, [], [])
    return root


def branches(root: TableauNode) -> List[Branch]:
    """All root-to-leaf paths, left to right."""
    out: List[Branch] = []

    def walk(node, acc):
        acc = acc + [node]
        if node.is_leaf():
            outcome = node.status if node.status in ("ticked", "crossed") else "ticked"
            out.append(Branch(tuple(acc), outcome))
            return
        for child in node.children:
            walk(child, acc)

    walk(root, [])
    return out


def terminal_node(b: Branch) -> Tuple[Formula, ...]:
    """The recurring content of a ticked branch: its last poised label with
    next-step obligations stripped."""
    if b.outcome != "ticked":
        raise ValueError("terminal content is defined for ticked branches only")
    for node in reversed(b.nodes):
        if _is_poised(node.label):
            return tuple(f for f in node.label if not isinstance(f, Next))
    # degenerate branch with no poised node (e.g. plain `true`)
    return tuple(f for f in b.leaf.label if not isinstance(f, Next))


def _fmt(f: Formula) -> str:
    return str(f)


def export_dot(root: TableauNode) -> str:
    """Deterministic DOT text with labels, tick/cross marks, and rule tags."""
    lines = ["digraph tableau {", '  node [shape=box, fontname="monospace"];']
    counter = [0]

    def walk(node) -> int:
        my_id = counter[0]
        counter[0] += 1
        text = ", ".join(_fmt(f) for f in node.label) or "(empty)"
        mark = {"ticked": " ✓", "crossed": " ×"}.get(node.status, "")
        rule = (" [%s]" % node.rule) if node.rule else ""
        safe = text.replace("\\", "\\\\").replace('"', '\\"')
        lines.append('  n%d [label="%s%s%s"];' % (my_id, safe, rule, mark))
        for child in node.children:
            child_id = walk(child)
            lines.append("  n%d -> n%d;" % (my_id, child_id))
        return my_id

    walk(root)
    lines.append("}")
    return "\n".join(lines)
