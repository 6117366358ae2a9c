"""Decentralized monitor execution over synchronous rounds.

Each process runs a local monitor for its assigned falsification conjuncts.
Rounds are lockstep: every monitor reads its local event, updates budget
obligations, and forwards newly observed atoms to the next group member,
who receives them within the same round (perfect synchrony).  Groups with
one member never send anything.  Any monitor confirming its conjunct makes
the global property false; satisfaction of a globally-rooted property is
never claimable from a finite prefix, so nominal runs end unknown.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .depgraph import DependencyGraph
from .formulas import (
    Atom,
    Event,
    Eventually,
    FALSE,
    Formula,
    QDep,
    TRUE,
    Verdict,
    atoms,
    disj,
    disjuncts_of,
    progress,
)
from .grouping import MonitorGroup, dep_core


@dataclass(frozen=True)
class MonitorMessage:
    idx: int  # key into the shared subformula index table
    val: Verdict
    round: int


@dataclass(frozen=True)
class Obligation:
    target: Formula  # right operand awaited
    remaining: int
    activation_round: int


class BudgetWatcher:
    """Tracks one budgeted dependency conjunct F!(L o<=c R) at its owner.

    Every round after activation costs one unit (the shared clock), so the
    obligation drains by one per round.  With latched inputs, later
    anchors of L can only be slacker than the first, and once R is latched
    they discharge instantly; a single earliest obligation is therefore
    enough.  The watcher concludes at remaining zero with R still absent:
    any later R costs at least one more unit and cannot fit the budget.
    """

    def __init__(self, formula: Formula, dep: QDep, precharge: int = 0):
        if precharge < 0:
            raise ValueError("precharge must be non-negative")
        self.formula = formula
        self.dep = dep
        self.precharge = precharge
        self._left_atoms = atoms(dep.left)
        self._right_atoms = atoms(dep.right)
        self.obligation: Optional[Obligation] = None
        self._activated = False
        self._satisfied = False
        self.verdict = Verdict.UNKNOWN
        self.detection_round: Optional[int] = None

    def step(self, rnd: int, latched: frozenset) -> None:
        if self.verdict is not Verdict.UNKNOWN:
            return
        right_here = self._right_atoms <= latched
        ob = self.obligation
        if ob is not None:
            remaining = ob.remaining
            if ob.activation_round < rnd:
                remaining -= 1
            if right_here and remaining >= 0:
                self.obligation = None
                self._satisfied = True
            elif remaining <= 0:
                self._fire(rnd)
            else:
                self.obligation = Obligation(ob.target, remaining,
                                             ob.activation_round)
            return
        if not self._activated and self._left_atoms <= latched:
            self._activated = True
            if self._satisfied or right_here:
                self._satisfied = True
                return
            remaining = self.dep.bound - self.precharge
            if remaining <= 0:
                self._fire(rnd)
            else:
                self.obligation = Obligation(self.dep.right, remaining, rnd)

    def _fire(self, rnd: int) -> None:
        self.obligation = None
        self.verdict = Verdict.TRUE
        self.detection_round = rnd


class ResidualWatcher:
    """Progresses an arbitrary assigned formula over the latched view, one
    cost unit per round.  Used by the tail of a multi-member group, where
    the latched set has been completed by forwarded observations."""

    def __init__(self, formula: Formula):
        self.formula = formula
        self.residual = formula
        self.verdict = Verdict.UNKNOWN
        self.detection_round: Optional[int] = None

    def step(self, rnd: int, latched: frozenset) -> None:
        if self.verdict is not Verdict.UNKNOWN:
            return
        self.residual = progress(self.residual, Event(latched, 1))
        if self.residual == TRUE:
            self.verdict = Verdict.TRUE
            self.detection_round = rnd
        elif self.residual == FALSE:
            self.verdict = Verdict.FALSE
            self.detection_round = rnd


class LocalMonitor:
    """Per-process monitor: latches observations, runs its watchers, and
    forwards new group-relevant atoms to its successor in the group."""

    def __init__(self, pid: str, assigned: Formula, watchers: Sequence,
                 index_table: Dict[Formula, int],
                 group_atoms: frozenset = frozenset(),
                 successor: Optional[str] = None):
        self.pid = pid
        self.assigned = assigned
        self.watchers = list(watchers)
        self.index_table = index_table
        self._atom_of_idx = {i: f for f, i in index_table.items()
                             if isinstance(f, Atom)}
        self.group_atoms = group_atoms
        self.successor = successor
        self.latched: set = set()
        self.inbox: List[MonitorMessage] = []
        self.outbox: List[MonitorMessage] = []
        self.rounds_run = 0

    @property
    def verdict(self) -> Verdict:
        vs = [w.verdict for w in self.watchers]
        if any(v is Verdict.TRUE for v in vs):
            return Verdict.TRUE
        if vs and all(v is Verdict.FALSE for v in vs):
            return Verdict.FALSE
        return Verdict.UNKNOWN

    @property
    def obligations(self) -> List[Obligation]:
        return [w.obligation for w in self.watchers
                if isinstance(w, BudgetWatcher) and w.obligation is not None]

    @property
    def detection_round(self) -> Optional[int]:
        rounds = [w.detection_round for w in self.watchers
                  if w.verdict is Verdict.TRUE]
        return min(rounds) if rounds else None

    def step(self, rnd: int, event: Event) -> List[MonitorMessage]:
        newly: List[str] = []
        for msg in self.inbox:
            f = self._atom_of_idx.get(msg.idx)
            if f is None:
                raise ValueError("message references unknown index %d" % msg.idx)
            if msg.val is Verdict.TRUE and f.name not in self.latched:
                self.latched.add(f.name)
                newly.append(f.name)
        self.inbox = []
        for name in sorted(event.props):
            if name not in self.latched:
                self.latched.add(name)
                newly.append(name)
        view = frozenset(self.latched)
        for w in self.watchers:
            w.step(rnd, view)
        self.rounds_run += 1
        if self.successor is None:
            self.outbox = []
        else:
            self.outbox = [
                MonitorMessage(self.index_table[Atom(n)], Verdict.TRUE, rnd)
                for n in newly
                if n in self.group_atoms and Atom(n) in self.index_table]
        return self.outbox


@dataclass(frozen=True)
class MonitorReport:
    global_verdict: Verdict
    detecting_pid: Optional[str]
    detection_round: Optional[int]
    rounds_run: int
    per_round_messages: Tuple[int, ...]
    per_monitor_verdict_history: Dict[str, Tuple[Verdict, ...]]
    detections: Tuple[Tuple[int, str, Formula], ...]  # all firings, ordered

    @property
    def message_total(self) -> int:
        return sum(self.per_round_messages)

    def to_dict(self) -> dict:
        return {
            "global_verdict": self.global_verdict.name,
            "detecting_pid": self.detecting_pid,
            "detection_round": self.detection_round,
            "rounds_run": self.rounds_run,
            "per_round_messages": list(self.per_round_messages),
            "detections": [
                {"round": r, "pid": pid, "formula": str(f)}
                for r, pid, f in self.detections],
        }


def aggregate_verdict(verdicts: Sequence[Verdict], *,
                      eventually_rooted: bool = False) -> Verdict:
    """Global verdict for the monitored property from its falsification
    conjuncts: any confirmed conjunct falsifies it; all conjuncts refuted
    confirms it only when the property is eventuality-rooted, since a
    globally-rooted property has no finite witness of satisfaction."""
    vs = list(verdicts)
    if any(v is Verdict.TRUE for v in vs):
        return Verdict.FALSE
    if vs and all(v is Verdict.FALSE for v in vs):
        return Verdict.TRUE if eventually_rooted else Verdict.UNKNOWN
    return Verdict.UNKNOWN


def _static_precharge(dep: QDep, graph: Optional[DependencyGraph]) -> int:
    """Cost provably consumed before the anchor can complete: the largest
    lower-bound completion cost among the left operand's variables."""
    if graph is None:
        return 0
    return max((graph.lb_completion(a) for a in sorted(atoms(dep.left))),
               default=0)


def synthesize_monitors(groups: Sequence[MonitorGroup],
                        assignment: Dict[str, Formula],
                        index_table: Dict[Formula, int],
                        graph: Optional[DependencyGraph] = None,
                        precharge: bool = True) -> List[LocalMonitor]:
    """One monitor per group member.  Dependency conjuncts assigned to a
    member become budget watchers there; whatever the group formula needs
    beyond those is progressed by the group's last member, whose latched
    view is completed by the forwarded observations of the others."""
    monitors: List[LocalMonitor] = []
    for group in groups:
        order = group.comm_order
        covered: List[Formula] = []
        for pid in assignment:
            if pid in order:
                covered.extend(disjuncts_of(assignment[pid]))
        residual_parts = [f for f in group.branch_formulas if f not in covered]
        for pos, pid in enumerate(order):
            successor = order[pos + 1] if pos + 1 < len(order) else None
            watchers: List = []
            assigned = assignment.get(pid)
            if assigned is not None:
                for part in disjuncts_of(assigned):
                    dep = dep_core(part)
                    if dep is not None:
                        pre = _static_precharge(dep, graph) if precharge else 0
                        watchers.append(BudgetWatcher(part, dep, pre))
                    else:
                        watchers.append(ResidualWatcher(part))
            if successor is None and residual_parts:
                watchers.append(ResidualWatcher(disj(residual_parts)))
            monitors.append(LocalMonitor(
                pid, assigned if assigned is not None else group.formula,
                watchers, index_table,
                group_atoms=atoms(group.formula), successor=successor))
    return monitors


def monitor_round(monitors: Sequence[LocalMonitor],
                  round_events: Dict[str, Event],
                  rnd: Optional[int] = None, *,
                  eventually_rooted: bool = False):
    """One synchronous round: every monitor reads its event; messages reach
    the successor within the round because members run in group order."""
    if rnd is None:
        rnd = monitors[0].rounds_run if monitors else 0
    by_pid = {m.pid: m for m in monitors}
    messages: List[MonitorMessage] = []
    for m in monitors:
        if m.pid not in round_events:
            raise ValueError("no event for process %s in round %d"
                             % (m.pid, rnd))
        out = m.step(rnd, round_events[m.pid])
        if out and m.successor is not None:
            succ = by_pid.get(m.successor)
            if succ is not None:
                succ.inbox.extend(out)
            messages.extend(out)
    verdict = aggregate_verdict([m.verdict for m in monitors],
                                eventually_rooted=eventually_rooted)
    final = verdict if verdict is not Verdict.UNKNOWN else None
    return monitors, messages, final


def run_decentralized(traces: Dict[str, Sequence[Event]],
                      monitors: Sequence[LocalMonitor],
                      root: Optional[Formula] = None) -> MonitorReport:
    """Folds monitor rounds over equal-length per-process traces, stopping
    as soon as the global verdict is decided."""
    lengths = {len(t) for t in traces.values()}
    if len(lengths) > 1:
        raise ValueError("per-process traces differ in length: %s"
                         % sorted(lengths))
    horizon = lengths.pop() if lengths else 0
    eventually_rooted = isinstance(root, Eventually)
    history: Dict[str, List[Verdict]] = {m.pid: [] for m in monitors}
    per_round: List[int] = []
    rounds_run = 0
    final: Optional[Verdict] = None
    for rnd in range(horizon):
        round_events = {pid: traces[pid][rnd] for pid in traces}
        _, messages, final = monitor_round(
            monitors, round_events, rnd, eventually_rooted=eventually_rooted)
        per_round.append(len(messages))
        for m in monitors:
            history[m.pid].append(m.verdict)
        rounds_run = rnd + 1
        if final is not None:
            break
    return compile_report(monitors, per_round,
                          {p: tuple(h) for p, h in history.items()},
                          rounds_run, final)


def compile_report(monitors: Sequence[LocalMonitor],
                   per_round_messages: Sequence[int],
                   history: Dict[str, Tuple[Verdict, ...]],
                   rounds_run: int,
                   final: Optional[Verdict]) -> MonitorReport:
    """Assembles the report from finished monitors: all watcher firings in
    (round, pid) order, the earliest one named as the detection."""
    verdict = final if final is not None else Verdict.UNKNOWN
    detections: List[Tuple[int, str, Formula]] = []
    for m in monitors:
        for w in m.watchers:
            if w.verdict is Verdict.TRUE and w.detection_round is not None:
                detections.append((w.detection_round, m.pid, w.formula))
    detections.sort(key=lambda d: (d[0], d[1]))
    detecting_pid = detections[0][1] if detections else None
    detection_round = detections[0][0] if detections else None
    return MonitorReport(
        global_verdict=verdict,
        detecting_pid=detecting_pid,
        detection_round=detection_round,
        rounds_run=rounds_run,
        per_round_messages=tuple(per_round_messages),
        per_monitor_verdict_history=dict(history),
        detections=tuple(detections))
