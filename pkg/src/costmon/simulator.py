"""Synchronous discrete-event simulator with fault injection and recovery.

A process starts the round all of its inputs have arrived and emits its
outputs a fixed number of rounds later (its latency, never below its
declared lower-bound cost).  One round accrues one cost unit on a shared
clock.  Faults drop or postpone emissions; recovery actions fire when the
designated watcher reports a violation and mutate the remaining run.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .depgraph import DependencyGraph, Process, load_graph
from .formulas import (
    Atom,
    Event,
    Eventually,
    Formula,
    Globally,
    QDep,
    Verdict,
    conj,
    negate,
    parse_formula,
    subformula_index,
)
from .grouping import assign_conjuncts, organize_groups
from .runtime import (
    BudgetWatcher,
    LocalMonitor,
    MonitorReport,
    aggregate_verdict,
    compile_report,
    monitor_round,
    synthesize_monitors,
)
from .tableau import build_tableau
from .unwinding import UnwoundFormula, unwind

FAULT_KINDS = ("drop", "delay", "trigger_failure")
RECOVERY_KINDS = ("eject_to_bin3", "reference_second_sensor",
                  "reduce_belt_speed")


@dataclass(frozen=True)
class FaultSpec:
    target: str  # pid or variable
    kind: str
    at_round: int = 0
    extra: int = 0  # additional rounds, delay only

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError("unknown fault kind %r" % self.kind)
        if self.at_round < 0:
            raise ValueError("at_round must be non-negative")
        if self.kind == "delay" and self.extra <= 0:
            raise ValueError("delay needs extra > 0")

    @property
    def key(self) -> str:
        return "%s@%s" % (self.kind, self.target)


@dataclass(frozen=True)
class RecoveryAction:
    kind: str
    trigger: Optional[Formula] = None  # designated sub-formula; None = any
    params: Tuple[Tuple[str, object], ...] = ()

    def __post_init__(self):
        if self.kind not in RECOVERY_KINDS:
            raise ValueError("unknown recovery kind %r" % self.kind)

    def param(self, name: str, default=None):
        for k, v in self.params:
            if k == name:
                return v
        return default


@dataclass(frozen=True)
class Scenario:
    graph: DependencyGraph
    behaviors: Dict[str, int]  # pid -> latency rounds, >= declared cost
    stimuli: Dict[int, frozenset]  # round -> environment variables pulsing
    faults: Tuple[FaultSpec, ...] = ()
    recoveries: Dict[str, RecoveryAction] = field(default_factory=dict)
    seed: int = 0
    formula: Optional[Formula] = None
    suggested_rounds: Optional[int] = None
    # variables a colorway never emits (classifier stays silent on the
    # other color) and alternative start conditions (a process that goes
    # on whichever of several input sets completes first)
    suppressed_outputs: frozenset = frozenset()
    trigger_sets: Dict[str, Tuple[frozenset, ...]] = field(default_factory=dict)
    deadline: Optional[Tuple[str, int]] = None  # (variable, round)
    monitor_specs: Tuple[Tuple[str, str, Formula], ...] = ()
    baseline_specs: Tuple[Tuple[str, str, Formula], ...] = ()
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for pid, latency in self.behaviors.items():
            p = self.graph.by_pid.get(pid)
            if p is not None and latency < p.cost:
                raise ValueError(
                    "latency %d of %s below its lower bound %d"
                    % (latency, pid, p.cost))


@dataclass(frozen=True)
class SimulationResult:
    per_process_traces: Dict[str, Tuple[Event, ...]]
    global_trace: Tuple[Event, ...]
    report: MonitorReport
    recovery_log: Tuple[Tuple[int, FaultSpec, RecoveryAction, Formula], ...]
    arrival_rounds: Dict[str, int]
    outcome: Optional[str] = None
    effective_deadline: Optional[int] = None


def latched(trace: Sequence[Event]) -> Tuple[Event, ...]:
    """View where every proposition stays true once seen.  Dependency
    anchors whose parts arrive in different rounds only close under this
    view, so the centralized oracle evaluates it."""
    out: List[Event] = []
    seen: Set[str] = set()
    for e in trace:
        seen |= e.props
        out.append(Event(frozenset(seen), e.cost))
    return tuple(out)


def merge_traces(traces: Dict[str, Sequence[Event]],
                 cost_per_round: int = 1) -> Tuple[Event, ...]:
    """Global trace: round k carries the union of all local propositions.
    The round clock is shared, so a merged round costs one unit, not the
    sum of the per-process unit costs."""
    if not traces:
        return ()
    lengths = {len(t) for t in traces.values()}
    if len(lengths) > 1:
        raise ValueError("per-process traces differ in length")
    n = lengths.pop()
    out = []
    for k in range(n):
        props: Set[str] = set()
        for t in traces.values():
            props |= t[k].props
        out.append(Event(frozenset(props), cost_per_round))
    return tuple(out)


@dataclass(frozen=True)
class MonitorPlan:
    formula: Formula
    graph: DependencyGraph
    unwound: UnwoundFormula
    negated: Formula
    groups: tuple
    assignment: Dict[str, Formula]
    index_table: Dict[Formula, int]
    precharge: bool = True

    def fresh_monitors(self) -> List[LocalMonitor]:
        return synthesize_monitors(
            list(self.groups), self.assignment, self.index_table,
            self.graph, precharge=self.precharge)


def plan_monitors(f: Formula, graph: DependencyGraph, *,
                  precharge: bool = True) -> MonitorPlan:
    """Full pipeline: unwind, negate, tableau, group, assign."""
    unwound = unwind(f, graph)
    negated = negate(unwound.formula)
    root = build_tableau(negated)
    groups = organize_groups(list(graph.processes), root, negated, graph)
    assignment = assign_conjuncts(groups, unwound)
    index_table = subformula_index(negated)
    return MonitorPlan(f, graph, unwound, negated, tuple(groups),
                       assignment, index_table, precharge)


def _known_targets(graph: DependencyGraph) -> Set[str]:
    return set(graph.by_pid) | set(graph.producer) | set(graph.environment)


def run_simulation(scenario: Scenario, rounds: int,
                   monitors: Sequence[LocalMonitor],
                   root: Optional[Formula] = None) -> SimulationResult:
    """Drives the process model and the monitors in lockstep.  The run is
    never cut short by a verdict: detection triggers recovery and the
    physical outcome of the remaining rounds is part of the result."""
    graph = scenario.graph
    known = _known_targets(graph)
    for f in scenario.faults:
        if f.target not in known:
            raise ValueError("fault target %r is neither a process nor a "
                             "variable" % f.target)
    if root is None:
        root = scenario.formula
    eventually_rooted = isinstance(root, Eventually)

    drop_from: Dict[str, int] = {}  # variable -> first suppressed round
    delays: Dict[str, Tuple[int, int]] = {}  # pid -> (at_round, extra)
    for f in scenario.faults:
        if f.kind in ("drop", "trigger_failure"):
            if f.target in graph.by_pid:
                for v in graph.by_pid[f.target].outputs:
                    drop_from[v] = min(drop_from.get(v, f.at_round), f.at_round)
            else:
                drop_from[f.target] = min(drop_from.get(f.target, f.at_round),
                                          f.at_round)
        elif f.kind == "delay":
            if f.target not in graph.by_pid:
                raise ValueError("delay fault target %r is not a process"
                                 % f.target)
            delays[f.target] = (f.at_round, f.extra)

    arrived: Dict[str, int] = {}
    started: Set[str] = set()
    pending: List[Tuple[int, str, str]] = []  # (emit round, pid, variable)
    injected: Dict[int, Set[str]] = {}
    recovered: Set[int] = set()
    recovery_log: List[Tuple[int, FaultSpec, RecoveryAction, Formula]] = []
    ejected = False
    deadline_var, deadline_round = (scenario.deadline
                                    if scenario.deadline else (None, None))

    traces: Dict[str, List[Event]] = {pid: [] for pid in sorted(graph.by_pid)}
    history: Dict[str, List[Verdict]] = {m.pid: [] for m in monitors}
    per_round_msgs: List[int] = []

    def suppressed(var: str, rnd: int) -> bool:
        if var in scenario.suppressed_outputs:
            return True
        return var in drop_from and rnd >= drop_from[var]

    def latency(pid: str, start_round: int) -> int:
        lat = scenario.behaviors.get(pid, graph.by_pid[pid].cost)
        if pid in delays and start_round >= delays[pid][0]:
            lat += delays[pid][1]
        return lat

    for rnd in range(rounds):
        pulses: Set[str] = set(scenario.stimuli.get(rnd, ()))
        pulses |= injected.pop(rnd, set())
        still_pending = []
        for emit_round, pid, var in pending:
            if emit_round != rnd:
                still_pending.append((emit_round, pid, var))
            elif not suppressed(var, rnd):
                pulses.add(var)
        pending = still_pending
        # starts cascade within the round so zero-latency chains resolve
        changed = True
        while changed:
            changed = False
            for var in sorted(pulses):
                arrived.setdefault(var, rnd)
            for pid in sorted(graph.by_pid):
                if pid in started:
                    continue
                p = graph.by_pid[pid]
                sets = scenario.trigger_sets.get(
                    pid, (frozenset(p.inputs),))
                if not any(s <= arrived.keys() for s in sets):
                    continue
                started.add(pid)
                changed = True
                lat = latency(pid, rnd)
                for var in p.outputs:
                    if lat <= 0:
                        if not suppressed(var, rnd):
                            pulses.add(var)
                    else:
                        pending.append((rnd + lat, pid, var))
        frozen_pulses = frozenset(pulses)
        events = {pid: Event(frozen_pulses & graph.by_pid[pid].alphabet, 1)
                  for pid in traces}
        for pid in traces:
            traces[pid].append(events[pid])
        if monitors:
            _, messages, _ = monitor_round(
                monitors, events, rnd, eventually_rooted=eventually_rooted)
            per_round_msgs.append(len(messages))
            for m in monitors:
                history[m.pid].append(m.verdict)
        # recovery: only the designated watcher of a configured fault
        # triggers; every other violation is data
        for i, f in enumerate(scenario.faults):
            if i in recovered:
                continue
            action = scenario.recoveries.get(f.key,
                                             scenario.recoveries.get(f.kind))
            if action is None:
                continue
            witness = _triggering_watcher(monitors, action.trigger)
            if witness is None:
                continue
            recovered.add(i)
            recovery_log.append((rnd, f, action, witness.formula))
            if action.kind == "eject_to_bin3":
                ejected = True
            elif action.kind == "reference_second_sensor":
                var = action.param("variable")
                if var is None:
                    raise ValueError("reference_second_sensor needs a "
                                     "'variable' parameter")
                injected.setdefault(rnd + 1, set()).add(var)
            elif action.kind == "reduce_belt_speed":
                if deadline_round is not None and deadline_round > rnd:
                    factor = action.param("factor", 2)
                    deadline_round = rnd + factor * (deadline_round - rnd)

    final = aggregate_verdict([m.verdict for m in monitors],
                              eventually_rooted=eventually_rooted)
    report = compile_report(
        monitors, per_round_msgs,
        {p: tuple(h) for p, h in history.items()},
        rounds, final if final is not Verdict.UNKNOWN else None)
    outcome = None
    if ejected:
        outcome = "ejected_bin3"
    elif deadline_var is not None:
        got = arrived.get(deadline_var)
        outcome = "sorted" if got is not None and got <= deadline_round \
            else "missed"
    fixed = {pid: tuple(t) for pid, t in traces.items()}
    return SimulationResult(
        per_process_traces=fixed,
        global_trace=merge_traces(fixed),
        report=report,
        recovery_log=tuple(recovery_log),
        arrival_rounds=dict(sorted(arrived.items())),
        outcome=outcome,
        effective_deadline=deadline_round)


def _triggering_watcher(monitors: Sequence[LocalMonitor],
                        trigger: Optional[Formula]):
    for m in monitors:
        for w in m.watchers:
            if w.verdict is not Verdict.TRUE:
                continue
            if trigger is None or w.formula == trigger:
                return w
    return None


def run_scenario(scenario: Scenario, rounds: Optional[int] = None, *,
                 monitors: Optional[Sequence[LocalMonitor]] = None,
                 precharge: bool = True) -> SimulationResult:
    """Convenience wrapper: plans monitors from the scenario's formula when
    none are given, then simulates."""
    if rounds is None:
        rounds = scenario.suggested_rounds
        if rounds is None:
            raise ValueError("scenario suggests no round count; pass rounds")
    if monitors is None:
        if scenario.monitor_specs:
            monitors = case_monitors(scenario)
        elif scenario.formula is not None:
            plan = plan_monitors(scenario.formula, scenario.graph,
                                 precharge=precharge)
            monitors = plan.fresh_monitors()
        else:
            monitors = []
    return run_simulation(scenario, rounds, monitors, root=scenario.formula)


def case_monitors(scenario: Scenario,
                  baseline: bool = False) -> List[LocalMonitor]:
    """Monitors from the scenario's literal watcher table (one budget
    watcher per row, no precharge), bypassing the unwinding pipeline."""
    specs = scenario.baseline_specs if baseline else scenario.monitor_specs
    by_pid: Dict[str, List[Tuple[str, Formula]]] = {}
    for name, pid, f in specs:
        by_pid.setdefault(pid, []).append((name, f))
    monitors = []
    for pid in sorted(by_pid):
        watchers = []
        for name, f in by_pid[pid]:
            watchers.append(BudgetWatcher(f, _spec_dep(f), 0))
        assigned = conj([f for _, f in by_pid[pid]])
        monitors.append(LocalMonitor(pid, assigned, watchers,
                                     subformula_index(assigned)))
    return monitors


def _spec_dep(f: Formula) -> QDep:
    g = f
    while isinstance(g, (Globally, Eventually)):
        g = g.sub
    if not isinstance(g, QDep):
        raise ValueError("watcher table rows must be dependency formulas, "
                         "got %s" % f)
    return g


# --- Pipeline example fixture (also a CLI builtin) ---

EXAMPLE2_GRAPH_JSON = """{
  "processes": [
    {"pid": "p0", "inputs": ["I0"], "outputs": ["O0"], "cost": 2},
    {"pid": "p1", "inputs": ["I1"], "outputs": ["O1"], "cost": 3},
    {"pid": "p2", "inputs": ["O0"], "outputs": ["O2"], "cost": 1},
    {"pid": "p3", "inputs": ["O0"], "outputs": ["O3"], "cost": 2},
    {"pid": "p4", "inputs": ["O2"], "outputs": ["O4"], "cost": 4},
    {"pid": "p5", "inputs": ["O3"], "outputs": ["O5"], "cost": 3},
    {"pid": "p6", "inputs": ["O1", "O4", "O5"], "outputs": ["Of"], "cost": 4}
  ],
  "environment": ["I0", "I1"]
}"""


def example2_graph() -> DependencyGraph:
    return load_graph(EXAMPLE2_GRAPH_JSON)


def example2_scenario(fault: Optional[FaultSpec] = None,
                      stimulus_round: int = 3,
                      rounds: int = 40) -> Scenario:
    """Seven-process pipeline scenario: one stimulus, lower-bound
    latencies, budget 20 end to end."""
    g = example2_graph()
    f = parse_formula("G ((I0 & I1) o<=20 Of)")
    return Scenario(
        graph=g,
        behaviors={p.pid: p.cost for p in g.processes},
        stimuli={stimulus_round: frozenset(["I0", "I1"])},
        faults=(fault,) if fault is not None else (),
        formula=f,
        suggested_rounds=rounds)


_SCENARIO_KEYS = frozenset([
    "graph", "behaviors", "stimuli", "faults", "recoveries", "seed",
    "formula", "rounds", "deadline", "suppressed_outputs", "trigger_sets"])


def load_scenario(text: str, base_dir: Optional[str] = None) -> Scenario:
    """Scenario from its JSON form.  The graph is either inline or a file
    path resolved against base_dir.  Raises ValueError on malformed input."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError("scenario is not valid JSON: %s" % e)
    if not isinstance(doc, dict):
        raise ValueError("scenario must be a JSON object")
    unknown = set(doc) - _SCENARIO_KEYS
    if unknown:
        raise ValueError("unknown scenario keys: %s" % sorted(unknown))
    if "graph" not in doc or "stimuli" not in doc:
        raise ValueError("scenario needs 'graph' and 'stimuli'")
    spec = doc["graph"]
    if isinstance(spec, str):
        path = spec if base_dir is None else os.path.join(base_dir, spec)
        with open(path) as fh:
            graph = load_graph(fh.read())
    elif isinstance(spec, dict):
        graph = load_graph(json.dumps(spec))
    else:
        raise ValueError("'graph' must be an object or a file path")
    stimuli = {}
    for key, names in doc["stimuli"].items():
        try:
            rnd = int(key)
        except (TypeError, ValueError):
            raise ValueError("stimulus round %r is not an integer" % key)
        stimuli[rnd] = frozenset(names)
    behaviors = {p.pid: p.cost for p in graph.processes}
    for pid, latency in doc.get("behaviors", {}).items():
        if pid not in behaviors:
            raise ValueError("behavior for unknown process %r" % pid)
        behaviors[pid] = int(latency)
    faults = tuple(
        FaultSpec(target=d["target"], kind=d["kind"],
                  at_round=int(d.get("at_round", 0)),
                  extra=int(d.get("extra", 0)))
        for d in doc.get("faults", ()))
    recoveries = {}
    for key, d in doc.get("recoveries", {}).items():
        trigger = (parse_formula(d["trigger"])
                   if d.get("trigger") is not None else None)
        params = tuple(sorted(d.get("params", {}).items()))
        recoveries[key] = RecoveryAction(d["kind"], trigger, params)
    formula = (parse_formula(doc["formula"])
               if doc.get("formula") is not None else None)
    deadline = None
    if doc.get("deadline") is not None:
        var, rnd = doc["deadline"]
        deadline = (str(var), int(rnd))
    trigger_sets = {
        pid: tuple(frozenset(s) for s in sets)
        for pid, sets in doc.get("trigger_sets", {}).items()}
    return Scenario(
        graph=graph,
        behaviors=behaviors,
        stimuli=stimuli,
        faults=faults,
        recoveries=recoveries,
        seed=int(doc.get("seed", 0)),
        formula=formula,
        suggested_rounds=(int(doc["rounds"])
                          if doc.get("rounds") is not None else None),
        suppressed_outputs=frozenset(doc.get("suppressed_outputs", ())),
        trigger_sets=trigger_sets,
        deadline=deadline)


def load_scenario_file(path: str) -> Scenario:
    with open(path) as fh:
        return load_scenario(fh.read(), base_dir=os.path.dirname(path) or ".")


def random_scenario(seed: int, limits: Mapping) -> Scenario:
    """Seeded random single-sink pipeline with one stimulus and at most one
    drop fault.  Limits: max_processes, max_fanout, max_cost, max_rounds.
    The horizon is sized so that both the original and the unwound formula
    can resolve on violating runs; limits that cannot fit any such system
    are rejected."""
    limits = dict(limits)
    max_p = int(limits["max_processes"])
    max_fan = max(1, int(limits["max_fanout"]))
    max_cost = max(1, int(limits["max_cost"]))
    max_rounds = int(limits["max_rounds"])
    if max_p < 1 or max_rounds < 1:
        raise ValueError("limits must be positive")
    rng = random.Random(seed)
    n = 1 if max_p == 1 else rng.randint(2, min(max_p, 6))
    for cost_cap, slack_cap, stim_cap in ((min(max_cost, 3), 3, 2),
                                          (min(max_cost, 2), 2, 1),
                                          (1, 1, 0), (1, 0, 0)):
        scenario, needed = _build_random(rng, n, max_fan, cost_cap,
                                         slack_cap, stim_cap)
        if needed <= max_rounds:
            return scenario
        n = max(2, n - 1)
    raise ValueError("max_rounds %d too small for any generated system"
                     % max_rounds)


def _build_random(rng: random.Random, n: int, max_fan: int, cost_cap: int,
                  slack_cap: int, stim_cap: int):
    parents: Dict[int, int] = {}
    fan_in: Dict[int, int] = {i: 0 for i in range(n)}
    for i in range(n - 1):
        candidates = [j for j in range(i + 1, n) if fan_in[j] < max_fan]
        if not candidates:
            candidates = [min(range(i + 1, n), key=lambda j: fan_in[j])]
        j = rng.choice(candidates)
        parents[i] = j
        fan_in[j] += 1
    costs = [rng.randint(1, cost_cap) for _ in range(n)]
    children: Dict[int, List[int]] = {j: [] for j in range(n)}
    for i, j in parents.items():
        children[j].append(i)
    procs = []
    env_vars = []
    for j in range(n):
        if children[j]:
            inputs = tuple("v%d" % i for i in sorted(children[j]))
        else:
            env = "e%d" % j
            env_vars.append(env)
            inputs = (env,)
        procs.append(Process("p%d" % j, inputs, ("v%d" % j,), costs[j]))
    g = DependencyGraph(tuple(procs), tuple(env_vars))
    sink_var = "v%d" % (n - 1)
    maxpath = g.lb_completion(sink_var)
    slack = rng.randint(0, slack_cap)
    q = maxpath + slack
    s = rng.randint(0, stim_cap)
    # horizon must cover the centralized falsification of the original
    # formula and of the slowest unwound conjunct
    latest = q + 1
    for p in procs:
        pre = max((g.lb_completion(v) for v in p.inputs), default=0)
        down = g.min_downstream_cost(p.pid, sink_var)
        if down is None:
            continue
        latest = max(latest, pre + (q - down) + 1)
    needed = s + latest + 2
    fault: Optional[FaultSpec] = None
    if rng.random() < 0.6:
        fault = FaultSpec(target="p%d" % rng.randrange(n), kind="drop",
                          at_round=0)
    left = conj([Atom(v) for v in sorted(env_vars)])
    formula = Globally(QDep(left, Atom(sink_var), q))
    scenario = Scenario(
        graph=g,
        behaviors={p.pid: p.cost for p in procs},
        stimuli={s: frozenset(env_vars)},
        faults=(fault,) if fault is not None else (),
        seed=rng.randint(0, 2 ** 31),
        formula=formula,
        suggested_rounds=needed)
    return scenario, needed
