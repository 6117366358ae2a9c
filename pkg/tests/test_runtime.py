"""Decentralized monitor execution against the centralized oracle."""

import json

import pytest

from costmon import (
    FaultSpec,
    Verdict,
    aggregate_verdict,
    evaluate_trace,
    evaluate_trace_with_position,
    example2_scenario,
    load_graph,
    make_event,
    merge_traces,
    plan_monitors,
    parse_formula,
    random_scenario,
    run_decentralized,
    run_scenario,
    synthesize_monitors,
)

from conftest import CHAIN_DOC

U, T, F = Verdict.UNKNOWN, Verdict.TRUE, Verdict.FALSE

QUICK_LIMITS = {"max_processes": 5, "max_fanout": 3, "max_cost": 3,
                "max_rounds": 15}


def monitors_for(formula_text, graph):
    plan = plan_monitors(parse_formula(formula_text), graph)
    return plan, synthesize_monitors(plan.groups, plan.assignment,
                                     plan.index_table, graph=graph)


# ---------------------------------------------------------------------------
# synthesis shape

def test_pipeline_gets_one_monitor_per_process(pipeline, phi_pipeline):
    plan = plan_monitors(phi_pipeline, pipeline)
    mons = synthesize_monitors(plan.groups, plan.assignment, plan.index_table,
                               graph=pipeline)
    assert [m.pid for m in mons] == ["p0", "p1", "p2", "p3", "p4", "p5", "p6"]


def test_process_without_a_conjunct_gets_no_monitor():
    chain = load_graph(CHAIN_DOC)
    _, mons = monitors_for("G (I0 o<=5 O0)", chain)
    assert [m.pid for m in mons] == ["p0"]


def test_shared_group_members_carry_the_same_formula():
    chain = load_graph(CHAIN_DOC)
    plan, mons = monitors_for("!O0", chain)
    assert len(plan.groups) == 1
    assert len({m.assigned for m in mons}) == 1
    assert [m.pid for m in mons] == list(plan.groups[0].comm_order)


# ---------------------------------------------------------------------------
# the stalled-producer arithmetic

def test_stalled_source_detected_eleven_rounds_after_activation():
    sc = example2_scenario(fault=FaultSpec("p0", "drop", 0), stimulus_round=3)
    rep = run_scenario(sc).report
    assert rep.global_verdict is F
    assert rep.detecting_pid == "p0"
    assert rep.detection_round == 14  # activation at 3 + local budget 11
    assert rep.detections[0][2] == parse_formula("F (!(I0 o<=11 O0))")


def test_detection_beats_the_centralized_observer():
    sc = example2_scenario(fault=FaultSpec("p0", "drop", 0), stimulus_round=3)
    res = run_scenario(sc)
    verdict, pos = evaluate_trace_with_position(sc.formula,
                                                merge_traces(res.per_process_traces))
    assert (verdict, pos) == (F, 24)
    assert res.report.detection_round == 14 <= pos


def test_sink_fault_detected_by_the_sink():
    sc = example2_scenario(fault=FaultSpec("p6", "drop", 0), stimulus_round=3)
    res = run_scenario(sc)
    rep = res.report
    assert rep.global_verdict is F
    assert rep.detecting_pid == "p6"
    _, pos = evaluate_trace_with_position(sc.formula,
                                          merge_traces(res.per_process_traces))
    assert rep.detection_round == 23 <= pos == 24


def test_nominal_run_stays_unknown():
    rep = run_scenario(example2_scenario(stimulus_round=3, rounds=40)).report
    assert rep.global_verdict is U
    assert rep.detection_round is None
    assert rep.rounds_run == 40


# ---------------------------------------------------------------------------
# rounds, messages, aggregation

def test_empty_traces_resolve_immediately(pipeline, phi_pipeline):
    plan = plan_monitors(phi_pipeline, pipeline)
    mons = synthesize_monitors(plan.groups, plan.assignment, plan.index_table,
                               graph=pipeline)
    rep = run_decentralized({p.pid: [] for p in pipeline.processes}, mons)
    assert rep.global_verdict is U
    assert rep.rounds_run == 0


def test_singleton_groups_never_talk():
    sc = example2_scenario(fault=FaultSpec("p0", "drop", 0), stimulus_round=3)
    rep = run_scenario(sc).report
    assert sum(rep.per_round_messages) == 0


def test_shared_group_announces_resolved_values_downstream():
    chain = load_graph(CHAIN_DOC)
    _, mons = monitors_for("!O0", chain)
    traces = {"p0": [make_event(props=("O0",), cost=1), make_event(cost=1)],
              "p1": [make_event(cost=1)] * 2,
              "p2": [make_event(cost=1)] * 2}
    rep = run_decentralized(traces, mons)
    assert rep.global_verdict is F
    assert rep.detecting_pid == "p2"  # last in the relay order confirms
    assert rep.per_round_messages == (2,)


def test_mismatched_trace_lengths_are_rejected():
    chain = load_graph(CHAIN_DOC)
    _, mons = monitors_for("G (I0 o<=5 O0)", chain)
    traces = {"p0": [make_event(cost=1)], "p1": [], "p2": []}
    with pytest.raises(ValueError):
        run_decentralized(traces, mons)


def test_aggregation_table():
    assert aggregate_verdict([U, T]) is F
    assert aggregate_verdict([U, U]) is U
    assert aggregate_verdict([F, F]) is U
    assert aggregate_verdict([F, F], eventually_rooted=True) is T


# ---------------------------------------------------------------------------
# contract checks

def test_reports_are_reproducible():
    runs = [run_scenario(example2_scenario(fault=FaultSpec("p3", "drop", 0),
                                           stimulus_round=3)).report
            for _ in range(2)]
    assert json.dumps(runs[0].to_dict()) == json.dumps(runs[1].to_dict())


def test_random_scenarios_agree_with_the_oracle():
    # small-scale version of the acceptance sweep
    for seed in range(20):
        sc = random_scenario(seed, QUICK_LIMITS)
        res = run_scenario(sc)
        rep = res.report
        merged = merge_traces(res.per_process_traces)
        if rep.global_verdict in (T, F):
            assert evaluate_trace(sc.formula, merged) is rep.global_verdict
        if rep.global_verdict is F:
            _, pos = evaluate_trace_with_position(sc.formula, merged)
            assert rep.detection_round <= pos
