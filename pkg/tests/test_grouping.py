"""Partitioning processes into monitor groups and assigning conjuncts."""

import itertools
import json

import pytest

from costmon import (
    Eventually,
    Not,
    Or,
    UnobservableAtomError,
    assign_conjuncts,
    atoms,
    build_tableau,
    evaluate_trace,
    load_graph,
    make_event,
    negate,
    organize_groups,
    parse_formula,
    plan_monitors,
    unwind,
)

TWO_PROC_DOC = json.dumps({"processes": [
    {"pid": "p0", "inputs": ["e"], "outputs": ["a"], "cost": 1},
    {"pid": "p1", "inputs": ["a"], "outputs": ["b"], "cost": 1},
]})


def fnot(text: str) -> Eventually:
    return Eventually(Not(parse_formula(text)))


# ---------------------------------------------------------------------------
# the pipeline: one row per process

def test_pipeline_groups_are_singletons(pipeline, phi_pipeline):
    plan = plan_monitors(phi_pipeline, pipeline)
    rows = [(g.members, g.formula) for g in plan.groups]
    assert rows == [
        (("p0",), fnot("(I0 o<=11 O0)")),
        (("p1",), fnot("(I1 o<=16 O1)")),
        (("p2",), fnot("(O0 o<=12 O2)")),
        (("p3",), fnot("(O0 o<=13 O3)")),
        (("p4",), fnot("(O2 o<=16 O4)")),
        (("p5",), fnot("(O3 o<=16 O5)")),
        (("p6",), fnot("((O1 & (O4 & O5)) o<=20 Of)")),
    ]
    for g in plan.groups:
        assert g.comm_order == g.members
        assert len(g.branch_formulas) == 1


def test_pipeline_assignment_rows(pipeline, phi_pipeline):
    plan = plan_monitors(phi_pipeline, pipeline)
    assign = assign_conjuncts(plan.groups, plan.unwound)
    assert len(assign) == 7
    assert assign["p0"] == fnot("(I0 o<=11 O0)")
    assert assign["p6"] == fnot("((O1 & (O4 & O5)) o<=20 Of)")


# ---------------------------------------------------------------------------
# algorithm corners

def test_single_branch_keeps_everyone_together(pipeline):
    f = parse_formula("!O0")
    groups = organize_groups(pipeline.processes, build_tableau(f), f,
                             graph=pipeline)
    assert len(groups) == 1
    assert groups[0].members == ("p0", "p1", "p2", "p3", "p4", "p5", "p6")
    assert groups[0].formula == f


def test_overlapping_branches_merge():
    g = load_graph(TWO_PROC_DOC)
    f = parse_formula("F (!a) | F (!(a & b))")
    groups = organize_groups(g.processes, build_tableau(f), f, graph=g)
    assert len(groups) == 1
    grp = groups[0]
    assert grp.members == ("p0", "p1")
    assert set(grp.branch_formulas) == {
        parse_formula("!a"), parse_formula("F (!a)"),
        parse_formula("!b"), parse_formula("F (!a | !b)"),
    }
    # the merged disjunction says the same thing as the input
    for n in range(0, 4):
        for combo in itertools.product([(), ("a",), ("b",), ("a", "b")],
                                       repeat=n):
            tr = [make_event(props=c) for c in combo]
            assert evaluate_trace(grp.formula, tr) == evaluate_trace(f, tr)


def test_unobservable_atom_is_rejected(pipeline):
    f = parse_formula("F (!zz)")
    with pytest.raises(UnobservableAtomError, match="zz"):
        organize_groups(pipeline.processes, build_tableau(f), f, graph=pipeline)


def test_conjunct_without_producer_is_rejected(pipeline):
    # both operands live in the environment, so no process can own the row
    f = parse_formula("G (I0 o<=2 I1)")
    u = unwind(f, pipeline)
    neg = negate(u.formula)
    groups = organize_groups(pipeline.processes, build_tableau(neg), neg,
                             graph=pipeline)
    with pytest.raises(UnobservableAtomError, match="no producing member"):
        assign_conjuncts(groups, u)


# ---------------------------------------------------------------------------
# contract over both systems

def test_group_invariants(pipeline, phi_pipeline):
    plan = plan_monitors(phi_pipeline, pipeline)
    seen = set()
    for g in plan.groups:
        assert len(g.members) > 0
        assert not (set(g.members) & seen)
        seen |= set(g.members)
        assert atoms(g.formula)
    union = set()
    for g in plan.groups:
        union |= atoms(g.formula)
    assert union == atoms(plan.negated)


def test_group_disjunction_matches_negated_formula(pipeline, phi_pipeline):
    plan = plan_monitors(phi_pipeline, pipeline)
    merged = plan.groups[0].formula
    for g in plan.groups[1:]:
        merged = Or(merged, g.formula)
    events = [(), ("I0", "I1"), ("O0",), ("Of",)]
    for n in range(0, 3):
        for combo in itertools.product(events, repeat=n):
            tr = [make_event(props=c, cost=1) for c in combo]
            assert evaluate_trace(merged, tr) == evaluate_trace(plan.negated, tr)
