"""Rewriting an end-to-end budget into per-process conjuncts."""

import pytest

from conftest import CHAIN_DOC, PIPELINE_DOC
from costmon import (
    And,
    Atom,
    Globally,
    GraphError,
    InfeasibleConstraintError,
    QDep,
    atoms,
    extract_qdep,
    load_graph,
    local_constraint,
    parse_formula,
    unwind,
)
from costmon.depgraph import Process
from costmon.unwinding import apply_dependency_rule

from oracles import min_downstream


def dep(left: str, right: str, q: int) -> QDep:
    return parse_formula("(%s o<=%d %s)" % (left, q, right))


def conjuncts(f):
    # flatten an And spine into its leaves
    stack, out = [f], []
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.extend([g.right, g.left])
        else:
            out.append(g)
    return out


# ---------------------------------------------------------------------------
# extract_qdep

def test_extract_single_dependency():
    got = extract_qdep(parse_formula("G ((c & d) o<=10 e)"))
    assert len(got) == 1
    t = got[0]
    assert t.left == And(Atom("c"), Atom("d"))
    assert t.right == Atom("e")
    assert t.bound == 10


def test_extract_nothing_without_dependencies():
    assert extract_qdep(parse_formula("G (a & F b)")) == []


def test_extract_preserves_preorder():
    got = extract_qdep(parse_formula("(a o<=5 b) & (b o<=3 c)"))
    assert [(t.left, t.right, t.bound) for t in got] == [
        (Atom("a"), Atom("b"), 5),
        (Atom("b"), Atom("c"), 3),
    ]


def test_extract_keeps_duplicates():
    got = extract_qdep(parse_formula("(a o<=5 b) | (a o<=5 b)"))
    assert len(got) == 2


# ---------------------------------------------------------------------------
# local_constraint

def test_local_constraints_on_the_pipeline(pipeline):
    assert local_constraint(pipeline, "p0", "Of", 20) == 11
    assert local_constraint(pipeline, "p2", "Of", 20) == 12
    assert local_constraint(pipeline, "p3", "Of", 20) == 13
    assert local_constraint(pipeline, "p6", "Of", 20) == 20


def test_local_constraint_matches_path_sums(pipeline):
    # q minus the cheapest downstream cost, recomputed from the raw
    # document without the graph machinery
    for pid in ("p0", "p1", "p2", "p3", "p4", "p5", "p6"):
        down = min_downstream(PIPELINE_DOC, pid, "Of")
        assert local_constraint(pipeline, pid, "Of", 20) == 20 - down


def test_local_constraint_rejects_uncoverable_budget(pipeline):
    with pytest.raises(InfeasibleConstraintError,
                       match=r"budget 5 cannot cover path p0 -> p2 -> p4 -> p6"):
        local_constraint(pipeline, "p0", "Of", 5)


# ---------------------------------------------------------------------------
# apply_dependency_rule

def test_rule_single_input():
    p = Process(pid="p0", inputs=("I0",), outputs=("O0",), cost=2)
    assert apply_dependency_rule(p, "O0", 11) == dep("I0", "O0", 11)


def test_rule_conjoins_all_inputs():
    p = Process(pid="p6", inputs=("O1", "O4", "O5"), outputs=("Of",), cost=4)
    got = apply_dependency_rule(p, "Of", 20)
    assert got == QDep(And(Atom("O1"), And(Atom("O4"), Atom("O5"))),
                       Atom("Of"), 20)


def test_rule_covers_only_the_requested_output():
    p = Process(pid="px", inputs=("I",), outputs=("O1", "O2"), cost=1)
    assert apply_dependency_rule(p, "O2", 7) == dep("I", "O2", 7)


# ---------------------------------------------------------------------------
# unwind

def test_chain_unwinding():
    g = load_graph(CHAIN_DOC)
    u = unwind(parse_formula("G (I0 o<=12 Of)"), g)
    want = {dep("I0", "O0", 5), dep("O0", "O1", 8), dep("O1", "Of", 12)}
    got = conjuncts(u.formula)
    assert all(isinstance(c, Globally) for c in got)
    assert {c.sub for c in got} == want
    # constraints re-derived from the raw document: q minus downstream sums
    for pid, d in u.entries:
        assert u.constraint_table[d] == 12 - min_downstream(CHAIN_DOC, pid, "Of")


def test_pipeline_unwinding(pipeline, phi_pipeline):
    u = unwind(phi_pipeline, pipeline)
    want = {
        dep("I0", "O0", 11): 11,
        dep("I1", "O1", 16): 16,
        dep("O0", "O2", 12): 12,
        dep("O0", "O3", 13): 13,
        dep("O2", "O4", 16): 16,
        dep("O3", "O5", 16): 16,
        QDep(And(Atom("O1"), And(Atom("O4"), Atom("O5"))), Atom("Of"), 20): 20,
    }
    assert u.constraint_table == want
    assert len(u.entries) == 7
    assert {pid for pid, _ in u.entries} == {"p0", "p1", "p2", "p3", "p4", "p5", "p6"}
    for pid, d in u.entries:
        assert u.provenance[d] == pid


def test_unwinding_preserves_temporal_wrapper(pipeline, phi_pipeline):
    u = unwind(phi_pipeline, pipeline)
    for c in conjuncts(u.formula):
        assert isinstance(c, Globally)
        assert isinstance(c.sub, QDep)


def test_environment_only_dependency_left_alone(pipeline):
    f = parse_formula("G (I0 o<=5 I1)")
    u = unwind(f, pipeline)
    assert u.formula == f
    assert len(u.entries) == 0


def test_constraints_grow_along_every_path(pipeline, phi_pipeline):
    u = unwind(phi_pipeline, pipeline)
    by_pid = {pid: u.constraint_table[d] for pid, d in u.entries}
    for path in pipeline.dependency_paths("Of"):
        values = [by_pid[pid] for pid in path]
        assert values == sorted(values)
        assert values[-1] == 20


def test_unwinding_budget_must_cover_the_deepest_path(pipeline):
    with pytest.raises(InfeasibleConstraintError, match="cannot cover path"):
        unwind(parse_formula("G ((I0 & I1) o<=5 Of)"), pipeline)


def test_unknown_variable_is_a_graph_error(pipeline):
    with pytest.raises(GraphError, match="Zz"):
        unwind(parse_formula("G (I0 o<=9 Zz)"), pipeline)


def test_unwinding_only_adds_atoms(pipeline, phi_pipeline):
    u = unwind(phi_pipeline, pipeline)
    assert atoms(phi_pipeline) <= atoms(u.formula)
    assert atoms(u.formula) == {"I0", "I1", "O0", "O1", "O2", "O3", "O4", "O5", "Of"}
