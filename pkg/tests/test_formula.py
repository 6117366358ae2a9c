"""Formula layer: grammar, normalization, progression, oracle agreement."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from costmon.formulas import (
    FALSE,
    TRUE,
    And,
    Atom,
    Budget,
    Eventually,
    FormulaSyntaxError,
    Globally,
    Next,
    Not,
    Or,
    QDep,
    Until,
    Verdict,
    atoms,
    evaluate_trace,
    make_event,
    negate,
    nnf,
    parse_formula,
    progress,
    render_formula,
    subformula_index,
)
from oracles import flip, pair_verdict_bare, pair_verdict_globally

a, b, c = Atom("a"), Atom("b"), Atom("c")


def E(names=(), cost=0):
    return make_event(names, cost)


# every event over two atoms with costs 0..2; the sweep universe
EVENTS2 = [make_event(ps, cost)
           for ps in ((), ("a",), ("b",), ("a", "b"))
           for cost in (0, 1, 2)]


def all_traces(events, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(events, repeat=n)


# ---------------------------------------------------------------------------
# grammar

def test_parse_dep_formula():
    f = parse_formula("G ((a & b) o<=5 c)")
    assert f == Globally(QDep(And(a, b), c, 5))


def test_parse_literals():
    assert parse_formula("true") == TRUE
    assert parse_formula("false") == FALSE


def test_parse_precedence():
    # U binds loosest, then |, then &, then the unary operators
    f = parse_formula("a | b & c U G a")
    assert f == Until(Or(a, And(b, c)), Globally(a))


def test_parse_unbalanced_reports_position():
    with pytest.raises(FormulaSyntaxError) as err:
        parse_formula("G (a &")
    assert "position 6" in str(err.value)


def test_parse_rejects_negative_bound():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(a o<=-1 b)")


def test_parse_trailing_garbage():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("G (a & b))")


names = st.sampled_from(["a", "b", "c"])
leaves = st.one_of(st.builds(Atom, names), st.just(TRUE), st.just(FALSE))

# dependency operands are state predicates, so keep them propositional
props_only = st.recursive(
    leaves,
    lambda ch: st.one_of(st.builds(And, ch, ch), st.builds(Or, ch, ch),
                         st.builds(Not, ch)),
    max_leaves=4)


def _extend(children):
    return st.one_of(
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Not, children),
        st.builds(Next, children),
        st.builds(Eventually, children),
        st.builds(Globally, children),
        st.builds(Until, children, children),
        st.builds(QDep, props_only, props_only, st.integers(0, 4)),
    )


formulas = st.recursive(leaves, _extend, max_leaves=9)


@given(formulas)
def test_render_parse_round_trip(f):
    assert parse_formula(render_formula(f)) == f


def test_round_trip_nested_chains():
    for f in [And(And(a, b), c), And(a, And(b, c)),
              Until(Until(a, b), c), Until(a, Until(b, c)),
              QDep(Or(a, b), c, 0)]:
        assert parse_formula(render_formula(f)) == f


# ---------------------------------------------------------------------------
# negation

def test_negate_pushes_into_dep_formula():
    f = parse_formula("G ((O1 & O4 & O5) o<=20 Of)")
    assert negate(f) == parse_formula("F (!((O1 & O4 & O5) o<=20 Of))")


def test_negate_de_morgan():
    assert negate(Or(a, b)) == And(Not(a), Not(b))


def test_negate_double_negation():
    assert negate(Not(a)) == a


def test_nnf_not_only_over_atoms_and_deps():
    def ok(f):
        if isinstance(f, Not):
            if not isinstance(f.sub, (Atom, QDep)):
                return False
            return True
        kids = [getattr(f, n) for n in ("left", "right", "sub", "target")
                if hasattr(f, n)]
        return all(ok(k) for k in kids)

    for text in ["!(a U b)", "!(a & (b | X c))", "!G (a o<=3 b)", "!F !a"]:
        assert ok(nnf(parse_formula(text))), text


@settings(max_examples=40)
@given(formulas)
def test_negate_involution_on_small_traces(f):
    # negate(negate(f)) and nnf(f) must be indistinguishable by evaluation
    g, h = negate(negate(f)), nnf(f)
    for tr in all_traces([E(), E(("a",), 1), E(("b", "c"), 1), E(("a", "b", "c"))], 2):
        assert evaluate_trace(g, tr) == evaluate_trace(h, tr)


# ---------------------------------------------------------------------------
# atoms

def test_atoms_collects_all_names():
    assert atoms(parse_formula("G ((I0 & I1) o<=20 Of)")) == {"I0", "I1", "Of"}


def test_atoms_of_literals_empty():
    assert atoms(TRUE) == frozenset()


def test_atoms_are_a_set():
    assert atoms(And(a, Not(a))) == {"a"}


# ---------------------------------------------------------------------------
# progression

def test_progress_unrolls_globally_eventually():
    f = parse_formula("G (F b)")
    assert progress(f, E(("a",), 1)) == And(Eventually(b), Globally(Eventually(b)))


def test_progress_budget_overrun_is_false():
    # remaining 2, event cost 3: dead regardless of what else the event says
    assert progress(Budget(b, 2), E((), 3)) == FALSE
    assert progress(Budget(b, 2), E(("b",), 3)) == FALSE


def test_progress_budget_discharge():
    assert progress(Budget(b, 2), E(("b",), 2)) == TRUE
    assert progress(Budget(b, 2), E((), 2)) == Budget(b, 0)


def test_progress_atom():
    assert progress(a, E(("a",), 0)) == TRUE
    assert progress(a, E(("b",), 0)) == FALSE


def test_dep_discharge_at_anchor_costs_nothing():
    # both sides at the anchor event: satisfied even with bound 0 and a
    # large event cost, because the anchor itself consumes no budget
    f = QDep(a, b, 0)
    assert evaluate_trace(f, [E(("a", "b"), 5)]) == Verdict.TRUE


def test_dep_vacuous_when_anchor_fails():
    assert evaluate_trace(QDep(a, b, 1), [E((), 9)]) == Verdict.TRUE


# ---------------------------------------------------------------------------
# trace evaluation

def test_evaluate_eventually():
    assert evaluate_trace(parse_formula("F b"), [E((), 1), E(("b",), 1)]) == Verdict.TRUE


def test_evaluate_dep_budget_blown():
    f = parse_formula("G (a o<=2 b)")
    tr = [E(("a",), 1), E((), 1), E((), 2)]
    assert evaluate_trace(f, tr) == Verdict.FALSE
    assert pair_verdict_globally(tr, frozenset(["a"]), "b", 2) == Verdict.FALSE


def test_evaluate_globally_stays_unknown():
    assert evaluate_trace(parse_formula("G a"), [E(("a",)), E(("a",))]) == Verdict.UNKNOWN


def test_empty_trace_is_unknown():
    assert evaluate_trace(parse_formula("G (a o<=1 b)"), []) == Verdict.UNKNOWN


traces2 = st.lists(st.sampled_from(EVENTS2), max_size=6)


@settings(max_examples=60)
@given(formulas, traces2)
def test_verdicts_are_irrevocable(f, tr):
    decided = None
    for n in range(len(tr) + 1):
        v = evaluate_trace(f, tr[:n])
        if decided is not None:
            assert v == decided
        elif v != Verdict.UNKNOWN:
            decided = v


# ---------------------------------------------------------------------------
# agreement with the pair-scan oracle
#
# The full exhaustive sweep (every trace up to length 6) runs in the
# acceptance suite; this one covers every trace up to length 3 plus a
# random sample of longer ones, comparing the public evaluator against
# the from-definition oracle.

ORACLE_FAMILY = [
    ("G (a o<=0 b)", lambda tr: pair_verdict_globally(tr, frozenset(["a"]), "b", 0)),
    ("G (a o<=2 b)", lambda tr: pair_verdict_globally(tr, frozenset(["a"]), "b", 2)),
    ("G ((a & b) o<=1 b)", lambda tr: pair_verdict_globally(tr, frozenset(["a", "b"]), "b", 1)),
    ("G (a o<=3 a)", lambda tr: pair_verdict_globally(tr, frozenset(["a"]), "a", 3)),
    ("(a o<=1 b)", lambda tr: pair_verdict_bare(tr, frozenset(["a"]), "b", 1)),
    ("F (!(a o<=2 b))", lambda tr: flip(pair_verdict_globally(tr, frozenset(["a"]), "b", 2))),
]


@pytest.mark.parametrize("text,oracle", ORACLE_FAMILY, ids=[t for t, _ in ORACLE_FAMILY])
def test_oracle_agreement_all_traces_len3(text, oracle):
    f = parse_formula(text)
    for tr in all_traces(EVENTS2, 3):
        assert evaluate_trace(f, tr) == oracle(tr), [render_formula(f), tr]


@settings(max_examples=150)
@given(st.integers(0, len(ORACLE_FAMILY) - 1), st.lists(st.sampled_from(EVENTS2), min_size=4, max_size=6))
def test_oracle_agreement_sampled_len6(i, tr):
    text, oracle = ORACLE_FAMILY[i]
    assert evaluate_trace(parse_formula(text), tr) == oracle(tr)


# ---------------------------------------------------------------------------
# sub-formula indexing

def test_index_single_atom():
    assert subformula_index(a) == {a: 0}


def test_index_dedups_structurally():
    table = subformula_index(And(a, a))
    assert table[a] == 1 and len(table) == 2


def test_index_is_stable_preorder():
    f = parse_formula("G (a o<=2 b)")
    t1, t2 = subformula_index(f), subformula_index(f)
    assert t1 == t2
    assert t1[f] == 0  # root first


def test_index_counts_pipeline_conjuncts(pipeline, phi_pipeline):
    from costmon import unwind
    u = unwind(phi_pipeline, pipeline)
    table = subformula_index(negate(u.formula))
    deps = [k for k in table if isinstance(k, QDep)]
    assert len(deps) == 7
    assert len(set(table.values())) == len(table)
