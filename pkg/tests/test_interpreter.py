import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linksynth.document import Entity, Label, LinkSpec, RelLabel, build_graph
from linksynth.dsl import (EMPTY, FALSE, And, Exclude, FConst, Find, FloatLt, Rel, RelMag, RLabelEq, RVarLabel,
                           StrContains, StrLit, Union, VarText, conj)
from linksynth.interpreter import (Binding, eval_condition, eval_find, eval_find_naive, eval_program,
                                   iter_bindings, naive_bindings, partition_bindings, run_program)
from linksynth.synthetic import EVENT_LINKS, event_form, event_form_program

from strategies import conditions, finds, graphs

NAME = Entity(0, "Name:", 0.1, 0.1, 0.2, 0.15, Label.QUESTION)
ALICE = Entity(1, "Alice", 0.25, 0.1, 0.35, 0.15, Label.ANSWER)
TWO = build_graph([NAME, ALICE], doc_id="two")
RIGHT_FIND = Find((0, 1), (0,), And(Rel(0, 0, 1), RLabelEq(RVarLabel(0), RelLabel.RIGHT)), (1,))


def _right_index(g):
    return next(i for i, r in enumerate(g.relations) if r.label is RelLabel.RIGHT)


def test_rel_atom_checks_endpoints():
    b = Binding.of({0: 0, 1: 1}, {0: _right_index(TWO)})
    assert eval_condition(Rel(0, 0, 1), b, TWO)
    assert not eval_condition(Rel(1, 0, 0), b, TWO)


def test_mag_threshold():
    # centres (0.15, 0.125) and (0.30, 0.125): L1 distance 0.15
    b = Binding.of({0: 0, 1: 1}, {0: _right_index(TWO)})
    assert TWO.relations[_right_index(TWO)].mag == pytest.approx(0.15)
    assert eval_condition(FloatLt(RelMag(0), FConst(2)), b, TWO)
    assert not eval_condition(FloatLt(RelMag(0), FConst(1)), b, TWO)


def test_contains_colon():
    g = build_graph([Entity(0, "x", 0, 0, 0.1, 0.1), Entity(1, "General Information:", 0.2, 0, 0.5, 0.1)])
    b = Binding.of({0: 0, 1: 1}, {0: 0})
    assert eval_condition(StrContains(VarText(1), StrLit(":")), b, g)
    assert not eval_condition(StrContains(VarText(0), StrLit(":")), b, g)


def test_find_examples_match_oracle():
    assert eval_find_naive(RIGHT_FIND, TWO) == {(0, 1)} == eval_find(RIGHT_FIND, TWO)
    assert len(list(naive_bindings(RIGHT_FIND, TWO))) == 1  # of 4 x 2 candidates
    false_find = Find((0, 1), (0,), FALSE, (1,))
    assert eval_find_naive(false_find, TWO) == frozenset() == eval_find(false_find, TWO)
    lonely = build_graph([NAME], doc_id="one")
    assert eval_find_naive(RIGHT_FIND, lonely) == frozenset() == eval_find(RIGHT_FIND, lonely)


def test_aliasing_is_allowed():
    p = Find((0, 1, 2), (0,), Rel(0, 0, 1), (2,))
    # v2 is unconstrained, so it ranges over every entity, v0 included
    assert eval_find(p, TWO) == eval_find_naive(p, TWO) == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_program_algebra_examples():
    assert eval_program(Exclude(RIGHT_FIND, RIGHT_FIND), TWO) == frozenset()
    assert eval_program(Union((RIGHT_FIND, EMPTY)), TWO) == eval_program(RIGHT_FIND, TWO)
    assert eval_program(EMPTY, TWO) == frozenset()


def test_event_form_program():
    g, spec = event_form()
    assert eval_program(event_form_program(), g) == spec.links == EVENT_LINKS
    assert run_program(event_form_program(), [g]) == {"event": [list(p) for p in sorted(EVENT_LINKS)]}


def test_partition_examples():
    plus, minus = partition_bindings(RIGHT_FIND, TWO, LinkSpec("two", frozenset({(0, 1)})))
    assert (len(plus), len(minus)) == (1, 0)
    plus, minus = partition_bindings(RIGHT_FIND, TWO, LinkSpec("two"))
    assert (len(plus), len(minus)) == (0, 1)
    f = Find((0, 1), (0,), FALSE, (1,))
    assert partition_bindings(f, TWO, LinkSpec("two")) == (set(), set())


@settings(max_examples=80)
@given(graphs(max_size=5), finds(), st.data())
def test_partition_is_a_partition(g, p, data):
    pairs = [(a.id, b.id) for a in g.entities for b in g.entities]
    links = data.draw(st.sets(st.sampled_from(pairs), max_size=6)) if pairs else set()
    plus, minus = partition_bindings(p, g, LinkSpec(g.doc_id, frozenset(links)))
    assert not plus & minus
    assert plus | minus == set(iter_bindings(p, g))


@settings(max_examples=150)
@given(graphs(max_size=6), finds(max_leaves=4), st.data())
def test_adding_a_conjunct_filters(g, p, data):
    extra = data.draw(conditions(p.vars, p.rvars, max_leaves=3))
    narrower = Find(p.vars, p.rvars, And(p.cond, extra), p.returns)
    assert eval_find(narrower, g) <= eval_find(p, g)


@settings(max_examples=100)
@given(graphs(max_size=6), finds(max_leaves=4), finds(max_leaves=4))
def test_union_exclude_laws(g, a, b):
    ra, rb = eval_program(a, g), eval_program(b, g)
    assert eval_program(Union((a, b)), g) == ra | rb
    assert eval_program(Exclude(a, b), g) == ra - rb
    assert eval_program(Union((a, b)), g) >= ra


def test_binding_accessors():
    b = Binding.of({1: 4, 0: 3}, {0: 2})
    assert b.var_map == ((0, 3), (1, 4))
    assert b.entity_of(1) == 4 and b.relation_of(0) == 2


def test_iter_bindings_total():
    p = Find((0, 1, 2), (0, 1), conj(Rel(0, 0, 1)), (1,))
    for b in iter_bindings(p, TWO):
        assert [v for v, _ in b.var_map] == [0, 1, 2]
        assert [r for r, _ in b.rvar_map] == [0, 1]


@settings(max_examples=150)
@given(graphs(max_size=4), finds())
def test_grid_oracle_matches_per_binding_walk(g, p):
    walked = {(dict(b.var_map)[0], dict(b.var_map)[v]) for b in naive_bindings(p, g) for v in p.returns}
    assert eval_find_naive(p, g) == walked


@settings(max_examples=50)
@given(graphs(max_size=5), finds())
def test_grid_oracle_chunking(g, p):
    assert eval_find_naive(p, g, chunk=7) == eval_find_naive(p, g)
