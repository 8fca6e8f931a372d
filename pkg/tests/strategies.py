"""Hypothesis strategies for entities, graphs, conditions and Find programs."""
from functools import lru_cache

from hypothesis import strategies as st

from linksynth.document import Entity, GraphConfig, Label, RelLabel, TableCell, add_table_relations, build_graph
from linksynth.dsl import (COORDS, STR_LITERALS, VLABEL_LITERALS, FALSE, TRUE, And, FConst, Find, FloatGt,
                           FloatLt, Not, Rel, RelMag, RLabelEq, RVarLabel, StrContains, StrEq, StrLit,
                           VarCoord, VarLabel, VarText, VLabelEq)

TEXTS = ["Name:", "Date", "12/05", "a-b", "v1.2", ":", "", "Date", "x"]


@st.composite
def boxes(draw):
    x0, x1 = sorted(draw(st.lists(st.integers(0, 20), min_size=2, max_size=2, unique=True)))
    y0, y1 = sorted(draw(st.lists(st.integers(0, 20), min_size=2, max_size=2, unique=True)))
    return x0 / 20, y0 / 20, x1 / 20, y1 / 20


@st.composite
def entity_lists(draw, min_size=0, max_size=8):
    n = draw(st.integers(min_size, max_size))
    out = []
    for i in range(n):
        x0, y0, x1, y1 = draw(boxes())
        out.append(Entity(i, draw(st.sampled_from(TEXTS)), x0, y0, x1, y1, draw(st.sampled_from(list(Label)))))
    return out


@st.composite
def graphs(draw, min_size=0, max_size=8, tables=True):
    ents = draw(entity_lists(min_size, max_size))
    g = build_graph(ents, GraphConfig(prune=draw(st.booleans())), doc_id="g")
    if tables and ents and draw(st.booleans()):
        cells = [TableCell(e.id, 0, draw(st.integers(0, 2)), draw(st.integers(0, 2)))
                 for e in ents if draw(st.booleans())]
        g = add_table_relations(g, cells)
    return g


def _vlabel_terms(V):
    return st.one_of(st.builds(VarLabel, st.sampled_from(V)), st.sampled_from(list(VLABEL_LITERALS)))


def _rlabel_terms(R):
    return st.one_of(st.builds(RVarLabel, st.sampled_from(R)), st.sampled_from(list(RelLabel)))


def _str_terms(V):
    return st.one_of(st.builds(VarText, st.sampled_from(V)), st.builds(StrLit, st.sampled_from(STR_LITERALS)))


def _float_terms(V, R):
    return st.one_of(st.builds(RelMag, st.sampled_from(R)),
                     st.builds(VarCoord, st.sampled_from(V), st.sampled_from(COORDS)),
                     st.builds(FConst, st.integers(0, 10)))


def atoms(V, R):
    V, R = list(V), list(R)
    return st.one_of(
        st.just(TRUE), st.just(FALSE),
        st.builds(Rel, st.sampled_from(V), st.sampled_from(R), st.sampled_from(V)),
        st.builds(VLabelEq, _vlabel_terms(V), _vlabel_terms(V)),
        st.builds(RLabelEq, _rlabel_terms(R), _rlabel_terms(R)),
        st.builds(StrEq, _str_terms(V), _str_terms(V)),
        st.builds(StrContains, _str_terms(V), _str_terms(V)),
        st.builds(FloatLt, _float_terms(V, R), _float_terms(V, R)),
        st.builds(FloatGt, _float_terms(V, R), _float_terms(V, R)),
    )


@lru_cache(maxsize=None)
def _conditions(V, R, max_leaves):
    return st.recursive(atoms(V, R), lambda sub: st.one_of(
        st.builds(And, sub, sub), st.builds(Not, sub)), max_leaves=max_leaves)


def conditions(V, R, max_leaves=6):
    return _conditions(tuple(V), tuple(R), max_leaves)


@st.composite
def finds(draw, max_vars=3, max_rvars=2, max_leaves=6, rel_first=None):
    nv = draw(st.integers(2, max_vars))
    nr = draw(st.integers(1, max_rvars))
    V, R = tuple(range(nv)), tuple(range(nr))
    cond = draw(conditions(V, R, max_leaves))
    if rel_first if rel_first is not None else draw(st.booleans()):
        # most synthesized programs anchor on a relation atom
        cond = And(Rel(0, 0, draw(st.sampled_from(V[1:]))), cond)
    returns = tuple(sorted(draw(st.sets(st.sampled_from(V[1:]), min_size=1))))
    return Find(V, R, cond, returns)
