"""Evaluation of programs over document graphs.

Three routes compute Find results. :func:`naive_bindings` walks every
binding in |entities|^|vars| x |relations|^|rvars| with the tree-walking
:func:`eval_condition`; :func:`eval_find_naive` covers the same grid with
array operations; :func:`eval_find` runs a backtracking join over compiled
conjuncts. They must agree on every input.

Variables may alias: two variables can bind the same entity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

from .document import DocumentGraph, Entity, Label, LinkSpec, RelLabel, Relation
from .dsl import (And, Empty, Exclude, FalseC, FConst, Find, FloatGt, FloatLt, Not, Program,
                  Rel, RelMag, RLabelEq, RVarLabel, StrContains, StrEq, StrLit, TrueC, Union,
                  VarCoord, VarLabel, VarText, VLabelEq, cond_refs, conjuncts)


@dataclass(frozen=True)
class Binding:
    """Assignment of variables to entity ids and rvars to relation indices."""

    var_map: tuple[tuple[int, int], ...]
    rvar_map: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, var_map: Mapping[int, int], rvar_map: Mapping[int, int]) -> "Binding":
        return cls(tuple(sorted(var_map.items())), tuple(sorted(rvar_map.items())))

    def entity_of(self, v: int) -> int:
        return dict(self.var_map)[v]

    def relation_of(self, r: int) -> int:
        return dict(self.rvar_map)[r]


LinkSet = frozenset  # of (source id, target id); iterate with sorted()


# tree-walking semantics

def _term(t, ents: Mapping[int, Entity], rels: Mapping[int, Relation]):
    if isinstance(t, VarLabel):
        return ents[t.v].label
    if isinstance(t, RVarLabel):
        return rels[t.r].label
    if isinstance(t, VarText):
        return ents[t.v].text
    if isinstance(t, StrLit):
        return t.s
    if isinstance(t, VarCoord):
        return getattr(ents[t.v], t.attr)
    if isinstance(t, RelMag):
        return rels[t.r].mag
    if isinstance(t, FConst):
        return t.value
    if isinstance(t, (Label, RelLabel)):
        return t
    raise TypeError(t)


def _holds(c, ents: Mapping[int, Entity], rels: Mapping[int, Relation]) -> bool:
    if isinstance(c, TrueC):
        return True
    if isinstance(c, FalseC):
        return False
    if isinstance(c, And):
        return _holds(c.left, ents, rels) and _holds(c.right, ents, rels)
    if isinstance(c, Not):
        return not _holds(c.arg, ents, rels)
    if isinstance(c, Rel):
        rel = rels[c.r]
        return rel.from_id == ents[c.v].id and rel.to_id == ents[c.w].id
    if isinstance(c, (VLabelEq, RLabelEq, StrEq)):
        return _term(c.lhs, ents, rels) == _term(c.rhs, ents, rels)
    if isinstance(c, StrContains):
        return _term(c.needle, ents, rels) in _term(c.haystack, ents, rels)
    if isinstance(c, FloatLt):
        return _term(c.lhs, ents, rels) < _term(c.rhs, ents, rels)
    if isinstance(c, FloatGt):
        return _term(c.lhs, ents, rels) > _term(c.rhs, ents, rels)
    raise TypeError(c)


def eval_condition(cond, b: Binding, g: DocumentGraph) -> bool:
    ents = {v: g.by_id[e] for v, e in b.var_map}
    rels = {r: g.relations[i] for r, i in b.rvar_map}
    return _holds(cond, ents, rels)


def naive_bindings(find: Find, g: DocumentGraph) -> Iterator[Binding]:
    """Every satisfying binding, by brute-force enumeration."""
    for ent_combo in itertools.product(g.entities, repeat=len(find.vars)):
        ents = dict(zip(find.vars, ent_combo))
        for rel_combo in itertools.product(range(len(g.relations)), repeat=len(find.rvars)):
            rels = {r: g.relations[i] for r, i in zip(find.rvars, rel_combo)}
            if _holds(find.cond, ents, rels):
                yield Binding(tuple((v, e.id) for v, e in ents.items()),
                              tuple(zip(find.rvars, rel_combo)))


def eval_find_naive(find: Find, g: DocumentGraph, chunk: int = 1 << 16) -> LinkSet:
    """Reference result: test the condition on every binding of the full grid.

    The grid of |entities|^|vars| x |relations|^|rvars| bindings is walked in
    chunks, each chunk evaluated as numpy arrays, one array element per
    binding. Agreement with per-binding :func:`naive_bindings` is tested.
    """
    n_e, n_r = len(g.entities), len(g.relations)
    if n_e == 0 or n_r == 0:
        return frozenset()
    tables = _GridTables(g)
    shape = (n_e,) * len(find.vars) + (n_r,) * len(find.rvars)
    total = int(np.prod(shape, dtype=np.int64))
    ids = tables.ids
    out = set()
    for start in range(0, total, chunk):
        digits = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        E = dict(zip(find.vars, digits[:len(find.vars)]))
        R = dict(zip(find.rvars, digits[len(find.vars):]))
        keep = np.broadcast_to(tables.holds(find.cond, E, R), digits[0].shape)
        if not keep.any():
            continue
        src = ids[E[0][keep]]
        for v in find.returns:
            out.update(zip(src.tolist(), ids[E[v][keep]].tolist()))
    return frozenset(out)


class _GridTables:
    """Entity and relation attributes as arrays indexed by position."""

    def __init__(self, g: DocumentGraph):
        pos = {e.id: k for k, e in enumerate(g.entities)}
        self.ids = np.array([e.id for e in g.entities], dtype=np.int64)
        self.label = np.array([e.label.value for e in g.entities], dtype=object)
        self.text = np.array([e.text for e in g.entities], dtype=object)
        self.coord = {c: np.array([getattr(e, c) for e in g.entities]) for c in ("x0", "y0", "x1", "y1")}
        self.r_from = np.array([pos[r.from_id] for r in g.relations], dtype=np.int64)
        self.r_to = np.array([pos[r.to_id] for r in g.relations], dtype=np.int64)
        self.r_label = np.array([r.label.value for r in g.relations], dtype=object)
        self.r_mag = np.array([r.mag for r in g.relations])

    def term(self, t, E, R):
        if isinstance(t, VarLabel):
            return self.label[E[t.v]]
        if isinstance(t, RVarLabel):
            return self.r_label[R[t.r]]
        if isinstance(t, VarText):
            return self.text[E[t.v]]
        if isinstance(t, VarCoord):
            return self.coord[t.attr][E[t.v]]
        if isinstance(t, RelMag):
            return self.r_mag[R[t.r]]
        if isinstance(t, StrLit):
            return t.s
        if isinstance(t, FConst):
            return t.value
        if isinstance(t, (Label, RelLabel)):
            return t.value
        raise TypeError(t)

    def holds(self, c, E, R):
        if isinstance(c, TrueC):
            return np.True_
        if isinstance(c, FalseC):
            return np.False_
        if isinstance(c, And):
            return self.holds(c.left, E, R) & self.holds(c.right, E, R)
        if isinstance(c, Not):
            return ~self.holds(c.arg, E, R)
        if isinstance(c, Rel):
            return (self.r_from[R[c.r]] == E[c.v]) & (self.r_to[R[c.r]] == E[c.w])
        if isinstance(c, StrContains):
            return np.asarray(_contains(self.term(c.haystack, E, R), self.term(c.needle, E, R)), dtype=bool)
        lhs, rhs = self.term(c.lhs, E, R), self.term(c.rhs, E, R)
        if isinstance(c, (VLabelEq, RLabelEq, StrEq)):
            return np.asarray(lhs == rhs, dtype=bool)
        if isinstance(c, FloatLt):
            return np.asarray(lhs < rhs, dtype=bool)
        if isinstance(c, FloatGt):
            return np.asarray(lhs > rhs, dtype=bool)
        raise TypeError(c)


_contains = np.frompyfunc(lambda hay, needle: needle in hay, 2, 1)


# compiled conjuncts

Check = Callable[[list, list], bool]


def _compile_term(t):
    if isinstance(t, VarLabel):
        v = t.v
        return lambda E, R: E[v].label
    if isinstance(t, RVarLabel):
        r = t.r
        return lambda E, R: R[r].label
    if isinstance(t, VarText):
        v = t.v
        return lambda E, R: E[v].text
    if isinstance(t, VarCoord):
        v, attr = t.v, t.attr
        return lambda E, R: getattr(E[v], attr)
    if isinstance(t, RelMag):
        r = t.r
        return lambda E, R: R[r].mag
    const = t.s if isinstance(t, StrLit) else t.value if isinstance(t, FConst) else t
    return lambda E, R: const


def compile_condition(c) -> Check:
    """Turn a condition into ``f(E, R)`` over lists indexed by variable id."""
    if isinstance(c, TrueC):
        return lambda E, R: True
    if isinstance(c, FalseC):
        return lambda E, R: False
    if isinstance(c, And):
        a, b = compile_condition(c.left), compile_condition(c.right)
        return lambda E, R: a(E, R) and b(E, R)
    if isinstance(c, Not):
        a = compile_condition(c.arg)
        return lambda E, R: not a(E, R)
    if isinstance(c, Rel):
        v, r, w = c.v, c.r, c.w
        return lambda E, R: R[r].from_id == E[v].id and R[r].to_id == E[w].id
    if isinstance(c, StrContains):
        h, n = _compile_term(c.haystack), _compile_term(c.needle)
        return lambda E, R: n(E, R) in h(E, R)
    lhs, rhs = _compile_term(c.lhs), _compile_term(c.rhs)
    if isinstance(c, (VLabelEq, RLabelEq, StrEq)):
        return lambda E, R: lhs(E, R) == rhs(E, R)
    if isinstance(c, FloatLt):
        return lambda E, R: lhs(E, R) < rhs(E, R)
    if isinstance(c, FloatGt):
        return lambda E, R: lhs(E, R) > rhs(E, R)
    raise TypeError(c)


@dataclass
class _Conjunct:
    check: Check
    slots: frozenset  # of ("v", i) / ("r", k)
    cond: object


def _slot_domain(slot, bound, conj_atoms, g: DocumentGraph, E, R):
    """Candidate values for ``slot`` given the current partial binding."""
    kind, x = slot
    if kind == "v":
        for c in conj_atoms:
            if isinstance(c, Rel) and ("r", c.r) in bound:
                if c.v == x:
                    return [g.by_id[R[c.r].from_id]]
                if c.w == x:
                    return [g.by_id[R[c.r].to_id]]
        for c in conj_atoms:
            if (isinstance(c, VLabelEq) and isinstance(c.lhs, VarLabel) and c.lhs.v == x
                    and isinstance(c.rhs, Label)):
                return g.entities_by_label.get(c.rhs, [])
        return g.entities
    for c in conj_atoms:
        if isinstance(c, Rel) and c.r == x:
            fv, tv = ("v", c.v) in bound, ("v", c.w) in bound
            if fv and tv:
                return g.rels_between.get((E[c.v].id, E[c.w].id), [])
            if fv:
                return g.out_rels[E[c.v].id]
            if tv:
                return g.in_rels[E[c.w].id]
    for c in conj_atoms:
        if (isinstance(c, RLabelEq) and isinstance(c.lhs, RVarLabel) and c.lhs.r == x
                and isinstance(c.rhs, RelLabel)):
            return g.rels_by_label.get(c.rhs, [])
    return range(len(g.relations))


def _order_slots(slots, conj_atoms, g: DocumentGraph) -> list:
    """Greedy static order: cheapest slot next given what is already bound."""
    n_ent = max(len(g.entities), 1)
    n_rel = max(len(g.relations), 1)
    avg_deg = n_rel / n_ent
    order, bound = [], set()
    remaining = list(slots)
    while remaining:
        def cost(slot):
            kind, x = slot
            if kind == "v":
                for c in conj_atoms:
                    if isinstance(c, Rel) and ("r", c.r) in bound and x in (c.v, c.w):
                        return 1.0
                for c in conj_atoms:
                    if isinstance(c, VLabelEq) and c.lhs == VarLabel(x) and isinstance(c.rhs, Label):
                        return n_ent / 3
                return float(n_ent)
            for c in conj_atoms:
                if isinstance(c, Rel) and c.r == x:
                    if ("v", c.v) in bound and ("v", c.w) in bound:
                        return 0.5
                    if ("v", c.v) in bound or ("v", c.w) in bound:
                        return avg_deg
            for c in conj_atoms:
                if isinstance(c, RLabelEq) and c.lhs == RVarLabel(x) and isinstance(c.rhs, RelLabel):
                    return n_rel / 4
            return float(n_rel)
        best = min(remaining, key=lambda s: (cost(s), s))
        remaining.remove(best)
        bound.add(best)
        order.append(best)
    return order


def _join(find: Find, g: DocumentGraph, slots: list) -> Iterator[tuple[list, list]]:
    """Yield (E, R) for satisfying assignments over ``slots``.

    The yielded lists are reused between iterations; copy before storing.
    """
    parts = conjuncts(find.cond)
    conj = []
    for c in parts:
        vs, rs = cond_refs(c)
        conj.append(_Conjunct(compile_condition(c), frozenset({("v", v) for v in vs} | {("r", r) for r in rs}), c))
    atoms = [c.cond for c in conj]
    for c in conj:
        if not c.slots and not c.check([], []):
            return
    order = _order_slots(slots, atoms, g)
    # conjuncts to test right after binding order[k]
    due: list[list[Check]] = [[] for _ in order]
    position = {s: k for k, s in enumerate(order)}
    for c in conj:
        if c.slots:
            due[max(position[s] for s in c.slots)].append(c.check)
    E: list = [None] * 11
    R: list = [None] * 11
    bound: set = set()

    def rec(k):
        if k == len(order):
            yield E, R
            return
        slot = order[k]
        kind, x = slot
        dom = _slot_domain(slot, bound, atoms, g, E, R)
        bound.add(slot)
        checks = due[k]
        if kind == "v":
            for ent in dom:
                E[x] = ent
                if all(ch(E, R) for ch in checks):
                    yield from rec(k + 1)
        else:
            for idx in dom:
                R[x] = g.relations[idx]
                if all(ch(E, R) for ch in checks):
                    yield from rec(k + 1)
        bound.discard(slot)
        if kind == "v":
            E[x] = None
        else:
            R[x] = None

    yield from rec(0)


def _relevant_slots(find: Find) -> list:
    vs, rs = cond_refs(find.cond)
    vs |= {0} | set(find.returns)
    return [("v", v) for v in find.vars if v in vs] + [("r", r) for r in find.rvars if r in rs]


def iter_bindings(find: Find, g: DocumentGraph) -> Iterator[Binding]:
    """Every satisfying binding (complete over vars and rvars), via the join."""
    slots = [("v", v) for v in find.vars] + [("r", r) for r in find.rvars]
    index = {id(r): i for i, r in enumerate(g.relations)}
    for E, R in _join(find, g, slots):
        yield Binding(tuple((v, E[v].id) for v in find.vars),
                      tuple((r, index[id(R[r])]) for r in find.rvars))


def eval_find(find: Find, g: DocumentGraph) -> LinkSet:
    if not g.entities or not g.relations:
        # some rvar must bind, so no relation means no binding at all
        return frozenset()
    slots = _relevant_slots(find)
    out = set()
    for E, R in _join(find, g, slots):
        src = E[0].id
        for v in find.returns:
            out.add((src, E[v].id))
    return frozenset(out)


def eval_program(p: Program, g: DocumentGraph, _memo: dict | None = None) -> LinkSet:
    # Synthesized programs repeat the same Find under many Exclude nodes;
    # results are memoized per call by Find value.
    memo = {} if _memo is None else _memo
    if isinstance(p, Empty):
        return frozenset()
    if isinstance(p, Find):
        if p not in memo:
            memo[p] = eval_find(p, g)
        return memo[p]
    if isinstance(p, Union):
        out = set()
        for c in p.children:
            out |= eval_program(c, g, memo)
        return frozenset(out)
    if isinstance(p, Exclude):
        left = eval_program(p.left, g, memo)
        if not left:
            return left
        return left - eval_program(p.right, g, memo)
    raise TypeError(p)


def partition_bindings(find: Find, g: DocumentGraph, spec: LinkSpec) -> tuple[set, set]:
    """Split satisfying bindings into those whose every link is in ``spec`` and the rest."""
    plus, minus = set(), set()
    for b in iter_bindings(find, g):
        vm = dict(b.var_map)
        if all((vm[0], vm[v]) in spec.links for v in find.returns):
            plus.add(b)
        else:
            minus.add(b)
    return plus, minus


def run_program(p: Program, graphs) -> dict[str, list[list[int]]]:
    """Predictions for many documents: doc_id -> sorted [[src, dst], ...]."""
    return {g.doc_id: [list(pair) for pair in sorted(eval_program(p, g))] for g in graphs}
