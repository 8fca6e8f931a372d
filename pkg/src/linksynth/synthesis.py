"""Program synthesis: path mining, version spaces, precision-driven refinement.

The search keeps, for each version-space entry, the satisfying bindings of
its representative program as integer tables over a corpus-wide entity and
relation index. Adding a conjunct then filters rows with a vectorised mask,
and adding ``Rel(v_i, r_new, v_j)`` joins rows against the relation table.
Produced links are compared pair-wise: a program's positives are the pairs
it produces that the specification contains, its negatives the rest.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .document import DocumentGraph, Label, LinkSpec, RelLabel, SPATIAL_LABELS
from .dsl import (COORDS, EMPTY, MAX_VAR, STR_LITERALS, VLABEL_LITERALS, And, Exclude, FalseC,
                  FConst, Find, FloatGt, FloatLt, Not, Program, Rel, RelMag, RLabelEq,
                  RVarLabel, StrContains, StrEq, StrLit, TrueC, Union, VarCoord, VarLabel,
                  VarText, VLabelEq, conj, program_key, rewrite)
from .interpreter import iter_bindings

logger = logging.getLogger(__name__)


@dataclass
class SynthesisConfig:
    max_iterations: int = 3
    max_path_len: int = 2
    min_support: int = 0
    timeout_seconds: float = 7200.0

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.max_path_len < 1:
            raise ValueError("max_path_len must be >= 1")
        if self.min_support < 0:
            raise ValueError("min_support must be >= 0")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")


# paths

@dataclass(frozen=True)
class Path:
    edges: tuple  # ((from_id, to_id, RelLabel), ...)
    support: int = field(default=1, compare=False)

    def __post_init__(self):
        if not self.edges:
            raise ValueError("a path needs at least one edge")
        for (_, a, _), (b, _, _) in zip(self.edges, self.edges[1:]):
            if a != b:
                raise ValueError(f"edges do not chain: {self.edges}")

    @property
    def source(self) -> int:
        return self.edges[0][0]

    @property
    def target(self) -> int:
        return self.edges[-1][1]

    @property
    def signature(self) -> tuple:
        """Relation labels plus which positions revisit an earlier node."""
        nodes = [self.edges[0][0]] + [e[1] for e in self.edges]
        first = {}
        shape = tuple(first.setdefault(n, len(first)) for n in nodes)
        return tuple(e[2].value for e in self.edges), shape


def all_paths(g: DocumentGraph, src: int, dst: int, max_len: int) -> list[tuple]:
    """Simple directed paths from ``src`` to ``dst`` with at most ``max_len`` edges."""
    out = []

    def walk(node, edges, visited):
        for i in g.out_rels.get(node, ()):
            r = g.relations[i]
            if r.to_id in visited:
                continue
            step = edges + ((r.from_id, r.to_id, r.label),)
            if r.to_id == dst:
                out.append(step)
            elif len(step) < max_len:
                walk(r.to_id, step, visited | {r.to_id})

    if src != dst:
        walk(src, (), {src})
    return out


@dataclass
class PathReport:
    paths: list
    support: dict
    unreachable: list  # (doc_id, src, dst)


def mine_paths_report(graphs: Sequence[DocumentGraph], specs: Sequence[LinkSpec],
                      max_len: int = 2, min_support: int = 0) -> PathReport:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    reps: dict = {}
    support: dict = {}
    unreachable = []
    for g, spec in zip(graphs, specs):
        for src, dst in sorted(spec.links):
            found = all_paths(g, src, dst, max_len)
            if not found:
                unreachable.append((g.doc_id, src, dst))
            for edges in found:
                p = Path(edges)
                sig = p.signature
                support[sig] = support.get(sig, 0) + 1
                reps.setdefault(sig, p)
    if unreachable:
        logger.info("%d linked pairs have no path within %d hops", len(unreachable), max_len)
    keep = sorted((s for s in reps if support[s] >= min_support), key=lambda s: (len(s[0]), s))
    paths = [Path(reps[s].edges, support[s]) for s in keep]
    return PathReport(paths, {s: support[s] for s in keep}, unreachable)


def mine_paths(graphs: Sequence[DocumentGraph], specs: Sequence[LinkSpec], max_len: int = 2,
               min_support: int = 0) -> list[Path]:
    return mine_paths_report(graphs, specs, max_len, min_support).paths


def initial_programs(paths: Iterable[Path]) -> list[Find]:
    """One Find per path shape: a variable per node, an rvar and Rel atom per edge."""
    out, seen = [], set()
    for path in paths:
        vmap: dict[int, int] = {}
        rels = []
        last = 0
        for k, (a, b, _lab) in enumerate(path.edges):
            for e in (a, b):
                if e not in vmap:
                    vmap[e] = len(vmap)
            rels.append(Rel(vmap[a], k, vmap[b]))
            last = vmap[b]
        if len(vmap) > MAX_VAR + 1 or len(rels) > MAX_VAR + 1:
            logger.warning("path with %d nodes / %d edges exceeds the variable bound; skipped",
                           len(vmap), len(rels))
            continue
        if last == 0:
            continue  # cycle back to the source cannot be a link
        prog = Find(tuple(range(len(vmap))), tuple(range(len(rels))), conj(*rels), (last,))
        key = program_key(prog)
        if key not in seen:
            seen.add(key)
            out.append(prog)
    return out


# corpus index

_LABEL_CODE = {lab: i for i, lab in enumerate(Label)}
_RLABEL_CODE = {lab: i for i, lab in enumerate(RelLabel)}


class Corpus:
    """Corpus-wide entity and relation tables used by the vectorised search."""

    def __init__(self, graphs: Sequence[DocumentGraph], specs: Sequence[LinkSpec]):
        if len(graphs) != len(specs):
            raise ValueError("graphs and specs differ in length")
        by_doc = {s.doc_id: s for s in specs}
        self.graphs = list(graphs)
        self.specs = []
        for g in self.graphs:
            if g.doc_id not in by_doc:
                raise ValueError(f"no link spec for document {g.doc_id!r}")
            spec = by_doc[g.doc_id]
            spec.check_against(g.entities)
            self.specs.append(spec)
        ids = [g.doc_id for g in self.graphs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate document ids in corpus")

        self.ent_offset, self.rel_offset = [], []
        self.local_index: list[dict[int, int]] = []
        ent_doc, ent_id, ent_label, coords, texts = [], [], [], {c: [] for c in COORDS}, []
        rel_from, rel_to, rel_label, rel_mag = [], [], [], []
        n_ent = n_rel = 0
        for d, g in enumerate(self.graphs):
            self.ent_offset.append(n_ent)
            self.rel_offset.append(n_rel)
            local = {e.id: n_ent + k for k, e in enumerate(g.entities)}
            self.local_index.append(local)
            for e in g.entities:
                ent_doc.append(d)
                ent_id.append(e.id)
                ent_label.append(_LABEL_CODE[e.label])
                for c in COORDS:
                    coords[c].append(getattr(e, c))
                texts.append(e.text)
            for r in g.relations:
                rel_from.append(local[r.from_id])
                rel_to.append(local[r.to_id])
                rel_label.append(_RLABEL_CODE[r.label])
                rel_mag.append(r.mag)
            n_ent += len(g.entities)
            n_rel += len(g.relations)
        self.n_ent, self.n_rel = n_ent, n_rel
        self.ent_doc = np.asarray(ent_doc, dtype=np.int64)
        self.ent_id = np.asarray(ent_id, dtype=np.int64)
        self.ent_label = np.asarray(ent_label, dtype=np.int64)
        self.coord = {c: np.asarray(v, dtype=np.float64) for c, v in coords.items()}
        self.texts = texts
        self.text_codes: dict[str, int] = {}
        self.ent_text = np.asarray([self.text_codes.setdefault(t, len(self.text_codes)) for t in texts],
                                   dtype=np.int64)
        self.contains = {lit: np.asarray([lit in t for t in texts], dtype=bool) for lit in STR_LITERALS}
        self.rel_from = np.asarray(rel_from, dtype=np.int64)
        self.rel_to = np.asarray(rel_to, dtype=np.int64)
        self.rel_label = np.asarray(rel_label, dtype=np.int64)
        self.rel_mag = np.asarray(rel_mag, dtype=np.float64)
        pk = self.rel_from * max(n_ent, 1) + self.rel_to
        self._rel_order = np.argsort(pk, kind="stable")
        self._rel_keys = pk[self._rel_order]
        spec_keys = [local[a] * max(n_ent, 1) + local[b]
                     for local, s in zip(self.local_index, self.specs) for a, b in s.links]
        self.spec_keys = np.unique(np.asarray(spec_keys, dtype=np.int64))
        self.rel_labels_present = sorted({RelLabel(lab) for lab in
                                          (list(RelLabel)[i] for i in set(rel_label))},
                                         key=lambda x: _RLABEL_CODE[x])

    @property
    def n_links(self) -> int:
        return int(self.spec_keys.size)

    def pair_keys(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        return src * max(self.n_ent, 1) + dst

    def decode(self, keys: Iterable[int]) -> set[tuple[str, int, int]]:
        n = max(self.n_ent, 1)
        out = set()
        for k in keys:
            s, t = divmod(int(k), n)
            out.add((self.graphs[self.ent_doc[s]].doc_id, int(self.ent_id[s]), int(self.ent_id[t])))
        return out

    def bindings_table(self, find: Find) -> tuple[np.ndarray, np.ndarray]:
        """Satisfying bindings of ``find`` on every document, as global index tables."""
        erows, rrows = [], []
        for d, g in enumerate(self.graphs):
            local, roff = self.local_index[d], self.rel_offset[d]
            for b in iter_bindings(find, g):
                erows.append([local[e] for _, e in b.var_map])
                rrows.append([roff + i for _, i in b.rvar_map])
        E = np.asarray(erows, dtype=np.int64).reshape(len(erows), len(find.vars))
        R = np.asarray(rrows, dtype=np.int64).reshape(len(rrows), len(find.rvars))
        return E, R

    def split(self, find: Find, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unique produced pair keys, split into (in spec, not in spec)."""
        if E.shape[0] == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        vpos = {v: k for k, v in enumerate(find.vars)}
        src = E[:, vpos[0]]
        keys = np.unique(np.concatenate([self.pair_keys(src, E[:, vpos[v]]) for v in find.returns]))
        good = np.isin(keys, self.spec_keys, assume_unique=True)
        return keys[good], keys[~good]

    def extend_rel(self, E: np.ndarray, R: np.ndarray, i: int, j: int):
        """Join rows with every relation from column ``i`` to column ``j``."""
        want = self.pair_keys(E[:, i], E[:, j])
        lo = np.searchsorted(self._rel_keys, want, side="left")
        hi = np.searchsorted(self._rel_keys, want, side="right")
        counts = hi - lo
        rows = np.repeat(np.arange(E.shape[0]), counts)
        starts = np.repeat(lo - (np.cumsum(counts) - counts), counts)
        idx = self._rel_order[starts + np.arange(rows.size)]
        return E[rows], np.hstack([R[rows], idx[:, None]])

    # masks

    def _term(self, t, E, R, vpos, rpos):
        if isinstance(t, VarLabel):
            return self.ent_label[E[:, vpos[t.v]]]
        if isinstance(t, Label):
            return _LABEL_CODE[t]
        if isinstance(t, RVarLabel):
            return self.rel_label[R[:, rpos[t.r]]]
        if isinstance(t, RelLabel):
            return _RLABEL_CODE[t]
        if isinstance(t, VarText):
            return self.ent_text[E[:, vpos[t.v]]]
        if isinstance(t, StrLit):
            return self.text_codes.get(t.s, -1)
        if isinstance(t, VarCoord):
            return self.coord[t.attr][E[:, vpos[t.v]]]
        if isinstance(t, RelMag):
            return self.rel_mag[R[:, rpos[t.r]]]
        if isinstance(t, FConst):
            return t.value
        raise TypeError(t)

    def mask(self, c, E, R, vpos, rpos) -> np.ndarray:
        n = E.shape[0]
        if isinstance(c, TrueC):
            return np.ones(n, dtype=bool)
        if isinstance(c, FalseC):
            return np.zeros(n, dtype=bool)
        if isinstance(c, And):
            return self.mask(c.left, E, R, vpos, rpos) & self.mask(c.right, E, R, vpos, rpos)
        if isinstance(c, Not):
            return ~self.mask(c.arg, E, R, vpos, rpos)
        if isinstance(c, Rel):
            rr = R[:, rpos[c.r]]
            return (self.rel_from[rr] == E[:, vpos[c.v]]) & (self.rel_to[rr] == E[:, vpos[c.w]])
        if isinstance(c, StrContains):
            if isinstance(c.haystack, VarText) and isinstance(c.needle, StrLit):
                return self.contains[c.needle.s][E[:, vpos[c.haystack.v]]]
            hay = self._strings(c.haystack, E, vpos, n)
            needle = self._strings(c.needle, E, vpos, n)
            return np.fromiter((b in a for a, b in zip(hay, needle)), dtype=bool, count=n)
        lhs = self._term(c.lhs, E, R, vpos, rpos)
        rhs = self._term(c.rhs, E, R, vpos, rpos)
        if isinstance(c, (VLabelEq, RLabelEq, StrEq)):
            out = lhs == rhs
        elif isinstance(c, FloatLt):
            out = lhs < rhs
        elif isinstance(c, FloatGt):
            out = lhs > rhs
        else:
            raise TypeError(c)
        return np.broadcast_to(np.asarray(out, dtype=bool), (n,)).copy()

    def _strings(self, t, E, vpos, n):
        if isinstance(t, StrLit):
            return [t.s] * n
        return [self.texts[i] for i in E[:, vpos[t.v]]]


# candidate conditions

def candidate_conditions(find: Find, rel_labels: Sequence[RelLabel]) -> list:
    """Atomic conditions that may fill the hole in And(cond, _) for ``find``."""
    V, Rv = find.vars, find.rvars
    plain = []
    for v in V:
        plain += [VLabelEq(VarLabel(v), lab) for lab in VLABEL_LITERALS]
    for r in Rv:
        plain += [RLabelEq(RVarLabel(r), lab) for lab in rel_labels]
    plain += [VLabelEq(VarLabel(a), VarLabel(b)) for a in V for b in V if a < b]
    for v in V:
        plain += [StrContains(VarText(v), StrLit(s)) for s in STR_LITERALS]
    plain += [StrEq(VarText(a), VarText(b)) for a in V for b in V if a < b]
    out = plain + [Not(c) for c in plain]
    props = [RelMag(r) for r in Rv] + [VarCoord(v, c) for v in V for c in COORDS]
    for p in props:
        for k in range(11):
            out += [FloatLt(p, FConst(k)), FloatGt(p, FConst(k))]
    for a in V:
        for b in V:
            if a == b:
                continue
            for axis in ("x", "y"):
                out += [FloatLt(VarCoord(a, axis + s), VarCoord(b, axis + t))
                        for s in "01" for t in "01"]
    out += [FloatLt(RelMag(r), RelMag(s)) for r in Rv for s in Rv if r != s]
    fresh = max(Rv) + 1
    if fresh <= MAX_VAR:
        out += [Rel(a, fresh, b) for a in V for b in V if a != b]
    return out


# version spaces and state

@dataclass
class _Entry:
    programs: list
    keys: list
    E: np.ndarray
    R: np.ndarray
    pos: np.ndarray
    neg: np.ndarray

    @property
    def rep(self) -> Find:
        return self.programs[0]

    @property
    def prec(self) -> float:
        return precision(self.pos.size, self.neg.size)


def precision(n_pos: int, n_neg: int) -> float:
    total = n_pos + n_neg
    return n_pos / total if total else 0.0


def _signature(pos: np.ndarray, neg: np.ndarray) -> bytes:
    return b"+" + pos.tobytes() + b"-" + neg.tobytes()


class VersionSpace:
    """Programs grouped by the (positive, negative) pairs they produce on the corpus."""

    def __init__(self):
        self.entries: dict[bytes, _Entry] = {}

    def __len__(self):
        return len(self.entries)

    def add(self, prog: Find, key: str, E, R, pos, neg) -> bool:
        """Insert ``prog``; returns True when it opened a new entry."""
        sig = _signature(pos, neg)
        ent = self.entries.get(sig)
        if ent is None:
            self.entries[sig] = _Entry([prog], [key], E, R, pos, neg)
            return True
        if key in ent.keys:
            return False
        if key < ent.keys[0]:
            ent.E, ent.R = E, R
        ent.programs.append(prog)
        ent.keys.append(key)
        order = sorted(range(len(ent.keys)), key=ent.keys.__getitem__)
        ent.programs = [ent.programs[i] for i in order]
        ent.keys = [ent.keys[i] for i in order]
        return False

    def ordered(self) -> list[_Entry]:
        return sorted(self.entries.values(), key=lambda e: e.keys[0])

    def programs(self) -> dict[bytes, list[Find]]:
        return {sig: list(e.programs) for sig, e in self.entries.items()}


def create_version_space(programs: Iterable[Find], corpus: Corpus) -> VersionSpace:
    vs = VersionSpace()
    for p in programs:
        E, R = corpus.bindings_table(p)
        if E.shape[0] == 0:
            continue
        pos, neg = corpus.split(p, E)
        vs.add(p, program_key(p), E, R, pos, neg)
    return vs


_EMPTY_KEYS = np.empty(0, dtype=np.int64)


@dataclass
class SynthesisState:
    """Perfect programs found so far and the link pairs they account for.

    Cover sets hold corpus pair keys; :meth:`Corpus.decode` turns them into
    (doc_id, src, dst) triples.
    """

    PP: list = field(default_factory=list)
    NP: list = field(default_factory=list)
    cover: np.ndarray = field(default_factory=lambda: _EMPTY_KEYS)
    pcover: np.ndarray = field(default_factory=lambda: _EMPTY_KEYS)
    ncover: np.ndarray = field(default_factory=lambda: _EMPTY_KEYS)
    epcover: np.ndarray = field(default_factory=lambda: _EMPTY_KEYS)

    def sizes(self) -> dict:
        return {"PP": len(self.PP), "NP": len(self.NP), "Cover": int(self.cover.size),
                "PCover": int(self.pcover.size), "NCover": int(self.ncover.size),
                "EPCover": int(self.epcover.size)}


@dataclass
class Trace:
    """What the search did, for reporting and invariant checks."""

    insertions: list = field(default_factory=list)  # (parent, child, parent prec, child prec)
    iterations: list = field(default_factory=list)  # state sizes after each iteration
    snapshots: list = field(default_factory=list)  # cover arrays after each iteration
    visited: int = 0


def _adds(keys: np.ndarray, covered: np.ndarray) -> bool:
    return bool(keys.size) and not np.isin(keys, covered, assume_unique=True).all()


def _subset(keys: np.ndarray, covered: np.ndarray) -> bool:
    return np.isin(keys, covered, assume_unique=True).all()


def refine(vs: VersionSpace, corpus: Corpus, state: SynthesisState, *, visited: set | None = None,
           trace: Trace | None = None, deadline: float | None = None,
           ) -> tuple[VersionSpace, list, list]:
    """One refinement round over every version-space entry.

    Updates the cover sets of ``state`` in place and returns the next version
    space together with the new perfect positive and negative programs.
    """
    trace = trace if trace is not None else Trace()
    visited = visited if visited is not None else set()
    new_vs = VersionSpace()
    pp_new: list = []
    np_new: list = []
    # Cover within this round starts from what perfect programs already explain.
    cover = state.pcover
    rel_labels = corpus.rel_labels_present or list(SPATIAL_LABELS)

    for entry in vs.ordered():
        if deadline is not None and time.monotonic() > deadline:
            logger.warning("time budget exhausted during refinement")
            break
        if not _adds(entry.pos, cover):
            continue
        parent = entry.rep
        vpos = {v: k for k, v in enumerate(parent.vars)}
        rpos = {r: k for k, r in enumerate(parent.rvars)}
        results = []
        for cand in candidate_conditions(parent, rel_labels):
            fresh = isinstance(cand, Rel) and cand.r not in rpos
            rvars = parent.rvars + (cand.r,) if fresh else parent.rvars
            cond = rewrite(And(parent.cond, cand))
            if isinstance(cond, FalseC):
                continue
            child = Find(parent.vars, rvars, cond, parent.returns)
            key = program_key(child)
            if key in visited:
                continue
            visited.add(key)
            if fresh:
                E, R = corpus.extend_rel(entry.E, entry.R, vpos[cand.v], vpos[cand.w])
            else:
                m = corpus.mask(cand, entry.E, entry.R, vpos, rpos)
                E, R = entry.E[m], entry.R[m]
            pos, neg = corpus.split(child, E)
            if pos.size + neg.size == 0:
                continue
            results.append((child, key, cand, pos, neg))
        trace.visited = len(visited)
        results.sort(key=lambda t: (-precision(t[3].size, t[4].size), -t[3].size, -t[4].size, t[1]))

        for child, key, cand, pos, neg in results:
            if neg.size == 0 and _adds(pos, state.pcover):
                pp_new.append(child)
                state.pcover = np.union1d(state.pcover, pos)
                cover = np.union1d(cover, pos)
                continue
            if _adds(pos, cover) and precision(pos.size, neg.size) > entry.prec:
                cover = np.union1d(cover, pos)
                if isinstance(cand, Rel) and cand.r not in rpos:
                    E, R = corpus.extend_rel(entry.E, entry.R, vpos[cand.v], vpos[cand.w])
                else:
                    m = corpus.mask(cand, entry.E, entry.R, vpos, rpos)
                    E, R = entry.E[m], entry.R[m]
                new_vs.add(child, key, E, R, pos, neg)
                trace.insertions.append((parent, child, entry.prec, precision(pos.size, neg.size)))
            if pos.size == 0 and _adds(neg, state.ncover):
                np_new.append(child)
                state.ncover = np.union1d(state.ncover, neg)

    # Mutually exclusive programs: an entry whose wrong links are all produced
    # by negative programs becomes perfect once those are subtracted.
    base = [p for p in state.PP + pp_new if not isinstance(p, Exclude)] + state.NP + np_new
    explained = np.union1d(state.pcover, state.ncover)
    epcover = _EMPTY_KEYS
    if base:
        p_u = Union(tuple(base))
        for entry in vs.ordered():
            if _subset(entry.neg, explained) and _adds(entry.pos, state.pcover):
                pp_new.append(Exclude(entry.rep, p_u))
                epcover = np.union1d(epcover, entry.pos)
    state.epcover = np.union1d(state.epcover, epcover)
    state.pcover = np.union1d(state.pcover, epcover)
    state.cover = np.union1d(state.cover, np.union1d(cover, state.pcover))

    for sig in [s for s, e in new_vs.entries.items() if _subset(e.pos, state.pcover)]:
        del new_vs.entries[sig]
    return new_vs, pp_new, np_new


@dataclass
class SynthesisResult:
    program: Program
    positives: Program
    negatives: Program
    state: SynthesisState
    trace: Trace
    corpus: Corpus
    paths: PathReport
    initial: list
    elapsed: float
    timed_out: bool = False
    diagnostic: str = ""

    def report(self) -> dict:
        return {
            "iterations": self.trace.iterations,
            "initial_programs": len(self.initial),
            "path_signatures": len(self.paths.paths),
            "unreachable_links": len(self.paths.unreachable),
            "links": self.corpus.n_links,
            "visited_candidates": self.trace.visited,
            "version_space_insertions": len(self.trace.insertions),
            "timed_out": self.timed_out,
            "diagnostic": self.diagnostic,
            **self.state.sizes(),
        }


def final_program(pp: Sequence[Program], np_: Sequence[Program]) -> Program:
    if not pp:
        return EMPTY
    return Exclude(Union(tuple(pp)), Union(tuple(np_)))


def synthesize(graphs: Sequence[DocumentGraph], specs: Sequence[LinkSpec],
               config: SynthesisConfig | None = None) -> SynthesisResult:
    """Mine paths, build initial programs, refine, and assemble the final program."""
    config = config or SynthesisConfig()
    if not graphs:
        raise ValueError("empty training corpus")
    start = time.monotonic()
    deadline = start + config.timeout_seconds
    corpus = Corpus(graphs, specs)
    paths = mine_paths_report(corpus.graphs, corpus.specs, config.max_path_len, config.min_support)
    initial = initial_programs(paths.paths)
    state, trace = SynthesisState(), Trace()
    visited = {program_key(p) for p in initial}
    vs = create_version_space(initial, corpus)
    logger.info("%d path signatures, %d initial programs, %d version-space entries",
                len(paths.paths), len(initial), len(vs))
    timed_out = False
    for it in range(config.max_iterations):
        if not len(vs):
            break
        if time.monotonic() > deadline:
            timed_out = True
            break
        vs, pp_new, np_new = refine(vs, corpus, state, visited=visited, trace=trace,
                                    deadline=deadline)
        state.PP.extend(pp_new)
        state.NP.extend(np_new)
        sizes = {"iteration": it + 1, "version_space": len(vs), **state.sizes()}
        trace.iterations.append(sizes)
        trace.snapshots.append({"PP": len(state.PP), "NP": len(state.NP), "Cover": state.cover,
                                "PCover": state.pcover, "NCover": state.ncover, "EPCover": state.epcover})
        logger.info("iteration %d: %s", it + 1, sizes)
    timed_out = timed_out or time.monotonic() > deadline
    diagnostic = ""
    if not state.PP:
        diagnostic = ("no links in the training corpus" if corpus.n_links == 0
                      else "no perfect positive program found")
        logger.warning("synthesis produced no positive program: %s", diagnostic)
    return SynthesisResult(
        program=final_program(state.PP, state.NP),
        positives=Union(tuple(state.PP)),
        negatives=Union(tuple(state.NP)),
        state=state, trace=trace, corpus=corpus, paths=paths, initial=initial,
        elapsed=time.monotonic() - start, timed_out=timed_out, diagnostic=diagnostic,
    )
