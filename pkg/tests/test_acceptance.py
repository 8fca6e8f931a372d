"""Acceptance criteria, one test (or small group) per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linksynth.cli import main
from linksynth.document import Entity, GraphConfig, Label, LinkSpec, build_corpus, build_graph
from linksynth.dsl import (FALSE, TRUE, And, FloatGt, FloatLt, Not, Rel, RelMag, RLabelEq, RVarLabel,
                           StrContains, StrEq, StrLit, VarCoord, VarLabel, VarText, VLabelEq, rewrite)
from linksynth.evaluation import combine, f1_score, format_table, report_from_counts, score
from linksynth.interpreter import Binding, eval_condition, eval_find, eval_find_naive, eval_program, run_program
from linksynth.synthesis import SynthesisConfig, precision, synthesize
from linksynth.synthetic import EVENT_LINKS, FAMILIES, event_form, write_forms

from strategies import conditions, finds, graphs

criterion = pytest.mark.criterion


# shared corpora

@pytest.fixture(scope="module")
def family_runs(tmp_path_factory):
    """Synthesize once per layout family: 20 training and 10 held-out forms each."""
    root = tmp_path_factory.mktemp("families")
    runs = {}
    for fam in FAMILIES:
        write_forms(root / fam / "train", fam, 20, seed=11)
        write_forms(root / fam / "test", fam, 10, seed=12)
        train = build_corpus(root / fam / "train")
        test = build_corpus(root / fam / "test")
        t0 = time.monotonic()
        result = synthesize(*train, SynthesisConfig())
        runs[fam] = {"train": train, "test": test, "result": result, "seconds": time.monotonic() - t0}
    return runs


# 1. interpreter oracle equivalence

@criterion(1, "eval_find == eval_find_naive on >= 500 random cases in < 60 s")
def test_oracle_equivalence():
    seen = []

    @settings(max_examples=500, database=None)
    @given(graphs(max_size=8), finds(max_vars=3, max_rvars=2))
    def check(g, p):
        seen.append(1)
        assert eval_find(p, g) == eval_find_naive(p, g)

    start = time.monotonic()
    check()
    elapsed = time.monotonic() - start
    print(f"oracle equivalence: {len(seen)} cases in {elapsed:.1f} s")
    assert len(seen) >= 500
    assert elapsed < 60


# 2. rewrite soundness

V, R = (0, 1, 2), (0, 1)
_A = Rel(0, 0, 1)
_B = VLabelEq(VarLabel(1), Label.ANSWER)
RULES = {
    "And(A,A)": (And(_A, _A), _A),
    "And(A,False)": (And(_B, FALSE), FALSE),
    "And(A,True)": (And(_B, TRUE), _B),
    "F<F": (FloatLt(RelMag(0), RelMag(0)), FALSE),
    "F>F": (FloatGt(VarCoord(1, "y0"), VarCoord(1, "y0")), FALSE),
    "Contains(S,S)": (StrContains(VarText(0), VarText(0)), TRUE),
    "Equal(S,S)": (StrEq(VarText(2), VarText(2)), TRUE),
    "V.label==V.label": (VLabelEq(VarLabel(1), VarLabel(1)), TRUE),
    "R.label==R.label": (RLabelEq(RVarLabel(1), RVarLabel(1)), TRUE),
    "V.x0<V.x1": (FloatLt(VarCoord(0, "x0"), VarCoord(0, "x1")), TRUE),
    "V.x1<V.x0": (FloatLt(VarCoord(0, "x1"), VarCoord(0, "x0")), FALSE),
    "V.y0<V.y1": (FloatLt(VarCoord(2, "y0"), VarCoord(2, "y1")), TRUE),
    "V.y1<V.y0": (FloatLt(VarCoord(2, "y1"), VarCoord(2, "y0")), FALSE),
    "literal fold": (StrEq(StrLit(":"), StrLit("-")), FALSE),
    "Not(True)": (Not(TRUE), FALSE),
    "Not(Not(A))": (Not(Not(_B)), _B),
}


def _random_graph(rng: random.Random):
    while True:
        ents = []
        for i in range(rng.randint(2, 6)):
            x0, x1 = sorted(rng.sample(range(21), 2))
            y0, y1 = sorted(rng.sample(range(21), 2))
            ents.append(Entity(i, rng.choice(["A:", "b/c", "x", "d-e", "x"]), x0 / 20, y0 / 20, x1 / 20, y1 / 20,
                               rng.choice(list(Label))))
        g = build_graph(ents, GraphConfig(prune=False))
        if g.relations:
            return g


def _random_binding(rng, g):
    return Binding.of({v: rng.choice(g.entities).id for v in V}, {r: rng.randrange(len(g.relations)) for r in R})


@criterion(2, "each rewrite rule is sound on 1000 random bindings; rewrite is idempotent")
@pytest.mark.parametrize("rule", list(RULES))
def test_rewrite_rule_soundness(rule):
    lhs, rhs = RULES[rule]
    assert rewrite(lhs) == rhs
    rng = random.Random(rule)
    violations = 0
    for _ in range(1000):
        g = _random_graph(rng)
        b = _random_binding(rng, g)
        violations += eval_condition(lhs, b, g) != eval_condition(rhs, b, g)
    assert violations == 0


@criterion(2, "each rewrite rule is sound on 1000 random bindings; rewrite is idempotent")
def test_rewrite_soundness_random_conditions():
    count = []

    @settings(max_examples=1000, database=None)
    @given(conditions(V, R, max_leaves=8), st.integers(0, 2**32 - 1))
    def check(c, seed):
        count.append(1)
        rnd = random.Random(seed)
        g = _random_graph(rnd)
        b = _random_binding(rnd, g)
        r = rewrite(c)
        assert eval_condition(c, b, g) == eval_condition(r, b, g)
        assert rewrite(r) == r

    check()
    assert len(count) == 1000


# 3. synthesis invariants

def _pairs_of(program, graphs_):
    return {(g.doc_id, a, b) for g in graphs_ for a, b in eval_program(program, g)}


def _gold(specs):
    return {(s.doc_id, a, b) for s in specs for a, b in s.links}


@criterion(3, "PP have no wrong links, NP no right links, covers monotone, insertions raise precision")
@pytest.mark.parametrize("family", FAMILIES)
def test_synthesis_invariants(family_runs, family):
    run = family_runs[family]
    graphs_, specs = run["train"]
    res = run["result"]
    gold = _gold(specs)
    state, trace = res.state, res.trace

    for p in state.PP:
        assert not _pairs_of(p, graphs_) - gold, "perfect positive program produced a wrong link"
    for p in state.NP:
        assert not _pairs_of(p, graphs_) & gold, "perfect negative program produced a right link"
    assert res.corpus.decode(state.pcover) == set().union(*[_pairs_of(p, graphs_) for p in state.PP])
    assert res.corpus.decode(state.ncover) == set().union(*[_pairs_of(p, graphs_) for p in state.NP])

    for before, after in zip(trace.snapshots, trace.snapshots[1:]):
        for key in ("Cover", "PCover", "NCover", "EPCover"):
            assert np.isin(before[key], after[key]).all(), f"{key} shrank"
        assert before["PP"] <= after["PP"] and before["NP"] <= after["NP"]

    for parent, child, p_prec, c_prec in trace.insertions:
        got = [_pairs_of(x, graphs_) for x in (parent, child)]
        precs = [precision(len(s & gold), len(s - gold)) for s in got]
        assert precs[0] == pytest.approx(p_prec) and precs[1] == pytest.approx(c_prec)
        assert precs[1] > precs[0]

    test_graphs, test_specs = run["test"]
    report = score(run_program(res.program, test_graphs), test_specs)
    print(f"{family}: {len(state.PP)} PP, {len(state.NP)} NP, {len(trace.insertions)} insertions, "
          f"held-out P={report.precision:.3f} R={report.recall:.3f} ({run['seconds']:.1f} s)")


# 4. end-to-end synthetic key/value corpus

@criterion(4, "key-value corpus: held-out precision 1.00, recall >= 0.95, synthesis < 60 s")
def test_end_to_end_key_value(family_runs):
    run = family_runs["flat"]
    res = run["result"]
    report = score(run_program(res.program, run["test"][0]), run["test"][1])
    print(format_table({"flat held-out": report}), f"\nsynthesis {run['seconds']:.2f} s")
    assert report.precision == 1.0
    assert report.recall >= 0.95
    assert run["seconds"] < 60


# 5. event form fixture

@criterion(5, "event-form replica: synthesized links equal the fixture spec exactly")
def test_event_form_fixture():
    corpus = [event_form("event_a"), event_form("event_b", dy=0.2)]
    res = synthesize([g for g, _ in corpus], [s for _, s in corpus], SynthesisConfig(max_iterations=6))
    for g, spec in corpus:
        assert eval_program(res.program, g) == spec.links == EVENT_LINKS
    held_out, spec = event_form("event_c", dy=0.1)
    assert eval_program(res.program, held_out) == spec.links


# 6. metric arithmetic

def _fake_corpus(tp, fp, fn):
    gold = {(0, i) for i in range(tp + fn)}
    pred = {(0, i) for i in range(tp)} | {(1, i) for i in range(fp)}
    return {"d": pred}, [LinkSpec("d", frozenset(gold))]


@criterion(6, "metric arithmetic reproduces the published precision/recall/F1 and combination")
def test_metric_arithmetic():
    r = score(*_fake_corpus(483, 202, 576))
    assert (r.tp, r.fp, r.fn) == (483, 202, 576)
    assert r.precision == pytest.approx(0.705, abs=1e-3)
    assert r.recall == pytest.approx(0.456, abs=1e-3)
    assert f1_score(0.712, 0.539) == pytest.approx(0.614, abs=1e-3)
    assert report_from_counts(483, 202, 576).f1 == pytest.approx(r.f1)

    # 1059 gold links; the two methods share 380 correct links; the negative
    # programs remove 37 of the other method's wrong links.
    gold = {(0, i) for i in range(1059)}
    base = {(0, i) for i in range(483)} | {(1, i) for i in range(202)}
    other = {(0, i) for i in range(103, 918)} | {(2, i) for i in range(575)}
    negatives = {(2, i) for i in range(37)} | {(0, 2000)}
    assert len(base & gold) == 483 and len(other & gold) == 815 and len(other - gold) == 575
    merged = combine({"es": base}, {"es": other}, {"es": negatives})
    c = score(merged, [LinkSpec("es", frozenset(gold))])
    assert (c.tp, c.fp, c.fn) == (918, 740, 141)
    assert c.precision == pytest.approx(0.554, abs=1e-3)


# 7. final program identity

def _random_documents(n, seed, tmp):
    rng = random.Random(seed)
    docs = []
    for fam in FAMILIES:
        write_forms(tmp / fam, fam, n // 8, seed)
        docs += build_corpus(tmp / fam)[0]
    while len(docs) < n:
        g = _random_graph(rng)
        docs.append(build_graph(g.entities, GraphConfig(prune=rng.random() < 0.5), doc_id=f"r{len(docs)}"))
    return docs


@criterion(7, "eval(p_final) == union(PP) - union(NP) on 100 random documents")
def test_final_program_identity(family_runs, tmp_path):
    docs = _random_documents(100, 5, tmp_path)
    assert len(docs) == 100
    checked = 0
    for fam in FAMILIES:
        res = family_runs[fam]["result"]
        for g in docs:
            pos = set().union(*[eval_program(p, g) for p in res.state.PP])
            neg = set().union(*[eval_program(p, g) for p in res.state.NP])
            assert eval_program(res.program, g) == pos - neg
            checked += 1
    assert checked == 100 * len(FAMILIES)


# 8. determinism

@criterion(8, "two synthesize runs on identical inputs write byte-identical programs")
def test_determinism(tmp_path):
    for fam in FAMILIES:
        write_forms(tmp_path / "train", fam, 6, seed=3)
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run / "program.json"
        assert main(["synthesize", "--train-dir", str(tmp_path / "train"), "--out", str(out)]) == 0
        outs.append(out)
    for name in ("program.json", "program.pp.json", "program.np.json"):
        a, b = (o.with_name(name).read_bytes() for o in outs)
        assert a == b, name


# 9. optional benchmark harness

@criterion(9, "FUNSD-format corpus: synthesize + eval finish within 2 h and print a report")
def test_funsd_harness(tmp_path, capsys):
    root = os.environ.get("LINKSYNTH_FUNSD_DIR")
    if not root:
        pytest.skip("set LINKSYNTH_FUNSD_DIR to a FUNSD root (training_data/, testing_data/)")
    root = Path(root)
    train, test = root / "training_data", root / "testing_data"
    start = time.monotonic()
    out = tmp_path / "program.json"
    assert main(["synthesize", "--train-dir", str(train), "--out", str(out), "--timeout-seconds", "7000"]) == 0
    pred = tmp_path / "pred.json"
    assert main(["run", "--program", str(out), "--docs", str(test), "--out", str(pred)]) == 0
    assert main(["eval", "--pred", str(pred), "--gold", str(test), "--format", "table"]) == 0
    elapsed = time.monotonic() - start
    with capsys.disabled():
        print(capsys.readouterr().out, f"\nFUNSD harness wall time {elapsed:.0f} s")
    assert elapsed < 7200
