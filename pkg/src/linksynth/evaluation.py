"""Link-level precision/recall/F1 and prediction combination."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .document import DocumentError, LinkSpec

Predictions = Mapping[str, Iterable]


@dataclass(frozen=True)
class DocScore:
    tp: int
    fp: int
    fn: int


@dataclass
class EvaluationReport:
    tp: int
    fp: int
    fn: int
    per_doc: dict = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    @property
    def undefined(self) -> list[str]:
        """Metrics whose denominator was zero and are reported as 0."""
        out = []
        if self.tp + self.fp == 0:
            out.append("precision")
        if self.tp + self.fn == 0:
            out.append("recall")
        if self.precision + self.recall == 0:
            out.append("f1")
        return out

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "undefined": self.undefined,
            "per_doc": {d: {"tp": s.tp, "fp": s.fp, "fn": s.fn} for d, s in sorted(self.per_doc.items())},
        }


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def report_from_counts(tp: int, fp: int, fn: int) -> EvaluationReport:
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be nonnegative")
    return EvaluationReport(tp, fp, fn)


def _pairs(links, undirected: bool) -> set:
    out = {(int(a), int(b)) for a, b in links}
    if undirected:
        out = {(min(a, b), max(a, b)) for a, b in out}
    return out


def score(predictions: Predictions, specs: Iterable[LinkSpec], undirected: bool = False) -> EvaluationReport:
    """Exact ordered-pair matching of predicted links against gold links.

    Documents with a spec but no prediction count all their links as misses.
    """
    gold = {s.doc_id: s for s in specs}
    unknown = sorted(set(predictions) - set(gold))
    if unknown:
        raise DocumentError(f"predictions for unknown documents: {', '.join(unknown[:5])}")
    per_doc = {}
    for doc_id in sorted(gold):
        pred = _pairs(predictions.get(doc_id, ()), undirected)
        want = _pairs(gold[doc_id].links, undirected)
        per_doc[doc_id] = DocScore(len(pred & want), len(pred - want), len(want - pred))
    return EvaluationReport(
        tp=sum(s.tp for s in per_doc.values()),
        fp=sum(s.fp for s in per_doc.values()),
        fn=sum(s.fn for s in per_doc.values()),
        per_doc=per_doc,
    )


def combine(base: Predictions, other: Predictions, negatives: Predictions) -> dict[str, set]:
    """Per document, (base | other) - negatives; missing documents count as empty."""
    out = {}
    for doc_id in sorted(set(base) | set(other) | set(negatives)):
        merged = _pairs(base.get(doc_id, ()), False) | _pairs(other.get(doc_id, ()), False)
        out[doc_id] = merged - _pairs(negatives.get(doc_id, ()), False)
    return out


def format_table(rows: Mapping[str, EvaluationReport]) -> str:
    """Plain-text table with one row per named report."""
    width = max([len("Method")] + [len(k) for k in rows])
    lines = [f"{'Method':<{width}}  {'Prec':>6}  {'Rec':>6}  {'F1':>6}  {'TP':>6}  {'FP':>6}  {'FN':>6}"]
    for name, r in rows.items():
        lines.append(f"{name:<{width}}  {r.precision:6.3f}  {r.recall:6.3f}  {r.f1:6.3f}  "
                     f"{r.tp:6d}  {r.fp:6d}  {r.fn:6d}")
    return "\n".join(lines)


def predictions_to_json(preds: Mapping[str, Iterable]) -> str:
    data = {d: sorted([int(a), int(b)] for a, b in links) for d, links in preds.items()}
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def read_predictions(path) -> dict[str, set]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise DocumentError(f"{path}: expected an object mapping doc ids to link lists")
    out = {}
    for doc_id, links in data.items():
        try:
            out[str(doc_id)] = {(int(a), int(b)) for a, b in links}
        except (TypeError, ValueError) as exc:
            raise DocumentError(f"{path}: bad links for {doc_id!r}: {exc}") from exc
    return out
