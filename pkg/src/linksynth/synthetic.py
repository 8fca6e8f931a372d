"""Seeded generator for FUNSD-format forms, and a hand-built event form.

Every generated form is written as ``<stem>.json`` with a ``form`` list plus
a ``<stem>.page.json`` sidecar giving the page size in pixels. The table
family also writes ``<stem>.tables.json`` with row/column cell positions.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .document import (PAGE_SUFFIX, TABLE_SUFFIX, DocumentGraph, Entity, GraphConfig, Label,
                       LinkSpec, RelLabel, build_graph)
from .dsl import (And, Exclude, FConst, Find, FloatLt, Not, Rel, RelMag, RLabelEq, RVarLabel,
                  StrContains, StrLit, Union, VarLabel, VarText, VLabelEq, conj)

FAMILIES = ("flat", "grouped", "long_value", "table")
PAGE = 1000  # square page, so pixel / 1000 is the normalized coordinate

_KEYS = ["Name", "Date", "Phone", "Fax", "Email", "Address", "City", "State", "Zip", "Title",
         "Company", "Department", "Account", "Amount", "Total", "Reference", "Project", "Code",
         "Signature", "Country", "Contact", "Invoice", "Order", "Region"]
_WORDS = ["alpha", "north", "river", "blue", "main", "office", "summit", "green", "delta", "park",
          "lake", "field", "stone", "west", "cedar", "harbor", "market", "union", "pine", "oak"]
_HEADERS = ["Applicant", "Billing", "Shipping", "Account Details", "Contact Details", "Payment",
            "Project Summary", "Approvals"]


@dataclass
class _Form:
    items: list
    tables: list

    def add(self, text, box, label, links=()):
        eid = len(self.items)
        self.items.append({"id": eid, "text": text, "box": [int(round(c)) for c in box],
                           "label": label, "linking": [list(p) for p in links], "words": []})
        return eid

    def link(self, src, dst):
        for eid in (src, dst):
            self.items[eid]["linking"].append([src, dst])


def _value_text(rng: random.Random, words: int = 1) -> str:
    out = [rng.choice(_WORDS).capitalize() for _ in range(words)]
    if rng.random() < 0.4:
        out.append(str(rng.randint(10, 9999)))
    return " ".join(out)


def _text_width(rng: random.Random, lo=70, hi=130) -> int:
    return rng.randint(lo, hi)


def _key_value_row(form: _Form, rng: random.Random, x: float, y: float, key: str):
    """A key with its value to the right on the same line; centers < 200 px apart."""
    kw, vw, gap, h = _text_width(rng), _text_width(rng), rng.randint(8, 30), rng.randint(18, 24)
    k = form.add(key + ":", (x, y, x + kw, y + h), "question")
    vx = x + kw + gap
    v = form.add(_value_text(rng), (vx, y + rng.randint(-2, 2), vx + vw, y + h), "answer")
    form.link(k, v)
    return k, v


def _flat(rng: random.Random) -> _Form:
    form = _Form([], [])
    form.add("Registration Form", (350, 40, 650, 75), "other")
    keys = rng.sample(_KEYS, rng.randint(4, 9))
    y = 120
    for key in keys:
        _key_value_row(form, rng, 60 + rng.randint(0, 20), y, key)
        y += rng.randint(45, 70)
    form.add(f"Page {rng.randint(1, 9)}", (450, 950, 550, 970), "other")
    return form


def _grouped(rng: random.Random) -> _Form:
    form = _Form([], [])
    y = 60
    for name in rng.sample(_HEADERS, rng.randint(2, 3)):
        x = 60 + rng.randint(0, 20)
        hdr = form.add(name, (x, y, x + 260, y + 28), "header")
        y += 45
        for key in rng.sample(_KEYS, rng.randint(2, 3)):
            k, _ = _key_value_row(form, rng, x, y, key)
            form.link(hdr, k)
            y += rng.randint(38, 50)
        y += 30
    return form


def _long_value(rng: random.Random) -> _Form:
    form = _Form([], [])
    y = 70
    for key in rng.sample(_KEYS, rng.randint(3, 5)):
        x = 60 + rng.randint(0, 20)
        if rng.random() < 0.5:
            _key_value_row(form, rng, x, y, key)
            y += 55
            continue
        k = form.add(key + ":", (x, y, x + _text_width(rng), y + 22), "question")
        h = rng.randint(40, 80)
        v = form.add(_value_text(rng, rng.randint(4, 9)),
                     (x, y + 30, x + rng.randint(400, 800), y + 30 + h), "answer")
        form.link(k, v)
        y += 30 + h + 35
    return form


def _table(rng: random.Random) -> _Form:
    form = _Form([], [])
    ncols, nrows = rng.randint(2, 4), rng.randint(2, 5)
    x0, y0, cw, rh = 60, 120 + rng.randint(0, 40), rng.randint(170, 210), 40
    heads = rng.sample(_KEYS, ncols)
    head_ids = []
    for c, name in enumerate(heads):
        hid = form.add(name, (x0 + c * cw, y0, x0 + c * cw + cw - 20, y0 + 26), "question")
        head_ids.append(hid)
        form.tables.append({"entity_id": hid, "table": 0, "row": 0, "col": c})
    for r in range(1, nrows + 1):
        for c in range(ncols):
            y = y0 + r * rh
            cid = form.add(_value_text(rng), (x0 + c * cw, y, x0 + c * cw + rng.randint(80, cw - 20),
                                              y + 24), "answer")
            form.link(head_ids[c], cid)
            form.tables.append({"entity_id": cid, "table": 0, "row": r, "col": c})
    return form


_BUILDERS = {"flat": _flat, "grouped": _grouped, "long_value": _long_value, "table": _table}


def generate_forms(family: str, count: int, seed: int) -> list[tuple[str, dict, list]]:
    """``count`` forms as (stem, annotation dict, table cells) triples."""
    if family not in _BUILDERS:
        raise ValueError(f"unknown layout family {family!r}; choose from {', '.join(FAMILIES)}")
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = random.Random(f"{family}:{seed}")
    out = []
    for i in range(count):
        form = _BUILDERS[family](rng)
        out.append((f"{family}_{seed}_{i:04d}", {"form": form.items}, form.tables))
    return out


def write_forms(out_dir, family: str, count: int, seed: int) -> list[Path]:
    """Write generated forms in FUNSD layout; returns the annotation paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, ann, tables in generate_forms(family, count, seed):
        path = out / f"{stem}.json"
        path.write_text(json.dumps(ann, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        (out / f"{stem}{PAGE_SUFFIX}").write_text(
            json.dumps({"height": PAGE, "width": PAGE}, sort_keys=True) + "\n", encoding="utf-8")
        if tables:
            (out / f"{stem}{TABLE_SUFFIX}").write_text(
                json.dumps(tables, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


# event form: a title, two sections, keys with values to their right

EVENT_GRAPH_CONFIG = GraphConfig(overlap=0.5, prune=False)


def event_form_entities(dy: float = 0.0) -> list[Entity]:
    H, Q, A = Label.HEADER, Label.QUESTION, Label.ANSWER
    rows = [
        ("Community Event", 0.30, 0.05, 0.70, 0.09, H),
        ("General Information:", 0.25, 0.15, 0.55, 0.19, H),
        ("Date:", 0.25, 0.22, 0.45, 0.25, Q), ("May 4", 0.47, 0.22, 0.60, 0.25, A),
        ("Location:", 0.25, 0.27, 0.45, 0.30, Q), ("City Hall", 0.47, 0.27, 0.60, 0.30, A),
        ("Organizer:", 0.25, 0.32, 0.45, 0.35, Q), ("J. Smith", 0.47, 0.32, 0.60, 0.35, A),
        ("Hours:", 0.25, 0.40, 0.55, 0.44, H),
        ("Opening:", 0.25, 0.47, 0.45, 0.50, Q), ("9 am", 0.47, 0.47, 0.60, 0.50, A),
        ("Closing:", 0.25, 0.52, 0.45, 0.55, Q), ("5 pm", 0.47, 0.52, 0.60, 0.55, A),
    ]
    return [Entity(i, t, x0, y0 + dy, x1, y1 + dy, lab) for i, (t, x0, y0, x1, y1, lab) in enumerate(rows)]


EVENT_LINKS = frozenset({
    (0, 1), (0, 8),                          # title -> section headers
    (1, 2), (1, 4), (1, 6), (8, 9), (8, 11),  # section header -> its keys
    (2, 3), (4, 5), (6, 7), (9, 10), (11, 12),  # key -> value
})


def event_form(doc_id: str = "event", dy: float = 0.0) -> tuple[DocumentGraph, LinkSpec]:
    graph = build_graph(event_form_entities(dy), EVENT_GRAPH_CONFIG, doc_id)
    return graph, LinkSpec(doc_id, EVENT_LINKS)


def event_form_program() -> Union:
    """Hand-written linking program for the event form."""
    down = lambda r: RLabelEq(RVarLabel(r), RelLabel.DOWN)  # noqa: E731
    is_ = lambda v, lab: VLabelEq(VarLabel(v), lab)  # noqa: E731
    colon = lambda v: StrContains(VarText(v), StrLit(":"))  # noqa: E731
    header_to_section = Find((0, 1), (0,), conj(
        Rel(0, 0, 1), down(0), is_(0, Label.HEADER), is_(1, Label.HEADER),
        Not(colon(0)), colon(1)), (1,))
    header_below = Find((0, 1), (0,), conj(
        Rel(0, 0, 1), down(0), is_(0, Label.HEADER), is_(1, Label.QUESTION)), (1,))
    behind_other_header = Find((0, 1, 2), (0, 1), conj(
        Rel(0, 0, 2), down(0), Rel(2, 1, 1), down(1),
        is_(0, Label.HEADER), is_(2, Label.HEADER), is_(1, Label.QUESTION)), (1,))
    key_value = Find((0, 1), (0,), And(conj(
        Rel(0, 0, 1), RLabelEq(RVarLabel(0), RelLabel.RIGHT),
        is_(0, Label.QUESTION), is_(1, Label.ANSWER)), FloatLt(RelMag(0), FConst(2))), (1,))
    return Union((header_to_section, Exclude(header_below, behind_other_header), key_value))


def write_event_form(out_dir, stem: str = "event") -> Path:
    """Write the event form as a FUNSD annotation on a 1000 x 1000 page."""
    label = {Label.HEADER: "header", Label.QUESTION: "question", Label.ANSWER: "answer"}
    links = sorted(EVENT_LINKS)
    form = [{"id": e.id, "text": e.text, "box": [round(c * PAGE) for c in e.box], "label": label[e.label],
             "linking": [list(p) for p in links if e.id in p], "words": []}
            for e in event_form_entities()]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.json"
    path.write_text(json.dumps({"form": form}, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (out / f"{stem}{PAGE_SUFFIX}").write_text(json.dumps({"height": PAGE, "width": PAGE}) + "\n", encoding="utf-8")
    return path
