"""Symbolic document model: entities, spatial relations, link specs, FUNSD I/O."""
from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

GRAPH_FORMAT = "linksynth.graph"
GRAPH_VERSION = 1


class DocumentError(ValueError):
    """Bad document data (malformed file, invalid entity, unknown id)."""


class Label(str, enum.Enum):
    HEADER = "Header"
    QUESTION = "Question"
    ANSWER = "Answer"
    OTHER = "Other"


class RelLabel(str, enum.Enum):
    TOP = "Top"
    DOWN = "Down"
    LEFT = "Left"
    RIGHT = "Right"
    ROW = "Row"
    COL = "Col"


SPATIAL_LABELS = (RelLabel.TOP, RelLabel.DOWN, RelLabel.LEFT, RelLabel.RIGHT)
_REL_ORDER = {lab: i for i, lab in enumerate(RelLabel)}

FUNSD_LABELS = {"header": Label.HEADER, "question": Label.QUESTION, "answer": Label.ANSWER}


@dataclass(frozen=True)
class Entity:
    id: int
    text: str
    x0: float
    y0: float
    x1: float
    y1: float
    label: Label = Label.OTHER

    def __post_init__(self):
        coords = (self.x0, self.y0, self.x1, self.y1)
        if not all(0.0 <= c <= 1.0 for c in coords):
            raise DocumentError(f"entity {self.id}: coordinates {coords} outside [0, 1]")
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise DocumentError(f"entity {self.id}: inverted box {coords}")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)


def l1_center_distance(a: Entity, b: Entity) -> float:
    (ax, ay), (bx, by) = a.center, b.center
    return abs(ax - bx) + abs(ay - by)


@dataclass(frozen=True)
class Relation:
    from_id: int
    to_id: int
    label: RelLabel
    mag: float


@dataclass(frozen=True)
class GraphConfig:
    """Graph construction knobs.

    ``overlap`` is the fraction of the smaller projection interval two boxes
    must share to count as aligned on that axis.
    """

    overlap: float = 0.5
    prune: bool = True

    def __post_init__(self):
        if not 0.0 < self.overlap <= 1.0:
            raise ValueError(f"overlap must be in (0, 1], got {self.overlap}")


@dataclass(frozen=True, eq=False)
class DocumentGraph:
    doc_id: str
    entities: tuple[Entity, ...]
    relations: tuple[Relation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "relations", tuple(self.relations))
        ids = [e.id for e in self.entities]
        if len(set(ids)) != len(ids):
            raise DocumentError(f"{self.doc_id}: duplicate entity ids")
        known = set(ids)
        seen = set()
        for r in self.relations:
            if r.from_id not in known or r.to_id not in known:
                raise DocumentError(f"{self.doc_id}: relation {r} references unknown entity")
            if r.from_id == r.to_id:
                raise DocumentError(f"{self.doc_id}: self relation on entity {r.from_id}")
            key = (r.from_id, r.to_id, r.label)
            if key in seen:
                raise DocumentError(f"{self.doc_id}: duplicate relation {key}")
            seen.add(key)

    def __eq__(self, other):
        if not isinstance(other, DocumentGraph):
            return NotImplemented
        return (self.doc_id, self.entities, self.relations) == (
            other.doc_id, other.entities, other.relations)

    def __hash__(self):
        return hash((self.doc_id, len(self.entities), len(self.relations)))

    @cached_property
    def by_id(self) -> dict[int, Entity]:
        return {e.id: e for e in self.entities}

    @cached_property
    def out_rels(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {e.id: [] for e in self.entities}
        for i, r in enumerate(self.relations):
            out[r.from_id].append(i)
        return out

    @cached_property
    def in_rels(self) -> dict[int, list[int]]:
        inc: dict[int, list[int]] = {e.id: [] for e in self.entities}
        for i, r in enumerate(self.relations):
            inc[r.to_id].append(i)
        return inc

    @cached_property
    def rels_between(self) -> dict[tuple[int, int], list[int]]:
        pairs: dict[tuple[int, int], list[int]] = {}
        for i, r in enumerate(self.relations):
            pairs.setdefault((r.from_id, r.to_id), []).append(i)
        return pairs

    @cached_property
    def entities_by_label(self) -> dict[Label, list[Entity]]:
        out: dict[Label, list[Entity]] = {}
        for e in self.entities:
            out.setdefault(e.label, []).append(e)
        return out

    @cached_property
    def rels_by_label(self) -> dict[RelLabel, list[int]]:
        out: dict[RelLabel, list[int]] = {}
        for i, r in enumerate(self.relations):
            out.setdefault(r.label, []).append(i)
        return out

    def entity(self, entity_id: int) -> Entity:
        return self.by_id[entity_id]


@dataclass(frozen=True)
class LinkSpec:
    doc_id: str
    links: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset((int(a), int(b)) for a, b in self.links))

    def check_against(self, entities: Iterable[Entity]):
        known = {e.id for e in entities}
        for a, b in sorted(self.links):
            if a not in known or b not in known:
                raise DocumentError(f"{self.doc_id}: link ({a}, {b}) references unknown entity")


@dataclass(frozen=True)
class RawDocument:
    """Entities of one document before relation construction."""

    doc_id: str
    entities: tuple[Entity, ...]


# graph construction

def _overlap_ok(a0: float, a1: float, b0: float, b1: float, frac: float) -> bool:
    inter = min(a1, b1) - max(a0, b0)
    if inter < 0:
        return False
    smaller = min(a1 - a0, b1 - b0)
    if smaller <= 0:
        # zero-extent interval: aligned when it touches the other one
        return True
    return inter >= frac * smaller


def build_graph(entities: Sequence[Entity], config: GraphConfig = GraphConfig(),
                doc_id: str = "") -> DocumentGraph:
    """Connect projection-aligned entity pairs with Top/Down/Left/Right relations.

    Horizontal alignment (shared vertical projection) yields Left/Right,
    vertical alignment yields Top/Down. Equal centers on the relevant axis
    produce no relation. With ``config.prune`` an edge A->C of label L is
    dropped when some B has A->B and B->C of the same label.
    """
    entities = list(entities)
    for e in entities:
        if not isinstance(e, Entity):
            raise DocumentError(f"not an entity: {e!r}")
    edges: list[tuple[int, int, RelLabel]] = []
    for i, a in enumerate(entities):
        ax, ay = a.center
        for j, b in enumerate(entities):
            if i == j:
                continue
            bx, by = b.center
            if _overlap_ok(a.y0, a.y1, b.y0, b.y1, config.overlap):
                if bx > ax:
                    edges.append((i, j, RelLabel.RIGHT))
                elif bx < ax:
                    edges.append((i, j, RelLabel.LEFT))
            if _overlap_ok(a.x0, a.x1, b.x0, b.x1, config.overlap):
                if by > ay:
                    edges.append((i, j, RelLabel.DOWN))
                elif by < ay:
                    edges.append((i, j, RelLabel.TOP))

    if config.prune:
        succ: dict[tuple[int, RelLabel], set[int]] = {}
        for i, j, lab in edges:
            succ.setdefault((i, lab), set()).add(j)
        kept = []
        for i, j, lab in edges:
            mids = succ.get((i, lab), ())
            if any(j in succ.get((m, lab), ()) for m in mids if m != j):
                continue
            kept.append((i, j, lab))
        edges = kept

    edges.sort(key=lambda t: (t[0], t[1], _REL_ORDER[t[2]]))
    relations = tuple(
        Relation(entities[i].id, entities[j].id, lab,
                 l1_center_distance(entities[i], entities[j]))
        for i, j, lab in edges
    )
    return DocumentGraph(doc_id, tuple(entities), relations)


@dataclass(frozen=True)
class TableCell:
    entity_id: int
    table: int
    row: int
    col: int


def load_table_annotations(path) -> list[TableCell]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return [TableCell(int(d["entity_id"]), int(d["table"]), int(d["row"]), int(d["col"]))
                for d in data]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"{path}: bad table annotation file: {exc}") from exc


def add_table_relations(graph: DocumentGraph, cells: Sequence[TableCell]) -> DocumentGraph:
    """Add symmetric Row/Col relations between cells sharing a row/column."""
    for c in cells:
        if c.entity_id not in graph.by_id:
            raise DocumentError(f"{graph.doc_id}: table annotation names unknown entity {c.entity_id}")
    if not cells:
        return graph
    existing = {(r.from_id, r.to_id, r.label) for r in graph.relations}
    added = []
    for a in cells:
        for b in cells:
            if a.entity_id == b.entity_id or a.table != b.table:
                continue
            for lab, same in ((RelLabel.ROW, a.row == b.row), (RelLabel.COL, a.col == b.col)):
                key = (a.entity_id, b.entity_id, lab)
                if same and key not in existing:
                    existing.add(key)
                    ea, eb = graph.by_id[a.entity_id], graph.by_id[b.entity_id]
                    added.append(Relation(a.entity_id, b.entity_id, lab, l1_center_distance(ea, eb)))
    return DocumentGraph(graph.doc_id, graph.entities, graph.relations + tuple(added))


# internal graph json

def graph_to_dict(graph: DocumentGraph) -> dict:
    return {
        "format": GRAPH_FORMAT,
        "version": GRAPH_VERSION,
        "doc_id": graph.doc_id,
        "entities": [{"id": e.id, "text": e.text, "box": list(e.box), "label": e.label.value}
                     for e in graph.entities],
        "relations": [{"from": r.from_id, "to": r.to_id, "label": r.label.value, "mag": r.mag}
                      for r in graph.relations],
    }


def graph_from_dict(data: dict) -> DocumentGraph:
    if data.get("format") != GRAPH_FORMAT or data.get("version") != GRAPH_VERSION:
        raise DocumentError(f"unsupported graph format {data.get('format')!r} v{data.get('version')!r}")
    try:
        entities = tuple(Entity(int(e["id"]), e["text"], *map(float, e["box"]), Label(e["label"]))
                         for e in data["entities"])
        relations = tuple(Relation(int(r["from"]), int(r["to"]), RelLabel(r["label"]), float(r["mag"]))
                          for r in data["relations"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"malformed graph json: {exc}") from exc
    return DocumentGraph(data["doc_id"], entities, relations)


def dump_graph(graph: DocumentGraph, path):
    Path(path).write_text(json.dumps(graph_to_dict(graph), ensure_ascii=False), encoding="utf-8")


def read_graph(path) -> DocumentGraph:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError(f"{path}: {exc}") from exc
    return graph_from_dict(data)


# FUNSD ingestion

PAGE_SUFFIX = ".page.json"
TABLE_SUFFIX = ".tables.json"


def _page_size(ann: Path, page_size) -> tuple[float, float]:
    sidecar = ann.with_name(ann.stem + PAGE_SUFFIX)
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            return float(meta["width"]), float(meta["height"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"{sidecar}: bad page sidecar: {exc}") from exc
    if page_size is not None:
        return float(page_size[0]), float(page_size[1])
    # standard FUNSD layout: <root>/annotations/x.json next to <root>/images/x.png
    for ext in (".png", ".jpg", ".jpeg"):
        img = ann.parent.parent / "images" / (ann.stem + ext)
        if img.exists():
            from PIL import Image
            with Image.open(img) as im:
                return float(im.size[0]), float(im.size[1])
    raise DocumentError(f"{ann}: no page dimensions (sidecar, image or explicit page size)")


def parse_funsd_form(form: list, doc_id: str, width: float, height: float,
                     source: str = "") -> tuple[RawDocument, LinkSpec]:
    where = source or doc_id
    scale = max(width, height)
    if scale <= 0:
        raise DocumentError(f"{where}: non-positive page size {width}x{height}")
    entities = []
    links = set()
    for k, item in enumerate(form):
        try:
            eid = int(item["id"])
            text = str(item["text"])
            box = [float(c) for c in item["box"]]
            raw_label = str(item.get("label", "other")).lower()
            linking = item.get("linking", [])
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"{where}: entry {k} missing/invalid field: {exc}") from exc
        if len(box) != 4:
            raise DocumentError(f"{where}: entry {eid} box must have 4 numbers")
        x0, y0, x1, y1 = (c / scale for c in box)
        try:
            entities.append(Entity(eid, text, x0, y0, x1, y1, FUNSD_LABELS.get(raw_label, Label.OTHER)))
        except DocumentError as exc:
            raise DocumentError(f"{where}: {exc}") from exc
        for pair in linking:
            if len(pair) != 2:
                raise DocumentError(f"{where}: entry {eid} malformed linking {pair}")
            links.add((int(pair[0]), int(pair[1])))
    spec = LinkSpec(doc_id, frozenset(links))
    spec.check_against(entities)
    doc = RawDocument(doc_id, tuple(entities))
    if len({e.id for e in entities}) != len(entities):
        raise DocumentError(f"{where}: duplicate entity ids")
    return doc, spec


def _annotation_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise DocumentError(f"{path}: not a file or directory")
    root = path / "annotations" if (path / "annotations").is_dir() else path
    return sorted(p for p in root.glob("*.json")
                  if not p.name.endswith(PAGE_SUFFIX) and not p.name.endswith(TABLE_SUFFIX))


def load_funsd(path, page_size=None) -> tuple[list[RawDocument], list[LinkSpec]]:
    """Load every FUNSD-format annotation file under ``path``.

    Boxes are divided by max(page width, page height). Page dimensions come
    from a ``<stem>.page.json`` sidecar, then ``page_size``, then a matching
    image under a sibling ``images/`` directory. XFUND-style files (top-level
    ``documents`` list carrying ``img.width``/``img.height``) are accepted too.
    """
    docs, specs = [], []
    for ann in _annotation_files(Path(path)):
        try:
            data = json.loads(ann.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DocumentError(f"{ann}: {exc}") from exc
        if isinstance(data, dict) and "documents" in data:
            for d in data["documents"]:
                try:
                    w, h = float(d["img"]["width"]), float(d["img"]["height"])
                    doc_id, form = str(d["id"]), d["document"]
                except (KeyError, TypeError, ValueError) as exc:
                    raise DocumentError(f"{ann}: malformed XFUND document: {exc}") from exc
                doc, spec = parse_funsd_form(form, doc_id, w, h, source=str(ann))
                docs.append(doc)
                specs.append(spec)
            continue
        if not isinstance(data, dict) or not isinstance(data.get("form"), list):
            raise DocumentError(f"{ann}: expected an object with a 'form' list")
        w, h = _page_size(ann, page_size)
        doc, spec = parse_funsd_form(data["form"], ann.stem, w, h, source=str(ann))
        docs.append(doc)
        specs.append(spec)
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        raise DocumentError(f"{path}: duplicate document ids")
    return docs, specs


def load_link_specs(path) -> list[LinkSpec]:
    """Read only the linking annotations (no page size needed)."""
    specs = []
    for ann in _annotation_files(Path(path)):
        try:
            data = json.loads(ann.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DocumentError(f"{ann}: {exc}") from exc
        forms = ([(str(d["id"]), d["document"]) for d in data["documents"]]
                 if isinstance(data, dict) and "documents" in data
                 else [(ann.stem, data.get("form") if isinstance(data, dict) else None)])
        for doc_id, form in forms:
            if not isinstance(form, list):
                raise DocumentError(f"{ann}: expected a 'form' list")
            links = {(int(a), int(b)) for item in form for a, b in item.get("linking", [])}
            specs.append(LinkSpec(doc_id, frozenset(links)))
    return specs


def build_corpus(path, config: GraphConfig = GraphConfig(), page_size=None,
                 ) -> tuple[list[DocumentGraph], list[LinkSpec]]:
    """load_funsd + build_graph, adding Row/Col relations from table sidecars."""
    docs, specs = load_funsd(path, page_size)
    tables = {}
    for ann in _annotation_files(Path(path)):
        sidecar = ann.with_name(ann.stem + TABLE_SUFFIX)
        if sidecar.exists():
            tables[ann.stem] = load_table_annotations(sidecar)
    graphs = []
    for doc in docs:
        g = build_graph(doc.entities, config, doc.doc_id)
        if doc.doc_id in tables:
            g = add_table_relations(g, tables[doc.doc_id])
        graphs.append(g)
    return graphs, specs
