"""Visual-Genome-style scene graphs: parsing, validation, queries and phrases.

A scene graph file describes one image::

    {"image": {"width": 800, "height": 600},
     "objects": [{"id": "o1", "name": "sign", "attributes": ["walk"],
                  "bbox": {"x": 10, "y": 20, "w": 30, "h": 40}}],
     "relations": [{"id": "r1", "subject_id": "o1", "predicate": "next to",
                    "object_id": "o2"}],
     "regions": [{"id": "d1", "phrase": "a street lamp", "bbox": {...}}]}

Boxes that stick out of the image are clipped; entities whose clipped box is
empty are dropped, as are relations whose endpoints no longer resolve. Every
drop is logged and recorded in :attr:`SceneGraph.warnings`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import ParseError, SchemaError, UnknownEntityError, ValidationError
from .text import normalize, tokenize

logger = logging.getLogger(__name__)

__all__ = [
    "BoundingBox",
    "ObjectNode",
    "Relation",
    "RegionDescription",
    "SceneGraph",
    "parse_scene_graph",
    "load_scene_graph",
    "serialize_scene_graph",
    "object_phrase",
    "relation_phrase",
    "union_bbox",
]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box; ``(x, y)`` is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValidationError(f"bounding box must have positive width and height, got {self}")
        if self.x < 0 or self.y < 0:
            raise ValidationError(f"bounding box origin must be non-negative, got {self}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def area(self) -> float:
        return self.w * self.h

    def contains(self, other: BoundingBox) -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}


def union_bbox(b1: BoundingBox, b2: BoundingBox) -> BoundingBox:
    """Smallest axis-aligned box containing both boxes."""
    x = min(b1.x, b2.x)
    y = min(b1.y, b2.y)
    return BoundingBox(x, y, max(b1.x2, b2.x2) - x, max(b1.y2, b2.y2) - y)


def clip_box(x: float, y: float, w: float, h: float,
             width: float, height: float) -> BoundingBox | None:
    """Clip raw box coordinates to ``[0, width] x [0, height]``.

    Returns None when nothing of the box is left inside the image.
    """
    x1, y1 = max(x, 0), max(y, 0)
    x2, y2 = min(x + w, width), min(y + h, height)
    if x2 <= x1 or y2 <= y1:
        return None
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)


@dataclass(frozen=True)
class ObjectNode:
    id: str
    name: str
    attributes: tuple[str, ...]
    bbox: BoundingBox


@dataclass(frozen=True)
class Relation:
    id: str
    subject_id: str
    predicate: str
    object_id: str
    bbox: BoundingBox | None = None


@dataclass(frozen=True)
class RegionDescription:
    id: str
    phrase: str
    bbox: BoundingBox


@dataclass(frozen=True)
class SceneGraph:
    """An immutable scene graph for one image.

    Object ids are the identity of objects; duplicate names are fine.
    """

    image_width: int
    image_height: int
    objects: tuple[ObjectNode, ...] = ()
    relations: tuple[Relation, ...] = ()
    regions: tuple[RegionDescription, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        index: dict[str, ObjectNode] = {}
        for obj in self.objects:
            if obj.id in index:
                raise ValidationError(f"duplicate object id {obj.id!r}", obj.id)
            index[obj.id] = obj
        for rel in self.relations:
            for endpoint in (rel.subject_id, rel.object_id):
                if endpoint not in index:
                    raise UnknownEntityError(endpoint)
        object.__setattr__(self, "_index", index)

    def object(self, object_id: str) -> ObjectNode:
        try:
            return self._index[object_id]
        except KeyError:
            raise UnknownEntityError(object_id) from None

    def has_object(self, object_id: str) -> bool:
        return object_id in self._index

    def relation_bbox(self, rel: Relation) -> BoundingBox:
        """The relation's own box, or the union of its endpoints' boxes."""
        if rel.bbox is not None:
            return rel.bbox
        return union_bbox(self.object(rel.subject_id).bbox, self.object(rel.object_id).bbox)

    def outgoing(self, object_id: str) -> list[Relation]:
        return [r for r in self.relations if r.subject_id == object_id]


def object_phrase(obj: ObjectNode, max_attrs: int = 1) -> str:
    """Up to ``max_attrs`` attributes (file order) followed by the object name.

    >>> object_phrase(ObjectNode("o", "stool", ("bar", "tall"), BoundingBox(0, 0, 1, 1)))
    'bar stool'
    """
    if max_attrs < 0:
        raise ValueError("max_attrs must be >= 0")
    return normalize(" ".join([*obj.attributes[:max_attrs], obj.name]))


def relation_phrase(rel: Relation, graph: SceneGraph) -> str:
    """``"<subject name> <predicate> <object name>"``, e.g. ``"car parked on road"``."""
    subject = graph.object(rel.subject_id)
    target = graph.object(rel.object_id)
    return f"{subject.name} {rel.predicate} {target.name}"


# --- parsing -----------------------------------------------------------------


def _require(mapping: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(mapping, Mapping):
        raise SchemaError(f"{where} must be an object", field=where)
    if key not in mapping:
        raise SchemaError(f"missing required field {where}.{key}", field=f"{where}.{key}")
    return mapping[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} must be a number, got {value!r}", field=where)
    return value


def _text(value: Any, where: str, entity_id: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{where} must be a string", field=where)
    text = normalize(value)
    if not tokenize(text):
        raise ValidationError(f"{where} of {entity_id!r} has no tokens", entity_id)
    return text


def _entity_id(entry: Mapping[str, Any], where: str) -> str:
    value = _require(entry, "id", where)
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise SchemaError(f"{where}.id must be a string", field=f"{where}.id")
    return str(value)


class _Builder:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.warnings: list[str] = []

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    def box(self, raw: Any, where: str, entity_id: str) -> BoundingBox | None:
        coords = [_number(_require(raw, k, where), f"{where}.{k}") for k in ("x", "y", "w", "h")]
        if coords[2] <= 0 or coords[3] <= 0:
            raise ValidationError(f"zero-area bounding box on entity {entity_id!r}", entity_id)
        clipped = clip_box(*coords, self.width, self.height)
        if clipped is None:
            self.warn(f"dropped {entity_id!r}: bounding box lies outside the image")
        return clipped


def _list(doc: Mapping[str, Any], key: str) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise SchemaError(f"{key} must be a list", field=key)
    return value


def scene_graph_from_dict(doc: Mapping[str, Any]) -> SceneGraph:
    image = _require(doc, "image", "document")
    width = _number(_require(image, "width", "image"), "image.width")
    height = _number(_require(image, "height", "image"), "image.height")
    if width <= 0 or height <= 0:
        raise ValidationError("image dimensions must be positive")
    b = _Builder(width, height)

    objects: list[ObjectNode] = []
    seen: set[str] = set()
    for i, entry in enumerate(_list(doc, "objects")):
        where = f"objects[{i}]"
        oid = _entity_id(entry, where)
        if oid in seen:
            raise ValidationError(f"duplicate object id {oid!r}", oid)
        seen.add(oid)
        name = _text(_require(entry, "name", where), f"{where}.name", oid)
        attrs = entry.get("attributes", [])
        if not isinstance(attrs, list) or not all(isinstance(a, str) for a in attrs):
            raise SchemaError(f"{where}.attributes must be a list of strings",
                              field=f"{where}.attributes")
        attrs = tuple(a for a in map(normalize, attrs) if tokenize(a))
        bbox = b.box(_require(entry, "bbox", where), f"{where}.bbox", oid)
        if bbox is not None:
            objects.append(ObjectNode(oid, name, attrs, bbox))

    kept = {o.id for o in objects}
    relations: list[Relation] = []
    for i, entry in enumerate(_list(doc, "relations")):
        where = f"relations[{i}]"
        rid = _entity_id(entry, where)
        subject_id = str(_require(entry, "subject_id", where))
        object_id = str(_require(entry, "object_id", where))
        predicate = _text(_require(entry, "predicate", where), f"{where}.predicate", rid)
        bbox = None
        if entry.get("bbox") is not None:
            bbox = b.box(entry["bbox"], f"{where}.bbox", rid)
            if bbox is None:
                continue
        missing = [e for e in (subject_id, object_id) if e not in kept]
        if missing:
            b.warn(f"dropped relation {rid!r}: unresolved endpoint {missing[0]!r}")
            continue
        relations.append(Relation(rid, subject_id, predicate, object_id, bbox))

    regions: list[RegionDescription] = []
    for i, entry in enumerate(_list(doc, "regions")):
        where = f"regions[{i}]"
        did = _entity_id(entry, where)
        phrase = _text(_require(entry, "phrase", where), f"{where}.phrase", did)
        bbox = b.box(_require(entry, "bbox", where), f"{where}.bbox", did)
        if bbox is not None:
            regions.append(RegionDescription(did, phrase, bbox))

    return SceneGraph(width, height, tuple(objects), tuple(relations), tuple(regions),
                      warnings=tuple(b.warnings))


def parse_scene_graph(json_text: str) -> SceneGraph:
    """Parse and validate a scene graph JSON document."""
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        offset = len(json_text[:exc.pos].encode("utf-8"))
        raise ParseError(f"malformed scene graph JSON: {exc.msg}", offset) from None
    if not isinstance(doc, dict):
        raise SchemaError("scene graph document must be a JSON object")
    return scene_graph_from_dict(doc)


def load_scene_graph(path) -> SceneGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_scene_graph(fh.read())


def scene_graph_to_dict(graph: SceneGraph) -> dict[str, Any]:
    relations = []
    for r in graph.relations:
        entry = {"id": r.id, "subject_id": r.subject_id, "predicate": r.predicate,
                 "object_id": r.object_id}
        if r.bbox is not None:
            entry["bbox"] = r.bbox.to_dict()
        relations.append(entry)
    return {
        "image": {"width": graph.image_width, "height": graph.image_height},
        "objects": [{"id": o.id, "name": o.name, "attributes": list(o.attributes),
                     "bbox": o.bbox.to_dict()} for o in graph.objects],
        "relations": relations,
        "regions": [{"id": d.id, "phrase": d.phrase, "bbox": d.bbox.to_dict()}
                    for d in graph.regions],
    }


def serialize_scene_graph(graph: SceneGraph) -> str:
    return json.dumps(scene_graph_to_dict(graph), indent=2)


def iter_entities(graph: SceneGraph) -> Iterable[tuple[str, str, BoundingBox]]:
    """Yield ``(kind, id, bbox)`` for every object, relation and region."""
    for o in graph.objects:
        yield "object", o.id, o.bbox
    for r in graph.relations:
        yield "relation", r.id, graph.relation_bbox(r)
    for d in graph.regions:
        yield "region", d.id, d.bbox
