"""Story-like explanations from objects and relations.

Objects are ranked with the composite score and the best ``top_m_objects``
induce a subgraph. A depth-first walk over that subgraph, ordered by
language-model score, then emits one phrase per visited subject:

* Phase 1 walks relations from best to worst LM score. An unvisited subject
  is visited: it is marked, its phrase ``"<name> <pred> <obj> and <pred> <obj>"``
  is emitted, and the walk recurses into relation targets that have outgoing
  relations of their own.
* Phase 2 tops the list up with bare object phrases, best LM score first, for
  objects not named anywhere in Phase 1.

Relation targets are never marked, so one object can appear as a target in
several phrases ("car parked on road, tree next to road").
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce

from .attention import AttentionMap
from .lm import Scorer
from .region_explainer import Explanation
from .scene_graph import ObjectNode, Relation, SceneGraph, object_phrase, relation_phrase, union_bbox
from .scoring import Candidate, QaPair, ScoreBreakdown, ScoringConfig, composite_score, sort_scored

logger = logging.getLogger(__name__)

GRAPH_PREFIX = "The picture shows "
EMPTY_SURFACE = "The picture shows nothing recognizable."

__all__ = [
    "TraversalConfig",
    "PhraseList",
    "select_relevant_objects",
    "score_objects",
    "induced_subgraph",
    "dfs_sorted_with_emit",
    "emit_node_phrase",
    "generate_graph_explanation",
]


@dataclass(frozen=True)
class TraversalConfig:
    k_num_terms: int = 10
    top_m_objects: int | None = None

    def __post_init__(self):
        if self.k_num_terms < 1:
            raise ValueError("k_num_terms must be >= 1")
        if self.top_m_objects is None:
            object.__setattr__(self, "top_m_objects", 2 * self.k_num_terms)
        elif self.top_m_objects < self.k_num_terms:
            raise ValueError("top_m_objects must be >= k_num_terms")


@dataclass
class PhraseList:
    phrases: list[str] = field(default_factory=list)
    visited: set[str] = field(default_factory=set)
    # number of phrases produced by the relation walk; the rest are lone objects
    n_relation_phrases: int = 0


def score_objects(graph: SceneGraph, qa: QaPair, amap: AttentionMap | None, scorer: Scorer,
                  cfg: ScoringConfig = ScoringConfig()
                  ) -> list[tuple[Candidate, ScoreBreakdown]]:
    cands = [Candidate(object_phrase(o, cfg.max_attrs), o.bbox, "object", o.id)
             for o in graph.objects]
    return sort_scored((c, composite_score(c, qa, amap, scorer, cfg)) for c in cands)


def select_relevant_objects(graph: SceneGraph, qa: QaPair, amap: AttentionMap | None,
                            scorer: Scorer, cfg: ScoringConfig = ScoringConfig(),
                            tcfg: TraversalConfig = TraversalConfig()) -> list[ObjectNode]:
    """The ``top_m_objects`` objects with the highest composite score."""
    if not graph.objects:
        logger.warning("scene graph has no objects; nothing to explain")
        return []
    ranked = score_objects(graph, qa, amap, scorer, cfg)
    return [graph.object(c.source_id) for c, _ in ranked[:tcfg.top_m_objects]]


def induced_subgraph(graph: SceneGraph, object_ids) -> SceneGraph:
    """Objects in ``object_ids`` plus relations with both endpoints among them."""
    ids = set(object_ids)
    return SceneGraph(
        graph.image_width, graph.image_height,
        objects=tuple(o for o in graph.objects if o.id in ids),
        relations=tuple(r for r in graph.relations
                        if r.subject_id in ids and r.object_id in ids),
    )


class _Walk:
    """LM orderings shared by one traversal (and all its recursion levels)."""

    def __init__(self, graph: SceneGraph, scorer: Scorer, qa: QaPair, max_attrs: int):
        self.graph = graph
        context = qa.text
        rel_keys = {}
        for r in graph.relations:
            phrase = relation_phrase(r, graph)
            rel_keys[r.id] = (-scorer.score(phrase, context), phrase, r.id)
        self.relations = sorted(graph.relations, key=lambda r: rel_keys[r.id])
        self.outgoing: dict[str, list[Relation]] = {o.id: [] for o in graph.objects}
        for r in self.relations:
            self.outgoing[r.subject_id].append(r)
        self.lone_phrase = {o.id: object_phrase(o, max_attrs) for o in graph.objects}
        obj_keys = {o.id: (-scorer.score(self.lone_phrase[o.id], context),
                           self.lone_phrase[o.id], o.id) for o in graph.objects}
        self.objects = sorted(graph.objects, key=lambda o: obj_keys[o.id])

    def node_phrase(self, node: ObjectNode) -> str:
        rels = self.outgoing[node.id]
        if not rels:
            return self.lone_phrase[node.id]
        parts = [f"{r.predicate} {self.graph.object(r.object_id).name}" for r in rels]
        return f"{node.name} " + " and ".join(parts)


def emit_node_phrase(node: ObjectNode, subgraph: SceneGraph, scorer: Scorer, qa: QaPair,
                     max_attrs: int = 1) -> str:
    """Phrase for ``node``: its outgoing relations in LM order, or its bare object phrase."""
    return _Walk(subgraph, scorer, qa, max_attrs).node_phrase(node)


def dfs_sorted_with_emit(subgraph: SceneGraph, scorer: Scorer, qa: QaPair,
                         tcfg: TraversalConfig = TraversalConfig(),
                         max_attrs: int = 1) -> PhraseList:
    walk = _Walk(subgraph, scorer, qa, max_attrs)
    k = tcfg.k_num_terms
    out = PhraseList()
    seen_phrases: set[str] = set()
    mentioned: set[str] = set()

    def emit(phrase: str) -> None:
        if phrase not in seen_phrases and len(out.phrases) < k:
            seen_phrases.add(phrase)
            out.phrases.append(phrase)

    def enter(node_id: str, stack: list) -> None:
        out.visited.add(node_id)
        mentioned.add(node_id)
        emit(walk.node_phrase(subgraph.object(node_id)))
        mentioned.update(r.object_id for r in walk.outgoing[node_id])
        stack.append(iter(walk.outgoing[node_id]))

    def visit(root: str) -> None:
        # iterative pre-order DFS; each frame iterates one node's relations
        stack: list = []
        enter(root, stack)
        while stack and len(out.phrases) < k:
            rel = next(stack[-1], None)
            if rel is None:
                stack.pop()
            elif rel.object_id not in out.visited and walk.outgoing[rel.object_id]:
                enter(rel.object_id, stack)

    for rel in walk.relations:
        if len(out.phrases) >= k:
            break
        if rel.subject_id not in out.visited:
            visit(rel.subject_id)
    out.n_relation_phrases = len(out.phrases)

    for obj in walk.objects:
        if len(out.phrases) >= k:
            break
        if obj.id in out.visited or obj.id in mentioned:
            continue
        out.visited.add(obj.id)
        emit(walk.lone_phrase[obj.id])
    return out


def generate_graph_explanation(graph: SceneGraph, qa: QaPair, amap: AttentionMap | None,
                               scorer: Scorer, cfg: ScoringConfig = ScoringConfig(),
                               tcfg: TraversalConfig = TraversalConfig()) -> Explanation:
    """Select objects, walk their induced subgraph, and slot-fill one explanation.

    The explanation itself is scored as a candidate whose text is the phrase
    list and whose box is the union of the boxes of the objects it names.
    """
    selected = select_relevant_objects(graph, qa, amap, scorer, cfg, tcfg)
    sub = induced_subgraph(graph, [o.id for o in selected])
    walk = dfs_sorted_with_emit(sub, scorer, qa, tcfg, cfg.max_attrs)
    if not walk.phrases:
        logger.warning("graph traversal produced no phrases")
        return Explanation(rank=1, surface=EMPTY_SURFACE, score=None,
                           source={"kind": "graph", "object_ids": []},
                           warnings=("empty explanation",))
    involved = sorted(walk.visited | {
        r.object_id for r in sub.relations if r.subject_id in walk.visited
    })
    text = ", ".join(walk.phrases)
    bbox = reduce(union_bbox, (sub.object(i).bbox for i in involved))
    cand = Candidate(text, bbox, "graph", "graph")
    return Explanation(
        rank=1,
        surface=f"{GRAPH_PREFIX}{text}.",
        score=composite_score(cand, qa, amap, scorer, cfg),
        source={"kind": "graph", "object_ids": [o.id for o in selected],
                "bbox": bbox.to_dict()},
        phrases=tuple(walk.phrases),
    )
