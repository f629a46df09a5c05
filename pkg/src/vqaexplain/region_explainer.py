"""Ranked slot-filled explanations built from region descriptions."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from .attention import AttentionMap
from .lm import Scorer
from .scene_graph import SceneGraph
from .scoring import Candidate, QaPair, ScoreBreakdown, ScoringConfig, rank_candidates
from .text import tokenize

logger = logging.getLogger(__name__)

REGION_PREFIX = "The picture shows: "

__all__ = ["Explanation", "REGION_PREFIX", "slot_fill_region", "region_candidates",
           "generate_region_explanations"]


@dataclass(frozen=True)
class Explanation:
    rank: int
    surface: str
    score: ScoreBreakdown | None
    source: dict[str, Any]
    phrases: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict[str, Any]:
        out = {"rank": self.rank, "surface": self.surface,
               "score": None if self.score is None else self.score.to_dict(), "source": self.source}
        if self.phrases:
            out["phrases"] = list(self.phrases)
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def slot_fill_region(phrase: str) -> str:
    if not tokenize(phrase):
        raise ValueError("cannot slot-fill an empty phrase")
    return REGION_PREFIX + phrase


def region_candidates(graph: SceneGraph) -> list[Candidate]:
    return [Candidate(d.phrase, d.bbox, "region", d.id) for d in graph.regions]


def generate_region_explanations(graph: SceneGraph, qa: QaPair, amap: AttentionMap | None,
                                 scorer: Scorer, cfg: ScoringConfig = ScoringConfig()
                                 ) -> list[Explanation]:
    """Score every region, keep the best instance of each phrase, slot-fill the top k."""
    if not graph.regions:
        logger.warning("scene graph has no region descriptions; use graph mode instead")
        return []
    ranked = rank_candidates(region_candidates(graph), qa, amap, scorer, cfg)
    seen: set[str] = set()
    out: list[Explanation] = []
    for cand, score in ranked:
        if cand.text in seen:
            continue
        seen.add(cand.text)
        out.append(Explanation(
            rank=len(out) + 1,
            surface=slot_fill_region(cand.text),
            score=score,
            source={"kind": "region", "id": cand.source_id, "text": cand.text,
                    "bbox": cand.bbox.to_dict()},
        ))
        if len(out) == cfg.top_k:
            break
    return out
