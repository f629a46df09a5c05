"""Composite relevance score of a scene-graph entity for a question/answer pair.

    score(D, QA) = attention(R(D) | QA) * lm(D | QA) * sqrt(len(D)) / ln(area(R(D)))

``len`` counts tokens and the area is clamped from below by ``area_floor``
(default e**2) so the log factor never exceeds 1/2. In baseline mode the
attention factor is fixed at 1, which leaves the other columns of the
breakdown directly comparable between modes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .attention import AttentionMap, attention_mass
from .lm import Scorer
from .scene_graph import BoundingBox
from .text import tokenize

__all__ = [
    "QaPair",
    "Candidate",
    "ScoreBreakdown",
    "ScoringConfig",
    "composite_score",
    "rank_candidates",
]


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str

    def __post_init__(self):
        if not self.question.strip() or not self.answer.strip():
            raise ValueError("question and answer must be non-empty")

    @property
    def text(self) -> str:
        """Context handed to the language model: question then answer."""
        return f"{self.question} {self.answer}"

    def to_dict(self) -> dict[str, str]:
        return {"question": self.question, "answer": self.answer}


@dataclass(frozen=True)
class Candidate:
    """Natural-language form of one entity together with its box."""

    text: str
    bbox: BoundingBox
    source: str
    source_id: str


@dataclass(frozen=True)
class ScoreBreakdown:
    attention_factor: float
    lm_factor: float
    length_factor: float
    area_factor: float
    total: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class ScoringConfig:
    baseline_mode: bool = False
    area_floor: float = math.e ** 2
    max_attrs: int = 1
    top_k: int = 5

    def __post_init__(self):
        if not self.area_floor >= math.e:
            raise ValueError(f"area_floor must be >= e, got {self.area_floor}")
        if self.max_attrs < 0:
            raise ValueError("max_attrs must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


def composite_score(cand: Candidate, qa: QaPair, amap: AttentionMap | None,
                    scorer: Scorer, cfg: ScoringConfig = ScoringConfig()) -> ScoreBreakdown:
    n_tokens = len(tokenize(cand.text))
    if n_tokens == 0:
        raise ValueError(f"candidate {cand.source_id!r} has no tokens")
    area = cand.bbox.area()
    if not area > 0:
        raise ValueError(f"candidate {cand.source_id!r} has a zero-area box")
    if cfg.baseline_mode:
        attention = 1.0
    else:
        if amap is None:
            raise ValueError("an attention map is required outside baseline mode")
        attention = attention_mass(amap, cand.bbox)
    lm = scorer.score(cand.text, qa.text)
    length = math.sqrt(n_tokens)
    area_factor = 1.0 / math.log(max(area, cfg.area_floor))
    return ScoreBreakdown(attention, lm, length, area_factor,
                          attention * lm * length * area_factor)


def _rank_key(item: tuple[Candidate, ScoreBreakdown]):
    cand, s = item
    return (-s.total, -s.attention_factor, cand.text, cand.source_id)


def sort_scored(scored: Iterable[tuple[Candidate, ScoreBreakdown]]):
    """Order by total, then attention, then text, then entity id."""
    return sorted(scored, key=_rank_key)


def rank_candidates(cands: Sequence[Candidate], qa: QaPair, amap: AttentionMap | None,
                    scorer: Scorer, cfg: ScoringConfig = ScoringConfig()
                    ) -> list[tuple[Candidate, ScoreBreakdown]]:
    return sort_scored((c, composite_score(c, qa, amap, scorer, cfg)) for c in cands)
