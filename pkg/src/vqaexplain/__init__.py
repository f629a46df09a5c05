"""Natural-language explanations for VQA answers from scene graphs and attention maps."""

__version__ = "0.1.0"

from .attention import AttentionMap, attention_mass, parse_attention, upsample
from .graph_explainer import (
    TraversalConfig,
    dfs_sorted_with_emit,
    generate_graph_explanation,
    induced_subgraph,
    select_relevant_objects,
)
from .lm import NgramModel, NgramScorer, Scorer, lm_score, train_ngram
from .region_explainer import Explanation, generate_region_explanations, slot_fill_region
from .scene_graph import (
    BoundingBox,
    ObjectNode,
    Relation,
    RegionDescription,
    SceneGraph,
    object_phrase,
    parse_scene_graph,
    relation_phrase,
    union_bbox,
)
from .scoring import Candidate, QaPair, ScoreBreakdown, ScoringConfig, composite_score, rank_candidates
