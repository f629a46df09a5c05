"""Acceptance criteria, one test each; the terminal summary lists PASS/FAIL per criterion."""

import json
import math
import random
import time
from fractions import Fraction

import numpy as np

from vqaexplain.attention import AttentionMap, attention_mass, parse_attention
from vqaexplain.cli import main
from vqaexplain.evaluation import (
    compare_systems,
    parse_meta,
    parse_ratings,
    render_table,
    results_from_tallies,
)
from vqaexplain.graph_explainer import (
    TraversalConfig,
    dfs_sorted_with_emit,
    generate_graph_explanation,
)
from vqaexplain.lm import NgramScorer, train_ngram
from vqaexplain.region_explainer import generate_region_explanations
from vqaexplain.scene_graph import BoundingBox, object_phrase, parse_scene_graph
from vqaexplain.scoring import Candidate, QaPair, ScoringConfig, rank_candidates
from vqaexplain.text import tokenize

from conftest import FIXTURES, TableScorer, fixture_json, fixture_text, random_graph
from oracles import composite_total, oracle_prob, reference_mass
from test_graph_explainer import CROSSWALK_LM, CROSSWALK_TEXT, SIX_NODE_TRACE, six_node_graph

# hand-counted trigram corpus: "a" x9, "tennis" x6, "ball" x3, "court" x2, ...
TRIGRAM_CORPUS = [
    "a tennis player hitting a ball",
    "a woman hitting a tennis ball",
    "a tennis court",
    "a tennis racket",
    "the tennis court",
    "a woman holding a tennis racket",
    "a small ball",
    "the net",
]
SIX_REGIONS = [
    ("a woman hitting a tennis ball", BoundingBox(4, 2, 20, 24)),
    ("a tennis court", BoundingBox(0, 10, 40, 20)),
    ("a tennis racket", BoundingBox(22, 4, 8, 8)),
    ("the net", BoundingBox(0, 16, 40, 4)),
    ("a small ball", BoundingBox(30, 2, 3, 3)),
    ("the woman", BoundingBox(6, 2, 14, 24)),
]
# hand-assigned 4x3 grid over a 40x30 image; the upper middle is hot
SIX_GRID = [[0.1, 0.6, 0.9, 0.2],
            [0.1, 0.4, 0.5, 0.1],
            [0.0, 0.1, 0.1, 0.0]]


def test_composite_score_oracle_equivalence(criterion):
    criterion("composite score oracle equivalence (6 regions, trigram LM, < 1 s)")
    qa = QaPair("What is this game?", "Tennis")
    amap = AttentionMap(np.array(SIX_GRID), 40, 30)
    cands = [Candidate(p, b, "region", f"d{i}") for i, (p, b) in enumerate(SIX_REGIONS)]

    start = time.perf_counter()
    scorer = NgramScorer(train_ngram(TRIGRAM_CORPUS, 3))
    ranked = rank_candidates(cands, qa, amap, scorer)
    elapsed = time.perf_counter() - start

    context = tokenize(qa.text)

    def brute(cand):
        toks = tokenize(cand.text)
        logs = [math.log(oracle_prob(TRIGRAM_CORPUS, 3, 0.4, 1, t, context + toks[:i]))
                for i, t in enumerate(toks)]
        lm = math.exp(sum(logs) / len(toks))
        mass = reference_mass(SIX_GRID, 40, 30, cand.bbox)
        return composite_total(mass, lm, len(toks), cand.bbox.area())

    expected = sorted(cands, key=lambda c: (-brute(c), c.text))
    assert [c.source_id for c, _ in ranked] == [c.source_id for c in expected]
    for c, s in ranked:
        assert math.isclose(s.total, brute(c), rel_tol=1e-9)
    assert elapsed < 1.0


def test_tighter_box_and_longer_description(criterion):
    criterion("tighter box / longer description wins on 100 random pairs")
    rng = random.Random(2024)
    qa = QaPair("What is this game?", "Tennis")
    words = ["a", "tennis", "ball", "red", "racket", "court", "woman", "net"]
    violations = 0
    for i in range(100):
        text = " ".join(rng.choice(words) for _ in range(rng.randint(1, 6)))
        if i % 2 == 0:
            # only the area differs; baseline mode keeps the attention mass out of it
            side = rng.uniform(3.0, 100.0)
            small = BoundingBox(0, 0, side, side)
            big = BoundingBox(0, 0, side * rng.uniform(1.01, 3.0), side)
            scorer = TableScorer({text: rng.uniform(0.01, 1.0)})
            cfg = ScoringConfig(baseline_mode=True)
            pair = [Candidate(text, big, "region", "big"), Candidate(text, small, "region", "small")]
            ranked = rank_candidates(pair, qa, None, scorer, cfg)
            violations += ranked[0][0].source_id != "small"
        else:
            # only the length differs, under a random attention map
            amap = AttentionMap(np.array([[rng.random() + 0.01 for _ in range(3)]
                                          for _ in range(3)]), 60, 60)
            box = BoundingBox(rng.uniform(0, 20), rng.uniform(0, 20), 30, 30)
            longer = text + " " + rng.choice(words)
            scorer = TableScorer({}, rng.uniform(0.01, 1.0))
            pair = [Candidate(text, box, "region", "short"), Candidate(longer, box, "region", "long")]
            ranked = rank_candidates(pair, qa, amap, scorer)
            violations += ranked[0][0].source_id != "long"
    assert violations == 0


def test_attention_ablation_contrast(criterion):
    criterion("attention ablation contrast explained by attention_factor (1e-12)")
    graph = parse_scene_graph(fixture_text("contrast_graph.json"))
    amap = parse_attention(fixture_text("contrast_attention.json"))
    qa = QaPair(**fixture_json("contrast_qa.json"))
    scorer = NgramScorer(train_ngram([d.phrase for d in graph.regions], 3))
    cfg = ScoringConfig(top_k=len(graph.regions))
    full = generate_region_explanations(graph, qa, amap, scorer, cfg)
    base = generate_region_explanations(graph, qa, amap, scorer,
                                        ScoringConfig(baseline_mode=True, top_k=cfg.top_k))
    assert full[0].surface != base[0].surface

    base_by_id = {e.source["id"]: e.score for e in base}
    recomputed = []
    for e in full:
        b = base_by_id[e.source["id"]]
        assert (b.lm_factor, b.length_factor, b.area_factor) == \
            (e.score.lm_factor, e.score.length_factor, e.score.area_factor)
        assert math.isclose(b.total * e.score.attention_factor, e.score.total,
                            rel_tol=1e-12, abs_tol=1e-12)
        recomputed.append((-b.total * e.score.attention_factor, -e.score.attention_factor,
                           e.source["text"], e.source["id"]))
    assert [r[3] for r in sorted(recomputed)] == [e.source["id"] for e in full]


def test_graph_mode_crosswalk(criterion):
    criterion("graph-mode crosswalk explanation, exact string")
    graph = parse_scene_graph(fixture_text("crosswalk_graph.json"))
    amap = parse_attention(fixture_text("crosswalk_attention.json"))
    qa = QaPair(**fixture_json("crosswalk_qa.json"))
    exp = generate_graph_explanation(graph, qa, amap, TableScorer(CROSSWALK_LM))
    assert exp.surface == CROSSWALK_TEXT


def test_traversal_hand_trace_and_random_graphs(criterion):
    criterion("traversal hand trace + 1000 random graphs (k cap, phase order)")
    graph, scorer = six_node_graph()
    qa = QaPair("What is the dog doing?", "Playing")
    assert dfs_sorted_with_emit(graph, scorer, qa).phrases == SIX_NODE_TRACE

    rng = random.Random(7)
    for _ in range(1000):
        graph, scorer = random_graph(rng)
        k = rng.randint(1, 12)
        out = dfs_sorted_with_emit(graph, scorer, qa, TraversalConfig(k))
        assert len(out.phrases) <= k
        subjects = {r.subject_id for r in graph.relations}
        lone = {object_phrase(o) for o in graph.objects if o.id not in subjects}
        # everything after the relation phase is a lone object phrase
        assert all(p in lone for p in out.phrases[out.n_relation_phrases:])
        assert (out.n_relation_phrases > 0) == bool(graph.relations)


def random_box(rng, w, h):
    x, y = rng.uniform(0, w - 1), rng.uniform(0, h - 1)
    return BoundingBox(x, y, rng.uniform(0.5, w - x), rng.uniform(0.5, h - y))


def test_attention_geometry(criterion):
    criterion("attention geometry: additivity, constant grid, scale, containment")
    rng = random.Random(99)
    np_rng = np.random.default_rng(99)
    for _ in range(50):
        w, h = rng.randint(8, 120), rng.randint(8, 120)
        grid = np_rng.random((rng.randint(1, 7), rng.randint(1, 7)))
        m = AttentionMap(grid, w, h)
        sx, sy = rng.uniform(0.5, w - 0.5), rng.uniform(0.5, h - 0.5)
        parts = [BoundingBox(0, 0, sx, sy), BoundingBox(sx, 0, w - sx, sy),
                 BoundingBox(0, sy, sx, h - sy), BoundingBox(sx, sy, w - sx, h - sy)]
        assert abs(sum(attention_mass(m, b) for b in parts) - 1.0) <= 1e-6

        const = AttentionMap(np.full(grid.shape, 0.3), w, h)
        b = BoundingBox(rng.randint(0, w - 1), rng.randint(0, h - 1), 1, 1)
        b = BoundingBox(b.x, b.y, rng.randint(1, w - int(b.x)), rng.randint(1, h - int(b.y)))
        assert abs(attention_mass(const, b) - b.area() / (w * h)) <= 1e-6

        box = random_box(rng, w, h)
        assert attention_mass(AttentionMap(grid * 4.0, w, h), box) == attention_mass(m, box)

    checked = 0
    while checked < 1000:
        w, h = rng.randint(4, 80), rng.randint(4, 80)
        m = AttentionMap(np_rng.random((3, 3)), w, h)
        outer = random_box(rng, w, h)
        ix, iy = rng.uniform(outer.x, outer.x2), rng.uniform(outer.y, outer.y2)
        inner = BoundingBox(ix, iy, rng.uniform(0, outer.x2 - ix) or 1e-3,
                            rng.uniform(0, outer.y2 - iy) or 1e-3)
        if not outer.contains(inner):
            continue
        assert attention_mass(m, inner) <= attention_mass(m, outer)
        checked += 1


def test_lm_normalization(criterion):
    criterion("LM normalization over 100 contexts (1e-9) + hand counts")
    rng = random.Random(5)
    model = train_ngram(TRIGRAM_CORPUS, 3)
    words = sorted({t for line in TRIGRAM_CORPUS for t in tokenize(line)}) + ["zebra", "sky"]
    for _ in range(100):
        history = [rng.choice(words) for _ in range(rng.randint(0, 4))]
        dist = model.distribution(history)
        assert abs(math.fsum(dist.values()) - 1.0) <= 1e-9
    assert train_ngram(["a b", "a b"], 2).relative_frequency("b", ["a"]) == 1.0
    assert train_ngram(["a b", "a c"], 2, unk_threshold=0).relative_frequency("b", ["a"]) == 0.5
    assert math.isclose(train_ngram(["a b", "a b"], 2).prob("b", ["a"]),
                        float(Fraction(75, 94)), rel_tol=1e-15)
    assert math.isclose(train_ngram(["a b", "a c"], 2, unk_threshold=0).prob("b", ["a"]),
                        float(Fraction(25, 62)), rel_tol=1e-15)


def test_evaluation_metrics(criterion):
    criterion("evaluation: hand tally, antisymmetry, table rendering")
    ratings = parse_ratings(fixture_text("ratings.csv"))
    meta = parse_meta(fixture_text("meta.csv"))
    ab = compare_systems(ratings, meta, "full", "baseline")
    assert [(r.wins, r.losses, r.ties) for r in ab] == [(2, 1, 0), (1, 2, 0), (1, 1, 1)]
    ba = compare_systems(ratings, meta, "baseline", "full")
    assert all((x.win_pct, x.loss_pct, x.tie_pct) == (y.loss_pct, y.win_pct, y.tie_pct)
               for x, y in zip(ab, ba))
    table = render_table(results_from_tallies({
        "explanation_score": (52, 28, 20), "position": (55, 30, 15), "number": (54, 24, 22)}))
    rows = [line.split()[-3:] for line in table.splitlines()[1:]]
    assert rows == [["52%", "28%", "20%"], ["55%", "30%", "15%"], ["54%", "24%", "22%"]]


def test_determinism(criterion, tmp_path):
    criterion("determinism: byte-identical JSON on every fixture")
    out = tmp_path / "out.json"
    for stem in ("tennis", "crosswalk", "office", "contrast"):
        for extra in ([], ["--baseline"], ["--mode", "graph"], ["--mode", "graph", "--baseline"]):
            args = ["explain", "--scene-graph", str(FIXTURES / f"{stem}_graph.json"),
                    "--attention", str(FIXTURES / f"{stem}_attention.json"),
                    "--qa", str(FIXTURES / f"{stem}_qa.json"), "-o", str(out), *extra]
            assert main(args) == 0
            first = out.read_bytes()
            assert main(args) == 0
            assert out.read_bytes() == first
            json.loads(first)
