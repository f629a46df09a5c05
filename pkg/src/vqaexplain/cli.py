"""Explain VQA answers from scene graphs and attention maps, and compare rated systems.

    vqaexplain explain --mode region --scene-graph g.json --attention a.json --qa qa.json
    vqaexplain train-lm --corpus corpus.txt --output model.json
    vqaexplain evaluate --ratings ratings.csv --meta meta.csv --system-a mm --system-b nl
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Any, Sequence

from . import __version__
from .attention import load_attention
from .errors import ValidationError, VqaExplainError
from .evaluation import compare_systems, load_meta, load_ratings, render_table
from .graph_explainer import TraversalConfig, generate_graph_explanation
from .lm import CachedScorer, NgramScorer, load_model, save_model, train_ngram
from .region_explainer import generate_region_explanations
from .scene_graph import SceneGraph, load_scene_graph, object_phrase, relation_phrase
from .scoring import QaPair, ScoringConfig

logger = logging.getLogger("vqaexplain")


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str = "region"
    baseline: bool = False
    scene_graph: str | None = None
    attention: str | None = None
    qa: str | None = None
    lm_model: str | None = None
    lm_corpus: str | None = None
    output: str | None = None
    top_k: int = 5
    k_num_terms: int = 10
    top_m_objects: int | None = None
    area_floor: float = math.e ** 2
    max_attrs: int = 1
    lm_order: int = 3
    backoff_factor: float = 0.4
    unk_threshold: int = 1
    score_cache: str | None = None

    def validate(self) -> None:
        if self.mode not in ("region", "graph"):
            raise CliError(f"mode must be 'region' or 'graph', got {self.mode!r}")
        for name in ("scene_graph", "qa"):
            if not getattr(self, name):
                raise CliError(f"--{name.replace('_', '-')} is required")
        if not self.baseline and not self.attention:
            raise CliError("--attention is required unless --baseline is given")
        if self.lm_model and self.lm_corpus:
            raise CliError("give at most one of --lm-model and --lm-corpus")
        for name in ("scene_graph", "attention", "qa", "lm_model", "lm_corpus"):
            path = getattr(self, name)
            if path and not os.path.isfile(path):
                raise CliError(f"{name.replace('_', '-')} file not found: {path}")
        if self.top_k < 1 or self.k_num_terms < 1 or self.lm_order < 1:
            raise CliError("top-k, num-terms and lm-order must be >= 1")
        if not 0 < self.backoff_factor < 1:
            raise CliError("backoff-factor must lie in (0, 1)")
        if self.area_floor < math.e:
            raise CliError("area-floor must be >= e")


def load_config_file(path: str) -> dict[str, Any]:
    """Read a JSON config; relative paths resolve against the config's directory."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    known = {f.name for f in fields(RunConfig)}
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise CliError(f"{path}: unknown config keys {unknown}")
    base = os.path.dirname(os.path.abspath(path))
    for key in ("scene_graph", "attention", "qa", "lm_model", "lm_corpus", "output",
                "score_cache"):
        if doc.get(key) and not os.path.isabs(doc[key]):
            doc[key] = os.path.normpath(os.path.join(base, doc[key]))
    return doc


def self_corpus(graph: SceneGraph) -> list[str]:
    """Region and relation phrases; object phrases only when those are absent."""
    lines = [d.phrase for d in graph.regions]
    lines += [relation_phrase(r, graph) for r in graph.relations]
    if not lines:
        lines = [object_phrase(o, len(o.attributes)) for o in graph.objects]
    return lines


def _load(what: str, path: str, loader):
    try:
        return loader(path)
    except VqaExplainError as exc:
        raise CliError(f"{path}: {exc}") from None
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"{path}: cannot read {what}: {exc}") from None


def _load_qa(path: str) -> QaPair:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "question" not in doc or "answer" not in doc:
        raise ValueError("QA file needs 'question' and 'answer'")
    return QaPair(str(doc["question"]), str(doc["answer"]))


def build_scorer(cfg: RunConfig, graph: SceneGraph):
    if cfg.lm_model:
        model = _load("language model", cfg.lm_model, load_model)
    else:
        if cfg.lm_corpus:
            with open(cfg.lm_corpus, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        else:
            lines = self_corpus(graph)
        try:
            model = train_ngram(lines, cfg.lm_order, cfg.backoff_factor, cfg.unk_threshold)
        except VqaExplainError as exc:
            raise CliError(f"cannot train language model: {exc}") from None
    scorer = NgramScorer(model)
    if cfg.score_cache:
        return CachedScorer(scorer, cfg.score_cache)
    return scorer


def cmd_explain(cfg: RunConfig) -> dict[str, Any]:
    """Run one explanation job and return the output document."""
    cfg.validate()
    graph = _load("scene graph", cfg.scene_graph, load_scene_graph)
    qa = _load("QA pair", cfg.qa, _load_qa)
    amap = None
    warnings = list(graph.warnings)
    if cfg.attention:
        try:
            amap = _load("attention map", cfg.attention, load_attention)
        except CliError as exc:
            if "degenerate" in str(exc) and not cfg.baseline:
                raise CliError(f"{exc}; rerun with --baseline to rank without attention") from None
            if not cfg.baseline:
                raise
            warnings.append(f"ignored attention map: {exc}")
        if amap is not None and (amap.image_width, amap.image_height) != (
                graph.image_width, graph.image_height):
            raise CliError(
                f"{cfg.attention}: attention covers a {amap.image_width}x{amap.image_height} "
                f"image but the scene graph is {graph.image_width}x{graph.image_height}")

    scorer = build_scorer(cfg, graph)
    scoring = ScoringConfig(baseline_mode=cfg.baseline, area_floor=cfg.area_floor,
                            max_attrs=cfg.max_attrs, top_k=cfg.top_k)
    if cfg.mode == "region":
        explanations = generate_region_explanations(graph, qa, amap, scorer, scoring)
        if not graph.regions:
            warnings.append("scene graph has no region descriptions; try --mode graph")
    else:
        tcfg = TraversalConfig(cfg.k_num_terms, cfg.top_m_objects)
        explanations = [generate_graph_explanation(graph, qa, amap, scorer, scoring, tcfg)]
        warnings.extend(explanations[0].warnings)
    if isinstance(scorer, CachedScorer):
        scorer.save()

    return {
        "tool": {"name": "vqaexplain", "version": __version__},
        "config": asdict(cfg),
        "qa": qa.to_dict(),
        "mode": cfg.mode,
        "baseline": cfg.baseline,
        "explanations": [e.to_dict() for e in explanations],
        "warnings": warnings,
    }


def cmd_train_lm(corpus_path: str, order: int, backoff_factor: float, model_out: str,
                 unk_threshold: int = 1):
    with open(corpus_path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    try:
        model = train_ngram(lines, order, backoff_factor, unk_threshold)
    except VqaExplainError as exc:
        raise CliError(f"{corpus_path}: {exc}") from None
    save_model(model, model_out)
    return model


def cmd_evaluate(ratings_path: str, meta_path: str, sys_a: str, sys_b: str):
    ratings = _load("ratings", ratings_path, load_ratings)
    meta = _load("meta", meta_path, load_meta)
    try:
        return compare_systems(ratings, meta, sys_a, sys_b)
    except VqaExplainError as exc:
        raise CliError(str(exc)) from None


def _dump(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqaexplain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("explain", help="generate explanations for one image and QA pair")
    ex.add_argument("--config", help="JSON file whose values override command-line flags")
    ex.add_argument("--mode", choices=("region", "graph"))
    ex.add_argument("--baseline", action="store_true", default=None,
                    help="rank without the attention factor")
    ex.add_argument("--scene-graph")
    ex.add_argument("--attention")
    ex.add_argument("--qa")
    lm = ex.add_mutually_exclusive_group()
    lm.add_argument("--lm-model", help="model file written by train-lm")
    lm.add_argument("--lm-corpus", help="plain-text corpus, one sentence per line")
    ex.add_argument("--top-k", type=int)
    ex.add_argument("--num-terms", dest="k_num_terms", type=int)
    ex.add_argument("--top-m-objects", type=int)
    ex.add_argument("--area-floor", type=float)
    ex.add_argument("--max-attrs", type=int)
    ex.add_argument("--lm-order", type=int)
    ex.add_argument("--backoff-factor", type=float)
    ex.add_argument("--unk-threshold", type=int)
    ex.add_argument("--score-cache", help="JSON file memoizing LM scores")
    ex.add_argument("--output", "-o", help="output JSON path (default stdout)")
    ex.add_argument("--csv", help="also write the score breakdowns as CSV")
    ex.add_argument("--figure", help="also plot the score breakdowns to this image file")

    tr = sub.add_parser("train-lm", help="train and save an n-gram model")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--order", type=int, default=3)
    tr.add_argument("--backoff-factor", type=float, default=0.4)
    tr.add_argument("--unk-threshold", type=int, default=1)
    tr.add_argument("--output", "-o", required=True)

    ev = sub.add_parser("evaluate", help="win/loss/tie comparison of two rated systems")
    ev.add_argument("--ratings", required=True)
    ev.add_argument("--meta", required=True)
    ev.add_argument("--system-a", required=True)
    ev.add_argument("--system-b", required=True)
    ev.add_argument("--output", "-o", help="write the comparison as JSON")
    ev.add_argument("--csv", help="write the comparison as CSV")
    ev.add_argument("--figure", help="plot the comparison to this image file")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = {f.name: getattr(args, f.name) for f in fields(RunConfig)
              if getattr(args, f.name, None) is not None}
    if args.config:
        try:
            values.update(load_config_file(args.config))
        except (OSError, ValueError) as exc:
            raise CliError(f"{args.config}: {exc}") from None
    return RunConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "explain":
            doc = cmd_explain(_run_config(args))
            _write(doc["config"]["output"], _dump(doc))
            if args.csv or args.figure:
                from .region_explainer import Explanation
                from .report import plot_breakdown, write_breakdown_csv
                from .scoring import ScoreBreakdown
                exps = [Explanation(e["rank"], e["surface"],
                                    ScoreBreakdown(**e["score"]) if e["score"] else None,
                                    e["source"]) for e in doc["explanations"]]
                if args.csv:
                    write_breakdown_csv(exps, args.csv)
                if args.figure:
                    plot_breakdown(exps, args.figure, title=doc["qa"]["question"])
        elif args.command == "train-lm":
            cmd_train_lm(args.corpus, args.order, args.backoff_factor, args.output,
                         args.unk_threshold)
        else:
            results = cmd_evaluate(args.ratings, args.meta, args.system_a, args.system_b)
            sys.stdout.write(render_table(results))
            if args.output:
                _write(args.output, _dump({
                    "system_a": args.system_a, "system_b": args.system_b,
                    "results": [r.to_dict() for r in results]}))
            if args.csv or args.figure:
                from .report import plot_comparison, write_comparison_csv
                if args.csv:
                    write_comparison_csv(results, args.csv)
                if args.figure:
                    plot_comparison(results, args.figure,
                                    title=f"{args.system_a} vs {args.system_b}")
    except (CliError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
