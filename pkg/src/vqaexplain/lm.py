"""N-gram language model used to score candidate text in the context of a QA pair.

Scores follow Stupid Backoff (Brants et al., 2007): the relative frequency of
the longest observed n-gram, multiplied by ``backoff_factor`` for every level
backed off. Below the unigram level the model backs off once more to a uniform
distribution, so every token, including ``<unk>``, gets a positive score.
Stupid Backoff scores do not sum to one; :meth:`NgramModel.prob` divides by
the per-context total over the vocabulary, which makes them a proper
conditional distribution.

Anything that implements :class:`Scorer` can replace the n-gram model.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence, runtime_checkable

from .errors import TrainingError
from .text import tokenize

__all__ = [
    "BOS",
    "UNK",
    "NgramModel",
    "Scorer",
    "NgramScorer",
    "CachedScorer",
    "tokenize",
    "train_ngram",
    "sequence_logprob",
    "lm_score",
    "load_model",
    "save_model",
]

BOS = "<s>"
UNK = "<unk>"
MODEL_FORMAT = "vqaexplain-ngram/1"


@dataclass(eq=False)
class NgramModel:
    """Counts of every k-gram, ``k <= order``, keyed by their ``k - 1`` token history.

    ``counts[k][history][token]`` is the number of times ``token`` followed
    ``history``. ``vocab`` holds the known tokens; everything else is ``<unk>``.
    """

    order: int
    backoff_factor: float
    vocab: frozenset[str]
    counts: dict[int, dict[tuple[str, ...], dict[str, int]]]
    unk_threshold: int = 1
    _totals: dict = field(default_factory=dict, init=False, repr=False)
    _norm: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not 0 < self.backoff_factor < 1:
            raise ValueError("backoff_factor must lie in (0, 1)")
        self._totals = {
            k: {h: sum(c.values()) for h, c in table.items()}
            for k, table in self.counts.items()
        }

    @property
    def symbols(self) -> list[str]:
        """Every symbol the model predicts: the vocabulary plus ``<unk>``, sorted."""
        return sorted(self.vocab | {UNK})

    def map_token(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def relative_frequency(self, token: str, history: Sequence[str] = ()) -> float:
        """Plain count ratio ``c(history + token) / c(history)``; 0 when unobserved."""
        history = tuple(self.map_token(t) if t != BOS else t for t in history)
        k = len(history) + 1
        total = self._totals.get(k, {}).get(history, 0)
        if not total:
            return 0.0
        return self.counts[k][history].get(self.map_token(token), 0) / total

    def backoff_score(self, token: str, history: Sequence[str] = ()) -> float:
        """Unnormalized Stupid Backoff score of ``token`` after ``history``."""
        history = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        factor = 1.0
        for start in range(len(history) + 1):
            ctx = history[start:]
            k = len(ctx) + 1
            followers = self.counts.get(k, {}).get(ctx)
            if followers:
                c = followers.get(token, 0)
                if c:
                    return factor * c / self._totals[k][ctx]
            factor *= self.backoff_factor
        return factor / (len(self.vocab) + 1)

    def _normalizer(self, history: tuple[str, ...]) -> float:
        z = self._norm.get(history)
        if z is None:
            z = math.fsum(self.backoff_score(s, history) for s in self.symbols)
            self._norm[history] = z
        return z

    def _history(self, history: Sequence[str]) -> tuple[str, ...]:
        if self.order == 1:
            return ()
        history = [t if t == BOS else self.map_token(t) for t in history]
        padded = [BOS] * (self.order - 1) + history
        return tuple(padded[-(self.order - 1):])

    def prob(self, token: str, history: Sequence[str] = ()) -> float:
        """Normalized ``P(token | history)``; ``history`` is padded with ``<s>``."""
        h = self._history(history)
        return self.backoff_score(self.map_token(token), h) / self._normalizer(h)

    def distribution(self, history: Sequence[str] = ()) -> dict[str, float]:
        h = self._history(history)
        z = self._normalizer(h)
        return {s: self.backoff_score(s, h) / z for s in self.symbols}

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "order": self.order,
            "backoff_factor": self.backoff_factor,
            "unk_threshold": self.unk_threshold,
            "vocab": sorted(self.vocab),
            "counts": {
                str(k): {" ".join(h): dict(sorted(c.items())) for h, c in sorted(table.items())}
                for k, table in sorted(self.counts.items())
            },
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> NgramModel:
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a {MODEL_FORMAT} model file")
        counts = {
            int(k): {tuple(h.split(" ")) if h else (): dict(c) for h, c in table.items()}
            for k, table in doc["counts"].items()
        }
        return cls(order=doc["order"], backoff_factor=doc["backoff_factor"],
                   vocab=frozenset(doc["vocab"]), counts=counts,
                   unk_threshold=doc.get("unk_threshold", 1))


def train_ngram(corpus_lines: Iterable[str], order: int = 3, backoff_factor: float = 0.4,
                unk_threshold: int = 1) -> NgramModel:
    """Count k-grams up to ``order`` over ``<s>``-padded sentences.

    Tokens seen ``unk_threshold`` times or fewer are replaced by ``<unk>``
    (pass 0 to keep every token).
    """
    if order < 1:
        raise TrainingError("order must be >= 1")
    sentences = [tokenize(line) for line in corpus_lines]
    sentences = [s for s in sentences if s]
    if not sentences:
        raise TrainingError("corpus has no tokens")
    freq = Counter(t for s in sentences for t in s)
    vocab = frozenset(t for t, c in freq.items() if c > unk_threshold)

    counts: dict[int, dict[tuple[str, ...], Counter]] = {
        k: defaultdict(Counter) for k in range(1, order + 1)
    }
    for sent in sentences:
        padded = [BOS] * (order - 1) + [t if t in vocab else UNK for t in sent]
        for i in range(order - 1, len(padded)):
            for k in range(1, order + 1):
                history = tuple(padded[i - k + 1:i])
                counts[k][history][padded[i]] += 1
    frozen = {k: {h: dict(c) for h, c in table.items()} for k, table in counts.items()}
    return NgramModel(order, backoff_factor, vocab, frozen, unk_threshold)


def sequence_logprob(model: NgramModel, seq: Sequence[str], context: Sequence[str] = ()) -> float:
    """Sum of ``log P(token | previous order-1 tokens)`` over ``seq``.

    ``context`` is prepended, so the first tokens of ``seq`` condition on it.
    """
    if not seq:
        raise ValueError("sequence must be non-empty")
    full = list(context) + list(seq)
    offset = len(context)
    return math.fsum(
        math.log(model.prob(full[i], full[:i]))
        for i in range(offset, len(full))
    )


def lm_score(model: NgramModel, candidate: str, qa: str) -> float:
    """Per-token geometric mean probability of ``candidate`` given ``qa`` text."""
    tokens = tokenize(candidate)
    if not tokens:
        raise ValueError("candidate text has no tokens")
    return math.exp(sequence_logprob(model, tokens, tokenize(qa)) / len(tokens))


@runtime_checkable
class Scorer(Protocol):
    """Deterministic score in (0, 1] of ``candidate`` text given ``context`` text."""

    def score(self, candidate: str, context: str) -> float: ...


class NgramScorer:
    def __init__(self, model: NgramModel):
        self.model = model

    def score(self, candidate: str, context: str) -> float:
        return lm_score(self.model, candidate, context)


def cache_key(candidate: str, context: str) -> str:
    payload = json.dumps([context, candidate], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CachedScorer:
    """Memoize another scorer, optionally persisting scores to a JSON file.

    Useful with slow or remote scorers: a saved cache replays identical
    scores on later runs.
    """

    def __init__(self, inner: Scorer, path: str | os.PathLike | None = None):
        self.inner = inner
        self.path = path
        self.cache: dict[str, float] = {}
        if path is not None and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                self.cache = {k: float(v) for k, v in json.load(fh).items()}

    def score(self, candidate: str, context: str) -> float:
        key = cache_key(candidate, context)
        if key not in self.cache:
            self.cache[key] = self.inner.score(candidate, context)
        return self.cache[key]

    def save(self, path: str | os.PathLike | None = None) -> None:
        path = path or self.path
        if path is None:
            raise ValueError("no cache path given")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.cache, fh, indent=0, sort_keys=True)
            fh.write("\n")


def save_model(model: NgramModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> NgramModel:
    with open(path, encoding="utf-8") as fh:
        return NgramModel.from_dict(json.load(fh))
