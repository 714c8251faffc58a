"""Feature-based extractive policy.

Each sentence gets a fixed 8-dimensional feature vector; a sigmoid over
a learned linear function of the features yields a per-sentence
affinity in (0, 1). Summaries are either sampled without replacement in
proportion to affinity (training) or taken greedily from the top
scores (evaluation). Position is deliberately exposed as a feature
(normalized index, lead-3 indicator) so positional shortcuts are
learnable and their effect measurable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document
from .rouge import tokenize

FEATURE_DIM = 8
FEATURE_VERSION = 1
SUMMARY_SIZE = 3

# fixed built-in stopword list (50 entries)
STOPWORDS = frozenset(
    """a about above after again all an and any are as at be because been but
    by can did do for from had has have he her his i in is it its no not of
    on or she so that the their there they this to was were with""".split()
)

_RAW_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def featurize(doc: Document) -> np.ndarray:
    """Deterministic (n, 8) feature matrix for a document.

    Columns: normalized position i/n; lead-3 indicator; token count / 40
    clamped to [0, 1]; fraction of the sentence's distinct words that
    appear elsewhere in the document; cosine similarity between the
    sentence's term-frequency vector and the document centroid; fraction
    of raw tokens that are capitalized; stopword fraction; constant 1.
    """
    n = len(doc.sentences)
    tokens = [tokenize(s) for s in doc.sentences]
    token_sets = [set(t) for t in tokens]

    vocab = {}
    for toks in tokens:
        for tok in toks:
            if tok not in vocab:
                vocab[tok] = len(vocab)
    tf = np.zeros((n, len(vocab)))
    for i, toks in enumerate(tokens):
        for tok in toks:
            tf[i, vocab[tok]] += 1.0
    centroid = tf.mean(axis=0) if len(vocab) else np.zeros(0)
    centroid_norm = np.linalg.norm(centroid)

    features = np.zeros((n, FEATURE_DIM))
    for i, sentence in enumerate(doc.sentences):
        toks = tokens[i]
        features[i, 0] = i / n
        features[i, 1] = 1.0 if i < 3 else 0.0
        features[i, 2] = min(len(toks) / 40.0, 1.0)
        if token_sets[i]:
            elsewhere = set().union(*(token_sets[j] for j in range(n) if j != i)) if n > 1 else set()
            features[i, 3] = len(token_sets[i] & elsewhere) / len(token_sets[i])
        row_norm = np.linalg.norm(tf[i]) if len(vocab) else 0.0
        if row_norm > 0 and centroid_norm > 0:
            features[i, 4] = float(tf[i] @ centroid) / (row_norm * centroid_norm)
        raw = _RAW_TOKEN_RE.findall(sentence)
        if raw:
            features[i, 5] = sum(1 for t in raw if t[0].isupper()) / len(raw)
        if toks:
            features[i, 6] = sum(1 for t in toks if t in STOPWORDS) / len(toks)
        features[i, 7] = 1.0
    return features


@dataclass
class ScorerParams:
    weights: np.ndarray
    bias: float

    @classmethod
    def zeros(cls) -> "ScorerParams":
        return cls(weights=np.zeros(FEATURE_DIM), bias=0.0)

    def copy(self) -> "ScorerParams":
        return ScorerParams(weights=self.weights.copy(), bias=float(self.bias))


def save_params(params: ScorerParams, path: str | Path) -> None:
    payload = {
        "weights": [float(w) for w in params.weights],
        "bias": float(params.bias),
        "feature_version": FEATURE_VERSION,
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_params(path: str | Path) -> ScorerParams:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = np.array(payload["weights"], dtype=np.float64)
    if len(weights) != FEATURE_DIM:
        raise ValueError(f"expected {FEATURE_DIM} weights, got {len(weights)}")
    return ScorerParams(weights=weights, bias=float(payload["bias"]))


def score(params: ScorerParams, features: np.ndarray) -> np.ndarray:
    """Per-sentence affinities sigmoid(w @ f + b), strictly inside (0, 1)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != len(params.weights):
        raise ValueError(
            f"feature dimension {features.shape} does not match weights ({len(params.weights)})"
        )
    logits = features @ params.weights + params.bias
    return 1.0 / (1.0 + np.exp(-logits))


def model_distribution(affinities: np.ndarray) -> np.ndarray:
    """Affinities normalized to the model's distribution over sentences."""
    affinities = np.asarray(affinities, dtype=np.float64)
    return affinities / affinities.sum()


@dataclass(frozen=True)
class SummarySelection:
    indices: tuple[int, ...]  # selection order

    def labels(self, n: int) -> list[int]:
        chosen = set(self.indices)
        return [1 if i in chosen else 0 for i in range(n)]


def sample_summary(affinities: np.ndarray, rng) -> SummarySelection:
    """Sample min(3, n) distinct indices sequentially, each step drawing
    index i with probability proportional to its affinity among the
    not-yet-selected sentences. `rng` is a `random.Random`.
    """
    weights = [float(a) for a in affinities]
    n = len(weights)
    chosen: list[int] = []
    total = sum(weights)
    for _ in range(min(SUMMARY_SIZE, n)):
        target = rng.random() * total
        acc = 0.0
        pick = -1
        for i, w in enumerate(weights):
            if w == 0.0:
                continue
            acc += w
            if target < acc:
                pick = i
                break
        if pick < 0:  # float underrun at the tail
            pick = max(i for i, w in enumerate(weights) if w > 0.0)
        chosen.append(pick)
        total -= weights[pick]
        weights[pick] = 0.0
    return SummarySelection(indices=tuple(chosen))


def greedy_decode(affinities: np.ndarray) -> SummarySelection:
    """Indices of the min(3, n) largest affinities, descending, ties to
    the lower index."""
    n = len(affinities)
    order = sorted(range(n), key=lambda i: (-float(affinities[i]), i))
    return SummarySelection(indices=tuple(order[: min(SUMMARY_SIZE, n)]))
