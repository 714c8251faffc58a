"""Per-sentence reward scores, the normalized target distribution over
sentences, the exhaustive best-triplet oracle, and its on-disk cache.

The oracle summary of a document is the triplet of source sentences
whose concatenation (in document order) maximizes average ROUGE against
the abstractive reference. Scoring every triplet of a 100-sentence
article means ~160k ROUGE evaluations per document, so TripletScorer
precomputes per-sentence n-gram counts restricted to the reference
vocabulary and evaluates whole batches of triplets with numpy; results
are bit-identical to scoring the joined text with `avg_rouge`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document
from .rouge import avg_f1, ngram_counts, _prf, tokenize

_COMBO_CHUNK = 20000


@dataclass
class OracleRecord:
    doc_id: str
    best: tuple[int, ...]
    best_score: float
    scores: list[float]


class TripletScorer:
    """ROUGE of sentence-index selections of one document vs its reference.

    Selections are canonicalized to document order. `avg` results are
    memoized, so repeated rewards for the same selection (as sampled
    during training) cost one dict lookup.
    """

    def __init__(self, doc: Document):
        self.doc = doc
        self.tokens = [tokenize(s) for s in doc.sentences]
        self.lens = np.array([len(t) for t in self.tokens], dtype=np.int64)
        self.ref_tokens = tokenize(" ".join(doc.reference))
        self.ref_len = len(self.ref_tokens)

        ref_uni = ngram_counts(self.ref_tokens, 1)
        ref_bi = ngram_counts(self.ref_tokens, 2)
        self._uni_index = {g: i for i, g in enumerate(ref_uni)}
        self._bi_index = {g: i for i, g in enumerate(ref_bi)}
        self._ref_uni = np.array([ref_uni[g] for g in self._uni_index], dtype=np.int64)
        self._ref_bi = np.array([ref_bi[g] for g in self._bi_index], dtype=np.int64)
        self._ref_bi_total = max(self.ref_len - 1, 0)

        n = len(self.tokens)
        self._uni_mat = np.zeros((n, len(self._uni_index)), dtype=np.int64)
        self._bi_mat = np.zeros((n, len(self._bi_index)), dtype=np.int64)
        for i, toks in enumerate(self.tokens):
            for g, c in ngram_counts(toks, 1).items():
                j = self._uni_index.get(g)
                if j is not None:
                    self._uni_mat[i, j] = c
            for g, c in ngram_counts(toks, 2).items():
                j = self._bi_index.get(g)
                if j is not None:
                    self._bi_mat[i, j] = c

        # bit masks over the reference for the bit-parallel LCS
        self._lcs_masks: dict[str, int] = {}
        bit = 1
        for tok in self.ref_tokens:
            self._lcs_masks[tok] = self._lcs_masks.get(tok, 0) | bit
            bit <<= 1
        self._lcs_full = (1 << self.ref_len) - 1

        self._avg_memo: dict[tuple[int, ...], float] = {}
        self._junction_mat: np.ndarray | None = None

    def _junction_matrix(self) -> np.ndarray:
        """(n, n) reference-vocab index of each pair's spanning bigram, -1 if none."""
        if self._junction_mat is None:
            n = len(self.tokens)
            mat = np.full((n, n), -1, dtype=np.int64)
            for left in range(n):
                for right in range(n):
                    if left != right:
                        j = self._junction_index(left, right)
                        if j is not None:
                            mat[left, right] = j
            self._junction_mat = mat
        return self._junction_mat

    def _junction_index(self, left: int, right: int) -> int | None:
        """Reference-vocab index of the bigram spanning two selected sentences."""
        a, b = self.tokens[left], self.tokens[right]
        if not a or not b:
            return None
        return self._bi_index.get((a[-1], b[0]))

    def _lcs(self, indices: tuple[int, ...]) -> int:
        v = self._lcs_full
        if v == 0:
            return 0
        get = self._lcs_masks.get
        full = self._lcs_full
        for i in indices:
            for tok in self.tokens[i]:
                u = v & get(tok, 0)
                v = ((v + u) | (v - u)) & full
        return self.ref_len - bin(v).count("1")

    def rouge_scores(self, indices):
        """(ROUGE-1, ROUGE-2, ROUGE-L) of the selection, document order."""
        indices = tuple(sorted(indices))
        cand_len = int(self.lens[list(indices)].sum())
        uni = self._uni_mat[list(indices)].sum(axis=0)
        m1 = int(np.minimum(uni, self._ref_uni).sum())

        bi = self._bi_mat[list(indices)].sum(axis=0)
        nonempty = [i for i in indices if self.tokens[i]]
        for left, right in zip(nonempty, nonempty[1:]):
            j = self._junction_index(left, right)
            if j is not None:
                bi[j] += 1
        m2 = int(np.minimum(bi, self._ref_bi).sum())

        r1 = _prf(m1, cand_len, self.ref_len)
        r2 = _prf(m2, max(cand_len - 1, 0), self._ref_bi_total)
        rl = _prf(self._lcs(indices), cand_len, self.ref_len)
        return r1, r2, rl

    def avg(self, indices) -> float:
        """Average ROUGE F1 of the selection; memoized per sorted tuple."""
        key = tuple(sorted(indices))
        cached = self._avg_memo.get(key)
        if cached is None:
            r1, r2, rl = self.rouge_scores(key)
            cached = avg_f1(r1.f1, r2.f1, rl.f1)
            self._avg_memo[key] = cached
        return cached

    def _score_combo_block(self, combos: np.ndarray) -> np.ndarray:
        """Average ROUGE for a (T, k) block of index combinations.

        Assumes every sentence has at least one token, so junction
        bigrams always sit between adjacent selected sentences.
        """
        cand_len = self.lens[combos].sum(axis=1).astype(np.float64)
        uni = self._uni_mat[combos].sum(axis=1)
        m1 = np.minimum(uni, self._ref_uni).sum(axis=1).astype(np.float64)

        bi = self._bi_mat[combos].sum(axis=1)
        junctions = self._junction_matrix()
        rows = np.arange(len(combos))
        for col in range(combos.shape[1] - 1):
            j = junctions[combos[:, col], combos[:, col + 1]]
            valid = j >= 0
            np.add.at(bi, (rows[valid], j[valid]), 1)
        m2 = np.minimum(bi, self._ref_bi).sum(axis=1).astype(np.float64)

        lcs = np.array([self._lcs(tuple(row)) for row in combos], dtype=np.float64)

        def f1(matches, cand_total, ref_total):
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.where(cand_total > 0, matches / cand_total, 0.0)
                r = matches / ref_total if ref_total > 0 else np.zeros_like(matches)
                pr = p + r
                return np.where(pr > 0, 2.0 * p * r / pr, 0.0)

        f1_1 = f1(m1, cand_len, self.ref_len)
        f1_2 = f1(m2, np.maximum(cand_len - 1, 0), self._ref_bi_total)
        f1_l = f1(lcs, cand_len, self.ref_len)
        return (f1_1 + f1_2 + f1_l) / 3.0

    def best_combination(self, size: int = 3) -> tuple[tuple[int, ...], float]:
        """Exhaustive argmax over all index combinations of the given size.

        Ties go to the lexicographically smallest combination. Documents
        with fewer than `size` sentences degenerate to all indices.
        """
        n = len(self.tokens)
        if n <= size:
            indices = tuple(range(n))
            return indices, self.avg(indices)
        if not all(self.tokens):
            # token-empty sentences shift junction bigrams; take the slow path
            best_combo = None
            best_score = -1.0
            for combo in itertools.combinations(range(n), size):
                score = self.avg(combo)
                if score > best_score:
                    best_score = score
                    best_combo = combo
            return best_combo, best_score
        best_combo = None
        best_score = -1.0
        combo_iter = itertools.combinations(range(n), size)
        while True:
            block = list(itertools.islice(combo_iter, _COMBO_CHUNK))
            if not block:
                break
            scores = self._score_combo_block(np.array(block, dtype=np.int64))
            local = int(np.argmax(scores))
            # argmax returns the first maximum, preserving lexicographic ties
            if scores[local] > best_score:
                best_score = float(scores[local])
                best_combo = block[local]
        return best_combo, best_score


def sentence_scores(doc: Document, scorer: TripletScorer | None = None) -> np.ndarray:
    """Average ROUGE of each sentence alone against the reference."""
    scorer = scorer or TripletScorer(doc)
    return np.array([scorer.avg((i,)) for i in range(len(doc.sentences))])


def target_distribution(scores) -> np.ndarray:
    """Normalize per-sentence scores into a distribution.

    All-zero scores fall back to uniform, which imposes no positional
    preference.
    """
    scores = np.asarray(scores, dtype=np.float64)
    total = scores.sum()
    if total <= 0.0:
        return np.full(len(scores), 1.0 / len(scores))
    return scores / total


def best_triplet(doc: Document, scorer: TripletScorer | None = None) -> OracleRecord:
    """Exhaustive oracle: the sentence triplet with highest average ROUGE.

    Raises ValueError when the reference contains no tokens.
    """
    scorer = scorer or TripletScorer(doc)
    if not scorer.ref_tokens:
        raise ValueError(f"document {doc.id!r} has an empty reference")
    best, best_score = scorer.best_combination(3)
    return OracleRecord(
        doc_id=doc.id,
        best=best,
        best_score=best_score,
        scores=[float(s) for s in sentence_scores(doc, scorer)],
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def precompute_cache(corpus: Corpus, path: str | Path) -> None:
    """Write one oracle record per document as JSONL, in corpus order.

    Floats are serialized with 17 significant digits so the file is
    byte-stable and parses back to the exact in-memory values.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            record = best_triplet(doc)
            fh.write(
                "{"
                + f'"id": {json.dumps(record.doc_id, ensure_ascii=False)}, '
                + '"scores": [' + ", ".join(_fmt(s) for s in record.scores) + "], "
                + '"best": [' + ", ".join(str(i) for i in record.best) + "], "
                + f'"best_score": {_fmt(record.best_score)}'
                + "}\n"
            )


def load_cache(path: str | Path) -> dict[str, OracleRecord]:
    """Read a precomputed cache back as {doc_id: OracleRecord}."""
    records: dict[str, OracleRecord] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: malformed cache line {lineno}: {exc}") from exc
            records[obj["id"]] = OracleRecord(
                doc_id=obj["id"],
                best=tuple(obj["best"]),
                best_score=float(obj["best_score"]),
                scores=[float(s) for s in obj["scores"]],
            )
    return records
