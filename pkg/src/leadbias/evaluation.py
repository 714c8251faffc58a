"""Evaluation artifacts: ROUGE report rows, lead-overlap percentage, the
train-kind x test-kind cross-perturbation matrix, position-based test
partitions, and paired bootstrap significance.

A selector is any callable Document -> SummarySelection; built-in
selectors cover the lead-3 baseline, the cached oracle, and trained
policy checkpoints, so baselines never require training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .corpus import Corpus, Document, PERTURBATION_KINDS, Perturbation, perturb_corpus
from .oracle import OracleRecord, TripletScorer
from .policy import ScorerParams, SummarySelection, featurize, greedy_decode, score

Selector = Callable[[Document], SummarySelection]


@dataclass
class EvalReport:
    rouge1_f1: float
    rouge2_f1: float
    rougeL_f1: float
    avg_rouge: float
    lead_overlap_pct: float
    per_doc_avg: list[float]

    def as_row(self) -> dict[str, float]:
        return {
            "rouge1_f1": self.rouge1_f1,
            "rouge2_f1": self.rouge2_f1,
            "rougeL_f1": self.rougeL_f1,
            "avg_rouge": self.avg_rouge,
            "lead_overlap_pct": self.lead_overlap_pct,
        }


@dataclass
class PerturbationMatrix:
    kinds: tuple[str, ...]
    cells: dict[str, dict[str, float]]
    row_mean: dict[str, float]
    row_std: dict[str, float]


@dataclass
class PositionPartition:
    early_ids: list[str]
    med_ids: list[str]
    late_ids: list[str]


def lead3_selector(doc: Document) -> SummarySelection:
    """First min(3, n) sentences; the classic news baseline."""
    return SummarySelection(indices=tuple(range(min(3, len(doc.sentences)))))


def oracle_selector(cache: dict[str, OracleRecord]) -> Selector:
    """Selector replaying precomputed best triplets from a cache."""

    def select(doc: Document) -> SummarySelection:
        record = cache.get(doc.id)
        if record is None:
            raise ValueError(f"no cache record for document {doc.id!r}")
        return SummarySelection(indices=tuple(record.best))

    return select


def policy_selector(params: ScorerParams) -> Selector:
    """Greedy selector for a trained affinity scorer."""

    def select(doc: Document) -> SummarySelection:
        return greedy_decode(score(params, featurize(doc)))

    return select


def evaluate(selector: Selector, corpus: Corpus) -> EvalReport:
    """Score a selector on every document of a corpus.

    Selected sentences are concatenated in document order. The lead
    overlap is the percentage of selected indices that fall within the
    first three positions of the (possibly perturbed) test document.
    """
    f1_1, f1_2, f1_l, per_doc_avg = [], [], [], []
    lead_hits = 0
    total_indices = 0
    for doc in corpus:
        selection = selector(doc)
        scorer = TripletScorer(doc)
        r1, r2, rl = scorer.rouge_scores(selection.indices)
        f1_1.append(r1.f1)
        f1_2.append(r2.f1)
        f1_l.append(rl.f1)
        per_doc_avg.append((r1.f1 + r2.f1 + rl.f1) / 3.0)
        lead_hits += sum(1 for i in selection.indices if i < 3)
        total_indices += len(selection.indices)
    return EvalReport(
        rouge1_f1=float(np.mean(f1_1)) if f1_1 else 0.0,
        rouge2_f1=float(np.mean(f1_2)) if f1_2 else 0.0,
        rougeL_f1=float(np.mean(f1_l)) if f1_l else 0.0,
        avg_rouge=float(np.mean(per_doc_avg)) if per_doc_avg else 0.0,
        lead_overlap_pct=100.0 * lead_hits / total_indices if total_indices else 0.0,
        per_doc_avg=per_doc_avg,
    )


def perturbation_matrix(
    train_fn: Callable[[str], Selector], corpus_dev: Corpus, seed: int
) -> PerturbationMatrix:
    """Cross-evaluate one trained selector per perturbation kind.

    `train_fn(kind)` must return the selector trained on that kind's
    version of the training data; each selector is then evaluated on
    every perturbed version of `corpus_dev`.
    """
    test_corpora = {
        kind: perturb_corpus(corpus_dev, Perturbation(kind, seed)) for kind in PERTURBATION_KINDS
    }
    cells: dict[str, dict[str, float]] = {}
    row_mean: dict[str, float] = {}
    row_std: dict[str, float] = {}
    for train_kind in PERTURBATION_KINDS:
        selector = train_fn(train_kind)
        row = {
            test_kind: evaluate(selector, test_corpora[test_kind]).avg_rouge
            for test_kind in PERTURBATION_KINDS
        }
        cells[train_kind] = row
        values = np.array(list(row.values()))
        row_mean[train_kind] = float(values.mean())
        row_std[train_kind] = float(values.std())
    return PerturbationMatrix(
        kinds=PERTURBATION_KINDS, cells=cells, row_mean=row_mean, row_std=row_std
    )


def partition_by_position(
    corpus_test: Corpus, cache: dict[str, OracleRecord], k: int = 100
) -> PositionPartition:
    """Split the test set by where its summary-worthy content sits.

    Documents are ranked by the mean index of their oracle triplet; the
    k lowest are early, the k highest late, and the k closest to the
    median key are med (excluding early/late members, ties by document
    order).
    """
    if len(corpus_test) < 3 * k:
        raise ValueError(f"corpus too small: need at least {3 * k} documents, have {len(corpus_test)}")
    keys = []
    for position, doc in enumerate(corpus_test):
        record = cache.get(doc.id)
        if record is None:
            raise ValueError(f"no cache record for document {doc.id!r}")
        keys.append((float(np.mean(record.best)), position, doc.id))

    by_key = sorted(keys, key=lambda t: (t[0], t[1]))
    early = [doc_id for _, _, doc_id in by_key[:k]]
    late = [doc_id for _, _, doc_id in by_key[-k:]]
    taken = set(early) | set(late)

    median = float(np.median([key for key, _, _ in keys]))
    by_distance = sorted(keys, key=lambda t: (abs(t[0] - median), t[1]))
    med = [doc_id for _, _, doc_id in by_distance if doc_id not in taken][:k]
    return PositionPartition(early_ids=early, med_ids=med, late_ids=late)


def subset(corpus: Corpus, ids) -> Corpus:
    """Documents with the given ids, in the given order."""
    by_id = corpus.by_id()
    return Corpus([by_id[i] for i in ids], split=corpus.split)


def bootstrap_significance(
    per_doc_scores_a, per_doc_scores_b, iterations: int = 10000, seed: int = 0
) -> float:
    """Paired bootstrap p-value for "system a beats system b".

    Document indices are resampled with replacement; p is the fraction
    of resamples where a's mean fails to beat b's, with exact ties
    counted half so identical score lists come out at 0.5.
    """
    a = np.asarray(per_doc_scores_a, dtype=np.float64)
    b = np.asarray(per_doc_scores_b, dtype=np.float64)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("need at least 2 paired scores")
    diff = a - b
    rng = np.random.default_rng(seed)
    n = len(diff)
    worse = 0.0
    remaining = iterations
    while remaining > 0:
        chunk = min(remaining, 2000)
        idx = rng.integers(0, n, size=(chunk, n))
        means = diff[idx].mean(axis=1)
        worse += float(np.count_nonzero(means < 0.0)) + 0.5 * float(
            np.count_nonzero(means == 0.0)
        )
        remaining -= chunk
    return worse / iterations


def _round_floats(value, digits=4):
    if isinstance(value, float):
        return round(value, digits)
    if isinstance(value, dict):
        return {key: _round_floats(v, digits) for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v, digits) for v in value]
    return value


def write_report(
    path: str | Path,
    rouge_rows: dict[str, EvalReport] | None = None,
    matrix: PerturbationMatrix | None = None,
    partitions: dict[str, dict[str, float]] | None = None,
    significance: dict[str, float] | None = None,
) -> None:
    """Assemble the evaluation artifacts into one stable JSON document.

    Floats are rounded to 4 decimals in the output only; key order is
    insertion order, so reruns with identical inputs are byte-identical.
    """
    payload = {
        "tables": {
            "rouge": {name: report.as_row() for name, report in (rouge_rows or {}).items()}
        },
        "matrix": (
            {
                "kinds": list(matrix.kinds),
                "cells": matrix.cells,
                "row_mean": matrix.row_mean,
                "row_std": matrix.row_std,
            }
            if matrix is not None
            else {}
        ),
        "partitions": partitions or {},
        "significance": significance or {},
    }
    text = json.dumps(_round_floats(payload), indent=2, ensure_ascii=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")
