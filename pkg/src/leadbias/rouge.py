"""ROUGE-1/-2/-L between candidate and reference texts.

One canonical implementation used everywhere: lowercase alphanumeric
tokenization, clipped n-gram overlap for ROUGE-N, token-level LCS for
ROUGE-L, F1 with equal precision/recall weighting. No stemming, no
stopword removal. Multi-sentence texts are joined with a single space
before scoring.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

# Maximal runs of unicode alphanumerics; underscore is a separator.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and split it on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _prf(matches: int, candidate_total: int, reference_total: int) -> RougeScore:
    """Precision/recall/F1 from a match count and the two n-gram totals.

    A side with zero n-grams yields that component = 0, and F1 = 0
    whenever P + R = 0.
    """
    precision = matches / candidate_total if candidate_total > 0 else 0.0
    recall = matches / reference_total if reference_total > 0 else 0.0
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return RougeScore(precision, recall, f1)


def ngram_counts(tokens: list[str], n: int) -> Counter:
    """Multiset of n-grams (as tuples) in a token sequence."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def clipped_matches(candidate: Counter, reference: Counter) -> int:
    """Sum over distinct n-grams of min(count in candidate, count in reference)."""
    if len(reference) < len(candidate):
        candidate, reference = reference, candidate
    return sum(min(count, reference[gram]) for gram, count in candidate.items() if gram in reference)


def rouge_n(candidate: list[str], reference: list[str], n: int) -> RougeScore:
    """ROUGE-N of two token sequences with clipped n-gram matching."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand_counts = ngram_counts(candidate, n)
    ref_counts = ngram_counts(reference, n)
    matches = clipped_matches(cand_counts, ref_counts)
    cand_total = max(len(candidate) - n + 1, 0)
    ref_total = max(len(reference) - n + 1, 0)
    return _prf(matches, cand_total, ref_total)


def lcs_length(a: list[str], b: list[str]) -> int:
    """Length of the longest common subsequence of two token sequences.

    Bit-parallel column DP: the reference column is packed into an int,
    so each step is a handful of integer ops instead of an O(m) scan.
    """
    if not a or not b:
        return 0
    # Build position masks over the shorter sequence.
    if len(a) < len(b):
        short, long = a, b
    else:
        short, long = b, a
    m = len(short)
    masks: dict[str, int] = {}
    bit = 1
    for tok in short:
        masks[tok] = masks.get(tok, 0) | bit
        bit <<= 1
    full = (1 << m) - 1
    v = full
    get = masks.get
    for tok in long:
        u = v & get(tok, 0)
        v = ((v + u) | (v - u)) & full
    return m - bin(v).count("1")


def rouge_l(candidate: list[str], reference: list[str]) -> RougeScore:
    """ROUGE-L of two token sequences (LCS-based precision/recall/F1)."""
    matches = lcs_length(candidate, reference)
    return _prf(matches, len(candidate), len(reference))


def avg_f1(f1_r1: float, f1_r2: float, f1_rl: float) -> float:
    """Mean of the three ROUGE F1 scores; the reward/reporting scalar."""
    return (f1_r1 + f1_r2 + f1_rl) / 3.0


def avg_rouge(candidate: list[str], reference: list[str]) -> float:
    """Average of ROUGE-1, -2 and -L F1 between two sentence lists.

    Sentences on each side are joined with a single space and tokenized
    once before scoring.
    """
    cand_tokens = tokenize(" ".join(candidate))
    ref_tokens = tokenize(" ".join(reference))
    r1 = rouge_n(cand_tokens, ref_tokens, 1)
    r2 = rouge_n(cand_tokens, ref_tokens, 2)
    rl = rouge_l(cand_tokens, ref_tokens)
    return avg_f1(r1.f1, r2.f1, rl.f1)
