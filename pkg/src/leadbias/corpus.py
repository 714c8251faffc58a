"""Document/corpus data model, JSONL persistence, and sentence-position
perturbations.

A corpus is an ordered list of documents, each with an id, pre-split
source sentences, and an abstractive reference summary. Five
perturbations manipulate sentence position information: original (keep),
random (shuffle), reverse, insert_lead (foreign sentence prepended), and
insert_lead3 (foreign sentence placed among the first three).

All randomness is driven per document from (seed XOR stable hash of the
document id), so perturbed corpora are reproducible regardless of
iteration order.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path

MAX_SENTENCES = 100

PERTURBATION_KINDS = ("original", "random", "reverse", "insert_lead", "insert_lead3")

SPLIT_NAMES = ("train", "dev", "test")


@dataclass
class Document:
    id: str
    sentences: list[str]
    reference: list[str]


@dataclass
class Corpus:
    documents: list[Document]
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLIT_NAMES:
            raise ValueError(f"split must be one of {SPLIT_NAMES}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def by_id(self) -> dict[str, Document]:
        return {doc.id: doc for doc in self.documents}


@dataclass(frozen=True)
class Perturbation:
    kind: str
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"kind must be one of {PERTURBATION_KINDS}, got {self.kind!r}")


def stable_hash64(text: str) -> int:
    """Process-independent 64-bit hash of a string."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_seed(*parts) -> int:
    """Mix arbitrary labels/numbers into a reproducible 64-bit seed."""
    return stable_hash64(":".join(str(p) for p in parts))


def load_jsonl(path: str | Path, split: str = "train") -> Corpus:
    """Load a corpus from JSONL: one {"id", "sentences", "reference"} per line.

    Sentences are truncated to the first 100. Raises ValueError naming the
    offending line for malformed records, and the offending id for
    duplicates and empty sentence lists.
    """
    documents = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}: line {lineno} is not a JSON object")
            for key, kind in (("id", str), ("sentences", list), ("reference", list)):
                if key not in obj:
                    raise ValueError(f"{path}: line {lineno} missing field {key!r}")
                if not isinstance(obj[key], kind):
                    raise ValueError(f"{path}: line {lineno} field {key!r} has wrong type")
            if not all(isinstance(s, str) for s in obj["sentences"] + obj["reference"]):
                raise ValueError(f"{path}: line {lineno} has non-string sentences")
            doc_id = obj["id"]
            if not doc_id:
                raise ValueError(f"{path}: line {lineno} has empty id")
            if doc_id in seen:
                raise ValueError(f"{path}: duplicate document id {doc_id!r}")
            if not obj["sentences"]:
                raise ValueError(f"{path}: document {doc_id!r} has no sentences")
            seen.add(doc_id)
            documents.append(
                Document(
                    id=doc_id,
                    sentences=list(obj["sentences"][:MAX_SENTENCES]),
                    reference=list(obj["reference"]),
                )
            )
    return Corpus(documents, split=split)


def save_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL. Byte-identical for identical corpora."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            record = {"id": doc.id, "sentences": doc.sentences, "reference": doc.reference}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def shuffle_indices(doc_id: str, n: int, seed: int) -> list[int]:
    """The permutation used by the random perturbation for this document.

    Exposed so callers can remap per-sentence data through the same
    shuffle without recomputing it.
    """
    rng = random.Random(seed ^ stable_hash64(doc_id))
    perm = list(range(n))
    rng.shuffle(perm)
    return perm


def _doc_rng(doc: Document, p: Perturbation) -> random.Random:
    return random.Random(p.seed ^ stable_hash64(doc.id))


def perturb(doc: Document, p: Perturbation, pool: Corpus | None = None) -> Document:
    """Apply one position perturbation to a document.

    The reference is never modified. Insert variants draw one sentence
    from a uniformly chosen other document in `pool` (uniform sentence
    within it); the result is re-capped to 100 sentences.
    """
    if p.kind == "original":
        return Document(doc.id, list(doc.sentences), list(doc.reference))
    if p.kind == "reverse":
        return Document(doc.id, list(reversed(doc.sentences)), list(doc.reference))
    if p.kind == "random":
        perm = shuffle_indices(doc.id, len(doc.sentences), p.seed)
        return Document(doc.id, [doc.sentences[i] for i in perm], list(doc.reference))

    # insert_lead / insert_lead3
    if pool is None or len(pool) < 2:
        raise ValueError(f"{p.kind} requires a pool of at least 2 documents")
    rng = _doc_rng(doc, p)
    others = [d for d in pool if d.id != doc.id]
    if not others:
        raise ValueError(f"{p.kind}: no other document in pool for {doc.id!r}")
    source = others[rng.randrange(len(others))]
    foreign = source.sentences[rng.randrange(len(source.sentences))]
    if p.kind == "insert_lead":
        slot = 0
    else:
        slot = min(rng.randrange(3), len(doc.sentences))
    sentences = list(doc.sentences)
    sentences.insert(slot, foreign)
    return Document(doc.id, sentences[:MAX_SENTENCES], list(doc.reference))


def perturb_corpus(corpus: Corpus, p: Perturbation) -> Corpus:
    """Apply `perturb` to every document, with the corpus itself as pool."""
    return Corpus([perturb(doc, p, pool=corpus) for doc in corpus], split=corpus.split)
