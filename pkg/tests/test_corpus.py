import json

import pytest

from leadbias.corpus import (
    Corpus,
    Document,
    Perturbation,
    load_jsonl,
    perturb,
    perturb_corpus,
    save_jsonl,
    shuffle_indices,
)


def make_doc(doc_id, n, ref=None):
    return Document(
        id=doc_id,
        sentences=[f"sentence {i} of {doc_id}" for i in range(n)],
        reference=ref or [f"summary of {doc_id}"],
    )


def make_pool(n_docs=4, n_sents=5):
    return Corpus([make_doc(f"d{i}", n_sents) for i in range(n_docs)])


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


class TestLoadJsonl:
    def test_one_valid_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "a", "sentences": ["s1"], "reference": ["r1"]}])
        corpus = load_jsonl(path)
        assert len(corpus) == 1
        assert corpus.documents[0].id == "a"

    def test_missing_reference_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [
                {"id": "a", "sentences": ["s"], "reference": ["r"]},
                {"id": "b", "sentences": ["s"]},
            ],
        )
        with pytest.raises(ValueError, match="line 2"):
            load_jsonl(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "sentences": ["s"], "reference": ["r"]}\n{oops\n')
        with pytest.raises(ValueError, match="line 2"):
            load_jsonl(path)

    def test_duplicate_id_named(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = {"id": "dup", "sentences": ["s"], "reference": ["r"]}
        write_jsonl(path, [rec, rec])
        with pytest.raises(ValueError, match="dup"):
            load_jsonl(path)

    def test_empty_sentences_named(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "empty", "sentences": [], "reference": ["r"]}])
        with pytest.raises(ValueError, match="empty"):
            load_jsonl(path)

    def test_sentences_capped_at_100(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [{"id": "big", "sentences": [f"s{i}" for i in range(150)], "reference": ["r"]}],
        )
        corpus = load_jsonl(path)
        assert len(corpus.documents[0].sentences) == 100
        assert corpus.documents[0].sentences[0] == "s0"

    def test_roundtrip(self, tmp_path):
        corpus = make_pool()
        path = tmp_path / "c.jsonl"
        save_jsonl(corpus, path)
        again = load_jsonl(path)
        assert again.documents == corpus.documents

    def test_bad_split_rejected(self):
        with pytest.raises(ValueError):
            Corpus([], split="validation")


class TestPerturb:
    def test_original_is_identity(self):
        doc = make_doc("d0", 5)
        out = perturb(doc, Perturbation("original", 1))
        assert out == doc

    def test_reverse(self):
        doc = make_doc("d0", 3)
        out = perturb(doc, Perturbation("reverse", 1))
        assert out.sentences == list(reversed(doc.sentences))
        assert out.reference == doc.reference

    def test_reverse_is_involution(self):
        pool = make_pool()
        p = Perturbation("reverse", 9)
        twice = perturb_corpus(perturb_corpus(pool, p), p)
        assert twice.documents == pool.documents

    def test_random_is_permutation(self):
        doc = make_doc("d0", 10)
        out = perturb(doc, Perturbation("random", 4))
        assert sorted(out.sentences) == sorted(doc.sentences)
        assert out.reference == doc.reference

    def test_random_deterministic(self):
        doc = make_doc("d0", 10)
        p = Perturbation("random", 4)
        assert perturb(doc, p) == perturb(doc, p)

    def test_random_matches_exposed_permutation(self):
        doc = make_doc("d0", 8)
        out = perturb(doc, Perturbation("random", 21))
        perm = shuffle_indices("d0", 8, 21)
        assert out.sentences == [doc.sentences[i] for i in perm]

    def test_insert_lead_prepends_foreign_sentence(self):
        pool = make_pool()
        doc = pool.documents[0]
        out = perturb(doc, Perturbation("insert_lead", 2), pool=pool)
        assert len(out.sentences) == len(doc.sentences) + 1
        assert out.sentences[1:] == doc.sentences
        assert out.sentences[0] not in doc.sentences
        assert out.reference == doc.reference

    def test_insert_lead3_slot_below_three(self):
        pool = make_pool(n_docs=6, n_sents=8)
        p = Perturbation("insert_lead3", 33)
        for doc in pool:
            out = perturb(doc, p, pool=pool)
            foreign = [s for s in out.sentences if s not in doc.sentences]
            assert len(foreign) == 1
            assert out.sentences.index(foreign[0]) < 3

    def test_insert_lead3_slot_clamped_for_short_doc(self):
        pool = Corpus([make_doc("a", 1), make_doc("b", 5)])
        out = perturb(pool.documents[0], Perturbation("insert_lead3", 5), pool=pool)
        assert len(out.sentences) == 2

    def test_insert_needs_pool(self):
        doc = make_doc("d0", 3)
        with pytest.raises(ValueError):
            perturb(doc, Perturbation("insert_lead", 1), pool=Corpus([doc]))

    def test_insert_recaps_at_100(self):
        pool = Corpus([make_doc("a", 100), make_doc("b", 5)])
        out = perturb(pool.documents[0], Perturbation("insert_lead", 7), pool=pool)
        assert len(out.sentences) == 100

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError):
            Perturbation("shuffled", 0)


class TestPerturbCorpus:
    def test_original_equals_input(self):
        pool = make_pool()
        out = perturb_corpus(pool, Perturbation("original", 3))
        assert out.documents == pool.documents

    def test_preserves_order_and_ids(self):
        pool = make_pool()
        out = perturb_corpus(pool, Perturbation("random", 3))
        assert [d.id for d in out] == [d.id for d in pool]

    def test_insert_adds_exactly_one_sentence(self):
        pool = make_pool()
        out = perturb_corpus(pool, Perturbation("insert_lead", 3))
        for before, after in zip(pool, out):
            assert len(after.sentences) == len(before.sentences) + 1

    def test_references_untouched_all_kinds(self):
        pool = make_pool()
        for kind in ("original", "random", "reverse", "insert_lead", "insert_lead3"):
            out = perturb_corpus(pool, Perturbation(kind, 5))
            assert [d.reference for d in out] == [d.reference for d in pool]

    def test_same_seed_byte_identical_jsonl(self, tmp_path):
        pool = make_pool(n_docs=8, n_sents=12)
        p = Perturbation("random", 99)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_jsonl(perturb_corpus(pool, p), a)
        save_jsonl(perturb_corpus(pool, p), b)
        assert a.read_bytes() == b.read_bytes()

    def test_shuffle_independent_of_document_order(self):
        pool = make_pool(n_docs=5, n_sents=9)
        p = Perturbation("random", 42)
        shuffled = {d.id: d.sentences for d in perturb_corpus(pool, p)}
        reordered = Corpus(list(reversed(pool.documents)))
        again = {d.id: d.sentences for d in perturb_corpus(reordered, p)}
        assert shuffled == again
