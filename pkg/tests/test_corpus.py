"""Corpus ingest, dedup, and sampling contracts."""

import json

import pytest

from syntaxeval.corpus import Corpus, CorpusError, Snippet, dedup, ingest_jsonl, sample_subset, write_jsonl


def write_lines(path, objs):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj) + "\n")


def corpus_of(*sources):
    return Corpus(snippets=tuple(Snippet(id=f"{i:06d}", source=s) for i, s in enumerate(sources)))


def test_ingest_assigns_line_index_ids(tmp_path):
    p = tmp_path / "c.jsonl"
    write_lines(p, [{"source": "a = 1"}, {"source": "b = 2"}, {"source": "c = 3"}])
    corpus = ingest_jsonl(p)
    assert len(corpus) == 3
    assert corpus.ids() == ["000000", "000001", "000002"]


def test_ingest_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert len(ingest_jsonl(p)) == 0


def test_ingest_invalid_json_names_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"source": "a = 1"}\nnot json\n')
    with pytest.raises(CorpusError, match="line 2: invalid JSON"):
        ingest_jsonl(p)


def test_ingest_missing_source_names_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"source": "a = 1"}\n{"id": "x"}\n')
    with pytest.raises(CorpusError, match="line 2"):
        ingest_jsonl(p)


def test_ingest_unreadable_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        ingest_jsonl(tmp_path / "missing.jsonl")


def test_ingest_skips_oversized_with_count(tmp_path):
    p = tmp_path / "big.jsonl"
    write_lines(p, [{"source": "x" * 100}, {"source": "ok = 1"}])
    corpus = ingest_jsonl(p, max_bytes=50)
    assert len(corpus) == 1
    assert corpus.metadata["skipped_oversize"] == 1


def test_ingest_duplicate_ids_rejected(tmp_path):
    p = tmp_path / "dup.jsonl"
    write_lines(p, [{"id": "a", "source": "x = 1"}, {"id": "a", "source": "y = 2"}])
    with pytest.raises(CorpusError, match="duplicate"):
        ingest_jsonl(p)


def test_roundtrip_equal(tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_lines(p1, [{"id": "s1", "source": "a = 1", "origin": "repo/x.py"}, {"source": "b = 2"}])
    first = ingest_jsonl(p1)
    write_jsonl(first, p2)
    second = ingest_jsonl(p2)
    assert first == second  # metadata excluded from equality


def test_dedup_exact_duplicates():
    corpus = corpus_of("a=1", "a=1", "b=2")
    out = dedup(corpus)
    assert [s.source for s in out] == ["a=1", "b=2"]


def test_dedup_normalizes_trailing_whitespace():
    out = dedup(corpus_of("a=1  \n", "a=1\n"))
    assert len(out) == 1
    assert out.snippets[0].source == "a=1  \n"  # first occurrence kept verbatim


def test_dedup_identity_on_unique():
    corpus = corpus_of("a=1", "b=2", "c=3")
    assert dedup(corpus) == corpus


def test_dedup_idempotent():
    corpus = corpus_of("a=1", "a=1", "b=2", "b=2  ", "c=3")
    once = dedup(corpus)
    assert dedup(once) == once


def test_sample_zero():
    assert len(sample_subset(corpus_of("a", "b"), 0, seed=1)) == 0


def test_sample_saturation_is_permutation():
    corpus = corpus_of(*(f"x{i} = {i}" for i in range(10)))
    out = sample_subset(corpus, 50, seed=7)
    assert sorted(out.ids()) == sorted(corpus.ids())


def test_sample_deterministic():
    corpus = corpus_of(*(f"v{i} = {i}" for i in range(100)))
    a = sample_subset(corpus, 10, seed=42)
    b = sample_subset(corpus, 10, seed=42)
    assert a.ids() == b.ids()
    assert [s.source for s in a] == [s.source for s in b]


def test_sample_is_submultiset_without_repeats():
    corpus = corpus_of(*(f"w{i} = {i}" for i in range(30)))
    out = sample_subset(corpus, 12, seed=3)
    assert len(set(out.ids())) == len(out)
    assert set(out.ids()) <= set(corpus.ids())


def test_empty_source_rejected():
    with pytest.raises(CorpusError):
        Snippet(id="x", source="")
