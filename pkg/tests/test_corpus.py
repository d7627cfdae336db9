"""Chunking, mock embedding, and embedding file round-trip tests."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdim import (
    Chunk,
    ChunkingConfig,
    EmbeddingRecord,
    chunk_text,
    mock_embed,
    read_chunks,
    read_embeddings,
    synthetic_topic_corpus,
    write_chunks,
    write_embeddings,
)
from specdim.errors import ValidationError

WORDS = ["ape", "bat", "cow", "dog", "eel", "fox", "gnu", "hen"]


def texts_strategy():
    unit = st.lists(st.sampled_from(WORDS), min_size=0, max_size=6).map(" ".join)
    return st.lists(unit, min_size=0, max_size=12).map("\n".join)


class TestChunking:
    def test_budget_of_four_keeps_one_chunk(self):
        chunks = chunk_text("a b\nc d", ChunkingConfig(max_tokens=4))
        assert [c.text for c in chunks] == ["a b\nc d"]
        assert chunks[0].token_count == 4
        assert not chunks[0].oversized

    def test_budget_of_two_splits_at_newline(self):
        chunks = chunk_text("a b\nc d", ChunkingConfig(max_tokens=2))
        assert [c.text for c in chunks] == ["a b", "c d"]
        assert [c.token_count for c in chunks] == [2, 2]

    def test_oversized_unit_kept_whole_and_flagged(self):
        chunks = chunk_text("one two three four\nfive", ChunkingConfig(max_tokens=3))
        assert [c.text for c in chunks] == ["one two three four", "five"]
        assert [c.oversized for c in chunks] == [True, False]

    def test_tokenless_units_dropped(self):
        chunks = chunk_text("a\n\n   \nb", ChunkingConfig(max_tokens=10))
        assert [c.text for c in chunks] == ["a\nb"]

    def test_custom_splitter(self):
        chunks = chunk_text("w x. y z", ChunkingConfig(max_tokens=2, splitter="."))
        assert [c.text for c in chunks] == ["w x", " y z"]

    def test_doc_keys_sequential(self):
        chunks = chunk_text("a\nb\nc", ChunkingConfig(max_tokens=1), source_id="src")
        assert [c.doc_key for c in chunks] == ["src:0", "src:1", "src:2"]

    def test_empty_source_gives_no_chunks(self):
        assert chunk_text("", ChunkingConfig(max_tokens=4)) == []
        assert chunk_text("\n \n", ChunkingConfig(max_tokens=4)) == []

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            ChunkingConfig(max_tokens=0)
        with pytest.raises(ValidationError):
            ChunkingConfig(max_tokens=4, splitter="")

    @settings(deadline=None, max_examples=200)
    @given(source=texts_strategy(), max_tokens=st.integers(1, 8))
    def test_join_reconstructs_kept_units(self, source, max_tokens):
        config = ChunkingConfig(max_tokens=max_tokens)
        chunks = chunk_text(source, config)
        kept = [u for u in source.split("\n") if u.split()]
        assert "\n".join(c.text for c in chunks) == "\n".join(kept)

    @settings(deadline=None, max_examples=200)
    @given(source=texts_strategy(), max_tokens=st.integers(1, 8))
    def test_budget_respected_unless_oversized(self, source, max_tokens):
        for chunk in chunk_text(source, ChunkingConfig(max_tokens=max_tokens)):
            assert chunk.token_count == len(chunk.text.split())
            if chunk.oversized:
                assert "\n" not in chunk.text
                assert chunk.token_count > max_tokens
            else:
                assert 1 <= chunk.token_count <= max_tokens

    @settings(deadline=None, max_examples=100)
    @given(source=texts_strategy(), max_tokens=st.integers(1, 8))
    def test_boundaries_fall_on_splitter(self, source, max_tokens):
        chunks = chunk_text(source, ChunkingConfig(max_tokens=max_tokens))
        kept = [u for u in source.split("\n") if u.split()]
        cursor = 0
        for chunk in chunks:
            units = chunk.text.split("\n")
            assert units == kept[cursor : cursor + len(units)]
            cursor += len(units)
        assert cursor == len(kept)


class TestMockEmbed:
    def test_unit_norm(self):
        for text in ("alpha", "alpha beta gamma", "The quick brown fox"):
            vec = mock_embed(text, 768, seed=1)
            assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)

    def test_deterministic_bits(self):
        a = mock_embed("alpha beta", 768, seed=3)
        b = mock_embed("alpha beta", 768, seed=3)
        assert np.array_equal(a, b)

    def test_repeated_token_matches_single(self):
        assert np.array_equal(
            mock_embed("alpha alpha", 768, seed=1), mock_embed("alpha", 768, seed=1)
        )

    def test_case_folded(self):
        assert np.array_equal(
            mock_embed("Alpha BETA", 32, seed=5), mock_embed("alpha beta", 32, seed=5)
        )

    def test_seed_changes_embedding(self):
        a = mock_embed("alpha", 64, seed=1)
        b = mock_embed("alpha", 64, seed=2)
        assert not np.allclose(a, b)

    def test_shared_tokens_closer_than_disjoint(self):
        base = mock_embed("red green blue", 768, seed=7)
        near = mock_embed("red green yellow", 768, seed=7)
        far = mock_embed("cyan magenta yellow", 768, seed=7)
        assert float(base @ near) > float(base @ far)

    def test_disjoint_vocabularies_near_orthogonal(self):
        rng = np.random.default_rng(11)
        vocab_a = [f"alpha{i:02d}" for i in range(50)]
        vocab_b = [f"beta{i:02d}" for i in range(50)]
        sims = []
        for _ in range(100):
            ta = " ".join(rng.choice(vocab_a, size=5, replace=False))
            tb = " ".join(rng.choice(vocab_b, size=5, replace=False))
            sims.append(abs(float(mock_embed(ta, 768, 1) @ mock_embed(tb, 768, 1))))
        assert np.mean(sims) < 0.15

    def test_empty_text_rejected(self):
        with pytest.raises(ValidationError):
            mock_embed("", 768, seed=1)
        with pytest.raises(ValidationError):
            mock_embed("   \n ", 768, seed=1)

    def test_bad_dim_rejected(self):
        with pytest.raises(ValidationError):
            mock_embed("alpha", 0, seed=1)


class TestSyntheticCorpus:
    def test_two_topic_separability(self):
        records, labels = synthetic_topic_corpus()
        matrix = np.stack([r.vector for r in records]).astype(np.float64)
        matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
        sims = matrix @ matrix.T
        label_arr = np.asarray([labels[r.id] for r in records])
        same = label_arr[:, None] == label_arr[None, :]
        off_diag = ~np.eye(len(records), dtype=bool)
        within = sims[same & off_diag].mean()
        across = sims[~same].mean()
        assert within - across >= 0.3


class TestChunkFiles:
    def test_round_trip(self, tmp_path):
        chunks = chunk_text("a b\nc d\ne", ChunkingConfig(max_tokens=2), "doc")
        path = tmp_path / "chunks.jsonl"
        write_chunks(chunks, path)
        loaded = read_chunks(path)
        assert [cid for cid, _ in loaded] == [0, 1, 2]
        assert [c for _, c in loaded] == chunks

    def test_file_is_one_json_object_per_line(self, tmp_path):
        chunks = chunk_text("a\nb", ChunkingConfig(max_tokens=1))
        path = tmp_path / "chunks.jsonl"
        write_chunks(chunks, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        for line in lines:
            obj = json.loads(line)
            assert set(obj) == {"id", "doc_key", "text", "token_count", "oversized"}

    def test_empty_file_reads_as_empty(self, tmp_path):
        path = tmp_path / "chunks.jsonl"
        path.write_text("")
        assert read_chunks(path) == []

    def test_unicode_text_survives(self, tmp_path):
        chunks = [Chunk(doc_key="u:0", text="naïve café 日本", token_count=3)]
        path = tmp_path / "chunks.jsonl"
        write_chunks(chunks, path)
        assert read_chunks(path)[0][1].text == "naïve café 日本"


ADVERSARIAL_F32 = np.asarray(
    [
        0.0,
        -0.0,
        1.0,
        -1.0,
        math.pi,
        1e-38,
        1.17549435e-38,
        1e-45,
        3.4e38,
        -3.4e38,
        0.1,
        2.0 / 3.0,
        1.0000001,
    ],
    dtype=np.float32,
)


def make_records(vectors):
    return [
        EmbeddingRecord(id=i, doc_key=f"d:{i}", vector=v, snippet=f"s{i}" if i % 2 else None)
        for i, v in enumerate(vectors)
    ]


class TestEmbeddingFiles:
    @pytest.mark.parametrize("format", ["bin", "jsonl"])
    def test_round_trip_exact_bits(self, tmp_path, format):
        rng = np.random.default_rng(13)
        vectors = [rng.standard_normal(13).astype(np.float32) for _ in range(8)]
        vectors.append(ADVERSARIAL_F32)
        vectors.append(ADVERSARIAL_F32[::-1].copy())
        records = make_records(vectors)
        path = tmp_path / f"emb.{format}"
        write_embeddings(records, path, format=format)
        loaded = read_embeddings(path, format=format)
        assert [r.id for r in loaded] == [r.id for r in records]
        assert [r.doc_key for r in loaded] == [r.doc_key for r in records]
        assert [r.snippet for r in loaded] == [r.snippet for r in records]
        for got, want in zip(loaded, records):
            assert got.vector.dtype == np.float32
            assert np.array_equal(
                got.vector.view(np.uint32), want.vector.view(np.uint32)
            )

    def test_format_inferred_from_suffix(self, tmp_path):
        records = make_records([np.ones(4, dtype=np.float32)])
        jpath = tmp_path / "emb.jsonl"
        bpath = tmp_path / "emb.bin"
        write_embeddings(records, jpath, format="jsonl")
        write_embeddings(records, bpath, format="bin")
        assert read_embeddings(jpath)[0].id == 0
        assert read_embeddings(bpath)[0].id == 0

    def test_empty_write_refused(self, tmp_path):
        with pytest.raises(ValidationError):
            write_embeddings([], tmp_path / "emb.bin")

    def test_mixed_dimensions_refused(self, tmp_path):
        records = [
            EmbeddingRecord(id=0, doc_key="a", vector=np.ones(4)),
            EmbeddingRecord(id=1, doc_key="b", vector=np.ones(5)),
        ]
        with pytest.raises(ValidationError, match="5.*4|4.*5"):
            write_embeddings(records, tmp_path / "emb.bin")

    def test_unknown_format_refused(self, tmp_path):
        records = make_records([np.ones(4, dtype=np.float32)])
        with pytest.raises(ValidationError):
            write_embeddings(records, tmp_path / "emb.xyz", format="csv")
        write_embeddings(records, tmp_path / "emb.bin", format="bin")
        with pytest.raises(ValidationError):
            read_embeddings(tmp_path / "emb.bin", format="csv")

    def test_empty_jsonl_reads_as_empty(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text("")
        assert read_embeddings(path, format="jsonl") == []

    def test_bin_and_jsonl_agree(self, tmp_path):
        rng = np.random.default_rng(17)
        records = make_records([rng.standard_normal(7) for _ in range(5)])
        bpath = tmp_path / "emb.bin"
        jpath = tmp_path / "emb.jsonl"
        write_embeddings(records, bpath, format="bin")
        write_embeddings(records, jpath, format="jsonl")
        from_bin = read_embeddings(bpath)
        from_json = read_embeddings(jpath)
        for a, b in zip(from_bin, from_json):
            assert a.id == b.id and a.doc_key == b.doc_key
            assert np.array_equal(a.vector.view(np.uint32), b.vector.view(np.uint32))
