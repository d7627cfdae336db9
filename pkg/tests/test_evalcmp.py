"""Comparison harness tests.

The rank-agreement numbers are cross-checked against a pure-python
reimplementation of the documented convention: ranks over the union of
both hit lists, absent ids ranked k+1, degenerate unions scoring 1.0.
"""

import json
import os

import numpy as np
import pytest

from specdim import (
    IndexKind,
    Metric,
    QueryResult,
    bench_search,
    build_paired_dbs,
    compare_queries,
    compare_query,
    comparison_report,
    make_spec,
    render_comparison_table,
    save_index,
    search,
    synthetic_query,
    synthetic_topic_corpus,
    thread_cap,
    topic_purity,
)
from specdim.errors import ValidationError

BENCH = os.environ.get("SPECDIM_BENCH") == "1"


def spearman_reference(original_hits, reduced_hits, k):
    """Independent Spearman over the hit-list union, absent ids at k+1."""
    union = sorted(set(original_hits) | set(reduced_hits))
    if len(union) < 2:
        return 1.0
    rank_a = {h: r for r, h in enumerate(original_hits, start=1)}
    rank_b = {h: r for r, h in enumerate(reduced_hits, start=1)}
    a = [float(rank_a.get(u, k + 1)) for u in union]
    b = [float(rank_b.get(u, k + 1)) for u in union]
    mean_a = sum(a) / len(a)
    mean_b = sum(b) / len(b)
    da = [x - mean_a for x in a]
    db = [x - mean_b for x in b]
    denom = (sum(x * x for x in da) * sum(x * x for x in db)) ** 0.5
    if denom == 0.0:
        return 1.0 if da == db else 0.0
    return sum(x * y for x, y in zip(da, db)) / denom


@pytest.fixture(scope="module")
def standard_corpus():
    return synthetic_topic_corpus()


@pytest.fixture(scope="module")
def paired_96(standard_corpus):
    records, _ = standard_corpus
    return build_paired_dbs(records, make_spec(768, 8), metric=Metric.COSINE)


class TestBuildPairedDbs:
    def test_alignment_and_dims(self, standard_corpus, paired_96):
        records, _ = standard_corpus
        original, reduced = paired_96
        assert original.dim == 768
        assert reduced.dim == 96
        assert reduced.kind is IndexKind.TRANSFORMED
        assert [r.id for r in original.records] == [r.id for r in records]
        assert [r.id for r in reduced.records] == [r.id for r in records]
        assert [r.doc_key for r in reduced.records] == [r.doc_key for r in records]

    def test_dimension_mismatch_rejected(self, standard_corpus):
        records, _ = standard_corpus
        with pytest.raises(ValidationError):
            build_paired_dbs(records, make_spec(512, 8))

    def test_file_size_scales_with_target_dim(self, tmp_path, standard_corpus):
        records, _ = standard_corpus
        spec = make_spec(768, 8)
        original, reduced = build_paired_dbs(records, spec)
        opath = tmp_path / "orig.sdim"
        rpath = tmp_path / "red.sdim"
        save_index(original, opath)
        save_index(reduced, rpath)
        count = len(records)
        # Identical ids, keys and snippets, so the files differ by the
        # vector payload minus the 8-byte reduction block of the
        # transformed header.
        delta = opath.stat().st_size - rpath.stat().st_size
        assert delta == count * (768 - 96) * 4 - 8
        assert count * 96 * 4 == (96 / 768) * (count * 768 * 4)


class TestCompareQuery:
    def test_self_match_tops_both_lists(self, standard_corpus, paired_96):
        records, _ = standard_corpus
        comp = compare_query(paired_96, records[17].vector, k=5, query_key="self")
        assert comp.original_hits[0] == 17
        assert comp.reduced_hits[0] == 17
        assert comp.query_key == "self"
        assert comp.k == 5
        assert comp.factor == 8.0
        assert comp.dims == (768, 96)
        assert comp.original_ns >= 0 and comp.reduced_ns >= 0

    def test_corpus_of_one_scores_full_recall(self):
        records, _ = synthetic_topic_corpus(n_per_topic=1, topics=("alpha",))
        dbs = build_paired_dbs(records, make_spec(768, 8))
        comp = compare_query(dbs, records[0].vector, k=1)
        assert comp.recall_at_k == 1.0
        assert comp.rank_correlation == 1.0

    def test_recall_divides_by_k_not_overlap(self):
        records, _ = synthetic_topic_corpus(n_per_topic=1, topics=("alpha",))
        dbs = build_paired_dbs(records, make_spec(768, 8))
        comp = compare_query(dbs, records[0].vector, k=4)
        assert comp.recall_at_k == 0.25  # one record, k of 4

    @pytest.mark.parametrize("factor", [2, 8, 32])
    def test_scores_match_reference(self, standard_corpus, factor):
        records, _ = standard_corpus
        dbs = build_paired_dbs(records, make_spec(768, factor), metric=Metric.COSINE)
        for i in range(12):
            topic = ("alpha", "beta")[i % 2]
            _, vec = synthetic_query(topic, draw=i // 2, tokens_per_doc=28)
            comp = compare_query(dbs, vec, k=10)
            overlap = len(set(comp.original_hits) & set(comp.reduced_hits))
            assert comp.recall_at_k == overlap / 10
            want = spearman_reference(comp.original_hits, comp.reduced_hits, 10)
            assert comp.rank_correlation == pytest.approx(want, abs=1e-12)

    def test_metric_mismatch_rejected(self, standard_corpus):
        records, _ = standard_corpus
        spec = make_spec(768, 8)
        original, _ = build_paired_dbs(records, spec, metric=Metric.L2)
        _, reduced = build_paired_dbs(records, spec, metric=Metric.COSINE)
        with pytest.raises(ValidationError, match="metric"):
            compare_query((original, reduced), records[0].vector, k=3)

    def test_unreduced_pair_rejected(self, standard_corpus, paired_96):
        original, _ = paired_96
        with pytest.raises(ValidationError):
            compare_query((original, original), np.zeros(768), k=3)


class TestCompareQueries:
    def queries(self, n):
        return [
            synthetic_query(("alpha", "beta")[i % 2], draw=i // 2)[1] for i in range(n)
        ]

    def test_default_keys_sequential(self, paired_96):
        comps = compare_queries(paired_96, self.queries(3), k=4)
        assert [c.query_key for c in comps] == ["q0", "q1", "q2"]

    def test_key_count_mismatch_rejected(self, paired_96):
        with pytest.raises(ValidationError):
            compare_queries(paired_96, self.queries(2), k=4, query_keys=["a"])

    def test_threaded_matches_sequential(self, paired_96, monkeypatch):
        queries = self.queries(8)
        monkeypatch.setenv("SPECDIM_THREADS", "1")
        seq = compare_queries(paired_96, queries, k=6)
        monkeypatch.setenv("SPECDIM_THREADS", "4")
        par = compare_queries(paired_96, queries, k=6)
        for a, b in zip(seq, par):
            assert a.query_key == b.query_key
            assert a.original_hits == b.original_hits
            assert a.reduced_hits == b.reduced_hits
            assert a.recall_at_k == b.recall_at_k
            assert a.rank_correlation == b.rank_correlation

    def test_empty_batch_is_empty(self, paired_96):
        assert compare_queries(paired_96, [], k=4) == []


class TestThreadCap:
    def test_unset_gives_automatic_default(self, monkeypatch):
        monkeypatch.delenv("SPECDIM_THREADS", raising=False)
        assert thread_cap() == min(8, os.cpu_count() or 1)

    def test_zero_gives_automatic_default(self, monkeypatch):
        monkeypatch.setenv("SPECDIM_THREADS", "0")
        assert thread_cap() == min(8, os.cpu_count() or 1)

    def test_blank_gives_automatic_default(self, monkeypatch):
        monkeypatch.setenv("SPECDIM_THREADS", "   ")
        assert thread_cap() == min(8, os.cpu_count() or 1)

    def test_positive_value_respected(self, monkeypatch):
        monkeypatch.setenv("SPECDIM_THREADS", "3")
        assert thread_cap() == 3

    def test_negative_rejected(self, monkeypatch):
        monkeypatch.setenv("SPECDIM_THREADS", "-2")
        with pytest.raises(ValidationError):
            thread_cap()

    def test_garbage_rejected(self, monkeypatch):
        monkeypatch.setenv("SPECDIM_THREADS", "many")
        with pytest.raises(ValidationError):
            thread_cap()


class TestTopicPurity:
    def result(self, ids):
        return QueryResult(hits=tuple((i, f"d:{i}", 0.1) for i in ids), k=len(ids))

    def test_all_hits_on_topic(self):
        labels = {1: "alpha", 2: "alpha", 3: "alpha", 4: "alpha"}
        report = topic_purity(self.result([1, 2, 3, 4]), labels, "alpha")
        assert report.purity_at_k == 1.0
        assert report.retrieved_labels == ("alpha",) * 4

    def test_three_of_four(self):
        labels = {1: "alpha", 2: "alpha", 3: "beta", 4: "alpha"}
        report = topic_purity(self.result([1, 2, 3, 4]), labels, "alpha")
        assert report.purity_at_k == 0.75
        assert report.query_topic == "alpha"

    def test_unlabeled_hit_rejected(self):
        with pytest.raises(ValidationError, match="no topic label"):
            topic_purity(self.result([1, 2]), {1: "alpha"}, "alpha")

    def test_zero_hits_rejected(self):
        empty = QueryResult(hits=(), k=4)
        with pytest.raises(ValidationError):
            topic_purity(empty, {}, "alpha")


class TestBench:
    def small_dbs(self):
        records, _ = synthetic_topic_corpus(n_per_topic=10, dim=64, tokens_per_doc=10)
        return build_paired_dbs(records, make_spec(64, 2)), records

    def test_report_fields(self):
        dbs, records = self.small_dbs()
        queries = [r.vector for r in records[:4]]
        report = bench_search(dbs, queries, k=3, repetitions=3)
        assert report.k == 3
        assert report.repetitions == 3
        assert report.n_queries == 4
        assert report.dims == (64, 32)
        assert report.factor == 2.0
        assert report.original_ns > 0 and report.reduced_ns > 0
        assert report.speedup == report.original_ns / report.reduced_ns

    def test_too_few_repetitions_rejected(self):
        dbs, records = self.small_dbs()
        with pytest.raises(ValidationError):
            bench_search(dbs, [records[0].vector], k=1, repetitions=2)

    def test_empty_queries_rejected(self):
        dbs, _ = self.small_dbs()
        with pytest.raises(ValidationError):
            bench_search(dbs, [], k=1)

    @pytest.mark.skipif(not BENCH, reason="set SPECDIM_BENCH=1 to run benchmarks")
    def test_factor_one_is_latency_neutral(self):
        records, _ = synthetic_topic_corpus(n_per_topic=500, dim=96, tokens_per_doc=10)
        dbs = build_paired_dbs(records, make_spec(96, 1))
        queries = [r.vector for r in records[:20]]
        report = bench_search(dbs, queries, k=10, repetitions=5)
        assert 0.5 <= report.speedup <= 2.0

    @pytest.mark.skipif(not BENCH, reason="set SPECDIM_BENCH=1 to run benchmarks")
    def test_latency_tracks_record_count(self):
        spec = make_spec(64, 2)
        reports = []
        for n in (500, 5000):
            records, _ = synthetic_topic_corpus(
                n_per_topic=n, dim=64, tokens_per_doc=10
            )
            dbs = build_paired_dbs(records, spec)
            queries = [r.vector for r in records[:20]]
            reports.append(bench_search(dbs, queries, k=10, repetitions=5))
        ratio = reports[1].original_ns / reports[0].original_ns
        assert 4.0 <= ratio <= 25.0


class TestSyntheticCorpus:
    def test_shape_ids_and_labels(self, standard_corpus):
        records, labels = standard_corpus
        assert len(records) == 100
        assert [r.id for r in records] == list(range(100))
        assert records[0].doc_key == "alpha:0"
        assert records[50].doc_key == "beta:0"
        assert all(labels[r.id] == r.doc_key.split(":")[0] for r in records)
        assert all(r.vector.size == 768 for r in records)

    def test_bitwise_deterministic(self, standard_corpus):
        records, _ = standard_corpus
        again, _ = synthetic_topic_corpus()
        for a, b in zip(records, again):
            assert a.id == b.id and a.doc_key == b.doc_key
            assert np.array_equal(a.vector, b.vector)

    def test_tokens_drawn_without_replacement(self):
        records, _ = synthetic_topic_corpus(n_per_topic=5, tokens_per_doc=10)
        for rec in records:
            tokens = rec.snippet.split()
            assert len(tokens) == 10
            assert len(set(tokens)) == 10

    def test_validation(self):
        with pytest.raises(ValidationError):
            synthetic_topic_corpus(tokens_per_doc=51)
        with pytest.raises(ValidationError):
            synthetic_topic_corpus(n_per_topic=0)
        with pytest.raises(ValidationError):
            synthetic_topic_corpus(topics=("alpha", "alpha"))
        with pytest.raises(ValidationError):
            synthetic_topic_corpus(topics=())


class TestSyntheticQuery:
    def test_deterministic_and_draw_dependent(self):
        text_a, vec_a = synthetic_query("alpha", draw=0)
        text_b, vec_b = synthetic_query("alpha", draw=0)
        text_c, _ = synthetic_query("alpha", draw=1)
        assert text_a == text_b
        assert np.array_equal(vec_a, vec_b)
        assert text_a != text_c

    def test_in_topic_vocabulary(self):
        text, _ = synthetic_query("beta", draw=3)
        assert all(t.startswith("beta") for t in text.split())

    def test_validation(self):
        with pytest.raises(ValidationError):
            synthetic_query("alpha", draw=-1)
        with pytest.raises(ValidationError):
            synthetic_query("alpha", tokens_per_doc=51)


class TestReport:
    def labeled_report(self, standard_corpus, paired_96):
        records, labels = standard_corpus
        queries, keys, topics = [], [], {}
        for i in range(4):
            topic = ("alpha", "beta")[i % 2]
            _, vec = synthetic_query(topic, draw=i // 2)
            key = f"{topic}:q{i}"
            queries.append(vec)
            keys.append(key)
            topics[key] = topic
        comps = compare_queries(paired_96, queries, k=5, query_keys=keys)
        return comparison_report(comps, Metric.COSINE, labels=labels, query_topics=topics), comps

    def test_schema_and_means(self, standard_corpus, paired_96):
        report, comps = self.labeled_report(standard_corpus, paired_96)
        assert set(report) == {
            "metric",
            "n_queries",
            "mean_recall_at_k",
            "mean_rank_correlation",
            "queries",
        }
        assert report["metric"] == "cosine"
        assert report["n_queries"] == 4
        assert report["mean_recall_at_k"] == pytest.approx(
            sum(c.recall_at_k for c in comps) / 4
        )
        entry = report["queries"][0]
        assert entry["dims"] == [768, 96]
        assert set(entry["latencies"]) == {"original_ns", "reduced_ns"}
        assert "purity" in entry
        assert 0.0 <= entry["purity"]["original"] <= 1.0
        json.dumps(report)  # must serialize as-is

    def test_purity_only_for_labeled_queries(self, standard_corpus, paired_96):
        records, labels = standard_corpus
        _, vec = synthetic_query("alpha")
        comps = compare_queries(paired_96, [vec, vec], k=3, query_keys=["with", "out"])
        report = comparison_report(
            comps, Metric.COSINE, labels=labels, query_topics={"with": "alpha"}
        )
        assert "purity" in report["queries"][0]
        assert "purity" not in report["queries"][1]

    def test_no_labels_no_purity(self, paired_96):
        _, vec = synthetic_query("alpha")
        comps = compare_queries(paired_96, [vec], k=3)
        report = comparison_report(comps, Metric.COSINE)
        assert "purity" not in report["queries"][0]

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            comparison_report([], Metric.L2)

    def test_table_layout(self, standard_corpus, paired_96):
        report, _ = self.labeled_report(standard_corpus, paired_96)
        table = render_comparison_table(report)
        lines = table.splitlines()
        assert lines[0].split() == [
            "query_key", "k", "factor", "recall@k", "spearman",
            "orig_us", "red_us", "orig_pur", "red_pur",
        ]
        assert set(lines[1]) <= {"-", " "}
        for key in ("alpha:q0", "beta:q1"):
            assert any(line.startswith(key) for line in lines)
        assert "mean recall@k" in lines[-1]

    def test_table_without_purity_drops_columns(self, paired_96):
        _, vec = synthetic_query("alpha")
        comps = compare_queries(paired_96, [vec], k=3)
        table = render_comparison_table(comparison_report(comps, Metric.COSINE))
        assert "orig_pur" not in table
