import numpy as np
import pytest

import oracles
from rbir import cli, pipeline, store, synth
from rbir.errors import (
    InvalidParameterError,
    MalformedFileError,
    PaletteMismatchError,
)
from rbir.imgproc import Image, save_ppm

CFG = pipeline.BuildConfig(size=64)


@pytest.fixture(scope="module")
def small_index(tmp_path_factory):
    root = tmp_path_factory.mktemp("small")
    corpus = root / "corpus"
    synth.make_corpus(corpus, 4, 5, 64)
    prefix = root / "idx"
    report = pipeline.build_index(corpus, prefix, CFG)
    return {"corpus": corpus, "prefix": prefix, "report": report,
            "index": pipeline.load_index(prefix)}


class TestBuild:
    def test_single_image_corpus(self, tmp_path):
        corpus = tmp_path / "one"
        corpus.mkdir()
        save_ppm(synth.synth_image(0, 0, 5, 64), corpus / "a.ppm")
        report = pipeline.build_index(corpus, tmp_path / "idx", CFG)
        assert report.count == 1
        index = pipeline.load_index(tmp_path / "idx")
        assert index.tree.root.is_leaf
        assert len(index.tree.root.entries) == 1
        assert list(index.paths.items()) == [(1, "a.ppm")]

    def test_rebuild_byte_identical(self, small_index, tmp_path):
        prefix2 = tmp_path / "again"
        pipeline.build_index(small_index["corpus"], prefix2, CFG)
        for kind in ("sig", "tree", "cat"):
            a = pipeline.index_files(small_index["prefix"])[kind]
            b = pipeline.index_files(prefix2)[kind]
            assert open(a, "rb").read() == open(b, "rb").read()

    def test_undecodable_files_skipped(self, tmp_path, caplog):
        corpus = tmp_path / "mixed"
        corpus.mkdir()
        save_ppm(synth.synth_image(0, 0, 5, 64), corpus / "good.ppm")
        (corpus / "broken.ppm").write_bytes(b"P6\n9 9\n255\nshort")
        report = pipeline.build_index(corpus, tmp_path / "idx", CFG)
        assert report.count == 1
        assert report.skipped == 1

    def test_empty_corpus_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(InvalidParameterError):
            pipeline.build_index(empty, tmp_path / "idx", CFG)

    def test_counters_nonnegative(self, small_index):
        c = small_index["report"].counters
        assert c.emd_evals >= 0 and c.splits >= 0 and c.unions >= 0


class TestQuery:
    def test_self_retrieval(self, small_index):
        index = small_index["index"]
        oid, path = 7, small_index["index"].paths[7]
        res = pipeline.query(index, small_index["corpus"] / path, 5)
        assert res.ranked[0][0] == oid
        assert res.ranked[0][2] == 0.0

    def test_top_k_larger_than_candidates(self, small_index):
        index = small_index["index"]
        res = pipeline.query(index, small_index["corpus"] / index.paths[1], 10_000)
        assert len(res.ranked) <= len(index.records)
        assert len(res.ranked) >= 1

    def test_top_k_validated(self, small_index):
        with pytest.raises(InvalidParameterError):
            pipeline.query_signature(small_index["index"],
                                     small_index["index"].records[0].sig, 0)

    def test_candidate_reranking_matches_oracle_restriction(self, small_index):
        index = small_index["index"]
        for rec in index.records[::3]:
            res = pipeline.query_signature(index, rec.sig, len(index.records))
            cand_oids = {oid for _, oid in index.tree.search(rec.sig)}
            scan = [(d, oid) for d, oid in pipeline.linear_scan(index, rec.sig)
                    if oid in cand_oids]
            got = [(d, oid) for oid, _, d in
                   [(o, p, d) for o, p, d in res.ranked]]
            assert [(oid, d) for d, oid in scan] == [(oid, d) for d, oid in got]

    def test_solid_color_ranking(self, tmp_path):
        corpus = tmp_path / "solids"
        corpus.mkdir()
        colors = {
            "red.ppm": (1.0, 0.0, 0.0),
            "darkred.ppm": (0.55, 0.0, 0.0),
            "blue.ppm": (0.0, 0.3, 1.0),
            "green.ppm": (0.3, 1.0, 0.0),
        }
        for name, color in colors.items():
            px = np.broadcast_to(np.asarray(color), (64, 64, 3)).copy()
            save_ppm(Image(64, 64, px), corpus / name)
        prefix = tmp_path / "idx"
        pipeline.build_index(corpus, prefix, CFG)
        index = pipeline.load_index(prefix)
        res = pipeline.query(index, corpus / "red.ppm", 4)
        names = [p for _, p, _ in res.ranked]
        assert names[0] == "red.ppm"
        assert names[1] == "darkred.ppm"  # red family before blue/green


class TestEvaluate:
    def test_labels_and_metrics(self, small_index):
        index = small_index["index"]
        labels = pipeline.read_labels(small_index["corpus"] / "labels.tsv", index.paths)
        report = pipeline.evaluate(index, labels, [1, 4])
        assert report.mean_precision[1] == 1.0  # nearest neighbour is a classmate
        for row in report.rows:
            assert 0.0 <= row.precision <= 1.0
            if row.recall is not None:
                assert 0.0 <= row.recall <= 1.0
        csv = report.to_csv()
        assert csv.startswith("oid,label,k,")
        assert "mean,," in csv

    def test_harness_matches_independent_recomputation(self, small_index):
        index = small_index["index"]
        labels = pipeline.read_labels(small_index["corpus"] / "labels.tsv", index.paths)
        class_sizes = {}
        for oid in index.paths:
            class_sizes[labels[oid]] = class_sizes.get(labels[oid], 0) + 1
        report = pipeline.evaluate(index, labels, [3])
        for row in report.rows:
            res = pipeline.query_signature(index, index.sigs[row.oid], 3,
                                           exclude_oid=row.oid)
            ranked = [oid for oid, _, _ in res.ranked]
            p, r = oracles.precision_recall(ranked, row.label, labels, 3,
                                            class_sizes[row.label])
            assert row.precision == pytest.approx(p)
            assert row.recall == pytest.approx(r)

    def test_singleton_classes_skip_recall(self, tmp_path):
        corpus = tmp_path / "solo"
        corpus.mkdir()
        for i in range(3):
            save_ppm(synth.synth_image(i, 0, 5, 64), corpus / f"i{i}.ppm")
        prefix = tmp_path / "idx"
        pipeline.build_index(corpus, prefix, CFG)
        index = pipeline.load_index(prefix)
        labels = {1: "a", 2: "b", 3: "c"}
        report = pipeline.evaluate(index, labels, [1])
        assert all(row.recall is None for row in report.rows)
        assert report.mean_recall[1] is None

    def test_duplicate_image_pair(self, tmp_path):
        corpus = tmp_path / "dup"
        corpus.mkdir()
        img = synth.synth_image(0, 0, 5, 64)
        save_ppm(img, corpus / "a.ppm")
        save_ppm(img, corpus / "b.ppm")
        prefix = tmp_path / "idx"
        pipeline.build_index(corpus, prefix, CFG)
        index = pipeline.load_index(prefix)
        labels = {1: "same", 2: "same"}
        report = pipeline.evaluate(index, labels, [1])
        for row in report.rows:
            assert row.precision == 1.0
            assert row.recall == 1.0

    def test_missing_labels_rejected(self, small_index):
        with pytest.raises(InvalidParameterError):
            pipeline.evaluate(small_index["index"], {1: "x"}, [1])

    def test_read_labels_by_oid(self, small_index, tmp_path):
        p = tmp_path / "labels.tsv"
        lines = [f"{oid}\tclassX" for oid in small_index["index"].paths]
        p.write_text("\n".join(lines) + "\n")
        labels = pipeline.read_labels(p, small_index["index"].paths)
        assert set(labels.values()) == {"classX"}

    def test_read_labels_unknown_image(self, small_index, tmp_path):
        p = tmp_path / "labels.tsv"
        p.write_text("nonexistent.ppm\tfoo\n")
        with pytest.raises(MalformedFileError):
            pipeline.read_labels(p, small_index["index"].paths)


class TestIndexLoading:
    def test_stored_beam_default(self, small_index, tmp_path):
        cfg = pipeline.BuildConfig(size=64, beam="1")
        prefix = tmp_path / "beam1"
        pipeline.build_index(small_index["corpus"], prefix, cfg)
        index = pipeline.load_index(prefix)
        assert index.config.beam == "1"
        res = pipeline.query_signature(index, index.records[0].sig, 3)
        height = index.tree.stats().height
        assert res.nodes_visited == height + 1  # single-path traversal

    def test_palette_mismatch_rejected(self, small_index, tmp_path):
        other = tmp_path / "pal.txt"
        other.write_text("0 0 0\n1 1 1\n")
        with pytest.raises(PaletteMismatchError):
            pipeline.load_index(small_index["prefix"], palette_path=other)

    def test_stats_csv(self, small_index):
        csv = pipeline.stats_csv(small_index["index"], probes=5)
        assert "build_ms" in csv
        assert "nodes_visited" in csv
        for line in csv.splitlines()[1:]:
            scope, oid, metric, value = line.split(",")
            assert float(value) >= 0.0


class TestCli:
    def test_full_cli_cycle(self, tmp_path, capsys):
        corpus = tmp_path / "c"
        assert cli.main(["gen", "--out", str(corpus), "--classes", "2",
                         "--per-class", "3", "--size", "64"]) == 0
        assert cli.main(["build", "--corpus", str(corpus), "--out",
                         str(tmp_path / "idx"), "--size", "64"]) == 0
        img = next(corpus.glob("*.ppm"))
        assert cli.main(["query", "--index", str(tmp_path / "idx"),
                         "--image", str(img), "--top", "3", "--oracle"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[-3].startswith("1\t")
        assert cli.main(["eval", "--index", str(tmp_path / "idx"),
                         "--labels", str(corpus / "labels.tsv"), "--k", "1,2"]) == 0
        assert cli.main(["stats", "--index", str(tmp_path / "idx"),
                         "--probes", "3"]) == 0
        assert cli.main(["bench", "--colors", "8", "--instances", "20",
                         "--repeats", "1"]) == 0

    def test_error_exit_codes(self, tmp_path):
        assert cli.main(["query", "--index", str(tmp_path / "missing"),
                         "--image", "x.ppm"]) == 3
        corpus = tmp_path / "c2"
        cli.main(["gen", "--out", str(corpus), "--classes", "1",
                  "--per-class", "2", "--size", "64"])
        cli.main(["build", "--corpus", str(corpus), "--out", str(tmp_path / "i2"),
                  "--size", "64"])
        pal = tmp_path / "p.txt"
        pal.write_text("0 0 0\n1 1 1\n")
        assert cli.main(["query", "--index", str(tmp_path / "i2"),
                         "--image", "x.ppm", "--palette", str(pal)]) == 6
        empty = tmp_path / "emptydir"
        empty.mkdir()
        assert cli.main(["build", "--corpus", str(empty),
                         "--out", str(tmp_path / "i3")]) == 2
