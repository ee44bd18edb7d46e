import json
import math

import pytest

import logcog


def test_parse_line_and_normalize():
    rec = logcog.parse_line("- 1117838570 2005.06.03 R02-M1-N0 RAS KERNEL INFO ok")
    assert rec["anomaly"] is False
    assert rec["alert_tag"] is None
    bad = logcog.parse_line("KERNDTLB 1117838570 2005.06.03 R02 RAS KERNEL FATAL tlb error")
    assert bad["anomaly"] is True
    assert bad["alert_tag"] == "KERNDTLB"
    assert logcog.normalize("  A  b\tC ") == "A b C"
    with pytest.raises(logcog.LogcogError) as info:
        logcog.parse_line("   ")
    assert info.value.code == "EmptyLine"


def test_embedder_is_unit_length_and_deterministic():
    e = logcog.HashedNgramEmbedder()
    assert e.dimension == 256
    assert e.bucket("abc") == 75
    v = e.embed("disk failure on node 7")
    assert len(v) == 256
    assert math.isclose(sum(x * x for x in v), 1.0, rel_tol=1e-12)
    assert e.embed("  DISK failure on node 7\n") == v
    assert math.isclose(logcog.cosine(v, v), 1.0, rel_tol=1e-12)


def test_sampling_helpers():
    assert logcog.choose_k(200) == 10
    assert logcog.compute_quotas([600, 300, 100], 100) == [60, 30, 10]
    assert logcog.compute_quotas([1000, 1], 10) == [9, 1]
    pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] * 4
    model = logcog.kmeans(pts, k=3)
    assert model["inertia"] == 0.0
    assert len(set(model["assignments"])) == 3
    with pytest.raises(logcog.LogcogError):
        logcog.kmeans([])


def test_vector_store_roundtrip(tmp_path):
    e = logcog.HashedNgramEmbedder()
    store = logcog.VectorStore()
    texts = ["link up eth0", "disk full on node a", "job 17 finished"]
    for i, t in enumerate(texts):
        store.insert(i + 1, e.embed(t), t, {"label": "normal"})
    store.seal()
    hits = store.query(e.embed("disk full on node a"), k=2)
    assert hits[0]["entry_id"] == 2
    assert math.isclose(hits[0]["score"], 1.0, rel_tol=1e-12)
    path = tmp_path / "store.jsonl"
    store.save(path)
    again = logcog.VectorStore.load(path)
    assert len(again) == 3
    assert again.query(e.embed("job 17 finished"))[0]["text"] == "job 17 finished"


def test_strategies_and_verdicts():
    assert logcog.canonical_strategies() == ["{E,D}+R", "{D,E}+R", "E+D+R", "D+E+R"]
    assert logcog.strategy_chain("E+D+R") == ["Explain", "Decide", "Reflect"]
    assert logcog.parse_verdict("VERDICT: ANOMALY") == "ANOMALY"
    assert logcog.parse_verdict("hmm") == "UNPARSEABLE"


def test_run_strategy_with_oracle_mock():
    backend = logcog.MockBackend.oracle(0.85)
    low = logcog.run_strategy("D+E+R", backend, "kernel panic", "link up eth0", 0.2, record_id=9)
    assert low["verdict"] == "ANOMALY"
    assert low["record_id"] == 9
    assert len(low["stages"]) == 3
    high = logcog.run_strategy("{E,D}+R", backend, "link up eth0", "link up eth0", 1.0)
    assert high["verdict"] == "NORMAL"
    assert len(high["stages"]) == 2


def test_scripted_mock_runs_dry():
    backend = logcog.MockBackend.scripted(["VERDICT: NORMAL"])
    with pytest.raises(logcog.LogcogError):
        logcog.run_strategy("E+D+R", backend, "x", "y", 0.5)


def test_metrics():
    m = logcog.compute_metrics(tp=4, fp=1, tn=10, fn=4)
    assert math.isclose(m["f1"], 0.6153846153846154, rel_tol=1e-15)
    assert m["flags"] == []
    empty = logcog.compute_metrics(0, 0, 5, 0)
    assert "precision_undefined" in empty["flags"]


def test_cli_end_to_end(tmp_path):
    lines = [f"- 11178{i:05d} 2005.06.03 R0{i % 4}-M1 RAS KERNEL INFO job {i % 13} finished" for i in range(120)]
    lines += [f"KERNDTLB 11179{i:05d} 2005.06.03 R07-M0 RAS KERNEL FATAL tlb miss {i}" for i in range(20)]
    (tmp_path / "bgl.log").write_text("\n".join(lines) + "\n")
    cfg = {
        "dataset": {"path": str(tmp_path / "bgl.log"), "format": "bgl"},
        "output_dir": str(tmp_path / "out"),
    }
    (tmp_path / "config.json").write_text(json.dumps(cfg))
    base = ["--config", str(tmp_path / "config.json")]

    code, _, err = logcog.run_cli(["build-index", *base])
    assert code == 0, err
    code, out, err = logcog.run_cli(["evaluate", *base])
    assert code == 0, err
    assert "| Model |" in out
    report = (tmp_path / "out" / "report.json").read_text()
    assert logcog.render_report(report, "csv") == (tmp_path / "out" / "report.csv").read_text()
    assert logcog.run_cli(["frobnicate"])[0] == 2
