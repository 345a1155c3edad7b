import json
import math
import os
from pathlib import Path

import pytest

import metasdt

SOURCE = Path(os.environ.get("METASDT_SOURCE_DIR", Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="module")
def two_models():
    ideal = metasdt.simulate(d_gen=1.5, sigma_meta=0.0, n=3000, seed=1, model_id="ideal")
    noisy = metasdt.simulate(d_gen=1.5, sigma_meta=1.0, n=3000, seed=2, model_id="noisy")
    return ideal + noisy


def test_type1_closed_form():
    t = metasdt.type1(0.8, 0.4)
    assert t["d_prime"] == pytest.approx(1.09496833670871, abs=1e-12)
    assert t["c"] == pytest.approx(-0.294137065218557, abs=1e-12)


def test_m_ratio_and_auroc2():
    assert metasdt.m_ratio(1.361, 1.597) == pytest.approx(1.361 / 1.597)
    # Four correct-vs-incorrect pairs: three ordered, one tie.
    assert metasdt.auroc2([0.1, 0.5, 0.5, 0.9], [False, False, True, True]) == pytest.approx(0.875)


def test_trials_round_trip():
    t = metasdt.simulate(n=50, seed=4)
    assert len(t) == 50
    recs = t.records()
    back = metasdt.Trials(recs)
    assert back.to_jsonl() == t.to_jsonl()
    assert t[-1] == recs[-1]
    assert set(recs[0]) >= {"model_id", "question_id", "nlp", "correct"}
    with pytest.raises(IndexError):
        t[50]


def test_load_trials_and_duplicates(tmp_path):
    t = metasdt.simulate(n=20, seed=9)
    path = tmp_path / "trials.jsonl"
    path.write_text(t.to_jsonl())
    assert metasdt.load_trials(str(path)).to_jsonl() == t.to_jsonl()
    first = t.to_jsonl().splitlines()[0]
    path.write_text(t.to_jsonl() + first + "\n")
    with pytest.raises(metasdt.DuplicateRecord):
        metasdt.load_trials(str(path))
    assert issubclass(metasdt.DuplicateRecord, metasdt.MetasdtError)


def test_fit_recovers_ideal_observer():
    t = metasdt.simulate(d_gen=1.5, n=40000, seed=11)
    est = metasdt.fit(t)
    assert est["m_ratio"] == pytest.approx(1.0, abs=0.08)
    assert est["binning"]["k"] == 4
    assert len(est["binning"]["edges"]) == 7


def test_fit_counts_matches_fit():
    est = metasdt.fit_counts([120, 95, 70, 55, 40, 30, 20, 10], [15, 25, 35, 50, 70, 95, 120, 150])
    assert math.isfinite(est["fit"]["meta_d"])
    assert est["m_ratio"] == pytest.approx(est["fit"]["meta_d"] / est["fit"]["d_prime"])
    with pytest.raises(ValueError):
        metasdt.fit_counts([1, 2, 3], [1, 2, 3])


def test_bootstrap_is_reproducible():
    t = metasdt.simulate(d_gen=1.5, sigma_meta=0.5, n=2000, seed=5)
    a = metasdt.bootstrap(t, n_resamples=100, seed=3)
    b = metasdt.bootstrap(t, n_resamples=100, seed=3, threads=1)
    assert a == b
    m = a["m_ratio"]
    assert m["ci_low"] <= m["point"] <= m["ci_high"]


def test_tost_and_spearman():
    same = [1.0 + 0.001 * i for i in range(200)]
    assert metasdt.tost({"0.3": same, "1.0": same})["pass"]
    far = [v + 0.6 for v in same]
    assert not metasdt.tost({"0.3": same, "1.0": far})["pass"]
    assert metasdt.spearman([0.3, 0.5, 0.7, 1.0], [1.427, 1.478, 1.400, 1.361]) == pytest.approx(-0.8)


def test_robustness_r1(two_models):
    r = metasdt.robustness(two_models, "R1", k_values=[3, 6])
    assert r["check_id"] == "R1"
    assert r["ordering_preserved"] is True
    with pytest.raises(ValueError):
        metasdt.robustness(two_models, "R9")


def test_metrics_bundle(two_models):
    m = metasdt.metrics(two_models.filter(model_id="ideal"))
    assert 0.5 < m["auroc2"] <= 1.0
    assert 0.0 <= m["brier"] <= 1.0


def test_evaluate_report_matches_schema(two_models, tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    config = metasdt.default_config()
    config["bootstrap"]["n_resamples"] = 40
    report = metasdt.evaluate(two_models, config=config, threads=1)
    assert metasdt.validate_report(report) == []
    schema = json.loads((SOURCE / "docs" / "report.schema.json").read_text())
    jsonschema.validate(report, schema)
    verdicts = {h: report["hypotheses"][h]["verdict"] for h in ("H1", "H2", "H3", "H4")}
    assert set(verdicts.values()) <= {"supported", "partially supported", "not supported", "not evaluable"}
    written = metasdt.emit_report(report, tmp_path / "out", svg=True)
    assert "report.json" in written
    assert (tmp_path / "out" / "plots" / "dprime_vs_metad.svg").exists()
    broken = dict(report)
    del broken["cells"]
    assert metasdt.validate_report(broken)


def test_simulate_grid_fixture():
    grid = json.loads((SOURCE / "data" / "fixture_grid.json").read_text())
    for cell in grid.get("cells", []):
        cell["n"] = 100
    t = metasdt.simulate_grid(grid)
    assert len(t) > 0
