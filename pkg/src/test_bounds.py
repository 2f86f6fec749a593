import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from src import bounds, sdp_core
from src.errors import ChannelError, SolverError


def test_parse_ids_orders_and_validates():
    assert bounds.parse_ids("qTheta,qGamma") == ("qGamma", "qTheta")
    assert bounds.parse_ids(["upsilon"]) == ("upsilon",)
    with pytest.raises(ValueError):
        bounds.parse_ids("qGamma,qFoo")
    with pytest.raises(ValueError):
        bounds.parse_ids("")


def test_chain_checks():
    good = bounds.chain_checks({"kappaPPTp": 2.0, "qGamma": 1.0, "qTheta": 1.0})
    assert [c.passed for c in good] == [True, True]
    bad = bounds.chain_checks({"kappaPPTp": 4.0, "qGamma": 1.0, "qTheta": 0.5})
    assert [c.passed for c in bad] == [False, False]
    assert bounds.chain_checks({"qGamma": 1.0}) == ()


def test_report_of_identity(identity2):
    rep = bounds.report(identity2, ["qGamma", "qTheta"])
    assert rep.values["qGamma"] == pytest.approx(1.0, abs=1e-6)
    assert rep.values["qTheta"] == pytest.approx(1.0, abs=1e-6)
    assert rep.ok
    data = json.loads(rep.to_json())
    assert data["dims"] == [2, 2]
    assert set(data["wall_times"]) == {"qGamma", "qTheta"}
    assert "wall_times" not in rep.to_dict(timing=False)


def test_report_records_failures(identity2, monkeypatch):
    def failing_gamma(*args, **kwargs):
        raise SolverError("Gamma identity(2)", None, "solver diverged")

    monkeypatch.setattr(bounds, "gamma", failing_gamma)
    rep = bounds.report(identity2, ["qGamma", "qTheta"])
    assert "solver diverged" in rep.errors["qGamma"]
    assert rep.values["qTheta"] == pytest.approx(1.0, abs=1e-6)
    assert not rep.ok


def test_report_records_malformed_problem(identity2, monkeypatch):
    def malformed(*args, **kwargs):
        return sdp_core.SdpProblem((2,), (np.eye(2),), (sp.csr_matrix((3, 1)),), np.array([1.0]), label="cb-norm")

    monkeypatch.setattr(bounds, "cb_norm_pt", malformed)
    rep = bounds.report(identity2, ["qGamma", "qTheta"])
    assert "cb-norm" in rep.errors["qTheta"]
    assert rep.values["qGamma"] == pytest.approx(1.0, abs=1e-6)


def test_ordering_suite_records_failed_bounds(monkeypatch):
    def partial_report(ch, requested, settings=None):
        return bounds.BoundReport(ch.name, (ch.dim_in, ch.dim_out), tuple(requested), values={"qGamma": 1.0},
                                  errors={"qTheta": "block 0 data is not symmetric"})

    monkeypatch.setattr(bounds, "report", partial_report)
    result = bounds.verify_suite("ordering", quick=True)["ordering"]
    assert not result.passed
    assert math.isinf(result.margin)
    assert all("qTheta: block 0" in c.detail for c in result.cases)


def test_sweep_rows_are_ordered():
    rows = bounds.sweep("nr", [0.3, 0.0], ["qGamma"])
    assert [r.parameter for r in rows] == [0.0, 0.3]
    assert all(r.values["qGamma"] >= 0 for r in rows)


def test_sweep_rejects_bad_input():
    with pytest.raises(ChannelError):
        bounds.sweep("nr", [0.1, 0.7], ["qGamma"])
    with pytest.raises(ChannelError):
        bounds.sweep("depolarizing", [0.1], ["qGamma"])


def test_sweep_csv_file(tmp_path):
    rows = [bounds.SweepRow(0.0, {"qGamma": 1 / 3, "qTheta": 1.0}), bounds.SweepRow(0.25, {"qGamma": 0.5, "qTheta": 2.0})]
    path = bounds.write_sweep_csv(rows, tmp_path / "out" / "nr.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "param,qGamma,qTheta"
    assert lines[1] == "0,0.333333333333,1"
    again = bounds.read_sweep_csv(path)
    assert [r.parameter for r in again] == [0.0, 0.25]
    assert again[0].values["qGamma"] == pytest.approx(1 / 3, abs=1e-12)


def test_golden_files(tmp_path, monkeypatch):
    monkeypatch.setattr(bounds, "golden_path", tmp_path)
    rows = [bounds.SweepRow(0.1, {"qGamma": 0.75}), bounds.SweepRow(0.2, {"qGamma": 0.7})]
    assert bounds.compare_to_golden(rows, "nr") is None
    bounds.freeze_golden(rows, "nr")
    assert bounds.compare_to_golden(rows, "nr") == pytest.approx(0.0, abs=1e-12)
    moved = [bounds.SweepRow(0.1, {"qGamma": 0.76}), rows[1]]
    assert bounds.compare_to_golden(moved, "nr") == pytest.approx(0.01, abs=1e-9)


@pytest.mark.slow
def test_erasure_dimension_check_finds_no_matching_dimension():
    res = bounds.erasure_dimension_check()
    assert res.values[3] == pytest.approx(1.0, abs=1e-5)
    assert res.matches == ()
    assert res.implied_dimension == pytest.approx(2 ** 2.123 - 1, abs=1e-3)


def test_parse_suites():
    assert bounds.parse_suites("lemma1,duality") == ("duality", "lemma1")
    with pytest.raises(ValueError):
        bounds.parse_suites("duality,nosuch")


def test_verify_suite_reports_failures(monkeypatch):
    monkeypatch.setitem(bounds._SUITE_RUNNERS, "duality",
                        lambda seed, quick, settings: [bounds.VerifyCase("forced", False, -1.0, "x")])

    def aborted(seed, quick, settings):
        raise SolverError("lemma", None, "no convergence")

    monkeypatch.setitem(bounds._SUITE_RUNNERS, "lemma1", aborted)
    results = bounds.verify_suite("duality,lemma1")
    assert not results["duality"].passed
    assert results["duality"].margin == -1.0
    assert not results["lemma1"].passed
    assert "no convergence" in results["lemma1"].cases[0].detail
    assert math.isinf(results["lemma1"].margin)


@pytest.mark.slow
def test_duality_suite_passes():
    result = bounds.verify_suite(["duality"], seed=42, quick=True)["duality"]
    assert result.passed, [c for c in result.cases if not c.passed]
    assert result.to_dict()["name"] == "duality"


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["additivity", "prop1", "theorem1", "theorem2", "lemma1", "ordering", "graph_invariance"])
def test_property_suites_pass(suite):
    result = bounds.verify_suite([suite], seed=42, quick=True)[suite]
    assert result.passed, [c for c in result.cases if not c.passed]


@pytest.mark.slow
def test_nr_sweep_matches_frozen_curve():
    rows = bounds.sweep("nr", bounds.DEFAULT_NR_GRID, ["qGamma", "qTheta"])
    gaps = [r.values["qTheta"] - r.values["qGamma"] for r in rows]
    assert min(gaps) >= -1e-6
    assert max(gaps) > 0.01
    # the first run that passes the ordering checks freezes data/golden/nr_sweep.csv
    if bounds.compare_to_golden(rows, "nr_sweep") is None:
        bounds.freeze_golden(rows, "nr_sweep")
    assert bounds.compare_to_golden(rows, "nr_sweep") <= 1e-6


@pytest.mark.slow
def test_full_additivity_suite():
    result = bounds.verify_suite(["additivity"], seed=42)["additivity"]
    assert len(result.cases) == 24
    assert result.passed, [c for c in result.cases if not c.passed]
