"""Report runner: exit codes, determinism, and record contents."""

import json
import re

import pytest

from zkamp.cli import dump_json, run

ZK_ARGS = ["zk-check", "--n", "3", "--g0", "01,12", "--g1", "01,02", "--trials", "5", "--seed", "7"]


def run_capture(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, out


def strip_timings(text: str) -> str:
    return re.sub(r'"timings": \{[^}]*\}', '"timings": {}', text)


class TestExitCodes:
    def test_zk_check_example(self, capsys):
        code, out = run_capture(capsys, ZK_ARGS)
        assert code == 0
        report = json.loads(out)
        assert report["pass"] is True
        view_records = [r for r in report["records"] if r["claim"] == "view-equality"]
        assert len(view_records) == 5
        for rec in view_records:
            assert rec["value"] <= 1e-10
            assert rec["transcript"]["accepted"] is True

    def test_verify_eq1_example(self, capsys):
        code, out = run_capture(
            capsys,
            ["verify-eq1", "--n", "2", "--g0", "01", "--g1", "01", "--trials", "1", "--seed", "1"],
        )
        assert code == 0
        report = json.loads(out)
        assert all(r["value"] <= 1e-10 for r in report["records"])

    def test_non_isomorphic_is_config_error(self, capsys):
        code = run(["zk-check", "--n", "3", "--g0", "01,12", "--g1", "01"])
        assert code == 2
        assert "not isomorphic" in capsys.readouterr().err

    def test_bad_literal_is_config_error(self, capsys):
        code = run(["zk-check", "--n", "3", "--g0", "0x", "--g1", "01,02"])
        assert code == 2

    def test_n_too_large_is_config_error(self, capsys):
        code = run(["zk-check", "--n", "5", "--g0", "01", "--g1", "01"])
        assert code == 2

    def test_trials_must_be_positive(self, capsys):
        code = run(["verify-eq1", "--n", "2", "--g0", "01", "--g1", "01", "--trials", "0"])
        assert code == 2

    def test_failed_check_exits_one(self, capsys):
        # A step budget of k=1 cannot amplify lambda = 0.05 exactly.
        code, out = run_capture(
            capsys, ["phases", "--lambdas", "0.05", "--k-max", "1", "--seed", "0"]
        )
        assert code == 1
        report = json.loads(out)
        assert report["pass"] is False
        assert report["records"][0]["single_step_feasible"] is False


class TestDeterminism:
    def test_reports_byte_identical_modulo_timings(self, capsys):
        _, first = run_capture(capsys, ZK_ARGS)
        _, second = run_capture(capsys, ZK_ARGS)
        assert strip_timings(first) == strip_timings(second)

    def test_seed_changes_report(self, capsys):
        _, first = run_capture(capsys, ZK_ARGS)
        _, second = run_capture(capsys, ZK_ARGS[:-1] + ["8"])
        assert strip_timings(first) != strip_timings(second)

    def test_env_seed_overrides_flag(self, capsys, monkeypatch):
        monkeypatch.setenv("ZKAMP_SEED", "7")
        _, env_based = run_capture(capsys, ZK_ARGS[:-1] + ["999"])
        monkeypatch.delenv("ZKAMP_SEED")
        _, flag_based = run_capture(capsys, ZK_ARGS)
        assert json.loads(env_based)["config"]["seed"] == 7
        assert strip_timings(env_based) == strip_timings(flag_based)

    def test_out_file_matches_stdout(self, capsys, tmp_path):
        path = tmp_path / "report.json"
        _, out = run_capture(capsys, ZK_ARGS + ["--out", str(path)])
        assert path.read_text() == out


class TestCommandContents:
    def test_verify_eq2_reports_both_orders(self, capsys):
        code, out = run_capture(
            capsys,
            ["verify-eq2", "--n", "3", "--g0", "01,12", "--g1", "01,02", "--trials", "2", "--seed", "3"],
        )
        assert code == 0
        report = json.loads(out)
        claims = {r["claim"] for r in report["records"]}
        assert claims == {
            "one-step-amplification",
            "post-step-success-probability",
            "operator-order-disambiguation",
        }
        for rec in report["records"]:
            if rec["claim"] == "operator-order-disambiguation":
                assert rec["value"] > 1e-6

    def test_watrous_records(self, capsys):
        code, out = run_capture(
            capsys,
            ["watrous", "--n", "3", "--g0", "01,12", "--g1", "02,12", "--trials", "1", "--seed", "4"],
        )
        assert code == 0
        report = json.loads(out)
        by_claim = {r["claim"]: r for r in report["records"]}
        assert abs(by_claim["first-measurement-probability"]["value"] - 0.5) <= 1e-10
        fid = by_claim["reflected-state-fidelity"]
        assert fid["value"] >= 1 - 1e-10
        # The reflection carries a global minus sign.
        assert fid["relative_phase"]["re"] == pytest.approx(-1.0, abs=1e-9)

    def test_blocks_toy_expected_lambda(self, capsys):
        code, out = run_capture(capsys, ["blocks", "--m", "5", "--trials", "1", "--seed", "2"])
        assert code == 0
        report = json.loads(out)
        top = [r for r in report["records"] if r["claim"] == "scalar-top-block"][0]
        assert top["value"] == pytest.approx(0.2, abs=1e-10)
        assert top["expected"] == pytest.approx(0.2)

    def test_blocks_needs_graphs_or_m(self, capsys):
        assert run(["blocks", "--seed", "0"]) == 2

    def test_schedule_flags_discrepancy_for_m_above_two(self, capsys):
        code, out = run_capture(capsys, ["schedule", "--m", "8", "--steps", "4", "--seed", "2"])
        assert code == 0
        report = json.loads(out)
        second = [r for r in report["records"] if r["claim"] == "second-measurement-probability"][0]
        assert second["discrepancy_flagged"] is True
        assert second["value"] == pytest.approx(0.4375, abs=1e-10)
        assert second["stated_form"] == pytest.approx(0.25)
        floor = [r for r in report["records"] if r["claim"] == "every-entry-at-least-lambda"][0]
        assert floor["pass"] is True

    def test_schedule_no_flag_at_m_two(self, capsys):
        code, out = run_capture(capsys, ["schedule", "--m", "2", "--steps", "3", "--seed", "2"])
        assert code == 0
        report = json.loads(out)
        second = [r for r in report["records"] if r["claim"] == "second-measurement-probability"][0]
        assert second["discrepancy_flagged"] is False
        assert second["value"] == pytest.approx(1.0, abs=1e-10)

    def test_phases_grid(self, capsys):
        code, out = run_capture(
            capsys, ["phases", "--lambdas", "0.1,0.5,0.9", "--seed", "0"]
        )
        assert code == 0
        report = json.loads(out)
        by_name = {r["name"]: r for r in report["records"]}
        assert by_name["exact-amplification-phases[lambda=0.5]"]["k"] == 1
        assert by_name["exact-amplification-phases[lambda=0.1]"]["single_step_feasible"] is False
        for rec in report["records"]:
            if rec["claim"] == "exact-amplification-phases":
                assert rec["value"] <= 1e-10
        assert by_name["single-step-feasibility-boundary"]["value"] == pytest.approx(0.5)

    def test_full_graph_literals_accepted(self, capsys):
        code, out = run_capture(
            capsys,
            ["verify-eq1", "--g0", "n=2;edges=01", "--g1", "n=2;edges=01", "--n", "2"],
        )
        assert code == 0


class TestJsonWriter:
    def test_float_formatting(self):
        assert dump_json(0.5) == "0.5"
        assert dump_json(1 / 3) == "0.33333333333333331"
        assert dump_json([True, None, 3]) == "[true, null, 3]"

    def test_complex_encoding(self):
        assert dump_json(1j) == '{"re": 0, "im": 1}'

    def test_round_trips_through_json(self):
        obj = {"a": [1.5, {"b": False}], "c": "text"}
        assert json.loads(dump_json(obj)) == obj
