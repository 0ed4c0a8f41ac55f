import json
import os
import time

import pytest

from deferauction.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main


def write_scenario(tmp_path, name="scenario.json", **overrides):
    scenario = {
        "dataset": {"synthetic": {"n_sites": 80}},
        "scheme": {"seed": 7},
        "mechanisms": "both",
        "ranking": "benefit_cost",
        "budget": {"initial": 1_200_000.0, "upfront": "npv-matched"},
        "format": "both",
    }
    scenario.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(scenario), encoding="utf-8")
    return path


class TestRun:
    def test_default_scenario_shape(self, tmp_path, capsys):
        scenario = write_scenario(tmp_path)
        out_dir = tmp_path / "out"
        assert main(["run", str(scenario), "--out-dir", str(out_dir)]) == EXIT_OK
        summary = (out_dir / "summary.csv").read_text(encoding="utf-8").splitlines()
        assert len(summary) == 3
        assert (out_dir / "manifest.json").exists()
        assert (out_dir / "timeseries_deferred.csv").exists()
        assert (out_dir / "timeseries_upfront.csv").exists()
        console = capsys.readouterr().out
        assert "Deferred payments" in console and "Up-front payments" in console

    def test_omega_violation_exits_2(self, tmp_path):
        scenario = write_scenario(
            tmp_path,
            scheme={"interest_rate_r": 0.20, "lending_period_t": 10, "instalment_count_x": 5},
        )
        assert main(["run", str(scenario), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_missing_dataset_exits_3(self, tmp_path):
        scenario = write_scenario(tmp_path, dataset={"path": str(tmp_path / "absent.csv")})
        assert main(["run", str(scenario), "--out-dir", str(tmp_path / "o")]) == EXIT_IO

    def test_npv_matched_requires_deferred(self, tmp_path):
        scenario = write_scenario(tmp_path, mechanisms=["upfront"])
        assert main(["run", str(scenario), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_unknown_scenario_key_exits_2(self, tmp_path):
        scenario = write_scenario(tmp_path, extra_knob=1)
        assert main(["run", str(scenario), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_old_growth_with_ample_budget_conserves_all_offers_at_year_zero(self, tmp_path):
        scenario = write_scenario(
            tmp_path,
            dataset={"synthetic": {"n_sites": 150}},
            ranking="old_growth",
            mechanisms=["deferred"],
            budget={"initial": 1e9},
        )
        out_dir = tmp_path / "og"
        assert main(["run", str(scenario), "--out-dir", str(out_dir)]) == EXIT_OK
        payload = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        run = payload["runs"][0]
        statuses = {row["status"] for row in run["sites"]}
        assert statuses == {"conserved"}
        assert {row["year"] for row in run["sites"]} == {0}

    def test_upfront_only_with_explicit_budget(self, tmp_path):
        scenario = write_scenario(
            tmp_path, mechanisms=["upfront"], budget={"upfront": 600_000.0}
        )
        out_dir = tmp_path / "up"
        assert main(["run", str(scenario), "--out-dir", str(out_dir)]) == EXIT_OK
        lines = (out_dir / "summary.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("upfront,")

    def test_custom_elite_table_changes_selection_inputs(self, tmp_path):
        table = tmp_path / "elite.csv"
        table.write_text(
            "component,site_types,weight,reference\ndeadwood,all,1.0,20\n", encoding="utf-8"
        )
        base = write_scenario(tmp_path, name="base.json", mechanisms=["deferred"])
        custom = write_scenario(
            tmp_path, name="custom.json", mechanisms=["deferred"], elite_table=str(table)
        )
        base_dir, custom_dir = tmp_path / "base", tmp_path / "custom"
        assert main(["run", str(base), "--out-dir", str(base_dir)]) == EXIT_OK
        assert main(["run", str(custom), "--out-dir", str(custom_dir)]) == EXIT_OK
        base_sites = (base_dir / "sites_deferred.csv").read_text(encoding="utf-8")
        custom_sites = (custom_dir / "sites_deferred.csv").read_text(encoding="utf-8")
        assert base_sites != custom_sites

    def test_manifest_rerun_is_bit_identical(self, tmp_path):
        scenario = write_scenario(tmp_path)
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert main(["run", str(scenario), "--out-dir", str(first)]) == EXIT_OK
        assert main(["run", str(first / "manifest.json"), "--out-dir", str(second)]) == EXIT_OK
        for name in sorted(os.listdir(first)):
            assert (first / name).read_bytes() == (second / name).read_bytes()


class TestSweep:
    def test_default_grid_runs_and_consolidates(self, tmp_path):
        scenario = write_scenario(tmp_path, dataset={"synthetic": {"n_sites": 60}})
        out_dir = tmp_path / "sweep"
        assert (
            main(
                [
                    "sweep",
                    str(scenario),
                    "--out-dir",
                    str(out_dir),
                    "--interest-rates",
                    "0.02,0.03,0.04",
                    "--payment-periods",
                    "10,20",
                ]
            )
            == EXIT_OK
        )
        lines = (out_dir / "sweep.csv").read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 1 + 6
        header = lines[0].split(",")
        rate_col = header.index("interest_rate")
        period_col = header.index("payment_periods")
        offered_col = header.index("deferred_offered_area_ha")
        rows = [line.split(",") for line in lines[1:]]
        offered = {
            (row[rate_col], row[period_col]): float(row[offered_col]) for row in rows
        }
        # supply grows with the interest rate, shrinks with the payment period
        assert offered[("0.02", "10")] <= offered[("0.03", "10")] <= offered[("0.04", "10")]
        assert offered[("0.03", "20")] < offered[("0.03", "10")]

    def test_single_point_matches_standalone_run(self, tmp_path):
        scenario = write_scenario(tmp_path, dataset={"synthetic": {"n_sites": 60}})
        sweep_dir = tmp_path / "sweep"
        run_dir = tmp_path / "single"
        assert (
            main(
                [
                    "sweep",
                    str(scenario),
                    "--out-dir",
                    str(sweep_dir),
                    "--interest-rates",
                    "0.03",
                    "--payment-periods",
                    "10",
                ]
            )
            == EXIT_OK
        )
        assert main(["run", str(scenario), "--out-dir", str(run_dir)]) == EXIT_OK
        point_summary = (sweep_dir / "point_0000" / "summary.csv").read_bytes()
        standalone = (run_dir / "summary.csv").read_bytes()
        assert point_summary == standalone

    def test_failed_point_recorded_sweep_continues(self, tmp_path):
        scenario = write_scenario(tmp_path, dataset={"synthetic": {"n_sites": 40}})
        out_dir = tmp_path / "sweep"
        assert (
            main(
                [
                    "sweep",
                    str(scenario),
                    "--out-dir",
                    str(out_dir),
                    "--interest-rates",
                    "0.03,0.30",
                    "--payment-periods",
                    "10",
                ]
            )
            == EXIT_OK
        )
        import csv

        with open(out_dir / "sweep.csv", newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"].startswith("error")


class TestGenData:
    def test_deterministic_files(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(["gen-data", "--n", "400", "--seed", "1", "--out", str(a)]) == EXIT_OK
        assert main(["gen-data", "--n", "400", "--seed", "1", "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_output_loads_clean(self, tmp_path):
        path = tmp_path / "sites.csv"
        assert main(["gen-data", "--n", "400", "--seed", "1", "--out", str(path)]) == EXIT_OK
        assert main(["validate", str(path)]) == EXIT_OK

    def test_large_dataset_under_ten_seconds(self, tmp_path):
        path = tmp_path / "big.csv"
        start = time.monotonic()
        assert main(["gen-data", "--n", "100000", "--seed", "1", "--out", str(path)]) == EXIT_OK
        assert time.monotonic() - start < 10.0
        assert sum(1 for _ in open(path, encoding="utf-8")) == 100_001


class TestValidateCommand:
    def test_reports_issues(self, tmp_path, capsys):
        path = tmp_path / "sites.csv"
        path.write_text(
            "id,site_type,stand_age,stand_volume,dominant_species,broadleaf_share,deadwood,"
            "timber_value,opportunity_cost_v0,commercial_rotation_age\n"
            "ok,mesic_heath,100,250,conifer,0.2,10,6600,6000,95\n"
            "bad,mesic_heath,-4,250,conifer,0.2,10,6600,6000,95\n",
            encoding="utf-8",
        )
        assert main(["validate", str(path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "1 valid rows, 1 issues" in out
        assert "row 2" in out


class TestExtrapolate:
    def test_worked_numbers(self, capsys):
        code = main(
            [
                "extrapolate",
                "--area",
                "54000",
                "--avg-downpayment",
                "4050",
                "--avg-instalment",
                "681",
                "--upfront-annual-budget",
                "48000000",
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "218.7 M EUR" in out
        assert "36.8 M EUR" in out
        assert "532.4 M EUR" in out
        assert "457.4 M EUR" in out
        assert "5,022 ha" in out

    def test_nonpositive_area_exits_2(self):
        assert main(["extrapolate", "--area", "0", "--avg-downpayment", "1",
                     "--avg-instalment", "1", "--avg-upfront", "1"]) == EXIT_CONFIG

    def test_from_run_reads_averages(self, tmp_path):
        scenario = write_scenario(tmp_path)
        out_dir = tmp_path / "out"
        assert main(["run", str(scenario), "--out-dir", str(out_dir)]) == EXIT_OK
        code = main(
            ["extrapolate", "--area", "54000", "--from-run", str(out_dir / "summary.json")]
        )
        assert code == EXIT_OK


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
