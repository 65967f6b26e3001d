import json
import math

import numpy as np
import pytest

from taraarch.cli import main
from taraarch.estimation import FitReport
from taraarch.model import param_vector
from taraarch.montecarlo import reference_spec
from taraarch.simulate import SimConfig, simulate_path


def run_cli(*argv):
    return main(list(argv))


def write_column(path, values, header=None):
    lines = ([header] if header else []) + [f"{v}" for v in values]
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture()
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(reference_spec().to_json())
    return path


class TestTransform:
    def test_log100_two_rows(self, tmp_path, capsys):
        src = tmp_path / "prices.csv"
        write_column(src, [100.0, 101.0], header="price")
        assert run_cli("transform", str(src), "--method", "log100") == 0
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(100 * math.log(1.01), abs=1e-12)

    def test_constant_column_gives_zeros(self, tmp_path, capsys):
        src = tmp_path / "prices.csv"
        write_column(src, [5.0, 5.0, 5.0])
        assert run_cli("transform", str(src), "--method", "relative") == 0
        values = [float(v) for v in capsys.readouterr().out.split()]
        assert values == [0.0, 0.0]

    def test_text_row_exits_1_naming_line(self, tmp_path, capsys):
        src = tmp_path / "prices.csv"
        src.write_text("price\n100\noops\n101\n")
        assert run_cli("transform", str(src), "--method", "log") == 1
        assert "line 3" in capsys.readouterr().err

    def test_domain_violation_exits_1_with_index(self, tmp_path, capsys):
        src = tmp_path / "prices.csv"
        write_column(src, [100.0, 0.0])
        assert run_cli("transform", str(src), "--method", "log100") == 1
        assert "index 1" in capsys.readouterr().err

    def test_output_file(self, tmp_path):
        src = tmp_path / "prices.csv"
        write_column(src, [1.0, 4.0])
        dst = tmp_path / "out.csv"
        assert run_cli("transform", str(src), "--method", "boxcox",
                       "--output", str(dst)) == 0
        assert [float(v) for v in dst.read_text().split()] == [0.0, 2.0]


class TestSimulate:
    def test_byte_identical_runs(self, tmp_path, spec_file):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ("simulate", "--spec", str(spec_file), "--n", "200", "--seed", "42")
        assert run_cli(*args, "--output", str(a)) == 0
        assert run_cli(*args, "--output", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[0] == "index,x,h,z"

    def test_canned_spec_by_name(self, tmp_path):
        out = tmp_path / "lynx.csv"
        assert run_cli("simulate", "--canned", "lynx", "--n", "50",
                       "--seed", "1", "--output", str(out)) == 0
        assert len(out.read_text().splitlines()) == 51

    def test_explosive_spec_exits_1_with_index(self, tmp_path, capsys):
        spec = reference_spec().to_dict()
        spec["alphas"] = [2.5]
        spec["betas"] = [0.4]
        path = tmp_path / "boom.json"
        path.write_text(json.dumps(spec))
        code = run_cli("simulate", "--spec", str(path), "--n", "5000", "--seed", "3")
        assert code == 1
        assert "step" in capsys.readouterr().err


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    sim = simulate_path(reference_spec(), SimConfig(n=2000, seed=404))
    path = tmp_path_factory.mktemp("fit") / "data.csv"
    path.write_text("\n".join(f"{v:.17g}" for v in sim.series.values) + "\n")
    return path


class TestFit:
    def test_fit_with_true_partition(self, data_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = run_cli("fit", str(data_file), "--p", "1", "--q", "1",
                       "--delay", "1", "--thresholds", "0.0",
                       "--output", str(out))
        assert code == 0
        report = FitReport.from_json(out.read_text())
        assert report.converged
        truth = param_vector(reference_spec())
        est = param_vector(report.spec)
        assert np.all(np.abs(est - truth) <= 3 * report.std_errors)

    def test_search_selects_true_delay(self, data_file, tmp_path):
        out = tmp_path / "search.json"
        code = run_cli("fit", str(data_file), "--p", "1", "--q", "1",
                       "--search", "--delays", "1,2,3", "--output", str(out))
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["search"]["selected_delay"] == 1
        assert any(row["selected"] for row in doc["search"]["candidates"])

    def test_csv_format(self, data_file, capsys):
        code = run_cli("fit", str(data_file), "--p", "1", "--q", "1",
                       "--delay", "1", "--thresholds", "0.0", "--format", "csv")
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "name,estimate,std_error"
        assert len(lines) == 8

    def test_too_short_input_is_usage_error(self, tmp_path, capsys):
        src = tmp_path / "short.csv"
        write_column(src, list(np.linspace(-1, 1, 30)))
        code = run_cli("fit", str(src), "--p", "1", "--q", "1",
                       "--delay", "1", "--thresholds", "0.0")
        assert code == 2
        assert "usage error" in capsys.readouterr().err

    def test_missing_partition_is_usage_error(self, data_file):
        assert run_cli("fit", str(data_file), "--p", "1", "--q", "1") == 2


class TestMc:
    def plan_doc(self, estimator="concentrated", replicates=3):
        return {
            "true_spec": reference_spec().to_dict(),
            "sample_sizes": [300],
            "replicates": replicates,
            "base_seed": 7,
            "estimator": estimator,
            "burn_in": 200,
        }

    def test_trivial_plan_single_row(self, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps(self.plan_doc(replicates=1)))
        prefix = tmp_path / "mc"
        assert run_cli("mc", str(plan), "--output", str(prefix)) == 0
        rows = (tmp_path / "mc_results.csv").read_text().splitlines()
        assert len(rows) == 2  # header + one replicate
        summary = json.loads((tmp_path / "mc_summary.json").read_text())
        assert summary["plan"]["replicates"] == 1

    def test_nonstationary_plan_warns(self, tmp_path, capsys):
        doc = self.plan_doc(replicates=1)
        doc["true_spec"]["alphas"] = [0.9]
        doc["true_spec"]["betas"] = [0.9]
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps(doc))
        prefix = tmp_path / "mc"
        with pytest.warns(UserWarning, match="stationarity"):
            run_cli("mc", str(plan), "--output", str(prefix))

    def test_failed_experiment_exits_4(self, tmp_path, monkeypatch):
        import taraarch.cli as cli_mod

        real = cli_mod.montecarlo.run_experiment

        def fail_all(plan, workers=1, compute_se=True):
            res = real(plan, workers=workers, compute_se=compute_se)
            return type(res)(
                plan=res.plan, names=res.names, truth=res.truth,
                rows=res.rows, summaries=res.summaries, failed=True,
            )

        monkeypatch.setattr(cli_mod.montecarlo, "run_experiment", fail_all)
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps(self.plan_doc(replicates=1)))
        assert run_cli("mc", str(plan), "--output", str(tmp_path / "mc")) == 4


class TestPrice:
    def test_zero_strike(self, capsys):
        assert run_cli("price", "--spot", "100", "--strike", "0",
                       "--rate", "0.05", "--sigma", "0.2", "--tau", "1") == 0
        assert float(capsys.readouterr().out) == 100.0

    def test_at_the_money(self, capsys):
        assert run_cli("price", "--spot", "100", "--strike", "100",
                       "--rate", "0", "--sigma", "0.2", "--tau", "1") == 0
        assert float(capsys.readouterr().out) == pytest.approx(7.965567455, abs=1e-6)

    def test_deep_out_of_money_limit(self, capsys):
        assert run_cli("price", "--spot", "80", "--strike", "90",
                       "--rate", "0", "--sigma", "1e-12", "--tau", "1") == 0
        assert float(capsys.readouterr().out) == pytest.approx(0.0, abs=1e-6)

    def test_domain_violation_exits_2(self, capsys):
        assert run_cli("price", "--spot", "-1", "--strike", "90",
                       "--rate", "0", "--sigma", "0.2", "--tau", "1") == 2


class TestExitCodeContract:
    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run_cli("price", "--bogus", "1")
        assert err.value.code == 2

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run_cli("frobnicate")
        assert err.value.code == 2

    def test_missing_input_file_is_data_error(self, tmp_path):
        assert run_cli("transform", str(tmp_path / "nope.csv"),
                       "--method", "log") == 1
