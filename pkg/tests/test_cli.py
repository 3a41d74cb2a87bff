import json

import pytest
import yaml
from typer.testing import CliRunner

import querylab
from querylab.cli import app, run

runner = CliRunner()


@pytest.fixture
def out(tmp_path):
    """Path for an emitted document."""
    return tmp_path / "result.json"


def read_records(path):
    return json.loads(path.read_text())


class TestTopLevel:
    def test_version(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert f"querylab v{querylab.__version__}" in result.output

    def test_help_lists_commands(self):
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        for command in ("gram", "dk-sweep", "sww", "cgt", "adversary", "reduce"):
            assert command in result.output


class TestSpectraCommands:
    def test_gram_brute_check(self, out):
        """'gram' reports agreeing routes and brute-force agreement."""
        result = runner.invoke(
            app, ["gram", "--n", "12", "--k", "9", "--brute-check", "--out", str(out)]
        )
        assert result.exit_code == 0
        record = read_records(out)[0]
        assert record["brute_check"]["agrees"] is True
        assert record["D_direct"] == pytest.approx(record["D_plancherel"], rel=1e-6)
        assert record["schema"] == 1

    def test_gram_several_k(self, out):
        result = runner.invoke(
            app, ["gram", "--n", "8", "--k", "3", "--k", "6", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert [r["k"] for r in read_records(out)] == [3, 6]

    def test_gram_precision_warning(self, out):
        """A precision alarm prints a warning but only fails under --strict."""
        args = ["gram", "--n", "9", "--k", "6", "--precision-budget", "1e-300"]
        result = runner.invoke(app, args + ["--out", str(out)])
        assert result.exit_code == 0
        assert "Warning" in result.output

        result = runner.invoke(app, args + ["--out", str(out), "--strict"])
        assert result.exit_code == 3

    def test_dk_sweep_csv(self, tmp_path):
        path = tmp_path / "dk.csv"
        result = runner.invoke(
            app,
            ["dk-sweep", "--n-min", "4", "--n-max", "12", "--format", "csv"]
            + ["--out", str(path)],
        )
        assert result.exit_code == 0
        lines = path.read_text().splitlines()
        assert lines[0].startswith("schema,command,n,k,a,D_direct")
        assert len(lines) == 1 + 9


class TestQueryCommands:
    def test_cgt_single_one(self, out):
        """With k = 1 every trial costs exactly one query."""
        result = runner.invoke(
            app,
            ["cgt", "--n", "1000", "--k", "1", "--trials", "100", "--seed", "7"]
            + ["--out", str(out)],
        )
        assert result.exit_code == 0
        records = read_records(out)
        assert len(records) == 100
        assert sum(r["queries"] for r in records) / 100 == 1.0
        assert "mean queries 1," in result.output

    def test_cgt_summary(self, out):
        result = runner.invoke(
            app,
            ["cgt", "--n", "400", "--k", "2", "--k", "8", "--trials", "10", "--summary"]
            + ["--out", str(out)],
        )
        assert result.exit_code == 0
        records = read_records(out)
        assert [r["k"] for r in records] == [2, 8]
        assert all(r["recovered"] == 10 for r in records)

    def test_cgt_classical(self, out):
        result = runner.invoke(
            app,
            ["cgt-classical", "--n", "256", "--k", "4", "--trials", "5"]
            + ["--out", str(out)],
        )
        assert result.exit_code == 0
        assert all(r["queries"] <= r["upper_bound"] for r in read_records(out))

    def test_sww_stdout_document(self):
        result = runner.invoke(app, ["sww", "--n", "16", "--trials", "2"])
        assert result.exit_code == 0
        assert '"command": "sww"' in result.output

    def test_sww_trace(self, out):
        result = runner.invoke(
            app, ["sww", "--n", "16", "--trials", "1", "--trace", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert '"running_count": 1' in result.output

    def test_sww_ledger_mode(self, out):
        result = runner.invoke(
            app,
            ["sww", "--n", "128", "--trials", "3", "--mode", "ledger"]
            + ["--out", str(out)],
        )
        assert result.exit_code == 0
        assert all(r["recovered"] for r in read_records(out))

    def test_reduce(self, out):
        result = runner.invoke(
            app, ["reduce", "--k", "6", "--trials", "5", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert all(r["recovered"] for r in read_records(out))

    def test_adversary(self, out):
        result = runner.invoke(app, ["adversary", "--n", "4", "--out", str(out)])
        assert result.exit_code == 0
        record = read_records(out)[0]
        assert record["bound"] == 2.0
        assert record["argmin_witness"]["subset_size"] == 4


class TestConfigFiles:
    def test_file_supplies_defaults(self, tmp_path, out):
        config = tmp_path / "config.yaml"
        config.write_text(yaml.safe_dump({"n": 3, "out": str(out)}))
        result = runner.invoke(app, ["adversary", "--config", str(config)])
        assert result.exit_code == 0
        assert read_records(out)[0]["n"] == 3

    def test_flags_override_file(self, tmp_path, out):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"n": 3}))
        result = runner.invoke(
            app, ["adversary", "--config", str(config), "--n", "2", "--out", str(out)]
        )
        assert result.exit_code == 0
        assert read_records(out)[0]["config"]["n"] == 2

    def test_unknown_key(self, tmp_path):
        config = tmp_path / "config.yaml"
        config.write_text("shots: 5\n")
        result = runner.invoke(app, ["adversary", "--config", str(config)])
        assert result.exit_code == 1
        assert "Error" in result.output


class TestErrors:
    def test_budget_exceeded(self):
        result = runner.invoke(app, ["adversary", "--n", "11"])
        assert result.exit_code == 2
        assert "Error" in result.output

    def test_bad_format(self):
        result = runner.invoke(app, ["cgt", "--format", "xml"])
        assert result.exit_code == 1

    def test_unwritable_output(self, tmp_path):
        path = tmp_path / "missing" / "out.json"
        result = runner.invoke(app, ["adversary", "--n", "2", "--out", str(path)])
        assert result.exit_code == 2
        assert not path.exists()


class TestRun:
    def test_success(self, out):
        assert run(["adversary", "--n", "3", "--out", str(out)]) == 0
        assert out.exists()

    def test_unknown_command(self):
        assert run(["plot"]) == 1

    def test_unknown_flag(self):
        assert run(["cgt", "--shots", "3"]) == 1

    def test_usage_error_is_reported(self, capsys):
        assert run(["plot"]) == 1
        assert "No such command" in capsys.readouterr().err

    def test_runtime_error(self):
        assert run(["adversary", "--n", "11"]) == 2

    def test_strict_precision(self, out):
        args = ["gram", "--n", "11", "--k", "8", "--precision-budget", "1e-300"]
        assert run(args + ["--strict", "--out", str(out)]) == 3

    def test_version(self):
        assert run(["--version"]) == 0


class TestDeterminism:
    @pytest.mark.parametrize(
        "args",
        [
            ["sww", "--n", "32", "--trials", "3", "--seed", "9"],
            ["cgt", "--n", "200", "--k", "5", "--trials", "3", "--seed", "9"],
            ["reduce", "--k", "4", "--trials", "3", "--seed", "9"],
            ["dk-sweep", "--n-min", "2", "--n-max", "6", "--format", "csv"],
        ],
    )
    def test_byte_identical_reruns(self, tmp_path, args):
        first, second = tmp_path / "first", tmp_path / "second"
        assert runner.invoke(app, args + ["--out", str(first)]).exit_code == 0
        assert runner.invoke(app, args + ["--out", str(second)]).exit_code == 0
        assert first.read_bytes() == second.read_bytes()
