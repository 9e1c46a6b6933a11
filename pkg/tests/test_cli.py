"""End-to-end command-line behaviour and emitted file formats."""

import os

import numpy as np
import pytest

from irrilearn import reports
from irrilearn.cli import main
from irrilearn.config import dump_config, load_config
from irrilearn.core import ActionSet
from irrilearn.cropsim import EnvConfig
from irrilearn.learner import replay_schedule
from irrilearn.policy import load_checkpoint
from irrilearn.weather import load_weather_dir

CONFIG_TEMPLATE = """
replicates = {replicates}

[architecture]
hidden_dims = [16]
init_scale = 0.1
normalize_inputs = true

[training]
episodes = {episodes}
alpha = 1e-5
ma_order = 5
seed = {seed}

[paths]
train_weather_dir = "{train_dir}"
test_weather_dir = "{test_dir}"
out_dir = "{out_dir}"
"""


def write_config(tmp_path, train_dir, test_dir, out_dir, episodes=8, seed=0, replicates=2):
    path = tmp_path / "run.toml"
    path.write_text(
        CONFIG_TEMPLATE.format(
            episodes=episodes,
            seed=seed,
            train_dir=train_dir,
            test_dir=test_dir,
            out_dir=out_dir,
            replicates=replicates,
        )
    )
    return str(path)


@pytest.fixture()
def run_config(tmp_path, train_weather_dir, test_weather_dir):
    out_dir = tmp_path / "out"
    return write_config(tmp_path, train_weather_dir, test_weather_dir, out_dir)


class TestTrainCommand:
    def test_writes_checkpoint_log_and_summary(self, run_config, tmp_path):
        rc = main(["train", "--config", run_config, "--episodes", "6", "--seed", "0"])
        assert rc == 0
        out = tmp_path / "out"
        assert (out / "checkpoint.bin").exists()
        rows = reports.read_trainlog_csv(out / "trainlog.csv")
        assert len(rows) == 6
        assert (out / "summary.txt").exists()
        assert (out / "resolved_config.toml").exists()

    def test_missing_weather_dir_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, tmp_path / "nowhere", tmp_path / "nowhere", tmp_path / "o")
        rc = main(["train", "--config", cfg])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("error: config:")
        assert "nowhere" in err

    def test_byte_identical_reruns(self, tmp_path, train_weather_dir, test_weather_dir):
        outs = []
        for name in ("a", "b"):
            out_dir = tmp_path / name
            cfg = write_config(tmp_path, train_weather_dir, test_weather_dir, out_dir)
            assert main(["train", "--config", cfg, "--episodes", "5"]) == 0
            outs.append(out_dir)
        log_a = (outs[0] / "trainlog.csv").read_bytes()
        log_b = (outs[1] / "trainlog.csv").read_bytes()
        assert log_a == log_b
        ck_a = (outs[0] / "checkpoint.bin").read_bytes()
        ck_b = (outs[1] / "checkpoint.bin").read_bytes()
        assert ck_a == ck_b


class TestEvaluateCommand:
    @pytest.fixture()
    def trained(self, run_config, tmp_path):
        assert main(["train", "--config", run_config, "--episodes", "5"]) == 0
        return run_config, tmp_path / "out"

    def test_results_and_traces(self, trained, test_weather_dir):
        cfg, out = trained
        rc = main(["evaluate", "--config", cfg, "--checkpoint", str(out / "checkpoint.bin")])
        assert rc == 0
        results = reports.read_results_csv(out / "results.csv")
        years = [y.year_id for y in load_weather_dir(test_weather_dir).years]
        assert [r["year"] for r in results] == years
        traces = sorted(os.listdir(out / "traces"))
        assert len(traces) == len(years) * 2  # replicates = 2
        header, rows = reports.read_trace_csv(out / "traces" / traces[0])
        assert header[0] == "Day" and len(rows) >= 1

    def test_trace_header_matches_daily_report_layout(self, trained):
        cfg, out = trained
        assert main(["evaluate", "--config", cfg, "--checkpoint", str(out / "checkpoint.bin")]) == 0
        name = sorted(os.listdir(out / "traces"))[0]
        first = (out / "traces" / name).read_text().splitlines()[0]
        assert first == (
            "Day,Stage,LAI,ESW1,ESW2,ESW3,ESW4,ESW5,CuIrrig,CuRain,Action,"
            "p0,p10,p20,p30,p40"
        )

    def test_benchmark_column_and_ratio(self, trained, tmp_path):
        cfg, out = trained
        bench_path = tmp_path / "bench.csv"
        results_first = None
        assert main(["evaluate", "--config", cfg, "--checkpoint", str(out / "checkpoint.bin")]) == 0
        base = reports.read_results_csv(out / "results.csv")
        rows = [
            {"year": r["year"], "benchmark_profit": r["test_profit_mean"] * 2, "episodes_used": 1}
            for r in base
        ]
        reports.write_benchmarks_csv(rows, bench_path)
        assert main(
            [
                "evaluate", "--config", cfg,
                "--checkpoint", str(out / "checkpoint.bin"),
                "--benchmarks", str(bench_path),
            ]
        ) == 0
        merged = reports.read_results_csv(out / "results.csv")
        for row in merged:
            assert row["benchmark"] == pytest.approx(row["test_profit_mean"] * 2)
            assert row["performance_pct"] == 50

    def test_arch_mismatch_rejected(self, trained, tmp_path, capsys):
        cfg_path, out = trained
        other_cfg = tmp_path / "other.toml"
        other_cfg.write_text(
            (open(cfg_path).read()).replace("hidden_dims = [16]", "hidden_dims = [8]")
        )
        rc = main(
            ["evaluate", "--config", str(other_cfg), "--checkpoint", str(out / "checkpoint.bin")]
        )
        assert rc == 2
        assert "architecture" in capsys.readouterr().err

    def test_paper_format_rounds_columns(self, trained):
        cfg, out = trained
        assert main(
            [
                "evaluate", "--config", cfg,
                "--checkpoint", str(out / "checkpoint.bin"),
                "--paper-format",
            ]
        ) == 0
        name = sorted(os.listdir(out / "traces"))[0]
        line = (out / "traces" / name).read_text().splitlines()[1]
        cells = line.split(",")
        assert "." not in cells[3]  # ESW columns are whole mm
        assert cells[1].count(".") == 1 and len(cells[1].split(".")[1]) == 1


class TestBenchmarkCommand:
    def test_rows_schedules_and_replay(self, run_config, tmp_path, test_weather_dir):
        out = tmp_path / "out"
        rc = main(["benchmark", "--config", run_config, "--budget", "12"])
        assert rc == 0
        bench = reports.read_benchmarks_csv(out / "benchmarks.csv")
        pool = load_weather_dir(test_weather_dir)
        assert sorted(bench) == [y.year_id for y in pool.years]
        env = EnvConfig()
        for year in pool.years:
            schedule_path = out / f"schedule_{year.year_id}.csv"
            actions = reports.read_schedule_csv(schedule_path, ActionSet())
            replayed = replay_schedule(env, year, actions)
            assert replayed.profit == bench[year.year_id]
        assert (out / "benchmark_meta.toml").exists()

    def test_year_filter(self, run_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["benchmark", "--config", run_config, "--budget", "3", "--years", "1992"])
        assert rc == 0
        bench = reports.read_benchmarks_csv(out / "benchmarks.csv")
        assert list(bench) == [1992]

    def test_unknown_year_rejected(self, run_config, capsys):
        rc = main(["benchmark", "--config", run_config, "--budget", "3", "--years", "1893"])
        assert rc == 2


class TestInspectCommand:
    def test_describes_checkpoint(self, run_config, tmp_path, capsys):
        assert main(["train", "--config", run_config, "--episodes", "3"]) == 0
        capsys.readouterr()
        rc = main(["inspect", "--checkpoint", str(tmp_path / "out" / "checkpoint.bin")])
        assert rc == 0
        text = capsys.readouterr().out
        assert "parameters: " in text
        assert "architecture: 9 -> 16 -> 5" in text

    def test_not_a_checkpoint(self, tmp_path, capsys):
        junk = tmp_path / "junk.bin"
        junk.write_bytes(b"garbage!" * 16)
        rc = main(["inspect", "--checkpoint", str(junk)])
        assert rc == 3
        assert "not a checkpoint" in capsys.readouterr().err


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[training]\nepisodess = 5\n")
        rc = main(["train", "--config", str(bad)])
        assert rc == 2
        assert "episodess" in capsys.readouterr().err

    def test_resolved_config_round_trips(self, run_config, tmp_path):
        assert main(["train", "--config", run_config, "--episodes", "3", "--seed", "5"]) == 0
        echoed = tmp_path / "out" / "resolved_config.toml"
        cfg = load_config(str(echoed))
        assert cfg.training.seed == 5
        assert cfg.training.episodes == 3
        assert cfg.architecture.normalize_inputs is True
        # echo of the echo is identical
        assert dump_config(cfg) == echoed.read_text()

    def test_missing_config_file(self, capsys):
        rc = main(["train", "--config", "/no/such/file.toml"])
        assert rc == 2
