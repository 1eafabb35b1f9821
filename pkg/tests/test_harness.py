"""Experiment harness: config files, trace CSVs, metrics, end-to-end runs."""

import numpy as np
import pytest

from cglo import cli, harness
from cglo.driver import TraceRow

GOOD_CONFIG = """\
[experiment]
objective = paper1d
optimizers = rs
macroreps = 2
checkpoints = 30, 60
output_dir = {out}
seed = 0

[rs]
points = 6
reps_per_point = 10
total_budget = 60
"""


def _rows(dim=1):
    return [
        TraceRow(
            iteration=i,
            consumed_reps=10 * (i + 1),
            region=1,
            n_new_points=1,
            b1=2,
            b2=3,
            best_x=np.full(dim, 0.1 * i + 1 / 3),
            best_mean=-1.234567890123 * (i + 1),
            wall_ms=5.5,
        )
        for i in range(4)
    ]


def test_trace_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    rows = _rows(dim=2)
    harness.emit_trace_csv(rows, 2, path)
    header = path.read_text().splitlines()[0]
    assert header == "iter,consumed_reps,region,n_new_points,B1,B2,best_x1,best_x2,best_mean,wall_ms"
    back = harness.read_trace_csv(path)
    for a, b in zip(rows, back):
        assert a.iteration == b.iteration
        assert np.array_equal(a.best_x, b.best_x)  # repr round trip is exact
        assert a.best_mean == b.best_mean


def test_trace_csv_empty_trace_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    harness.emit_trace_csv([], 1, path)
    assert path.read_text().splitlines() == [
        "iter,consumed_reps,region,n_new_points,B1,B2,best_x1,best_mean,wall_ms"
    ]


def test_load_spec_and_fill(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(GOOD_CONFIG.format(out=tmp_path / "res"))
    spec = harness.load_spec(p)
    assert spec.objective == "paper1d"
    assert spec.optimizers == ["rs"]
    assert spec.checkpoints == [30, 60]
    assert spec.rs.points == 6
    assert spec.rs.total_budget == 60


def test_load_spec_missing_section(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[rs]\npoints = 3\n")
    with pytest.raises(harness.ConfigError, match="missing \\[experiment\\]"):
        harness.load_spec(p)


def test_validate_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(
        "[experiment]\n"
        "objective = paper1d\n"
        "optimizers = rs, warp-drive\n"
        "macroreps = 0\n"
        "checkpoints = 999\n"
        "\n[rs]\ntotal_budget = 60\nreps_per_point = 10\npoints = 6\n"
    )
    problems = harness.validate(p)
    text = "\n".join(problems)
    assert "warp-drive" in text
    assert "macroreps" in text
    assert "checkpoint 999 exceeds" in text
    assert f"{p}:3:" in text  # the unknown optimizer sits on line 3


def test_checkpoint_metrics():
    rows = _rows()
    true_opt = (np.array([0.5]), -5.0)
    consumed, dx, dy, complete = harness.checkpoint_metrics(rows, 25, true_opt)
    assert consumed == 20  # last row at or under the checkpoint
    assert complete
    row = rows[1]
    assert dx == pytest.approx(abs(row.best_x[0] - 0.5))
    assert dy == pytest.approx(abs(row.best_mean + 5.0))
    # with a surface function, dy is measured on the noise-free surface
    _, _, dy, _ = harness.checkpoint_metrics(
        rows, 25, true_opt, mean_fn=lambda x: 10.0 * x[0]
    )
    assert dy == pytest.approx(abs(10.0 * row.best_x[0] + 5.0))
    _, _, _, complete = harness.checkpoint_metrics(rows, 10_000, true_opt)
    assert not complete


def test_run_experiment_outputs(tmp_path):
    p = tmp_path / "exp.ini"
    out = tmp_path / "res"
    p.write_text(GOOD_CONFIG.format(out=out))
    spec = harness.load_spec(p)
    paths = harness.run_experiment(spec)
    results = paths["results"].read_text().splitlines()
    assert results[0] == "optimizer,rep,seed,checkpoint,consumed,dx,dy,complete"
    assert len(results) == 1 + 2 * 2  # 2 macroreps x 2 checkpoints
    summary = paths["summary"].read_text().splitlines()
    assert summary[0] == "optimizer,checkpoint,n,mean_dx,std_dx,mean_dy,std_dy"
    assert (out / "traces" / "rs_rep0.csv").exists()
    assert (out / "traces" / "rs_rep1.csv").exists()
    assert (out / "config_resolved.ini").exists()


def test_run_experiment_outputs_are_reproducible(tmp_path):
    cfg_text = GOOD_CONFIG.format(out=tmp_path / "a")
    (tmp_path / "a.ini").write_text(cfg_text)
    paths_a = harness.run_experiment(harness.load_spec(tmp_path / "a.ini"))
    cfg_text = GOOD_CONFIG.format(out=tmp_path / "b")
    (tmp_path / "b.ini").write_text(cfg_text)
    paths_b = harness.run_experiment(harness.load_spec(tmp_path / "b.ini"))
    assert paths_a["results"].read_text() == paths_b["results"].read_text()
    assert paths_a["summary"].read_text() == paths_b["summary"].read_text()


def test_cli_validate_good_and_bad(tmp_path, capsys):
    p = tmp_path / "exp.ini"
    p.write_text(GOOD_CONFIG.format(out=tmp_path / "res"))
    assert cli.main(["validate", str(p)]) == 0
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nobjective = mystery\n")
    assert cli.main(["validate", str(bad)]) == 2
    assert "mystery" in capsys.readouterr().err


def test_cli_optimize_rs_writes_trace(tmp_path, capsys):
    code = cli.main(
        [
            "optimize",
            "paper1d",
            "rs",
            "--seed",
            "1",
            "--budget",
            "60",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "best_x:" in out and "best_sample_mean:" in out
    assert (tmp_path / "rs_paper1d_seed1.csv").exists()


def test_cli_run_and_oracle(tmp_path, capsys):
    p = tmp_path / "exp.ini"
    p.write_text(GOOD_CONFIG.format(out=tmp_path / "res"))
    assert cli.main(["run", str(p)]) == 0
    out = capsys.readouterr().out
    assert "summary:" in out
    assert cli.main(["oracle", "paper1d", "--grid", "2000"]) == 0
    out = capsys.readouterr().out
    assert "argmin_x: 0.98" in out


def test_cli_missing_config_is_exit_2(capsys):
    assert cli.main(["run", "/nonexistent/conf.ini"]) == 2
