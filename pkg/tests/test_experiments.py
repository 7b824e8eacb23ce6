import csv
import math

import pytest

from finsler_quant import cli
from finsler_quant.experiments import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    decreasing_trend,
    emit_csv,
    run,
    thread_count,
)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_table_is_header_only(tmp_path):
    emit_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_HEADER) + "\n"


def test_points_on_reference_potential(tmp_path):
    out = tmp_path / "p.csv"
    res = run(ExperimentConfig("points", k_list=(1, 9), potentials=("flat:0",), out=str(out)))
    assert res.rows[0].value == pytest.approx(math.log(2), rel=1e-9)
    assert res.rows[1].value == pytest.approx(math.log(10) / 9, rel=1e-9)
    rows = read_rows(out)
    assert tuple(rows[0]) == CSV_HEADER
    assert [r[2] for r in rows[1:]] == ["1", "9"]
    assert all(r[8] == "" for r in rows[1:])  # no runtime unless asked


def test_csv_is_deterministic(tmp_path):
    cfg = dict(k_list=(4, 8, 16), t_list=(0.5, 0.25), potentials=("ua:0.5", "shift:1"))
    run(ExperimentConfig("geodesic", out=str(tmp_path / "a.csv"), **cfg))
    run(ExperimentConfig("geodesic", out=str(tmp_path / "b.csv"), **cfg))
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    ts = [r[3] for r in read_rows(tmp_path / "a.csv")[1:4]]
    assert ts == ["0.25", "0.5", "0.25"]  # sorted by k, then t


def test_timing_column(tmp_path):
    run(ExperimentConfig("distance", k_list=(4,), out=str(tmp_path / "t.csv"), timing=True))
    assert float(read_rows(tmp_path / "t.csv")[1][8]) >= 0


@pytest.mark.parametrize("kw", [
    dict(experiment="nope"),
    dict(experiment="points", p=0.5),
    dict(experiment="points", p=math.inf),
    dict(experiment="points", k_list=(8, 8)),
    dict(experiment="points", k_list=(0, 4)),
    dict(experiment="geodesic", t_list=(1.5,)),
    dict(experiment="points", grid_m=4),
    dict(experiment="points", seed=-1),
    dict(experiment="points", potentials=("ua:zero",)),
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_wrong_number_of_potentials_and_infinite_energy():
    with pytest.raises(ConfigError):
        run(ExperimentConfig("distance", k_list=(4,), potentials=("ua:0.5",)))
    with pytest.raises(ConfigError):
        run(ExperimentConfig("points", k_list=(4,), potentials=("lelong:0.3",)))


def test_decreasing_trend():
    assert decreasing_trend([0.5, 0.3, 0.2, 0.1])
    assert decreasing_trend([0.5, 0.3, 0.31, 0.1])
    assert not decreasing_trend([0.5, 0.6, 0.3, 0.4])
    assert decreasing_trend([0.5, 1e-12, 2e-12, 1e-12, 0.0])
    assert decreasing_trend([])


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("FINSLER_QUANT_THREADS", "1")
    assert thread_count() == 1
    monkeypatch.setenv("FINSLER_QUANT_THREADS", "x")
    with pytest.raises(ConfigError):
        thread_count()


def test_threads_do_not_change_results(tmp_path, monkeypatch):
    cfg = dict(k_list=(4, 8, 16, 32), potentials=("ua:0.5",))
    monkeypatch.setenv("FINSLER_QUANT_THREADS", "1")
    run(ExperimentConfig("points", out=str(tmp_path / "a.csv"), **cfg))
    monkeypatch.setenv("FINSLER_QUANT_THREADS", "4")
    run(ExperimentConfig("points", out=str(tmp_path / "b.csv"), **cfg))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_distance_between_equal_constants_is_exact():
    res = run(ExperimentConfig("distance", k_list=(2, 16), potentials=("flat:1", "flat:1")))
    assert all(r.value == 0.0 and r.abs_err == 0.0 for r in res.rows)


def test_distance_between_constants():
    res = run(ExperimentConfig("distance", p=2.0, k_list=(3, 30), potentials=("flat:0", "flat:-2")))
    assert all(r.value == pytest.approx(2.0, rel=1e-12) for r in res.rows)


def test_geodesic_between_constants_has_bergman_offset():
    res = run(ExperimentConfig("geodesic", k_list=(2, 8), t_list=(0.5,), potentials=("flat:0", "flat:1")))
    for r in res.rows:
        assert r.value == pytest.approx(math.log(r.k + 1) / r.k, rel=1e-8)


def test_rooftop_rows():
    res = run(ExperimentConfig("rooftop", k_list=(8, 16), potentials=("shift:1", "shift:-1")))
    assert res.extra["oracle"] == pytest.approx(0.25, rel=1e-9)
    assert {r.experiment for r in res.rows} == {"rooftop", "rooftop-distance"}
    only = run(ExperimentConfig("rooftop-distance", k_list=(8, 16), potentials=("shift:1", "shift:-1")))
    assert {r.experiment for r in only.rows} == {"rooftop-distance"}


def test_potential_lidskii_run():
    res = run(ExperimentConfig("lidskii-potential", p=2.0, n_samples=20, seed=3))
    assert res.passed and res.extra["min_gap"] >= -1e-8


def test_matrix_runs():
    res = run(ExperimentConfig("lidskii-matrix", n_samples=30, dim=6, seed=1))
    assert res.passed and all(1 <= r.k <= 6 for r in res.rows)
    suite = run(ExperimentConfig("matrix-suite", n_samples=10, dim=5))
    assert suite.passed
    assert all(r.experiment.startswith("matrix-suite:") for r in suite.rows)


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert cli.main(["run", "distance", "--k", "8,16", "--out", str(out)]) == 0
    assert out.exists()
    # an unreachable tolerance is a contract violation
    assert cli.main(["run", "points", "--k", "4,8", "--potential", "ua:0.5", "--tol", "1e-6"]) == 2
    assert cli.main(["run", "points", "--k", "4", "--potential", "lelong:0.2"]) == 3
    assert cli.main(["run", "points", "--k", "8,4"]) == 3
    assert cli.main(["run", "geodesic", "--k", "4", "--t", "2"]) == 3
    assert cli.main(["run", "points", "--potential", "file:/nonexistent/profile.txt"]) == 3
    assert cli.main(["check", "--only", "2"]) == 0
    assert "[PASS]  2" in capsys.readouterr().out
