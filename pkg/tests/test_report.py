import csv
import io

import pytest

from ccforce import config as cfgmod
from ccforce.eval import SweepCurve, run_benchmark
from ccforce.report import (
    dumps_report,
    dumps_sweep,
    format_report,
    format_sweep,
    read_report,
    read_sweep,
    report_columns,
    sweep_csv,
    write_report,
)


@pytest.fixture(scope="module")
def report():
    cfg = cfgmod.from_dict(
        {"seed": 2, "scene": {"duration_s": 20.0}, "benchmark": {"n_train": 2, "n_test": 2}, "position": {"epochs": 3}}
    )
    return run_benchmark(cfg)


def test_text_report_lists_every_method(report):
    text = format_report(report)
    for tag in report.nrmse:
        assert tag in text
    for heading in ("Contact detection", "Position RMSE", "Stiffness (N/m)", "Force NRMSE"):
        assert heading in text


def test_report_json_round_trip(tmp_path, report):
    path = write_report(report, tmp_path)
    assert dumps_report(read_report(path)) == dumps_report(report)
    for name in ("report.txt", "nrmse.csv", "classification.csv", "position.csv", "stiffness.csv"):
        assert (tmp_path / name).exists()


def test_nrmse_columns(report):
    rows = list(csv.DictReader(io.StringIO(report_columns(report)["nrmse.csv"])))
    assert len(rows) == len(report.nrmse_rows)
    assert set(rows[0]) == {"demo", "method", "norm", "x", "y", "z"}


def test_sweep_outputs(tmp_path):
    curve = SweepCurve("contact", "pretrained", "accuracy", (50, 150), ((0.9, 0.92), (0.95, 0.96)), zero_shot=0.8)
    rows = list(csv.reader(io.StringIO(sweep_csv(curve))))
    assert rows[0] == ["size", "mean", "std", "repeat_0", "repeat_1"] and len(rows) == 3
    assert "before adaptation 0.8000" in format_sweep(curve)
    (tmp_path / "s.json").write_text(dumps_sweep(curve))
    assert read_sweep(tmp_path / "s.json") == curve
