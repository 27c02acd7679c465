import csv
import json

import pytest

from app.core.config import settings
from app.services.backtest_service import BacktestService
from app.services.data_service import DataService, PriceTable
from app.services.report_service import ReportService, emit_report
from app.utils.dto.config import RunConfig
from app.utils.dto.records import BacktestRecord, report_columns
from app.workers.pool import SweepWorkerPool

RECORD = BacktestRecord(t=0, mu=[0.5, 0.5], value=1.0, drift=0.0, div_step=0.0, div_cum=0.0, residual=0.0)


@pytest.fixture(scope="module")
def round_trip_records():
    table = PriceTable(dates=["0", "1", "2"], assets=["A", "B"], prices=[[1.0, 1.0], [1.2, 0.8], [1.0, 1.0]])
    return BacktestService().run_backtest(RunConfig(scheme="multiplicative"), table).records


def test_single_record_csv(tmp_path):
    path = emit_report([RECORD], tmp_path / "one.csv", "csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(report_columns(2))
    assert lines[0] == "t,mu_1,mu_2,value,drift,div_step,div_cum,residual"


def test_csv_and_json_agree(tmp_path, round_trip_records):
    service = ReportService()
    csv_path = service.emit_report(round_trip_records, tmp_path / "r.csv", "csv")
    json_path = service.emit_report(round_trip_records, tmp_path / "r.json", "json")
    with open(csv_path, newline="", encoding="utf-8") as handle:
        from_csv = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(handle)]
    from_json = json.loads(json_path.read_text(encoding="utf-8"))
    assert len(from_csv) == len(from_json) == 3
    for a, b in zip(from_csv, from_json):
        assert list(a) == list(b)
        assert all(a[k] == float(b[k]) for k in a)


def test_residuals_are_small(tmp_path, round_trip_records):
    path = ReportService().emit_report(round_trip_records, tmp_path / "r.json", "json")
    assert all(abs(row["residual"]) < 1e-9 for row in json.loads(path.read_text(encoding="utf-8")))


def test_deterministic(tmp_path, round_trip_records):
    service = ReportService()
    first = service.emit_report(round_trip_records, tmp_path / "a.csv").read_bytes()
    second = service.emit_report(round_trip_records, tmp_path / "b.csv").read_bytes()
    assert first == second


def test_twelve_significant_digits(tmp_path):
    record = RECORD.model_copy(update={"value": 1.0 / 3.0})
    path = emit_report([record], tmp_path / "third.csv")
    assert "0.333333333333," in path.read_text(encoding="utf-8")


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report([RECORD], tmp_path / "x.xml", "xml")


def test_empty_records(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "empty.csv")


def test_sweep_writes_one_file_per_series(tmp_path):
    table = DataService().ingest_csv(settings.SAMPLE_DATA_PATH)
    result = BacktestService(pool=SweepWorkerPool(2)).run_sweep(RunConfig(alpha=[0.0, 0.5]), table)
    paths = ReportService().emit_sweep(result, tmp_path / "sweep", "json")
    assert sorted(p.name for p in paths) == ["alpha_0.5.json", "alpha_0.json", "reference.json"]
