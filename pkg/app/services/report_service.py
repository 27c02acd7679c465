import json
from pathlib import Path
from typing import Dict, List, Literal, Sequence, Union

import pandas as pd

from app.core.config import settings
from app.utils.dto.records import BacktestRecord, SweepResult, report_columns
from app.utils.logger import get_logger, log_report_write

logger = get_logger("services.report")

ReportFormat = Literal["csv", "json"]


class ReportService:

    def __init__(self, digits: int = settings.REPORT_SIGNIFICANT_DIGITS):
        self.digits = digits

    def _round(self, x: float) -> float:
        return float(f"{x:.{self.digits}g}")

    def to_frame(self, records: Sequence[BacktestRecord]) -> pd.DataFrame:
        if not records:
            raise ValueError("no records to report")
        n = len(records[0].mu)
        return pd.DataFrame([r.flat() for r in records], columns=report_columns(n))

    def to_json_rows(self, records: Sequence[BacktestRecord]) -> List[Dict[str, float]]:
        frame = self.to_frame(records)
        rows = []
        for record in frame.to_dict(orient="records"):
            rows.append({k: int(v) if k == "t" else self._round(v) for k, v in record.items()})
        return rows

    def emit_report(self, records: Sequence[BacktestRecord], path: Union[str, Path],
                    fmt: ReportFormat = "csv") -> Path:
        """Write records as CSV (header `t,mu_1..mu_n,value,drift,div_step,div_cum,residual`) or JSON."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            self.to_frame(records).to_csv(path, index=False, float_format=f"%.{self.digits}g", lineterminator="\n")
        elif fmt == "json":
            path.write_text(json.dumps(self.to_json_rows(records), indent=2) + "\n", encoding="utf-8")
        else:
            raise ValueError(f"Unknown report format: {fmt}")
        log_report_write(logger, str(path), fmt, len(records))
        return path

    def emit_sweep(self, result: SweepResult, directory: Union[str, Path], fmt: ReportFormat = "csv") -> List[Path]:
        """One file per series: alpha_<value>.<fmt> and reference.<fmt>."""
        directory = Path(directory)
        return [self.emit_report(s.records, directory / f"{s.summary.label}.{fmt}", fmt) for s in result.series]


report_service = ReportService()


def emit_report(records: Sequence[BacktestRecord], path: Union[str, Path], fmt: ReportFormat = "csv") -> Path:
    return report_service.emit_report(records, path, fmt)

