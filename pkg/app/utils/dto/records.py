from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class BacktestRecord(BaseModel):
    """One time step of a run: market weights, value and decomposition terms."""

    model_config = ConfigDict(frozen=True)

    t: int
    mu: List[float]
    value: float
    drift: float
    div_step: float
    div_cum: float
    residual: float

    def flat(self) -> Dict[str, float]:
        """Column name -> value in report order (t, mu_1..mu_n, value, ...)."""
        row: Dict[str, float] = {"t": self.t}
        row.update({f"mu_{i + 1}": w for i, w in enumerate(self.mu)})
        row.update(value=self.value, drift=self.drift, div_step=self.div_step,
                   div_cum=self.div_cum, residual=self.residual)
        return row


def report_columns(n: int) -> List[str]:
    return ["t", *[f"mu_{i + 1}" for i in range(n)], "value", "drift", "div_step", "div_cum", "residual"]


class SeriesSummary(BaseModel):
    """Headline numbers of one backtest series."""

    label: str
    scheme: str
    alpha: Optional[float] = None
    C: Optional[float] = None
    steps: int
    initial_value: float
    final_value: float
    residual: float
    relative_residual: float
    truncated_at: Optional[int] = None


class BacktestSeries(BaseModel):
    summary: SeriesSummary
    records: List[BacktestRecord] = Field(default_factory=list)


class SweepResult(BaseModel):
    series: List[BacktestSeries]
    # labels sorted by final value, largest first
    final_value_order: List[str]

    @property
    def max_residual(self) -> float:
        return max((s.summary.relative_residual for s in self.series), default=0.0)
