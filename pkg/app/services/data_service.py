from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd
from pydantic import field_validator, model_validator

from app.core.exceptions import PriceTableError
from app.engine.market import MarketPath, market_path_from_caps
from app.utils.dto.base import ArrayModel, readonly_array
from app.utils.logger import get_logger

logger = get_logger("services.data")


class PriceTable(ArrayModel):
    """Prices (or capitalizations) per period and asset; dates are opaque labels."""

    dates: List[str]
    assets: List[str]
    prices: np.ndarray

    @field_validator("prices", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly_array(value, ndim=2)

    @model_validator(mode="after")
    def _rectangular(self):
        rows, cols = self.prices.shape
        if rows < 2:
            raise ValueError(f"price table needs at least 2 rows, got {rows}")
        if cols < 2:
            raise ValueError(f"price table needs at least 2 assets, got {cols}")
        if len(self.dates) != rows or len(self.assets) != cols:
            raise ValueError("labels do not match the price matrix shape")
        if np.any(self.prices <= 0.0):
            row, col = (int(i) for i in np.argwhere(self.prices <= 0.0)[0])
            raise ValueError(f"nonpositive price at row {row}, column {self.assets[col]!r}")
        return self

    @property
    def T(self) -> int:
        return self.prices.shape[0]

    @property
    def n(self) -> int:
        return self.prices.shape[1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.prices, index=pd.Index(self.dates, name="date"), columns=self.assets)


class DataService:

    def ingest_csv(self, path: Union[str, Path]) -> PriceTable:
        """Read `date,asset_1,...,asset_n` rows of strictly positive decimal prices."""
        path = Path(path)
        if not path.is_file():
            raise PriceTableError(f"price file not found: {path}")
        try:
            frame = pd.read_csv(path, index_col=0, dtype=str, skipinitialspace=True, keep_default_na=False)
        except pd.errors.EmptyDataError as e:
            raise PriceTableError(f"price file {path} is empty") from e
        except pd.errors.ParserError as e:
            raise PriceTableError(f"malformed price file {path}: {e}") from e

        if frame.shape[1] < 2:
            raise PriceTableError(f"price file {path} needs at least 2 asset columns, got {frame.shape[1]}")
        if frame.shape[0] < 2:
            raise PriceTableError(f"price file {path} needs at least 2 rows, got {frame.shape[0]}")

        prices = np.empty(frame.shape)
        for j, column in enumerate(frame.columns):
            cells = frame[column].fillna("").str.strip()
            numeric = pd.to_numeric(cells, errors="coerce")
            missing = np.flatnonzero(cells.eq("").to_numpy())
            if missing.size:
                raise PriceTableError("missing price (ragged row)", row=int(missing[0]), column=str(column))
            garbled = np.flatnonzero(numeric.isna().to_numpy())
            if garbled.size:
                row = int(garbled[0])
                raise PriceTableError(f"not a number: {cells.iloc[row]!r}", row=row, column=str(column))
            nonpositive = np.flatnonzero((numeric <= 0).to_numpy())
            if nonpositive.size:
                row = int(nonpositive[0])
                raise PriceTableError(f"nonpositive price {numeric.iloc[row]:g}", row=row, column=str(column))
            prices[:, j] = numeric.to_numpy(dtype=float)

        table = PriceTable(dates=[str(d) for d in frame.index], assets=[str(c) for c in frame.columns], prices=prices)
        logger.info(f"Loaded {table.T} rows for assets {', '.join(table.assets)} from {path}")
        return table

    def normalize_to_barycenter(self, table: PriceTable) -> PriceTable:
        """Rescale each asset by 1 / price(0) so that the first market weights are all 1/n."""
        scaled = table.prices / table.prices[0]
        return PriceTable(dates=table.dates, assets=table.assets, prices=scaled)

    def market_path(self, table: PriceTable) -> MarketPath:
        return market_path_from_caps(table.prices)


data_service = DataService()


def ingest_csv(path: Union[str, Path]) -> PriceTable:
    return data_service.ingest_csv(path)


def normalize_to_barycenter(table: PriceTable) -> PriceTable:
    return data_service.normalize_to_barycenter(table)
