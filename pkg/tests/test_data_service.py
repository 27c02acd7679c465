import numpy as np
import pytest

from app.core.config import settings
from app.core.exceptions import PriceTableError
from app.services.data_service import DataService, PriceTable, ingest_csv, normalize_to_barycenter


@pytest.fixture
def write_csv(tmp_path):
    def write(text: str, name: str = "prices.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


class TestIngest:

    def test_well_formed(self, write_csv):
        table = ingest_csv(write_csv("date,A,B\n2020-01,1.0,2.0\n2020-02,1.5,2.5\n2020-03,2.0,1.0\n"))
        assert (table.T, table.n) == (3, 2)
        assert table.assets == ["A", "B"]
        assert table.dates == ["2020-01", "2020-02", "2020-03"]
        np.testing.assert_allclose(table.prices[1], [1.5, 2.5])

    def test_zero_price_names_row_and_column(self, write_csv):
        with pytest.raises(PriceTableError) as info:
            ingest_csv(write_csv("date,A,B\n2020-01,1.0,2.0\n2020-02,0,2.5\n"))
        assert info.value.row == 1
        assert info.value.column == "A"

    def test_garbled_cell(self, write_csv):
        with pytest.raises(PriceTableError) as info:
            ingest_csv(write_csv("date,A,B\n2020-01,1.0,2.0\n2020-02,1.5,abc\n"))
        assert info.value.column == "B"

    def test_ragged_row(self, write_csv):
        with pytest.raises(PriceTableError):
            ingest_csv(write_csv("date,A,B\n2020-01,1.0,2.0\n2020-02,1.5\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(PriceTableError):
            ingest_csv(tmp_path / "nope.csv")

    def test_too_few_assets(self, write_csv):
        with pytest.raises(PriceTableError):
            ingest_csv(write_csv("date,A\n2020-01,1.0\n2020-02,1.5\n"))

    def test_bundled_sample(self):
        table = ingest_csv(settings.SAMPLE_DATA_PATH)
        assert (table.T, table.n) == (333, 3)
        assert np.all(table.prices > 0)


class TestNormalization:

    def test_first_weights_become_equal(self):
        table = PriceTable(dates=["a", "b"], assets=["x", "y", "z"], prices=[[10.0, 20.0, 40.0], [11.0, 19.0, 42.0]])
        scaled = normalize_to_barycenter(table)
        np.testing.assert_allclose(scaled.prices[0], [1.0, 1.0, 1.0])
        path = DataService().market_path(scaled)
        np.testing.assert_allclose(path.points[0], np.full(3, 1.0 / 3.0))
        np.testing.assert_allclose(path.points[1], np.array([1.1, 0.95, 1.05]) / 3.1)

    def test_two_assets(self):
        table = PriceTable(dates=["a", "b"], assets=["x", "y"], prices=[[1.0, 3.0], [2.0, 3.0]])
        path = DataService().market_path(normalize_to_barycenter(table))
        np.testing.assert_allclose(path.points[0], [0.5, 0.5])

    def test_already_equal_row(self):
        table = PriceTable(dates=["a", "b"], assets=["x", "y"], prices=[[1.0, 1.0], [2.0, 3.0]])
        np.testing.assert_allclose(normalize_to_barycenter(table).prices, table.prices)

    def test_table_validation(self):
        with pytest.raises(ValueError):
            PriceTable(dates=["a"], assets=["x", "y"], prices=[[1.0, 1.0]])
        with pytest.raises(ValueError):
            PriceTable(dates=["a", "b"], assets=["x", "y"], prices=[[1.0, 1.0], [1.0, -1.0]])
