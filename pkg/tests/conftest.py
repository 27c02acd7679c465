import numpy as np
import pytest
from hypothesis import settings as hypothesis_settings

from app.engine.genfun import CrossEntropy, Diversity, NegHalfSqNorm
from app.engine.market import MarketPath
from app.utils.numerics import random_market_path

hypothesis_settings.register_profile("engine", max_examples=60, deadline=None)
hypothesis_settings.load_profile("engine")

BARYCENTER_2 = np.array([0.5, 0.5])
TILTED_2 = np.array([0.6, 0.4])


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(params=["cross_entropy", "neg_half_sq_norm", "diversity"])
def builtin(request):
    """Each builtin generating function on three assets."""
    return {
        "cross_entropy": CrossEntropy.equal_weight(3),
        "neg_half_sq_norm": NegHalfSqNorm(),
        "diversity": Diversity(0.5),
    }[request.param]


@pytest.fixture
def round_trip_path():
    return MarketPath([BARYCENTER_2, TILTED_2, BARYCENTER_2])


@pytest.fixture
def random_path(rng):
    def make(n: int = 4, steps: int = 200) -> MarketPath:
        return MarketPath(random_market_path(rng, n, steps))
    return make

