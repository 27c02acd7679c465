import math

import pytest
from hypothesis import given, strategies as st

from app.core.exceptions import InvalidScaleFunctionError
from app.engine.geomtrans import scale_ode_residual
from app.engine.scale import (
    CallbackScale,
    ExpScale,
    LinearScale,
    PowerScale,
    ShiftedLogScale,
    alpha_c_scale,
    identity_scale,
    log_scale,
    ode_residual,
)


def test_log_one_plus_x_is_admitted():
    assert ode_residual(ShiftedLogScale(1.0, 1.0, 0.0), 2.0) == pytest.approx(0.0, abs=1e-15)


def test_identity_is_admitted():
    assert ode_residual(identity_scale(), 0.3) == 0.0


@pytest.mark.parametrize("g, expected", [
    (PowerScale(2.0), -8.0),
    (ExpScale(), -math.e ** 2),
    (PowerScale(0.5), 0.0625),
])
def test_foils_at_one(g, expected):
    assert scale_ode_residual(g, 1.0) == pytest.approx(expected, rel=1e-12)


@given(st.floats(min_value=0.01, max_value=5.0), st.floats(min_value=0.1, max_value=5.0),
       st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=0.01, max_value=50.0))
def test_shifted_logs_solve_the_ode(c1, c2, c3, x):
    g = ShiftedLogScale(c1, c2, c3)
    assert abs(ode_residual(g, x)) <= 1e-12 * g.d1(x) * abs(g.d3(x))


def test_finite_difference_callback():
    residual = scale_ode_residual(lambda x: math.log(1.0 + x), 2.0)
    assert residual == pytest.approx(0.0, abs=1e-4)
    assert scale_ode_residual(lambda x: x * x, 1.0) == pytest.approx(-8.0, abs=1e-4)


def test_decreasing_function_is_rejected():
    with pytest.raises(InvalidScaleFunctionError):
        ode_residual(CallbackScale("neg", lambda x: -x, d1=lambda x: -1.0), 1.0)


def test_point_outside_domain():
    with pytest.raises(InvalidScaleFunctionError):
        scale_ode_residual(log_scale(), -1.0)


def test_alpha_c_scale():
    g = alpha_c_scale(0.5, 2.0)
    assert g.value(1.0) == pytest.approx(2.0 * math.log(3.0))
    assert g.domain_lower_bound() == -2.0
    assert not g.in_domain(-2.0)
    with pytest.raises(InvalidScaleFunctionError):
        alpha_c_scale(0.0, 1.0)


def test_invalid_parameters():
    with pytest.raises(InvalidScaleFunctionError):
        LinearScale(0.0, 1.0)
    with pytest.raises(InvalidScaleFunctionError):
        ShiftedLogScale(-1.0, 1.0, 0.0)
