import math

import numpy as np
import pytest

from thinphase.quadrature import QuadratureError, integrate


def test_polynomial_exact():
    val, err = integrate(lambda x: 7 * x ** 6 - 3 * x ** 2, 0.0, 2.0)
    assert val == pytest.approx(2 ** 7 - 8, rel=1e-14)
    assert err < 1e-10


def test_smooth_functions():
    assert integrate(math.exp, 0.0, 1.0)[0] == pytest.approx(math.e - 1, rel=1e-13)
    assert integrate(lambda t: 1 / (1 + t), 0.0, 1.0)[0] == pytest.approx(math.log(2), rel=1e-13)


def test_jump_at_breakpoint_is_exact():
    f = lambda t: 1.0 if t < 0.3 else 5.0
    val, _ = integrate(f, 0.0, 1.0, breakpoints=[0.3])
    assert val == pytest.approx(0.3 + 3.5, rel=1e-14)


def test_array_valued():
    val, _ = integrate(lambda t: np.array([[1.0, t], [t, t * t]]), 0.0, 3.0)
    assert np.allclose(val, [[3.0, 4.5], [4.5, 9.0]], rtol=1e-14)


def test_empty_and_reversed_interval():
    val, err = integrate(lambda t: np.ones(2), 1.0, 1.0)
    assert np.array_equal(val, np.zeros(2)) and err == 0.0
    with pytest.raises(ValueError):
        integrate(math.exp, 1.0, 0.0)


def test_reports_failure():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda t: 1.0 / math.sqrt(t) if t > 0 else 0.0, 0.0, 1.0, rtol=1e-15, max_depth=3)
    assert info.value.error_estimate > 0
