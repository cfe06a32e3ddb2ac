import math

import numpy as np
import pytest

from errors import DomainError, LogDomainError
from lss_functions import (
    TestFunctionSpec,
    global_function,
    local_function,
    mollifier,
    mollifier_derivative,
)


# =============================================================================
# Mollifier
# =============================================================================


class TestMollifier:
    def test_plateau(self):
        assert mollifier(0.0, 1.0, 4.0) == 1.0
        assert mollifier(4.0, 1.0, 4.0) == 1.0
        assert mollifier(-4.0, 1.0, 4.0) == 1.0

    def test_vanishes_past_ramp(self):
        assert mollifier(5.0, 1.0, 4.0) == 0.0
        assert mollifier(-7.0, 1.0, 4.0) == 0.0

    def test_ramp_midpoint(self):
        assert mollifier(4.5, 1.0, 4.0) == pytest.approx(math.exp(1 - 4 / 3), rel=1e-12)
        assert mollifier(4.5, 1.0, 4.0) == pytest.approx(0.71653, abs=1e-5)

    def test_symmetric(self, rng):
        xs = rng.uniform(-6, 6, size=100)
        assert np.array_equal(mollifier(xs), mollifier(-xs))

    def test_derivative_matches_finite_difference(self):
        xs = np.array([-4.7, -4.2, 4.3, 4.9])
        h = 1e-6
        fd = (mollifier(xs + h) - mollifier(xs - h)) / (2 * h)
        assert np.allclose(mollifier_derivative(xs), fd, rtol=1e-5, atol=1e-8)
        assert mollifier_derivative(0.0) == 0.0

    @pytest.mark.parametrize("a, b", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
    def test_bad_parameters(self, a, b):
        with pytest.raises(DomainError):
            mollifier(0.0, a, b)


# =============================================================================
# TestFunctionSpec
# =============================================================================


class TestFunctionSpecBehaviour:
    def test_scaled_coordinates(self):
        tf = TestFunctionSpec(base="quadratic", center=12.0, eta0=0.5, a=1.0, b=4.0)
        assert tf(13.0) == pytest.approx(4.0)
        assert tf(12.0 + 0.5 * 4.5) == pytest.approx(4.5 ** 2 * mollifier(4.5))
        assert tf(12.0 + 0.5 * 6.0) == 0.0

    def test_derivative(self):
        tf = TestFunctionSpec(base="linear", center=1.0, eta0=0.25)
        x, h = 2.1, 1e-7
        fd = (tf(x + h) - tf(x - h)) / (2 * h)
        assert tf.derivative(x) == pytest.approx(fd, rel=1e-5)

    def test_analytic_agrees_on_plateau(self):
        tf = TestFunctionSpec(base="logshift", c=5.5, center=0.0, eta0=1.0)
        xs = np.linspace(-3.5, 3.5, 11)
        assert np.allclose(tf.analytic(xs).real, tf(xs))

    def test_log_domain(self):
        tf = TestFunctionSpec(base="log", c=2.0, center=0.0, eta0=1.0, a=1.0, b=4.0)
        with pytest.raises(LogDomainError):
            tf(-3.0)

    def test_h0(self):
        assert TestFunctionSpec(base="linear").h0() == 0.0
        assert TestFunctionSpec(base="logshift", c=math.e).h0() == pytest.approx(math.e - 1.0)

    def test_custom_needs_fn(self):
        with pytest.raises(DomainError):
            TestFunctionSpec(base="custom")
        tf = TestFunctionSpec(base="custom", fn=np.cos, dfn=lambda y: -np.sin(y), label="cos")
        assert tf.name == "cos"
        assert tf(0.0) == pytest.approx(1.0)

    def test_unknown_base(self):
        with pytest.raises(DomainError):
            TestFunctionSpec(base="cubic")

    def test_breakpoints_and_singularities(self):
        tf = TestFunctionSpec(base="log", c=3.0, center=10.0, eta0=2.0, a=1.0, b=4.0)
        assert tf.breakpoints() == (0.0, 2.0, 10.0, 18.0, 20.0)
        assert tf.singular_points() == (4.0,)


class TestConstructors:
    def test_global_linear_center(self):
        tf = global_function("linear", 100.0, c=3.0)
        assert tf.center == pytest.approx(10.1 - 3.0)
        # the mollifier is identically 1 over the support
        lo, hi = tf.window
        assert lo < 8.1 and hi > 12.1

    def test_global_log_uses_t(self):
        tf = global_function("log", 100.0, t=3.0)
        assert tf.c == pytest.approx(3 + 1 / 3)
        assert tf.center == pytest.approx(10.1)

    def test_global_log_needs_t_above_one(self):
        with pytest.raises(LogDomainError):
            global_function("logshift", 100.0, t=0.5)

    def test_local_defaults(self):
        tf = local_function("linear", 256, gamma_plus=12.1)
        assert tf.eta0 == pytest.approx(0.25)
        assert tf.center == 12.1

    def test_local_log_offset(self):
        tf = local_function("logshift", 256, gamma_plus=12.1, a=1.0, b=4.0, log_offset=0.5)
        assert tf.c == pytest.approx(5.5)
        # finite over the whole window
        xs = np.linspace(*tf.reach, 101)
        assert np.all(np.isfinite(tf(xs)))
