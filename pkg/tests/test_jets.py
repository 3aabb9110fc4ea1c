from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlvec import jets
from mlvec.jets import Jet


def test_variable_derivatives():
    x = Jet.variable(0.3, 3)
    f = x * x * x
    assert f.derivative(1) == pytest.approx(3 * 0.09)
    assert f.derivative(2) == pytest.approx(6 * 0.3)
    assert f.derivative(3) == pytest.approx(6)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.5, 1.5))
def test_exp_log_expm1_match_closed_forms(x0):
    x = Jet.variable(x0, 4)
    e = jets.exp(x)
    for m in range(5):
        assert e.derivative(m) == pytest.approx(math.exp(x0))
    l = jets.log(x + 3.0)
    assert l.derivative(1) == pytest.approx(1 / (x0 + 3))
    assert l.derivative(3) == pytest.approx(2 / (x0 + 3) ** 3)
    em = jets.expm1(x * 0.5)
    assert em.value == pytest.approx(math.expm1(0.5 * x0))
    assert em.derivative(2) == pytest.approx(0.25 * math.exp(0.5 * x0))


def test_division_and_power_rules():
    x = Jet.variable(0.4, 3)
    f = 1 / (1 - x)
    for m in range(4):
        assert f.derivative(m) == pytest.approx(math.factorial(m) / 0.6 ** (m + 1))


def test_compose_linear():
    derivs = [math.exp(0.2)] * 4
    j = jets.compose_linear(derivs, 2.0, 3)
    assert j.derivative(3) == pytest.approx(8 * math.exp(0.2))


def test_batched_points():
    x = Jet.variable(np.array([0.1, 0.2, 0.3]), 2)
    f = jets.exp(x * 2)
    assert np.allclose(f.derivative(2), 4 * np.exp(2 * np.array([0.1, 0.2, 0.3])))
