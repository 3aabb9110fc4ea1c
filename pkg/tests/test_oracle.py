from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from mlvec.model import CouplingPoint, ExternalMomenta, SliceConfig, SourceVector
from mlvec.oracle import (cumulant_oracle, log_partition_with_sources, mc_cross_check,
                          partition_function)


def _hypoexponential_log_z(g: float, N: int) -> float:
    """``Q = sum_p |phi_p|^2`` has density ``sum_p A_p p e^{-p q}``,
    ``A_p = prod_{q != p} q / (q - p)``; integrate ``e^{-(g/2)(Q - L)^2}`` over it."""
    ps = range(1, N + 1)
    L = sum(1 / p for p in ps)
    A = {p: math.prod(q / (q - p) for q in ps if q != p) for p in ps}

    def f(q):
        dens = sum(A[p] * p * math.exp(-p * q) for p in ps)
        return dens * math.exp(-0.5 * g * (q - L) ** 2)

    return math.log(integrate.quad(f, 0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0])


@pytest.mark.parametrize("jmax", [1, 2])
@pytest.mark.parametrize("g", [0.05, 0.3, 1.0])
def test_log_z_matches_phi_space_integral(jmax, g):
    sc = SliceConfig(2, jmax)
    val = cumulant_oracle(CouplingPoint.from_g(g), sc, ExternalMomenta([]))
    assert val.real == pytest.approx(_hypoexponential_log_z(g, sc.N), abs=1e-10)
    assert abs(val.imag) < 1e-14


def test_free_theory_values():
    sc = SliceConfig(2, 3)
    cp = CouplingPoint.from_g(0.0)
    assert partition_function(cp, sc) == pytest.approx(1.0, abs=1e-13)
    for p in sc.momenta:
        assert cumulant_oracle(cp, sc, ExternalMomenta([p])) == pytest.approx(1 / p, abs=1e-12)
    assert abs(cumulant_oracle(cp, sc, ExternalMomenta([1, 3]))) < 1e-12
    assert abs(cumulant_oracle(cp, sc, ExternalMomenta([2, 2, 5]))) < 1e-12


def test_cumulants_are_source_derivatives():
    sc = SliceConfig(2, 2)
    cp = CouplingPoint.from_g(0.2)
    h = 1e-4

    def logz(t1=0.0, t2=0.0):
        return log_partition_with_sources(cp, sc, SourceVector({1: (t1, 1.0), 3: (t2, 1.0)}))

    d1 = (logz(h) - logz(-h)) / (2 * h)
    assert d1 == pytest.approx(cumulant_oracle(cp, sc, ExternalMomenta([1])), abs=1e-7)
    d2 = (logz(h, h) - logz(h, -h) - logz(-h, h) + logz(-h, -h)) / (4 * h * h)
    assert d2 == pytest.approx(cumulant_oracle(cp, sc, ExternalMomenta([1, 3])), abs=1e-5)


def test_complex_conjugation_symmetry():
    sc, pm = SliceConfig(2, 2), ExternalMomenta([2, 3])
    cp = CouplingPoint.from_polar(0.3, 0.6)
    a = cumulant_oracle(cp, sc, pm)
    b = cumulant_oracle(cp.conjugate(), sc, pm)
    assert a == pytest.approx(b.conjugate(), abs=1e-13)


def test_error_estimate_is_reported():
    val, err = cumulant_oracle(CouplingPoint.from_g(0.1), SliceConfig(2, 2),
                               ExternalMomenta([1, 2]), with_error=True)
    assert 0 <= err < 1e-9


def test_monte_carlo_agrees_within_three_sigma():
    sc, pm = SliceConfig(2, 1), ExternalMomenta([1, 2])
    cp = CouplingPoint.from_g(0.1)
    est = mc_cross_check(cp, sc, pm, samples=200_000, seed=3)
    exact = cumulant_oracle(cp, sc, pm).real
    assert abs(est.cumulant - exact) < 3 * est.cumulant_err
    log_z = cumulant_oracle(cp, sc, ExternalMomenta([])).real
    assert abs(est.log_z - log_z) < 3 * est.log_z_err


def test_monte_carlo_is_reproducible():
    sc, pm, cp = SliceConfig(2, 1), ExternalMomenta([1]), CouplingPoint.from_g(0.05)
    a = mc_cross_check(cp, sc, pm, samples=10_000, seed=7)
    b = mc_cross_check(cp, sc, pm, samples=10_000, seed=7)
    assert a.cumulant == b.cumulant


def test_monte_carlo_needs_real_coupling():
    with pytest.raises(ValueError):
        mc_cross_check(CouplingPoint.from_g(0.1j), SliceConfig(2, 1), ExternalMomenta([1]))
