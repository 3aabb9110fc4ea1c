from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlvec.cumulants import cumulant_from_moments, mobius_coefficient, set_partitions

BELL = [1, 1, 2, 5, 15, 52]


@pytest.mark.parametrize("n", range(6))
def test_set_partition_counts(n):
    parts = list(set_partitions(range(n)))
    assert len(parts) == BELL[n]
    for p in parts:
        assert sorted(x for block in p for x in block) == list(range(n))


def test_mobius_coefficients():
    assert [mobius_coefficient(b) for b in range(1, 5)] == [1, -1, 2, -6]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_gaussian_cumulants_vanish_beyond_second(mean):
    # joint cumulants of a Gaussian vector: only orders 1 and 2 survive
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3))
    C = A @ A.T
    mu = np.array(mean)

    def moment(S):
        idx = sorted(S)
        # Isserlis with means
        def rec(ix):
            if not ix:
                return 1.0
            first, rest = ix[0], ix[1:]
            total = mu[first] * rec(rest)
            for i, other in enumerate(rest):
                total += C[first, other] * rec(rest[:i] + rest[i + 1:])
            return total
        return rec(idx)

    assert cumulant_from_moments([0], moment) == pytest.approx(mu[0])
    assert cumulant_from_moments([0, 1], moment) == pytest.approx(C[0, 1])
    assert cumulant_from_moments([0, 1, 2], moment) == pytest.approx(0.0, abs=1e-9)


def test_poisson_cumulants_all_equal_rate():
    # k-th cumulant of one Poisson variable is its rate; moments are Touchard polynomials
    rate = 0.7

    def moment(S):
        n = len(S)
        # E[X^n] = sum_k S(n,k) rate^k
        stirling = [[1]]
        for m in range(1, n + 1):
            row = [0] * (m + 1)
            for k in range(1, m + 1):
                row[k] = k * (stirling[m - 1][k] if k < m else 0) + stirling[m - 1][k - 1]
            stirling.append(row)
        return sum(stirling[n][k] * rate**k for k in range(n + 1))

    for k in range(1, 5):
        assert cumulant_from_moments(range(k), moment) == pytest.approx(rate)
