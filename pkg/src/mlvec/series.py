"""Exact perturbative coefficients in ``g`` and Borel-Pade resummation.

Under the free measure each ``|phi_p|^2`` is exponential with mean ``1/p``;
its moments ``E|phi_p|^(2a) = a! / p^a`` count the Wick pairings of
``a`` copies of ``phi_bar_p phi_p``.  Expanding ``exp(-(g/2)(Q - L)^2)`` with
``Q = sum_p |phi_p|^2`` therefore reduces every Wick sum to products of
one-mode moments, which we combine with an exponential generating function
in exact rational arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate

from .cumulants import cumulant_from_moments
from .errors import DegeneratePade, OrderTooHigh
from .model import ExternalMomenta, SliceConfig

MAX_ORDER = 8


class PowerSeries:
    """Truncated power series with exact coefficients."""

    __slots__ = ("c",)

    def __init__(self, coefficients: Sequence):
        self.c = [Fraction(x) for x in coefficients]

    @property
    def order(self) -> int:
        return len(self.c) - 1

    def _coerce(self, other) -> PowerSeries:
        if isinstance(other, PowerSeries):
            return other
        return PowerSeries([other] + [0] * self.order)

    def __add__(self, other):
        other = self._coerce(other)
        n = min(len(self.c), len(other.c))
        return PowerSeries([a + b for a, b in zip(self.c[:n], other.c[:n])])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries([-a for a in self.c])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return PowerSeries([a * other for a in self.c])
        n = min(len(self.c), len(other.c))
        out = [Fraction(0)] * n
        for i, a in enumerate(self.c[:n]):
            if a:
                for j in range(n - i):
                    out[i + j] += a * other.c[j]
        return PowerSeries(out)

    __rmul__ = __mul__

    def reciprocal(self) -> PowerSeries:
        if self.c[0] == 0:
            raise ZeroDivisionError("series with zero constant term")
        out = [1 / self.c[0]]
        for n in range(1, len(self.c)):
            out.append(-sum(self.c[i] * out[n - i] for i in range(1, n + 1)) / self.c[0])
        return PowerSeries(out)

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return self * other.reciprocal()
        return PowerSeries([a / other for a in self.c])

    def log(self) -> PowerSeries:
        """``log`` of a series with constant term 1."""
        if self.c[0] != 1:
            raise ValueError("log needs constant term 1")
        # f'/f integrated termwise
        d = PowerSeries([k * a for k, a in enumerate(self.c)][1:] + [0])
        q = d / self
        return PowerSeries([Fraction(0)] + [q.c[k] / (k + 1) for k in range(self.order)])

    def __call__(self, x):
        return sum(float(a) * x**k for k, a in enumerate(self.c))

    def __repr__(self):
        return f"PowerSeries({[str(a) for a in self.c]})"


@dataclass(frozen=True)
class SeriesCoefficients:
    """Coefficients ``c_0..c_order`` of one observable (``g`` or Borel variable)."""

    coefficients: tuple
    observable: str = "free-energy"

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coefficients])

    def evaluate(self, g: complex, order: int | None = None) -> complex:
        cs = self.coefficients[: (self.order if order is None else order) + 1]
        return sum(complex(float(c)) * g**m for m, c in enumerate(cs))


def _mode_egf(p: int, leg_power: int, order: int) -> list[Fraction]:
    """``sum_r z^r / r! * E[(X - 1/p)^r X^s] / s!`` for ``X ~ Exp(mean 1/p)``."""
    ip = Fraction(1, p)

    def raw(a):
        return factorial(a) * ip**a

    out = []
    for r in range(2 * order + 1):
        mom = sum(comb(r, i) * raw(i + leg_power) * (-ip) ** (r - i) for i in range(r + 1))
        out.append(mom / factorial(leg_power) / factorial(r))
    return out


def _insertion_series(sc: SliceConfig, momenta: Sequence[int], order: int) -> PowerSeries:
    """``E_free[prod_q |phi_{p_q}|^2 / mult! * exp(-(g/2)(Q-L)^2)]`` as a series in g."""
    counts = {p: 0 for p in sc.momenta}
    for p in momenta:
        counts[p] += 1
    deg = 2 * order
    egf = [Fraction(1)] + [Fraction(0)] * deg
    for p in sc.momenta:
        f = _mode_egf(p, counts[p], order)
        new = [Fraction(0)] * (deg + 1)
        for i, a in enumerate(egf):
            if a:
                for j in range(deg + 1 - i):
                    new[i + j] += a * f[j]
        egf = new
    # E[(Q-L)^(2m) * ins] = (2m)! [z^(2m)] egf
    return PowerSeries([Fraction(-1, 2) ** m / factorial(m) * factorial(2 * m) * egf[2 * m]
                        for m in range(order + 1)])


def wick_coefficients(sc: SliceConfig, observable: ExternalMomenta | None = None,
                      order: int = 4) -> SeriesCoefficients:
    """Exact coefficients of ``log Z`` (no momenta) or of the cumulant at ``observable``."""
    if order > MAX_ORDER:
        raise OrderTooHigh(f"order {order} > {MAX_ORDER}")
    pm = observable or ExternalMomenta([])
    pm.validate(sc)
    z = _insertion_series(sc, [], order)
    if pm.k == 0:
        return SeriesCoefficients(tuple(z.log().c), "free-energy")
    cache = {}

    def moment(S: frozenset) -> PowerSeries:
        if S not in cache:
            cache[S] = _insertion_series(sc, [pm.momenta[q] for q in sorted(S)], order) / z
        return cache[S]

    kappa = cumulant_from_moments(range(pm.k), moment)
    return SeriesCoefficients(tuple(kappa.c), f"cumulant{pm.momenta}")


def borel_transform(s: SeriesCoefficients) -> SeriesCoefficients:
    return SeriesCoefficients(tuple(Fraction(c) / factorial(m) for m, c in enumerate(s.coefficients)),
                              f"borel[{s.observable}]")


@dataclass
class PadeResult:
    numerator: np.poly1d
    denominator: np.poly1d
    L: int
    M: int

    def __call__(self, t):
        return self.numerator(t) / self.denominator(t)

    @property
    def poles(self) -> np.ndarray:
        return np.roots(self.denominator.coeffs) if self.M else np.array([])

    def laplace(self, g: complex) -> complex:
        """``int_0^inf e^{-s} B(g s) ds``, the Borel sum in the direction of ``g``."""
        g = complex(g)
        if g == 0:
            return complex(self(0.0))

        def f(s):
            return np.exp(-s) * self(g * s)

        re = integrate.quad(lambda s: f(s).real, 0, np.inf, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        im = integrate.quad(lambda s: f(s).imag, 0, np.inf, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        return complex(re, im)


def pade_resum(b: SeriesCoefficients, L: int, M_deg: int, fallback: bool = True) -> PadeResult:
    """``[L/M]`` Pade approximant of a Borel transform.

    A singular denominator system raises :class:`DegeneratePade`, or with
    ``fallback`` retries with a smaller denominator degree.
    """
    if L + M_deg > b.order:
        raise ValueError(f"[{L}/{M_deg}] needs order >= {L + M_deg}, have {b.order}")
    coeffs = b.as_floats()[: L + M_deg + 1]
    while True:
        try:
            p, q = interpolate.pade(coeffs, M_deg, L)
            if M_deg and (not np.all(np.isfinite(q.coeffs)) or abs(q(0)) < 1e-14):
                raise np.linalg.LinAlgError("singular denominator")
            return PadeResult(p, q, L, M_deg)
        except (np.linalg.LinAlgError, ValueError) as exc:
            if not fallback or M_deg == 0:
                raise DegeneratePade(f"[{L}/{M_deg}] Pade is degenerate") from exc
            M_deg -= 1
            coeffs = b.as_floats()[: L + M_deg + 1]


def borel_pade_sum(s: SeriesCoefficients, g: complex, L: int | None = None,
                   M_deg: int | None = None) -> complex:
    """Resum the series ``s`` at ``g`` through a Pade-continued Borel transform."""
    b = borel_transform(s)
    if L is None or M_deg is None:
        M_deg = b.order // 2
        L = b.order - M_deg
    return pade_resum(b, L, M_deg).laplace(g)
