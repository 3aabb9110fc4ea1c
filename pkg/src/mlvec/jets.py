"""Truncated Taylor arithmetic: forward-mode differentiation to any order.

A :class:`Jet` of order ``m`` stores ``f(x0), f'(x0)/1!, ..., f^(m)(x0)/m!``
for a whole array of expansion points at once.  Order 1 is ordinary dual
number arithmetic; higher orders are the nested-dual generalisation without
the ``2^m`` blow-up of literally nesting dual numbers.
"""
from __future__ import annotations

from math import factorial

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coefficients):
        self.c = np.asarray(coefficients, dtype=complex)

    @classmethod
    def variable(cls, x, order: int) -> Jet:
        x = np.asarray(x, dtype=complex)
        c = np.zeros((order + 1,) + x.shape, dtype=complex)
        c[0] = x
        if order >= 1:
            c[1] = 1
        return cls(c)

    @classmethod
    def constant(cls, x, order: int) -> Jet:
        x = np.asarray(x, dtype=complex)
        c = np.zeros((order + 1,) + x.shape, dtype=complex)
        c[0] = x
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self):
        return self.c[0]

    def derivative(self, m: int):
        """``f^(m)(x0)``."""
        return factorial(m) * self.c[m]

    def _lift(self, other) -> Jet:
        if isinstance(other, Jet):
            return other
        return Jet.constant(np.broadcast_to(other, self.c.shape[1:]), self.order)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self.c, other.c
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
        for k in range(out.shape[0]):
            for i in range(k + 1):
                out[k] += a[i] * b[k - i]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> Jet:
        a = self.c
        out = np.zeros_like(a)
        out[0] = 1 / a[0]
        for k in range(1, a.shape[0]):
            s = sum(a[i] * out[k - i] for i in range(1, k + 1))
            out[k] = -s * out[0]
        return Jet(out)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = Jet.constant(np.ones(self.c.shape[1:]), self.order)
        for _ in range(n):
            out = out * self
        return out


def exp(a: Jet) -> Jet:
    c = a.c
    out = np.zeros_like(c)
    out[0] = np.exp(c[0])
    for k in range(1, c.shape[0]):
        out[k] = sum(j * c[j] * out[k - j] for j in range(1, k + 1)) / k
    return Jet(out)


def expm1(a: Jet) -> Jet:
    """``exp(a) - 1`` with the constant term computed without cancellation."""
    out = exp(a)
    out.c[0] = np.expm1(a.c[0])
    return out


def log(a: Jet) -> Jet:
    c = a.c
    out = np.zeros_like(c)
    out[0] = np.log(c[0])
    for k in range(1, c.shape[0]):
        s = sum(j * out[j] * c[k - j] for j in range(1, k))
        out[k] = (c[k] - s / k) / c[0]
    return Jet(out)


def compose_linear(derivs, slope, order: int) -> Jet:
    """Jet of ``x -> h(x0 + slope * t)`` given the list ``[h(u0), h'(u0), ...]``.

    Used for functions of ``u = c * sigma`` where the derivatives of ``h`` are
    known in closed form.
    """
    c = np.zeros((order + 1,) + np.shape(derivs[0]), dtype=complex)
    for m in range(order + 1):
        c[m] = derivs[m] * slope**m / factorial(m)
    return Jet(c)
