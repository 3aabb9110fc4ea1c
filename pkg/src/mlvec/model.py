"""Model constants, coupling geometry, momentum slices and the per-slice
interaction / source functions of the quartic U(N) vector model.

Conventions used throughout the package:

* the free covariance is ``E[conj(phi_p) phi_q] = delta_pq / p``;
* ``<phi_bar, phi> = sum_p |phi_p|^2`` (no doubling), so that the Wick-ordered
  vertex is ``(g/2) (sum_p |phi_p|^2 - L_N)^2``;
* sources enter as ``exp(sum_p Jbar_p phi_p + J_p phi_bar_p)`` so that
  ``d^2 log Z / dJbar_p dJ_p`` at ``g = 0`` equals ``1/p``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import BoundViolated, BranchCut, PoleHit

#: Cardioid radius used when none is given.  Calibrated from cardioid scans
#: of the truncated tree sum (see README, "Cardioid probing").
DEFAULT_RHO = 1.0

SERIES_CUTOFF = 1e-4
POLE_EPS = 1e-14


def sqrt_coupling(g: complex, allow_boundary: bool = False) -> tuple[complex, float]:
    """Principal square root of ``g`` and the half-argument ``Arg(g)/2``.

    On the negative real axis the principal branch is ambiguous; this raises
    :class:`BranchCut` unless ``allow_boundary`` is set, in which case
    ``lambda = i sqrt(|g|)`` and ``gamma = pi/2``.
    """
    g = complex(g)
    if g.imag == 0.0 and g.real < 0.0:
        if not allow_boundary:
            raise BranchCut(f"Arg(g) = pi for g = {g}", witness=g)
        return complex(0.0, math.sqrt(-g.real)), math.pi / 2
    if g == 0:
        return 0j, 0.0
    lam = cmath.sqrt(g)
    return lam, cmath.phase(g) / 2


def in_cardioid(g: complex, rho: float) -> bool:
    """True iff ``|g| < rho cos^2(Arg(g)/2)`` (strict)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    g = complex(g)
    if g == 0:
        return True
    gamma = abs(cmath.phase(g)) / 2
    return abs(g) < rho * math.cos(gamma) ** 2


def harmonic_sum(N: int, exact: bool = False) -> float | Fraction:
    if N < 1:
        raise ValueError("N must be >= 1")
    if exact:
        return sum((Fraction(1, p) for p in range(1, N + 1)), Fraction(0))
    return math.fsum(1.0 / p for p in range(1, N + 1))


@dataclass(frozen=True)
class CouplingPoint:
    """A complex coupling ``g`` with its square root and cardioid data."""

    g: complex
    lam: complex
    gamma: float
    rho: float = DEFAULT_RHO

    @classmethod
    def from_g(cls, g: complex, rho: float = DEFAULT_RHO,
               allow_boundary: bool = False) -> CouplingPoint:
        lam, gamma = sqrt_coupling(g, allow_boundary=allow_boundary)
        return cls(complex(g), lam, gamma, rho)

    @classmethod
    def from_polar(cls, modulus: float, gamma: float,
                   rho: float = DEFAULT_RHO) -> CouplingPoint:
        """Build ``g = modulus * exp(2 i gamma)`` with ``lambda = sqrt(modulus) e^{i gamma}``.

        ``gamma`` is snapped so that ``gamma = +-pi/2`` gives an exactly
        imaginary ``lambda`` (the negative real ``g`` axis).
        """
        if modulus < 0:
            raise ValueError("modulus must be >= 0")
        if not -math.pi / 2 <= gamma <= math.pi / 2:
            raise ValueError("gamma must lie in [-pi/2, pi/2]")
        r = math.sqrt(modulus)
        c, s = math.cos(gamma), math.sin(gamma)
        if abs(c) < 1e-15:
            c = 0.0
        lam = complex(r * c, r * s)
        return cls(lam * lam, lam, gamma, rho)

    @property
    def in_cardioid(self) -> bool:
        if self.g == 0:
            return True
        return abs(self.g) < self.rho * math.cos(self.gamma) ** 2

    def conjugate(self) -> CouplingPoint:
        return CouplingPoint(self.g.conjugate(), self.lam.conjugate(), -self.gamma, self.rho)


@dataclass(frozen=True)
class SliceConfig:
    """Momentum slices ``I_1 = [1, M]``, ``I_j = (M^(j-1), M^j]`` for ``j >= 2``.

    With ``j_min > 1`` only the slices ``j_min..j_max`` carry degrees of
    freedom; ``L_N`` stays the full harmonic number ``H_N``.  The degenerate
    ``j_min = j_max = 0`` gives the one-mode model ``N = 1``, ``I_0 = {1}``.
    """

    M: int = 2
    j_max: int = 2
    j_min: int = 1
    slices: dict[int, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("M must be > 1")
        if self.j_max == 0 and self.j_min == 0:
            object.__setattr__(self, "slices", {0: (1,)})
            return
        if not 1 <= self.j_min <= self.j_max:
            raise ValueError("need 1 <= j_min <= j_max")
        slices = {}
        for j in range(self.j_min, self.j_max + 1):
            lo = 0 if j == 1 else self.M ** (j - 1)
            slices[j] = tuple(range(lo + 1, self.M ** j + 1))
        object.__setattr__(self, "slices", slices)

    @property
    def N(self) -> int:
        return self.M ** self.j_max

    @property
    def L_N(self) -> float:
        return harmonic_sum(self.N)

    @property
    def slice_indices(self) -> tuple[int, ...]:
        return tuple(self.slices)

    @property
    def momenta(self) -> tuple[int, ...]:
        """All momenta carried by the (restricted) theory, ascending."""
        return tuple(p for j in self.slices for p in self.slices[j])

    def slice_of(self, p: int) -> int:
        for j, ps in self.slices.items():
            if p in ps:
                return j
        raise ValueError(f"momentum {p} is outside slices {self.j_min}..{self.j_max}")


@dataclass(frozen=True)
class ExternalMomenta:
    momenta: tuple[int, ...]

    def __init__(self, momenta: Sequence[int]):
        object.__setattr__(self, "momenta", tuple(int(p) for p in momenta))

    @property
    def k(self) -> int:
        return len(self.momenta)

    def validate(self, sc: SliceConfig, k_max: int = 4) -> None:
        if self.k > k_max:
            raise ValueError(f"k = {self.k} exceeds k_max = {k_max}")
        allowed = set(sc.momenta)
        for p in self.momenta:
            if p not in allowed:
                raise ValueError(f"momentum {p} not in [{min(allowed)}..{max(allowed)}]")


@dataclass(frozen=True)
class SourceVector:
    """Sparse map ``p -> (Jbar_p, J_p)``."""

    entries: Mapping[int, tuple[complex, complex]]

    def t(self, p: int) -> complex:
        jb, j = self.entries.get(p, (0.0, 0.0))
        return complex(jb) * complex(j)

    def check_support(self, sc: SliceConfig) -> None:
        lo = sc.M ** (sc.j_min - 1)
        for p in self.entries:
            if not lo <= p <= sc.N:
                raise ValueError(f"source at p={p} outside [{lo}, {sc.N}]")


def resolvent(u):
    """``R(u) = 1 - i u``."""
    return 1 - 1j * np.asarray(u) if np.ndim(u) else 1 - 1j * complex(u)


def inverse_resolvent(u, eps: float = POLE_EPS):
    r = resolvent(u)
    if np.any(np.abs(r) < eps):
        raise PoleHit(f"|1 - i u| < {eps}")
    return 1 / r


def _check_log_cut(one_minus_u, where=None):
    bad = (np.imag(one_minus_u) == 0) & (np.real(one_minus_u) <= 0)
    if np.any(bad):
        raise BranchCut("1 - u on the non-positive real axis", witness=where)


def log2_interaction(u):
    """``u + log(1 - u)``, evaluated by its Taylor series when ``|u|`` is small."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=complex)
    _check_log_cut(1 - u, where=u if scalar else None)
    small = np.abs(u) < SERIES_CUTOFF
    out = np.empty_like(u)
    us = u[small]
    # |u|^8 / 8 < 1e-33 below the cutoff
    out[small] = -(us**2 / 2 + us**3 / 3 + us**4 / 4 + us**5 / 5 + us**6 / 6 + us**7 / 7)
    ub = u[~small]
    out[~small] = ub + np.log(1 - ub)
    return complex(out) if scalar else out


def V_j(sigma, cp: CouplingPoint, slice_: Sequence[int]):
    """Wick-ordered slice interaction ``sum_{p in slice} log2(i lambda sigma / p)``."""
    sigma = np.asarray(sigma, dtype=complex)
    total = np.zeros_like(sigma)
    for p in slice_:
        try:
            total = total + log2_interaction(1j * cp.lam * sigma / p)
        except BranchCut as exc:
            raise BranchCut(f"branch cut at p={p}", witness=p) from exc
    return complex(total) if total.ndim == 0 else total


def K_j(sigma, cp: CouplingPoint, slice_: Sequence[int], J: SourceVector):
    """Source term of one slice, ``-sum_p Jbar_p J_p / (p - i lambda sigma)``.

    Normalised so that ``exp(-K_j)`` generates the dressed propagators
    ``G_p(sigma) = (1/p) (1 - i lambda sigma / p)^(-1)``.
    """
    sigma = np.asarray(sigma, dtype=complex)
    total = np.zeros_like(sigma)
    for p in slice_:
        t = J.t(p)
        if t == 0:
            continue
        total = total - t * inverse_resolvent(cp.lam * sigma / p) / p
    return complex(total) if total.ndim == 0 else total


def dressed_propagator(sigma, cp: CouplingPoint, p: int):
    """``G_p(sigma) = (1/p) (1 - i lambda sigma / p)^(-1)``."""
    return inverse_resolvent(cp.lam * np.asarray(sigma, dtype=complex) / p) / p


@dataclass
class ResolventBoundReport:
    g: complex
    samples: int
    max_modulus: float
    bound: float
    sharp_bound: float
    witness: tuple[float, int]

    @property
    def ok(self) -> bool:
        return self.max_modulus <= self.bound

    @property
    def within_sharp(self) -> bool:
        return self.max_modulus <= self.sharp_bound * (1 + 1e-12)

    def as_dict(self) -> dict:
        return {
            "g": [self.g.real, self.g.imag],
            "samples": self.samples,
            "max_modulus": self.max_modulus,
            "bound": self.bound,
            "sharp_bound": self.sharp_bound,
            "witness_sigma": self.witness[0],
            "witness_p": self.witness[1],
            "ok": self.ok,
        }


def check_resolvent_bound(cp: CouplingPoint, N: int, samples: int = 100_000,
                          seed: int = 0) -> ResolventBoundReport:
    """Sample ``sigma ~ N(0,1)``, ``p ~ U[1..N]`` and compare ``|R^{-1}|`` to ``2/cos(gamma)``.

    Raises :class:`BoundViolated` with the offending ``(sigma, p)``.
    """
    if not cp.in_cardioid:
        raise ValueError(f"g = {cp.g} is not in the cardioid of radius {cp.rho}")
    rng = np.random.default_rng(seed)
    sigma = rng.standard_normal(samples)
    p = rng.integers(1, N + 1, size=samples)
    mod = np.abs(inverse_resolvent(cp.lam * sigma / p))
    i = int(np.argmax(mod))
    cos_g = math.cos(cp.gamma)
    report = ResolventBoundReport(cp.g, samples, float(mod[i]), 2 / cos_g, 1 / cos_g,
                                  (float(sigma[i]), int(p[i])))
    if not report.ok:
        raise BoundViolated(
            f"|R^-1| = {report.max_modulus} > {report.bound} at sigma={sigma[i]}, p={p[i]}",
            witness=report.witness)
    return report
