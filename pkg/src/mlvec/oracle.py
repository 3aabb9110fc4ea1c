"""Exact (quadrature) and Monte Carlo reference values for log Z and cumulants.

After the intermediate-field decoupling the model is a one-dimensional
integral over ``sigma`` with the standard normal weight::

    Z = E_sigma[ exp(-sum_p log2(i lambda sigma / p)) ]

and each pair of source derivatives at momentum ``p`` inserts the dressed
propagator ``G_p(sigma) = (1/p) (1 - i lambda sigma / p)^(-1)``.  External
legs are treated as distinct (one source parameter per leg), so a cumulant
is the joint cumulant of ``G_{p_1}, ..., G_{p_k}`` under the interacting
``sigma`` measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import Sequence

import numpy as np
from scipy import integrate

from .cumulants import cumulant_from_moments
from .errors import QuadratureNoConverge
from .model import (CouplingPoint, ExternalMomenta, SliceConfig, SourceVector, K_j,
                    V_j, dressed_propagator)

EPSREL = 1e-12
EPSABS = 1e-15
ERROR_TARGET = 1e-10


def integration_half_width(cp: CouplingPoint, sc: SliceConfig) -> float:
    return 12.0 + 4.0 * max(1.0, abs(cp.lam) * sc.L_N)


def interaction_weight(sigma, cp: CouplingPoint, sc: SliceConfig):
    """``exp(-sum_j V_j(sigma))``, the sigma-space integrand without sources."""
    total = 0
    for ps in sc.slices.values():
        total = total + V_j(sigma, cp, ps)
    return np.exp(-total)


def _gauss(sigma):
    return np.exp(-0.5 * sigma * sigma) / math.sqrt(2 * math.pi)


def _integrate(vec_integrand, cp: CouplingPoint, sc: SliceConfig,
               error_target: float = ERROR_TARGET):
    S = integration_half_width(cp, sc)
    val, err = integrate.quad_vec(lambda s: _gauss(s) * vec_integrand(s), -S, S,
                                  epsabs=EPSABS, epsrel=EPSREL, limit=400)
    scale = max(1e-300, float(np.max(np.abs(val))))
    if err > error_target * max(1.0, scale):
        raise QuadratureNoConverge(f"quadrature error {err:.2e} above target")
    return np.asarray(val), float(err)


def partition_function(cp: CouplingPoint, sc: SliceConfig, with_error: bool = False):
    """``Z(g, N, 0)`` by adaptive Gauss-Kronrod quadrature over sigma."""
    val, err = _integrate(lambda s: np.atleast_1d(interaction_weight(s, cp, sc)), cp, sc)
    return (complex(val[0]), err) if with_error else complex(val[0])


def log_partition_with_sources(cp: CouplingPoint, sc: SliceConfig, J: SourceVector) -> complex:
    """``log Z(g, N, J)`` with the sources entering through the slice terms ``K_j``."""
    J.check_support(sc)

    def f(s):
        total = 0
        for ps in sc.slices.values():
            total = total + V_j(s, cp, ps) + K_j(s, cp, ps, J)
        return np.atleast_1d(np.exp(-total))

    val, _ = _integrate(f, cp, sc)
    return complex(np.log(val[0]))


def _leg_multiplicity_factor(momenta: Sequence[int]) -> int:
    counts: dict[int, int] = {}
    for p in momenta:
        counts[p] = counts.get(p, 0) + 1
    return math.prod(factorial(c) for c in counts.values())


def moment_table(cp: CouplingPoint, sc: SliceConfig, pm: ExternalMomenta,
                 with_error: bool = False):
    """All normalised moments ``M_S = <prod_{q in S} G_{p_q}> / Z`` over subsets of legs.

    Keys are frozensets of leg positions; ``M_{{}} = 1``.
    """
    pm.validate(sc)
    subsets = [frozenset(c) for r in range(pm.k + 1) for c in combinations(range(pm.k), r)]

    def f(s):
        w = interaction_weight(s, cp, sc)
        props = [dressed_propagator(s, cp, p) for p in pm.momenta]
        out = []
        for S in subsets:
            v = w
            for q in S:
                v = v * props[q]
            out.append(v)
        return np.array(out)

    vals, err = _integrate(f, cp, sc)
    z = vals[0]
    table = {S: complex(v / z) for S, v in zip(subsets, vals)}
    if with_error:
        return table, err / abs(z) * (1 + max(abs(v) for v in table.values()))
    return table


def moment(cp: CouplingPoint, sc: SliceConfig, momenta: Sequence[int]) -> complex:
    """Normalised moment ``<prod_q G_{p_q}> / Z`` for a multiset of momenta."""
    pm = ExternalMomenta(momenta)
    return moment_table(cp, sc, pm)[frozenset(range(pm.k))]


def cumulant_oracle(cp: CouplingPoint, sc: SliceConfig, pm: ExternalMomenta,
                    with_error: bool = False):
    """Cumulant ``K^k(g, {p})``; for ``k = 0`` this is ``log Z``."""
    if pm.k == 0:
        z, err = partition_function(cp, sc, with_error=True)
        val = complex(np.log(z))
        return (val, err / abs(z)) if with_error else val
    table, err = moment_table(cp, sc, pm, with_error=True)
    val = complex(cumulant_from_moments(range(pm.k), table.__getitem__))
    # Moebius sum of at most B_4 = 15 products of moments of size <= 1
    bound = err * 2 ** pm.k * 15
    return (val, bound) if with_error else val


@dataclass
class MCEstimate:
    """Monte Carlo estimates with jackknife standard errors."""

    log_z: float
    log_z_err: float
    cumulant: float
    cumulant_err: float
    samples: int
    seed: int

    @property
    def estimate(self) -> float:
        return self.cumulant

    @property
    def stderr(self) -> float:
        return self.cumulant_err


def mc_cross_check(cp: CouplingPoint, sc: SliceConfig, pm: ExternalMomenta,
                   samples: int = 400_000, seed: int = 0, batches: int = 100,
                   chunk: int = 100_000) -> MCEstimate:
    """Importance-sampled estimate in phi-space at real ``g >= 0``.

    Proposal: the free Gaussian measure (``phi_p`` complex normal with
    ``E|phi_p|^2 = 1/p``); weight ``exp(-(g/2)(sum_p |phi_p|^2 - L)^2)``.
    Each leg contributes ``|phi_p|^2``; a momentum repeated ``m`` times is
    divided by ``m!`` to match the one-source-per-leg convention.
    """
    g = cp.g
    if g.imag != 0 or g.real < 0:
        raise ValueError("Monte Carlo cross-check needs real g >= 0")
    g = g.real
    pm.validate(sc)
    ps = np.array(sc.momenta)
    L = float(np.sum(1.0 / ps))
    col = {p: i for i, p in enumerate(sc.momenta)}
    subsets = [frozenset(c) for r in range(pm.k + 1) for c in combinations(range(pm.k), r)]
    div = {S: _leg_multiplicity_factor([pm.momenta[q] for q in S]) for S in subsets}

    if samples % batches:
        raise ValueError("samples must be a multiple of batches")
    per_batch = samples // batches
    sums = np.zeros((batches, len(subsets)))
    children = np.random.SeedSequence(seed).spawn(batches)
    for b in range(batches):
        rng = np.random.default_rng(children[b])
        done = 0
        while done < per_batch:
            m = min(chunk, per_batch - done)
            re = rng.standard_normal((m, len(ps)))
            im = rng.standard_normal((m, len(ps)))
            x = (re * re + im * im) / (2 * ps)  # |phi_p|^2
            w = np.exp(-0.5 * g * (x.sum(axis=1) - L) ** 2)
            for i, S in enumerate(subsets):
                f = w.copy()
                for q in S:
                    f *= x[:, col[pm.momenta[q]]]
                sums[b, i] += f.sum() / div[S]
            done += m

    def estimates(s, n):
        z = s[0] / n
        table = {S: s[i] / s[0] for i, S in enumerate(subsets)}
        kappa = math.log(z) if pm.k == 0 else cumulant_from_moments(range(pm.k), table.__getitem__)
        return math.log(z), kappa

    total = sums.sum(axis=0)
    full = estimates(total, samples)
    jk = np.array([estimates(total - sums[b], samples - per_batch) for b in range(batches)])
    spread = np.sqrt((batches - 1) / batches * np.sum((jk - jk.mean(axis=0)) ** 2, axis=0))
    return MCEstimate(full[0], float(spread[0]), full[1], float(spread[1]), samples, seed)
