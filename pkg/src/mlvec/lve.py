"""Cumulants from the two-level tree expansion.

For ``k`` external legs with their own source parameters ``t_q``,

    K^k = sum_{n >= max(1,k)} 1/n! sum_{two-level spanning trees on [n]}
          sum_{labels}  prod_{Bosonic blocks B} I_B  x  F(jungle, labels).

Every vertex carries a label: ``(1, j)`` for the interaction of slice ``j``
(factor ``exp(-V_j) - 1``) or ``(2, q)`` for external leg ``q`` (factor
``G_{p_q}``).  Each leg labels exactly one vertex, labels inside a block are
distinct, and Fermionic edges join vertices with equal labels.  ``I_B`` is
the ``w``-integrated Gaussian expectation of the block's vertex factors,
each differentiated once per incident Bosonic edge; ``F`` is the Grassmann
factor, which does not depend on ``g``.

Terms are grouped into a plan keyed by the multiset of block keys, so each
distinct block integral is evaluated once per coupling.
"""
from __future__ import annotations

import cmath
import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product
from math import factorial
from typing import Sequence

import numpy as np

from .errors import CapExceeded, IllConditioned
from .forests import Jungle, WScheme, enumerate_jungles
from .grassmann import jungle_fermion_factor
from .model import CouplingPoint, ExternalMomenta, SliceConfig
from .replica import INTERACTION, SOURCE, GaussScheme, WFactor, block_integral, check_real_line
from .series import SeriesCoefficients

N_MAX_CAP = 5
K_MAX = 4

#: w-rule for block integrals; the integrand is smooth on each ordering simplex
LVE_WSCHEME = WScheme(order=6)
DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-13

Label = tuple[int, int]
BlockKey = tuple[tuple[Label, ...], tuple[tuple[int, int], ...]]


@dataclass(frozen=True)
class ReplicaAssignment:
    """Per-vertex labels ``(c_a, j_a)`` or ``(2, q)`` and the leg injection ``q -> a_q``."""

    labels: tuple[Label, ...]
    legs: tuple[int, ...]


@dataclass(frozen=True)
class TermDescriptor:
    n: int
    jungle: Jungle
    assignment: ReplicaAssignment
    weight: float
    fermion: float
    blocks: tuple[BlockKey, ...]


@dataclass
class CumulantResult:
    k: int
    momenta: tuple[int, ...]
    g: complex
    n_max: int
    partial_sums: list[complex]
    increments: list[complex]
    value: complex
    error: float
    quadrature_error: float
    converged: bool
    terms: int = 0
    block_integrals: int = 0

    @property
    def n_start(self) -> int:
        return max(1, self.k)

    def as_dict(self) -> dict:
        def c(z):
            return [z.real, z.imag]

        return {
            "k": self.k,
            "momenta": list(self.momenta),
            "g": c(self.g),
            "n_max": self.n_max,
            "n_start": self.n_start,
            "partial_sums": [c(s) for s in self.partial_sums],
            "value": c(self.value),
            "error": self.error,
            "quadrature_error": self.quadrature_error,
            "converged": self.converged,
            "terms": self.terms,
            "block_integrals": self.block_integrals,
        }


# --- enumeration -----------------------------------------------------------------

def _components(n: int, edges) -> list[int]:
    root = list(range(n))

    def find(a):
        while root[a] != a:
            a = root[a]
        return a

    for a, b in edges:
        root[find(a)] = find(b)
    return [find(a) for a in range(n)]


def assignments(jungle: Jungle, slices: Sequence[int], k: int):
    """Admissible :class:`ReplicaAssignment` objects for one jungle.

    Legs are placed injectively; remaining vertices get one slice per
    Fermionic cluster (Fermionic edges need equal labels); labels inside a
    Bosonic block must differ.
    """
    n = jungle.n
    bp = jungle.blocks()
    fcomp = _components(n, jungle.fermionic)
    for legs in permutations(range(n), k):
        labels: list[Label | None] = [None] * n
        for q, a in enumerate(legs):
            labels[a] = (2, q)
        # a source vertex cannot sit on a Fermionic edge: its label is unique
        if any(labels[a] is not None or labels[b] is not None for a, b in jungle.fermionic):
            continue
        clusters = sorted({fcomp[a] for a in range(n) if labels[a] is None})
        for js in product(slices, repeat=len(clusters)):
            choice = dict(zip(clusters, js))
            full = tuple(labels[a] if labels[a] is not None else (1, choice[fcomp[a]])
                         for a in range(n))
            if all(len({full[a] for a in blk}) == len(blk) for blk in bp.blocks):
                yield ReplicaAssignment(full, legs)


def block_key(jungle: Jungle, block: Sequence[int], labels: Sequence[Label]) -> BlockKey:
    """Canonical description of one block: sorted labels plus edges between label slots."""
    labs = tuple(sorted(labels[a] for a in block))
    pos = {labels[a]: labs.index(labels[a]) for a in block}
    members = set(block)
    edges = tuple(sorted(tuple(sorted((pos[labels[a]], pos[labels[b]])))
                         for a, b in jungle.bosonic if a in members))
    return labs, edges


@lru_cache(maxsize=None)
def term_plan(slices: tuple[int, ...], k: int, n: int,
              fermion_scheme: WScheme | None = None) -> tuple[tuple[float, tuple[BlockKey, ...]], ...]:
    """Grouped order-``n`` terms ``(coefficient, block keys)``; ``g``-independent."""
    acc: dict[tuple[BlockKey, ...], list[float]] = defaultdict(list)
    for jungle in enumerate_jungles(n, spanning=True):
        bp = jungle.blocks()
        for asg in assignments(jungle, slices, k):
            f, _ = jungle_fermion_factor(jungle, asg.labels, fermion_scheme)
            if f == 0.0:
                continue
            keys = tuple(sorted(block_key(jungle, blk, asg.labels) for blk in bp.blocks))
            acc[keys].append(f)
    nf = factorial(n)
    plan = []
    for keys in sorted(acc):
        coef = math.fsum(acc[keys]) / nf
        if abs(coef) > 1e-14:
            plan.append((coef, keys))
    return tuple(plan)


def term_descriptors(sc: SliceConfig, pm: ExternalMomenta, n: int):
    """Ungrouped terms of order ``n`` (for inspection and tests)."""
    for jungle in enumerate_jungles(n, spanning=True):
        bp = jungle.blocks()
        for asg in assignments(jungle, sc.slice_indices, pm.k):
            f, _ = jungle_fermion_factor(jungle, asg.labels)
            keys = tuple(sorted(block_key(jungle, blk, asg.labels) for blk in bp.blocks))
            yield TermDescriptor(n, jungle, asg, 1 / factorial(n), f, keys)


# --- evaluation ------------------------------------------------------------------

def _factor(label: Label, sc: SliceConfig, pm: ExternalMomenta) -> WFactor:
    c, x = label
    if c == 1:
        return WFactor(INTERACTION, x, sc.slices[x])
    p = pm.momenta[x]
    return WFactor(SOURCE, sc.slice_of(p), (p,))


def evaluate_block(key: BlockKey, cp: CouplingPoint, sc: SliceConfig, pm: ExternalMomenta,
                   gauss: GaussScheme, wscheme: WScheme, rtol: float | None = None,
                   atol: float = 0.0) -> tuple[complex, float]:
    labs, edges = key
    degree = [0] * len(labs)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    factors = [(_factor(lab, sc, pm), d) for lab, d in zip(labs, degree)]
    return block_integral(cp, factors, edges, gauss, wscheme, rtol=rtol, atol=atol)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("MLVE_THREADS", "1") or 1)
    return max(1, int(threads))


def _fsum_complex(values) -> complex:
    values = list(values)
    return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))


def _converged(increments: Sequence[complex], scale: float) -> bool:
    """Last (up to three) increments shrink strictly, or vanish to roundoff."""
    tail = [abs(d) for d in increments[-3:]]
    if len(tail) < 2:
        return False
    tiny = 1e-14 * max(1.0, scale)
    return all(b < a or (b <= tiny and a <= tiny) for a, b in zip(tail, tail[1:]))


def cumulant_lve(cp: CouplingPoint, sc: SliceConfig, pm: ExternalMomenta, n_max: int = 4,
                 gauss: GaussScheme = GaussScheme(), wscheme: WScheme = LVE_WSCHEME,
                 threads: int | None = None, rtol: float | None = DEFAULT_RTOL,
                 atol: float = DEFAULT_ATOL) -> CumulantResult:
    """Truncated tree expansion ``S_{n_max}`` of the cumulant at ``pm``.

    ``k = 0`` gives ``log Z``.  The reported error is the quadrature error
    plus the size of the last increment (truncation estimate).  ``rtol`` and
    ``atol`` drive the per-block order ladder; ``rtol=None`` uses the full
    orders of ``gauss`` and ``wscheme`` everywhere.
    """
    if n_max > N_MAX_CAP:
        raise CapExceeded(f"n_max = {n_max} > {N_MAX_CAP}")
    if pm.k > K_MAX:
        raise CapExceeded(f"k = {pm.k} > {K_MAX}")
    pm.validate(sc, K_MAX)
    check_real_line(cp)
    start = max(1, pm.k)
    slices = tuple(sc.slice_indices)
    plans = {n: term_plan(slices, pm.k, n) for n in range(start, n_max + 1)}
    keys = sorted({key for plan in plans.values() for _, ks in plan for key in ks})

    def run(key):
        return evaluate_block(key, cp, sc, pm, gauss, wscheme, rtol, atol)

    nthreads = resolve_threads(threads)
    if nthreads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            results = dict(zip(keys, pool.map(run, keys)))
    else:
        results = {key: run(key) for key in keys}

    increments, partial, quad_err = [], [], 0.0
    n_terms = 0
    for n in range(start, n_max + 1):
        contribs = []
        for coef, ks in plans[n]:
            vals = [results[key] for key in ks]
            prod_v = coef * math.prod(v for v, _ in vals)
            contribs.append(prod_v)
            for i, (_, e) in enumerate(vals):
                others = math.prod(abs(v) for j, (v, _) in enumerate(vals) if j != i)
                quad_err += abs(coef) * e * others
            n_terms += 1
        inc = _fsum_complex(contribs)
        increments.append(inc)
        partial.append(_fsum_complex(increments))
    value = partial[-1] if partial else 0j
    trunc = abs(increments[-1]) if increments else 0.0
    return CumulantResult(
        k=pm.k, momenta=pm.momenta, g=complex(cp.g), n_max=n_max,
        partial_sums=partial, increments=increments, value=value,
        error=quad_err + trunc, quadrature_error=quad_err,
        converged=_converged(increments, abs(value)), terms=n_terms,
        block_integrals=len(keys))


# --- re-expansion in g ---------------------------------------------------------

#: fixed schemes for Taylor extraction: exact on the polynomial part of each
#: Taylor coefficient up to lambda^7, and cheap
REEXPAND_GAUSS = GaussScheme(orders=(6, 6, 5, 4, 4))
REEXPAND_WSCHEME = WScheme(order=4)


def _max_sigma(gauss: GaussScheme) -> float:
    x, _ = np.polynomial.hermite_e.hermegauss(max(gauss.orders))
    return float(np.max(np.abs(x)))


def default_radius(sc: SliceConfig, gauss: GaussScheme = REEXPAND_GAUSS,
                   reach: float = 0.1) -> float:
    """``|lambda|`` keeping ``|lambda sigma / p| <= reach`` on every quadrature node.

    On such a circle the discretised expansion is analytic in ``lambda`` and
    the aliasing of order ``m + points`` onto order ``m`` is ``O(reach^points)``.
    """
    p_min = min(sc.momenta)
    return reach * p_min / (2 * _max_sigma(gauss))


def lambda_coefficients(sc: SliceConfig, pm: ExternalMomenta, n_max: int = 4,
                        order: int = 4, radius: float | None = None, points: int = 8,
                        gauss: GaussScheme = REEXPAND_GAUSS, wscheme: WScheme = REEXPAND_WSCHEME,
                        threads: int | None = None) -> np.ndarray:
    """Taylor coefficients in ``lambda`` of the truncated expansion, by a discrete
    Cauchy integral on ``|lambda| = radius``.

    Fixed quadrature orders make the discretised expansion an analytic
    function of ``lambda`` whose low Taylor coefficients are exact.
    """
    if order >= points:
        raise ValueError("need more contour points than the order")
    r = radius or default_radius(sc, gauss)
    theta = 2 * np.pi * (np.arange(points) + 0.5) / points
    vals = []
    for th in theta:
        lam = r * cmath.exp(1j * th)
        # only lambda enters the expansion; gamma is recorded as Arg(lambda)
        cp = CouplingPoint(lam * lam, lam, float(th), 1.0)
        vals.append(cumulant_lve(cp, sc, pm, n_max, gauss, wscheme, threads, rtol=None).value)
    vals = np.array(vals)
    return np.array([np.mean(vals * np.exp(-1j * m * theta)) / r**m for m in range(order + 1)])


def reexpand_in_g(sc: SliceConfig, pm: ExternalMomenta, n_max: int = 4, orders: int = 2,
                  radius: float | None = None, points: int = 8,
                  gauss: GaussScheme = REEXPAND_GAUSS, wscheme: WScheme = REEXPAND_WSCHEME,
                  threads: int | None = None, rtol: float = 1e-6) -> SeriesCoefficients:
    """Coefficients of ``g^0..g^orders`` of the truncated expansion.

    Two contour radii are compared; disagreement beyond ``rtol`` (relative
    to the largest coefficient) raises :class:`IllConditioned`, as do odd
    powers of ``lambda`` that fail to vanish.
    """
    if orders > 3:
        raise ValueError("orders <= 3")
    r = radius or default_radius(sc, gauss)
    hi = lambda_coefficients(sc, pm, n_max, 2 * orders, r, points, gauss, wscheme, threads)
    lo = lambda_coefficients(sc, pm, n_max, 2 * orders, r / 2, points, gauss, wscheme, threads)
    scale = max(1e-300, float(np.max(np.abs(hi))))
    diff = float(np.max(np.abs(hi - lo)))
    if diff > rtol * scale:
        raise IllConditioned(f"contour radii disagree by {diff:.2e} (scale {scale:.2e})")
    odd = float(np.max(np.abs(hi[1::2]))) if orders else 0.0
    if odd > rtol * scale:
        raise IllConditioned(f"odd lambda coefficients {odd:.2e} do not vanish")
    coeffs = tuple(float(c.real) for c in hi[::2])
    return SeriesCoefficients(coeffs, f"lve-reexpansion[k={pm.k},{pm.momenta},n_max={n_max}]")
