"""Grassmann Gaussian integrals of monomials.

Generators are ``Gen(bar, label)``: ``chi_label`` for ``bar=False`` and
``chibar_label`` for ``bar=True``.  The measure has covariance
``<chi_i chibar_j> = C(i, j)``, so ``<chibar_j chi_i> = -C(i, j)`` and

    int dmu_C  prod_r (chi_{i_r} chibar_{j_r}) = det[C(i_r, j_s)].

Two evaluators are provided: :func:`grassmann_gaussian` (permutation sign
times a determinant) and :func:`brute_force_oracle`, which expands the
Gaussian kernel ``exp(sum C_ij d/dchibar_j d/dchi_i)`` in an explicit
exterior algebra.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial
from numbers import Rational
from typing import Callable, Hashable, NamedTuple, Sequence

import numpy as np

from .errors import CapExceeded, UnbalancedMonomial


class Gen(NamedTuple):
    bar: bool
    label: Hashable


def chi(label) -> Gen:
    return Gen(False, label)


def chibar(label) -> Gen:
    return Gen(True, label)


def permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _as_cov(cov) -> Callable:
    if callable(cov):
        return cov
    if isinstance(cov, dict):
        return lambda i, j: cov.get((i, j), 0.0)
    C = np.asarray(cov)
    return lambda i, j: C[..., i, j]


def exact_det(rows: Sequence[Sequence[Rational]]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = [[Fraction(x) for x in row] for row in rows]
    m = len(a)
    det = Fraction(1)
    for c in range(m):
        piv = next((r for r in range(c, m) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, m):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def grassmann_gaussian(cov, monomial: Sequence[Gen]):
    """Gaussian expectation of a monomial.

    ``cov`` is a matrix indexed by labels, a dict ``{(i, j): value}`` or a
    callable ``cov(i, j)``; its values may be arrays (a batch of covariances).
    Integer or ``Fraction`` entries give an exact ``Fraction`` result.
    """
    monomial = list(monomial)
    if len(set(monomial)) != len(monomial):
        return 0
    unbarred = [k for k, g in enumerate(monomial) if not g.bar]
    barred = [k for k, g in enumerate(monomial) if g.bar]
    if len(unbarred) != len(barred):
        raise UnbalancedMonomial(f"{len(unbarred)} chi vs {len(barred)} chibar")
    m = len(unbarred)
    if m == 0:
        return 1
    # reorder to chi_1 chibar_1 chi_2 chibar_2 ...
    target = {}
    for r, k in enumerate(unbarred):
        target[k] = 2 * r
    for r, k in enumerate(barred):
        target[k] = 2 * r + 1
    sign = permutation_sign([target[k] for k in range(len(monomial))])
    C = _as_cov(cov)
    entries = [[C(monomial[i].label, monomial[j].label) for j in barred] for i in unbarred]
    if all(isinstance(e, Rational) for row in entries for e in row):
        return sign * exact_det(entries)
    shape = np.broadcast_shapes(*[np.shape(e) for row in entries for e in row])
    M = np.empty(shape + (m, m), dtype=complex if np.iscomplexobj(np.asarray(entries[0][0])) else float)
    for r in range(m):
        for s in range(m):
            M[..., r, s] = entries[r][s]
    return sign * np.linalg.det(M)


def left_derivative(sign: int, monomial: tuple[Gen, ...], g: Gen):
    """``d/dg`` acting from the left; returns ``(sign, monomial)`` or ``None``."""
    try:
        k = monomial.index(g)
    except ValueError:
        return None
    return sign * (-1) ** k, monomial[:k] + monomial[k + 1:]


# --- brute force -------------------------------------------------------------

MAX_ORACLE_PAIRS = 10


def _popcount(x: int) -> int:
    return bin(x).count("1")


def brute_force_oracle(cov, monomial: Sequence[Gen]):
    """Top coefficient of ``exp(sum_ij C_ij d/dchibar_j d/dchi_i) monomial`` in an
    explicit ``2^m``-dimensional exterior algebra.

    Exact (a ``Fraction``) when the covariance entries are rational.
    """
    monomial = list(monomial)
    gens = sorted(set(monomial), key=repr)
    if len(gens) > 2 * MAX_ORACLE_PAIRS:
        raise CapExceeded(f"{len(gens)} generators > {2 * MAX_ORACLE_PAIRS}")
    index = {g: i for i, g in enumerate(gens)}
    C = _as_cov(cov)

    # element: {bitmask: coefficient}, basis monomials ordered by increasing index
    elem = {0: 1}
    for g in monomial:
        i = index[g]
        new = {}
        for mask, c in elem.items():
            if mask >> i & 1:
                continue
            s = -1 if _popcount(mask >> (i + 1)) % 2 else 1
            new[mask | 1 << i] = new.get(mask | 1 << i, 0) + s * c
        elem = new

    def d(i, el):
        out = {}
        for mask, c in el.items():
            if mask >> i & 1:
                s = -1 if _popcount(mask & ((1 << i) - 1)) % 2 else 1
                out[mask ^ 1 << i] = out.get(mask ^ 1 << i, 0) + s * c
        return out

    pairs = [(index[a], index[b], C(a.label, b.label))
             for a in gens if not a.bar for b in gens if b.bar]

    def kernel(el):
        out: dict[int, float] = {}
        for i, j, c in pairs:
            if c == 0:
                continue
            for mask, v in d(j, d(i, el)).items():
                out[mask] = out.get(mask, 0) + c * v
        return out

    total = Fraction(elem.get(0, 0))
    term = elem
    k = 0
    while term:
        k += 1
        term = kernel(term)
        total += Fraction(1, factorial(k)) * term.get(0, 0)
    return total


# --- Fermionic factor of a jungle term ----------------------------------------

def _canonical_pattern(labels: Sequence[Hashable]) -> tuple[int, ...]:
    first: dict = {}
    return tuple(first.setdefault(x, len(first)) for x in labels)


def vertex_monomial(bp, labels: Sequence[Hashable]) -> tuple[Gen, ...]:
    """``prod_a chi^{B(a)}_{alpha_a} chibar^{B(a)}_{alpha_a}`` in vertex order."""
    out = []
    for a, lab in enumerate(labels):
        B = bp.block_of(a)
        out += [chi((B, lab)), chibar((B, lab))]
    return tuple(out)


def oriented_terms(jungle, labels: Sequence[Hashable]) -> list[tuple[int, tuple[Gen, ...]]]:
    """Apply every Fermionic edge operator to the vertex monomial.

    Edge ``(a, b)`` with common label ``alpha`` acts as
    ``d/dchibar^{B(a)} d/dchi^{B(b)} + d/dchibar^{B(b)} d/dchi^{B(a)}``.
    Returns the surviving ``(sign, monomial)`` pairs, merged.
    """
    bp = jungle.blocks()
    terms = {vertex_monomial(bp, labels): 1}
    for a, b in jungle.fermionic:
        if labels[a] != labels[b]:
            return []
        lab = labels[a]
        new: dict[tuple[Gen, ...], int] = {}
        for mono, s in terms.items():
            for x, y in ((a, b), (b, a)):
                r = left_derivative(s, mono, chi((bp.block_of(y), lab)))
                if r is None:
                    continue
                r = left_derivative(*r, chibar((bp.block_of(x), lab)))
                if r is None:
                    continue
                new[r[1]] = new.get(r[1], 0) + r[0]
        terms = {m: s for m, s in new.items() if s}
    return sorted(((s, m) for m, s in terms.items()), key=repr)


def jungle_fermion_factor(jungle, labels: Sequence[Hashable], scheme=None) -> tuple[float, float]:
    """``int dw_F  sum_orientations sign * int dmu_{Y(w_F)} monomial``.

    The covariance is ``delta_{alpha beta} Y_{BB'}(w_F)``.  Labels must be
    distinct inside each Bosonic block (otherwise the factor vanishes by
    nilpotency).  The result depends only on the jungle and on which
    vertices share labels, so it is cached on that data.
    """
    return _fermion_factor(jungle, _canonical_pattern(labels), scheme)


@lru_cache(maxsize=None)
def _fermion_factor(jungle, pattern: tuple[int, ...], scheme) -> tuple[float, float]:
    from .forests import WScheme, w_integrate, y_matrix

    scheme = scheme or WScheme()
    bp = jungle.blocks()
    for blk in bp.blocks:
        if len({pattern[a] for a in blk}) != len(blk):
            return 0.0, 0.0
    terms = oriented_terms(jungle, pattern)
    if not terms:
        return 0.0, 0.0

    def evaluator(w):
        Y = y_matrix(jungle, w, bp)

        def cov(i, j):
            return Y[..., i[0], j[0]] if i[1] == j[1] else np.zeros(Y.shape[:-2])

        return sum(s * grassmann_gaussian(cov, m) for s, m in terms)

    val, err = w_integrate(len(jungle.fermionic), evaluator, scheme)
    return float(val.real), err
