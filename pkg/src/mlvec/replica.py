"""Vertex factors on replica fields and their Gaussian expectations.

Each vertex ``a`` of a jungle carries one replica ``sigma_a`` of the
intermediate field and one vertex factor:

* interaction kind (slice ``j``): ``W = exp(-V_j(sigma)) - 1``;
* source kind (external legs ``q`` attached): ``prod_q G_{p_q}(sigma)``, the
  result of differentiating ``exp(t_q G_{p_q}(sigma)) - 1`` once in each
  attached source parameter ``t_q`` at ``t = 0``.

Bosonic tree edges differentiate the factors at both ends; the replicas are
jointly Gaussian with the interpolated covariance ``X(w)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm, qmc

from . import jets
from .errors import BranchCut, NotPSD, PoleHit
from .forests import WScheme, simplex_rule, tensor_rule, x_matrix
from .model import POLE_EPS, CouplingPoint, V_j

INTERACTION = "interaction"
SOURCE = "source"


@dataclass(frozen=True)
class WFactor:
    """Vertex factor.  ``momenta`` are the slice momenta (interaction kind)
    or the attached external momenta (source kind)."""

    kind: str
    slice: int
    momenta: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in (INTERACTION, SOURCE):
            raise ValueError(self.kind)


def _check_cut(sigma, c, p):
    """Raise if ``1 - c sigma`` touches the non-positive real axis (or vanishes)."""
    if np.isrealobj(sigma):
        # for real sigma the cut needs an imaginary-free c, i.e. lambda purely imaginary
        if c.imag == 0 and c.real != 0 and np.max(np.abs(sigma)) * abs(c.real) >= 1:
            s = float(np.max(np.abs(sigma)))
            raise BranchCut(f"branch cut at p={p}, |sigma|={s:.3g}", witness=p)
        return
    one_minus = 1 - c * sigma
    if np.any((np.imag(one_minus) == 0) & (np.real(one_minus) <= 0)):
        raise BranchCut(f"branch cut at p={p}", witness=p)


def _as_sigma(sigma):
    sigma = np.asarray(sigma)
    if np.iscomplexobj(sigma) and not np.any(sigma.imag):
        sigma = sigma.real
    return sigma.astype(float) if np.isrealobj(sigma) else sigma.astype(complex)


def w_factor_jet(wf: WFactor, sigma, cp: CouplingPoint, order: int) -> jets.Jet:
    """Taylor jet in ``sigma`` of the vertex factor, to the given order.

    Interaction kind: ``expm1(phi)`` with ``phi = -V_j``, whose Taylor
    coefficients are ``sum_p c_p u_p r_p`` (first) and ``sum_p (c_p r_p)^m / m``
    (``m >= 2``), where ``c_p = i lambda / p``, ``u_p = c_p sigma`` and
    ``r_p = 1 / (1 - u_p)``.  Source kind: ``prod_q G_{p_q}`` with
    ``G_p`` coefficients ``(c_p r_p)^m r_p / p``.
    """
    sigma = _as_sigma(sigma)
    shape = (order + 1,) + sigma.shape
    if wf.kind == INTERACTION:
        phi = np.zeros(shape, dtype=complex)
        for p in wf.momenta:
            c = 1j * cp.lam / p
            if c == 0:
                continue
            _check_cut(sigma, c, p)
            u = c * sigma
            phi[0] -= u + np.log1p(-u)
            if order >= 1:
                r = 1 / (1 - u)
                cr = c * r
                phi[1] += u * cr
                pw = cr
                for m in range(2, order + 1):
                    pw = pw * cr
                    phi[m] += pw / m
        return jets.expm1(jets.Jet(phi))
    if not wf.momenta:
        return jets.Jet(np.zeros(shape, dtype=complex))
    out = None
    for p in wf.momenta:
        c = 1j * cp.lam / p
        one_minus = 1 - c * sigma
        if np.any(np.abs(one_minus) < POLE_EPS):
            raise PoleHit(f"resolvent pole at p={p}")
        r = 1 / one_minus
        co = np.empty(shape, dtype=complex)
        co[0] = r / p
        cr = c * r
        for m in range(1, order + 1):
            co[m] = co[m - 1] * cr
        out = jets.Jet(co) if out is None else out * jets.Jet(co)
    return out


def w_factor_eval(wf: WFactor, sigma, cp: CouplingPoint):
    v = w_factor_jet(wf, sigma, cp, 0).value
    return complex(v) if np.ndim(v) == 0 else v


def w_factor_derivative(wf: WFactor, sigma, cp: CouplingPoint, m: int):
    """``d^m/dsigma^m`` of the vertex factor, by forward-mode Taylor arithmetic."""
    v = w_factor_jet(wf, sigma, cp, m).derivative(m)
    return complex(v) if np.ndim(v) == 0 else v


# --- Gaussian expectations --------------------------------------------------

@dataclass(frozen=True)
class GaussScheme:
    """Gauss-Hermite orders per effective rank; Sobol sampling above ``max_gh_rank``."""

    orders: tuple[int, ...] = (32, 20, 12, 8, 6)
    max_gh_rank: int = 5
    qmc_log2: int = 14
    seed: int = 0

    def order(self, rank: int) -> int:
        return self.orders[min(rank, len(self.orders)) - 1]

    def low_order(self, rank: int) -> int:
        o = self.order(rank)
        return max(2, o - max(2, o // 4))


@lru_cache(maxsize=None)
def hermite_grid(rank: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilists' Gauss-Hermite tensor nodes ``(m, rank)`` and weights summing to 1."""
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / math.sqrt(2 * math.pi)
    return (np.array(list(product(x, repeat=rank))).reshape(-1, rank),
            np.prod(np.array(list(product(w, repeat=rank))).reshape(-1, rank), axis=1))


@lru_cache(maxsize=None)
def sobol_normal(rank: int, log2: int, seed: int) -> np.ndarray:
    u = qmc.Sobol(rank, scramble=True, seed=seed).random_base2(log2)
    return norm.ppf(u)


def psd_sqrt(X: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """``L`` with ``L L^T = X`` for (a batch of) symmetric PSD ``X``; drops null directions."""
    evals, evecs = np.linalg.eigh(X)
    if np.any(evals < -1e-10):
        raise NotPSD(f"smallest eigenvalue {evals.min():.3e}")
    return evecs * np.sqrt(np.clip(evals, 0, None))[..., None, :]


def _expect_batch(L: np.ndarray, funcs: Sequence[Callable], nodes: np.ndarray,
                  weights: np.ndarray | None) -> np.ndarray:
    # L: (B, s, r); nodes: (m, r) -> sigma: (B, m, s)
    sigma = np.einsum("bsr,mr->bms", L, nodes)
    val = np.ones(sigma.shape[:2], dtype=complex)
    for a, f in enumerate(funcs):
        val = val * f(sigma[..., a])
    if weights is None:
        return val.mean(axis=1)
    return val @ weights


def gaussian_expectation(X, funcs: Sequence[Callable], scheme: GaussScheme = GaussScheme()):
    """``E[prod_a f_a(sigma_a)]`` for ``sigma ~ N(0, X)``; returns ``(value, error)``.

    The square root of ``X`` is taken in its eigenbasis so rank-deficient
    covariances integrate over their effective rank only.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] != len(funcs):
        raise ValueError("one function per coordinate")
    L = psd_sqrt(X)
    keep = np.linalg.norm(L, axis=0) > 1e-12 * max(1.0, float(np.abs(L).max()))
    L = L[:, keep][None]
    rank = int(keep.sum())
    if rank == 0:
        v = complex(np.prod([complex(np.asarray(f(np.zeros(1)))[0]) for f in funcs]))
        return v, 0.0
    if rank > scheme.max_gh_rank:
        vals = [complex(_expect_batch(L, funcs, sobol_normal(rank, scheme.qmc_log2, scheme.seed + r),
                                      None)[0]) for r in range(4)]
        return complex(np.mean(vals)), float(np.std(vals, ddof=1) / 2)
    hi = complex(_expect_batch(L, funcs, *hermite_grid(rank, scheme.order(rank)))[0])
    lo = complex(_expect_batch(L, funcs, *hermite_grid(rank, scheme.low_order(rank)))[0])
    return hi, abs(hi - lo)


def wfactor_functions(cp: CouplingPoint, factors: Sequence[tuple[WFactor, int]]) -> list[Callable]:
    """Callables ``sigma -> d^m W(sigma)`` for ``(WFactor, m)`` pairs."""
    return [lambda s, wf=wf, m=m: w_factor_derivative(wf, s, cp, m) for wf, m in factors]


LADDER = (0.5, 0.75, 1.0)


def check_real_line(cp: CouplingPoint) -> None:
    """Gaussian expectations run over all real ``sigma``.  For purely imaginary
    ``lambda`` the point ``1 - i lambda sigma / p = 0`` lies on that line, so
    the expectation is undefined whatever the quadrature nodes."""
    if cp.lam != 0 and cp.lam.real == 0:
        raise BranchCut(f"lambda = {cp.lam} is purely imaginary: the branch point "
                        "lies on the real sigma line", witness=cp.g)


def _ladder(top: int, floor: int) -> list[int]:
    out = []
    for f in LADDER:
        o = max(floor, int(round(top * f)))
        if not out or o > out[-1]:
            out.append(o)
    return out


def _vanishing_at_zero_coupling(cp: CouplingPoint, factors) -> bool:
    return cp.lam == 0 and any(wf.kind == INTERACTION or m > 0 for wf, m in factors)


def block_integral(cp: CouplingPoint, factors: Sequence[tuple[WFactor, int]],
                   edges: Sequence[tuple[int, int]], gauss: GaussScheme = GaussScheme(),
                   wscheme: WScheme = WScheme(), chunk_points: int = 4_000_000,
                   rtol: float | None = None, atol: float = 0.0):
    """``int dw  E_{X(w)}[prod_a d^{m_a} W_a(sigma_a)]`` over one Bosonic block.

    ``edges`` is the block's Bosonic tree on local vertices ``0..s-1``.
    Returns ``(value, error)``.

    With ``rtol=None`` the value uses the full orders of both schemes and the
    error adds the Gauss-Hermite and ``w``-rule differences to lower orders.
    With a tolerance the orders climb a ladder (half, three quarters, full):
    first the ``w``-rule at the lowest Gauss-Hermite order, then the
    Gauss-Hermite order at the chosen ``w``-rule, each stopping once two
    successive levels agree to ``max(atol, rtol |value|)``.  The reported
    error is the sum of the two last differences.
    """
    s = len(factors)
    check_real_line(cp)
    if _vanishing_at_zero_coupling(cp, factors):
        # exp(-V) - 1 and every sigma-derivative of G vanish identically at lambda = 0
        return 0j, 0.0
    funcs = wfactor_functions(cp, factors)
    if not edges:
        if s != 1:
            raise ValueError("a block without edges has one vertex")
        return gaussian_expectation(np.eye(1), funcs, gauss)
    E = len(edges)
    rank = s

    def expect(wnodes, order):
        nodes, weights = hermite_grid(rank, order)
        X = x_matrix(s, edges, wnodes)
        L = psd_sqrt(X)
        step = max(1, chunk_points // len(nodes))
        return np.concatenate([_expect_batch(L[i:i + step], funcs, nodes, weights)
                               for i in range(0, len(L), step)])

    if rtol is None:
        (xh, wh), (xl, wl) = wscheme.rules(E)
        hi = expect(xh, gauss.order(rank))
        value = complex(wh @ hi)
        err_gh = abs(value - complex(wh @ expect(xh, gauss.low_order(rank))))
        err_w = abs(value - complex(wl @ expect(xl, gauss.order(rank))))
        return value, err_gh + err_w

    def rule(order):
        return simplex_rule(E, order) if wscheme.resolve(E) == "simplex" else tensor_rule(E, order)

    def tolerance(value):
        return max(atol, rtol * abs(value))

    gh = _ladder(gauss.order(rank), 2)
    wo = _ladder(wscheme.order, 2)
    # w first, at the cheapest Gauss-Hermite order; then Gauss-Hermite at that w-rule
    prev, err_w, w_order = None, 0.0, wo[-1]
    for w_order in wo:
        xw, ww = rule(w_order)
        value = complex(ww @ expect(xw, gh[0]))
        if prev is not None:
            err_w = abs(value - prev)
            if err_w <= tolerance(value):
                break
        prev = value
    xw, ww = rule(w_order)
    prev, err_gh = value, 0.0
    for g_order in gh[1:]:
        value = complex(ww @ expect(xw, g_order))
        err_gh = abs(value - prev)
        if err_gh <= tolerance(value):
            break
        prev = value
    return value, err_w + err_gh
