"""Labelled forests, spanning trees and two-level jungles, the interpolated
covariances ``X(w)`` / ``Y(w)``, and integration over the ``w`` parameters.

Vertices are ``0..n-1`` internally; edges are sorted pairs ``(a, b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import CapExceeded, CubatureNoConverge

Edge = tuple[int, int]

FOREST_CAP = 7
JUNGLE_CAP = 6


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


@dataclass(frozen=True)
class Forest:
    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        dsu = _DSU(self.n)
        for a, b in self.edges:
            if not dsu.union(a, b):
                raise ValueError(f"edge {(a, b)} closes a cycle")

    @property
    def is_spanning_tree(self) -> bool:
        return len(self.edges) == self.n - 1

    def components(self) -> tuple[tuple[int, ...], ...]:
        return components(self.n, self.edges)


def components(n: int, edges: Sequence[Edge]) -> tuple[tuple[int, ...], ...]:
    """Connected components, each sorted, ordered by smallest vertex."""
    dsu = _DSU(n)
    for a, b in edges:
        dsu.union(a, b)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(dsu.find(v), []).append(v)
    return tuple(sorted(tuple(g) for g in groups.values()))


def _all_pairs(n: int) -> list[Edge]:
    return list(combinations(range(n), 2))


def enumerate_forests(n: int, cap: int = FOREST_CAP) -> list[Forest]:
    """Every forest on ``n`` labelled vertices, each exactly once."""
    if n > cap:
        raise CapExceeded(f"n = {n} > cap {cap}")
    pairs = _all_pairs(n)
    out: list[Forest] = []

    def rec(i, chosen, parent):
        if i == len(pairs):
            out.append(Forest(n, tuple(chosen)))
            return
        rec(i + 1, chosen, parent)
        a, b = pairs[i]
        p = list(parent)

        def find(x):
            while p[x] != x:
                x = p[x]
            return x

        ra, rb = find(a), find(b)
        if ra != rb:
            p[rb] = ra
            rec(i + 1, chosen + [pairs[i]], p)

    rec(0, [], list(range(n)))
    return out


@lru_cache(maxsize=None)
def spanning_trees(n: int) -> tuple[tuple[Edge, ...], ...]:
    """All ``n^(n-2)`` labelled trees on ``n`` vertices, decoded from Pruefer codes."""
    if n == 1:
        return ((),)
    if n == 2:
        return (((0, 1),),)
    trees = []
    for code in product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in code:
            degree[v] += 1
        edges = []
        for v in code:
            leaf = min(u for u in range(n) if degree[u] == 1)
            edges.append(tuple(sorted((leaf, v))))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [x for x in range(n) if degree[x] == 1]
        edges.append((u, w))
        trees.append(tuple(sorted(edges)))
    return tuple(trees)


@dataclass(frozen=True)
class Jungle:
    """Two-level jungle: disjoint Bosonic and Fermionic edge sets whose union is a forest.

    Fermionic edges are stored in detailed form, between vertices of
    distinct Bosonic blocks.
    """

    n: int
    bosonic: tuple[Edge, ...]
    fermionic: tuple[Edge, ...]

    @property
    def edges(self) -> tuple[Edge, ...]:
        """Bosonic edges first, then Fermionic; this is the order of ``w``."""
        return self.bosonic + self.fermionic

    @property
    def is_tree(self) -> bool:
        return len(self.edges) == self.n - 1 and len(components(self.n, self.edges)) == 1

    def blocks(self) -> BlockPartition:
        return BlockPartition(components(self.n, self.bosonic))


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple[tuple[int, ...], ...]

    def block_of(self, a: int) -> int:
        for i, b in enumerate(self.blocks):
            if a in b:
                return i
        raise KeyError(a)

    def __len__(self):
        return len(self.blocks)


def enumerate_jungles(n: int, spanning: bool = True, cap: int = JUNGLE_CAP) -> Iterator[Jungle]:
    """All ordered pairs (Bosonic, Fermionic) of disjoint forests with forest union."""
    if n > cap:
        raise CapExceeded(f"n = {n} > cap {cap}")
    shapes = spanning_trees(n) if spanning else [f.edges for f in enumerate_forests(n)]
    for edges in shapes:
        for kinds in product((0, 1), repeat=len(edges)):
            yield Jungle(n,
                         tuple(e for e, k in zip(edges, kinds) if k == 0),
                         tuple(e for e, k in zip(edges, kinds) if k == 1))


def _tree_paths(n: int, edges: Sequence[Edge]) -> dict[tuple[int, int], tuple[int, ...] | None]:
    """Edge indices along the unique path between each ordered pair (None if disconnected)."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(n)}
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    paths = {}
    for s in range(n):
        seen = {s: ()}
        stack = [s]
        while stack:
            v = stack.pop()
            for u, i in adj[v]:
                if u not in seen:
                    seen[u] = seen[v] + (i,)
                    stack.append(u)
        for t in range(n):
            paths[s, t] = seen.get(t)
    return paths


def x_matrix(n: int, edges: Sequence[Edge], w) -> np.ndarray:
    """``X_ab(w)``: the minimum ``w`` along the forest path ``a -> b``.

    ``w`` has shape ``(..., len(edges))``; the result has shape ``(..., n, n)``.
    Disconnected pairs get 0, the diagonal 1.
    """
    w = np.asarray(w, dtype=float)
    batch = w.shape[:-1]
    X = np.zeros(batch + (n, n))
    for (a, b), path in _tree_paths(n, tuple(edges)).items():
        if path is None:
            continue
        X[..., a, b] = 1.0 if not path else np.min(w[..., list(path)], axis=-1)
    return X


def y_matrix(j: Jungle, w_fermionic, bp: BlockPartition | None = None) -> np.ndarray:
    """Block covariance ``Y_BB'``: minimum Fermionic ``w`` on the path between blocks.

    1 on the diagonal, 0 between blocks not joined by the jungle.
    """
    bp = bp or j.blocks()
    w = np.asarray(w_fermionic, dtype=float)
    block_edges = [tuple(sorted((bp.block_of(a), bp.block_of(b)))) for a, b in j.fermionic]
    return x_matrix(len(bp), block_edges, w)


# --- integration over w ------------------------------------------------------

@lru_cache(maxsize=None)
def _gauss_legendre01(order: int):
    x, wt = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, wt / 2


@lru_cache(maxsize=None)
def simplex_rule(n_edges: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on ``[0,1]^E`` that are Gauss-Legendre on every ordering simplex.

    Functions of ``min`` over subsets of the ``w`` are smooth on each region
    ``w_pi(1) <= ... <= w_pi(E)``, so the rule converges spectrally there.
    """
    if n_edges == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, wt = _gauss_legendre01(order)
    S = np.array(list(product(x, repeat=n_edges)))
    W = np.prod(np.array(list(product(wt, repeat=n_edges))), axis=1)
    # v_E = s_E, v_i = s_i * v_{i+1}; Jacobian prod_{i>=2} v_i
    v = np.empty_like(S)
    v[:, -1] = S[:, -1]
    for i in range(n_edges - 2, -1, -1):
        v[:, i] = S[:, i] * v[:, i + 1]
    jac = np.prod(v[:, 1:], axis=1) if n_edges > 1 else np.ones(len(S))
    nodes, weights = [], []
    for perm in permutations(range(n_edges)):
        w = np.empty_like(v)
        w[:, list(perm)] = v
        nodes.append(w)
        weights.append(W * jac)
    return np.concatenate(nodes), np.concatenate(weights)


@lru_cache(maxsize=None)
def tensor_rule(n_edges: int, order: int):
    if n_edges == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, wt = _gauss_legendre01(order)
    return (np.array(list(product(x, repeat=n_edges))),
            np.prod(np.array(list(product(wt, repeat=n_edges))), axis=1))


@dataclass(frozen=True)
class WScheme:
    """How to integrate over ``[0,1]^E``.

    ``kind`` is ``"simplex"`` (Gauss-Legendre per ordering simplex),
    ``"tensor"`` (plain tensor Gauss-Legendre) or ``"qmc"`` (scrambled Sobol).
    ``"auto"`` picks simplex up to ``max_simplex_edges`` edges and qmc beyond.
    """

    kind: str = "auto"
    order: int = 8
    qmc_log2: int = 13
    qmc_replicas: int = 8
    max_simplex_edges: int = 4
    seed: int = 0

    def resolve(self, n_edges: int) -> str:
        if self.kind != "auto":
            return self.kind
        return "simplex" if n_edges <= self.max_simplex_edges else "qmc"

    def rules(self, n_edges: int):
        """(high, low) node/weight pairs; their disagreement is the error estimate."""
        kind = self.resolve(n_edges)
        if kind == "simplex":
            return simplex_rule(n_edges, self.order), simplex_rule(n_edges, max(1, self.order - 2))
        if kind == "tensor":
            return tensor_rule(n_edges, self.order), tensor_rule(n_edges, max(1, self.order - 2))
        raise ValueError(kind)


def w_integrate(n_edges: int, evaluator: Callable[[np.ndarray], np.ndarray],
                scheme: WScheme = WScheme(), tol: float | None = None) -> tuple[complex, float]:
    """``int_{[0,1]^E} evaluator(w) dw`` with an error estimate.

    ``evaluator`` maps an ``(m, E)`` array of nodes to ``m`` values.
    """
    if n_edges == 0:
        return complex(np.asarray(evaluator(np.zeros((1, 0))))[0]), 0.0
    kind = scheme.resolve(n_edges)
    if kind == "qmc":
        vals = []
        for r in range(scheme.qmc_replicas):
            pts = qmc.Sobol(n_edges, scramble=True, seed=scheme.seed + r).random_base2(scheme.qmc_log2)
            vals.append(complex(np.mean(evaluator(pts))))
        vals = np.array(vals)
        value = complex(vals.mean())
        err = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    else:
        (xh, wh), (xl, wl) = scheme.rules(n_edges)
        value = complex(np.dot(wh, evaluator(xh)))
        err = abs(value - complex(np.dot(wl, evaluator(xl))))
    if tol is not None and err > tol:
        raise CubatureNoConverge(f"w-cubature error {err:.2e} > {tol:.2e}")
    return value, err


# --- forest formula exactness ---------------------------------------------------

class CouplingFunction:
    """A smooth function of the pair couplings ``x_ab`` with analytic partials.

    Subclasses implement ``partial(x, subset)``: ``x`` has shape
    ``(..., n_pairs)`` and ``subset`` is a tuple of pair indices to
    differentiate once each.
    """

    def __init__(self, n: int):
        self.n = n
        self.pairs = _all_pairs(n)

    def partial(self, x: np.ndarray, subset: tuple[int, ...]) -> np.ndarray:
        raise NotImplementedError

    def at_one(self) -> complex:
        return complex(self.partial(np.ones((1, len(self.pairs))), ())[0])


class ExpLinear(CouplingFunction):
    """``exp(sum_ab c_ab x_ab)``."""

    def __init__(self, n, coefficients=None):
        super().__init__(n)
        self.c = np.ones(len(self.pairs)) if coefficients is None else np.asarray(coefficients, float)

    def partial(self, x, subset):
        return np.prod(self.c[list(subset)]) * np.exp(x @ self.c)


class ProductLinear(CouplingFunction):
    """``prod_ab (1 + c_ab x_ab)``, multilinear in the couplings."""

    def __init__(self, n, coefficients=None):
        super().__init__(n)
        self.c = np.full(len(self.pairs), 0.5) if coefficients is None else np.asarray(coefficients, float)

    def partial(self, x, subset):
        out = np.ones(x.shape[:-1])
        for i, c in enumerate(self.c):
            out = out * (c if i in subset else 1 + c * x[..., i])
        return out


class CosLinear(CouplingFunction):
    """``cos(sum_ab c_ab x_ab)``."""

    def __init__(self, n, coefficients=None):
        super().__init__(n)
        self.c = np.linspace(0.3, 1.1, len(self.pairs)) if coefficients is None else np.asarray(coefficients, float)

    def partial(self, x, subset):
        k = len(subset)
        phase = x @ self.c + k * math.pi / 2
        return np.prod(self.c[list(subset)]) * np.cos(phase)


class Constant(CouplingFunction):
    def __init__(self, n, value=1.0):
        super().__init__(n)
        self.value = value

    def partial(self, x, subset):
        return np.full(x.shape[:-1], self.value if not subset else 0.0)


def bkar_sum(f: CouplingFunction, scheme: WScheme = WScheme()) -> complex:
    """``sum_F int dw_F  (prod_{l in F} d/dx_l) f (X_F(w))``."""
    n = f.n
    index = {p: i for i, p in enumerate(f.pairs)}
    total = 0j
    for forest in enumerate_forests(n):
        subset = tuple(index[e] for e in forest.edges)

        def integrand(w, forest=forest, subset=subset):
            X = x_matrix(n, forest.edges, w)
            if not f.pairs:
                x = np.zeros(X.shape[:-2] + (0,))
            else:
                x = np.stack([X[..., a, b] for a, b in f.pairs], axis=-1)
            return f.partial(x, subset)

        total += w_integrate(len(forest.edges), integrand, scheme)[0]
    return total


def bkar_exactness_check(f: CouplingFunction, scheme: WScheme = WScheme()) -> float:
    """Residual ``|forest-formula sum - f(all couplings 1)|``; zero for an exact formula."""
    if f.n > 4:
        raise CapExceeded("exactness check limited to n <= 4")
    return abs(bkar_sum(f, scheme) - f.at_one())
