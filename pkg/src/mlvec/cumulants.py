"""Set partitions and the moment -> cumulant Moebius inversion."""
from __future__ import annotations

from itertools import combinations
from math import factorial
from typing import Callable, Hashable, Iterator, Sequence, TypeVar

T = TypeVar("T")


def set_partitions(items: Sequence[Hashable]) -> Iterator[list[tuple]]:
    """Yield every partition of ``items`` into non-empty blocks, each once."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    # the block containing `first` is chosen first, so blocks never repeat
    for r in range(len(rest) + 1):
        for others in combinations(range(len(rest)), r):
            block = (first,) + tuple(rest[i] for i in others)
            remaining = [x for i, x in enumerate(rest) if i not in others]
            for tail in set_partitions(remaining):
                yield [block] + tail


def mobius_coefficient(n_blocks: int) -> int:
    """``(-1)^(b-1) (b-1)!``, the partition-lattice Moebius value."""
    return (-1) ** (n_blocks - 1) * factorial(n_blocks - 1)


def cumulant_from_moments(legs: Sequence[int], moment: Callable[[frozenset], T]) -> T:
    """Joint cumulant of ``legs`` from a moment function on subsets of legs.

    ``moment`` receives a frozenset of leg indices and must return something
    supporting ``*``, ``+`` and integer scaling (floats, complex numbers or
    power series all work).
    """
    legs = list(legs)
    if not legs:
        raise ValueError("the cumulant of the empty set is log Z, not a moment expression")
    total = None
    for partition in set_partitions(legs):
        term = None
        for block in partition:
            m = moment(frozenset(block))
            term = m if term is None else term * m
        term = mobius_coefficient(len(partition)) * term
        total = term if total is None else total + term
    return total
