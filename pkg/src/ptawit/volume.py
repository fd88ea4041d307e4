"""Exact zone volumes by counting full-dimensional region cells."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from . import dbm as D
from .dbm import Dbm
from .numeric import ZERO_LE, Bound


class UnboundedZone(ValueError):
    pass


@dataclass(frozen=True)
class VolumeResult:
    value: Fraction
    cells: int
    n: int

    @property
    def granularity(self) -> Fraction:
        return Fraction(1, math.factorial(self.n))


def zone_bound(m: Dbm) -> int | None:
    """Largest finite absolute upper bound of a canonical zone, None if unbounded."""
    m = D.canonicalize(m)
    if m.is_empty:
        return 0
    ups = [m[i, 0] for i in range(1, m.dim)]
    if any(b.is_infinite for b in ups):
        return None
    return max((b.value for b in ups), default=0)


def cell_representatives(n: int, K: int):
    """One interior point per full-dimensional cell of ``[0, K]^n``.

    Cells are indexed by an integer-part vector in ``{0..K-1}^n`` and a strict
    ordering of the fractional parts.
    """
    for ints in itertools.product(range(K), repeat=n):
        for perm in itertools.permutations(range(n)):
            v = [Fraction(0)] * n
            for rank, c in enumerate(perm):
                v[c] = ints[c] + Fraction(rank + 1, n + 1)
            yield (Fraction(0), *v)


def dbm_volume(m: Dbm, K: int) -> VolumeResult:
    n = len(m.clocks)
    m = D.canonicalize(m)
    if m.is_empty:
        return VolumeResult(Fraction(0), 0, n)
    k = zone_bound(m)
    if k is None or k > K:
        raise UnboundedZone(f"zone is not contained in [0, {K}]^{n}")
    if n == 0:
        return VolumeResult(Fraction(1), 1, 0)
    hits = sum(1 for v in cell_representatives(n, K) if D.satisfies(v, m))
    return VolumeResult(Fraction(hits, math.factorial(n)), hits, n)


def mi_generator(I: Iterable[tuple[int, int]], n: int, clocks=None) -> Dbm:
    """Order-polytope DBM: unit box plus ``c_i <= c_j`` for each ``(i, j)`` in I.

    Diagonal entries are (0,<=) so the matrix is a proper DBM.
    """
    I = set(I)
    clocks = tuple(clocks) if clocks is not None else tuple(f"c{i}" for i in range(1, n + 1))
    rows = []
    for i in range(n + 1):
        row = []
        for j in range(n + 1):
            if i == j or i == 0:
                row.append(ZERO_LE)
            elif j == 0:
                row.append(Bound(1, False))
            elif (i, j) in I:
                row.append(ZERO_LE)
            else:
                row.append(Bound(1, False))
        rows.append(row)
    return Dbm(clocks, rows)
