"""Difference bounds matrices over a fixed ordered clock set.

Index 0 is the zero clock. Entry ``(i, j)`` bounds ``c_i - c_j``. The empty
zone is a distinguished marker (``entries is None``) rather than an
inconsistent matrix.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .numeric import (
    INF,
    INF_LT,
    ZERO_LE,
    Bound,
    bound_add,
    bound_max,
    bound_min,
)

Valuation = tuple  # (0, v(c1), ..., v(cn)) as Fractions


class DbmError(Exception):
    pass


class ClockMismatch(DbmError):
    pass


class EmptyInput(DbmError):
    pass


class NonCanonicalInput(DbmError):
    pass


class EmptySet(DbmError):
    pass


class Dbm:
    __slots__ = ("clocks", "entries", "_canonical", "_hash")

    def __init__(self, clocks: Sequence[str], entries=None, *, _canonical: bool = False):
        self.clocks = tuple(clocks)
        if entries is not None:
            entries = tuple(tuple(row) for row in entries)
            n = len(self.clocks) + 1
            if len(entries) != n or any(len(row) != n for row in entries):
                raise ValueError("DBM shape does not match the clock set")
        self.entries = entries
        self._canonical = _canonical or entries is None
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def universe(cls, clocks: Sequence[str]) -> "Dbm":
        n = len(clocks) + 1
        rows = [[INF_LT] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = ZERO_LE
            rows[0][i] = ZERO_LE
        return cls(clocks, rows, _canonical=True)

    @classmethod
    def empty(cls, clocks: Sequence[str]) -> "Dbm":
        return cls(clocks, None)

    @classmethod
    def from_bounds(cls, clocks: Sequence[str], bounds: Iterable[tuple[int, int, Bound]]) -> "Dbm":
        """Universe tightened by ``c_i - c_j`` bounds; not canonicalized."""
        rows = [list(r) for r in cls.universe(clocks).entries]
        for i, j, b in bounds:
            rows[i][j] = bound_min(rows[i][j], b)
        return cls(clocks, rows)

    # basic queries ------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.clocks) + 1

    @property
    def is_empty(self) -> bool:
        return self.entries is None

    def __getitem__(self, ij) -> Bound:
        if self.entries is None:
            raise EmptyInput("the empty DBM has no entries")
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return (
            isinstance(other, Dbm)
            and self.clocks == other.clocks
            and self.entries == other.entries
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.clocks, self.entries))
        return self._hash

    def __repr__(self):
        return f"Dbm({self.clocks}, {self.to_text()!r})"

    def index(self, clock: str) -> int:
        return self.clocks.index(clock) + 1

    def name(self, i: int) -> str:
        return "0" if i == 0 else self.clocks[i - 1]

    # rendering ----------------------------------------------------------
    def dump(self) -> str:
        """One constraint per line, ``ci - cj <= a``; infinite entries omitted."""
        if self.entries is None:
            return "false"
        lines = []
        for i in range(self.dim):
            for j in range(self.dim):
                b = self.entries[i][j]
                if i == j or b.value == INF:
                    continue
                op = "<" if b.strict else "<="
                lines.append(f"{self.name(i)} - {self.name(j)} {op} {b.value}")
        return "\n".join(lines)

    def atoms(self) -> list[str]:
        """Non-trivial constraints of the matrix as clock-constraint atoms."""
        if self.entries is None:
            return ["false"]
        out = []
        for i in range(self.dim):
            for j in range(self.dim):
                if i == j:
                    continue
                b = self.entries[i][j]
                if b.value == INF or (i == 0 and b == ZERO_LE):
                    continue
                out.append(_atom_text(self.name(i), self.name(j), b))
        return out

    def to_text(self) -> str:
        atoms = self.atoms()
        return " & ".join(atoms) if atoms else "true"


def _atom_text(ci: str, cj: str, b: Bound) -> str:
    op = "<" if b.strict else "<="
    if cj == "0":
        return f"{ci}{op}{b.value}"
    if ci == "0":
        # 0 - cj < a  <=>  cj > -a
        op = ">" if b.strict else ">="
        return f"{cj}{op}{-b.value}"
    return f"{ci}-{cj}{op}{b.value}"


def _check_clocks(m: Dbm, n: Dbm) -> None:
    if m.clocks != n.clocks:
        raise ClockMismatch(f"{m.clocks} != {n.clocks}")


def canonicalize(m: Dbm) -> Dbm:
    """All-pairs shortest paths closure; the empty marker if inconsistent."""
    if m.entries is None or m._canonical:
        return m
    n = m.dim
    d = [list(row) for row in m.entries]
    # valuations are non-negative by definition
    for j in range(n):
        d[0][j] = bound_min(d[0][j], ZERO_LE)
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik.value == INF:
                continue
            di = d[i]
            for j in range(n):
                dkj = dk[j]
                if dkj.value == INF:
                    continue
                s = bound_add(dik, dkj)
                if s < di[j]:
                    di[j] = s
        for i in range(n):
            if d[i][i] < ZERO_LE:
                return Dbm.empty(m.clocks)
    return Dbm(m.clocks, d, _canonical=True)


def is_canonical(m: Dbm) -> bool:
    return m.entries is None or canonicalize(Dbm(m.clocks, m.entries)) == m


def intersect(m: Dbm, n: Dbm) -> Dbm:
    """Entrywise minimum (conjunction); not canonicalized."""
    _check_clocks(m, n)
    if m.entries is None or n.entries is None:
        return Dbm.empty(m.clocks)
    rows = [
        [bound_min(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(m.entries, n.entries)
    ]
    return Dbm(m.clocks, rows)


def time_closure(m: Dbm) -> Dbm:
    """Drop the absolute upper bounds ``c_i - 0``."""
    if m.entries is None:
        raise EmptyInput("time closure of the empty zone")
    rows = [list(r) for r in m.entries]
    for i in range(1, m.dim):
        rows[i][0] = INF_LT
    return Dbm(m.clocks, rows, _canonical=m._canonical)


def zone_closure(m: Dbm, n: Dbm) -> Dbm:
    """Entrywise maximum of two canonical DBMs; Empty is neutral."""
    _check_clocks(m, n)
    if m.entries is None:
        if n.entries is not None and not is_canonical(n):
            raise NonCanonicalInput("right operand is not canonical")
        return n
    if n.entries is None:
        if not is_canonical(m):
            raise NonCanonicalInput("left operand is not canonical")
        return m
    if not is_canonical(m):
        raise NonCanonicalInput("left operand is not canonical")
    if not is_canonical(n):
        raise NonCanonicalInput("right operand is not canonical")
    rows = [
        [bound_max(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(m.entries, n.entries)
    ]
    return Dbm(m.clocks, rows, _canonical=True)


def includes(m: Dbm, n: Dbm) -> bool:
    """Whether ``Val(n)`` is a subset of ``Val(m)``."""
    _check_clocks(m, n)
    n = canonicalize(n)
    if n.entries is None:
        return True
    m = canonicalize(m)
    if m.entries is None:
        return False
    return all(
        b._key <= a._key for ra, rb in zip(m.entries, n.entries) for a, b in zip(ra, rb)
    )


def equivalent(m: Dbm, n: Dbm) -> bool:
    return canonicalize(m) == canonicalize(n)


def reset(m: Dbm, clocks: Iterable) -> Dbm:
    """Canonical DBM of ``{v[C:=0] | v in Val(m)}``; clocks by name or index."""
    m = canonicalize(m)
    if m.entries is None:
        raise EmptyInput("reset of the empty zone")
    rows = [list(r) for r in m.entries]
    n = m.dim
    for c in clocks:
        k = c if isinstance(c, int) else m.index(c)
        for j in range(n):
            rows[k][j] = rows[0][j]
            rows[j][k] = rows[j][0]
        rows[k][k] = ZERO_LE
    return Dbm(m.clocks, rows, _canonical=True)


def satisfies(v: Valuation, m: Dbm) -> bool:
    if m.entries is None:
        return False
    n = m.dim
    for i in range(n):
        vi = v[i]
        row = m.entries[i]
        for j in range(n):
            if not row[j].admits(vi - v[j]):
                return False
    return True


def canonical_dbm_of_set(r, clocks: Sequence[str] | None = None) -> Dbm:
    """Smallest canonical DBM containing a region or a finite union of DBMs.

    ``r`` is either an object with a ``canonical_dbm()`` method (a region) or
    an iterable of DBMs over the same clocks.
    """
    if hasattr(r, "canonical_dbm"):
        return r.canonical_dbm()
    result = None
    for m in r:
        m = canonicalize(m)
        result = m if result is None else zone_closure(result, m)
    if result is None:
        if clocks is None:
            raise EmptySet("canonical DBM of an empty family")
        return Dbm.empty(clocks)
    if result.entries is None:
        raise EmptySet("canonical DBM of the empty set")
    return result


def point_dbm(clocks: Sequence[str], values: Sequence[int]) -> Dbm:
    """Canonical DBM of a single integer point."""
    v = (0, *values)
    n = len(v)
    rows = [[Bound(v[i] - v[j], False) for j in range(n)] for i in range(n)]
    return Dbm(clocks, rows, _canonical=True)


def valuation(*values) -> Valuation:
    return (Fraction(0), *(Fraction(x) for x in values))
