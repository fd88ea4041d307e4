"""Region quotient MDP of the PTA semantics.

States are regions (location, integer parts, fraction ordering) reachable from
the initial region; goal and fail collapse into two absorbing sink ids.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import dbm as D
from .dbm import Dbm
from .model import Pta
from .numeric import INF_LT, ZERO_LE, Bound

GOAL = -1
FAIL = -2
TAU = "tau"
TIMELOCK = "timelock"
DIVERGE = "diverge"


class QuotientError(Exception):
    pass


class UnboundedConstant(QuotientError):
    pass


class InitialInvariantViolated(QuotientError):
    pass


class InvariantViolated(QuotientError):
    pass


class RegionSplit(QuotientError):
    """A constraint cuts through a region, so regions are too coarse for it."""


@dataclass(frozen=True)
class Region:
    """A clock region attached to a location.

    ``ints[i]`` is the integer part of clock i, or ``K + 1`` when the clock
    exceeds K. ``ranks[i]`` orders fractional parts: 0 means zero fraction,
    blocks 1..m have increasing fractions. Clocks above K carry rank 0.
    """

    location: str
    clocks: tuple
    K: int
    ints: tuple
    ranks: tuple

    def big(self, i: int) -> bool:
        return self.ints[i] > self.K

    def canonical_dbm(self) -> Dbm:
        n = len(self.clocks)
        K = self.K
        ints = (0, *self.ints)
        ranks = (0, *self.ranks)
        big = (False, *(self.big(i) for i in range(n)))
        rows = []
        for i in range(n + 1):
            row = []
            for j in range(n + 1):
                if i == j:
                    row.append(ZERO_LE)
                elif big[i]:
                    row.append(INF_LT)
                elif big[j]:
                    sup_i = ints[i] + (1 if ranks[i] else 0)
                    row.append(Bound(sup_i - K, True))
                elif ranks[i] == ranks[j]:
                    row.append(Bound(ints[i] - ints[j], False))
                elif ranks[i] > ranks[j]:
                    row.append(Bound(ints[i] - ints[j] + 1, True))
                else:
                    row.append(Bound(ints[i] - ints[j], True))
            rows.append(row)
        return Dbm(self.clocks, rows, _canonical=True)

    def representative(self) -> tuple:
        m = max(self.ranks, default=0)
        p = max(1, math.ceil(math.log2(m + 1))) if m else 1
        denom = 2**p
        vals = []
        for i in range(len(self.clocks)):
            if self.big(i):
                vals.append(Fraction(self.K + 1))
            else:
                vals.append(self.ints[i] + Fraction(self.ranks[i], denom))
        return (Fraction(0), *vals)

    def time_successor(self) -> "Region | None":
        """Immediate time successor, or None if delays stay in this region."""
        n = len(self.clocks)
        small = [i for i in range(n) if not self.big(i)]
        if not small:
            return None
        zero = [i for i in small if self.ranks[i] == 0]
        ints = list(self.ints)
        ranks = list(self.ranks)
        if zero:
            for i in small:
                if ranks[i] == 0:
                    if ints[i] == self.K:
                        ints[i] = self.K + 1
                    ranks[i] = 1
                else:
                    ranks[i] += 1
            for i in range(n):
                if ints[i] > self.K:
                    ranks[i] = 0
        else:
            top = max(ranks[i] for i in small)
            for i in small:
                if ranks[i] == top:
                    ints[i] += 1
                    ranks[i] = 0
        return self._normalized(self.location, ints, ranks)

    def reset(self, clocks, location: str) -> "Region":
        ints = list(self.ints)
        ranks = list(self.ranks)
        for c in clocks:
            k = self.clocks.index(c)
            ints[k] = 0
            ranks[k] = 0
        return self._normalized(location, ints, ranks)

    def _normalized(self, location, ints, ranks) -> "Region":
        used = sorted({r for i, r in enumerate(ranks) if r and ints[i] <= self.K})
        renum = {r: k + 1 for k, r in enumerate(used)}
        ranks = [renum.get(r, 0) if ints[i] <= self.K else 0 for i, r in enumerate(ranks)]
        return Region(location, self.clocks, self.K, tuple(ints), tuple(ranks))

    def label(self) -> str:
        parts = []
        for i, c in enumerate(self.clocks):
            if self.big(i):
                parts.append(f"{c}>{self.K}")
            elif self.ranks[i] == 0:
                parts.append(f"{c}={self.ints[i]}")
            else:
                parts.append(f"{c}~{self.ints[i]}.{self.ranks[i]}")
        return f"{self.location}[{', '.join(parts)}]"


def region_of(location: str, v: Sequence, K: int, clocks: Sequence[str], inv: Dbm | None = None) -> Region:
    """Region of valuation ``v = (0, v1, ..., vn)`` at ``location``."""
    if inv is not None and not D.satisfies(tuple(Fraction(x) for x in v), inv):
        raise InvariantViolated(f"valuation violates the invariant of {location}")
    vals = [Fraction(x) for x in v[1:]]
    ints, fracs = [], []
    for x in vals:
        if x > K:
            ints.append(K + 1)
            fracs.append(None)
        else:
            i = math.floor(x)
            ints.append(i)
            fracs.append(x - i)
    distinct = sorted({f for f in fracs if f})
    ranks = [0 if not f else distinct.index(f) + 1 for f in fracs]
    return Region(location, tuple(clocks), K, tuple(ints), tuple(ranks))


def representative(r: Region) -> tuple:
    return r.representative()


@dataclass(frozen=True)
class Choice:
    action: str
    transition: int | None  # index into pta.transitions[loc]; None for tau/timelock
    dist: tuple  # ((target id, prob), ...) sorted by target id

    def prob(self, target: int) -> Fraction:
        for t, p in self.dist:
            if t == target:
                return p
        return Fraction(0)


@dataclass
class QuotientMdp:
    pta: Pta
    K: int
    states: list
    index: dict
    choices: list
    initial: int
    _dbms: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.states)

    def location(self, s: int) -> str:
        if s == GOAL:
            return self.pta.goal
        if s == FAIL:
            return self.pta.fail
        return self.states[s].location

    def dbm(self, s: int) -> Dbm:
        m = self._dbms.get(s)
        if m is None:
            m = self._dbms[s] = self.states[s].canonical_dbm()
        return m

    def back_map(self, s: int) -> tuple[str, Dbm]:
        return self.location(s), self.dbm(s)

    def num_rows(self) -> int:
        return sum(len(c) for c in self.choices)

    def name(self, s: int) -> str:
        if s == GOAL:
            return "goal"
        if s == FAIL:
            return "fail"
        return f"s{s}"

    def to_dot(self) -> str:
        lines = ["digraph quotient {", "  rankdir=LR;"]
        lines.append('  goal [shape=doublecircle, label="goal"];')
        lines.append('  fail [shape=doublecircle, label="fail"];')
        for s, r in enumerate(self.states):
            text = self.dbm(s).to_text().replace('"', '\\"')
            shape = "box, style=bold" if s == self.initial else "box"
            lines.append(f'  s{s} [shape={shape}, label="{r.location} | {text}"];')
        for s, cs in enumerate(self.choices):
            for k, c in enumerate(cs):
                if c.action == TAU:
                    (t, _), = c.dist
                    lines.append(f"  s{s} -> {self.name(t)} [style=dashed];")
                    continue
                hub = f"c{s}_{k}"
                lines.append(f'  {hub} [shape=point, label=""];')
                lines.append(f'  s{s} -> {hub} [arrowhead=none, label="{c.action}"];')
                for t, p in c.dist:
                    lines.append(f'  {hub} -> {self.name(t)} [label="{p}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class _Oracle:
    """Cached region-versus-constraint evaluation."""

    def __init__(self):
        self.cache = {}

    def holds(self, r: Region, c: Dbm) -> bool:
        key = (r, c)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        rd = r.canonical_dbm()
        if c.is_empty:
            res = False
        elif D.includes(c, rd):
            res = True
        elif D.canonicalize(D.intersect(c, rd)).is_empty:
            res = False
        else:
            raise RegionSplit(
                f"constraint {c.to_text()} splits region {r.label()}; "
                "a larger clock bound or bounded invariants are needed"
            )
        self.cache[key] = res
        return res


def _check_constants(T: Pta, K: int) -> None:
    if T.max_constant() > K:
        raise UnboundedConstant(f"constant {T.max_constant()} exceeds K = {K}")


def build_quotient(T: Pta, K: int | None = None) -> QuotientMdp:
    if K is None:
        K = T.max_constant()
    _check_constants(T, K)
    clocks = T.clocks
    zero = (Fraction(0),) * (len(clocks) + 1)
    oracle = _Oracle()
    states: list = []
    index: dict = {}
    choices: list = []

    def sink(loc):
        if loc == T.goal:
            return GOAL
        if loc == T.fail:
            return FAIL
        return None

    def intern(r: Region) -> int:
        sid = index.get(r)
        if sid is None:
            sid = index[r] = len(states)
            states.append(r)
            choices.append(None)
            queue.append(sid)
        return sid

    queue: deque = deque()
    if sink(T.initial) is not None:
        initial = sink(T.initial)
    else:
        if not D.satisfies(zero, T.invariants[T.initial].dbm):
            raise InitialInvariantViolated(f"0 does not satisfy inv({T.initial})")
        initial = intern(region_of(T.initial, zero, K, clocks))

    while queue:
        sid = queue.popleft()
        r = states[sid]
        loc = r.location
        inv = T.invariants[loc].dbm
        out = []
        succ = r
        while True:
            succ = succ.time_successor()
            if succ is None:
                # delays stay here forever: a time-divergent scheduler may idle
                out.append(Choice(DIVERGE, None, ((FAIL, Fraction(1)),)))
                break
            if not oracle.holds(succ, inv):
                break
            out.append(Choice(TAU, None, ((intern(succ), Fraction(1)),)))
        for k, t in enumerate(T.transitions.get(loc, ())):
            if not oracle.holds(r, t.guard.dbm):
                continue
            dist: dict = {}
            for b in t.branches:
                tgt = sink(b.target)
                if tgt is None:
                    r2 = r.reset(b.reset, b.target)
                    if oracle.holds(r2, T.invariants[b.target].dbm):
                        tgt = intern(r2)
                    else:
                        tgt = FAIL
                dist[tgt] = dist.get(tgt, Fraction(0)) + b.prob
            out.append(Choice(t.action, k, tuple(sorted(dist.items()))))
        if not out:
            out.append(Choice(TIMELOCK, None, ((FAIL, Fraction(1)),)))
        choices[sid] = out

    return QuotientMdp(T, K, states, index, choices, initial)


def check_proceed_assumption(M: QuotientMdp) -> tuple[bool, list]:
    """Whether every state reaches goal or fail with positive minimal probability.

    Computes the greatest set of states that some scheduler can keep inside S
    forever; the assumption holds iff it is empty.
    """
    alive = set(range(M.n))
    changed = True
    while changed:
        changed = False
        for s in list(alive):
            if not any(all(t in alive for t, _ in c.dist) for c in M.choices[s]):
                alive.discard(s)
                changed = True
    bad = sorted(alive)
    return (not bad, bad)
