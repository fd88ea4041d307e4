"""PTA object model, clock constraints, and structural subsystem checks."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx

from . import dbm as D
from .dbm import Dbm
from .numeric import Bound


class ConstraintError(ValueError):
    """Malformed clock-constraint text; ``offset`` points into the text."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(message)
        self.offset = offset


# --------------------------------------------------------------------------
# clock constraints

_ATOM = re.compile(
    r"^\s*(?P<ci>[A-Za-z_]\w*)\s*(?:-\s*(?P<cj>[A-Za-z_]\w*)\s*)?"
    r"(?P<op><=|<|>=|>|==|=)\s*(?P<val>[+-]?\d+)\s*$"
)


@dataclass(frozen=True)
class Atom:
    """``ci - cj op value``; ``cj`` is None for a single-clock atom."""

    ci: str
    cj: str | None
    op: str
    value: int

    def text(self) -> str:
        lhs = self.ci if self.cj is None else f"{self.ci}-{self.cj}"
        return f"{lhs}{self.op}{self.value}"

    def bounds(self, clocks: Sequence[str]) -> list[tuple[int, int, Bound]]:
        i = clocks.index(self.ci) + 1
        j = 0 if self.cj is None else clocks.index(self.cj) + 1
        a = self.value
        if self.op == "<=":
            return [(i, j, Bound(a, False))]
        if self.op == "<":
            return [(i, j, Bound(a, True))]
        if self.op == ">=":
            return [(j, i, Bound(-a, False))]
        if self.op == ">":
            return [(j, i, Bound(-a, True))]
        return [(i, j, Bound(a, False)), (j, i, Bound(-a, False))]

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        d = values[self.ci] - (0 if self.cj is None else values[self.cj])
        return {
            "<=": d <= self.value,
            "<": d < self.value,
            ">=": d >= self.value,
            ">": d > self.value,
            "=": d == self.value,
            "==": d == self.value,
        }[self.op]


class ClockConstraint:
    """A conjunction of atoms together with its canonical DBM."""

    __slots__ = ("clocks", "atoms", "is_false", "dbm")

    def __init__(self, clocks: Sequence[str], atoms: Iterable[Atom] = (), is_false: bool = False,
                 dbm: Dbm | None = None):
        self.clocks = tuple(clocks)
        self.atoms = tuple(atoms)
        self.is_false = is_false
        if dbm is None:
            if is_false:
                dbm = Dbm.empty(self.clocks)
            else:
                bounds = [b for a in self.atoms for b in a.bounds(self.clocks)]
                dbm = D.canonicalize(Dbm.from_bounds(self.clocks, bounds))
        self.dbm = dbm

    @classmethod
    def true(cls, clocks: Sequence[str]) -> "ClockConstraint":
        return cls(clocks)

    @classmethod
    def parse(cls, text: str, clocks: Sequence[str]) -> "ClockConstraint":
        return parse_constraint(text, clocks)

    @classmethod
    def from_dbm(cls, m: Dbm) -> "ClockConstraint":
        m = D.canonicalize(m)
        if m.is_empty:
            return cls(m.clocks, is_false=True, dbm=m)
        atoms = [parse_constraint(t, m.clocks).atoms[0] for t in m.atoms()]
        return cls(m.clocks, atoms, dbm=m)

    @property
    def text(self) -> str:
        if self.is_false:
            return "false"
        if not self.atoms:
            return "true"
        return " & ".join(a.text() for a in self.atoms)

    def holds(self, v) -> bool:
        """Evaluate the atoms directly (independent of the DBM)."""
        if self.is_false:
            return False
        if not isinstance(v, Mapping):
            v = dict(zip(self.clocks, v[1:]))
        return all(a.holds(v) for a in self.atoms)

    def max_constant(self) -> int:
        return max((abs(a.value) for a in self.atoms), default=0)

    def conjoin(self, other: "ClockConstraint") -> "ClockConstraint":
        if self.is_false or other.is_false:
            return ClockConstraint(self.clocks, is_false=True)
        return ClockConstraint(self.clocks, self.atoms + other.atoms)

    def __eq__(self, other):
        return isinstance(other, ClockConstraint) and self.dbm == other.dbm

    def __hash__(self):
        return hash(self.dbm)

    def __repr__(self):
        return f"ClockConstraint({self.text!r})"


def parse_constraint(text: str, clocks: Sequence[str]) -> ClockConstraint:
    """Parse ``true``, ``false`` or a ``&``-conjunction of difference atoms."""
    clocks = tuple(clocks)
    stripped = text.strip()
    if stripped in ("", "true"):
        return ClockConstraint(clocks)
    if stripped == "false":
        return ClockConstraint(clocks, is_false=True)
    atoms = []
    is_false = False
    pos = 0
    for part in re.split(r"(&&|&|∧)", text):
        if part in ("&&", "&", "∧"):
            pos += len(part)
            continue
        piece = part.strip()
        offset = pos + (len(part) - len(part.lstrip()))
        pos += len(part)
        if piece == "true":
            continue
        if piece == "false":
            is_false = True
            continue
        m = _ATOM.match(piece)
        if not m:
            raise ConstraintError(f"malformed clock constraint {piece!r}", offset)
        for c in (m["ci"], m["cj"]):
            if c is not None and c not in clocks:
                raise ConstraintError(f"unknown clock {c!r}", offset)
        atoms.append(Atom(m["ci"], m["cj"], m["op"], int(m["val"])))
    return ClockConstraint(clocks, atoms, is_false)


# --------------------------------------------------------------------------
# PTAs


@dataclass(frozen=True)
class Branch:
    prob: Fraction
    reset: frozenset
    target: str

    def key(self):
        return (self.prob, tuple(sorted(self.reset)), self.target)


@dataclass(frozen=True, eq=False)
class Transition:
    source: str
    guard: ClockConstraint
    action: str
    branches: tuple

    def prob(self, reset, target) -> Fraction:
        reset = frozenset(reset)
        return sum((b.prob for b in self.branches if b.reset == reset and b.target == target),
                   Fraction(0))

    def key(self):
        return (self.source, self.guard.dbm, self.action, tuple(b.key() for b in self.branches))

    def __eq__(self, other):
        return isinstance(other, Transition) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def merge_branches(branches: Iterable[Branch]) -> tuple:
    """Sum the probabilities of identical (reset, target) pairs, keeping first-seen order."""
    acc: dict = {}
    for b in branches:
        k = (b.reset, b.target)
        acc[k] = acc.get(k, Fraction(0)) + b.prob
    return tuple(Branch(p, r, t) for (r, t), p in acc.items() if p != 0)


@dataclass(eq=False)
class Pta:
    clocks: tuple
    locations: tuple
    invariants: dict
    transitions: dict
    initial: str
    goal: str
    fail: str
    bound: int | None = None
    comments: list = field(default_factory=list)

    @property
    def actions(self) -> frozenset:
        return frozenset(t.action for ts in self.transitions.values() for t in ts)

    @property
    def inner_locations(self) -> tuple:
        """Locations other than goal and fail."""
        return tuple(l for l in self.locations if l not in (self.goal, self.fail))

    def all_transitions(self):
        for l in self.locations:
            yield from self.transitions.get(l, ())

    def max_constant(self) -> int:
        consts = [self.invariants[l].max_constant() for l in self.locations]
        consts += [t.guard.max_constant() for t in self.all_transitions()]
        if self.bound is not None:
            consts.append(self.bound)
        return max(consts, default=0)

    def is_bounded(self) -> bool:
        """Every non-goal/fail invariant has finite upper bounds on all clocks."""
        for l in self.inner_locations:
            m = self.invariants[l].dbm
            if m.is_empty:
                continue
            if any(m[i, 0].is_infinite for i in range(1, m.dim)):
                return False
        return True

    def key(self):
        return (
            self.clocks,
            self.locations,
            self.initial,
            self.goal,
            self.fail,
            tuple(self.invariants[l].dbm for l in self.locations),
            tuple(tuple(t.key() for t in self.transitions.get(l, ())) for l in self.locations),
        )

    def __eq__(self, other):
        return isinstance(other, Pta) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Pta(locations={self.locations}, clocks={self.clocks})"


@dataclass
class Witness:
    subsystem: Pta
    strength: str  # "weak" | "strong"
    support: frozenset = frozenset()
    direction: str = "max"
    verified_threshold: Fraction | None = None
    probability: Fraction | None = None


# --------------------------------------------------------------------------
# subsystem checks


@dataclass
class SubsystemCheck:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def _weakly_compatible(t_sub: Transition, t: Transition, fail: str) -> bool:
    if t_sub.action != t.action:
        return False
    if not D.includes(t.guard.dbm, t_sub.guard.dbm):
        return False
    for b in t_sub.branches:
        if b.target == fail:
            continue
        if t_sub.prob(b.reset, b.target) != t.prob(b.reset, b.target):
            return False
    return True


def _strongly_compatible(t_sub: Transition, t: Transition, inv_sub: Dbm, fail: str) -> bool:
    if not _weakly_compatible(t_sub, t, fail):
        return False
    # guards are compared only where the sub-invariant holds; outside it they are never enabled
    expected = D.canonicalize(D.intersect(t.guard.dbm, inv_sub))
    return D.canonicalize(D.intersect(t_sub.guard.dbm, inv_sub)) == expected


def _saturating_matching(left: Sequence, right: Sequence, compatible) -> bool:
    """Whether an injection ``left -> right`` exists along compatible pairs."""
    if not left:
        return True
    g = nx.Graph()
    lnodes = [("L", i) for i in range(len(left))]
    g.add_nodes_from(lnodes, bipartite=0)
    g.add_nodes_from((("R", j) for j in range(len(right))), bipartite=1)
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            if compatible(a, b):
                g.add_edge(("L", i), ("R", j))
    matching = nx.bipartite.hopcroft_karp_matching(g, top_nodes=lnodes)
    return all(n in matching for n in lnodes)


def _structure_check(T: Pta, Tp: Pta) -> SubsystemCheck | None:
    if T.clocks != Tp.clocks:
        return SubsystemCheck(False, "clock sets differ")
    if (Tp.goal, Tp.fail, Tp.initial) != (T.goal, T.fail, T.initial):
        return SubsystemCheck(False, "goal, fail or initial location differ")
    if T.goal not in Tp.locations or T.fail not in Tp.locations:
        return SubsystemCheck(False, "location set: goal or fail missing")
    extra = set(Tp.locations) - set(T.locations)
    if extra:
        return SubsystemCheck(False, f"location set: unknown locations {sorted(extra)}")
    for l in Tp.locations:
        for t in Tp.transitions.get(l, ()):
            for b in t.branches:
                if b.target not in Tp.locations:
                    return SubsystemCheck(False, f"transition at {l} targets missing location {b.target}")
    return None


def is_subsystem(T: Pta, Tp: Pta) -> SubsystemCheck:
    """Weak subsystem relation ``Tp ⊆ T``."""
    bad = _structure_check(T, Tp)
    if bad is not None:
        return bad
    for l in Tp.locations:
        if not D.includes(T.invariants[l].dbm, Tp.invariants[l].dbm):
            return SubsystemCheck(False, f"invariant not included at {l}")
    for l in Tp.locations:
        sub, orig = Tp.transitions.get(l, ()), T.transitions.get(l, ())
        if not _saturating_matching(sub, orig, lambda a, b: _weakly_compatible(a, b, T.fail)):
            reason = "no injective transition map"
            for a in sub:
                same = [b for b in orig if b.action == a.action]
                if same and not any(D.includes(b.guard.dbm, a.guard.dbm) for b in same):
                    reason = "guard not included"
                    break
            return SubsystemCheck(False, f"{reason} at {l}")
    return SubsystemCheck(True, "weak subsystem")


def is_strong_subsystem(T: Pta, Tp: Pta) -> SubsystemCheck:
    weak = is_subsystem(T, Tp)
    if not weak:
        return weak
    for l in Tp.locations:
        if l in (T.goal, T.fail):
            continue
        inv_sub = Tp.invariants[l].dbm
        sub, orig = Tp.transitions.get(l, ()), T.transitions.get(l, ())

        def strong(a, b, inv_sub=inv_sub):
            return _strongly_compatible(a, b, inv_sub, T.fail)

        for b in orig:
            if not any(strong(a, b) for a in sub):
                return SubsystemCheck(
                    False, f"guard of {b.action} at {l} shrunk more than allowed or transition removed"
                )
        if not _saturating_matching(sub, orig, strong):
            return SubsystemCheck(False, f"no left-invertible transition map at {l}")
        if not inv_sub.is_empty:
            closed = D.canonicalize(D.intersect(D.time_closure(inv_sub), T.invariants[l].dbm))
            if not D.includes(inv_sub, closed):
                return SubsystemCheck(False, f"invariant at {l} not closed under time successors")
    return SubsystemCheck(True, "strong subsystem")


# --------------------------------------------------------------------------
# volume and minimality orders


def pta_volume(T: Pta):
    """Sum of invariant volumes over non-goal/fail locations; ``math.inf`` if unbounded."""
    from .volume import dbm_volume, zone_bound

    total = Fraction(0)
    for l in T.inner_locations:
        m = T.invariants[l].dbm
        if m.is_empty:
            continue
        k = zone_bound(m)
        if k is None:
            return math.inf
        total += dbm_volume(m, k).value
    return total


def leq_loc(T1: Pta, T2: Pta) -> bool:
    return len(T1.inner_locations) <= len(T2.inner_locations)


def leq_inv(T1: Pta, T2: Pta) -> bool:
    if not set(T1.locations) <= set(T2.locations):
        return False
    return all(D.includes(T2.invariants[l].dbm, T1.invariants[l].dbm) for l in T1.locations)


def leq_vol(T1: Pta, T2: Pta) -> bool:
    return pta_volume(T1) <= pta_volume(T2)
