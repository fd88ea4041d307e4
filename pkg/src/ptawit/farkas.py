"""Farkas certificate systems over quotient MDPs and induced subsystems.

For the inner states S of a quotient, each (state, choice) pair is a row:
``(A z)(s,a) = z(s) - sum_{s' in S} P(s,a,s') z(s')`` and ``b(s,a) = P(s,a,goal)``.
Lower-bound certificates live in

    P_min(lam) = {z >= 0 | A z <= b, z(s0) >= lam}
    P_max(lam) = {y >= 0 | y A <= delta_s0, y b >= lam}
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from . import dbm as D
from .milp import OPTIMAL, LinearProgram, solve_lp
from .model import Branch, ClockConstraint, Pta, Transition, Witness, merge_branches
from .numeric import format_rational, parse_rational
from .quotient import GOAL, QuotientMdp, check_proceed_assumption
from .reach import AssumptionViolated


class DimensionMismatch(ValueError):
    pass


class EmptySupport(ValueError):
    pass


class InitialRegionMissing(UserWarning):
    pass


@dataclass
class FarkasSystem:
    mdp: QuotientMdp
    rows: list  # (state, choice index)
    A: list  # sparse rows: dict state -> coefficient
    b: list

    @property
    def n_states(self) -> int:
        return self.mdp.n

    @property
    def initial(self) -> int:
        return self.mdp.initial

    def rows_of(self, s: int) -> list:
        return [r for r, (t, _) in enumerate(self.rows) if t == s]

    def dense(self) -> list:
        out = []
        for row in self.A:
            out.append([row.get(s, Fraction(0)) for s in range(self.n_states)])
        return out


@dataclass
class Certificate:
    direction: str
    vector: list  # per state (min) or per row (max)
    lam: Fraction

    def support(self, F: FarkasSystem) -> frozenset:
        """supp(z) for min, supp_S(y) (states of rows with y > 0) for max."""
        if self.direction == "min":
            return frozenset(s for s, v in enumerate(self.vector) if v > 0)
        return frozenset(F.rows[r][0] for r, v in enumerate(self.vector) if v > 0)

    def dump(self, F: FarkasSystem | None = None) -> str:
        lines = [f"# {self.direction} certificate, lambda = {format_rational(self.lam)}"]
        for k, v in enumerate(self.vector):
            if v == 0:
                continue
            if self.direction == "min":
                key = f"s{k}"
            elif F is not None:
                s, c = F.rows[k]
                key = f"s{s}.{c}"
            else:
                key = f"r{k}"
            lines.append(f"{key} = {format_rational(v)}")
        return "\n".join(lines) + "\n"


def load_certificate(text: str, F: FarkasSystem, direction: str) -> Certificate:
    """Inverse of ``Certificate.dump`` given the system it was written for."""
    size = F.n_states if direction == "min" else len(F.rows)
    vec = [Fraction(0)] * size
    lam = Fraction(0)
    row_index = {f"s{s}.{c}": r for r, (s, c) in enumerate(F.rows)}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            if "lambda =" in line:
                lam = parse_rational(line.split("lambda =")[1].strip())
            continue
        if not line:
            continue
        key, val = (p.strip() for p in line.split("="))
        if direction == "min":
            k = int(key[1:])
        elif key in row_index:
            k = row_index[key]
        else:
            k = int(key[1:])
        if k >= size:
            raise DimensionMismatch(f"{key} outside a system of size {size}")
        vec[k] = parse_rational(val)
    return Certificate(direction, vec, lam)


def build_system(M: QuotientMdp) -> FarkasSystem:
    ok, bad = check_proceed_assumption(M)
    if not ok:
        raise AssumptionViolated(bad)
    rows, A, b = [], [], []
    for s in range(M.n):
        for k, c in enumerate(M.choices[s]):
            row = {s: Fraction(1)}
            goal = Fraction(0)
            for t, p in c.dist:
                if t == GOAL:
                    goal += p
                elif t >= 0:
                    row[t] = row.get(t, Fraction(0)) - p
            rows.append((s, k))
            A.append({t: v for t, v in row.items() if v != 0})
            b.append(goal)
    return FarkasSystem(M, rows, A, b)


def is_certificate(F: FarkasSystem, c: Certificate) -> bool:
    vec = [Fraction(v) for v in c.vector]
    if any(v < 0 for v in vec):
        return False
    if c.direction == "min":
        if len(vec) != F.n_states:
            raise DimensionMismatch(f"expected {F.n_states} entries, got {len(vec)}")
        for row, rhs in zip(F.A, F.b):
            if sum(a * vec[s] for s, a in row.items()) > rhs:
                return False
        return F.initial >= 0 and vec[F.initial] >= c.lam
    if c.direction != "max":
        raise ValueError("direction is 'min' or 'max'")
    if len(vec) != len(F.rows):
        raise DimensionMismatch(f"expected {len(F.rows)} entries, got {len(vec)}")
    flow = [Fraction(0)] * F.n_states
    for y, row in zip(vec, F.A):
        if y:
            for s, a in row.items():
                flow[s] += y * a
    for s, f in enumerate(flow):
        if f > (1 if s == F.initial else 0):
            return False
    return sum(y * bb for y, bb in zip(vec, F.b)) >= c.lam


def add_min_rows(lp: LinearProgram, F: FarkasSystem, lam: Fraction | None, prefix: str = "z") -> list:
    """Variables z(s) in [0,1] with A z <= b and z(s0) >= lam; returns the variable ids."""
    z = [lp.add_var(f"{prefix}{s}", 0, 1) for s in range(F.n_states)]
    for r, (row, rhs) in enumerate(zip(F.A, F.b)):
        lp.add_constraint({z[s]: a for s, a in row.items()}, "<=", rhs, f"farkas{r}")
    if lam is not None:
        lp.add_constraint({z[F.initial]: 1}, ">=", lam, "threshold")
    return z


def add_max_rows(lp: LinearProgram, F: FarkasSystem, lam: Fraction | None, prefix: str = "y") -> list:
    """Variables y(s,a) >= 0 with y A <= delta_s0 and y b >= lam; returns the variable ids."""
    y = [lp.add_var(f"{prefix}{s}_{c}") for s, c in F.rows]
    cols: list = [dict() for _ in range(F.n_states)]
    for r, row in enumerate(F.A):
        for s, a in row.items():
            cols[s][y[r]] = a
    for s, col in enumerate(cols):
        lp.add_constraint(col, "<=", 1 if s == F.initial else 0, f"flow{s}")
    if lam is not None:
        lp.add_constraint({y[r]: bb for r, bb in enumerate(F.b) if bb}, ">=", lam, "threshold")
    return y


def restricted_optimum(F: FarkasSystem, direction: str, support: Iterable[int] | None = None):
    """Best threshold certifiable with certificates supported inside ``support``.

    Returns ``(value, Certificate)``. With ``support=None`` the value equals
    the optimal reachability probability of the quotient.
    """
    if F.initial < 0:
        return (Fraction(1) if F.initial == GOAL else Fraction(0)), None
    allowed = set(range(F.n_states)) if support is None else set(support)
    lp = LinearProgram()
    if direction == "min":
        z = add_min_rows(lp, F, None)
        for s in range(F.n_states):
            if s not in allowed:
                lp.variables[z[s]].ub = Fraction(0)
        lp.set_objective({z[F.initial]: 1}, "max")
    else:
        y = add_max_rows(lp, F, None)
        for r, (s, _) in enumerate(F.rows):
            if s not in allowed:
                lp.variables[y[r]].ub = Fraction(0)
        lp.set_objective({y[r]: bb for r, bb in enumerate(F.b) if bb}, "max")
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"certificate LP ended with status {sol.status}")
    vec = sol.x[: F.n_states] if direction == "min" else sol.x[: len(F.rows)]
    return sol.objective, Certificate(direction, list(vec), sol.objective)


def find_certificate(F: FarkasSystem, direction: str, lam: Fraction) -> Certificate | None:
    """Some certificate for threshold ``lam``, or None when the polytope is empty."""
    value, cert = restricted_optimum(F, direction)
    if cert is None or value < lam:
        return None
    cert.lam = Fraction(lam)
    return cert


# --------------------------------------------------------------------------
# induced subsystems


def induce_subsystem(T: Pta, M: QuotientMdp, R: Iterable[int], kind: str,
                     direction: str | None = None) -> Witness:
    """The weak or strong subsystem induced by the region set ``R``.

    Invariants are the zone closure of the regions at each location (weak)
    or its time closure inside the original invariant (strong). A branch
    survives when some region of R maps into R, or into goal; the removed
    mass is redirected to fail without resets.
    """
    if kind not in ("weak", "strong"):
        raise ValueError("kind is 'weak' or 'strong'")
    R = frozenset(R)
    if not R:
        raise EmptySupport("region set is empty")
    if any(s < 0 or s >= M.n for s in R):
        raise ValueError("R must consist of inner quotient states")
    if M.initial not in R:
        warnings.warn("initial region not in R: the witness reaches goal with probability 0",
                      InitialRegionMissing, stacklevel=2)
    by_loc: dict = {}
    for s in sorted(R):
        by_loc.setdefault(M.location(s), []).append(s)
    return _assemble(T, M, R, by_loc, kind, direction, keep_entries=True)


def trivial_witness(T: Pta, M: QuotientMdp, kind: str, direction: str | None = None) -> Witness:
    """Degenerate witness for threshold 0: the initial region, all mass to fail."""
    if M.initial < 0:
        return Witness(T, kind, frozenset(), direction or ("min" if kind == "strong" else "max"))
    R = frozenset([M.initial])
    return _assemble(T, M, R, {M.location(M.initial): [M.initial]}, kind, direction, keep_entries=False)


def _assemble(T, M, R, by_loc, kind, direction, keep_entries) -> Witness:
    clocks = T.clocks
    invariants = {}
    transitions = {}
    inv_w = {}
    for l, states in by_loc.items():
        inv_w[l] = D.canonical_dbm_of_set([M.dbm(s) for s in states])
        if kind == "weak":
            invariants[l] = ClockConstraint.from_dbm(inv_w[l])
        else:
            strong = D.intersect(D.time_closure(inv_w[l]), T.invariants[l].dbm)
            invariants[l] = ClockConstraint.from_dbm(strong)
    for l in (T.goal, T.fail):
        invariants[l] = T.invariants[l]
        transitions[l] = ()

    for l, states in by_loc.items():
        out = []
        for k, t in enumerate(T.transitions.get(l, ())):
            if kind == "weak":
                enabled = [s for s in states if _enabled(M, s, k)]
                if not enabled:
                    continue
                zone = D.canonical_dbm_of_set([M.dbm(s) for s in enabled])
                guard = ClockConstraint.from_dbm(D.intersect(t.guard.dbm, zone))
            else:
                guard = ClockConstraint.from_dbm(D.intersect(t.guard.dbm, invariants[l].dbm))
            branches = []
            lost = Fraction(0)
            for b in t.branches:
                if keep_entries and _entry_kept(T, M, R, states, b):
                    branches.append(b)
                else:
                    lost += b.prob
            if lost:
                branches.append(Branch(lost, frozenset(), T.fail))
            out.append(Transition(l, guard, t.action, merge_branches(branches)))
        transitions[l] = tuple(out)

    locations = tuple(l for l in T.locations if l in invariants)
    sub = Pta(
        clocks=clocks,
        locations=locations,
        invariants=invariants,
        transitions=transitions,
        initial=T.initial,
        goal=T.goal,
        fail=T.fail,
        bound=None,
    )
    direction = direction or ("min" if kind == "strong" else "max")
    return Witness(sub, kind, frozenset(R), direction)


def _enabled(M: QuotientMdp, s: int, k: int) -> bool:
    return any(c.transition == k for c in M.choices[s])


def _entry_kept(T: Pta, M: QuotientMdp, R, states, b: Branch) -> bool:
    if b.target == T.fail:
        return False
    if b.target == T.goal:
        return True
    for s in states:
        r2 = M.states[s].reset(b.reset, b.target)
        s2 = M.index.get(r2)
        if s2 is not None and s2 in R:
            return True
    return False
