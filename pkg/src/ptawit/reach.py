"""Exact min/max reachability on quotient MDPs and witness verification."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .milp import OPTIMAL, LinearProgram, solve_lp
from .model import Pta, Witness, is_strong_subsystem, is_subsystem
from .quotient import FAIL, GOAL, QuotientMdp, build_quotient, check_proceed_assumption


class AssumptionViolated(Exception):
    def __init__(self, states):
        super().__init__(f"proceed assumption violated at states {states[:10]}")
        self.states = states


@dataclass
class ReachResult:
    values: list
    direction: str
    initial_value: Fraction
    method: str = "graph precomputation + exact LP"

    def value(self, s: int) -> Fraction:
        if s == GOAL:
            return Fraction(1)
        if s == FAIL:
            return Fraction(0)
        return self.values[s]


def _prob0_max(M: QuotientMdp) -> set:
    """States that cannot reach goal under any scheduler."""
    pred = [set() for _ in range(M.n)]
    reach = set()
    frontier = []
    for s, cs in enumerate(M.choices):
        for c in cs:
            for t, _ in c.dist:
                if t == GOAL:
                    if s not in reach:
                        reach.add(s)
                        frontier.append(s)
                elif t >= 0:
                    pred[t].add(s)
    while frontier:
        t = frontier.pop()
        for s in pred[t]:
            if s not in reach:
                reach.add(s)
                frontier.append(s)
    return set(range(M.n)) - reach


def _prob0_min(M: QuotientMdp) -> set:
    """States where some scheduler avoids goal almost surely."""
    pos = set()
    changed = True
    while changed:
        changed = False
        for s in range(M.n):
            if s in pos:
                continue
            if all(any(t == GOAL or t in pos for t, _ in c.dist) for c in M.choices[s]):
                pos.add(s)
                changed = True
    return set(range(M.n)) - pos


def _prob1_max(M: QuotientMdp) -> set:
    """States where some scheduler reaches goal almost surely (nested fixpoint)."""
    u = set(range(M.n))
    while True:
        r = set()
        changed = True
        while changed:
            changed = False
            for s in u:
                if s in r:
                    continue
                for c in M.choices[s]:
                    succ = [t for t, _ in c.dist]
                    if all(t == GOAL or t in u for t in succ) and any(t == GOAL or t in r for t in succ):
                        r.add(s)
                        changed = True
                        break
        if r == u:
            return u
        u = r


def _prob1_min(M: QuotientMdp, zero: set) -> set:
    """States where every scheduler reaches goal almost surely."""
    bad = set(zero)
    changed = True
    while changed:
        changed = False
        for s in range(M.n):
            if s in bad:
                continue
            if any(any(t == FAIL or t in bad for t, _ in c.dist) for c in M.choices[s]):
                bad.add(s)
                changed = True
    return set(range(M.n)) - bad


def reach_prob(M: QuotientMdp, direction: str) -> ReachResult:
    if direction not in ("min", "max"):
        raise ValueError("direction is 'min' or 'max'")
    if direction == "min":
        ok, bad = check_proceed_assumption(M)
        if not ok:
            raise AssumptionViolated(bad)
        zero = _prob0_min(M)
        one = _prob1_min(M, zero)
    else:
        zero = _prob0_max(M)
        one = _prob1_max(M) - zero
    values = [Fraction(0)] * M.n
    for s in one:
        values[s] = Fraction(1)
    maybe = [s for s in range(M.n) if s not in zero and s not in one]
    if maybe:
        lp = LinearProgram()
        var = {s: lp.add_var(f"z{s}", 0, 1) for s in maybe}
        for s in maybe:
            for c in M.choices[s]:
                coeffs = {var[s]: Fraction(1)}
                rhs = Fraction(0)
                for t, p in c.dist:
                    if t == GOAL or t in one:
                        rhs += p
                    elif t in var:
                        coeffs[var[t]] = coeffs.get(var[t], 0) - p
                lp.add_constraint(coeffs, ">=" if direction == "max" else "<=", rhs)
        lp.set_objective({v: 1 for v in var.values()}, "min" if direction == "max" else "max")
        sol = solve_lp(lp)
        if sol.status != OPTIMAL:
            raise RuntimeError(f"reachability LP ended with status {sol.status}")
        for s, v in var.items():
            values[s] = sol.x[v]
    if M.initial == GOAL:
        init = Fraction(1)
    elif M.initial == FAIL:
        init = Fraction(0)
    else:
        init = values[M.initial]
    return ReachResult(values, direction, init)


@dataclass
class Verification:
    ok: bool
    structural: str
    probability: Fraction | None
    strength: str

    def __bool__(self):
        return self.ok


def verify_witness(T: Pta, W: Witness | Pta, lam: Fraction, direction: str | None = None,
                   K: int | None = None) -> Verification:
    """Structural subsystem check plus exact threshold check on the witness."""
    if isinstance(W, Witness):
        sub = W.subsystem
        direction = direction or W.direction
    else:
        sub = W
    direction = direction or "max"
    check = is_strong_subsystem(T, sub) if direction == "min" else is_subsystem(T, sub)
    strength = "strong" if direction == "min" else "weak"
    if not check:
        return Verification(False, check.reason, None, strength)
    if K is None:
        K = max(T.max_constant(), sub.max_constant())
    M = build_quotient(sub, K)
    pr = reach_prob(M, direction).initial_value
    ok = pr >= Fraction(lam)
    if isinstance(W, Witness) and ok:
        W.verified_threshold = Fraction(lam)
        W.probability = pr
    return Verification(ok, check.reason, pr, strength)
