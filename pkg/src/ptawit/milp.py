"""Exact rational LP (bounded-variable primal simplex, Bland's rule),
branch-and-bound over binary variables, and Pareto enumeration.

Arithmetic inside the simplex uses ``gmpy2.mpq``; inputs and outputs are
``Fraction``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

INF = math.inf

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"


class SolverError(RuntimeError):
    pass


def _q(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


@dataclass
class Variable:
    name: str
    lb: Fraction | float = Fraction(0)
    ub: Fraction | float = INF
    kind: str = "continuous"  # or "binary"


@dataclass
class Constraint:
    coeffs: dict
    rel: str  # "<=", ">=", "="
    rhs: Fraction
    name: str = ""


@dataclass
class LinearProgram:
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    sense: str = "min"
    objectives: list = field(default_factory=list)  # multi-objective, all minimized
    _names: dict = field(default_factory=dict, repr=False)

    def add_var(self, name: str | None = None, lb=0, ub=INF, kind: str = "continuous") -> int:
        idx = len(self.variables)
        name = name or f"v{idx}"
        if name in self._names:
            raise ValueError(f"duplicate variable {name}")
        if kind == "binary":
            lb, ub = 0, 1
        lb = Fraction(lb) if lb not in (-INF, INF) else lb
        ub = Fraction(ub) if ub not in (-INF, INF) else ub
        self.variables.append(Variable(name, lb, ub, kind))
        self._names[name] = idx
        return idx

    def var(self, name: str) -> int:
        return self._names[name]

    def add_constraint(self, coeffs: Mapping[int, object], rel: str, rhs, name: str = "") -> int:
        if rel not in ("<=", ">=", "="):
            raise ValueError(f"bad relation {rel}")
        c = {j: Fraction(a) for j, a in coeffs.items() if a != 0}
        self.constraints.append(Constraint(c, rel, Fraction(rhs), name))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: Mapping[int, object], sense: str = "min") -> None:
        self.objective = {j: Fraction(a) for j, a in coeffs.items() if a != 0}
        self.sense = sense

    @property
    def binaries(self) -> list:
        return [j for j, v in enumerate(self.variables) if v.kind == "binary"]

    def copy(self) -> "LinearProgram":
        lp = LinearProgram(
            [Variable(v.name, v.lb, v.ub, v.kind) for v in self.variables],
            [Constraint(dict(c.coeffs), c.rel, c.rhs, c.name) for c in self.constraints],
            dict(self.objective),
            self.sense,
            [dict(o) for o in self.objectives],
        )
        lp._names = dict(self._names)
        return lp

    def check(self, x: Sequence[Fraction]) -> bool:
        """Exact feasibility of an assignment, including integrality."""
        for j, v in enumerate(self.variables):
            if v.lb != -INF and x[j] < v.lb:
                return False
            if v.ub != INF and x[j] > v.ub:
                return False
            if v.kind == "binary" and x[j] not in (0, 1):
                return False
        for c in self.constraints:
            lhs = sum((a * x[j] for j, a in c.coeffs.items()), Fraction(0))
            if c.rel == "<=" and lhs > c.rhs:
                return False
            if c.rel == ">=" and lhs < c.rhs:
                return False
            if c.rel == "=" and lhs != c.rhs:
                return False
        return True

    def evaluate(self, coeffs: Mapping[int, Fraction], x: Sequence[Fraction]) -> Fraction:
        return sum((a * x[j] for j, a in coeffs.items()), Fraction(0))

    def to_lp_format(self) -> str:
        """CPLEX LP text, for cross-checking with external solvers."""

        def term_list(coeffs):
            parts = []
            for j, a in sorted(coeffs.items()):
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(float(a))!r} {self.variables[j].name}")
            return " ".join(parts) if parts else "0"

        out = ["Minimize" if self.sense == "min" else "Maximize", f" obj: {term_list(self.objective)}"]
        out.append("Subject To")
        for k, c in enumerate(self.constraints):
            name = c.name or f"r{k}"
            out.append(f" {name}: {term_list(c.coeffs)} {c.rel} {float(c.rhs)!r}")
        out.append("Bounds")
        for v in self.variables:
            if v.kind == "binary":
                continue
            lo = "-inf" if v.lb == -INF else repr(float(v.lb))
            hi = "+inf" if v.ub == INF else repr(float(v.ub))
            out.append(f" {lo} <= {v.name} <= {hi}")
        bins = [v.name for v in self.variables if v.kind == "binary"]
        if bins:
            out.append("Binaries")
            out.append(" " + " ".join(bins))
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass
class Solution:
    status: str
    x: list | None = None
    objective: Fraction | None = None
    objectives: tuple | None = None
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, lp: LinearProgram, name: str) -> Fraction:
        return self.x[lp.var(name)]


# --------------------------------------------------------------------------
# simplex core


class _Tableau:
    """Rows ``x_B[i] + sum_j a[i][j] x_j = beta[i]`` over non-negative columns.

    Column j ranges over ``[0, upper[j]]``. A nonbasic column at its upper
    bound is stored complemented (``x_j = upper[j] - xbar_j``) so every
    nonbasic column sits at 0.
    """

    def __init__(self, rows, beta, basis, upper):
        self.rows = rows
        self.beta = beta
        self.basis = basis
        self.upper = upper
        self.comp = [False] * len(upper)
        self.cap = None  # per-column bound in current orientation, used by the dual simplex
        self.d: dict = {}
        self.z0 = mpq(0)

    def copy(self) -> "_Tableau":
        t = _Tableau.__new__(_Tableau)
        t.rows = [dict(r) for r in self.rows]
        t.beta = list(self.beta)
        t.basis = list(self.basis)
        t.upper = self.upper
        t.comp = list(self.comp)
        t.cap = list(self.cap) if self.cap is not None else list(self.upper)
        t.d = dict(self.d)
        t.z0 = self.z0
        return t

    def flip_basic(self, i: int) -> None:
        """Re-orient basic column ``basis[i]`` (value unchanged)."""
        b = self.basis[i]
        self.rows[i] = {k: -a for k, a in self.rows[i].items()}
        self.beta[i] = self.upper[b] - self.beta[i]
        self.comp[b] = not self.comp[b]

    def fix(self, j: int, at_upper: bool) -> None:
        """Pin column j to 0 or to its upper bound (the caller re-optimizes)."""
        if self.cap is None:
            self.cap = list(self.upper)
        try:
            i = self.basis.index(j)
        except ValueError:
            i = None
        if self.comp[j] != at_upper:
            if i is None:
                self.complement(j)
            else:
                self.flip_basic(i)
        self.cap[j] = mpq(0)

    def dual_run(self, max_iter: int) -> str | None:
        """Dual simplex from a dual-feasible basis; None when the budget runs out."""
        cap = self.cap
        for _ in range(max_iter):
            leave = None
            for i, b in enumerate(self.basis):
                v = self.beta[i]
                if (v < 0 or v > cap[b]) and (leave is None or b < self.basis[leave]):
                    leave = i
            if leave is None:
                return OPTIMAL
            b = self.basis[leave]
            low = self.beta[leave] < 0
            best = None
            for k, a in self.rows[leave].items():
                if cap[k] == 0 or (a >= 0 if low else a <= 0):
                    continue
                r = self.d.get(k, 0) / (-a if low else a)
                if best is None or r < best[0] or (r == best[0] and k < best[1]):
                    best = (r, k)
            if best is None:
                return INFEASIBLE
            self.pivot(leave, best[1])
            if not low and cap[b] > 0:
                self.complement(b)
        return None

    def set_objective(self, cost: Mapping[int, mpq]) -> None:
        d = {}
        z0 = mpq(0)
        for j, c in cost.items():
            if self.comp[j]:
                z0 += c * self.upper[j]
                c = -c
            d[j] = d.get(j, 0) + c
        pos = {b: i for i, b in enumerate(self.basis)}
        for j in list(d):
            i = pos.get(j)
            if i is None:
                continue
            c = d.pop(j)
            z0 += c * self.beta[i]
            for k, a in self.rows[i].items():
                d[k] = d.get(k, 0) - c * a
        self.d = {j: c for j, c in d.items() if c != 0}
        self.z0 = z0

    def complement(self, j: int) -> None:
        u = self.upper[j]
        for i, row in enumerate(self.rows):
            a = row.get(j)
            if a is not None:
                self.beta[i] -= a * u
                row[j] = -a
        c = self.d.get(j)
        if c is not None:
            self.z0 += c * u
            self.d[j] = -c
        self.comp[j] = not self.comp[j]

    def pivot(self, r: int, e: int) -> None:
        row = self.rows[r]
        piv = row.pop(e)
        leaving = self.basis[r]
        inv = 1 / piv
        new = {k: a * inv for k, a in row.items()}
        new[leaving] = inv
        br = self.beta[r] * inv
        self.rows[r] = new
        self.beta[r] = br
        self.basis[r] = e
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            a = other.pop(e, None)
            if a is None:
                continue
            for k, v in new.items():
                nv = other.get(k, 0) - a * v
                if nv:
                    other[k] = nv
                else:
                    other.pop(k, None)
            self.beta[i] -= a * br
        c = self.d.pop(e, None)
        if c is not None:
            for k, v in new.items():
                nv = self.d.get(k, 0) - c * v
                if nv:
                    self.d[k] = nv
                else:
                    self.d.pop(k, None)
            self.z0 += c * br

    def run(self, allowed=None) -> str:
        """Minimize with Bland's rule; returns OPTIMAL or UNBOUNDED."""
        while True:
            e = None
            for j in sorted(self.d):
                if self.d[j] < 0 and (allowed is None or j in allowed):
                    e = j
                    break
            if e is None:
                return OPTIMAL
            # candidates: (ratio, variable index, row or None, leaves at upper)
            best = (self.upper[e], e, None, False)
            for i, row in enumerate(self.rows):
                a = row.get(e)
                if a is None:
                    continue
                b = self.basis[i]
                if a > 0:
                    cand = (self.beta[i] / a, b, i, False)
                else:
                    u = self.upper[b]
                    if u == INF:
                        continue
                    cand = ((u - self.beta[i]) / (-a), b, i, True)
                if cand[0] < best[0] or (cand[0] == best[0] and cand[1] < best[1]):
                    best = cand
            t, _, leave, at_upper = best
            if t == INF:
                return UNBOUNDED
            if leave is None:
                self.complement(e)
                continue
            b = self.basis[leave]
            self.pivot(leave, e)
            if at_upper:
                self.complement(b)


def _prepare(lp: LinearProgram, lb_override=None, ub_override=None):
    """Translate to rows over non-negative bounded columns.

    Returns (rows, rhs, upper, recover) where recover maps a column vector to
    the original variable values.
    """
    ncols = 0
    upper = []
    # per original var: list of (col, sign), constant offset
    maps = []
    for j, v in enumerate(lp.variables):
        lb = v.lb if lb_override is None or j not in lb_override else lb_override[j]
        ub = v.ub if ub_override is None or j not in ub_override else ub_override[j]
        if lb != -INF and ub != INF and lb > ub:
            return None
        if lb != -INF and ub != INF and lb == ub:
            maps.append(([], _q(lb)))
        elif lb != -INF:
            maps.append(([(ncols, 1)], _q(lb)))
            upper.append(INF if ub == INF else _q(ub - lb))
            ncols += 1
        elif ub != INF:
            maps.append(([(ncols, -1)], _q(ub)))
            upper.append(INF)
            ncols += 1
        else:
            maps.append(([(ncols, 1), (ncols + 1, -1)], mpq(0)))
            upper += [INF, INF]
            ncols += 2
    rows, rhs, slacks = [], [], []
    for c in lp.constraints:
        row: dict = {}
        b = _q(c.rhs)
        for j, a in c.coeffs.items():
            a = _q(a)
            cols, off = maps[j]
            b -= a * off
            for col, s in cols:
                row[col] = row.get(col, 0) + s * a
        row = {k: a for k, a in row.items() if a != 0}
        if c.rel == "=":
            slacks.append(None)
        else:
            row[ncols] = mpq(1) if c.rel == "<=" else mpq(-1)
            slacks.append(ncols)
            upper.append(INF)
            ncols += 1
        rows.append(row)
        rhs.append(b)

    def cost_of(obj):
        cost: dict = {}
        const = mpq(0)
        for j, a in obj.items():
            a = _q(a)
            cols, off = maps[j]
            const += a * off
            for col, s in cols:
                cost[col] = cost.get(col, 0) + s * a
        return cost, const

    def recover(colvals):
        out = []
        for cols, off in maps:
            val = off
            for col, s in cols:
                val += s * colvals[col]
            out.append(_frac(val))
        return out

    return rows, rhs, slacks, upper, ncols, cost_of, recover, maps


def _simplex(lp: LinearProgram, objective: Mapping[int, Fraction], sense: str,
             lb_override=None, ub_override=None, keep: bool = False):
    """Two-phase primal simplex; with ``keep`` also returns the final tableau state."""
    prep = _prepare(lp, lb_override, ub_override)
    if prep is None:
        return (Solution(INFEASIBLE), None) if keep else Solution(INFEASIBLE)
    rows, rhs, slacks, upper, ncols, cost_of, recover, maps = prep
    m = len(rows)
    basis = []
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = {k: -a for k, a in rows[i].items()}
            rhs[i] = -rhs[i]
    art = []
    for i in range(m):
        slack = slacks[i]
        if slack is not None and rows[i][slack] == 1:
            rows[i].pop(slack)
            basis.append(slack)
        else:
            upper.append(INF)
            basis.append(ncols)
            art.append(ncols)
            ncols += 1
    tab = _Tableau(rows, list(rhs), basis, upper)
    if art:
        tab.set_objective({a: mpq(1) for a in art})
        tab.run()
        if tab.z0 != 0:
            return (Solution(INFEASIBLE), None) if keep else Solution(INFEASIBLE)
        art_set = set(art)
        drop = []
        for i, b in enumerate(tab.basis):
            if b in art_set:
                e = next((k for k in sorted(tab.rows[i]) if k not in art_set), None)
                if e is None:
                    drop.append(i)
                else:
                    tab.pivot(i, e)
        for i in reversed(drop):
            del tab.rows[i]
            del tab.beta[i]
            del tab.basis[i]
        for row in tab.rows:
            for a in art:
                row.pop(a, None)
    cost, const = cost_of(objective)
    if sense == "max":
        cost = {k: -a for k, a in cost.items()}
    tab.set_objective(cost)
    for a in art:
        tab.d.pop(a, None)
    status = tab.run()
    if status == UNBOUNDED:
        return (Solution(UNBOUNDED), None) if keep else Solution(UNBOUNDED)
    sol = _extract(lp, objective, tab, ncols, recover)
    if keep:
        return sol, _Warm(tab, ncols, recover, maps)
    return sol


@dataclass
class _Warm:
    tab: _Tableau
    ncols: int
    recover: object
    maps: list

    def column(self, j: int) -> int | None:
        cols, off = self.maps[j]
        if len(cols) == 1 and cols[0][1] == 1 and off == 0:
            return cols[0][0]
        return None


def _extract(lp, objective, tab: _Tableau, ncols: int, recover) -> Solution:
    colvals = [mpq(0)] * ncols
    for j in range(ncols):
        if tab.comp[j]:
            colvals[j] = tab.upper[j]
    for i, b in enumerate(tab.basis):
        colvals[b] = tab.upper[b] - tab.beta[i] if tab.comp[b] else tab.beta[i]
    x = recover(colvals)
    return Solution(OPTIMAL, x, lp.evaluate(objective, x))


def solve_lp(lp: LinearProgram, objective: Mapping[int, Fraction] | None = None,
             sense: str | None = None) -> Solution:
    """Exact LP optimum; binary markers are ignored (LP relaxation)."""
    objective = lp.objective if objective is None else objective
    sense = sense or lp.sense
    sol = _simplex(lp, objective, sense)
    if sol.optimal:
        relaxed = lp.copy()
        for v in relaxed.variables:
            v.kind = "continuous"
        if not relaxed.check(sol.x):
            raise SolverError("simplex returned an assignment violating the constraints")
    return sol


def _node_limit() -> int | None:
    v = os.environ.get("PTAWIT_NODE_LIMIT")
    return int(v) if v else None


def solve_milp(lp: LinearProgram, objective: Mapping[int, Fraction] | None = None,
               sense: str | None = None, node_limit: int | None = None) -> Solution:
    """Branch-and-bound over binaries; depth-first, most-fractional branching.

    Child nodes start from the parent's optimal tableau and re-optimize with
    the dual simplex after the branching variable is pinned; a node whose dual
    simplex exceeds its pivot budget is re-solved from scratch.
    """
    objective = lp.objective if objective is None else objective
    sense = sense or lp.sense
    sign = 1 if sense == "min" else -1
    node_limit = node_limit if node_limit is not None else _node_limit()
    binaries = lp.binaries
    bin_set = set(binaries)
    integral = all(j in bin_set and a.denominator == 1 for j, a in objective.items())
    best = None
    best_val = None
    nodes = 0
    root, warm = _simplex(lp, objective, sense, keep=True)
    if root.status == UNBOUNDED and binaries:
        # the recession cone ignores binary bounds, so any integer point makes it unbounded
        feas = solve_milp(lp, {}, "min", node_limit)
        return Solution(UNBOUNDED if feas.optimal else feas.status, nodes=feas.nodes + 1)
    if root.status != OPTIMAL:
        return Solution(root.status, nodes=1)
    budget = 20 * (len(warm.tab.rows) + warm.ncols)
    # node: (lb overrides, ub overrides, parent tableau or None, (column, at_upper) or None)
    stack = [({}, {}, None, None)]
    while stack:
        lbo, ubo, tab, fix = stack.pop()
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            return Solution(NODE_LIMIT, best.x if best else None, best_val, nodes=nodes)
        if tab is None:
            sol, tab = root, warm.tab
        elif tab == "cold":
            sol = _simplex(lp, objective, sense, lbo, ubo)
            if sol.status == INFEASIBLE:
                continue
        else:
            tab.fix(*fix)
            status = tab.dual_run(budget)
            if status == INFEASIBLE:
                continue
            if status == OPTIMAL:
                sol = _extract(lp, objective, tab, warm.ncols, warm.recover)
            else:
                # pivot budget exhausted: finish this subtree without warm starts
                tab = "cold"
                sol = _simplex(lp, objective, sense, lbo, ubo)
                if sol.status == INFEASIBLE:
                    continue
        bound = sign * sol.objective
        if integral:
            bound = Fraction(math.ceil(bound))
        if best_val is not None and bound >= sign * best_val:
            continue
        frac = None
        score = None
        for j in binaries:
            v = sol.x[j]
            if v.denominator != 1:
                s = abs(v - Fraction(1, 2))
                if score is None or s < score:
                    frac, score = j, s
        if frac is None:
            best, best_val = sol, sol.objective
            continue
        col = warm.column(frac)
        cold = tab == "cold" or col is None
        down = (dict(lbo), {**ubo, frac: Fraction(0)}, "cold" if cold else tab.copy(), (col, False))
        up = ({**lbo, frac: Fraction(1)}, dict(ubo), "cold" if cold else tab, (col, True))
        if sol.x[frac] >= Fraction(1, 2):
            stack += [down, up]
        else:
            stack += [up, down]
    if best is None:
        return Solution(INFEASIBLE, nodes=nodes)
    if not lp.check(best.x):
        raise SolverError("branch-and-bound incumbent violates the constraints")
    return Solution(OPTIMAL, best.x, best.objective, nodes=nodes)


def objective_range(lp: LinearProgram, coeffs: Mapping[int, Fraction]) -> tuple:
    lo = hi = Fraction(0)
    for j, a in coeffs.items():
        v = lp.variables[j]
        lo_j, hi_j = (v.lb, v.ub) if a > 0 else (v.ub, v.lb)
        if lo_j in (INF, -INF) or hi_j in (INF, -INF):
            raise ValueError("objective over an unbounded variable")
        lo += a * lo_j
        hi += a * hi_j
    return lo, hi


def add_nogood(lp: LinearProgram, ones: Iterable[int], zeros: Iterable[int], name: str = "") -> None:
    """Exclude one binary assignment: sum(1 - x_j, ones) + sum(x_j, zeros) >= 1."""
    ones, zeros = list(ones), list(zeros)
    coeffs = {j: -1 for j in ones}
    coeffs.update({j: 1 for j in zeros})
    lp.add_constraint(coeffs, ">=", 1 - len(ones), name)


def pareto_enumerate(lp: LinearProgram, objectives: Sequence[Mapping[int, Fraction]] | None = None,
                     node_limit: int | None = None, exclude=None, stop=None) -> list:
    """All non-dominated objective vectors (all objectives minimized).

    Repeatedly minimizes the sum of the objectives over the feasible set
    minus everything weakly dominated by frontier points found so far.
    ``exclude(point, x)`` may return rows ``(coeffs, rel, rhs)`` cutting off
    exactly that dominated set; the default encodes "improve some objective
    by at least 1" with one indicator binary per objective, which needs
    integer-valued objectives. ``stop(solution)`` returning true ends the
    sweep after that point.
    """
    objectives = list(objectives if objectives is not None else lp.objectives)
    if not objectives:
        raise ValueError("no objectives")
    work = lp.copy()
    ranges = [objective_range(lp, f) for f in objectives]
    total: dict = {}
    for f in objectives:
        for j, a in f.items():
            total[j] = total.get(j, 0) + a
    frontier = []
    while True:
        sol = solve_milp(work, total, "min", node_limit=node_limit)
        if sol.status != OPTIMAL:
            if sol.status == NODE_LIMIT:
                raise SolverError("node limit reached during Pareto enumeration")
            break
        point = tuple(lp.evaluate(f, sol.x) for f in objectives)
        x = sol.x[: len(lp.variables)]
        frontier.append(Solution(OPTIMAL, x, sum(point), point, sol.nodes))
        if stop is not None and stop(frontier[-1]):
            break
        k = len(frontier)
        if exclude is not None:
            rows = exclude(point, x)
            if not rows:
                break
            for coeffs, rel, rhs in rows:
                work.add_constraint(coeffs, rel, rhs, f"_pareto{k}")
            continue
        inds = []
        for m, f in enumerate(objectives):
            d = work.add_var(f"_pareto{k}_{m}", kind="binary")
            inds.append(d)
            lo, hi = ranges[m]
            # f <= point_m - 1 + big * (1 - d)
            big = hi - lo + 1
            coeffs = dict(f)
            coeffs[d] = big
            work.add_constraint(coeffs, "<=", point[m] - 1 + big, f"_pareto{k}_{m}")
        work.add_constraint({d: 1 for d in inds}, ">=", 1, f"_pareto{k}")
    return frontier
