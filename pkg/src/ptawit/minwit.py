"""Minimal witnessing subsystems: location-, invariant- and volume-minimal.

All pipelines share the same skeleton: a Farkas certificate polytope for the
threshold, extra binaries that measure the witness, an exact MILP, and a
witness decoded from the certificate's support.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .farkas import (
    FarkasSystem,
    add_max_rows,
    add_min_rows,
    build_system,
    induce_subsystem,
    restricted_optimum,
    trivial_witness,
)
from .milp import NODE_LIMIT, OPTIMAL, LinearProgram, SolverError, add_nogood, pareto_enumerate, solve_lp, solve_milp
from .model import Pta, Witness, leq_inv, leq_loc, leq_vol, pta_volume
from .numeric import format_rational
from .quotient import QuotientMdp
from .reach import verify_witness

__all__ = [
    "Infeasible",
    "UnboundedInvariant",
    "InvEncoding",
    "MinimizationReport",
    "minimize_loc",
    "minimize_inv",
    "minimize_vol",
    "qs_heuristic",
    "leq_loc",
    "leq_inv",
    "leq_vol",
]

# weight given to a location whose zeta dropped to 0 in the quotient-sum heuristic
QS_CAP = Fraction(10**4)


class Infeasible(Exception):
    def __init__(self, lam, best):
        super().__init__(
            f"threshold exceeds Pr^*: lambda = {format_rational(lam)} > {format_rational(best)}"
        )
        self.lam = lam
        self.best = best


class UnboundedInvariant(ValueError):
    pass


@dataclass
class Candidate:
    point: tuple
    witness: Witness
    volume: Fraction


@dataclass
class MinimizationReport:
    notion: str
    direction: str
    lam: Fraction
    optimum: object
    witnesses: list
    candidates: list = field(default_factory=list)
    seconds: float = 0.0
    nodes: int = 0
    best_probability: Fraction | None = None
    complete: bool = True  # False when a vol sweep stopped at a volume-0 candidate

    @property
    def witness(self) -> Witness:
        return self.witnesses[0]

    def locations(self, k: int = 0) -> tuple:
        return self.witnesses[k].subsystem.inner_locations

    def location_sets(self) -> list:
        return [frozenset(w.subsystem.inner_locations) for w in self.witnesses]

    def to_dict(self) -> dict:
        def wit(w):
            return {
                "locations": list(w.subsystem.inner_locations),
                "strength": w.strength,
                "probability": format_rational(w.probability) if w.probability is not None else None,
                "volume": _fmt(pta_volume(w.subsystem)),
                "invariants": {l: w.subsystem.invariants[l].text for l in w.subsystem.inner_locations},
            }

        return {
            "notion": self.notion,
            "direction": self.direction,
            "lambda": format_rational(self.lam),
            "optimum": _fmt(self.optimum),
            "witnesses": [wit(w) for w in self.witnesses],
            "candidates": [
                {"point": [int(p) for p in c.point], "volume": _fmt(c.volume),
                 "locations": list(c.witness.subsystem.inner_locations)}
                for c in self.candidates
            ],
            "complete": self.complete,
            "seconds": round(self.seconds, 3),
            "nodes": self.nodes,
        }

    def to_text(self) -> str:
        unit = {"loc": "locations", "inv": "(xi-sum)", "vol": ""}[self.notion]
        head = f"optimum {_fmt(self.optimum)} {unit}".rstrip()
        if self.notion == "vol":
            head = f"optimum volume {_fmt(self.optimum)}"
        if self.notion == "loc" and self.witnesses:
            head += ": " + "; ".join(",".join(s) for s in (w.subsystem.inner_locations for w in self.witnesses))
        lines = [
            f"notion {self.notion}, direction {self.direction}, lambda {format_rational(self.lam)}",
            head,
        ]
        for k, w in enumerate(self.witnesses):
            pr = format_rational(w.probability) if w.probability is not None else "?"
            lines.append(f"witness {k + 1} ({w.strength}, Pr_{self.direction} = {pr}):")
            for l in w.subsystem.inner_locations:
                lines.append(f"  {l}: inv {w.subsystem.invariants[l].text}")
        if self.candidates:
            note = "" if self.complete else " (stopped at volume 0, the lower bound)"
            lines.append(f"pareto candidates: {len(self.candidates)}{note}")
            for c in self.candidates:
                lines.append(f"  {list(int(p) for p in c.point)} volume {_fmt(c.volume)}")
        lines.append(f"time {self.seconds:.2f}s, nodes {self.nodes}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return str(v)


def _kind(direction: str) -> str:
    if direction not in ("min", "max"):
        raise ValueError("direction is 'min' or 'max'")
    return "strong" if direction == "min" else "weak"


class _Setup:
    """Certificate polytope for one threshold, shared by all pipelines."""

    def __init__(self, T: Pta, M: QuotientMdp, lam, direction: str):
        self.T, self.M = T, M
        self.lam = Fraction(lam)
        self.direction = direction
        self.kind = _kind(direction)
        self.F: FarkasSystem = build_system(M)
        self.best, _ = restricted_optimum(self.F, direction)
        if self.lam > self.best:
            raise Infeasible(self.lam, self.best)
        self.lp = LinearProgram()
        if direction == "min":
            self.cert = add_min_rows(self.lp, self.F, self.lam)
        else:
            self.cert = add_max_rows(self.lp, self.F, self.lam)
        self._big = None
        self._mass: dict = {}

    def rows_for_state(self, s: int) -> list:
        """Certificate variables attached to state s (one for min, one per choice for max)."""
        if self.direction == "min":
            return [self.cert[s]]
        return [self.cert[r] for r in self.F.rows_of(s)]

    def big_m(self, s: int) -> Fraction:
        """Upper bound on the certificate mass at state s."""
        if self.direction == "min":
            return Fraction(1)
        if self._big is None:
            self._big = _max_state_bounds(self.F)
        return self._big[s]

    def mass(self, s: int) -> int:
        """Variable carrying the certificate mass at s (z(s), or the sum of y(s, .))."""
        if self.direction == "min":
            return self.cert[s]
        w = self._mass.get(s)
        if w is None:
            w = self._mass[s] = self.lp.add_var(f"w{s}", 0, self.big_m(s))
            coeffs = {v: 1 for v in self.rows_for_state(s)}
            coeffs[w] = -1
            self.lp.add_constraint(coeffs, "=", 0, f"mass{s}")
        return w

    def link(self, s: int, binary: int, name: str) -> None:
        """Certificate mass at s may be positive only if ``binary`` is 1."""
        self.lp.add_constraint({self.mass(s): 1, binary: -self.big_m(s)}, "<=", 0, name)

    def support(self, x) -> frozenset:
        if self.direction == "min":
            return frozenset(s for s, v in enumerate(self.cert) if x[v] > 0)
        return frozenset(self.F.rows[r][0] for r, v in enumerate(self.cert) if x[v] > 0)

    def decode(self, x) -> Witness:
        R = self.support(x)
        if not R:
            W = trivial_witness(self.T, self.M, self.kind, self.direction)
        else:
            W = induce_subsystem(self.T, self.M, R, self.kind, self.direction)
        res = verify_witness(self.T, W, self.lam, self.direction, K=self.M.K)
        if not res:
            raise SolverError(f"decoded witness failed verification: {res.structural}, Pr = {res.probability}")
        W.probability = res.probability
        return W

    def trivial(self) -> Witness:
        W = trivial_witness(self.T, self.M, self.kind, self.direction)
        res = verify_witness(self.T, W, self.lam, self.direction, K=self.M.K)
        W.probability = res.probability
        return W


def _max_state_bounds(F: FarkasSystem) -> list:
    """Per state s, the maximum of sum_a y(s,a) over {y >= 0 | y A <= delta_s0}."""
    lp = LinearProgram()
    y = add_max_rows(lp, F, None)
    rows: list = [[] for _ in range(F.n_states)]
    for r, (s, _) in enumerate(F.rows):
        rows[s].append(y[r])
    out = []
    for vs in rows:
        sol = solve_lp(lp, {v: 1 for v in vs}, "max")
        if sol.status != OPTIMAL:
            raise SolverError(f"big-M presolve ended with status {sol.status}")
        out.append(sol.objective)
    return out


def _check_solution(sol, what: str) -> None:
    if sol.status == NODE_LIMIT:
        raise SolverError(f"node limit reached while solving {what}")
    if sol.status != OPTIMAL:
        raise SolverError(f"{what} ended with status {sol.status}")


# --------------------------------------------------------------------------
# location-minimal


def minimize_loc(T: Pta, M: QuotientMdp, lam, direction: str, enumerate_all: bool = False,
                 node_limit: int | None = None) -> MinimizationReport:
    """Fewest locations (goal and fail excluded) of a witness for ``Pr_dir >= lam``."""
    start = time.perf_counter()
    st = _Setup(T, M, lam, direction)
    if st.lam == 0:
        return MinimizationReport("loc", direction, st.lam, 0, [st.trivial()],
                                  seconds=time.perf_counter() - start, best_probability=st.best)
    zeta = {l: st.lp.add_var(f"zeta_{l}", kind="binary") for l in T.inner_locations}
    for s in range(M.n):
        st.link(s, zeta[M.location(s)], f"loc{s}")
    objective = {v: 1 for v in zeta.values()}
    st.lp.set_objective(objective, "min")
    witnesses, seen, nodes = [], set(), 0
    optimum = None
    while True:
        sol = solve_milp(st.lp, node_limit=node_limit)
        nodes += sol.nodes
        if sol.status == "infeasible" and optimum is not None:
            break
        _check_solution(sol, "LOC-MILP")
        if optimum is None:
            optimum = sol.objective
        elif sol.objective > optimum:
            break
        W = st.decode(sol.x)
        locs = frozenset(W.subsystem.inner_locations)
        if locs not in seen:
            seen.add(locs)
            witnesses.append(W)
        if not enumerate_all:
            break
        ones = [v for v in zeta.values() if sol.x[v] == 1]
        zeros = [v for v in zeta.values() if sol.x[v] == 0]
        add_nogood(st.lp, ones, zeros)
    return MinimizationReport("loc", direction, st.lam, int(optimum), witnesses,
                              seconds=time.perf_counter() - start, nodes=nodes, best_probability=st.best)


# --------------------------------------------------------------------------
# invariant-minimal


@dataclass
class InvEncoding:
    """Binaries xi[l, i, j, k]: value 1 means ceil(k/2) (strict for odd k) bounds c_i - c_j at l.

    ``index`` maps every (l, i, j, k) to a solver variable or to None (the
    constant 0). In the compressed form only codes that some region uses get
    their own variable; any other k shares the variable of the next used code
    above it, the value every optimal solution gives it anyway.
    """

    K: int
    index: dict
    pairs: list

    @property
    def n(self) -> int:
        return 4 * self.K + 1

    @property
    def ks(self) -> range:
        return range(-2 * self.K, 2 * self.K + 1)

    def objective(self, l, i, j) -> dict:
        out: dict = {}
        for k in self.ks:
            v = self.index[l, i, j, k]
            if v is not None:
                out[v] = out.get(v, 0) + 1
        return out

    def total(self) -> dict:
        out: dict = {}
        for g in self.pairs:
            for v, a in self.objective(*g).items():
                out[v] = out.get(v, 0) + a
        return out

    def groups(self) -> list:
        return list(self.pairs)

    def value(self, x, l, i, j, k) -> int:
        v = self.index[l, i, j, k]
        return 0 if v is None else int(x[v])

    def step(self, x, l, i, j) -> int:
        """Number of ones in the (monotone) configuration of one (l, i, j)."""
        return sum(self.value(x, l, i, j, k) for k in self.ks)

    def top(self, x, l, i, j):
        """Variable of the highest code set to 1, or None if the configuration is all zero."""
        best = None
        for k in self.ks:
            v = self.index[l, i, j, k]
            if v is not None and x[v] == 1:
                best = v
        return best

    def dominance_cut(self, point, x) -> list:
        """Row excluding every solution at least as large as ``x`` in all objectives.

        With monotone chains, objective (l, i, j) reaches its current value
        exactly when the variable of its highest active code is 1.
        """
        tops = [self.top(x, *g) for g in self.pairs]
        tops = [v for v in tops if v is not None]
        if not tops:
            return []
        return [({v: 1 for v in tops}, "<=", len(tops) - 1)]

    def is_monotone(self, x) -> bool:
        for l, i, j in self.pairs:
            vals = [self.value(x, l, i, j, k) for k in self.ks]
            if any(vals[t] > vals[t - 1] for t in range(1, len(vals))):
                return False
        return True


def _entry_code(bound) -> int | None:
    """Index k encoding a bound: (a, <=) -> 2a and (a, <) -> 2a - 1."""
    if bound.is_infinite:
        return None
    a = int(bound.value)
    return 2 * a - 1 if bound.strict else 2 * a


def _inv_setup(T: Pta, M: QuotientMdp, lam, direction: str, compress: bool = True):
    if not T.is_bounded():
        raise UnboundedInvariant("minimizing invariants requires bounded invariants (declare `bound K`)")
    st = _Setup(T, M, lam, direction)
    K = M.K
    n = len(T.clocks)
    # Clock upper bounds (j = 0) cannot be strengthened in a strong subsystem,
    # since its invariant is closed under delays; weak ones can shrink them.
    first = 0 if direction == "max" else 1
    pairs = [(l, i, j) for l in T.inner_locations for i in range(n + 1)
             for j in range(first, n + 1) if i != j]
    by_loc: dict = {}
    for g in pairs:
        by_loc.setdefault(g[0], []).append(g)
    links = []  # (state, group, code)
    used: dict = {g: set() for g in pairs}
    for s in range(M.n):
        m = M.dbm(s)
        for g in by_loc.get(M.location(s), ()):
            k = _entry_code(m[g[1], g[2]])
            if k is None or k > 2 * K:
                raise UnboundedInvariant(f"region {M.states[s].label()} exceeds the clock bound {K}")
            if k >= -2 * K:
                links.append((s, g, k))
                used[g].add(k)
    index = {}
    for g in pairs:
        l, i, j = g
        codes = sorted(used[g]) if compress else list(range(-2 * K, 2 * K + 1))
        var = {}
        prev = None
        for k in codes:
            v = st.lp.add_var(f"xi_{l}_{i}_{j}_{k}", kind="binary")
            var[k] = v
            if prev is not None:
                st.lp.add_constraint({v: 1, prev: -1}, "<=", 0, f"chain_{l}_{i}_{j}_{k}")
            prev = v
        for k in range(-2 * K, 2 * K + 1):
            nxt = next((c for c in codes if c >= k), None)
            index[l, i, j, k] = None if nxt is None else var[nxt]
    for s, (l, i, j), k in links:
        st.link(s, index[l, i, j, k], f"inv{s}_{i}_{j}")
    return st, InvEncoding(K, index, pairs)


def minimize_inv(T: Pta, M: QuotientMdp, lam, direction: str,
                 node_limit: int | None = None, compress: bool = True) -> MinimizationReport:
    """Invariant-minimal witness via the xi encoding; optimum is the xi-sum."""
    start = time.perf_counter()
    st, enc = _inv_setup(T, M, lam, direction, compress)
    if st.lam == 0:
        return MinimizationReport("inv", direction, st.lam, 0, [st.trivial()],
                                  seconds=time.perf_counter() - start, best_probability=st.best)
    st.lp.set_objective(enc.total(), "min")
    sol = solve_milp(st.lp, node_limit=node_limit)
    _check_solution(sol, "INV-MILP")
    if not enc.is_monotone(sol.x):
        raise SolverError("xi configuration is not monotone")
    W = st.decode(sol.x)
    rep = MinimizationReport("inv", direction, st.lam, int(sol.objective), [W],
                             seconds=time.perf_counter() - start, nodes=sol.nodes, best_probability=st.best)
    rep.encoding = enc
    rep.solution = sol.x
    return rep


def minimize_vol(T: Pta, M: QuotientMdp, lam, direction: str,
                 node_limit: int | None = None, compress: bool = True,
                 full_sweep: bool = False) -> MinimizationReport:
    """Volume-minimal witness among the Pareto-optimal xi configurations.

    Volumes are non-negative, so the sweep ends at the first candidate of
    volume 0 unless ``full_sweep`` asks for the whole frontier.
    """
    start = time.perf_counter()
    st, enc = _inv_setup(T, M, lam, direction, compress)
    if st.lam == 0:
        W = st.trivial()
        return MinimizationReport("vol", direction, st.lam, pta_volume(W.subsystem), [W],
                                  seconds=time.perf_counter() - start, best_probability=st.best)
    objectives = [enc.objective(*g) for g in enc.groups()]
    candidates = []
    stopped = []

    def visit(sol):
        W = st.decode(sol.x)
        candidates.append(Candidate(sol.objectives, W, pta_volume(W.subsystem)))
        if not full_sweep and candidates[-1].volume == 0:
            stopped.append(True)
        return bool(stopped)

    frontier = pareto_enumerate(st.lp, objectives, node_limit=node_limit,
                                exclude=enc.dominance_cut, stop=visit)
    best = min(c.volume for c in candidates)
    winners = [c.witness for c in candidates if c.volume == best]
    return MinimizationReport("vol", direction, st.lam, best, winners, candidates,
                              seconds=time.perf_counter() - start,
                              nodes=sum(s.nodes for s in frontier), best_probability=st.best,
                              complete=not stopped)


# --------------------------------------------------------------------------
# quotient-sum heuristic


def qs_heuristic(T: Pta, M: QuotientMdp, lam, direction: str, iterations: int = 5) -> MinimizationReport:
    """LP-only heuristic: reweight continuous zeta by the inverse of the last solution."""
    start = time.perf_counter()
    st = _Setup(T, M, lam, direction)
    if st.lam == 0:
        return MinimizationReport("loc", direction, st.lam, 0, [st.trivial()],
                                  seconds=time.perf_counter() - start, best_probability=st.best)
    zeta = {l: st.lp.add_var(f"zeta_{l}", 0, 1) for l in T.inner_locations}
    for s in range(M.n):
        st.link(s, zeta[M.location(s)], f"loc{s}")
    weights = {l: Fraction(1) for l in zeta}
    sol = None
    for _ in range(max(1, iterations)):
        sol = solve_lp(st.lp, {zeta[l]: w for l, w in weights.items()}, "min")
        _check_solution(sol, "quotient-sum LP")
        weights = {l: (1 / sol.x[v] if sol.x[v] > 0 else QS_CAP) for l, v in zeta.items()}
    W = st.decode(sol.x)
    return MinimizationReport("loc", direction, st.lam, len(W.subsystem.inner_locations), [W],
                              seconds=time.perf_counter() - start, best_probability=st.best)
