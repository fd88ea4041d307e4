"""Acceptance criteria, one PASS/FAIL line each (shown in the terminal summary)."""
import itertools
import math
import random
import time
import warnings
from fractions import Fraction

import pytest
import test_dbm as dbm_oracles
import test_milp as milp_oracles
import test_volume as volume_oracles
from conftest import ACCEPTANCE, FIXTURES, all_regions
from lattice import dominated_witnesses
from ptagen import interesting_pta, random_pta, random_pruning

from ptawit import dbm as D
from ptawit.cli import main
from ptawit.farkas import InitialRegionMissing, build_system, find_certificate, induce_subsystem, restricted_optimum
from ptawit.milp import INFEASIBLE, OPTIMAL, solve_milp
from ptawit.minwit import minimize_inv, minimize_loc, minimize_vol
from ptawit.model import is_strong_subsystem, is_subsystem
from ptawit.parser import load
from ptawit.quotient import build_quotient
from ptawit.reach import AssumptionViolated, reach_prob, verify_witness
from ptawit.volume import dbm_volume, mi_generator

LAM = Fraction(6, 25)
FIG1 = str(FIXTURES / "fig1.pta")


def record(label: str, ok: bool, detail: str) -> None:
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE.append(line)
    print(line)


def cli_output(capsys, *argv) -> str:
    code = main(list(argv))
    out = capsys.readouterr().out
    assert code == 0
    return out.strip()


# --------------------------------------------------------------------------
# 1. exact reachability on the running example


def test_criterion_1_max(capsys):
    t = time.perf_counter()
    out = cli_output(capsys, "check", FIG1, "--dir", "max")
    dt = time.perf_counter() - t
    ok = out.split()[0] == "687/1250" and dt < 5
    record("1.max", ok, f"check --dir max printed {out.split()[0]}, expected 687/1250, {dt:.2f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="the fixture as drawn has Pr^min = 269/500; 27/50 is not attainable")
def test_criterion_1_min(capsys):
    t = time.perf_counter()
    out = cli_output(capsys, "check", FIG1, "--dir", "min")
    dt = time.perf_counter() - t
    ok = out.split()[0] == "27/50" and dt < 5
    record("1.min", ok, f"check --dir min printed {out.split()[0]}, expected 27/50, {dt:.2f}s; "
                        "expected failure, see the decisions ledger")
    assert ok


# --------------------------------------------------------------------------
# 2. loc-minimality


def test_criterion_2(fig1):
    t = time.perf_counter()
    M = build_quotient(fig1)
    mx = minimize_loc(fig1, M, LAM, "max", enumerate_all=True)
    mn = minimize_loc(fig1, M, LAM, "min", enumerate_all=True)
    dt = time.perf_counter() - t
    sets_max = set(mx.location_sets())
    sets_min = mn.location_sets()
    ok = (mx.optimum == 2 and sets_max == {frozenset({"l0", "l1"}), frozenset({"l0", "l2"})}
          and mn.optimum == 2 and sets_min == [frozenset({"l0", "l2"})] and dt < 30)
    fmt = lambda ss: " ".join("{" + ",".join(sorted(s)) + "}" for s in sorted(ss, key=sorted))
    record("2", ok, f"max optimum {mx.optimum} supports {fmt(sets_max)}; "
                    f"min optimum {mn.optimum} supports {fmt(sets_min)}; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 3. vol-minimality


def test_criterion_3(fig1_bounded):
    t = time.perf_counter()
    M = build_quotient(fig1_bounded)
    reps = {d: minimize_vol(fig1_bounded, M, LAM, d) for d in ("max", "min")}
    dt = time.perf_counter() - t
    verified = all(verify_witness(fig1_bounded, r.witness, LAM, d) for d, r in reps.items())
    ok = all(r.optimum == 0 for r in reps.values()) and verified and dt < 120
    record("3", ok, f"optimum volume max {reps['max'].optimum}, min {reps['min'].optimum}; "
                    f"sweep stops at the volume-0 lower bound; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 4. inv-minimality against brute-force lattice descent


def test_criterion_4(fig1_bounded):
    t = time.perf_counter()
    T = fig1_bounded
    M = build_quotient(T)
    F = build_system(M)
    details, ok = [], True
    for d in ("min", "max"):
        rep = minimize_inv(T, M, LAM, d)
        for W in rep.witnesses:
            v = verify_witness(T, W, LAM, d)
            found, tried = dominated_witnesses(T, M, F, W.subsystem, LAM, d)
            ok &= bool(v) and not found and v.strength == ("strong" if d == "min" else "weak")
            details.append(f"{d}: {v.strength} Pr={v.probability}, {tried} shrinkings, {len(found)} dominating")
    dt = time.perf_counter() - t
    ok &= dt < 300
    record("4", ok, "; ".join(details) + f"; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 5. certificate <-> witness round trip


def semantic_support(M, W) -> set:
    return {s for s in range(M.n)
            if M.location(s) in W.locations and D.includes(W.invariants[M.location(s)].dbm, M.dbm(s))}


def test_criterion_5():
    t = time.perf_counter()
    failures, witnesses = [], 0
    for seed in range(50):
        direction = ("min", "max")[seed % 2]
        kind = "strong" if direction == "min" else "weak"
        T, M, F, best = interesting_pta(10_000 + seed, direction)
        rng = random.Random(seed)
        lam = best * Fraction(rng.randint(1, 8), 8)
        certs = [find_certificate(F, direction, lam)]
        R = {s for s in range(M.n) if rng.random() < 0.7} | {M.initial}
        value, cert = restricted_optimum(F, direction, R)
        if value >= lam:
            cert.lam = lam
            certs.append(cert)
        for c in certs:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", InitialRegionMissing)
                W = induce_subsystem(T, M, c.support(F), kind, direction)
            v = verify_witness(T, W, lam, direction)
            witnesses += 1
            if not v:
                failures.append(f"seed {seed}: induced witness {v.structural} Pr={v.probability} < {lam}")
                continue
            back, _ = restricted_optimum(F, direction, semantic_support(M, W.subsystem))
            if back < v.probability:
                failures.append(f"seed {seed}: support optimum {back} < Pr={v.probability}")
    dt = time.perf_counter() - t
    ok = not failures and dt < 600
    record("5", ok, f"50 PTAs, {witnesses} certificate-induced witnesses, {len(failures)} failures; {dt:.1f}s")
    assert ok, failures[:5]


# --------------------------------------------------------------------------
# 6. DBM law suite


def test_criterion_6():
    t = time.perf_counter()
    rng = random.Random(6)
    idem = 0
    for _ in range(500):
        n = rng.randint(1, 3)
        rows = [[D.Bound(rng.randint(-3, 3), rng.random() < 0.5) if rng.random() < 0.8 else D.INF_LT
                 for _ in range(n + 1)] for _ in range(n + 1)]
        for i in range(n + 1):
            rows[i][i] = D.ZERO_LE
        c = D.canonicalize(D.Dbm(tuple("xyz"[:n]), rows))
        idem += D.canonicalize(c) == c
    regions = all_regions(2, 2)
    pairs = list(itertools.combinations_with_replacement(regions, 2))
    smallest = canonical = 0
    for r1, r2 in pairs:
        z = D.zone_closure(r1.canonical_dbm(), r2.canonical_dbm())
        smallest += z == dbm_oracles.smallest_zone([r1, r2])
        canonical += D.is_canonical(z)
    samples = bad = 0
    for seed in range(20):
        r = random.Random(seed)
        while True:
            rows = [[D.Bound(r.randint(-2, 3), r.random() < 0.5) if r.random() < 0.8 else D.INF_LT
                     for _ in range(3)] for _ in range(3)]
            for i in range(3):
                rows[i][i] = D.ZERO_LE
            m = D.canonicalize(D.Dbm(("x", "y"), rows))
            if not m.is_empty:
                break
        up = D.time_closure(m)
        for _ in range(1000):
            v = (Fraction(0), *(Fraction(r.randint(0, 24), 4) for _ in range(2)))
            samples += 1
            bad += D.satisfies(v, up) != dbm_oracles.has_past_in(v, m)
    dt = time.perf_counter() - t
    ok = idem == 500 and smallest == len(pairs) and canonical == len(pairs) and bad == 0
    record("6", ok, f"idempotence 500/500={idem == 500}; smallest zone {smallest}/{len(pairs)} region pairs; "
                    f"canonical {canonical}/{len(pairs)}; time closure {samples} samples, {bad} failures; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 7. volume


def test_criterion_7():
    t = time.perf_counter()
    volumes = []
    posets = mismatches = 0
    for n in range(1, 5):
        for rel in volume_oracles.partial_orders(n):
            r = dbm_volume(mi_generator(rel, n), 1)
            volumes.append(r)
            posets += 1
            mismatches += r.value * math.factorial(n) != volume_oracles.linear_extensions(rel, n)
    mc_fail = 0
    for seed in range(20):
        try:
            volume_oracles.test_monte_carlo_agreement(seed)
        except AssertionError:
            mc_fail += 1
    rng = random.Random(7)
    for _ in range(200):
        m = volume_oracles.random_bounded_dbm(rng, rng.randint(1, 3), 2)
        volumes.append(dbm_volume(m, 2))
    multiples = all((v.value * math.factorial(v.n)).denominator == 1 for v in volumes)
    dt = time.perf_counter() - t
    ok = multiples and mismatches == 0 and mc_fail == 0
    record("7", ok, f"{len(volumes)} volumes multiples of 1/n!: {multiples}; {posets} posets, {mismatches} "
                    f"linear-extension mismatches; Monte Carlo {20 - mc_fail}/20 within 3 sigma; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 8. solver


def test_criterion_8():
    t = time.perf_counter()
    instances = agree = 0
    for lp in milp_oracles.generated_suite():
        instances += 1
        sol = solve_milp(lp)
        best = milp_oracles.brute_force(lp)
        if best is None:
            agree += sol.status == INFEASIBLE
        else:
            agree += sol.status == OPTIMAL and sol.objective == best
    dual_ok = 0
    for seed in range(50):
        A, b, c = milp_oracles.random_feasible_lp(random.Random(seed))
        p, d = milp_oracles.primal_dual(A, b, c)
        dual_ok += p.status == OPTIMAL and d.status == OPTIMAL and p.objective == d.objective
    dt = time.perf_counter() - t
    ok = agree == instances and dual_ok == 50
    record("8", ok, f"MILP = brute force on {agree}/{instances} instances (<= 12 binaries); "
                    f"primal = dual on {dual_ok}/50 LPs; {dt:.1f}s")
    assert ok


# --------------------------------------------------------------------------
# 9. monotonicity under subsystems


def test_criterion_9():
    t = time.perf_counter()
    counts = {"max": 0, "min": 0}
    strict = {"max": 0, "min": 0}
    violations = []
    seed = 0
    while counts["max"] + counts["min"] < 100:
        direction = "max" if counts["max"] < 50 else "min"
        strong = direction == "min"
        T, _ = random_pta(20_000 + seed)
        P = random_pruning(T, random.Random(seed), strong)
        seed += 1
        accepted = is_strong_subsystem(T, P) if strong else is_subsystem(T, P)
        if not accepted:
            continue
        K = max(T.max_constant(), P.max_constant())
        try:
            a = reach_prob(build_quotient(T, K), direction).initial_value
            b = reach_prob(build_quotient(P, K), direction).initial_value
        except AssumptionViolated:
            continue
        counts[direction] += 1
        strict[direction] += b < a
        if b > a:
            violations.append((seed - 1, direction, a, b))
    dt = time.perf_counter() - t
    ok = not violations
    record("9", ok, f"{counts['max']} weak pairs (Pr^max), {counts['min']} strong pairs (Pr^min), "
                    f"{len(violations)} increases, {strict['max'] + strict['min']} strict decreases; {dt:.1f}s")
    assert ok, violations
