import itertools
import random
from fractions import Fraction

import pytest
from conftest import all_regions, dbm_st, nonempty_dbm_st, valuation_st
from hypothesis import given
from hypothesis import strategies as st

from ptawit import dbm as D
from ptawit.dbm import ClockMismatch, Dbm, EmptyInput, EmptySet, NonCanonicalInput
from ptawit.numeric import INF_LT, ZERO_LE, Bound

# --------------------------------------------------------------------------
# exact oracle: the smallest zone containing a region, from its closure vertices


def region_bounds(r):
    """Exact (sup, attained) of c_i - c_j over a region, as a Bound matrix."""
    n = len(r.clocks)
    big = [False] + [r.big(i) for i in range(n)]
    ints = (0, *r.ints)
    ranks = (0, *r.ranks)
    m = max(ranks)
    # vertex k lifts the fractional parts of the k highest blocks to 1
    verts = [[ints[c] + (1 if ranks[c] and ranks[c] > m - k else 0) for c in range(n + 1)]
             for k in range(m + 1)]
    rows = []
    for i in range(n + 1):
        row = []
        for j in range(n + 1):
            if i == j:
                row.append(ZERO_LE)
            elif big[i]:
                row.append(INF_LT)
            elif big[j]:
                sup_i = max(v[i] for v in verts)
                row.append(Bound(sup_i - r.K, True))
            else:
                vals = {v[i] - v[j] for v in verts}
                # a relatively open simplex attains a linear sup only where it is constant
                row.append(Bound(max(vals), len(vals) > 1))
        rows.append(row)
    return Dbm(r.clocks, rows)


def smallest_zone(regions):
    mats = [region_bounds(r) for r in regions]
    n = mats[0].dim
    rows = [[max((m[i, j] for m in mats), key=lambda b: b._key) for j in range(n)] for i in range(n)]
    return Dbm(mats[0].clocks, rows)


REGIONS = all_regions(2, 2)


def test_region_dbm_matches_vertex_oracle():
    for r in REGIONS:
        assert r.canonical_dbm() == region_bounds(r), r.label()


def test_zone_closure_is_smallest_zone_on_region_pairs():
    # exhaustive at n = 2, K = 2
    for r1, r2 in itertools.combinations_with_replacement(REGIONS, 2):
        got = D.zone_closure(r1.canonical_dbm(), r2.canonical_dbm())
        assert got == smallest_zone([r1, r2]), (r1.label(), r2.label())


def test_zone_closure_of_regions_is_canonical():
    for r1, r2 in itertools.combinations(REGIONS, 2):
        got = D.zone_closure(r1.canonical_dbm(), r2.canonical_dbm())
        assert D.is_canonical(got)


def test_zone_closure_contains_sampled_members():
    rng = random.Random(7)
    for _ in range(200):
        r1, r2 = rng.sample(REGIONS, 2)
        z = D.zone_closure(r1.canonical_dbm(), r2.canonical_dbm())
        assert D.satisfies(r1.representative(), z)
        assert D.satisfies(r2.representative(), z)


# --------------------------------------------------------------------------
# algebraic laws


@given(dbm_st())
def test_canonicalize_idempotent(m):
    c = D.canonicalize(m)
    assert D.canonicalize(c) == c
    assert D.is_canonical(c)


@given(dbm_st(n=2, K=2), valuation_st(2, hi=3))
def test_canonicalize_preserves_valuations(m, v):
    assert D.satisfies(v, m) == D.satisfies(v, D.canonicalize(m))


@given(dbm_st(n=2, K=2), dbm_st(n=2, K=2), valuation_st(2, hi=3))
def test_intersect_is_conjunction(m, n, v):
    both = D.intersect(m, n)
    assert D.satisfies(v, both) == (D.satisfies(v, m) and D.satisfies(v, n))


@given(nonempty_dbm_st(n=2, K=2), nonempty_dbm_st(n=2, K=2))
def test_zone_closure_laws(m, n):
    z = D.zone_closure(m, n)
    assert D.is_canonical(z)
    assert D.includes(z, m) and D.includes(z, n)
    assert z == D.zone_closure(n, m)
    assert D.zone_closure(m, m) == m
    assert D.zone_closure(m, Dbm.empty(m.clocks)) == m


@given(nonempty_dbm_st(n=2, K=2), nonempty_dbm_st(n=2, K=2), valuation_st(2, hi=3))
def test_includes_agrees_with_points(m, n, v):
    if D.includes(m, n) and D.satisfies(v, n):
        assert D.satisfies(v, m)


@given(nonempty_dbm_st(n=2, K=2), st.sets(st.sampled_from(["x", "y"])), valuation_st(2, hi=3))
def test_reset_image(m, clocks, v):
    r = D.reset(m, clocks)
    if D.satisfies(v, m):
        idx = [m.index(c) for c in clocks]
        w = tuple(Fraction(0) if k in idx else x for k, x in enumerate(v))
        assert D.satisfies(w, r)


# --------------------------------------------------------------------------
# time closure, against the exact delay-interval oracle


def has_past_in(v, m):
    """Whether some d >= 0 gives v - d in Val(m)."""
    lo, lo_strict = Fraction(0), False
    hi, hi_strict = None, False
    n = m.dim
    for i in range(1, n):
        for j in range(1, n):
            if i != j and not m[i, j].admits(v[i] - v[j]):
                return False
    for i in range(1, n):
        b = m[i, 0]  # v_i - d (<)<= b  =>  d (>)>= v_i - b
        if not b.is_infinite:
            t = v[i] - b.value
            if t > lo or (t == lo and b.strict):
                lo, lo_strict = t, b.strict
        b = m[0, i]  # d - v_i (<)<= b  =>  d (<)<= v_i + b
        if not b.is_infinite:
            t = v[i] + b.value
            if hi is None or t < hi or (t == hi and b.strict):
                hi, hi_strict = t, b.strict
    if hi is None:
        return True
    return lo < hi or (lo == hi and not lo_strict and not hi_strict)


@pytest.mark.parametrize("seed", range(20))
def test_time_closure_sampled(seed):
    rng = random.Random(seed)
    # random canonical DBM via a hypothesis-free draw
    while True:
        entries = [[Bound(rng.randint(-2, 3), rng.random() < 0.5) if rng.random() < 0.8 else INF_LT
                    for _ in range(3)] for _ in range(3)]
        for i in range(3):
            entries[i][i] = ZERO_LE
        m = D.canonicalize(Dbm(("x", "y"), entries))
        if not m.is_empty:
            break
    up = D.time_closure(m)
    for _ in range(1000):
        v = (Fraction(0), *(Fraction(rng.randint(0, 24), 4) for _ in range(2)))
        assert D.satisfies(v, up) == has_past_in(v, m), (m, v)


@given(nonempty_dbm_st(n=2, K=2))
def test_time_closure_idempotent_and_canonical(m):
    up = D.time_closure(m)
    assert D.is_canonical(up)
    assert D.time_closure(up) == up
    assert D.includes(up, m)


# --------------------------------------------------------------------------
# construction and errors


def test_universe_and_empty():
    u = Dbm.universe(("x", "y"))
    assert D.is_canonical(u)
    assert u.to_text() == "true"
    e = Dbm.empty(("x",))
    assert e.is_empty and e.to_text() == "false"
    with pytest.raises(EmptyInput):
        D.time_closure(e)
    with pytest.raises(EmptyInput):
        e[0, 0]


def test_clock_mismatch():
    with pytest.raises(ClockMismatch):
        D.intersect(Dbm.universe(("x",)), Dbm.universe(("y",)))


def test_zone_closure_rejects_non_canonical():
    loose = Dbm.from_bounds(("x", "y"), [(1, 0, Bound.le(1)), (2, 1, Bound.le(0))])
    assert not D.is_canonical(loose)
    with pytest.raises(NonCanonicalInput):
        D.zone_closure(loose, Dbm.universe(("x", "y")))


def test_inconsistent_bounds_canonicalize_to_empty():
    m = Dbm.from_bounds(("x",), [(1, 0, Bound.le(1)), (0, 1, Bound.le(-2))])
    assert D.canonicalize(m).is_empty


def test_canonical_dbm_of_set():
    a = D.point_dbm(("x", "y"), (0, 0))
    b = D.point_dbm(("x", "y"), (1, 1))
    z = D.canonical_dbm_of_set([a, b])
    assert z.to_text() == "x<=1 & x-y<=0 & y<=1 & y-x<=0"
    with pytest.raises(EmptySet):
        D.canonical_dbm_of_set([])
    assert D.canonical_dbm_of_set([], clocks=("x",)).is_empty


def test_atom_rendering_roundtrip():
    m = D.canonicalize(Dbm.from_bounds(("x", "y"), [(1, 0, Bound.lt(2)), (0, 2, Bound.le(-1)), (1, 2, Bound.le(0))]))
    assert "x<2" in m.atoms() and "y>=1" in m.atoms() and "x-y<=0" in m.atoms()
