from __future__ import annotations

import itertools
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ptawit import dbm as D
from ptawit.dbm import Dbm
from ptawit.numeric import INF_LT, Bound
from ptawit.parser import load
from ptawit.quotient import Region, build_quotient

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def fig1():
    return load(FIXTURES / "fig1.pta")


@pytest.fixture(scope="session")
def fig1_bounded():
    return load(FIXTURES / "fig1_bounded.pta")


@pytest.fixture(scope="session")
def fig1_quotient(fig1):
    return build_quotient(fig1)


@pytest.fixture(scope="session")
def bounded_quotient(fig1_bounded):
    return build_quotient(fig1_bounded)


# --------------------------------------------------------------------------
# regions and DBMs


def all_regions(n: int, K: int, location: str = "l") -> list:
    """Every clock region over ``n`` clocks with constant ``K``."""
    clocks = tuple("xyzw"[:n])
    seen = set()
    for ints in itertools.product(range(K + 2), repeat=n):
        for ranks in itertools.product(range(n + 1), repeat=n):
            if any(ints[i] > K and ranks[i] for i in range(n)):
                continue
            if any(ints[i] == K and ranks[i] for i in range(n)):
                continue
            used = sorted({r for r in ranks if r})
            if used != list(range(1, len(used) + 1)):
                continue
            seen.add(Region(location, clocks, K, ints, ranks))
    return sorted(seen, key=lambda r: (r.ints, r.ranks))


def bound_st(K: int = 3, infinite: bool = True):
    finite = st.builds(Bound, st.integers(-K, K), st.booleans())
    return st.one_of(finite, st.just(INF_LT)) if infinite else finite


@st.composite
def dbm_st(draw, n: int | None = None, K: int = 3, boxed: bool = False):
    """Random (not necessarily canonical or consistent) DBM.

    ``boxed`` adds finite upper bounds ``c <= K`` so the zone is bounded.
    """
    n = draw(st.integers(1, 3)) if n is None else n
    clocks = tuple("xyz"[:n])
    entries = [[draw(bound_st(K)) for _ in range(n + 1)] for _ in range(n + 1)]
    for i in range(n + 1):
        entries[i][i] = Bound(0, False)
    m = Dbm(clocks, entries)
    if boxed:
        box = Dbm.from_bounds(clocks, [(i, 0, Bound(K, False)) for i in range(1, n + 1)])
        m = D.intersect(m, box)
    return m


@st.composite
def nonempty_dbm_st(draw, n: int | None = None, K: int = 3, boxed: bool = False):
    m = D.canonicalize(draw(dbm_st(n, K, boxed)))
    if m.is_empty:
        # the region of a random integer point is never empty
        n = len(m.clocks)
        pt = draw(st.lists(st.integers(0, K), min_size=n, max_size=n))
        m = D.point_dbm(m.clocks, pt)
    return m


def valuation_st(n: int, hi: int = 4, den: int = 4):
    coord = st.integers(0, hi * den).map(lambda k: Fraction(k, den))
    return st.lists(coord, min_size=n, max_size=n).map(lambda vs: (Fraction(0), *vs))


# --------------------------------------------------------------------------
# acceptance lines, printed once at the end of the run

ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
