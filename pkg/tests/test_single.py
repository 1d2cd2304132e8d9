"""Ratio iteration for the single-set isoperimetric problem, plus the
continuum oracle for convex shapes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncheeger.errors import MaxIterExceeded, NotConvex, TooFewPixels
from ncheeger.grid import Disk, GridSpec, Rect, RegularPolygon, area, perimeter, rasterize
from ncheeger.single import (
    CheegerResult,
    SolverTolerances,
    cheeger_solve,
    inner_cheeger_convex,
    ratio_subproblem,
)

SQUARE_H = 2 + math.sqrt(math.pi)  # unit square, inner rounding radius 1/(2+sqrt(pi))


def disk_domain(h, radius=1.0):
    n = round(2 * radius / h) + 16
    spec = GridSpec(n, n, h)
    c = radius + 6.5 * h
    return rasterize(Disk((c, c), radius), spec)


def square_domain(h):
    n = round(1 / h) + 14
    spec = GridSpec(n, n, h)
    return rasterize(Rect((6.5 * h, 6.5 * h), 1.0, 1.0), spec)


def quadratic_root_h(A, P, coeff):
    # (coeff - pi) r^2 - P r + A = 0, smaller root; the rounding radius of
    # the optimal inner set
    a = coeff - math.pi
    r = (P - math.sqrt(P * P - 4 * a * A)) / (2 * a)
    return 1.0 / r


# ---------------------------------------------------------------------------
# convex-shape oracle


def test_oracle_disk_exact():
    assert inner_cheeger_convex(Disk((0, 0), 1.0)) == pytest.approx(2.0, rel=1e-12)
    assert inner_cheeger_convex(Disk((3, 1), 0.25)) == pytest.approx(8.0, rel=1e-12)


def test_oracle_unit_square_closed_form():
    got = inner_cheeger_convex(Rect((0, 0), 1.0, 1.0))
    assert got == pytest.approx(SQUARE_H, rel=1e-10)
    assert got == pytest.approx(quadratic_root_h(1.0, 4.0, 4.0), rel=1e-10)
    assert got == pytest.approx(3.772453850905516, rel=1e-12)


def test_oracle_rectangle_quadratic():
    w, hh = 2.0, 0.5
    got = inner_cheeger_convex(Rect((1, 1), w, hh))
    assert got == pytest.approx(quadratic_root_h(w * hh, 2 * (w + hh), 4.0), rel=1e-10)


def test_oracle_unit_area_hexagon():
    side = math.sqrt(2 / (3 * math.sqrt(3)))  # area = 3*sqrt(3)/2 * side^2 = 1
    got = inner_cheeger_convex(RegularPolygon(6, (0, 0), side))
    coeff = 6 / math.tan(math.pi / 3)  # sum of cot(interior/2) over corners
    assert got == pytest.approx(quadratic_root_h(1.0, 6 * side, coeff), rel=1e-10)
    assert got == pytest.approx(3.6336635691097148, rel=1e-12)


def test_oracle_polygon_limits_to_disk():
    # many-sided unit-circumradius polygon approaches the disk value 2
    got = inner_cheeger_convex(RegularPolygon(256, (0, 0), 1.0))
    assert got == pytest.approx(2.0, rel=1e-3)


def test_oracle_scaling():
    a = inner_cheeger_convex(Rect((0, 0), 1.0, 1.0))
    b = inner_cheeger_convex(Rect((0, 0), 3.0, 3.0))
    assert b == pytest.approx(a / 3, rel=1e-10)


def test_oracle_rejects_nonconvex():
    with pytest.raises(NotConvex):
        inner_cheeger_convex(Disk((0, 0), 1.0) | Disk((3, 0), 1.0))


# ---------------------------------------------------------------------------
# ratio subproblem


def test_subproblem_single_pixel():
    spec = GridSpec(16, 16, 0.5)
    A = np.zeros(spec.shape, bool)
    A[8, 8] = True
    p1 = perimeter(A, spec)
    lam_lo = 0.5 * p1 / spec.h**2
    val, E = ratio_subproblem(A, lam_lo, spec)
    assert val == 0.0 and not E.any()
    lam_hi = 2.0 * p1 / spec.h**2
    val, E = ratio_subproblem(A, lam_hi, spec)
    assert (E == A).all()
    assert val == pytest.approx(-p1, rel=1e-12)


def test_subproblem_validation():
    spec = GridSpec(8, 8, 0.5)
    A = np.zeros(spec.shape, bool)
    with pytest.raises(TooFewPixels):
        ratio_subproblem(A, 1.0, spec)
    A[4, 4] = True
    with pytest.raises(ValueError):
        ratio_subproblem(A, 0.0, spec)
    with pytest.raises(ValueError):
        ratio_subproblem(A, -2.0, spec)


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.2, 30.0))
def test_subproblem_value_matches_minimizer(seed, lam):
    # reported minimum equals the functional evaluated on the returned set
    rng = np.random.default_rng(seed)
    spec = GridSpec(18, 18, 0.25)
    A = rng.random(spec.shape) < 0.5
    if not A.any():
        A[9, 9] = True
    val, E = ratio_subproblem(A, lam, spec)
    assert val <= 0.0
    assert (E & ~A).sum() == 0
    if E.any():
        direct = perimeter(E, spec) - lam * area(E, spec)
        assert val == pytest.approx(direct, abs=1e-9 * max(1.0, abs(val)))
    check = perimeter(A, spec) - lam * area(A, spec)
    assert val <= check + 1e-9


# ---------------------------------------------------------------------------
# cheeger_solve


def test_disk_value_refines_toward_oracle():
    errs = {}
    for denom in (16, 64):
        dom = disk_domain(1 / denom)
        res = cheeger_solve(dom.inside, dom.spec)
        errs[denom] = abs(res.h - 2.0) / 2.0
    assert errs[64] < 0.015
    assert errs[64] < errs[16]


def test_square_value():
    dom = square_domain(1 / 64)
    res = cheeger_solve(dom.inside, dom.spec)
    assert res.h == pytest.approx(SQUARE_H, rel=0.015)
    # optimal set keeps the square sides but rounds the corners
    assert res.set.sum() < dom.inside.sum()
    assert area(res.set, dom.spec) > 0.9


def test_returned_ratio_is_exact():
    dom = disk_domain(1 / 32)
    res = cheeger_solve(dom.inside, dom.spec)
    assert res.h == pytest.approx(
        perimeter(res.set, dom.spec) / area(res.set, dom.spec), rel=1e-12
    )


def test_trace_is_strictly_decreasing_and_certified():
    dom = square_domain(1 / 32)
    res = cheeger_solve(dom.inside, dom.spec)
    lams = [t[0] for t in res.trace]
    vals = [t[1] for t in res.trace]
    assert all(a > b for a, b in zip(lams, lams[1:]))
    assert all(v <= 0 for v in vals)
    eps = SolverTolerances().resolve(area(dom.inside, dom.spec))
    assert vals[-1] >= -eps
    assert len(res.trace) == res.iterations


def test_resolve_is_deterministic():
    dom = square_domain(1 / 32)
    a = cheeger_solve(dom.inside, dom.spec)
    b = cheeger_solve(dom.inside, dom.spec)
    assert a.h == b.h
    assert (a.set == b.set).all()
    assert a.trace == b.trace


def test_returned_set_is_self_cheeger():
    dom = square_domain(1 / 32)
    res = cheeger_solve(dom.inside, dom.spec)
    again = cheeger_solve(res.set, dom.spec)
    assert again.h == pytest.approx(res.h, rel=1e-6)
    assert again.iterations == 1


def test_grid_scaling_exact():
    # same pixel mask at spacings h and 2h: every ratio scales by exactly 2
    dom = disk_domain(1 / 16)
    spec2 = GridSpec(dom.spec.nx, dom.spec.ny, 2 * dom.spec.h)
    res1 = cheeger_solve(dom.inside, dom.spec)
    res2 = cheeger_solve(dom.inside, spec2)
    assert res1.h == 2 * res2.h
    assert (res1.set == res2.set).all()


def test_cheeger_upper_bound_by_region_ratio():
    rng = np.random.default_rng(2)
    spec = GridSpec(24, 24, 0.25)
    for _ in range(5):
        A = rng.random(spec.shape) < 0.55
        A[10:14, 10:14] = True
        res = cheeger_solve(A, spec)
        assert res.h <= perimeter(A, spec) / area(A, spec) + 1e-12


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_cheeger_monotone_under_inclusion(seed):
    # any candidate set for A is a candidate for B when A is inside B
    rng = np.random.default_rng(seed)
    spec = GridSpec(20, 20, 0.25)
    A = rng.random(spec.shape) < 0.35
    if not A.any():
        A[10, 10] = True
    B = A | (rng.random(spec.shape) < 0.35)
    ha = cheeger_solve(A, spec).h
    hb = cheeger_solve(B, spec).h
    assert hb <= ha + 1e-9 * ha


def test_empty_region_raises():
    spec = GridSpec(8, 8, 0.5)
    with pytest.raises(TooFewPixels):
        cheeger_solve(np.zeros(spec.shape, bool), spec)


def test_max_iter_exceeded():
    dom = square_domain(1 / 32)
    with pytest.raises(MaxIterExceeded):
        cheeger_solve(dom.inside, dom.spec, SolverTolerances(max_iter=1))


def test_tolerance_validation():
    with pytest.raises(ValueError):
        SolverTolerances(eps_dink=0.0)
    with pytest.raises(ValueError):
        SolverTolerances(eps_dink=-1e-9)
    with pytest.raises(ValueError):
        SolverTolerances(max_iter=0)
    assert SolverTolerances(eps_dink=1e-5).resolve(123.0) == 1e-5
    assert SolverTolerances().resolve(2.0) == pytest.approx(2e-7)
