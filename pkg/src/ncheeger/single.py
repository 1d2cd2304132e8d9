"""Single-set Cheeger solver: minimizes perimeter(E)/area(E) over nonempty
pixel subsets E of a region A.

The ratio is minimized by Dinkelbach iteration: repeatedly solve the
linearized subproblem min_E perimeter(E) - lam * area(E) (a min-cut) and
update lam to the minimizer's exact ratio. The subproblem network is built
once per region; only terminal links depend on lam.

Also hosts the continuum closed-form oracle for convex shapes, used by the
bounds module and the test suite.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import brentq

from . import maxflow
from .errors import MaxIterExceeded, NotConvex, TooFewPixels
from .grid import STENCIL, Disk, GridSpec, Rect, RegularPolygon, ShapeExpr, area, perimeter


@dataclasses.dataclass(frozen=True)
class SolverTolerances:
    """Stopping controls for the ratio iteration.

    eps_dink is the absolute threshold on the subproblem minimum; None
    selects the scale-aware default 1e-7 * area(A) (the objective is
    extensive in area).
    """

    eps_dink: float | None = None
    max_iter: int = 64

    def __post_init__(self):
        if self.eps_dink is not None and not self.eps_dink > 0:
            raise ValueError("eps_dink must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def resolve(self, region_area: float) -> float:
        if self.eps_dink is not None:
            return self.eps_dink
        return 1e-7 * region_area


@dataclasses.dataclass(frozen=True, eq=False)
class CheegerResult:
    h: float
    set: np.ndarray  # bool mask of the Cheeger set
    trace: tuple  # (lambda_k, subproblem minimum) per iteration
    iterations: int


class RatioNetwork:
    """Min-cut encoding of min_{E subset A} perimeter(E) - lam * area(E).

    n-links carry the stencil weights between pixels of A; the per-pixel
    linear term (boundary weight leaving A, minus lam * h^2) folds into a
    signed terminal link. The cut of a labeling differs from the objective
    by a lam-dependent constant, handled in solve(). Built once per region;
    solve() may be called for many lam values.
    """

    def __init__(self, A: np.ndarray, spec: GridSpec):
        ny, nx = A.shape
        self.spec = spec
        self.shape = A.shape
        w = STENCIL.weights(spec.h)

        node_id = np.full((ny + 4, nx + 4), -1, np.int64)
        ys, xs = np.nonzero(A)
        self.n = ys.size
        node_id[ys + 2, xs + 2] = np.arange(self.n)
        self.ys = ys
        self.xs = xs

        u_parts, v_parts, c_parts, l_parts = [], [], [], []
        w_out = np.zeros(self.n)
        inner = node_id[2:-2, 2:-2]
        here = inner[ys, xs]  # == arange(n), kept for clarity of indexing
        for k, (dx, dy) in enumerate(STENCIL.offsets):
            reach = max(abs(int(dx)), abs(int(dy)))
            for sx, sy in ((int(dx), int(dy)), (-int(dx), -int(dy))):
                nbr = node_id[2 + sy : 2 + sy + ny, 2 + sx : 2 + sx + nx][ys, xs]
                if sy > 0 or (sy == 0 and sx > 0):
                    # canonical direction: record each unordered pair once
                    m = nbr >= 0
                    u_parts.append(here[m])
                    v_parts.append(nbr[m])
                    c_parts.append(np.full(int(m.sum()), w[k]))
                    l_parts.append(np.full(int(m.sum()), reach, np.int8))
                # every signed direction contributes to the leaving weight
                w_out += w[k] * (nbr < 0)

        u = np.concatenate(u_parts) if u_parts else np.zeros(0, np.int64)
        v = np.concatenate(v_parts) if v_parts else np.zeros(0, np.int64)
        cap = np.concatenate(c_parts) if c_parts else np.zeros(0)
        elen = np.concatenate(l_parts) if l_parts else np.zeros(0, np.int8)
        self.first, self.adj_to, self.adj_arc = maxflow.build_csr(self.n, u, v)
        self.rcap_base = np.repeat(cap, 2)
        self.alen = np.repeat(elen, 2)
        self.w_out = w_out
        self.h2 = spec.h**2
        self._res_rcap: np.ndarray | None = None
        self._res_tr: np.ndarray | None = None
        self._res_lam = 0.0

    def solve(self, lam: float) -> tuple[float, np.ndarray]:
        """Minimum of perimeter(E) - lam*area(E) over E subset A, and the
        MAXIMAL minimizing set. The value is never positive (E = empty is
        feasible at 0).

        Successive calls with strictly decreasing lam continue from the
        previous residual: shifting the folded terminals by (lam' - lam)*h^2
        re-states the routed flow against the new capacities up to per-node
        constants on both terminal arcs, and those cancel in every cut, so
        the minimizers are untouched and only the increment needs routing.
        The ratio iteration descends, so it gets this for free. The value is
        scored by the measure itself; flow accounting does not survive the
        re-statement.
        """
        fresh = not (self._res_tr is not None and lam < self._res_lam)
        if fresh:
            tr = lam * self.h2 - self.w_out
            rcap = self.rcap_base.copy()
        else:
            tr = self._res_tr
            tr += (lam - self._res_lam) * self.h2
            rcap = self._res_rcap
        scale = max(
            float(self.rcap_base.max(initial=0.0)),
            float(np.abs(tr).max(initial=0.0)),
        )
        eps = 1e-9 * scale if scale > 0 else 1e-300
        _, side = maxflow.solve_csr(
            self.first, self.adj_to, self.adj_arc, self.alen, rcap, tr, eps, fresh
        )
        self._res_rcap, self._res_tr, self._res_lam = rcap, tr, lam
        E = np.zeros(self.shape, bool)
        E[self.ys[side], self.xs[side]] = True
        value = perimeter(E, self.spec) - lam * float(E.sum()) * self.h2
        return min(value, 0.0), E


def ratio_subproblem(A: np.ndarray, lam: float, spec: GridSpec) -> tuple[float, np.ndarray]:
    """One-shot linearized subproblem; see RatioNetwork."""
    if not A.any():
        raise TooFewPixels("subproblem needs a nonempty region")
    if not lam > 0:
        raise ValueError("lam must be positive")
    return RatioNetwork(A, spec).solve(lam)


def cheeger_solve(
    A: np.ndarray, spec: GridSpec, tol: SolverTolerances | None = None
) -> CheegerResult:
    """Exact discrete Cheeger constant and a Cheeger set of the region A.

    Starts from lam0 = perimeter(A)/area(A) and iterates the subproblem;
    stops when the minimizer is empty or the minimum clears -eps_dink. The
    lam trace is strictly decreasing and the returned h is the exact ratio
    of the returned set.

    Raises
    ------
    TooFewPixels
        If A is empty.
    MaxIterExceeded
        If the iteration cap is hit (not observed on grids: the discrete
        ratio takes finitely many values).
    """
    if not A.any():
        raise TooFewPixels("cheeger_solve needs a nonempty region")
    tol = tol or SolverTolerances()
    region_area = area(A, spec)
    eps = tol.resolve(region_area)
    lam = perimeter(A, spec) / region_area
    net = RatioNetwork(A, spec)

    trace = []
    cur = A.copy()
    for k in range(tol.max_iter):
        value, E = net.solve(lam)
        trace.append((lam, value))
        if value >= -eps or not E.any():
            return CheegerResult(lam, cur, tuple(trace), k + 1)
        new_lam = perimeter(E, spec) / area(E, spec)
        if new_lam >= lam:
            # float-dust guard; a strictly negative subproblem minimum
            # forces a strictly smaller ratio in exact arithmetic
            return CheegerResult(lam, cur, tuple(trace), k + 1)
        cur = E
        lam = new_lam
    raise MaxIterExceeded(f"ratio iteration did not settle in {tol.max_iter} steps")


# ---------------------------------------------------------------------------
# continuum oracle for convex shapes


def _polygon_inset_coeff(sides: int) -> float:
    # inner-offset area of a convex polygon: A - P*r + r^2 * sum cot(theta_i/2)
    theta = math.pi * (sides - 2) / sides
    return sides / math.tan(theta / 2)


def inner_cheeger_convex(shape: ShapeExpr) -> float:
    """Cheeger constant of a convex shape, h = 1/r*, where r* solves
    |shape_-r| = pi r^2 (inner parallel set area equals the area of the
    disk of radius r). Supports disks, rectangles and regular polygons.

    Raises NotConvex for anything else.
    """
    if isinstance(shape, Disk):
        # pi (R - r)^2 = pi r^2  =>  r = R/2
        return 2.0 / shape.radius

    if isinstance(shape, Rect):
        A = shape.width * shape.height
        P = 2 * (shape.width + shape.height)
        inradius = min(shape.width, shape.height) / 2
        coeff = 4.0  # four right angles, cot(45 deg) each
    elif isinstance(shape, RegularPolygon):
        R = shape.circumradius
        k = shape.sides
        A = 0.5 * k * R**2 * math.sin(2 * math.pi / k)
        P = k * 2 * R * math.sin(math.pi / k)
        inradius = R * math.cos(math.pi / k)
        coeff = _polygon_inset_coeff(k)
    else:
        raise NotConvex(f"no convex-shape formula for {type(shape).__name__}")

    def gap(r: float) -> float:
        return (A - P * r + coeff * r * r) - math.pi * r * r

    r_star = brentq(gap, 1e-12 * inradius, inradius * (1 - 1e-12), xtol=1e-15, rtol=1e-15)
    return 1.0 / r_star
