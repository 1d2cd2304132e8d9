"""Interface geometry of a labeled cluster.

Interfaces between labels are traced along dual-grid edges (pixel corner
to pixel corner), giving sub-pixel polylines with no smoothing. Each
polyline gets an algebraic circle fit; the fitted curvature is compared
against the constant predicted from the chamber statistics. Corners whose
2x2 pixel window shows three or more in-domain labels are the singular
set; windows touching the domain exterior are excluded, since boundary
contact points are not constrained to be finite.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg

from .cluster import ChamberStats, ClusterResult
from .errors import TooShort
from .grid import OUTSIDE, Labeling

MIN_FIT_VERTICES = 5
LINE_RADIUS_FACTOR = 50.0
FIT_LENGTH_PIXELS = 10
CURVATURE_REL_TOL = 0.10


@dataclasses.dataclass(frozen=True, eq=False)
class InterfacePolyline:
    """Chain of dual-grid edges separating labels pair[0] < pair[1].

    probe_lo / probe_hi are pixel centers just inside the lower- and
    higher-labeled chamber at the middle edge, for orienting fits.
    """

    pair: tuple[int, int]
    vertices: np.ndarray  # (m, 2) dual-corner coordinates
    length: float
    closed: bool
    probe_lo: tuple[float, float]
    probe_hi: tuple[float, float]


@dataclasses.dataclass(frozen=True, eq=False)
class ArcFit:
    kind: str  # CIRCLE | LINE
    signed_curvature: float
    rms_residual: float
    center: tuple[float, float] | None = None
    radius: float | None = None
    point: tuple[float, float] | None = None
    direction: tuple[float, float] | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class TriplePoint:
    position: tuple[float, float]
    labels: tuple[int, ...]


def _check_labels(labeling: Labeling) -> None:
    lab = labeling.labels
    if lab.shape != labeling.spec.shape:
        raise ValueError("labels shape differs from grid")
    if int(lab.min(initial=0)) < OUTSIDE or int(lab.max(initial=OUTSIDE)) > labeling.N:
        raise ValueError("labels out of range")


def _corner_windows(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per dual corner: the sorted 2x2 label window (4, ny+1, nx+1), the
    count of distinct in-domain labels, and whether OUTSIDE is present."""
    ny, nx = labels.shape
    pad = np.full((ny + 2, nx + 2), OUTSIDE, labels.dtype)
    pad[1:-1, 1:-1] = labels
    win = np.stack([pad[:-1, :-1], pad[:-1, 1:], pad[1:, :-1], pad[1:, 1:]])
    s = np.sort(win, axis=0)
    fresh = np.empty(s.shape, bool)
    fresh[0] = s[0] >= 0
    fresh[1:] = (s[1:] >= 0) & (s[1:] != s[:-1])
    return s, fresh.sum(axis=0), s[0] == OUTSIDE


def extract_interfaces(labeling: Labeling) -> list[InterfacePolyline]:
    """Split the inter-label dual edge set into maximal chains.

    Chains break at corners where three or more in-domain labels meet and
    at corners whose interface degree is not 2 (ends on the domain rim,
    checkerboard saddles). Leftover edges form closed loops. Every
    inter-label dual edge lands in exactly one polyline. Output order is
    deterministic: row-major by starting corner, loops last.
    """
    _check_labels(labeling)
    lab = labeling.labels
    ny, nx = lab.shape
    spec = labeling.spec
    h = spec.h
    x0, y0 = spec.origin
    ncx = nx + 1  # corners per dual row

    # edge tables: endpoints (corner ids), label pair, pixel on each side
    c1s: list[int] = []
    c2s: list[int] = []
    los: list[int] = []
    his: list[int] = []
    lo_pix: list[tuple[int, int]] = []
    hi_pix: list[tuple[int, int]] = []

    def _emit(iy, ix, la, lb, c1, c2, pa, pb):
        for y, x, a, b, u, v, qa, qb in zip(iy, ix, la, lb, c1, c2, pa, pb):
            if a < b:
                lo, hi, ql, qh = a, b, qa, qb
            else:
                lo, hi, ql, qh = b, a, qb, qa
            c1s.append(u)
            c2s.append(v)
            los.append(int(lo))
            his.append(int(hi))
            lo_pix.append(ql)
            hi_pix.append(qh)

    a, b = lab[:, :-1], lab[:, 1:]
    iy, ix = np.nonzero((a >= 0) & (b >= 0) & (a != b))
    _emit(
        iy, ix, a[iy, ix], b[iy, ix],
        iy * ncx + ix + 1, (iy + 1) * ncx + ix + 1,
        list(zip(ix, iy)), list(zip(ix + 1, iy)),
    )
    a, b = lab[:-1, :], lab[1:, :]
    iy, ix = np.nonzero((a >= 0) & (b >= 0) & (a != b))
    _emit(
        iy, ix, a[iy, ix], b[iy, ix],
        (iy + 1) * ncx + ix, (iy + 1) * ncx + ix + 1,
        list(zip(ix, iy)), list(zip(ix, iy + 1)),
    )

    n_edges = len(c1s)
    if n_edges == 0:
        return []
    c1a = np.array(c1s)
    c2a = np.array(c2s)

    n_corners = (ny + 1) * ncx
    degree = np.bincount(c1a, minlength=n_corners) + np.bincount(
        c2a, minlength=n_corners
    )
    _, ndistinct, _ = _corner_windows(lab)
    breakpoint = (ndistinct.ravel() >= 3) | (degree != 2)

    incident: dict[int, list[int]] = {}
    for e in range(n_edges):
        incident.setdefault(c1s[e], []).append(e)
        incident.setdefault(c2s[e], []).append(e)

    used = np.zeros(n_edges, bool)

    # pixel (ix, iy) is centered at (x0 + ix h, y0 + iy h); dual corner
    # (ci, cj) sits at the shared cell corner half a pixel below-left
    def corner_xy(cid: int) -> tuple[float, float]:
        cj, ci = divmod(cid, ncx)
        return (x0 + (ci - 0.5) * h, y0 + (cj - 0.5) * h)

    def pixel_center(p: tuple[int, int]) -> tuple[float, float]:
        return (x0 + p[0] * h, y0 + p[1] * h)

    def build(chain: list[int], cids: list[int]) -> InterfacePolyline:
        mid = chain[len(chain) // 2]
        verts = np.array([corner_xy(c) for c in cids])
        return InterfacePolyline(
            pair=(los[mid], his[mid]),
            vertices=verts,
            length=len(chain) * h,
            closed=cids[0] == cids[-1],
            probe_lo=pixel_center(lo_pix[mid]),
            probe_hi=pixel_center(hi_pix[mid]),
        )

    out: list[InterfacePolyline] = []
    for start in np.nonzero(breakpoint & (degree > 0))[0]:
        for e0 in incident[int(start)]:
            if used[e0]:
                continue
            chain = [e0]
            used[e0] = True
            cids = [int(start)]
            cur = c2s[e0] if c1s[e0] == start else c1s[e0]
            cids.append(cur)
            while not breakpoint[cur]:
                nxt = next((e for e in incident[cur] if not used[e]), None)
                if nxt is None:
                    break
                used[nxt] = True
                chain.append(nxt)
                cur = c2s[nxt] if c1s[nxt] == cur else c1s[nxt]
                cids.append(cur)
            out.append(build(chain, cids))

    # untouched edges now belong to closed loops with no breakpoints
    for e0 in range(n_edges):
        if used[e0]:
            continue
        chain = [e0]
        used[e0] = True
        start = c1s[e0]
        cids = [start, c2s[e0]]
        cur = c2s[e0]
        while cur != start:
            nxt = next(e for e in incident[cur] if not used[e])
            used[nxt] = True
            chain.append(nxt)
            cur = c2s[nxt] if c1s[nxt] == cur else c1s[nxt]
            cids.append(cur)
        out.append(build(chain, cids))
    return out


_PRATT_B = np.array(
    [
        [0.0, 0.0, 0.0, -2.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [-2.0, 0.0, 0.0, 0.0],
    ]
)


def fit_arc(p: InterfacePolyline) -> ArcFit:
    """Pratt-normalized algebraic circle fit of the polyline vertices.

    The generalized eigenproblem (Z^T Z) a = eta B a with the Pratt
    constraint matrix B weights algebraic distance by the gradient on the
    circle; the smallest non-negative eigenvalue gives the fit. A fitted
    radius above 50x the polyline length triggers a total-least-squares
    LINE refit with zero curvature. Curvature sign is positive when the
    fitted center lies on the orienting chamber's side (the lower label of
    the pair, or the chamber itself for pairs with the exterior).
    """
    if len(p.vertices) < MIN_FIT_VERTICES:
        raise TooShort(f"need {MIN_FIT_VERTICES} vertices, got {len(p.vertices)}")
    V = np.asarray(p.vertices, float)
    if p.closed:
        V = V[:-1]
    c0 = V.mean(axis=0)
    X = V - c0

    z = (X**2).sum(axis=1)
    Z = np.column_stack([z, X[:, 0], X[:, 1], np.ones(len(X))])
    M = Z.T @ Z / len(X)
    w, vecs = scipy.linalg.eig(M, _PRATT_B)
    scale = max(1.0, float(np.abs(M).max()))
    real = np.isfinite(w) & (np.abs(w.imag) <= 1e-9 * scale)
    valid = real & (w.real >= -1e-9 * scale)

    circle = None
    if valid.any():
        coeff = vecs[:, int(np.argmin(np.where(valid, w.real, np.inf)))].real
        if coeff[0] != 0.0:
            r2 = coeff[1] ** 2 + coeff[2] ** 2 - 4.0 * coeff[0] * coeff[3]
            if r2 > 0.0:
                cx = -coeff[1] / (2.0 * coeff[0]) + c0[0]
                cy = -coeff[2] / (2.0 * coeff[0]) + c0[1]
                circle = (cx, cy, math.sqrt(r2) / (2.0 * abs(coeff[0])))

    if circle is not None and circle[2] <= LINE_RADIUS_FACTOR * p.length:
        cx, cy, r = circle
        dist = np.hypot(V[:, 0] - cx, V[:, 1] - cy)
        rms = float(np.sqrt(np.mean((dist - r) ** 2)))
        probe = p.probe_lo if p.pair[0] >= 1 else p.probe_hi
        sign = 1.0 if math.hypot(probe[0] - cx, probe[1] - cy) < r else -1.0
        return ArcFit(
            "CIRCLE", sign / r, rms, center=(cx, cy), radius=r
        )

    d = np.linalg.svd(X, full_matrices=False)[2][0]
    if d[0] < 0 or (d[0] == 0 and d[1] < 0):
        d = -d
    res = X @ np.array([-d[1], d[0]])
    rms = float(np.sqrt(np.mean(res**2)))
    return ArcFit(
        "LINE", 0.0, rms, point=(float(c0[0]), float(c0[1])),
        direction=(float(d[0]), float(d[1])),
    )


def expected_curvature(j: int, k: int, stats: ChamberStats) -> float:
    """Interface curvature constant between chambers j and k.

    For k = 0 this is the ratio of chamber j itself; otherwise the
    area-weighted difference of the two ratios, antisymmetric in (j, k).
    """
    if j < 1:
        raise ValueError("j must index a chamber (j >= 1)")
    hj = float(stats.ratios[j - 1])
    if k == 0:
        return hj
    aj = float(stats.areas[j - 1])
    ak = float(stats.areas[k - 1])
    hk = float(stats.ratios[k - 1])
    return (ak * hj - aj * hk) / (aj + ak)


def triple_points(labeling: Labeling) -> list[TriplePoint]:
    """Dual corners whose 2x2 window holds >= 3 distinct in-domain labels
    and no exterior pixel, row-major order."""
    _check_labels(labeling)
    lab = labeling.labels
    s, ndistinct, touches_out = _corner_windows(lab)
    h = labeling.spec.h
    x0, y0 = labeling.spec.origin
    pts = []
    for cj, ci in zip(*np.nonzero((ndistinct >= 3) & ~touches_out)):
        labels = tuple(int(v) for v in np.unique(s[:, cj, ci]))
        pts.append(
            TriplePoint((x0 + (ci - 0.5) * h, y0 + (cj - 0.5) * h), labels)
        )
    return pts


@dataclasses.dataclass(frozen=True, eq=False)
class ArcRecord:
    pair: tuple[int, int]
    length: float
    closed: bool
    fit: ArcFit | None
    expected: float
    rel_err: float | None
    verdict: str  # PASS | FLAG | ABSENT (too short to fit)


@dataclasses.dataclass(frozen=True, eq=False)
class StructureReport:
    records: tuple[ArcRecord, ...]
    triples: tuple[TriplePoint, ...]
    verdict: str

    @property
    def triple_count(self) -> int:
        return len(self.triples)


def structure_report(result: ClusterResult) -> StructureReport:
    """Fit every interface at least 10 pixels long and compare |curvature|
    to the predicted constant, relative to max(|constant|, 1/diam).
    PASS needs every fitted interface within 10%."""
    lab = result.labeling
    stats = result.stats
    h = lab.spec.h
    ys, xs = np.nonzero(lab.labels >= 0)
    diam = math.hypot((xs.max() - xs.min() + 1) * h, (ys.max() - ys.min() + 1) * h)
    floor = 1.0 / diam

    records = []
    for p in extract_interfaces(lab):
        j, k = p.pair
        expected = (
            expected_curvature(j, k, stats) if j >= 1 else expected_curvature(k, 0, stats)
        )
        if p.length >= FIT_LENGTH_PIXELS * h and len(p.vertices) >= MIN_FIT_VERTICES:
            fit = fit_arc(p)
            rel = abs(abs(fit.signed_curvature) - abs(expected)) / max(
                abs(expected), floor
            )
            verdict = "PASS" if rel <= CURVATURE_REL_TOL else "FLAG"
            records.append(ArcRecord(p.pair, p.length, p.closed, fit, expected, rel, verdict))
        else:
            records.append(ArcRecord(p.pair, p.length, p.closed, None, expected, None, "ABSENT"))

    triples = tuple(triple_points(lab))
    verdict = "PASS" if all(r.verdict != "FLAG" for r in records) else "FLAG"
    return StructureReport(tuple(records), triples, verdict)
