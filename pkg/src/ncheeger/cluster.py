"""N-chamber partition solver: minimizes the sum of chamber ratios
sum_i perimeter(E_i)/area(E_i) over N disjoint chambers inside a domain.

Multi-start block-coordinate descent. A sweep visits chambers in fixed
order; each block step hands chamber i the region A_i = (its own pixels
plus all unclaimed pixels) and replaces it by the Cheeger set of A_i.
Optimal clusters are exactly the fixed points of that map, which is what
makes coordinate descent the natural algorithm here. A block step is
accepted only if the replacement's exact ratio does not exceed the old
chamber's, so the energy trace is non-increasing without any float slack.

Seeding is hexagonal (the near-optimal large-N layout) for the first
restart and random Voronoi for the rest; validation checks the structural
properties expected of minimizers and FLAGs rather than fails, since
discrete minimizers may violate continuum facts within resolution error.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy import ndimage

from .errors import ChamberVanished, TooFewPixels
from .grid import (
    OUTSIDE,
    DomainMask,
    Labeling,
    area,
    components,
    perimeter,
    stencil_adjacent_to_complement,
    validate_labeling,
)
from .single import SolverTolerances, cheeger_solve

SELF_CHEEGER_TOL = 1e-5
VOLUME_SLACK = 0.05


class SeedStrategy(enum.Enum):
    HEX_GRID = "HEX_GRID"
    RANDOM_VORONOI = "RANDOM_VORONOI"


@dataclasses.dataclass(frozen=True)
class ClusterConfig:
    N: int
    restarts: int = 4
    seed_strategy: SeedStrategy = SeedStrategy.HEX_GRID
    max_sweeps: int = 60
    eps_energy: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not self.eps_energy > 0:
            raise ValueError("eps_energy must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")


@dataclasses.dataclass(frozen=True, eq=False)
class ChamberStats:
    """Per-chamber measurements, index i-1 for chamber i."""

    areas: np.ndarray
    perimeters: np.ndarray
    ratios: np.ndarray
    component_counts: np.ndarray
    compactly_contained: np.ndarray

    @property
    def energy(self) -> float:
        return float(self.ratios.sum())


@dataclasses.dataclass(frozen=True, eq=False)
class ClusterResult:
    labeling: Labeling
    stats: ChamberStats
    energy: float
    sweeps: int
    trace: tuple  # energy after each sweep
    restart_index: int


@dataclasses.dataclass(frozen=True)
class CheckResult:
    verdict: str  # "PASS" | "FLAG"
    residual: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    self_cheeger: CheckResult
    volume_bound: CheckResult
    indecomposable_interior: CheckResult
    exterior_component_rule: CheckResult
    disjointness: CheckResult

    def checks(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def all_pass(self) -> bool:
        return all(
            getattr(self, f.name).passed for f in dataclasses.fields(self)
        )


def compute_stats(lab: Labeling, domain: DomainMask) -> ChamberStats:
    N = lab.N
    areas = np.zeros(N)
    perims = np.zeros(N)
    comp_counts = np.zeros(N, np.int64)
    compact = np.zeros(N, bool)
    rim = stencil_adjacent_to_complement(domain)
    for i in range(1, N + 1):
        mask = lab.chamber(i)
        areas[i - 1] = area(mask, lab.spec)
        perims[i - 1] = perimeter(mask, lab.spec)
        comp_counts[i - 1] = len(components(mask))
        compact[i - 1] = not (mask & rim).any()
    ratios = perims / areas
    return ChamberStats(areas, perims, ratios, comp_counts, compact)


# ---------------------------------------------------------------------------
# seeding


def _hex_lattice_centers(extent, side, offset):
    """Centers of a flat-top hexagon lattice covering the extent."""
    x_lo, x_hi, y_lo, y_hi = extent
    dx = 1.5 * side
    dy = math.sqrt(3) * side
    ox, oy = offset
    cols = np.arange(math.floor((x_lo - ox) / dx) - 1, math.ceil((x_hi - ox) / dx) + 2)
    rows = np.arange(math.floor((y_lo - oy) / dy) - 2, math.ceil((y_hi - oy) / dy) + 2)
    centers = []
    for j in cols:
        x = ox + j * dx
        shift = 0.5 * dy if j % 2 else 0.0
        for i in rows:
            centers.append((x, oy + i * dy + shift))
    return np.array(centers)


def _hexagon_pixels_inside(center, side, domain_ok, spec) -> bool:
    """True when the hexagon's rasterization is nonempty and entirely
    within the allowed mask."""
    cx, cy = center
    h = spec.h
    x0, y0 = spec.origin
    half_h = math.sqrt(3) * side / 2
    ix_lo = max(0, math.floor((cx - side - x0) / h))
    ix_hi = min(spec.nx - 1, math.ceil((cx + side - x0) / h))
    iy_lo = max(0, math.floor((cy - half_h - y0) / h))
    iy_hi = min(spec.ny - 1, math.ceil((cy + half_h - y0) / h))
    if ix_lo > ix_hi or iy_lo > iy_hi:
        return False
    xs = x0 + h * np.arange(ix_lo, ix_hi + 1) - cx
    ys = y0 + h * np.arange(iy_lo, iy_hi + 1) - cy
    X, Y = np.meshgrid(xs, ys)
    inside_hex = (np.abs(Y) <= half_h) & (math.sqrt(3) * np.abs(X) + np.abs(Y) <= math.sqrt(3) * side)
    if not inside_hex.any():
        return False
    window = domain_ok[iy_lo : iy_hi + 1, ix_lo : ix_hi + 1]
    return bool(window[inside_hex].all())


def hex_seed_centers(domain: DomainMask, N: int) -> np.ndarray | None:
    """N hexagon centers compactly inside the domain, from a hexagonal
    lattice. The cell area starts at area(domain)/N and shrinks until N
    hexagons fit (at the exact target area they never all fit: N cells
    cannot pack strictly inside an area N times the cell). None when even
    the smallest searched cell fails."""
    spec = domain.spec
    target = area(domain.inside, spec) / N
    eroded = ndimage.binary_erosion(domain.inside, structure=np.ones((3, 3), bool))
    xs_c, ys_c = spec.centers()
    cx0 = float(xs_c[domain.inside].mean())
    cy0 = float(ys_c[domain.inside].mean())
    extent = spec.extent()
    for step in range(24):
        delta = target * 0.85**step
        side = math.sqrt(delta / (1.5 * math.sqrt(3)))
        if side < 3 * spec.h:
            break
        for t in range(5):
            offset = (
                extent[0] + (t / 5) * 1.5 * side,
                extent[2] + ((2 * t) % 5 / 5) * math.sqrt(3) * side,
            )
            cand = _hex_lattice_centers(extent, side, offset)
            good = [c for c in cand if _hexagon_pixels_inside(c, side, eroded, spec)]
            if len(good) >= N:
                good = np.array(good)
                d2 = (good[:, 0] - cx0) ** 2 + (good[:, 1] - cy0) ** 2
                order = np.lexsort((good[:, 0], good[:, 1], d2))
                return good[order[:N]]
    return None


def _voronoi_labels(domain: DomainMask, centers: np.ndarray) -> np.ndarray:
    X, Y = domain.spec.centers()
    ys, xs = np.nonzero(domain.inside)
    px = X[ys, xs]
    py = Y[ys, xs]
    best = np.zeros(px.size, np.int64)
    best_d2 = np.full(px.size, np.inf)
    for idx, (cx, cy) in enumerate(centers):
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        take = d2 < best_d2
        best[take] = idx
        best_d2[take] = d2[take]
    labels = np.full(domain.inside.shape, OUTSIDE, np.int16)
    labels[ys, xs] = best + 1
    return labels


def seed(domain: DomainMask, cfg: ClusterConfig, restart_index: int = 0) -> Labeling:
    """Initial labeling for one restart.

    Restart 0 under HEX_GRID uses hexagon centers compactly inside the
    domain (falling back to random Voronoi seeds when no hexagonal layout
    fits); all other restarts draw N distinct in-domain pixels uniformly,
    deterministic in (rng_seed, restart_index). Every in-domain pixel gets
    the label of its nearest seed, so E(0) is empty at seed time.
    """
    npix = domain.pixel_count
    if npix < cfg.N:
        raise TooFewPixels(f"domain has {npix} pixels, fewer than N={cfg.N}")
    if cfg.N == 1:
        labels = np.where(domain.inside, np.int16(1), np.int16(OUTSIDE))
        return Labeling(domain.spec, labels, 1)

    centers = None
    if cfg.seed_strategy is SeedStrategy.HEX_GRID and restart_index == 0:
        centers = hex_seed_centers(domain, cfg.N)
    if centers is None:
        rng = np.random.default_rng([cfg.rng_seed, restart_index])
        ys, xs = np.nonzero(domain.inside)
        pick = rng.choice(npix, size=cfg.N, replace=False)
        X, Y = domain.spec.centers()
        centers = np.stack([X[ys[pick], xs[pick]], Y[ys[pick], xs[pick]]], axis=1)
    return Labeling(domain.spec, _voronoi_labels(domain, centers), cfg.N)


# ---------------------------------------------------------------------------
# descent


def sweep(
    lab: Labeling,
    domain: DomainMask,
    tol: SolverTolerances | None = None,
    _cache: dict | None = None,
) -> tuple[Labeling, float]:
    """One round-robin pass of block steps over chambers 1..N.

    Each step solves the Cheeger problem on A_i (chamber i plus unclaimed
    pixels) and accepts the result only if its exact ratio is no worse
    than the current chamber's, so the energy never increases. Pixels the
    new chamber releases fall back to label 0.
    """
    spec = lab.spec
    labels = lab.labels.copy()
    for i in range(1, lab.N + 1):
        A_i = (labels == i) | (labels == 0)
        if _cache is not None and i in _cache and np.array_equal(_cache[i][0], A_i):
            E, new_ratio = _cache[i][1], _cache[i][2]
        else:
            res = cheeger_solve(A_i, spec, tol)
            E, new_ratio = res.set, res.h
            if _cache is not None:
                _cache[i] = (A_i, E, new_ratio)
        if not E.any():
            raise ChamberVanished(f"chamber {i} came back empty")
        old = labels == i
        n_old = int(old.sum())
        if n_old:
            old_ratio = perimeter(old, spec) / area(old, spec)
            if new_ratio > old_ratio:
                continue
        labels[old] = 0
        labels[E] = i

    new_lab = Labeling(spec, labels, lab.N)
    energy = compute_stats(new_lab, domain).energy
    return new_lab, energy


def _descend(
    lab: Labeling, domain: DomainMask, cfg: ClusterConfig, tol: SolverTolerances | None
) -> tuple[Labeling, float, tuple]:
    trace = []
    prev_energy = math.inf
    cache: dict = {}
    for _ in range(cfg.max_sweeps):
        new_lab, energy = sweep(lab, domain, tol, _cache=cache)
        trace.append(energy)
        unchanged = np.array_equal(new_lab.labels, lab.labels)
        lab = new_lab
        if unchanged or prev_energy - energy < cfg.eps_energy:
            break
        prev_energy = energy
    return lab, trace[-1], tuple(trace)


def solve(
    domain: DomainMask,
    cfg: ClusterConfig,
    tol: SolverTolerances | None = None,
    extra_seeds: tuple = (),
) -> ClusterResult:
    """Best partition over cfg.restarts seeded descents (plus optional
    caller-provided warm-start labelings, appended after the configured
    restarts). Ties in energy go to the earliest restart."""
    best = None
    for r in range(cfg.restarts + len(extra_seeds)):
        if r < cfg.restarts:
            lab0 = seed(domain, cfg, r)
        else:
            lab0 = extra_seeds[r - cfg.restarts].copy()
            validate_labeling(lab0, domain)
            if lab0.N != cfg.N:
                raise ValueError("warm-start labeling has the wrong chamber count")
        lab, energy, trace = _descend(lab0, domain, cfg, tol)
        if best is None or energy < best.energy:
            stats = compute_stats(lab, domain)
            best = ClusterResult(lab, stats, stats.energy, len(trace), trace, r)
    return best


# ---------------------------------------------------------------------------
# validation


def _four_adjacent_labels(comp: np.ndarray, labels: np.ndarray) -> set:
    grown = ndimage.binary_dilation(comp, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    ring = grown & ~comp
    vals = np.unique(labels[ring])
    return {int(v) for v in vals if v >= 1}


def validate(
    result: ClusterResult, domain: DomainMask, tol: SolverTolerances | None = None
) -> ValidationReport:
    """Structural checks on a computed cluster. Residuals are exact on the
    discrete functional; verdicts FLAG (never raise) since discrete
    minimizers may break continuum facts within resolution error.

    Checks: each chamber is its own Cheeger set on A_i (relative residual
    vs SELF_CHEEGER_TOL); chamber areas clear pi/energy^2 with
    VOLUME_SLACK; compactly contained chambers are connected; compactly
    contained components of the unclaimed set E(0) border at least three
    chambers; the labeling is a genuine partition.
    """
    lab = result.labeling
    spec = lab.spec
    stats = result.stats

    worst = 0.0
    for i in range(1, lab.N + 1):
        A_i = (lab.labels == i) | (lab.labels == 0)
        res = cheeger_solve(A_i, spec, tol)
        h_i = stats.ratios[i - 1]
        worst = max(worst, abs(h_i - res.h) / h_i)
    self_cheeger = CheckResult(
        "PASS" if worst <= SELF_CHEEGER_TOL else "FLAG",
        worst,
        f"max relative ratio drift across chambers; tolerance {SELF_CHEEGER_TOL:g}",
    )

    floor = math.pi / result.energy**2
    ratio_to_floor = float((stats.areas / floor).min())
    volume_bound = CheckResult(
        "PASS" if ratio_to_floor >= 1 - VOLUME_SLACK else "FLAG",
        ratio_to_floor,
        f"min area over pi/energy^2 = {floor:.3e}; slack {VOLUME_SLACK:.0%}",
    )

    extra = 0
    for i in range(1, lab.N + 1):
        if stats.compactly_contained[i - 1]:
            extra = max(extra, int(stats.component_counts[i - 1]) - 1)
    indecomposable = CheckResult(
        "PASS" if extra == 0 else "FLAG",
        float(extra),
        "extra components among compactly contained chambers",
    )

    rim = stencil_adjacent_to_complement(domain)
    e0 = lab.labels == 0
    violations = 0
    checked = 0
    for comp in components(e0):
        if (comp & rim).any():
            continue
        checked += 1
        if len(_four_adjacent_labels(comp, lab.labels)) < 3:
            violations += 1
    exterior_rule = CheckResult(
        "PASS" if violations == 0 else "FLAG",
        float(violations),
        f"{checked} compactly contained E(0) components checked",
    )

    try:
        validate_labeling(lab, domain)
        disjoint = CheckResult("PASS", 0.0, "one label per pixel, all chambers nonempty")
    except ValueError as err:
        disjoint = CheckResult("FLAG", 1.0, str(err))

    return ValidationReport(self_cheeger, volume_bound, indecomposable, exterior_rule, disjoint)


# ---------------------------------------------------------------------------
# warm starts for nested-N families


def split_largest_chamber(result: ClusterResult, domain: DomainMask) -> Labeling:
    """Labeling with N+1 chambers derived from an N-chamber result by
    cutting its largest chamber in half across the chamber's long axis.
    Used to warm-start the (N+1)-solve so the nested family is visible to
    the solver."""
    lab = result.labeling
    j = int(np.argmax(result.stats.areas)) + 1
    mask = lab.chamber(j)
    ys, xs = np.nonzero(mask)
    pts = np.stack([xs, ys], axis=1).astype(float)
    ctr = pts.mean(axis=0)
    centered = pts - ctr
    # principal axis of the pixel cloud; split by the sign of the projection
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    axis = evecs[:, int(np.argmax(evals))]
    proj = centered @ axis
    side = proj > np.median(proj)
    if not side.any() or side.all():
        side = np.arange(len(pts)) % 2 == 0
    labels = lab.labels.copy()
    labels[ys[side], xs[side]] = lab.N + 1
    return Labeling(lab.spec, labels, lab.N + 1)
