"""End-to-end acceptance gate.

Each test covers one release criterion and prints a single
``ACCEPTANCE <k> <name>: PASS/FAIL (...)`` line before asserting, so a
full run yields a ten-line scorecard. Expensive solves are shared
through module-scoped fixtures; total runtime is dominated by the
h = 1/256 solves and the N in {2, 4, 8, 16} partition bracket.
"""

import json
import math
import time

import numpy as np
import pytest

from ncheeger import (
    OUTSIDE,
    ClusterConfig,
    ClusterResult,
    Disk,
    FlowNetwork,
    GridSpec,
    Labeling,
    Rect,
    RegularPolygon,
    SolverTolerances,
    area,
    bound_report,
    bracket_sweep,
    cheeger_eig_check,
    cheeger_solve,
    compute_stats,
    inner_cheeger_convex,
    lambda1,
    min_cut,
    partition_chain_check,
    rasterize,
    solve,
    structure_report,
    validate,
)
from ncheeger.cli import main

H_SQUARE = inner_cheeger_convex(Rect((0.0, 0.0), 1.0, 1.0))  # 2 + sqrt(pi)
H_DISK = inner_cheeger_convex(Disk((0.0, 0.0), 1.0))  # 2
H_HEX_REF = 3.6335  # unit-area regular hexagon
HEX_R = math.sqrt(2.0 / (3.0 * math.sqrt(3.0)))  # circumradius at unit area


def _emit(capsys, num, name, ok, detail):
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared domains and solves


def _square_domain(h, size=1.0):
    n = round(size / h) + 14
    spec = GridSpec(n, n, h)
    return rasterize(Rect((6.5 * h, 6.5 * h), size, size), spec)


def _rect_domain(h, w, ht):
    spec = GridSpec(round(w / h) + 14, round(ht / h) + 14, h)
    return rasterize(Rect((6.5 * h, 6.5 * h), w, ht), spec)


def _disk_domain(h, r=1.0):
    n = round(2 * r / h) + 16
    spec = GridSpec(n, n, h)
    return rasterize(Disk((r + 6.5 * h, r + 6.5 * h), r), spec)


def _hex_domain(h):
    n = round(2 * HEX_R / h) + 16
    spec = GridSpec(n, n, h)
    return rasterize(RegularPolygon(6, (HEX_R + 6.5 * h, HEX_R + 6.5 * h), HEX_R), spec)


def _two_disk_domain(h, r=1.0, gap=0.5):
    cy = r + 6.5 * h
    c1 = (r + 6.5 * h, cy)
    c2 = (3 * r + gap + 6.5 * h, cy)
    spec = GridSpec(round((4 * r + gap) / h) + 16, round(2 * r / h) + 16, h)
    return rasterize(Disk(c1, r) | Disk(c2, r), spec), c1, c2


def _timed_single(dom):
    t0 = time.perf_counter()
    res = cheeger_solve(dom.inside, dom.spec)
    return dom, res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def square256():
    return _timed_single(_square_domain(1 / 256))


@pytest.fixture(scope="module")
def disk256():
    return _timed_single(_disk_domain(1 / 256))


@pytest.fixture(scope="module")
def hex256():
    return _timed_single(_hex_domain(1 / 256))


@pytest.fixture(scope="module")
def two_disk128():
    dom, c1, c2 = _two_disk_domain(1 / 128)
    res = solve(dom, ClusterConfig(N=2, restarts=4))
    return dom, c1, c2, res


@pytest.fixture(scope="module")
def rect128():
    # 1.0 x 0.5 rectangle; the mirror-symmetric halves labeling joins the
    # restart pool so the straight-interface optimum is reachable
    h = 1 / 128
    dom = _rect_domain(h, 1.0, 0.5)
    X, _ = dom.spec.centers()
    mid = 6.5 * h + 0.5
    labels = np.where(~dom.inside, OUTSIDE, np.where(X < mid, 1, 2)).astype(np.int16)
    halves = Labeling(dom.spec, labels, 2)
    res = solve(dom, ClusterConfig(N=2, restarts=4), extra_seeds=(halves,))
    return dom, res


@pytest.fixture(scope="module")
def brackets256():
    dom = _square_domain(1 / 256)
    table = {}
    for N in (2, 4, 8, 16):
        res = solve(dom, ClusterConfig(N=N, restarts=8))
        table[N] = (res, bound_report(N, dom, res.energy))
    return dom, table


@pytest.fixture(scope="module")
def sweep128():
    dom = _square_domain(1 / 128)
    reports, slope_tail = bracket_sweep(dom, range(8, 25), ClusterConfig(N=8, restarts=2))
    return reports, slope_tail


# ---------------------------------------------------------------------------
# criteria


def test_criterion_01_min_cut_exact(capsys):
    # 4x4 grid networks, integer caps 0..10, against all 2^16 cuts
    rng = np.random.default_rng(12345)
    nx = ny = 4
    n = nx * ny
    us, vs = [], []
    for y in range(ny):
        for x in range(nx):
            i = y * nx + x
            if x + 1 < nx:
                us.append(i)
                vs.append(i + 1)
            if y + 1 < ny:
                us.append(i)
                vs.append(i + nx)
    u = np.array(us)
    v = np.array(vs)
    masks = np.arange(1 << n, dtype=np.uint32)
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)
    cross = (member[:, u] != member[:, v]).astype(np.float64)
    worst = 0.0
    for _ in range(200):
        cap = rng.integers(0, 11, u.size).astype(np.float64)
        cap_src = rng.integers(0, 11, n).astype(np.float64)
        cap_snk = rng.integers(0, 11, n).astype(np.float64)
        val = (1.0 - member) @ cap_src + member @ cap_snk + cross @ cap
        best = float(val.min())
        argmin = masks[val == val.min()]
        union = int(np.bitwise_or.reduce(argmin))
        assert val[union] == best  # minimizers are closed under union
        maximal = ((union >> np.arange(n)) & 1).astype(bool)
        res = min_cut(FlowNetwork(n=n, u=u, v=v, cap=cap, cap_src=cap_src, cap_snk=cap_snk))
        assert res.value == pytest.approx(best, abs=1e-9)
        assert np.array_equal(res.source_side, maximal)
        worst = max(worst, abs(res.value - best))
    _emit(
        capsys, 1, "min cut exact vs enumeration", True,
        f"200 networks, max value error {worst:.1e}, maximal sides exact",
    )


def test_criterion_02_single_set_oracles(capsys, square256, disk256, hex256):
    rows = []
    ok = True
    for name, (dom, res, dt), lo, hi in [
        ("disk", disk256, 1.97, 2.03),
        ("square", square256, H_SQUARE * 0.985, H_SQUARE * 1.015),
        ("hexagon", hex256, H_HEX_REF * 0.98, H_HEX_REF * 1.02),
    ]:
        good = lo <= res.h <= hi and dt < 30.0
        ok = ok and good
        rows.append(f"{name} h={res.h:.4f} in [{lo:.4f}, {hi:.4f}], {dt:.1f}s")
    _emit(capsys, 2, "single-set oracles at h=1/256", ok, "; ".join(rows))


def test_criterion_03_ratio_iteration_properties(capsys, square256, disk256, hex256):
    tol = SolverTolerances()
    rows = []
    ok = True
    for name, (dom, res, _) in [
        ("square", square256), ("disk", disk256), ("hexagon", hex256),
    ]:
        lams = [t[0] for t in res.trace]
        decreasing = all(a > b for a, b in zip(lams, lams[1:]))
        eps = tol.resolve(area(dom.inside, dom.spec))
        final_min = res.trace[-1][1]
        in_band = -eps <= final_min <= 0.0
        again = cheeger_solve(res.set, dom.spec)
        drift = abs(again.h - res.h) / res.h
        good = decreasing and in_band and drift <= 1e-4
        ok = ok and good
        rows.append(
            f"{name} decreasing={decreasing} final_min={final_min:.1e}"
            f" (eps={eps:.1e}) resolve_drift={drift:.1e}"
        )
    _emit(capsys, 3, "ratio iteration descent and self-consistency", ok, "; ".join(rows))


def test_criterion_04_two_disk_decoupling(capsys, two_disk128):
    dom, c1, c2, res = two_disk128
    X, Y = dom.spec.centers()
    in1 = (X - c1[0]) ** 2 + (Y - c1[1]) ** 2 <= 1.0 + 1e-9
    in2 = (X - c2[0]) ** 2 + (Y - c2[1]) ** 2 <= 1.0 + 1e-9
    band = 3.92 <= res.energy <= 4.08
    one_comp = all(int(c) == 1 for c in res.stats.component_counts)
    confined = all(
        bool((res.labeling.chamber(i) <= in1).all() or (res.labeling.chamber(i) <= in2).all())
        for i in (1, 2)
    )
    ok = band and one_comp and confined
    _emit(
        capsys, 4, "two-disk decoupling oracle", ok,
        f"H2={res.energy:.4f} in [3.92, 4.08], components={[int(c) for c in res.stats.component_counts]},"
        f" chambers confined={confined}",
    )


def test_criterion_05_square_bracket(capsys, brackets256):
    dom, table = brackets256
    rows = []
    ok = True
    for N, (res, rep) in sorted(table.items()):
        lower_ok = rep.lower <= res.energy * 1.02
        upper_ok = rep.upper_hex is None or res.energy <= rep.upper_hex * 1.05
        good = (
            lower_ok and upper_ok
            and rep.verdict_lower == "PASS"
            and rep.verdict_upper in ("PASS", "ABSENT")
        )
        ok = ok and good
        up = f"{rep.upper_hex:.2f}" if rep.upper_hex is not None else "absent"
        rows.append(f"N={N}: {rep.lower:.2f} <= {res.energy:.2f} <= {up}")
    _emit(capsys, 5, "bracket on the unit square", ok, "; ".join(rows))


def test_criterion_06_growth_exponent(capsys, sweep128):
    reports, _ = sweep128
    ns = np.array([r.N for r in reports], float)
    hs = np.array([r.H_hat for r in reports], float)
    slope = float(np.polyfit(np.log(ns), np.log(hs), 1)[0])
    ok = 1.3 <= slope <= 1.7
    _emit(
        capsys, 6, "log-log growth exponent", ok,
        f"slope over N=8..24 = {slope:.3f}, band [1.3, 1.7]",
    )


def test_criterion_07_interface_structure(capsys, square256, rect128, two_disk128, brackets256):
    # corner arcs of the single Cheeger set of the square curve like its ratio
    dom, res, _ = square256
    labels = np.where(res.set, 1, np.where(dom.inside, 0, OUTSIDE)).astype(np.int16)
    lab = Labeling(dom.spec, labels, 1)
    stats = compute_stats(lab, dom)
    single = ClusterResult(lab, stats, stats.energy, 0, (stats.energy,), 0)
    rep_square = structure_report(single)
    arcs = [r for r in rep_square.records if r.fit is not None and r.fit.kind == "CIRCLE"]
    arc_errs = [abs(abs(r.fit.signed_curvature) - H_SQUARE) / H_SQUARE for r in arcs]
    arcs_ok = bool(arcs) and max(arc_errs) <= 0.10

    # symmetric halves of a 2:1 rectangle meet along a straight interface
    rdom, rres = rect128
    h_rect = inner_cheeger_convex(Rect((0.0, 0.0), 1.0, 0.5))
    rep_rect = structure_report(rres)
    mid = [r for r in rep_rect.records if set(r.pair) == {1, 2} and r.fit is not None]
    mid_kappa = max((abs(r.fit.signed_curvature) for r in mid), default=math.inf)
    line_ok = bool(mid) and mid_kappa < 0.1 * h_rect

    counts = {
        "square N=1": (rep_square.triple_count, 1),
        "rect N=2": (rep_rect.triple_count, 2),
        "two-disk N=2": (structure_report(two_disk128[3]).triple_count, 2),
    }
    for N, (cres, _) in sorted(brackets256[1].items()):
        counts[f"square N={N}"] = (structure_report(cres).triple_count, N)
    finite_ok = all(c <= 12 * N + 12 for c, N in counts.values())

    ok = arcs_ok and line_ok and finite_ok
    _emit(
        capsys, 7, "interface structure", ok,
        f"{len(arcs)} corner arcs, max curvature error {max(arc_errs, default=math.inf):.3f}"
        f" (<=0.10); split interface |kappa|={mid_kappa:.3f} < {0.1 * h_rect:.3f};"
        f" triples={ {k: v[0] for k, v in counts.items()} }",
    )


def test_criterion_08_validation_suite(capsys, two_disk128, rect128, brackets256):
    clusters = {
        "two-disk N=2": (two_disk128[0], two_disk128[3]),
        "rect N=2": rect128,
    }
    for N, (cres, _) in sorted(brackets256[1].items()):
        clusters[f"square N={N}"] = (brackets256[0], cres)

    interior_required = {"two-disk N=2", "square N=2", "square N=4"}
    rows = []
    ok = True
    for name, (dom, cres) in clusters.items():
        rep = validate(cres, dom)
        floor = math.pi / cres.energy**2
        raw = bool((cres.stats.areas >= floor * 0.95).all())
        good = rep.disjointness.passed and rep.volume_bound.passed and raw
        if name in interior_required:
            good = good and rep.indecomposable_interior.passed
        ok = ok and good
        rows.append(
            f"{name}: disjoint={rep.disjointness.verdict}"
            f" volume={rep.volume_bound.verdict}"
            f" interior={rep.indecomposable_interior.verdict}"
        )
    _emit(capsys, 8, "validation suite", ok, "; ".join(rows))


def test_criterion_09_spectral(capsys, two_disk128, rect128, brackets256):
    sq = _square_domain(1 / 128)
    dk = _disk_domain(1 / 128)
    e_sq = lambda1(sq.inside, sq.spec)
    e_dk = lambda1(dk.inside, dk.spec)
    sq_ok = 2 * math.pi**2 * 0.995 <= e_sq.lambda1 <= 2 * math.pi**2 * 1.005
    dk_ok = 5.7832 * 0.99 <= e_dk.lambda1 <= 5.7832 * 1.01

    eig_checks = [cheeger_eig_check(sq.inside, sq.spec), cheeger_eig_check(dk.inside, dk.spec)]
    eig_ok = all(c.passed for c in eig_checks)

    chains = [partition_chain_check(two_disk128[3]), partition_chain_check(rect128[1])]
    chains += [partition_chain_check(cres) for cres, _ in brackets256[1].values()]
    chain_ok = all(c.verdict == "PASS" for c in chains)

    ok = sq_ok and dk_ok and eig_ok and chain_ok
    _emit(
        capsys, 9, "spectral cross-checks", ok,
        f"lambda1(square)={e_sq.lambda1:.4f} vs {2 * math.pi**2:.4f},"
        f" lambda1(disk)={e_dk.lambda1:.4f} vs 5.7832;"
        f" eig checks {[c.verdict for c in eig_checks]},"
        f" chains {[c.verdict for c in chains]}",
    )


def test_criterion_10_seeded_runs_byte_identical(capsys, tmp_path):
    h = 1 / 32
    n = round(1 / h) + 14
    domain = {
        "grid": {"nx": n, "ny": n, "h": h, "origin": [0.0, 0.0]},
        "shape": {"type": "rect", "corner": [6.5 * h, 6.5 * h], "width": 1.0, "height": 1.0},
    }
    dpath = tmp_path / "square.json"
    dpath.write_text(json.dumps(domain))
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / f"report_{tag}.json"
        rc = main(
            ["cluster", "--domain", str(dpath), "--n", "3", "--restarts", "2",
             "--seed", "7", "--out", str(out)]
        )
        assert rc in (0, 1)  # 0 clean, 1 completed with FLAG verdicts; 2 = no report
        blobs.append(out.read_bytes())
    ok = len(blobs[0]) > 0 and blobs[0] == blobs[1]
    _emit(
        capsys, 10, "seeded determinism", ok,
        f"two cluster --seed 7 runs, {len(blobs[0])} bytes each, identical={blobs[0] == blobs[1]}",
    )
