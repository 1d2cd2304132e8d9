"""Serialization: domain description files, JSON reports, CSV, and SVG.

Domain files are JSON with a `grid` block (nx, ny, h, origin) and a CSG
`shape` tree of disk / rect / regular_polygon primitives combined by
union, intersection, and difference (first part minus the rest).

Reports are emitted with sorted keys, two-space indent, and no
timestamps, so identical runs produce byte-identical files. Labelings are
stored as run-length-encoded rows ([label, count] pairs, -1 for pixels
outside the domain): human-diffable and resolution-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .grid import (
    Disk,
    DomainMask,
    GridSpec,
    Labeling,
    Rect,
    RegularPolygon,
    ShapeExpr,
    rasterize,
)

_PALETTE = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2",
    "#edc948", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
]


def load_domain(path: str) -> dict:
    """Read a domain JSON file; parse errors carry the offending line."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}:{e.lineno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise ValueError(f"{path}:1: domain file must be a JSON object")
    return obj


def shape_from_dict(node) -> ShapeExpr:
    if not isinstance(node, dict) or "type" not in node:
        raise ValueError("shape node must be an object with a 'type' field")
    t = node["type"]
    try:
        if t == "disk":
            return Disk(tuple(node["center"]), float(node["radius"]))
        if t == "rect":
            return Rect(tuple(node["corner"]), float(node["width"]), float(node["height"]))
        if t == "regular_polygon":
            return RegularPolygon(
                int(node["sides"]),
                tuple(node["center"]),
                float(node["circumradius"]),
                float(node.get("rotation", 0.0)),
            )
        if t in ("union", "intersection", "difference"):
            parts = [shape_from_dict(p) for p in node["parts"]]
            if not parts:
                raise ValueError(f"'{t}' needs at least one part")
            out = parts[0]
            for p in parts[1:]:
                if t == "union":
                    out = out | p
                elif t == "intersection":
                    out = out & p
                else:
                    out = out - p
            return out
    except (KeyError, TypeError) as e:
        raise ValueError(f"bad '{t}' shape node: {e}") from None
    raise ValueError(f"unknown shape type: {t!r}")


def domain_from_dict(obj: dict) -> tuple[GridSpec, ShapeExpr, DomainMask]:
    try:
        g = obj["grid"]
        spec = GridSpec(
            int(g["nx"]), int(g["ny"]), float(g["h"]),
            tuple(g.get("origin", (0.0, 0.0))),
        )
        shape = shape_from_dict(obj["shape"])
    except KeyError as e:
        raise ValueError(f"domain file missing field: {e}") from None
    return spec, shape, rasterize(shape, spec)


def rle_rows(labels: np.ndarray) -> list:
    """Row-wise run-length encoding: each row a list of [label, count]."""
    rows = []
    for row in np.asarray(labels):
        breaks = np.nonzero(np.diff(row))[0] + 1
        ends = np.concatenate([breaks, [len(row)]])
        prev = 0
        runs = []
        for end in ends:
            runs.append([int(row[prev]), int(end - prev)])
            prev = int(end)
        rows.append(runs)
    return rows


def labels_from_rle(rows: list, shape: tuple[int, int]) -> np.ndarray:
    ny, nx = shape
    if len(rows) != ny:
        raise ValueError(f"labeling has {len(rows)} rows, grid expects {ny}")
    out = np.empty((ny, nx), np.int16)
    for j, runs in enumerate(rows):
        vals = np.repeat(
            [int(v) for v, _ in runs], [int(c) for _, c in runs]
        ).astype(np.int16)
        if len(vals) != nx:
            raise ValueError(f"labeling row {j} sums to {len(vals)}, expects {nx}")
        out[j] = vals
    return out


def jsonable(x):
    """Coerce nested numpy scalars/arrays into plain Python types."""
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


def dump_report(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_report(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}:{e.lineno}: {e.msg}") from None


def csv_text(reports, slope: float | None) -> str:
    """Bound-sweep table: N, lower_direct, lower_recursive, upper_hex,
    H_hat; the slope column is filled on the last row only."""
    lines = ["N,lower_direct,lower_recursive,upper_hex,H_hat,slope"]

    def cell(v):
        return "" if v is None else repr(float(v))

    for i, r in enumerate(reports):
        s = cell(slope) if i == len(reports) - 1 else ""
        lines.append(
            f"{r.N},{cell(r.lower_direct)},{cell(r.lower_recursive)},"
            f"{cell(r.upper_hex)},{cell(r.H_hat)},{s}"
        )
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def svg_text(spec: GridSpec, labeling: Labeling) -> str:
    """Vector rendering of the labeling with the structure overlay:
    chamber pixels as row-run rectangles, interface polylines colored by
    label pair, fitted circles/lines dashed, triple points as dots."""
    from .structure import (
        FIT_LENGTH_PIXELS,
        MIN_FIT_VERTICES,
        extract_interfaces,
        fit_arc,
        triple_points,
    )

    h = spec.h
    x_lo, x_hi, y_lo, y_hi = spec.extent()
    x0, y0 = spec.origin

    def sy(y: float) -> float:
        # SVG y axis points down; mirror about the extent midline
        return y_lo + y_hi - y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(x_lo)} {_fmt(y_lo)}'
        f' {_fmt(x_hi - x_lo)} {_fmt(y_hi - y_lo)}">',
        f'<rect x="{_fmt(x_lo)}" y="{_fmt(y_lo)}" width="{_fmt(x_hi - x_lo)}"'
        f' height="{_fmt(y_hi - y_lo)}" fill="#ffffff"/>',
    ]

    for j, runs in enumerate(rle_rows(labeling.labels)):
        x_run = 0
        for label, count in runs:
            if label > 0:
                color = _PALETTE[(label - 1) % len(_PALETTE)]
                parts.append(
                    f'<rect x="{_fmt(x0 + (x_run - 0.5) * h)}"'
                    f' y="{_fmt(sy(y0 + (j + 0.5) * h))}"'
                    f' width="{_fmt(count * h)}" height="{_fmt(h)}"'
                    f' fill="{color}" fill-opacity="0.55"/>'
                )
            elif label == 0:
                parts.append(
                    f'<rect x="{_fmt(x0 + (x_run - 0.5) * h)}"'
                    f' y="{_fmt(sy(y0 + (j + 0.5) * h))}"'
                    f' width="{_fmt(count * h)}" height="{_fmt(h)}"'
                    f' fill="#e8e8e8"/>'
                )
            x_run += count

    interfaces = extract_interfaces(labeling)
    for p in interfaces:
        color = _PALETTE[(p.pair[0] * 7 + p.pair[1] * 3) % len(_PALETTE)]
        pts = " ".join(f"{_fmt(vx)},{_fmt(sy(vy))}" for vx, vy in p.vertices)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}"'
            f' stroke-width="{_fmt(0.6 * h)}"/>'
        )
        if p.length >= FIT_LENGTH_PIXELS * h and len(p.vertices) >= MIN_FIT_VERTICES:
            fit = fit_arc(p)
            if fit.kind == "CIRCLE":
                cx, cy = fit.center
                parts.append(
                    f'<circle cx="{_fmt(cx)}" cy="{_fmt(sy(cy))}" r="{_fmt(fit.radius)}"'
                    f' fill="none" stroke="#222222" stroke-width="{_fmt(0.3 * h)}"'
                    f' stroke-dasharray="{_fmt(2 * h)} {_fmt(2 * h)}"/>'
                )
            else:
                px, py = fit.point
                dx, dy = fit.direction
                half = 0.6 * p.length
                parts.append(
                    f'<line x1="{_fmt(px - half * dx)}" y1="{_fmt(sy(py - half * dy))}"'
                    f' x2="{_fmt(px + half * dx)}" y2="{_fmt(sy(py + half * dy))}"'
                    f' stroke="#222222" stroke-width="{_fmt(0.3 * h)}"'
                    f' stroke-dasharray="{_fmt(2 * h)} {_fmt(2 * h)}"/>'
                )

    for tp in triple_points(labeling):
        tx, ty = tp.position
        parts.append(
            f'<circle cx="{_fmt(tx)}" cy="{_fmt(sy(ty))}" r="{_fmt(1.5 * h)}"'
            f' fill="#000000"/>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
