"""Command-line entry point.

Commands: single, cluster, bounds, verify, spectral, sweep, render.
Exit codes: 0 on clean completion, 1 when the run completed but some
verdict is FLAG, 2 on errors (bad files, bad arguments, solver failures).
All outputs are assembled in memory and written at the end, so a failed
run leaves no partial artifacts; identical inputs and seeds produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from . import io as _io
from .bounds import bound_report, bracket_sweep
from .cluster import (
    ClusterConfig,
    ClusterResult,
    compute_stats,
    solve,
    validate,
)
from .errors import NCheegerError
from .grid import OUTSIDE, Labeling, area, perimeter, validate_labeling
from .single import SolverTolerances, cheeger_solve
from .spectral import cheeger_eig_check, lambda1, partition_chain_check
from .structure import structure_report


def _parse_n_list(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        ns = list(range(int(a), int(b) + 1))
    elif "," in text:
        ns = [int(t) for t in text.split(",")]
    else:
        ns = [int(text)]
    if not ns or any(n < 1 for n in ns):
        raise ValueError(f"--n must list integers >= 1, got {text!r}")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"--n must be ascending, got {text!r}")
    return ns


def _check_out_writable(path: str | None) -> None:
    if path is None:
        return
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d) or not os.access(d, os.W_OK):
        raise ValueError(f"output directory not writable: {d}")


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _tolerances(args) -> SolverTolerances | None:
    if getattr(args, "tol_dink", None) is not None:
        return SolverTolerances(eps_dink=args.tol_dink)
    return None


def _provenance(spec, args, **extra) -> dict:
    p = {
        "grid": {
            "nx": spec.nx,
            "ny": spec.ny,
            "h": spec.h,
            "origin": list(spec.origin),
        },
        "tol_dink": getattr(args, "tol_dink", None),
        "version": __version__,
    }
    p.update(extra)
    return p


def _labeling_dict(labeling: Labeling) -> dict:
    return {"N": labeling.N, "rle_rows": _io.rle_rows(labeling.labels)}


def _stats_dict(stats) -> list[dict]:
    return [
        {
            "label": i + 1,
            "area": stats.areas[i],
            "perimeter": stats.perimeters[i],
            "ratio": stats.ratios[i],
            "components": stats.component_counts[i],
            "compactly_contained": stats.compactly_contained[i],
        }
        for i in range(len(stats.areas))
    ]


def _validation_dict(rep) -> dict:
    return {"all_pass": rep.all_pass, "checks": rep.checks()}


def _fit_dict(fit) -> dict | None:
    if fit is None:
        return None
    return {
        "kind": fit.kind,
        "signed_curvature": fit.signed_curvature,
        "rms_residual": fit.rms_residual,
        "center": None if fit.center is None else list(fit.center),
        "radius": fit.radius,
        "point": None if fit.point is None else list(fit.point),
        "direction": None if fit.direction is None else list(fit.direction),
    }


def _structure_dict(rep) -> dict:
    return {
        "verdict": rep.verdict,
        "triple_count": rep.triple_count,
        "triples": [
            {"position": list(t.position), "labels": list(t.labels)}
            for t in rep.triples
        ],
        "interfaces": [
            {
                "pair": list(r.pair),
                "length": r.length,
                "closed": r.closed,
                "expected_curvature": r.expected,
                "rel_err": r.rel_err,
                "verdict": r.verdict,
                "fit": _fit_dict(r.fit),
            }
            for r in rep.records
        ],
    }


def _bounds_dict(rep) -> dict:
    return {
        "N": rep.N,
        "lower_direct": rep.lower_direct,
        "lower_recursive": rep.lower_recursive,
        "lower": rep.lower,
        "upper_hex": rep.upper_hex,
        "H_hat": rep.H_hat,
        "verdict_lower": rep.verdict_lower,
        "verdict_upper": rep.verdict_upper,
    }


def _collect_verdicts(obj) -> list[str]:
    out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k.startswith("verdict") and isinstance(v, str):
                out.append(v)
            else:
                out.extend(_collect_verdicts(v))
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            out.extend(_collect_verdicts(v))
    return out


def _exit_status(report: dict) -> int:
    return 1 if "FLAG" in _collect_verdicts(_io.jsonable(report)) else 0


def _cmd_single(args) -> int:
    _check_out_writable(args.out)
    obj = _io.load_domain(args.domain)
    spec, _, dom = _io.domain_from_dict(obj)
    res = cheeger_solve(dom.inside, spec, _tolerances(args))
    labels = np.where(res.set, 1, np.where(dom.inside, 0, OUTSIDE)).astype(np.int16)
    labeling = Labeling(spec, labels, 1)
    report = {
        "command": "single",
        "domain": obj,
        "provenance": _provenance(spec, args),
        "single": {
            "h": res.h,
            "iterations": res.iterations,
            "trace": list(res.trace),
            "set_area": area(res.set, spec),
            "set_perimeter": perimeter(res.set, spec),
            "labeling": _labeling_dict(labeling),
        },
    }
    _emit(_io.dump_report(report), args.out)
    return _exit_status(report)


def _cluster_config(args, N: int) -> ClusterConfig:
    kw = {"N": N, "restarts": args.restarts, "rng_seed": args.seed}
    if args.tol_energy is not None:
        kw["eps_energy"] = args.tol_energy
    return ClusterConfig(**kw)


def _cmd_cluster(args) -> int:
    _check_out_writable(args.out)
    obj = _io.load_domain(args.domain)
    spec, _, dom = _io.domain_from_dict(obj)
    (n,) = _parse_n_list(args.n)
    cfg = _cluster_config(args, n)
    tol = _tolerances(args)
    res = solve(dom, cfg, tol)
    val = validate(res, dom, tol)
    struct = structure_report(res)
    brep = bound_report(n, dom, res.energy)
    report = {
        "command": "cluster",
        "domain": obj,
        "provenance": _provenance(
            spec,
            args,
            rng_seed=cfg.rng_seed,
            restarts=cfg.restarts,
            tol_energy=cfg.eps_energy,
        ),
        "cluster": {
            "N": n,
            "energy": res.energy,
            "sweeps": res.sweeps,
            "restart_index": res.restart_index,
            "energy_trace": list(res.trace),
            "chambers": _stats_dict(res.stats),
            "labeling": _labeling_dict(res.labeling),
        },
        "validation": _validation_dict(val),
        "structure": _structure_dict(struct),
        "bounds": _bounds_dict(brep),
    }
    _emit(_io.dump_report(report), args.out)
    return _exit_status(report)


def _cmd_bounds(args) -> int:
    _check_out_writable(args.out)
    _check_out_writable(args.csv)
    obj = _io.load_domain(args.domain)
    spec, _, dom = _io.domain_from_dict(obj)
    ns = _parse_n_list(args.n)
    reports = [bound_report(n, dom, None) for n in ns]
    report = {
        "command": "bounds",
        "domain": obj,
        "provenance": _provenance(spec, args),
        "bounds": {"reports": [_bounds_dict(r) for r in reports], "slope": None},
    }
    _emit(_io.dump_report(report), args.out)
    if args.csv:
        _emit(_io.csv_text(reports, None), args.csv)
    return _exit_status(report)


def _cmd_sweep(args) -> int:
    _check_out_writable(args.out)
    obj = _io.load_domain(args.domain)
    spec, _, dom = _io.domain_from_dict(obj)
    ns = _parse_n_list(args.n)
    cfg = _cluster_config(args, ns[0])
    reports, slope = bracket_sweep(dom, ns, cfg, _tolerances(args))
    _emit(_io.csv_text(reports, slope), args.out)
    return 1 if any(
        "FLAG" in (r.verdict_lower, r.verdict_upper) for r in reports
    ) else 0


def _labeling_from_report(rep: dict) -> tuple[dict, Labeling]:
    block = rep.get("cluster") or rep.get("single")
    if block is None or "labeling" not in block:
        raise ValueError("report carries no labeling block")
    spec, _, dom = _io.domain_from_dict(rep["domain"])
    lab = _io.labels_from_rle(block["labeling"]["rle_rows"], spec.shape)
    labeling = Labeling(spec, lab, int(block["labeling"]["N"]))
    validate_labeling(labeling, dom)
    return block, labeling


def _cmd_verify(args) -> int:
    rep = _io.load_report(args.report)
    spec, _, dom = _io.domain_from_dict(rep["domain"])
    block, labeling = _labeling_from_report(rep)
    lines = []
    mismatches = []

    stats = compute_stats(labeling, dom)
    if "cluster" in rep:
        stored = rep["cluster"]["energy"]
        ok = abs(stats.energy - stored) <= 1e-9 * max(1.0, abs(stored))
        lines.append(f"energy: stored={stored!r} recomputed={stats.energy!r}")
        if not ok:
            mismatches.append("energy")
        res = ClusterResult(
            labeling=labeling,
            stats=stats,
            energy=stats.energy,
            sweeps=int(rep["cluster"]["sweeps"]),
            trace=tuple(rep["cluster"]["energy_trace"]),
            restart_index=int(rep["cluster"]["restart_index"]),
        )
        val = validate(res, dom)
        for name, chk in val.checks().items():
            stored_v = rep["validation"]["checks"][name]["verdict"]
            lines.append(f"{name}: {chk['verdict']} (stored {stored_v})")
            if chk["verdict"] != stored_v:
                mismatches.append(name)
        struct = structure_report(res)
        stored_v = rep["structure"]["verdict"]
        lines.append(f"structure: {struct.verdict} (stored {stored_v})")
        if struct.verdict != stored_v:
            mismatches.append("structure")
        if struct.triple_count != rep["structure"]["triple_count"]:
            mismatches.append("triple_count")
        verdicts = [c["verdict"] for c in rep["validation"]["checks"].values()]
        verdicts.append(struct.verdict)
    else:
        chamber = labeling.chamber(1)
        h_new = perimeter(chamber, spec) / area(chamber, spec)
        stored = rep["single"]["h"]
        ok = abs(h_new - stored) <= 1e-9 * max(1.0, abs(stored))
        lines.append(f"h: stored={stored!r} recomputed={h_new!r}")
        if not ok:
            mismatches.append("h")
        verdicts = []

    for line in lines:
        print(line)
    if mismatches:
        print(f"verify: MISMATCH in {', '.join(mismatches)}", file=sys.stderr)
        return 2
    print("verify: report reproduced")
    return 1 if "FLAG" in verdicts else 0


def _cmd_spectral(args) -> int:
    _check_out_writable(args.out)
    if args.report:
        rep = _io.load_report(args.report)
        spec, _, dom = _io.domain_from_dict(rep["domain"])
        block, labeling = _labeling_from_report(rep)
        stats = compute_stats(labeling, dom)
        res = ClusterResult(
            labeling=labeling,
            stats=stats,
            energy=stats.energy,
            sweeps=0,
            trace=(stats.energy,),
            restart_index=0,
        )
        chain = partition_chain_check(res)
        report = {
            "command": "spectral",
            "domain": rep["domain"],
            "provenance": _provenance(spec, args),
            "chain": {
                "lambdas": list(chain.lambdas),
                "lambda_sum": chain.lambda_sum,
                "cheeger_sum": chain.cheeger_sum,
                "jensen_floor": chain.jensen_floor,
                "verdict_eig": chain.verdict_eig,
                "verdict_jensen": chain.verdict_jensen,
                "verdict": chain.verdict,
            },
        }
    else:
        obj = _io.load_domain(args.domain)
        spec, _, dom = _io.domain_from_dict(obj)
        eig = lambda1(dom.inside, spec)
        chk = cheeger_eig_check(dom.inside, spec)
        report = {
            "command": "spectral",
            "domain": obj,
            "provenance": _provenance(spec, args),
            "spectral": {
                "lambda1": eig.lambda1,
                "iterations": eig.iterations,
                "residual": eig.residual,
                "cheeger": chk.h,
                "verdict": chk.verdict,
            },
        }
    _emit(_io.dump_report(report), args.out)
    return _exit_status(report)


def _cmd_render(args) -> int:
    _check_out_writable(args.out)
    rep = _io.load_report(args.report)
    spec, _, _dom = _io.domain_from_dict(rep["domain"])
    _, labeling = _labeling_from_report(rep)
    _emit(_io.svg_text(spec, labeling), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ncheeger",
        description="Cheeger constants and N-clusters on pixel domains",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n=False, solver=False, report_in=False, domain=True):
        if domain:
            sp.add_argument("--domain", required=not report_in, help="domain JSON file")
        if report_in:
            sp.add_argument("--report", required=not domain, help="report JSON file")
        if n:
            sp.add_argument("--n", required=True, help="chamber count: K, A..B, or K1,K2,...")
        if solver:
            sp.add_argument("--restarts", type=int, default=4)
            sp.add_argument("--seed", type=int, default=0, help="rng seed")
            sp.add_argument("--tol-energy", type=float, default=None)
        sp.add_argument("--tol-dink", type=float, default=None)
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    common(sub.add_parser("single", help="Cheeger constant of the whole domain"))
    common(sub.add_parser("cluster", help="solve an N-cluster and validate it"),
           n=True, solver=True)
    sp = sub.add_parser("bounds", help="two-sided brackets without solving")
    common(sp, n=True)
    sp.add_argument("--csv", default=None, help="also write the bounds CSV here")
    common(sub.add_parser("sweep", help="solve a range of N and bracket each"),
           n=True, solver=True)
    sp = sub.add_parser("verify", help="recompute the verdicts stored in a report")
    sp.add_argument("--report", required=True)
    sp = sub.add_parser("spectral", help="Dirichlet eigenvalue checks")
    sp.add_argument("--domain", default=None, help="domain JSON file")
    sp.add_argument("--report", default=None, help="cluster report for the chain check")
    sp.add_argument("--tol-dink", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp = sub.add_parser("render", help="SVG of a report's labeling and interfaces")
    sp.add_argument("--report", required=True)
    sp.add_argument("--out", default=None)
    return p


_DISPATCH = {
    "single": _cmd_single,
    "cluster": _cmd_cluster,
    "bounds": _cmd_bounds,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "spectral": _cmd_spectral,
    "render": _cmd_render,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "spectral" and not (args.domain or args.report):
        print("error: spectral needs --domain or --report", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.command](args)
    except NCheegerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
