"""Command line entry point: ``python3 -m bundlelink <command> ...``.

Commands
  check        regularity margins of the self-linking hypotheses
  linking      linking number of two curves through a bundle over the first
  selflink     self-linking number by one or all methods
  paper-table  the published example values, every cell by every method

Exit status: 0 when every requested computation passes its residual and
agreement contracts, 1 when a computation fails or disagrees, 2 on bad
input (malformed curve spec, out-of-range flags).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bundles import (check_sl_conditions, constant_bundle, custom_bundle, detect_k, orthogonal_bundle,
                      osculating_bundle, trivial_bundle)
from .curves import parse_curve_ref, trig_curve
from .errors import BundleLinkError, SpecError
from .linking import MAX_RESIDUAL, gauss_linking_r3, linking_number_integral, linking_number_intersection, projected_bundle
from .selflinking import (orthogonal_developable_intersections, osculating_developable_intersections,
                          sl_integral, sl_limit, sl_orthogonal, sl_osculating)

SCHEMA = "bundlelink.report/1"
METHODS = ("integral", "intersection", "limit")

# (preset, A, bundle, published value)
PAPER_CELLS = (
    ("example1", 1.0, "osculating", 1),
    ("example1", 1.0, "orthogonal", 1),
    ("example1", 1.3, "osculating", 1),
    ("example1", 1.3, "orthogonal", 0),
    ("example2", 1.6, "osculating", 3),
    ("example2", 1.6, "orthogonal", -1),
)


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    bundle: str | None = None
    methods: tuple = ("integral",)
    grid: int = 512
    seeds: int = 128
    tol: float = MAX_RESIDUAL
    k: int | None = None
    frame: str | None = None
    fmt: str = "text"

    def __post_init__(self):
        if self.grid < 64 or self.grid > 4096 or self.grid & (self.grid - 1):
            raise SpecError(f"--grid must be a power of two in [64, 4096], got {self.grid}")
        if self.seeds < 16 or self.seeds > 2048:
            raise SpecError(f"--seeds must lie in [16, 2048], got {self.seeds}")
        if not 0 < self.tol < 0.5:
            raise SpecError(f"--tol must lie in (0, 0.5), got {self.tol}")

    @property
    def limit_grid(self) -> int:
        return min(2 * self.grid, 4096)


# ---------------------------------------------------------------- helpers

def _load_frame(path: str):
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None
    if not isinstance(spec, dict):
        raise SpecError(f"{path}: frame spec must be a JSON object")
    if "vectors" in spec:
        return constant_bundle(np.asarray(spec["vectors"], dtype=float))
    fields = spec.get("fields")
    if not isinstance(fields, list) or len(fields) != 3:
        raise SpecError(f"{path}: frame spec needs 'fields' (three coordinate lists) or 'vectors'")
    return custom_bundle([trig_curve(f) for f in fields])


def _bundle(kind: str | None, curve, cfg: RunConfig):
    if kind is None:
        kind = "trivial" if curve.dim == 3 else "projected"
    if kind == "osculating":
        return osculating_bundle(curve)
    if kind == "orthogonal":
        return orthogonal_bundle(curve)
    if kind == "trivial":
        if curve.dim != 3:
            raise SpecError("the trivial bundle needs a curve in R^3")
        return trivial_bundle()
    if kind == "projected":
        return projected_bundle(curve.dim)
    if kind == "custom":
        if not cfg.frame:
            raise SpecError("--bundle custom needs --frame FILE")
        return _load_frame(cfg.frame)
    raise SpecError(f"unknown bundle {kind!r}")


def _error_dict(exc: Exception) -> dict:
    d = {"error": type(exc).__name__, "message": str(exc)}
    for key in ("t", "s", "margin", "location", "jacobian_det", "raw", "residual", "raws"):
        v = getattr(exc, key, None)
        if v is not None:
            d[key] = v if not isinstance(v, dict) else {str(k): x for k, x in v.items()}
    return d


def _settings(cfg: RunConfig) -> dict:
    return {"grid": cfg.grid, "limit_grid": cfg.limit_grid, "seeds": cfg.seeds, "tol": cfg.tol,
            "k": cfg.k, "bundle": cfg.bundle, "methods": list(cfg.methods)}


def _selflink_methods(curve, kind, bundle, k, cfg: RunConfig):
    """Run every requested method; returns (per-method entries, intersection table)."""
    out, table = {}, []
    for m in cfg.methods:
        t0 = time.perf_counter()
        try:
            if m == "integral":
                if kind == "orthogonal":
                    r = sl_orthogonal(curve, grid=cfg.grid, max_residual=cfg.tol)
                elif kind == "osculating":
                    r = sl_osculating(curve, grid=cfg.grid, max_residual=cfg.tol)
                else:
                    r = sl_integral(curve, bundle, k, grid=cfg.grid, max_residual=cfg.tol)
            elif m == "intersection":
                if kind == "orthogonal":
                    recs, r = osculating_developable_intersections(curve, seeds=cfg.seeds, max_residual=cfg.tol)
                elif kind == "osculating":
                    recs, r = orthogonal_developable_intersections(curve, seeds=cfg.seeds, max_residual=cfg.tol)
                else:
                    raise SpecError("the intersection method needs the osculating or orthogonal bundle")
                table = [rec.to_dict() for rec in recs]
            elif m == "limit":
                r = sl_limit(curve, bundle, k, grid=cfg.limit_grid, max_residual=cfg.tol)
            else:
                raise SpecError(f"unknown method {m!r}")
            entry = r.to_dict()
            entry["ok"] = True
        except SpecError:
            raise
        except (BundleLinkError, FloatingPointError) as exc:
            entry = {"ok": False, "value": None, **_error_dict(exc)}
        entry["seconds"] = round(time.perf_counter() - t0, 3)
        out[m] = entry
    return out, table


def _agreement(entries: dict) -> bool:
    vals = {e["value"] for e in entries.values()}
    return all(e["ok"] for e in entries.values()) and len(vals) == 1


# ---------------------------------------------------------------- commands

def cmd_check(cfg: RunConfig) -> tuple[dict, int]:
    curve = parse_curve_ref(cfg.inputs[0])
    kind = cfg.bundle or "orthogonal"
    bundle = _bundle(kind, curve, cfg)
    try:
        k = cfg.k if cfg.k is not None else (curve.dim - 2 if kind == "orthogonal" else
                                             1 if kind == "osculating" else detect_k(curve, bundle))
        rep = check_sl_conditions(curve, bundle, k, grid=cfg.grid)
        body = {"curve": cfg.inputs[0], "bundle": kind, "report": rep.to_dict()}
        ok = rep.passed
    except BundleLinkError as exc:
        body = {"curve": cfg.inputs[0], "bundle": kind, **_error_dict(exc)}
        ok = False
    return body, 0 if ok else 1


def cmd_linking(cfg: RunConfig) -> tuple[dict, int]:
    if len(cfg.inputs) != 2:
        raise SpecError("linking needs two curves")
    alpha, beta = (parse_curve_ref(x) for x in cfg.inputs)
    if alpha.dim != beta.dim:
        raise SpecError(f"curves live in different dimensions ({alpha.dim} vs {beta.dim})")
    bundle = _bundle(cfg.bundle, alpha, cfg)
    entries = {}
    for m in cfg.methods:
        try:
            if m == "integral":
                r = linking_number_integral(alpha, beta, bundle, cfg.grid, max_residual=cfg.tol)
            elif m == "intersection":
                mu = np.eye(alpha.dim)[2] if bundle.kind == "constant" else None
                r = linking_number_intersection(alpha, beta, bundle, mu=mu, seeds=cfg.seeds,
                                                max_residual=cfg.tol)
            elif m == "gauss":
                if alpha.dim != 3:
                    raise SpecError("the Gauss integral needs curves in R^3")
                r = gauss_linking_r3(alpha, beta, cfg.grid, max_residual=cfg.tol)
            else:
                raise SpecError(f"method {m!r} does not apply to linking")
            entries[m] = {**r.to_dict(), "ok": True}
        except SpecError:
            raise
        except (BundleLinkError, FloatingPointError) as exc:
            entries[m] = {"ok": False, "value": None, **_error_dict(exc)}
    ok = _agreement(entries)
    value = next(iter(entries.values()))["value"] if ok else None
    return {"curves": cfg.inputs, "bundle": bundle.kind, "value": value, "agree": ok,
            "methods": entries}, 0 if ok else 1


def cmd_selflink(cfg: RunConfig) -> tuple[dict, int]:
    curve = parse_curve_ref(cfg.inputs[0])
    kind = cfg.bundle or "orthogonal"
    bundle = _bundle(kind, curve, cfg)
    k = cfg.k
    if k is None:
        k = curve.dim - 2 if kind == "orthogonal" else 1 if kind == "osculating" else detect_k(curve, bundle)
    entries, table = _selflink_methods(curve, kind, bundle, k, cfg)
    ok = _agreement(entries)
    value = next(iter(entries.values()))["value"] if ok else None
    return {"curve": cfg.inputs[0], "bundle": kind, "k": k, "value": value, "agree": ok,
            "methods": entries, "intersections": table}, 0 if ok else 1


def cmd_paper_table(cfg: RunConfig) -> tuple[dict, int]:
    rows = []
    for name, A, kind, published in PAPER_CELLS:
        ref = f"preset:{name}?A={A:g}"
        curve = parse_curve_ref(ref)
        bundle = osculating_bundle(curve) if kind == "osculating" else orthogonal_bundle(curve)
        k = 1 if kind == "osculating" else curve.dim - 2
        entries, table = _selflink_methods(curve, kind, bundle, k, cfg)
        match = all(e["ok"] and e["value"] == published for e in entries.values())
        rows.append({"curve": ref, "bundle": kind, "published": published, "match": match,
                     "values": {m: e["value"] for m, e in entries.items()},
                     "raw": {m: e.get("raw") for m, e in entries.items()},
                     "errors": {m: e["message"] for m, e in entries.items() if not e["ok"]},
                     "roots": len(table) if "intersection" in entries else None})
    passed = sum(r["match"] for r in rows)
    return {"rows": rows, "passed": passed, "total": len(rows)}, 0 if passed == len(rows) else 1


COMMANDS = {"check": cmd_check, "linking": cmd_linking, "selflink": cmd_selflink,
            "paper-table": cmd_paper_table}


# ---------------------------------------------------------------- rendering

def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def render_text(report: dict) -> str:
    cmd, body = report["command"], report["result"]
    lines = [f"bundlelink {report['version']}  {cmd}  settings: "
             + ", ".join(f"{k}={_fmt(v)}" for k, v in report["settings"].items())]
    if cmd == "check":
        if "report" in body:
            r = body["report"]
            lines.append(f"{body['curve']}  bundle={body['bundle']}  k={r['k']}  "
                         f"{'PASS' if r['pass'] else 'FAIL'}")
            t, s = r["condition1_location"]
            lines.append(f"  condition 1 margin {r['condition1_margin']:.4g} at (t={t:.6g}, s={s:.6g}); "
                         f"diagonal band margin {r['band_margin']:.4g}")
            for key, v in r["condition2_margins"].items():
                lines.append(f"  condition 2({key}) {v:.4g} at t={r['condition2_locations'][key]:.6g}")
            lines += [f"  failure: {f}" for f in r["failures"]]
        else:
            lines.append(f"{body['curve']}  FAIL  {body['error']}: {body['message']}")
    elif cmd in ("linking", "selflink"):
        head = body.get("curve") or " / ".join(body["curves"])
        lines.append(f"{head}  bundle={body['bundle']}  value={_fmt(body['value'])}  "
                     f"{'agree' if body['agree'] else 'FAIL'}")
        for m, e in body["methods"].items():
            if e["ok"]:
                lines.append(f"  {m:<12} value={e['value']:>3d}  raw={e['raw']:.10f}  residual={e['residual']:.2e}")
            else:
                lines.append(f"  {m:<12} {e['error']}: {e['message']}")
        if body.get("intersections"):
            lines.append("  intersections:")
            lines.append(f"    {'t':>10} {'s':>10}  {'fiber coords':<30} sign index contrib")
            for r in body["intersections"]:
                fc = ", ".join(f"{x:.4f}" for x in r["fiber_coords"])
                lines.append(f"    {r['t']:10.6f} {r['s']:10.6f}  {fc:<30} {r['sign_factor']:>4d} "
                             f"{r['index']:>5d} {r['contribution']:>+6.1f}")
    elif cmd == "paper-table":
        ms = report["settings"]["methods"]
        lines.append(f"{'curve':<24} {'bundle':<11} {'paper':>5} " + " ".join(f"{m:>12}" for m in ms) + "  match")
        for r in body["rows"]:
            lines.append(f"{r['curve']:<24} {r['bundle']:<11} {r['published']:>5} "
                         + " ".join(f"{_fmt(r['values'][m]):>12}" for m in ms)
                         + f"  {'ok' if r['match'] else 'MISMATCH'}")
            for m, msg in r["errors"].items():
                lines.append(f"    {m}: {msg}")
        lines.append(f"{body['passed']}/{body['total']} cells match")
    return "\n".join(lines)


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bundlelink", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, bundles, methods, default_methods):
        sp.add_argument("--bundle", choices=bundles)
        sp.add_argument("--method", choices=methods + ("all",), default=default_methods)
        sp.add_argument("--grid", type=int, default=512, help="quadrature / sample grid (power of two, 64..4096)")
        sp.add_argument("--seeds", type=int, default=128, help="root-search seed grid per axis")
        sp.add_argument("--tol", type=float, default=MAX_RESIDUAL, help="largest residual accepted for rounding")
        sp.add_argument("--k", type=int, help="push-off derivative order (default by bundle)")
        sp.add_argument("--frame", help="JSON frame spec for --bundle custom")
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("check", help="regularity report")
    sp.add_argument("curve")
    common(sp, ("orthogonal", "osculating", "custom"), METHODS, "integral")
    sp = sub.add_parser("linking", help="linking number of two curves")
    sp.add_argument("curves", nargs=2)
    common(sp, ("trivial", "projected", "osculating", "orthogonal", "custom"),
           ("integral", "intersection", "gauss"), "integral")
    sp = sub.add_parser("selflink", help="self-linking number")
    sp.add_argument("curve")
    common(sp, ("orthogonal", "osculating", "custom"), METHODS, "integral")
    sp = sub.add_parser("paper-table", help="reproduce the published example values")
    common(sp, ("orthogonal", "osculating"), METHODS, "all")
    return p


def config_from_args(args) -> RunConfig:
    if args.command == "linking":
        all_methods = ("integral", "intersection") + (("gauss",) if args.bundle in (None, "trivial") else ())
    else:
        all_methods = METHODS
    methods = all_methods if args.method == "all" else (args.method,)
    inputs = list(getattr(args, "curves", None) or ([args.curve] if hasattr(args, "curve") else []))
    return RunConfig(args.command, inputs, args.bundle, tuple(methods), args.grid, args.seeds,
                     args.tol, args.k, args.frame, args.format)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        body, status = COMMANDS[cfg.command](cfg)
    except SpecError as exc:
        err = {"schema": SCHEMA, "version": __version__, "command": args.command, "ok": False,
               **_error_dict(exc)}
        if args.format == "json":
            print(json.dumps(err, indent=2))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    report = {"schema": SCHEMA, "version": __version__, "command": cfg.command,
              "settings": _settings(cfg), "ok": status == 0, "result": body}
    from .linking import _jsonable
    report = _jsonable(report)
    print(json.dumps(report, indent=2) if cfg.fmt == "json" else render_text(report))
    return status


if __name__ == "__main__":
    sys.exit(main())
