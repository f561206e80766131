"""Command-line interface: ``lyadim {systems,les,exact,sweep,verify}``."""

import argparse
import csv
import io
import json
import os
import sys

import jsonschema
import numpy as np

from . import atlas, exact, flow, lyap, verify
from .systems import CATALOG, generalized_lorenz_state_to_gd, gd_to_generalized_lorenz, \
    make_system

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "params": {},
    "seg_len": None,
    "n_factors": 10_000,
    "sweeps": 3,
    "rel_tol": 1e-8,
    "abs_tol": 1e-8,
    "initial_step": 1e-9,
    "transient": 100.0,
    "sample_time": 500.0,
    "sample_every": 0.01,
    "grid": 50,
    "classify": True,
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "system": {"type": "string", "enum": sorted(CATALOG)},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "seed": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "seg_len": {"type": "number", "exclusiveMinimum": 0},
        "n_factors": {"type": "integer", "minimum": 1},
        "sweeps": {"type": "integer", "minimum": 1},
        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "abs_tol": {"type": "number", "exclusiveMinimum": 0},
        "initial_step": {"type": "number", "exclusiveMinimum": 0},
        "transient": {"type": "number", "exclusiveMinimum": 0},
        "sample_time": {"type": "number", "exclusiveMinimum": 0},
        "sample_every": {"type": "number", "exclusiveMinimum": 0},
        "grid": {"type": "integer", "minimum": 1},
        "jobs": {"type": "integer", "minimum": 1},
        "classify": {"type": "boolean"},
        "output": {"type": "string"},
        "csv": {"type": "string"},
        "svg": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


def default_seed(spec):
    if spec.id == "generalized_lorenz":
        return list(verify.GD_SEED)
    if spec.id == "glukhovsky_dolzhansky":
        p = spec.params
        return [float(x) for x in generalized_lorenz_state_to_gd(
            np.array(verify.GD_SEED), p["sigma"], p["R"], p["a0"])]
    if spec.is_map:
        return [0.0] * spec.n
    if spec.id.startswith("shimizu_morioka"):
        return [0.1, 0.0, 0.0]
    return [1.0] * spec.n


# --- parsing helpers ---------------------------------------------------------------

def _parse_params(items):
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise ConfigError(f"parameter {part!r} is not of the form name=value")
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = float(v)
            except ValueError:
                raise ConfigError(f"parameter {k!r} has non-numeric value {v!r}") from None
    return out


def _parse_seed(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"seed {text!r} is not a comma-separated list of numbers") from None


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(k) for k in exc.absolute_path) or "top level"
        raise ConfigError(f"config {path}: {where}: {exc.message}") from None
    return data


_FLAG_KEYS = ("system", "seg_len", "n_factors", "sweeps", "rel_tol", "abs_tol", "initial_step",
              "transient", "sample_time", "sample_every", "grid", "jobs", "output", "csv", "svg")


def resolve_config(args):
    """Merge defaults, the JSON config file and command-line flags (flags win)."""
    cfg = dict(DEFAULTS)
    cfg.update(_load_config(getattr(args, "config", None)))
    cfg["params"] = dict(cfg.get("params", {}))
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["params"].update(_parse_params(getattr(args, "params", None)))
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = _parse_seed(args.seed)
    if getattr(args, "no_classify", False):
        cfg["classify"] = False
    if "jobs" not in cfg:
        env = os.environ.get("LYADIM_JOBS")
        try:
            cfg["jobs"] = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"LYADIM_JOBS={env!r} is not an integer") from None
    if "system" not in cfg:
        raise ConfigError("no system given (use --system or a config file)")
    return cfg


def _build(cfg):
    try:
        spec = make_system(cfg["system"], **cfg["params"])
    except KeyError:
        raise ConfigError(f"unknown system {cfg['system']!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    seed = cfg.get("seed") or default_seed(spec)
    if len(seed) != spec.n:
        raise ConfigError(f"seed must have {spec.n} components")
    try:
        icfg = flow.IntegratorConfig(cfg["rel_tol"], cfg["abs_tol"], cfg["initial_step"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    seg = cfg["seg_len"]
    if spec.is_map:
        seg = 1 if seg is None else seg
        if float(seg) != int(seg) or int(seg) < 1:
            raise ConfigError("map segments must be a whole number of iterations")
        seg = int(seg)
    elif seg is None:
        seg = 0.1
    elif not seg > 0:
        raise ConfigError("seg_len must be > 0")
    return spec, np.array(seed, dtype=float), icfg, seg


def _write(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _g(x):
    return "%.15g" % x


# --- commands ----------------------------------------------------------------------

def cmd_systems(args):
    rows = []
    for sid in sorted(CATALOG):
        e = CATALOG[sid]
        rows.append({"id": sid, "kind": e.kind, "n": e.n, "params": list(e.param_names),
                     "defaults": dict(e.defaults), "description": e.description})
    if args.json:
        sys.stdout.write(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    else:
        for r in rows:
            defaults = ", ".join(f"{k}={_g(v)}" for k, v in r["defaults"].items())
            sys.stdout.write(f"{r['id']:30s} {r['kind']:4s} n={r['n']}  {defaults}\n")
    return EXIT_OK


def les_table(spec, results):
    """CSV text with one row per (horizon, spectrum)."""
    n = spec.n
    units = "1/iteration" if spec.is_map else "1/time"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"LE{i + 1}" for i in range(n)] + ["j", "s", "d", "units"])
    for spectrum in results:
        ky = lyap.kaplan_yorke(spectrum.les)
        w.writerow([_g(spectrum.t)] + [_g(x) for x in spectrum.les]
                   + [ky.j, _g(ky.s), _g(ky.d), units])
    return buf.getvalue()


def cmd_les(args):
    cfg = resolve_config(args)
    spec, seed, icfg, seg = _build(cfg)
    spectrum = lyap.finite_time_les(spec, seed, seg, cfg["n_factors"], cfg["sweeps"], icfg)
    _write(les_table(spec, [spectrum]), cfg.get("output"))
    return EXIT_OK


def exact_report(spec):
    p = spec.params
    sid = spec.id
    if sid == "lorenz":
        return exact.lorenz_exact(p["sigma"], p["r"], p["b"])
    if sid == "generalized_lorenz":
        return exact.gd_exact(p["sigma"], p["r"], p["b"], p["A"])
    if sid == "glukhovsky_dolzhansky":
        g = gd_to_generalized_lorenz(p["sigma"], p["R"], p["a0"])
        rep = exact.gd_exact(g["sigma"], g["r"], g["b"], g["A"])
        rep.params = {**p, **{f"mapped_{k}": v for k, v in g.items()}}
        return rep
    if sid == "yang":
        return exact.yang_exact(p["sigma"], p["r"], p["b"])
    if sid == "tigan":
        return exact.tigan_exact(p["a"], p["c"], p["b"])
    if sid in ("shimizu_morioka", "shimizu_morioka_transformed"):
        return exact.shimizu_morioka_exact(p["alpha"], p["lam"])
    if sid == "henon":
        return exact.henon_exact(p["a"], p["b"])
    raise ConfigError(f"no exact theorem for {sid}")


def cmd_exact(args):
    cfg = resolve_config(args)
    spec, _, _, _ = _build(cfg)
    try:
        rep = exact_report(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n", cfg.get("output"))
    return EXIT_OK


def scatter_svg(points, axes=(0, 2), size=480, margin=40, title=""):
    """A static SVG scatter of two coordinates with autoscaled axes."""
    pts = np.asarray(points, dtype=float)[:, list(axes)]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    inner = size - 2 * margin
    xy = (pts - lo) / span * inner
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>',
           f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" fill="none" '
           f'stroke="black"/>']
    for x, y in xy:
        out.append(f'<circle cx="{margin + x:.2f}" cy="{size - margin - y:.2f}" r="0.8" '
                   f'fill="steelblue"/>')
    labels = [(margin, size - margin + 16, _g(float(lo[0]))),
              (size - margin, size - margin + 16, _g(float(hi[0]))),
              (4, size - margin, _g(float(lo[1]))), (4, margin + 4, _g(float(hi[1])))]
    for x, y, text in labels:
        out.append(f'<text x="{x}" y="{y}" font-size="10" font-family="monospace">{text}</text>')
    out.append(f'<text x="{size / 2:.0f}" y="{size - 8}" font-size="11" text-anchor="middle" '
               f'font-family="monospace">u{axes[0] + 1} vs u{axes[1] + 1} {title}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def cmd_sweep(args):
    cfg = resolve_config(args)
    spec, seed, icfg, seg = _build(cfg)
    every = cfg["sample_every"]
    transient, span = cfg["transient"], cfg["sample_time"]
    if spec.is_map:
        every, transient, span = max(1, int(every)), int(transient), int(span)
    sample = atlas.settle(spec, seed, transient, span, every, icfg)
    if sample.classification.kind == atlas.UNBOUNDED:
        sys.stderr.write(f"error: orbit is unbounded: {sample.classification.reason}\n")
        return EXIT_NUMERIC
    if cfg["classify"] and sample.classification.kind == atlas.PENDING:
        atlas.classify_excitation(spec, sample, cfg=icfg, jobs=cfg["jobs"])
    try:
        pts = atlas.grid_points(sample, cfg["grid"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    best, rows = lyap.sweep_max_dimension(spec, pts, seg, cfg["n_factors"], cfg["sweeps"], icfg,
                                          jobs=cfg["jobs"])
    report = {
        "system": spec.id,
        "params": dict(spec.params),
        "seed": [float(x) for x in seed],
        "horizon": (seg * cfg["n_factors"]),
        "settings": {**{k: cfg[k] for k in ("n_factors", "sweeps", "rel_tol", "abs_tol",
                                            "transient", "sample_time", "sample_every", "grid")},
                     "seg_len": seg},
        "classification": sample.classification.to_dict(),
        "max": best.to_dict(),
        "points": [r.to_dict() for r in rows],
    }
    _write(json.dumps(report, indent=2, sort_keys=True) + "\n", cfg.get("output"))
    if cfg.get("csv"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index"] + [f"u{i + 1}" for i in range(spec.n)]
                   + [f"LE{i + 1}" for i in range(spec.n)] + ["j", "s", "d", "error"])
        for r in rows:
            le = [""] * spec.n if r.les is None else [_g(x) for x in r.les]
            ky = ["", "", ""] if r.ky is None else [r.ky.j, _g(r.ky.s), _g(r.ky.d)]
            w.writerow([r.index] + [_g(x) for x in r.point] + le + ky + [r.error or ""])
        _write(buf.getvalue(), cfg["csv"])
    if cfg.get("svg"):
        axes = (0, 2) if spec.n >= 3 else (0, 1)
        _write(scatter_svg(sample.points, axes, title=spec.id), cfg["svg"])
    return EXIT_OK


def cmd_verify(args):
    results = verify.run_all(fast=args.fast)
    if args.json:
        sys.stdout.write(json.dumps([r.to_dict() for r in results], indent=2) + "\n")
    else:
        for r in results:
            sys.stdout.write(r.line() + "\n")
            for d in r.details:
                sys.stdout.write(f"      {d}\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# --- argument parser -----------------------------------------------------------------

def _run_options(p, sweep=False):
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--system", help="catalog system id")
    p.add_argument("--params", nargs="*", metavar="K=V", help="parameter overrides")
    p.add_argument("--seed", help="initial state, comma-separated")
    p.add_argument("--seg-len", dest="seg_len", type=float)
    p.add_argument("--n-factors", dest="n_factors", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--initial-step", dest="initial_step", type=float)
    p.add_argument("--output", "-o", help="write the main report here instead of stdout")
    if sweep:
        p.add_argument("--transient", type=float)
        p.add_argument("--sample-time", dest="sample_time", type=float)
        p.add_argument("--sample-every", dest="sample_every", type=float)
        p.add_argument("--grid", type=int)
        p.add_argument("--jobs", type=int, help="worker processes (default: $LYADIM_JOBS or 1)")
        p.add_argument("--csv", help="write the per-point table as CSV")
        p.add_argument("--svg", help="write an SVG scatter of the attractor sample")
        p.add_argument("--no-classify", dest="no_classify", action="store_true",
                       help="skip the self-excited / hidden test")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lyadim", description="Finite-time Lyapunov exponents and Lyapunov dimensions.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("systems", help="list catalog systems")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_systems)
    p = sub.add_parser("les", help="finite-time exponents and Kaplan-Yorke dimension (CSV)")
    _run_options(p)
    p.set_defaults(func=cmd_les)
    p = sub.add_parser("exact", help="closed-form dimension report (JSON)")
    _run_options(p)
    p.set_defaults(func=cmd_exact)
    p = sub.add_parser("sweep", help="settle, classify, grid and maximize the dimension")
    _run_options(p, sweep=True)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--fast", action="store_true", help="skip the long Lorenz sweep")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except (flow.IntegrationError, lyap.SingularFactorError, ArithmeticError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
