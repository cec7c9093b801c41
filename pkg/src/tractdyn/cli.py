"""Command-line front end: ``tractdyn <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import TractDynError
from .export import json_text, write_json, write_ppm, write_text
from .functions import make_model
from .tract import Window, boundary_curve, default_tract, locate_tract

# flags whose values may start with "-" (negative numbers, comma lists)
_VALUE_FLAGS = {"--window", "--lambda", "--seed", "--R", "--rho", "--r", "--rmin", "--rmax"}


def _join_values(argv: list) -> list:
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and re.match(r"^-[\d.]", argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _res(text: str) -> tuple:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"resolution must look like WxH, got {text!r}")
    w, h = int(m.group(1)), int(m.group(2))
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return w, h


def _extent(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be a,b,c,d numbers, got {text!r}") from None
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("window must be re_min,re_max,im_min,im_max with min < max")
    return vals


def _complex(text: str) -> complex:
    parts = text.split(",")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected re[,im], got {text!r}") from None
    if len(vals) not in (1, 2):
        raise argparse.ArgumentTypeError(f"expected re[,im], got {text!r}")
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _model_selector(args) -> str:
    sel = args.model
    if getattr(args, "lam", None):
        if ":" in sel:
            raise ValueError("give lambda either in --model or with --lambda, not both")
        sel = f"{sel}:lambda={args.lam}"
    return sel


def _window(args, model) -> Window:
    extent = args.window if args.window else model.default_window[:4]
    res = args.res if args.res else tuple(model.default_window[4:])
    return Window(*extent, *res)


def _tract(args, model):
    window = _window(args, model) if (args.window or args.res) else None
    return default_tract(model, args.R, args.seed, window)


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, args, command: str, outputs: list, extra: dict | None = None):
    config = {k: (v if not isinstance(v, complex) else [v.real, v.imag])
              for k, v in sorted(vars(args).items()) if k != "func"}
    data = {"command": command, "config": config, "outputs": sorted(outputs),
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    if extra:
        data.update(extra)
    write_json(out / "manifest.json", data)


def _emit(obj):
    sys.stdout.write(json_text(obj))


def _png(args, fn, *a):
    if args.no_png:
        return None
    from . import plotting

    return getattr(plotting, fn)(*a)


# ---------------------------------------------------------------------------
# subcommands


def cmd_render(args) -> int:
    from .dynamics.render import RenderSpec, preset, render

    if args.preset:
        spec = preset(args.preset)
        changes = {}
        if args.max_iter is not None:
            changes["max_iter"] = args.max_iter
        if args.palette:
            changes["palette"] = args.palette
        if args.res:
            w = spec.window
            changes["window"] = Window(w.re_min, w.re_max, w.im_min, w.im_max, *args.res)
        if changes:
            from dataclasses import replace

            spec = replace(spec, **changes)
    else:
        model = make_model(_model_selector(args))
        spec = RenderSpec(model.label, _window(args, model), args.palette or "fig1",
                          200 if args.max_iter is None else args.max_iter,
                          R=args.R, rho=args.rho, seed=args.seed)
    result = render(spec, workers=args.workers)
    out = _outdir(args)
    write_ppm(out / "image.ppm", result.rgb)
    write_json(out / "image.json", result.sidecar())
    outputs = ["image.ppm", "image.json"]
    if _png(args, "plot_render", result, out / "image.png"):
        outputs.append("image.png")
    _manifest(out, args, "render", outputs)
    _emit({"histogram": result.histogram, "shape": list(result.codes.shape),
           "output": str(out)})
    return 0


def cmd_growth(args) -> int:
    from .growth import (check_a_bound, check_sqrt_growth, growth_profile, scan_exceptional)

    model = make_model(_model_selector(args))
    tract = _tract(args, model)
    profile = growth_profile(tract, args.rmin, args.rmax, log_step=args.log_step,
                             workers=args.workers)
    summary = {"samples": len(profile.samples)}
    with_a = [s for s in profile.samples if s.a is not None]
    if len(with_a) >= 3:
        flagged = scan_exceptional(profile, args.alpha, args.beta)
        frac, bad = check_a_bound(profile, args.epsilon)
        c, holds = check_sqrt_growth(profile)
        summary.update({
            "checkABound": {"epsilon": args.epsilon, "fraction": frac, "violations": bad},
            "checkSqrtGrowth": {"c": c, "holds": holds},
            "scanExceptional": {"alpha": args.alpha, "beta": args.beta, "radii": flagged},
        })
    else:
        summary.update({"checkABound": None, "checkSqrtGrowth": None, "scanExceptional": None})
    out = _outdir(args)
    write_text(out / "profile.csv", profile.to_csv())
    data = profile.to_json()
    data["summary"] = summary
    write_json(out / "profile.json", data)
    outputs = ["profile.csv", "profile.json"]
    if _png(args, "plot_profile", profile, out / "profile.png"):
        outputs.append("profile.png")
    _manifest(out, args, "growth", outputs)
    _emit(summary)
    return 0


def cmd_wv_check(args) -> int:
    from .wvcheck import exceptional_sweep, flagged_log_measure, sweep_to_csv, sweep_to_json, wv_verify

    model = make_model(_model_selector(args))
    tract = _tract(args, model)
    out = _outdir(args)
    if args.r is not None:
        report = wv_verify(tract, args.r, args.tau, args.samples)
        write_json(out / "wv.json", report.to_json())
        _manifest(out, args, "wv-check", ["wv.json"])
        _emit(report.to_json())
        return 0
    if args.rmin is None or args.rmax is None:
        raise ValueError("give --r, or both --rmin and --rmax for a sweep")
    if not 0 < args.rmin < args.rmax:
        raise ValueError("need 0 < rmin < rmax")
    radii = np.geomspace(args.rmin, args.rmax, args.count)
    entries = exceptional_sweep(tract, radii, args.tau, args.samples, workers=args.workers)
    write_text(out / "sweep.csv", sweep_to_csv(entries))
    summary = {"flaggedLogMeasure": flagged_log_measure(entries),
               "flagged": [e.r for e in entries if e.flagged], "count": len(entries)}
    write_json(out / "sweep.json", {"summary": summary, "entries": sweep_to_json(entries)})
    outputs = ["sweep.csv", "sweep.json"]
    if _png(args, "plot_sweep", entries, out / "sweep.png"):
        outputs.append("sweep.png")
    _manifest(out, args, "wv-check", outputs)
    _emit(summary)
    return 0


def cmd_ode_bound(args) -> int:
    from .odeorder import (monomials_from_json, order_bound, parse_equation,
                           solving_models, verify_against_growth)

    if args.json:
        text = Path(args.json).read_text() if args.json != "-" else sys.stdin.read()
        monomials = monomials_from_json(json.loads(text))
    elif args.equation:
        monomials = parse_equation(args.equation)
    else:
        raise ValueError("give an equation or --json")
    result = order_bound(monomials)
    data = result.to_json()
    if args.verify_growth:
        models = solving_models(monomials)
        if not models:
            data["growthFit"] = None
        else:
            from .growth import growth_profile

            model = make_model(models[0])
            tract = default_tract(model)
            profile = growth_profile(tract, args.rmin or 10.0, args.rmax or 100.0)
            fit = verify_against_growth(result, profile)
            data["growthFit"] = dict(fit.to_json(), model=model.id)
    if args.output:
        out = _outdir(args)
        write_json(out / "ode.json", data)
        _manifest(out, args, "ode-bound", ["ode.json"])
    _emit(data)
    return 0


def cmd_outer_seq(args) -> int:
    from .dynamics.outer import PolarRegion, outer_sequence

    model = make_model(_model_selector(args))
    tract = _tract(args, model)
    region = PolarRegion.disc(args.radius)
    steps = outer_sequence(model, tract, region, args.steps)
    data = {"radius": args.radius, "requested": args.steps, "completed": len(steps),
            "steps": [s.to_json() for s in steps]}
    out = _outdir(args)
    write_json(out / "outer.json", data)
    outputs = ["outer.json"]
    if steps and _png(args, "plot_outer", steps, out / "outer.png"):
        outputs.append("outer.png")
    _manifest(out, args, "outer-seq", outputs)
    _emit(data)
    return 0


def cmd_tract_info(args) -> int:
    model = make_model(_model_selector(args))
    window = _window(args, model)
    R = model.default_R if args.R is None else args.R
    seed = model.tract_seed if args.seed is None else args.seed
    tract = locate_tract(model, R, seed, window)
    out = _outdir(args)
    tract.component_raster().write_pgm(out / "tract.pgm")
    data = tract.summary()
    write_json(out / "tract.json", data)
    outputs = ["tract.pgm", "tract.json"]
    if _png(args, "plot_tract", tract, out / "tract.png", boundary_curve(tract)):
        outputs.append("tract.png")
    _manifest(out, args, "tract-info", outputs)
    _emit(data)
    return 0


# ---------------------------------------------------------------------------


def _common(p, model=True, R=True, output=True):
    if model:
        p.add_argument("--model", default="exp", help="exp, expexp, example1[:lambda=..], gamma, "
                                                      "gamma_shift1, gamma_cos")
        p.add_argument("--lambda", dest="lam", default=None, help="example1 parameter re[,im]")
    if R:
        p.add_argument("--R", type=_positive, default=None, help="tract threshold")
        p.add_argument("--seed", type=_complex, default=None, help="point in the tract, re[,im]")
        p.add_argument("--window", type=_extent, default=None, help="re_min,re_max,im_min,im_max")
        p.add_argument("--res", type=_res, default=None, help="raster size WxH")
    if output:
        p.add_argument("-o", "--output", default="out", help="output directory")
        p.add_argument("--no-png", action="store_true", help="skip matplotlib figures")


def build_parser() -> argparse.ArgumentParser:
    workers = os.cpu_count() or 1
    parser = argparse.ArgumentParser(prog="tractdyn", allow_abbrev=False,
                                     description="Tracts, growth and dynamics of "
                                                 "transcendental functions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", allow_abbrev=False, help="classification image")
    _common(p)
    p.add_argument("--preset", default=None, help="fig1-left|fig1-mid|fig1-right|"
                                                  "fig2-left|fig2-mid|fig2-right")
    p.add_argument("--palette", choices=("fig1", "fig2"), default=None)
    p.add_argument("--rho", type=_positive, default=None, help="fast-escape radius")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--workers", type=int, default=workers)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("growth", allow_abbrev=False, help="B(r), a(r) profile")
    _common(p)
    p.add_argument("--rmin", type=_positive, required=True)
    p.add_argument("--rmax", type=_positive, required=True)
    p.add_argument("--log-step", type=_positive, default=0.02)
    p.add_argument("--epsilon", type=_positive, default=0.1)
    p.add_argument("--alpha", type=_positive, default=0.5)
    p.add_argument("--beta", type=_positive, default=0.75)
    p.add_argument("--workers", type=int, default=workers)
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("wv-check", allow_abbrev=False, help="local power-map check")
    _common(p)
    p.add_argument("--r", type=_positive, default=None, help="single radius")
    p.add_argument("--rmin", type=_positive, default=None)
    p.add_argument("--rmax", type=_positive, default=None)
    p.add_argument("--count", type=int, default=40, help="sweep radii")
    p.add_argument("--tau", type=float, default=0.75)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_wv_check)

    p = sub.add_parser("ode-bound", allow_abbrev=False, help="order lower bound for an ODE")
    p.add_argument("equation", nargs="?", default=None)
    p.add_argument("--json", default=None, help="file with a monomial list, or - for stdin")
    p.add_argument("--verify-growth", action="store_true",
                   help="fit a(r) of a registered solution against the kappa candidates")
    p.add_argument("--rmin", type=_positive, default=None)
    p.add_argument("--rmax", type=_positive, default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_ode_bound)

    p = sub.add_parser("outer-seq", allow_abbrev=False, help="outer sequence from a disc")
    _common(p)
    p.add_argument("--radius", type=_positive, default=10.0, help="radius of G_0")
    p.add_argument("--steps", type=int, default=2)
    p.set_defaults(func=cmd_outer_seq)

    p = sub.add_parser("tract-info", allow_abbrev=False, help="locate and describe a tract")
    _common(p)
    p.set_defaults(func=cmd_tract_info)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_join_values(argv))
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    try:
        return args.func(args)
    except TractDynError as exc:
        print(f"tractdyn: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"tractdyn: error: {_one_line(exc)}", file=sys.stderr)
        return 2


def _one_line(exc) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
