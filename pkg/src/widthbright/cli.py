"""Command-line surface: gen, analyze, verify-theorem, export.

Exit codes: 0 success, 2 input error, 3 infeasible or non-convex where
convexity is required, 4 internal numerical failure. Reproducibility is
part of the contract: identical config and seed give byte-identical
outputs, so every float is printed with 17 significant digits and all
randomness flows through the --seed flag.

WIDTHBRIGHT_THREADS caps BLAS parallelism; it must act before numpy loads,
so the numerical modules are imported lazily inside main().
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

_DEFAULT_TOLS = {
    "quadrature": 1e-8,   # grid integration sanity
    "psd": 1e-9,          # convexity certificate eigenvalue tolerance
    "oracle": 0.01,       # formula vs mesh-shadow relative agreement
}


class InputError(ValueError):
    """Bad file, malformed JSON, or inconsistent flags (exit 2)."""


@dataclass
class RunConfig:
    command: str
    body_path: str
    n_theta: int = 32
    n_phi: int = 64
    lmax: int = 12
    seed: int = 0
    out: str = None
    tolerances: dict = field(default_factory=lambda: dict(_DEFAULT_TOLS))
    max_iter: int = 500
    degrees: tuple = (3, 5)
    start_scale: float = 0.5

    def __post_init__(self):
        if self.n_phi % 2 != 0:
            raise InputError("grid n_phi must be even")
        if self.n_theta < self.lmax + 1:
            raise InputError("grid too coarse for lmax: need n_theta >= lmax + 1")


def _apply_thread_cap():
    cap = os.environ.get("WIDTHBRIGHT_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _parse_grid(text):
    try:
        t, p = text.split(",")
        return int(t), int(p)
    except ValueError:
        raise InputError("expected --grid T,P with integers") from None


def _parse_tols(pairs):
    tols = dict(_DEFAULT_TOLS)
    for pair in pairs or ():
        key, _, val = pair.partition("=")
        if key not in tols or not val:
            raise InputError("unknown tolerance %r (known: %s)"
                             % (key, ", ".join(sorted(tols))))
        try:
            tols[key] = float(val)
        except ValueError:
            raise InputError("tolerance %r is not a number" % pair) from None
    return tols


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="widthbright",
        description="Support-function toolkit: width, brightness, and "
                    "constant-width rigidity checks for convex bodies.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, body_help):
        p.add_argument("body", help=body_help)
        p.add_argument("--grid", default="32,64", metavar="T,P",
                       help="n_theta,n_phi quadrature grid (default 32,64)")
        p.add_argument("--lmax", type=int, default=12)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path")
        p.add_argument("--tol", action="append", metavar="KEY=VAL",
                       help="override a tolerance (%s)"
                            % ", ".join(sorted(_DEFAULT_TOLS)))

    common(sub.add_parser("gen", help="resolve a recipe JSON into a body spec"),
           "recipe JSON file")
    common(sub.add_parser("analyze", help="width/convexity/brightness report"),
           "body spec JSON file")
    pv = sub.add_parser("verify-theorem",
                        help="run the rigidity probe against a gauge body")
    common(pv, "gauge body spec JSON file (even, certified convex)")
    pv.add_argument("--max-iter", type=int, default=500)
    pv.add_argument("--degrees", default="3,5",
                    help="odd variable degrees, comma separated (default 3,5)")
    pv.add_argument("--start-scale", type=float, default=0.5,
                    help="seeded start size as a fraction of the convexity bound")
    common(sub.add_parser("export", help="write the boundary mesh as OBJ"),
           "body spec JSON file")
    return ap


def _config(args):
    n_theta, n_phi = _parse_grid(args.grid)
    cfg = RunConfig(
        command=args.command,
        body_path=args.body,
        n_theta=n_theta,
        n_phi=n_phi,
        lmax=args.lmax,
        seed=args.seed,
        out=args.out,
        tolerances=_parse_tols(args.tol),
    )
    if args.command == "verify-theorem":
        cfg.max_iter = args.max_iter
        try:
            cfg.degrees = tuple(int(d) for d in args.degrees.split(","))
        except ValueError:
            raise InputError("--degrees must be comma-separated integers") from None
        cfg.start_scale = args.start_scale
    return cfg


def _load_json(path):
    if not os.path.exists(path):
        raise InputError("no such file: %s" % path)
    with open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise InputError("%s: not valid JSON (%s)" % (path, exc)) from None


def _out_path(cfg, suffix):
    if cfg.out:
        return cfg.out
    stem, _ = os.path.splitext(cfg.body_path)
    return stem + suffix


def _write_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_gen(cfg):
    from . import body as bodymod
    from . import generators

    grid = _grid(cfg)
    recipe = _load_json(cfg.body_path)
    try:
        resolved = generators.resolve_recipe(recipe, grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    h = resolved.resolved
    cert = bodymod.certify_convex(h, grid, cfg.tolerances["psd"])
    spec = bodymod.body_to_spec(h)
    spec["normalization"] = ("orthonormal real spherical harmonics, "
                             "Y_00 = 1/(2 sqrt(pi)); a ball of radius r has "
                             "single l=0 coefficient 2 sqrt(pi) r")
    spec["recipe_kind"] = resolved.kind
    spec["recipe_params"] = _jsonable(resolved.params)
    spec["certificate"] = _cert_dict(cert)
    out = _out_path(cfg, ".body.json")
    _write_json(spec, out)
    print("wrote %s (min eigenvalue %.6g)" % (out, cert.min_eigenvalue))
    return EXIT_OK


def _jsonable(params):
    out = {}
    for k, v in params.items():
        out[k] = float(v) if hasattr(v, "__float__") and not isinstance(v, bool) else v
    return out


def _cert_dict(cert):
    return {
        "min_eigenvalue": float(cert.min_eigenvalue),
        "det_min": float(cert.det_min),
        "node_of_min": int(cert.node_of_min),
        "convex": bool(cert.convex),
        "tol_psd": float(cert.tol_psd),
    }


def _grid(cfg):
    from .sphere import make_grid
    return make_grid(cfg.n_theta, cfg.n_phi)


def _load_body(cfg):
    from .body import body_from_spec
    try:
        return body_from_spec(_load_json(cfg.body_path))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_analyze(cfg):
    import numpy as np
    from .body import certify_convex, width, volume
    from .brightness import brightness_profile, profile_to_csv
    from .lab import parity_decomposition_check, parity_report_to_json

    grid = _grid(cfg)
    h = _load_body(cfg)
    cert = certify_convex(h, grid, cfg.tolerances["psd"])
    w = width(h, grid)
    wn = grid.weights
    report = {
        "label": h.label,
        "grid": [cfg.n_theta, cfg.n_phi],
        "lmax": int(h.lmax),
        "certificate": _cert_dict(cert),
        "width": {
            "min": float(w.min()),
            "max": float(w.max()),
            "variation": float(w.max() - w.min()),
        },
    }
    if cert.convex:
        profile = brightness_profile(h, grid, tol_psd=cfg.tolerances["psd"])
        mean = float((wn @ profile.areas) / wn.sum())
        var = float((wn @ (profile.areas - mean) ** 2) / wn.sum())
        report["volume"] = volume(h, grid, cfg.tolerances["psd"])
        report["brightness"] = {
            "min": float(profile.areas.min()),
            "max": float(profile.areas.max()),
            "mean": mean,
            "variance": var,
            "variation": float(profile.areas.max() - profile.areas.min()),
        }
        parity = parity_report_to_json(parity_decomposition_check(h, grid))
        parity.pop("identity_residual")
        report["parity"] = parity
        csv_path = _out_path(cfg, "_brightness.csv")
        if cfg.out:
            stem, ext = os.path.splitext(cfg.out)
            csv_path = stem + "_brightness.csv"
        profile_to_csv(profile, csv_path)
        report["brightness_csv"] = os.path.basename(csv_path)
    else:
        report["note"] = "body is not certified convex; brightness/volume skipped"
    if not np.all(np.isfinite(w)):
        raise ArithmeticError("non-finite width values")
    _write_json(report, _out_path(cfg, ".report.json"))
    print("wrote %s" % _out_path(cfg, ".report.json"))
    return EXIT_OK


def cmd_verify_theorem(cfg):
    from .body import SupportFunction
    from .generators import random_odd, constant_width_body
    from .lab import minimize_brightness_variance, trace_to_csv

    grid = _grid(cfg)
    gauge = _load_body(cfg)
    # seeded start, scaled into the convexity region like the generators do
    start = random_odd(cfg.seed, degrees=cfg.degrees, scale=1.0)
    try:
        recipe = constant_width_body(gauge, start, float("inf"), grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    eps = recipe.params["eps"] * cfg.start_scale
    init = SupportFunction(start.coeffs * eps, start.lmax, label=start.label)
    trace = minimize_brightness_variance(gauge, init, grid,
                                         degrees=cfg.degrees,
                                         max_iter=cfg.max_iter)
    out = _out_path(cfg, ".trace.csv")
    trace_to_csv(trace, out)
    if trace.terminal_status == "infeasible":
        print("infeasible start (gauge margin too small)")
        return EXIT_INFEASIBLE
    if trace.terminal_status == "converged_to_gauge":
        print("RIGIDITY-CONSISTENT")
    else:
        print("RIGIDITY-UNRESOLVED (%s)" % trace.terminal_status)
    print("wrote %s (%d accepted states)" % (out, len(trace.iterations)))
    return EXIT_OK


def cmd_export(cfg):
    from .boundary import inverse_gauss, export_mesh, export_obj

    grid = _grid(cfg)
    h = _load_body(cfg)
    field = inverse_gauss(h, grid)
    mesh = export_mesh(field, grid, cfg.tolerances["psd"])
    out = _out_path(cfg, ".obj")
    export_obj(mesh, out)
    print("wrote %s (%d vertices, %d triangles)"
          % (out, len(mesh.vertices), len(mesh.triangles)))
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "analyze": cmd_analyze,
    "verify-theorem": cmd_verify_theorem,
    "export": cmd_export,
}


def main(argv=None):
    _apply_thread_cap()
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the message; normalize the code
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = _config(args)
        return _COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        from .body import NotConvexError
        if isinstance(exc, NotConvexError):
            print("infeasible: %s" % exc, file=sys.stderr)
            return EXIT_INFEASIBLE
        if isinstance(exc, (ArithmeticError, ValueError)):
            print("numerical failure: %s" % exc, file=sys.stderr)
            return EXIT_NUMERICAL
        raise


if __name__ == "__main__":
    sys.exit(main())
