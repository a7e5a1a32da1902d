"""Command-line interface.

Exit codes: 0 ok, 2 usage, 3 IO, 4 numeric guard.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .algebra import CubicParams, classify_cubic
from .cocycle import lyapunov_batch, reduce_torus
from .deformation import ScanConfig, as_shape, lift, rho_default, sample_deformations, weak_mixing_scan
from .errors import NumericGuard, TilingError, UsageError
from .geometry import check_level, collared_prototiles, realize_patch, render_svg, supertile_in_context, collared_labels
from .models import KENYON_CONVENTIONS, MODEL_NAMES, KenyonModel, kenyon_system, square_system
from .substitution import SubstitutionSystem, expand_supertile, is_primitive, patch_size, pf_data, substitution_matrix

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
SCHEMA_VERSION = 1

MODEL_HELP = {
    "kenyon": "kenyon P Q R: Kenyon tiling for x^3 - p x^2 + q x + r (p, q >= 0, r >= 1)",
    "square": "square: 6x6 square substitution with basis (v01, v2, h)",
}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# model tokens

def load_model(tokens: Sequence[str], convention: str = "tiling"):
    """Returns (SubstitutionSystem, model object or None, spec dict)."""
    if not tokens:
        raise UsageError("missing model")
    head = tokens[0]
    if head == "kenyon":
        if len(tokens) != 4:
            raise UsageError("usage: kenyon P Q R")
        try:
            p, q, r = (int(t) for t in tokens[1:])
        except ValueError as exc:
            raise UsageError(f"kenyon parameters must be integers: {tokens[1:]}") from exc
        model = kenyon_system(CubicParams(p, q, r), convention)
        return model.system, model, {"model": "kenyon", "params": [p, q, r], "convention": convention}
    if head == "square":
        if len(tokens) != 1:
            raise UsageError("square takes no parameters")
        model = square_system()
        return model.system, model, {"model": "square"}
    if len(tokens) == 1 and (head.endswith(".json") or os.path.exists(head)):
        with open(head, encoding="utf-8") as fh:
            system = SubstitutionSystem.loads(fh.read())
        return system, None, {"model": "json", "path": head, "name": system.name}
    raise UsageError(f"unknown model {' '.join(tokens)!r}; expected one of {MODEL_NAMES} or a JSON file")


def parse_vector(text: str, length: Optional[int] = None) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}") from exc
    if length is not None and len(v) != length:
        raise UsageError(f"expected {length} comma-separated values, got {text!r}")
    if not np.isfinite(v).all():
        raise UsageError(f"non-finite value in {text!r}")
    return v


def resolve_tile(system: SubstitutionSystem, token: str) -> int:
    if token in system.labels:
        return system.labels.index(token)
    try:
        j = int(token)
    except ValueError as exc:
        raise UsageError(f"unknown prototile {token!r}; labels are {system.labels}") from exc
    if not 0 <= j < system.m:
        raise UsageError(f"prototile index {j} out of range")
    return j


def deformed_shape(system: SubstitutionSystem, radius: float, seed: int):
    L0 = as_shape(None, system)
    if radius == 0:
        return L0
    return sample_deformations(L0, radius, 1, seed)[0]


# outputs

def manifest(args, spec: dict, seed=None, thresholds=None) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": list(getattr(args, "argv", [])),
        "model": spec,
        "seed": seed,
        "thresholds": thresholds or {},
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_manifest(path: Optional[str], data: dict) -> None:
    if path is None or path == "-":
        return
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def jobs_count(args) -> int:
    j = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    if j < 1:
        raise UsageError("--jobs must be positive")
    return j


# commands

def cmd_models(args) -> int:
    for name in MODEL_NAMES:
        print(MODEL_HELP[name])
    print("FILE.json: any model exported with export-model")
    return EXIT_OK


def classify_report(p: int, q: int, r: int) -> dict:
    cls = classify_cubic(CubicParams(p, q, r))
    wm = cls.weak_mixing
    out = {
        "params": [p, q, r],
        "class": cls.label(),
        "weak_mixing": None if wm is None else bool(wm),
        "real_root": cls.real_root,
        "lambda": None if cls.lam is None else [cls.lam.real, cls.lam.imag],
    }
    if cls.lam is not None and wm is not None:
        system = kenyon_system(cls.params).system
        pf = pf_data(substitution_matrix(system))
        out["pf"] = {
            "value": pf.pf_value,
            "lambda_modulus_squared": abs(cls.lam) ** 2,
            "frequencies": pf.right.tolist(),
            "second_modulus": pf.second_modulus,
        }
    return out


def cmd_classify(args) -> int:
    rep = classify_report(args.p, args.q, args.r)
    if args.json:
        print(json.dumps(rep, indent=1))
        return EXIT_OK
    wm = rep["weak_mixing"]
    if wm is None:
        print(rep["class"])
    else:
        print(f"{rep['class']}; weak mixing: {'YES' if wm else 'NO'}")
    if rep["lambda"] is not None:
        print(f"lambda = {fmt(rep['lambda'][0])} + {fmt(rep['lambda'][1])}i")
    print(f"real root = {fmt(rep['real_root'])}")
    if "pf" in rep:
        pf = rep["pf"]
        print(f"PF eigenvalue = {fmt(pf['value'])} (|lambda|^2 = {fmt(pf['lambda_modulus_squared'])})")
        print("tile frequencies = " + ", ".join(fmt(v) for v in pf["frequencies"]))
        print(f"second modulus = {fmt(pf['second_modulus'])}")
    return EXIT_OK


def _lyapunov_rows(task):
    system, i, Z, N, window = task
    return i, lyapunov_batch(system, Z, N, window)


def cmd_lyapunov(args) -> int:
    system, _, spec = load_model(args.model, args.convention)
    base = np.zeros(system.s)
    if args.z is not None and args.lam is not None:
        raise UsageError("give either --z or --lam")
    if args.z is not None:
        base = reduce_torus(parse_vector(args.z, system.s))
    elif args.lam is not None:
        L = deformed_shape(system, args.radius, args.seed)
        base = lift(L, parse_vector(args.lam, system.d))
    if args.grid is None:
        blocks = [(0, base[None, :])]
    else:
        G = args.grid
        if G < 1 or system.s < 2:
            raise UsageError("--grid needs G >= 1 and s >= 2")
        blocks = []
        for i in range(G):
            Z = np.tile(base, (G, 1))
            Z[:, 0] = i / G
            Z[:, 1] = np.arange(G) / G
            blocks.append((i, Z))
    tasks = [(system, i, Z, args.N, args.window) for i, Z in blocks]
    jobs = min(jobs_count(args), len(tasks))
    # each task is a full grid row, so values do not depend on the worker count
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_lyapunov_rows, tasks))
    else:
        results = [_lyapunov_rows(t) for t in tasks]
    rows = []
    for (i, Z), (_, chi) in zip(blocks, results):
        for jdx, (z, c) in enumerate(zip(Z, chi)):
            rows.append([i, jdx] + [float(v) for v in z] + [float(c)])
    header = ["i", "j"] + [f"z{k + 1}" for k in range(system.s)] + ["chi_plus"]
    write_text(args.out, csv_text(header, rows))
    write_manifest(args.out, manifest(args, spec, args.seed,
                                      {"N": args.N, "window": args.window, "grid": args.grid,
                                       "radius": args.radius}))
    return EXIT_OK


def cmd_veech_scan(args) -> int:
    system, model, spec = load_model(args.model, args.convention)
    fixed = None
    if args.lam:
        fixed = tuple(tuple(parse_vector(t, system.d)) for t in args.lam)
    cfg = ScanConfig(samples=args.samples, lams_per_sample=args.lams, radius=args.radius, N=args.N,
                     tol=args.tol, seed=args.seed, rho=args.rho, k=args.k, fixed_lams=fixed)
    if cfg.samples < 1 or cfg.lams_per_sample < 1:
        raise UsageError("--samples and --lams must be positive")
    if cfg.N < 50:
        raise UsageError("--N must be at least 50")
    rows = weak_mixing_scan(system, None, cfg, jobs=jobs_count(args))
    header = ["sample", "lam_x", "lam_y", "verdict", "escape_fraction", "min_tail_epsilon"]
    write_text(args.out, csv_text(header, rows))
    candidates = sum(1 for r in rows if r[3] == "CandidateEigenvalue")
    summary = f"rows: {len(rows)}; CandidateEigenvalue: {candidates}"
    if isinstance(model, KenyonModel) and model.cubic.weak_mixing is not None:
        summary += f"; undeformed weak mixing: {'YES' if model.cubic.weak_mixing else 'NO'}"
    print(summary, file=sys.stderr)
    rho = rho_default(system) if cfg.rho is None else cfg.rho
    write_manifest(args.out, manifest(args, spec, cfg.seed,
                                      {"samples": cfg.samples, "lams": cfg.lams_per_sample, "radius": cfg.radius,
                                       "N": cfg.N, "tol": cfg.tol, "rho": rho, "k": cfg.k,
                                       "fixed_lams": None if fixed is None else [list(v) for v in fixed]}))
    return EXIT_OK


def cmd_render(args) -> int:
    system, _, spec = load_model(args.model, args.convention)
    check_level(args.level)
    j = resolve_tile(system, args.root)
    L = deformed_shape(system, args.radius, args.seed)
    out = args.out or f"{system.name.replace(' ', '')}-L{args.level}.svg"
    thresholds = {"level": args.level, "root": system.labels[j], "radius": args.radius}
    if args.collar:
        atlas = collared_prototiles(system, L, level=args.level, depth=args.depth)
        print(f"collared classes: {atlas.count} (depth {args.depth}, saturated at level {atlas.level})")
        context, mask = supertile_in_context(system, L, j, args.level, args.depth)
        labels = collared_labels(context, atlas)[mask]
        realized = context.subset(mask)
        thresholds.update(depth=args.depth, classes=atlas.count, saturation_level=atlas.level)
        if args.atlas:
            with open(args.atlas, "w", encoding="utf-8") as fh:
                json.dump(atlas.to_json(), fh)
        svg = render_svg(realized, labels)
    else:
        realized = realize_patch(system, L, expand_supertile(system, j, args.level))
        svg = render_svg(realized, "type")
    write_text(out, svg)
    print(f"tiles: {len(realized)}")
    write_manifest(out, manifest(args, spec, args.seed, thresholds))
    return EXIT_OK


def _complex_json(c: complex) -> list:
    return [float(c.real), float(c.imag)]


def cmd_twisted(args) -> int:
    from .spectral import (box_decomposition, dim_lower_bound, dim_lower_bound_zero, indicator_functions,
                           mean_zero_functions, seed_hierarchy, twisted_box_bruteforce, twisted_box_integral,
                           twisted_supertile_bruteforce, twisted_supertile_integral)

    system, _, spec = load_model(args.model, args.convention)
    check_level(args.n)
    j = resolve_tile(system, args.j)
    lam = parse_vector(args.lam, system.d)
    L = deformed_shape(system, args.radius, args.seed)
    psi = indicator_functions(system, L) if args.psi == "indicator" else mean_zero_functions(system, L)
    out = {"schema": SCHEMA_VERSION, "lam": lam.tolist(), "j": system.labels[j], "n": args.n, "psi": args.psi}
    if args.R is None:
        fast = twisted_supertile_integral(system, L, lam, j, args.n, psi)
        brute = None
        if args.n <= 12 and patch_size(system, j, args.n) <= args.brute_limit:
            brute = twisted_supertile_bruteforce(system, L, lam, j, args.n, psi)
    else:
        rh = seed_hierarchy(system, L, j, args.n)
        dec = box_decomposition(rh, args.R)
        fast = twisted_box_integral(rh, lam, args.R, psi, dec)
        brute = twisted_box_bruteforce(rh, lam, args.R, psi)
        out.update(R=args.R, level_totals=dec.level_totals().tolist(), leftover=int(len(dec.leftover)))
    out["fast"] = _complex_json(fast)
    out["brute"] = None if brute is None else _complex_json(brute)
    if brute is not None:
        out["relative_error"] = abs(fast - brute) / max(abs(brute), 1e-300)
    S = substitution_matrix(system)
    if not lam.any() and args.psi == "mean-zero":
        pf = pf_data(S)
        out["chi_plus"] = math.log(pf.second_modulus)
        out["chi_source"] = "log of the second eigenvalue modulus of S"
        out["dim_lower_bound"] = dim_lower_bound_zero(S, system.d, system.theta)
    else:
        chi = float(lyapunov_batch(system, lift(L, lam)[None, :], args.N)[0])
        out["chi_plus"] = chi
        out["chi_source"] = f"cocycle growth over N={args.N} steps"
        out["dim_lower_bound"] = dim_lower_bound(chi, system.d, system.theta)
    out["manifest"] = manifest(args, spec, args.seed, {"radius": args.radius, "N": args.N})
    write_text(args.out, json.dumps(out, indent=1) + "\n")
    write_manifest(args.out, out["manifest"])
    return EXIT_OK


def cmd_export(args) -> int:
    system, _, spec = load_model(args.model, args.convention)
    write_text(args.out, system.dumps() + "\n")
    write_manifest(args.out, manifest(args, spec))
    return EXIT_OK


def cmd_import(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        system = SubstitutionSystem.loads(fh.read())
    S = substitution_matrix(system)
    primitive = is_primitive(S)
    print(f"name: {system.name}; m={system.m} s={system.s} d={system.d}; primitive: {'yes' if primitive else 'no'}")
    if primitive:
        print(f"PF eigenvalue = {fmt(pf_data(S).pf_value)}")
    if args.out:
        write_text(args.out, system.dumps() + "\n")
    return EXIT_OK


# parser

def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("model", nargs="+", help="kenyon P Q R | square | FILE.json")
    p.add_argument("--convention", choices=KENYON_CONVENTIONS, default="tiling",
                   help="Kenyon digit convention (default: tiling)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tilecocycle", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("models", help="list built-in models")
    p.add_argument("action", nargs="?", choices=["list"], default="list")
    p.set_defaults(func=cmd_models)

    p = sub.add_parser("classify", help="classify the Kenyon cubic x^3 - p x^2 + q x + r")
    p.add_argument("p", type=int)
    p.add_argument("q", type=int)
    p.add_argument("r", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("lyapunov", help="pointwise upper Lyapunov exponent, one point or a grid")
    _add_model(p)
    p.add_argument("--z", help="torus point, comma separated")
    p.add_argument("--lam", help="frequency, lifted through the shape matrix")
    p.add_argument("--radius", type=float, default=0.0, help="deformation radius for --lam")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--window", type=int)
    p.add_argument("--grid", type=int, help="G x G grid over (z1, z2); other coordinates from --z")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("veech-scan", help="eigenvalue test and escape fractions over random deformations")
    _add_model(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--lams", type=int, default=20, help="random frequencies per deformation")
    p.add_argument("--lam", action="append", help="fixed frequency x,y (repeatable); replaces random draws")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--N", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--rho", type=float)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_veech_scan)

    p = sub.add_parser("render", help="SVG of a supertile")
    _add_model(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--root", default="0", help="prototile label or index")
    p.add_argument("--collar", action="store_true", help="color by collared class")
    p.add_argument("--depth", type=int, default=1, help="corona depth for --collar")
    p.add_argument("--atlas", help="write the collared atlas as JSON")
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("twisted", help="twisted integral over a supertile or a box")
    _add_model(p)
    p.add_argument("--lam", required=True)
    p.add_argument("--j", default="0", help="prototile label or index")
    p.add_argument("--n", type=int, default=6, help="supertile level (seed level with --R)")
    p.add_argument("--R", type=float, help="box half-width")
    p.add_argument("--psi", choices=["indicator", "mean-zero"], default="indicator")
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--N", type=int, default=500, help="steps for the exponent estimate")
    p.add_argument("--brute-limit", type=int, default=2_000_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_twisted)

    p = sub.add_parser("export-model", help="write a model as JSON")
    _add_model(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import-model", help="validate a model JSON file")
    p.add_argument("file")
    p.add_argument("--out", help="write the normalized JSON")
    p.set_defaults(func=cmd_import)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"IO error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericGuard, TilingError) as exc:
        print(f"numeric guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
