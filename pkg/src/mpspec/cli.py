"""Command line entry point: ``mpspec <subcommand> ...``.

Results go to stdout as JSON (or to ``--out``); logs go to stderr.
Exit codes: 0 success, 2 invalid input, 3 numerical refusal.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from .backward import eigenpair_backward_error, eigenvalue_backward_error
from .conditioning import eigenvalue_condition, eigenvector_condition, intersection_angles
from .contours import export_contours, field_csv, plot_script
from .errors import ConvergenceError, MpspecError, NotSimpleError
from .jsonio import decode_complex, dumps, load_pencil, pencil_to_dict
from .leftnull import nullspace_along_path, parse_path, split_at_eigenvalue
from .pencil import PerturbationModel, evaluate, gamma
from .pseudospectrum import GridSpec, field, right_definiteness
from .solver import solve_all
from .sysid import RealizationProblem, conditioning_probe, find_stationary_points

log = logging.getLogger("mpspec")

EXIT_OK, EXIT_INPUT, EXIT_REFUSED = 0, 2, 3


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# input helpers


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([decode_complex(t) for t in text.split(",") if t.strip()], dtype=complex)
    except ValueError as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _pencil(path):
    if not os.path.exists(path):
        raise InputError(f"pencil file {path} does not exist")
    try:
        return load_pencil(path)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed pencil file {path}: {exc}") from exc


def _model(name, pencil, weights_path=None):
    weights = None
    if weights_path:
        weights = _read_json(weights_path)
        if isinstance(weights, dict):
            weights = weights.get("weights")
    mode = {"rel": "relative", "abs": "absolute"}.get(name, name)
    if weights is not None and name not in ("custom",):
        mode = "custom"
    return PerturbationModel.named(mode, pencil, weights)


def _targets(args, pencil):
    """(lam, x) pairs from --lambda/--x or from an --eigs file written by solve."""
    if getattr(args, "eigs", None):
        doc = _read_json(args.eigs)
        items = doc.get("eigenpairs", doc) if isinstance(doc, dict) else doc
        out = []
        for item in items:
            lam = np.array([decode_complex(z) for z in item["lambda"]])
            x = item.get("x")
            out.append((lam, None if x is None else np.array([decode_complex(z) for z in x])))
        return out
    if args.lam is None:
        raise InputError("give --lambda or --eigs")
    lam = parse_vector(args.lam)
    if lam.size != pencil.m:
        raise InputError(f"--lambda needs {pencil.m} values")
    x = None
    if getattr(args, "x", None):
        x = parse_vector(args.x)
        if x.size != pencil.l:
            raise InputError(f"--x needs {pencil.l} values")
    return [(lam, x)]


def _emit(args, payload: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(payload + "\n")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse numbers from {text!r}") from exc


# --------------------------------------------------------------------------
# subcommands


def cmd_mperr(args):
    pencil = _pencil(args.pencil)
    model = _model(args.model, pencil, args.weights)
    rows = []
    for lam, x in _targets(args, pencil):
        a = evaluate(pencil, lam)
        row = {
            "lambda": lam,
            "eta_lambda": eigenvalue_backward_error(pencil, model, lam),
            "gamma": gamma(model, lam, pencil),
            "model": model.mode,
        }
        if x is not None:
            row["eta_pair"] = eigenpair_backward_error(pencil, model, lam, x)
            row["residual_norm"] = float(np.linalg.norm(a @ x) / np.linalg.norm(x))
        else:
            row["residual_norm"] = float(np.linalg.svd(a, compute_uv=False)[-1])
        rows.append(row)
    _emit(args, dumps(rows[0] if len(rows) == 1 and not args.eigs else rows))


def cmd_mpcond(args):
    pencil = _pencil(args.pencil)
    model = _model(args.model, pencil, args.weights)
    mode = {"rel": "relative", "abs": "absolute"}.get(args.mode, args.mode)
    rows = []
    for lam, x in _targets(args, pencil):
        rep = eigenvalue_condition(pencil, model, lam, x, mode=mode)
        row = rep.as_dict()
        row["lambda"] = lam
        if args.vector_cond:
            row["kappa_x"] = eigenvector_condition(pencil, model, lam, x)
        if args.angles:
            angles, mean = intersection_angles(pencil, lam.real if np.all(lam.imag == 0) else lam)
            row["angles"] = angles
            row["mean_angle"] = mean
        rows.append(row)
    _emit(args, dumps(rows[0] if len(rows) == 1 and not args.eigs else rows))


def cmd_mppseudo(args):
    pencil = _pencil(args.pencil)
    model = _model(args.model, pencil, args.weights)
    try:
        grid = GridSpec.from_dict(_read_json(args.grid))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed grid: {exc}") from exc
    eps = _floats(args.eps) if args.eps else []
    fld = field(pencil, model, grid, method=args.method, threads=args.threads)
    meta = {
        "model": model.mode,
        "weights": model.weights,
        "method": fld.method,
        "shape": list(fld.values.shape),
        "eta_min": float(fld.values.min()),
        "eta_max": float(fld.values.max()),
        "telemetry": fld.telemetry.as_dict(),
        "grid": grid.to_dict(),
    }
    contours = []
    if eps:
        try:
            for cs in export_contours(fld, eps):
                contours.append({
                    "eps": cs.level,
                    "polylines": len(cs.lines),
                    "closed": cs.closed,
                    "lines": [ln.tolist() for ln in cs.lines],
                })
        except MpspecError as exc:
            log.warning("no contours: %s", exc)
        meta["members"] = {repr(e): int((fld.values <= e).sum()) for e in eps}
    meta["contours"] = contours
    csv_text = field_csv(fld)
    script = plot_script(fld, args.out or "field.csv", eps or [1e-2], pencil) if args.plot else None
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        meta["csv"] = args.out
    if script is not None:
        Path(args.plot).write_text(script, encoding="utf-8")
        meta["plot_script"] = args.plot
    sys.stdout.write(dumps(meta) + "\n")


def _pair_json(pencil, ep):
    model = PerturbationModel.relative(pencil)
    return {
        "lambda": ep.lam,
        "x": ep.x,
        "iterations": ep.iterations,
        "eta_lambda": eigenvalue_backward_error(pencil, model, ep.lam),
    }


def cmd_solve(args):
    pencil = _pencil(args.pencil)
    box = _floats(args.box)
    if len(box) != 2 * pencil.m:
        raise InputError(f"--box needs {2 * pencil.m} bounds")
    imag_box = None
    if args.complex:
        imag_box = _floats(args.imag_box) if args.imag_box else [-1.0, 1.0] * pencil.m
    pairs = solve_all(pencil, box, args.res, imag_box=imag_box, threads=args.threads)
    doc = {
        "pencil": pencil_to_dict(pencil),
        "box": box,
        "imag_box": imag_box,
        "resolution": args.res,
        "count": len(pairs),
        "eigenpairs": [_pair_json(pencil, ep) for ep in pairs],
    }
    _emit(args, dumps(doc))


def cmd_leftnull(args):
    pencil = _pencil(args.pencil)
    if args.split:
        lam = parse_vector(args.split)
        direction = parse_vector(args.direction) if args.direction else None
        trivial, y = split_at_eigenvalue(pencil, lam, direction=direction, rng=args.seed)
        doc = {
            "lambda": lam,
            "trivial_basis": trivial.T,
            "left_eigenvector": y,
            "left_residual": float(np.linalg.norm(y.conj() @ evaluate(pencil, lam))),
        }
        _emit(args, dumps(doc))
        return
    if not args.path:
        raise InputError("give --path or --split")
    try:
        path = parse_path(args.path, pencil.m)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    a, b = _floats(args.range)
    ts = np.linspace(a, b, args.n)
    samples = nullspace_along_path(pencil, path, ts)
    width = max(s.dim for s in samples) * pencil.k
    lines = ["t," + ",".join(f"y{i // pencil.k + 1}_{i % pencil.k + 1}_{p}" for i in range(width) for p in ("re", "im")) + ",dim"]
    for s in samples:
        flat = s.basis.T.ravel()
        cells = []
        for i in range(width):
            if i < flat.size:
                cells += [repr(float(flat[i].real)), repr(float(flat[i].imag))]
            else:
                cells += ["", ""]
        lines.append(",".join([repr(s.t)] + cells + [str(s.dim)]))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    jumps = [{"t": s.t, "dim": s.dim} for s in samples if s.dim != pencil.m - 1]
    sys.stdout.write(dumps({"samples": len(samples), "generic_dim": pencil.m - 1, "jumps": jumps,
                            "csv": args.out}) + "\n")


def _read_series(path) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    vals = []
    for tok in text.replace("\n", ",").replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            vals.append(float(tok))
        except ValueError:
            if vals:
                raise InputError(f"non-numeric entry {tok!r} in {path}") from None
            # leading header
    if not vals:
        raise InputError(f"no data in {path}")
    return np.array(vals)


def cmd_sysid(args):
    y = _read_series(args.data)
    problem = RealizationProblem(y, args.order)
    box = _floats(args.box) if args.box else [-10.0, 10.0] * args.order
    pts = find_stationary_points(problem, box, grid=args.grid_n, random=args.random, rng=args.seed)
    doc = {
        "data": y,
        "order": args.order,
        "box": box,
        "complete_outside_box": False,
        "cost_definition": "squared misfit ||y_hat - y||^2",
        "points": [p.as_dict() for p in pts],
    }
    if args.pencil:
        pencil = _pencil(args.pencil)
        probe = conditioning_probe(pts, pencil)
        for d, row in zip(doc["points"], probe):
            d["eta"] = row.get("eta")
            d["kappa"] = row.get("kappa")
            if "reason" in row:
                d["probe_note"] = row["reason"]
    _emit(args, dumps(doc))


def cmd_definiteness(args):
    pencil = _pencil(args.pencil)
    cert = right_definiteness(pencil)
    _emit(args, dumps(cert.as_dict()))


def cmd_examples(args):
    if args.action != "install":
        raise InputError(f"unknown action {args.action!r}")
    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, make in fixtures.EXAMPLES.items():
        p = out / f"{name}.json"
        p.write_text(json.dumps(pencil_to_dict(make()), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        written.append(str(p))
    p = out / "sysid.csv"
    p.write_text("y\n" + "\n".join(repr(float(v)) for v in fixtures.sysid_data()) + "\n", encoding="utf-8")
    written.append(str(p))
    sys.stdout.write(dumps({"written": written}) + "\n")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = argparse.ArgumentParser(prog="mpspec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def pencil_args(p, model=True):
        p.add_argument("--pencil", required=True)
        if model:
            p.add_argument("--model", default="rel", choices=["rel", "abs", "custom"])
            p.add_argument("--weights", help="JSON list of per-term error weights")

    p = sub.add_parser("mperr", parents=[common], help="backward errors")
    pencil_args(p)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--x")
    p.add_argument("--eigs", help="eigenpairs JSON written by 'solve'")
    p.set_defaults(func=cmd_mperr)

    p = sub.add_parser("mpcond", parents=[common], help="condition numbers")
    pencil_args(p)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--x")
    p.add_argument("--eigs")
    p.add_argument("--mode", default="rel", choices=["rel", "abs"])
    p.add_argument("--vector-cond", action="store_true")
    p.add_argument("--angles", action="store_true")
    p.set_defaults(func=cmd_mpcond)

    p = sub.add_parser("mppseudo", parents=[common], help="pseudospectrum field")
    pencil_args(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--method", default="naive",
                   choices=["naive", "auto", "slightly_tall", "very_tall"])
    p.add_argument("--eps", help="comma separated contour levels")
    p.add_argument("--plot", help="write a matplotlib script here")
    p.set_defaults(func=cmd_mppseudo)

    p = sub.add_parser("solve", parents=[common], help="all eigenpairs in a box")
    pencil_args(p, model=False)
    p.add_argument("--box", required=True)
    p.add_argument("--res", type=int, default=101)
    p.add_argument("--complex", action="store_true", help="search a complex box")
    p.add_argument("--imag-box", help="imaginary bounds with --complex (default -1,1 per parameter)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("leftnull", parents=[common], help="left null spaces along a path")
    pencil_args(p, model=False)
    p.add_argument("--path", help="e.g. 'affine:t*(1,1)'")
    p.add_argument("--range", default="0,1")
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--split", help="eigenvalue at which to split the null space")
    p.add_argument("--direction", help="approach direction for --split")
    p.set_defaults(func=cmd_leftnull)

    p = sub.add_parser("sysid", parents=[common], help="realization stationary points")
    p.add_argument("--data", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--box")
    p.add_argument("--grid-n", type=int, default=21)
    p.add_argument("--random", type=int, default=100)
    p.add_argument("--pencil", help="pencil whose eigenvalues are the alphas, for eta and kappa")
    p.set_defaults(func=cmd_sysid)

    p = sub.add_parser("definiteness", parents=[common], help="right definiteness certificate")
    pencil_args(p, model=False)
    p.set_defaults(func=cmd_definiteness)

    p = sub.add_parser("examples", parents=[common], help="write example fixtures")
    p.add_argument("action", choices=["install"])
    p.add_argument("--dir", default="examples_data")
    p.set_defaults(func=cmd_examples)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (NotSimpleError, ConvergenceError) as exc:
        log.error("refused: %s", exc)
        return EXIT_REFUSED
    except (InputError, ValueError, KeyError, TypeError, OSError, MpspecError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
