"""Command-line interface: every analysis as a reproducible subcommand.

Subcommands: slice, phase-diagram, gap, scaling, anneal, matrix-dump.
Configuration comes from flags plus an optional ``--config`` file of
``key=value`` lines (flags win on conflict).  ``PSPIN_AFF_OUTDIR`` and
``PSPIN_AFF_THREADS`` override the output directory and worker count.
Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

import pspin_aff
from pspin_aff.errors import NumericalFailure
from pspin_aff.io_utils import write_csv, write_json
from pspin_aff.meanfield import (
    INFINITE,
    SchedulePoint,
    classify_grid,
    classify_phase,
    detect_jump,
)
from pspin_aff.phasediagram import AnnealPath, scan
from pspin_aff.sector import SectorBasis, assemble
from pspin_aff.spectrum import (
    find_local_minima,
    gap_curve,
    scaling_fit,
    select_minimum,
)
from pspin_aff.anneal import evolve

__all__ = ["main", "ConfigError"]


class ConfigError(ValueError):
    """Invalid command-line or config-file input (exit code 2)."""


_PHASE_NAMES = {0: "QP", 1: "QP2", 2: "F", -1: "none"}


def _parse_p(text: str):
    if text.strip().lower() in ("inf", "infinite", "infinity"):
        return INFINITE
    try:
        p = int(text)
    except ValueError as exc:
        raise ConfigError(f"--p must be an integer >= 3 or 'inf', got {text!r}") from exc
    if p < 3:
        raise ConfigError(f"--p must be >= 3, got {p}")
    return p


def _parse_n_list(text: str) -> list[int]:
    """Parse ``start:stop:step`` (inclusive stop) or a single integer."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        if len(parts) == 3:
            start, stop, step = (int(x) for x in parts)
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
    except ValueError as exc:
        raise ConfigError(f"--N expects INT or start:stop:step, got {text!r}") from exc
    raise ConfigError(f"--N expects INT or start:stop:step, got {text!r}")


def _parse_path(text: str) -> AnnealPath:
    pairs = []
    for chunk in text.split(";"):
        bits = chunk.split(",")
        if len(bits) != 2:
            raise ConfigError(f"--path expects 's,lam;s,lam;...', got {text!r}")
        try:
            pairs.append((float(bits[0]), float(bits[1])))
        except ValueError as exc:
            raise ConfigError(f"bad path coordinate in {chunk!r}") from exc
    try:
        return AnnealPath.from_pairs(pairs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_seeds(text: str) -> tuple[tuple[float, float], ...]:
    seeds = []
    for chunk in text.split(";"):
        bits = chunk.split(",")
        if len(bits) != 2:
            raise ConfigError(f"--seeds expects 'mz,mx;mz,mx;...', got {text!r}")
        seeds.append((float(bits[0]), float(bits[1])))
    return tuple(seeds)


def _parse_beta(text: str) -> float:
    if text.strip().lower() in ("inf", "infinite", "infinity"):
        return INFINITE
    try:
        beta = float(text)
    except ValueError as exc:
        raise ConfigError(f"--beta must be positive or 'inf', got {text!r}") from exc
    if not beta > 0:
        raise ConfigError(f"--beta must be positive, got {beta}")
    return beta


def _load_config_flags(path: str) -> list[str]:
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"config file not found: {path}")
    flags: list[str] = []
    for line in file.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config lines must be key=value, got {line!r}")
        key, value = line.split("=", 1)
        flags.extend([f"--{key.strip()}", value.strip()])
    return flags


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pspin-aff",
        description=(
            "Mean-field phase structure, exact sector spectra, gap scaling and "
            "annealing dynamics of the driven fully connected p-spin model."
        ),
    )
    parser.add_argument("--version", action="version", version=pspin_aff.__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file (flags win)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--prefix", help="output file prefix")
        sp.add_argument("--threads", type=int, help="worker count")
        sp.add_argument(
            "--format", choices=("csv", "json"), default="csv",
            help="format for row tables (default csv)",
        )

    sp = sub.add_parser("slice", help="classify a constant-lambda slice")
    sp.add_argument("--p", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--beta", default="inf")
    sp.add_argument("--s-min", type=float, default=0.0)
    sp.add_argument("--s-max", type=float, default=0.999)
    sp.add_argument("--s-points", type=int, default=1000)
    sp.add_argument("--jump-threshold", type=float, default=1e-3)
    sp.add_argument("--seeds", help="finite-beta seed override 'mz,mx;...'")
    common(sp)

    sp = sub.add_parser("phase-diagram", help="scan the full (s, lambda) plane")
    sp.add_argument("--p", required=True)
    sp.add_argument("--s-res", type=int, default=201)
    sp.add_argument("--lambda-res", type=int, default=201)
    common(sp)

    sp = sub.add_parser("gap", help="gap curve and local minima at one size")
    sp.add_argument("--p", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--N", required=True)
    sp.add_argument("--s-points", type=int, default=2001)
    sp.add_argument("--refine-tol", type=float, default=1e-5)
    sp.add_argument("--adaptive-rounds", type=int, default=2)
    common(sp)

    sp = sub.add_parser("scaling", help="fit gap minima across sizes")
    sp.add_argument("--p", required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--N", required=True, help="size list start:stop:step")
    sp.add_argument("--minimum", default="global", help="global|rightmost|INDEX")
    sp.add_argument("--model", choices=("power", "exp", "both"), default="both")
    sp.add_argument("--s-points", type=int, default=2001)
    sp.add_argument("--refine-tol", type=float, default=1e-5)
    common(sp)

    sp = sub.add_parser("anneal", help="Schrodinger evolution along a path")
    sp.add_argument("--p", required=True)
    sp.add_argument("--N", required=True)
    sp.add_argument("--lambda", dest="lam", type=float,
                    help="constant-lambda standard path")
    sp.add_argument("--path", help="waypoints 's,lam;s,lam;...'")
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--order", type=int, default=4, choices=(2, 4))
    sp.add_argument("--overlap-samples", type=int, default=0)
    sp.add_argument("--allow-nonstandard-path", action="store_true")
    common(sp)

    sp = sub.add_parser("matrix-dump", help="serialize one assembled operator")
    sp.add_argument("--p", required=True)
    sp.add_argument("--N", required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    common(sp)

    return parser


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("PSPIN_AFF_OUTDIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        n = int(os.environ.get("PSPIN_AFF_THREADS", "1"))
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def _p_str(p) -> str:
    return "inf" if isinstance(p, float) and math.isinf(p) else str(p)


def _rows_out(path_base: Path, meta, columns, rows, fmt: str) -> Path:
    if fmt == "json":
        payload = {"columns": list(columns), "rows": [list(r) for r in rows]}
        out = path_base.with_suffix(".json")
        write_json(out, meta, payload, pspin_aff.__version__)
    else:
        out = path_base.with_suffix(".csv")
        write_csv(out, meta, columns, rows, pspin_aff.__version__)
    return out


def _cmd_slice(args) -> int:
    p = _parse_p(args.p)
    beta = _parse_beta(args.beta)
    if not (0.0 <= args.s_min < args.s_max < 1.0):
        raise ConfigError("slice requires 0 <= s-min < s-max < 1")
    if args.s_points < 2:
        raise ConfigError("slice requires at least 2 s points")
    if not (0.0 <= args.lam <= 1.0):
        raise ConfigError(f"--lambda must lie in [0,1], got {args.lam}")
    out_dir = _out_dir(args)
    threads = _threads(args)
    s = np.linspace(args.s_min, args.s_max, args.s_points)
    meta = {
        "command": "slice", "p": _p_str(p), "lambda": args.lam, "beta": args.beta,
        "s_min": args.s_min, "s_max": args.s_max, "s_points": args.s_points,
        "jump_threshold": args.jump_threshold, "threads": threads,
    }

    rows = []
    if math.isinf(beta):
        g = classify_grid(p, s, np.full(s.shape, args.lam))
        if not np.all(g.converged):
            raise NumericalFailure("no stable solution at some slice points")
        for i in range(s.size):
            rows.append(
                (_p_str(p), float(s[i]), args.lam, float(g.mz[i]), float(g.mx[i]),
                 float(g.f[i]), _PHASE_NAMES[int(g.phase_code[i])], True)
            )
        transitions = detect_jump(
            p, args.lam, s, jump_threshold=args.jump_threshold
        )
    else:
        for si in s:
            sol = classify_phase(p, SchedulePoint(float(si), args.lam), beta=beta)
            if not sol.converged:
                raise NumericalFailure(f"finite-beta solve failed at s={si}")
            rows.append(
                (_p_str(p), float(si), args.lam, sol.mz, sol.mx,
                 sol.free_energy, sol.phase.value, sol.converged)
            )
        transitions = []

    prefix = args.prefix or f"slice_p{_p_str(p)}_lam{args.lam:g}"
    rows_file = _rows_out(
        out_dir / f"{prefix}_rows", meta,
        ("p", "s", "lambda", "mz", "mx", "f", "phase", "converged"),
        rows, args.format,
    )
    trans_payload = {
        "transitions": [
            {
                "s": t.s,
                "order": t.order,
                "delta_mz": t.delta_mz,
                "delta_mx": t.delta_mx,
                "left_phase": t.left_phase.value if t.left_phase else "none",
                "right_phase": t.right_phase.value if t.right_phase else "none",
                "flags": list(t.flags),
            }
            for t in transitions
        ]
    }
    trans_file = out_dir / f"{prefix}_transitions.json"
    write_json(trans_file, meta, trans_payload, pspin_aff.__version__)
    print(rows_file)
    print(trans_file)
    return 0


def _cmd_phase_diagram(args) -> int:
    p = _parse_p(args.p)
    if args.s_res < 2 or args.lambda_res < 2:
        raise ConfigError("phase-diagram needs at least 2 cells per axis")
    out_dir = _out_dir(args)
    threads = _threads(args)
    meta = {
        "command": "phase-diagram", "p": _p_str(p),
        "s_res": args.s_res, "lambda_res": args.lambda_res, "threads": threads,
    }
    diagram = scan(p, s_res=args.s_res, lam_res=args.lambda_res)
    rows = []
    for i_lam, lam in enumerate(diagram.lam_values):
        for i_s, s in enumerate(diagram.s_values):
            rows.append(
                (_p_str(p), float(s), float(lam),
                 float(diagram.mz[i_lam, i_s]), float(diagram.mx[i_lam, i_s]),
                 float(diagram.f[i_lam, i_s]),
                 _PHASE_NAMES[int(diagram.phase_code[i_lam, i_s])],
                 bool(diagram.converged[i_lam, i_s]))
            )
    prefix = args.prefix or f"phase_diagram_p{_p_str(p)}"
    cells_file = _rows_out(
        out_dir / f"{prefix}_cells", meta,
        ("p", "s", "lambda", "mz", "mx", "f", "phase", "converged"),
        rows, args.format,
    )
    payload = {
        "segments": [
            {
                "kind": seg.kind,
                "order": seg.order,
                "points": [[s, lam] for s, lam in seg.points],
            }
            for seg in diagram.boundaries
        ]
    }
    bounds_file = out_dir / f"{prefix}_boundaries.json"
    write_json(bounds_file, meta, payload, pspin_aff.__version__)
    print(cells_file)
    print(bounds_file)
    return 0


def _cmd_gap(args) -> int:
    p = _parse_p(args.p)
    if isinstance(p, float):
        raise ConfigError("gap requires finite p")
    n_list = _parse_n_list(args.N)
    if len(n_list) != 1:
        raise ConfigError("gap takes a single --N; use scaling for sweeps")
    if not (0.0 <= args.lam <= 1.0):
        raise ConfigError(f"--lambda must lie in [0,1], got {args.lam}")
    n = n_list[0]
    if n < 1:
        raise ConfigError(f"--N must be >= 1, got {n}")
    out_dir = _out_dir(args)
    threads = _threads(args)
    meta = {
        "command": "gap", "p": p, "lambda": args.lam, "N": n,
        "s_points": args.s_points, "refine_tol": args.refine_tol,
        "adaptive_rounds": args.adaptive_rounds, "threads": threads,
    }
    curve = gap_curve(
        p, n, args.lam,
        s_grid=np.linspace(0.0, 1.0, args.s_points),
        adaptive_rounds=args.adaptive_rounds,
        workers=threads,
    )
    minima = find_local_minima(curve, refine_tol=args.refine_tol)
    prefix = args.prefix or f"gap_p{p}_lam{args.lam:g}_N{n}"
    curve_file = _rows_out(
        out_dir / f"{prefix}_curve", meta, ("s", "delta"),
        [(float(s), float(d)) for s, d in zip(curve.s, curve.delta)], args.format,
    )
    minima_file = _rows_out(
        out_dir / f"{prefix}_minima", meta,
        ("N", "index", "s_star", "delta"),
        [(m.N, m.index, m.s_star, m.delta) for m in minima], args.format,
    )
    print(curve_file)
    print(minima_file)
    return 0


def _cmd_scaling(args) -> int:
    p = _parse_p(args.p)
    if isinstance(p, float):
        raise ConfigError("scaling requires finite p")
    n_list = _parse_n_list(args.N)
    if len(n_list) < 4:
        raise ConfigError("scaling requires at least 4 sizes (start:stop:step)")
    if args.minimum not in ("global", "rightmost"):
        try:
            int(args.minimum)
        except ValueError as exc:
            raise ConfigError(
                f"--minimum must be global, rightmost or an index, got {args.minimum!r}"
            ) from exc
    out_dir = _out_dir(args)
    threads = _threads(args)
    meta = {
        "command": "scaling", "p": p, "lambda": args.lam, "N": args.N,
        "minimum": args.minimum, "model": args.model,
        "s_points": args.s_points, "refine_tol": args.refine_tol,
        "threads": threads,
    }
    selected = []
    reference_s = None
    for n in n_list:
        curve = gap_curve(
            p, n, args.lam,
            s_grid=np.linspace(0.0, 1.0, args.s_points),
            workers=threads,
        )
        minima = find_local_minima(curve, refine_tol=args.refine_tol)
        if not minima:
            raise NumericalFailure(f"no gap minima found at N={n}")
        pick = select_minimum(minima, args.minimum, reference_s=reference_s)
        reference_s = pick.s_star
        selected.append(pick)

    models = ("power", "exponential") if args.model == "both" else (
        ("power",) if args.model == "power" else ("exponential",)
    )
    fits = [scaling_fit(selected, m) for m in models]
    prefix = args.prefix or f"scaling_p{p}_lam{args.lam:g}"
    minima_file = _rows_out(
        out_dir / f"{prefix}_minima", meta,
        ("N", "index", "s_star", "delta"),
        [(m.N, m.index, m.s_star, m.delta) for m in selected], args.format,
    )
    fits_file = _rows_out(
        out_dir / f"{prefix}_fits", meta,
        ("model", "a", "b", "c", "r_squared", "n_min", "n_max"),
        [
            (f.model, f.a, "" if f.b is None else f.b, "" if f.c is None else f.c,
             f.r_squared, min(f.n_values), max(f.n_values))
            for f in fits
        ],
        args.format,
    )
    best = max(fits, key=lambda f: f.r_squared)
    summary_file = out_dir / f"{prefix}_summary.json"
    write_json(
        summary_file, meta,
        {
            "fits": [
                {"model": f.model, "a": f.a, "b": f.b, "c": f.c,
                 "r_squared": f.r_squared, "n_values": list(f.n_values)}
                for f in fits
            ],
            "preferred_model": best.model,
        },
        pspin_aff.__version__,
    )
    print(minima_file)
    print(fits_file)
    print(summary_file)
    return 0


def _cmd_anneal(args) -> int:
    p = _parse_p(args.p)
    if isinstance(p, float):
        raise ConfigError("anneal requires finite p")
    n_list = _parse_n_list(args.N)
    if len(n_list) != 1:
        raise ConfigError("anneal takes a single --N")
    n = n_list[0]
    if args.path is not None:
        path = _parse_path(args.path)
    elif args.lam is not None:
        if not (0.0 <= args.lam <= 1.0):
            raise ConfigError(f"--lambda must lie in [0,1], got {args.lam}")
        path = AnnealPath.constant_lambda(args.lam)
    else:
        raise ConfigError("anneal needs --lambda or --path")
    if not path.is_standard and not args.allow_nonstandard_path:
        raise ConfigError(
            "annealing paths must run from s=0 to (1,1); pass "
            "--allow-nonstandard-path for diagnostic runs"
        )
    if args.tau < 0:
        raise ConfigError(f"--tau must be >= 0, got {args.tau}")
    out_dir = _out_dir(args)
    threads = _threads(args)
    meta = {
        "command": "anneal", "p": p, "N": n, "tau": args.tau,
        "dt": "auto" if args.dt is None else args.dt, "order": args.order,
        "path": ";".join(f"{q.s:g},{q.lam:g}" for q in path.points),
        "overlap_samples": args.overlap_samples, "threads": threads,
    }
    run = evolve(
        p, n, path, args.tau, dt=args.dt, order=args.order,
        overlap_samples=args.overlap_samples,
    )
    prefix = args.prefix or f"anneal_p{p}_N{n}_tau{args.tau:g}"
    run_file = out_dir / f"{prefix}_run.json"
    write_json(
        run_file, meta,
        {
            "path": [[q.s, q.lam] for q in path.points],
            "tau": run.tau,
            "dt_used": run.dt_used,
            "order": run.order,
            "steps": run.steps,
            "fidelity": run.fidelity,
            "residual_energy": run.residual_energy,
            "norm_drift": run.norm_drift,
            "flags": list(run.flags),
        },
        pspin_aff.__version__,
    )
    print(run_file)
    if run.overlap_series:
        overlap_file = _rows_out(
            out_dir / f"{prefix}_overlap", meta, ("t", "ground_overlap"),
            [(t, o) for t, o in run.overlap_series], args.format,
        )
        print(overlap_file)
    return 0


def _cmd_matrix_dump(args) -> int:
    p = _parse_p(args.p)
    if isinstance(p, float):
        raise ConfigError("matrix-dump requires finite p")
    n_list = _parse_n_list(args.N)
    if len(n_list) != 1:
        raise ConfigError("matrix-dump takes a single --N")
    n = n_list[0]
    if not (0.0 <= args.s <= 1.0 and 0.0 <= args.lam <= 1.0):
        raise ConfigError("(s, lambda) must lie in [0,1]^2")
    out_dir = _out_dir(args)
    meta = {
        "command": "matrix-dump", "p": p, "N": n, "s": args.s, "lambda": args.lam,
    }
    op = assemble(SectorBasis(n), p, SchedulePoint(args.s, args.lam))
    prefix = args.prefix or f"matrix_p{p}_N{n}"
    matrix_file = _rows_out(
        out_dir / f"{prefix}_matrix", meta, ("row", "col", "value"),
        list(op.entries()), args.format,
    )
    print(matrix_file)
    return 0


_HANDLERS = {
    "slice": _cmd_slice,
    "phase-diagram": _cmd_phase_diagram,
    "gap": _cmd_gap,
    "scaling": _cmd_scaling,
    "anneal": _cmd_anneal,
    "matrix-dump": _cmd_matrix_dump,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # merge config-file values ahead of explicit flags so that flags win
    if "--config" in argv:
        idx = argv.index("--config")
        if idx + 1 >= len(argv):
            print("error: --config needs a file path", file=sys.stderr)
            return 2
        try:
            config_flags = _load_config_flags(argv[idx + 1])
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        argv = argv[:1] + config_flags + argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, ValueError) as exc:
        # ValueErrors escaping module preconditions are config mistakes
        if isinstance(exc, NumericalFailure):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
