"""Command-line harness: reproduction recipes for every published number.

Commands
--------
run           one decoupling run -> JSON result (optional wavefunction CSV)
table1        the 8-row initial-state survey -> CSV
convergence   the (dx, xmax) error matrix of the exact scheme -> CSV
zeno          free-decay profile with quadratic/exponential fits -> CSV
figure3       post-decoupling wavefunction components -> CSV
dump-propagator   build one propagator matrix -> binary cache file

Every command stamps its effective configuration into its output (JSON field
or leading ``#`` comment line) and exits nonzero exactly when no output file
was produced.  Results go to files; progress goes to standard error.  Runs
are deterministic, so replaying a stamp reproduces the output byte for byte
(pass --timing to embed wall-clock times, which breaks that property).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time

import numpy as np

from . import analysis, config as cfgmod
from .ddengine import DDParams, dd_run
from .grids import (
    Line,
    QubitBathState,
    build_grid,
    cat_state,
    normalize,
    sample,
    snapped_grid,
)
from .propagators import (
    Scheme,
    fourier_step_pair,
    kernel_propagator,
    propagator_cache_path,
    save_propagator,
)
from .wavexpr import parse_wave_expr

PROG = "halfline-dd"


def _progress(stream):
    def report(done, total):
        if total >= 10 and done % max(1, total // 10) and done != total:
            return
        print(f"  progress {done}/{total}", file=stream, flush=True)
    return report


def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """Effective config: explicit flags > config file > command defaults."""
    file_cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = cfgmod.parse_config(fh.read())
    merged = dict(defaults)
    for key in defaults:
        if key in file_cfg:
            merged[key] = file_cfg[key]
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _parse_complex(text) -> complex:
    if isinstance(text, complex):
        return text
    return complex(str(text).replace(" ", ""))


def _state_and_params(cfg: dict):
    scheme = Scheme(cfg["method"])
    line = Line.FULL if scheme is Scheme.FOURIER else Line.HALF
    grid = build_grid(cfg["dx"], cfg["xmax"], line)
    expr = parse_wave_expr(cfg["expr"])
    psi = normalize(sample(expr, grid, odd=(line is Line.FULL)))
    b0, b1 = _parse_complex(cfg["beta0"]), _parse_complex(cfg["beta1"])
    scale = math.sqrt(abs(b0) ** 2 + abs(b1) ** 2)
    if scale == 0:
        raise ValueError("beta amplitudes cannot both vanish")
    state = QubitBathState(beta0=b0 / scale, beta1=b1 / scale,
                           psi0=psi, psi1=psi)
    params = DDParams(alpha=cfg["alpha"], t=cfg["t"], n=cfg["n"],
                      scheme=scheme, grid=grid)
    return state, params


def _wavefunctions_csv(out0, out1, stamp: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {stamp}\n")
    writer = csv.writer(buf)
    writer.writerow(["x", "abs2_psi0", "abs2_psi1", "phase0", "phase1", "phase_diff"])
    v0, v1 = out0.values, out1.values
    diff = np.angle(np.conj(v0) * v1)
    for i, x in enumerate(out0.grid.points):
        writer.writerow([repr(float(x)),
                         repr(float(abs(v0[i]) ** 2)), repr(float(abs(v1[i]) ** 2)),
                         repr(float(np.angle(v0[i]))), repr(float(np.angle(v1[i]))),
                         repr(float(diff[i]))])
    return buf.getvalue()


RUN_DEFAULTS = {
    "expr": "x^2*exp(-x)", "alpha": -2.0, "t": 1.0, "n": 200,
    "dx": 0.01, "xmax": 20.0, "method": "fourier", "power": "matrix",
    "beta0": "1", "beta1": "1",
}


def cmd_run(args) -> int:
    cfg = _merged(args, RUN_DEFAULTS)
    state, params = _state_and_params(cfg)
    t0 = time.monotonic()
    result = dd_run(state, params, power=cfg["power"],
                    progress=_progress(sys.stderr),
                    keep_wavefunctions=bool(args.dump_wavefunctions),
                    config_stamp={"command": "run"})
    if args.timing:
        result.runtime_seconds = time.monotonic() - t0
    _atomic_write(args.out, result.to_json() + "\n")
    if args.dump_wavefunctions:
        out0, out1 = result.wavefunctions_out
        stamp = cfgmod.format_stamp(cfg)
        _atomic_write(args.dump_wavefunctions, _wavefunctions_csv(out0, out1, stamp))
    print(f"wrote {args.out}  |rho01|={abs(result.rho01_n):.6f} "
          f"predicted={abs(result.predicted):.6f}", file=sys.stderr)
    return 0


TABLE1_DEFAULTS = {
    "dx": analysis.TABLE1_DISCRETIZATION["dx"],
    "xmax": analysis.TABLE1_DISCRETIZATION["xmax"],
    "t": analysis.TABLE1_DISCRETIZATION["t"],
    "n": analysis.TABLE1_DISCRETIZATION["n"],
    "method": "fourier", "power": "iterate",
}


def cmd_table1(args) -> int:
    cfg = _merged(args, TABLE1_DEFAULTS)
    table = analysis.table1_sweep(
        dx=cfg["dx"], xmax=cfg["xmax"], t=cfg["t"], n=cfg["n"],
        scheme=Scheme(cfg["method"]), power=cfg["power"],
        progress=_progress(sys.stderr))
    _atomic_write(args.out, table.to_csv())
    print(f"wrote {args.out} ({len(table.rows)} rows)", file=sys.stderr)
    return 0


CONV_DEFAULTS = {
    "expr": analysis.CONVERGENCE_STATE["expr"],
    "alpha": analysis.CONVERGENCE_STATE["alpha"],
    "t": analysis.CONVERGENCE_STATE["t"],
    "n": analysis.CONVERGENCE_STATE["n"],
    "power": "matrix",
    "dx_list": ",".join(str(v) for v in analysis.CONVERGENCE_CELLS["dx"]),
    "xmax_list": ",".join(str(v) for v in analysis.CONVERGENCE_CELLS["xmax"]),
}


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def cmd_convergence(args) -> int:
    """Cells are computed one at a time and appended immediately, so an
    interrupted sweep is restartable with --resume."""
    cfg = _merged(args, CONV_DEFAULTS)
    dx_list = _float_list(cfg["dx_list"])
    xmax_list = _float_list(cfg["xmax_list"])
    done: set[tuple[float, float]] = set()
    if args.resume and os.path.exists(args.out):
        with open(args.out, "r", encoding="utf-8") as fh:
            body = [line for line in fh.read().splitlines()
                    if line and not line.startswith("#")]
        for row in csv.DictReader(body):
            done.add((float(row["dx"]), float(row["xmax_requested"])))
        print(f"resuming: {len(done)} cells already present", file=sys.stderr)
    cells = [(dx, xm) for dx in dx_list for xm in xmax_list
             if (dx, xm) not in done]
    if not cells:
        print("nothing to do", file=sys.stderr)
        return 0 if os.path.exists(args.out) else 2
    fresh = not (args.resume and os.path.exists(args.out))
    columns = ("dx", "xmax_requested", "xmax_effective", "computed_2rho01",
               "rel_err_percent", "divergent", "norm0", "norm1")
    kwargs = dict(expr_text=cfg["expr"], alpha=cfg["alpha"], t=cfg["t"],
                  n=cfg["n"], power=cfg["power"])
    workers = max(1, int(args.workers))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(dx, xm): pool.submit(analysis.convergence_cell, dx, xm,
                                             **kwargs)
                       for dx, xm in cells}
        rows = [futures[key].result() for key in cells]  # deterministic order
    else:
        rows = None
    with open(args.out, "w" if fresh else "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            fh.write(f"# convergence {cfgmod.format_stamp(cfg)}\n")
            writer.writerow(columns)
        for i, (dx, xm) in enumerate(cells):
            row = rows[i] if rows else analysis.convergence_cell(dx, xm, **kwargs)
            writer.writerow([analysis._csv_cell(row[c]) for c in columns])
            fh.flush()
            status = "diverged" if row["divergent"] else f"{row['rel_err_percent']:.1f}%"
            print(f"  cell dx={dx} xmax={xm}: {status} ({i + 1}/{len(cells)})",
                  file=sys.stderr)
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


ZENO_DEFAULTS = {
    "expr": "x*exp(-x)", "alpha": -2.0, "dx": 0.005, "xmax": 15.0,
    "times": "0:2:101", "quad_window": "0:0.05", "exp_window": "0.2:2",
    "free_method": "auto",
}


def _parse_times(text: str) -> np.ndarray:
    parts = str(text).split(":")
    if len(parts) == 3:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(start, stop, count)
    return np.array([float(v) for v in str(text).split(",")])


def cmd_zeno(args) -> int:
    cfg = _merged(args, ZENO_DEFAULTS)
    grid = build_grid(cfg["dx"], cfg["xmax"], Line.HALF)
    psi = normalize(sample(parse_wave_expr(cfg["expr"]), grid))
    state = cat_state(psi)
    times = _parse_times(cfg["times"])
    profile = analysis.decay_profile(state, cfg["alpha"], times,
                                     method=cfg["free_method"])
    qlo, qhi = (float(v) for v in str(cfg["quad_window"]).split(":"))
    elo, ehi = (float(v) for v in str(cfg["exp_window"]).split(":"))
    analysis.fit_quadratic(profile, (qlo, qhi))
    analysis.fit_exponential(profile, (elo, ehi))
    _atomic_write(args.out, profile.to_csv(
        header_comment=f"zeno {cfgmod.format_stamp(cfg)}"))
    print(f"wrote {args.out} (quad c={profile.quadratic[0]:.4f}, "
          f"exp gamma={profile.exponential[1]:.4f})", file=sys.stderr)
    return 0


FIG3_DEFAULTS = {
    "expr": "x*exp(-x/5)", "alpha": -1.0, "t": 2.0, "n": 20,
    "dx": 0.01, "xmax": 20.0, "method": "fourier", "power": "iterate",
    "beta0": 1, "beta1": 1,
}


def cmd_figure3(args) -> int:
    cfg = _merged(args, FIG3_DEFAULTS)
    state, params = _state_and_params(cfg)
    result = dd_run(state, params, power=cfg["power"],
                    progress=_progress(sys.stderr), keep_wavefunctions=True,
                    config_stamp={"command": "figure3"})
    out0, out1 = result.wavefunctions_out
    overlap = abs(result.rho01_n) * 2.0
    stamp = f"figure3 overlap={overlap!r} {cfgmod.format_stamp(cfg)}"
    _atomic_write(args.out, _wavefunctions_csv(out0, out1, stamp))
    print(f"wrote {args.out}  overlap={overlap:.4f}", file=sys.stderr)
    return 0


DUMP_DEFAULTS = {
    "method": "kernel", "alpha": -1.0, "tau": 0.005, "dx": 0.003, "xmax": 6.0,
}


def cmd_dump_propagator(args) -> int:
    cfg = _merged(args, DUMP_DEFAULTS)
    scheme = Scheme(cfg["method"])
    if scheme is Scheme.KERNEL:
        grid = snapped_grid(cfg["dx"], cfg["xmax"], Line.HALF)
        matrix = kernel_propagator(cfg["alpha"], cfg["tau"], grid)
    else:
        grid = snapped_grid(cfg["dx"], cfg["xmax"], Line.FULL)
        matrix, _ = fourier_step_pair(cfg["alpha"], cfg["tau"], grid)
    out = args.out or str(propagator_cache_path(
        scheme, cfg["alpha"], cfg["tau"], grid.dx, grid.xmax))
    save_propagator(matrix, out)
    print(f"wrote {out}", file=sys.stderr)
    return 0


def _add_common(p: argparse.ArgumentParser, keys: dict):
    p.add_argument("--config", help="flat key = value config file (flags win)")
    p.add_argument("--timing", action="store_true",
                   help="embed wall-clock runtime in outputs")
    for key, default in keys.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            p.add_argument(flag, type=lambda s: s.lower() == "true", default=None)
        elif isinstance(default, int) and not isinstance(default, bool):
            p.add_argument(flag, type=int, default=None)
        elif isinstance(default, float):
            p.add_argument(flag, type=float, default=None)
        else:
            p.add_argument(flag, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG, description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single decoupling run -> JSON")
    _add_common(p, RUN_DEFAULTS)
    p.add_argument("--out", default="ddrun.json")
    p.add_argument("--dump-wavefunctions", metavar="CSV",
                   help="also write the evolved components as CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table1", help="8-row initial-state survey -> CSV")
    _add_common(p, TABLE1_DEFAULTS)
    p.add_argument("--out", default="table1.csv")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("convergence", help="(dx, xmax) error matrix -> CSV")
    _add_common(p, CONV_DEFAULTS)
    p.add_argument("--out", default="convergence.csv")
    p.add_argument("--resume", action="store_true",
                   help="skip cells already present in the output file")
    p.add_argument("--workers", type=int, default=1,
                   help="dispatch sweep cells to a process pool of this size")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("zeno", help="free decay profile + fits -> CSV")
    _add_common(p, ZENO_DEFAULTS)
    p.add_argument("--out", default="zeno.csv")
    p.set_defaults(func=cmd_zeno)

    p = sub.add_parser("figure3", help="post-decoupling wavefunctions -> CSV")
    _add_common(p, FIG3_DEFAULTS)
    p.add_argument("--out", default="figure3.csv")
    p.set_defaults(func=cmd_figure3)

    p = sub.add_parser("dump-propagator", help="build one propagator matrix")
    _add_common(p, DUMP_DEFAULTS)
    p.add_argument("--out", default=None,
                   help="output path (default: the cache directory)")
    p.set_defaults(func=cmd_dump_propagator)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # no output file -> nonzero status with message
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
