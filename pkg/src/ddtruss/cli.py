"""Command-line front end.

::

    ddtruss gen-data --d 300 --seed 0 --out data.csv
    ddtruss analyze ten-bar data.csv --lambda 10 --solver exact --out-dir out/
    ddtruss sweep ten-bar data.csv --lambda-list 0:11:1 --solvers heuristic,exact --out-dir out/

``MODEL`` is either a truss JSON file or the name ``ten-bar``.
Exit codes: 0 success, 2 input error, 3 solver limit reached, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from .dataset import compute_c, generate_synthetic, load_csv, write_csv
from .errors import DDTrussError, InputError, NumericalError, TooLarge
from .heuristic import DEFAULT_CAP, solve_heuristic
from .miqp import DEFAULT_NODE_LIMIT, OPTIMAL, solve_exact
from .oracle import DEFAULT_LIMIT, brute_force
from .truss import (DEFAULT_AREA, TEN_BAR_MONITOR, builtin_ten_bar, load_truss_file,
                    load_vector)

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_NUMERICAL = 0, 2, 3, 4

SWEEP_HEADER = ["lambda", "opt_mJ", "time_s", "bnb_nodes", "heur_obj_mJ", "heur_iters",
                "heur_converged", "monitor_disp_m", "status"]
PHASE_HEADER = ["member", "eps", "sig", "e_assigned", "s_assigned"]


def _load_model(spec: str, area: float | None):
    if spec in ("ten-bar", "ten_bar", "10-bar"):
        return builtin_ten_bar(DEFAULT_AREA if area is None else area), TEN_BAR_MONITOR
    model = load_truss_file(spec)
    if area is not None:
        from .truss import build_model, dump_truss
        doc = dump_truss(model)
        doc["members"] = [[i, j, area] for i, j, _ in doc["members"]]
        model = build_model(doc["nodes"], doc["members"], doc["fixed_dofs"], doc["loads"])
    doc = json.loads(Path(spec).read_text(encoding="utf-8"))
    monitor = tuple(doc["monitor"]) if "monitor" in doc else None
    if monitor is None:
        k = int(np.argmax(np.abs(model.load_pattern)))
        monitor = model.free_dofs[k]
    return model, monitor


def _parse_dof(text: str):
    try:
        node, axis = (int(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"--monitor-dof expects NODE,AXIS, got {text!r}") from None
    return node, axis


def parse_lambda_list(text: str) -> list[float]:
    """``"0,1,2.5"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 10) for k in range(count)]
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse lambda list {text!r}") from None
    if not values:
        raise InputError("lambda list is empty")
    return values


def _fmt(x) -> str:
    return repr(float(x))


def _run_solver(solver, model, data, c, p, args):
    if solver == "heuristic":
        return solve_heuristic(model, data, c, p, cap=args.heuristic_cap)
    if solver == "exact":
        return solve_exact(model, data, c, p, gap_tol=args.gap_tol, time_limit=args.time_limit,
                           node_limit=args.node_limit, bound=args.bound,
                           heuristic_cap=args.heuristic_cap)
    return brute_force(model, data, c, p, enumeration_limit=args.enumeration_limit)


def _weighting(data, args):
    if args.c is not None:
        if not args.c > 0:
            raise InputError("--c must be positive")
        return float(args.c), 0
    w = compute_c(data)
    if w.skipped:
        print(f"note: {w.skipped} zero-strain data point(s) left out of the mean for c",
              file=sys.stderr)
    return w.c, w.skipped


def cmd_analyze(args) -> int:
    model, _ = _load_model(args.model, args.area)
    data = load_csv(args.data)
    c, skipped = _weighting(data, args)
    p = load_vector(model, args.lam)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    result = _run_solver(args.solver, model, data, c, p, args)
    elapsed = time.perf_counter() - t0
    st = result.state
    doc = {
        "solver": args.solver,
        "lambda": args.lam,
        "c_Pa": c,
        "c_skipped_zero_strain": skipped,
        "objective_J": result.objective,
        "u_m": st.u.tolist(),
        "eps": st.eps.tolist(),
        "sig_Pa": st.sig.tolist(),
        "e": st.e.tolist(),
        "s_Pa": st.s.tolist(),
        "assignment": [int(j) for j in st.assignment],
    }
    if args.solver == "heuristic":
        doc["status"] = "Converged" if result.converged else "NotConverged"
        doc["iterations"] = result.iterations
        code = EXIT_OK if result.converged else EXIT_LIMIT
    else:
        doc["status"] = result.status
        doc["nodes_explored"] = result.nodes_explored
        doc["gap"] = result.gap
        code = EXIT_OK if result.status == OPTIMAL else EXIT_LIMIT
    tag = f"{args.solver}_lambda{args.lam:g}"
    (out / f"solution_{tag}.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    _write_csv(out / f"phase_{tag}.csv", PHASE_HEADER,
               [[i, _fmt(st.eps[i]), _fmt(st.sig[i]), _fmt(st.e[i]), _fmt(st.s[i])]
                for i in range(model.m)])
    print(f"{args.solver}: lambda={args.lam:g} objective={result.objective * 1e3:.6g} mJ "
          f"status={doc['status']} time={elapsed:.2f}s")
    return code


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def cmd_sweep(args) -> int:
    model, monitor = _load_model(args.model, args.area)
    if args.monitor_dof:
        monitor = _parse_dof(args.monitor_dof)
    k_mon = model.dof_index(*monitor)
    data = load_csv(args.data)
    c, _ = _weighting(data, args)
    lams = parse_lambda_list(args.lambda_list)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solvers:
        if s not in ("heuristic", "exact", "oracle"):
            raise InputError(f"unknown solver {s!r}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows, path_rows = [], []
    code = EXIT_OK
    for lam in lams:
        p = load_vector(model, lam)
        row = dict.fromkeys(SWEEP_HEADER, "")
        row["lambda"] = _fmt(lam)
        statuses = []
        disp = None
        try:
            if "heuristic" in solvers:
                h = solve_heuristic(model, data, c, p, cap=args.heuristic_cap)
                row["heur_iters"] = h.iterations
                row["heur_converged"] = int(h.converged)
                if h.converged:
                    row["heur_obj_mJ"] = _fmt(h.objective * 1e3)
                disp = h.state.u[k_mon]
            for name in ("exact", "oracle"):
                if name not in solvers:
                    continue
                t0 = time.perf_counter()
                r = _run_solver(name, model, data, c, p, args)
                elapsed = time.perf_counter() - t0
                if name == "exact" or "exact" not in solvers:
                    row["opt_mJ"] = _fmt(r.objective * 1e3)
                    row["time_s"] = "" if args.no_timing else f"{elapsed:.3f}"
                    row["bnb_nodes"] = r.nodes_explored
                    disp = r.state.u[k_mon]
                statuses.append(r.status)
                if r.status != OPTIMAL:
                    code = max(code, EXIT_LIMIT)
        except TooLarge as exc:
            statuses.append(f"TooLarge: {exc}")
            code = max(code, EXIT_LIMIT)
        except NumericalError as exc:
            statuses.append(f"NumericalError: {exc}")
            code = max(code, EXIT_NUMERICAL)
        if disp is not None:
            row["monitor_disp_m"] = _fmt(disp)
            path_rows.append([_fmt(lam), _fmt(disp)])
        row["status"] = ";".join(statuses) if statuses else "OK"
        rows.append([row[h] for h in SWEEP_HEADER])
        _print_row(row)

    _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    _write_csv(out / "path.csv", ["lambda", "monitor_disp_m"], path_rows)
    return code


def _print_row(row):
    def num(key, fmt):
        v = row[key]
        return format(float(v), fmt) if v != "" else "-"
    heur = num("heur_obj_mJ", ".3f")
    iters = row["heur_iters"]
    if row["heur_converged"] == 0:
        iters = f"(>{iters})"
    print(f"{float(row['lambda']):5.1f}  opt {num('opt_mJ', '.3f'):>12} mJ  "
          f"time {num('time_s', '.1f'):>7} s  nodes {str(row['bnb_nodes']):>8}  "
          f"heur {heur:>12} mJ  iter {str(iters):>8}  {row['status']}")


def cmd_gen_data(args) -> int:
    data = generate_synthetic(args.curve, d=args.d, noise_std=args.noise, seed=args.seed,
                              strain_range=(args.strain_min, args.strain_max))
    write_csv(data, args.out)
    print(f"wrote {data.d} points to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddtruss", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_opts(p):
        p.add_argument("--gap-tol", type=float, default=0.0,
                       help="relative MIP gap for the exact solver (default 0)")
        p.add_argument("--time-limit", type=float, default=None,
                       help="wall-clock limit per exact solve, seconds")
        p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT,
                       help="maximum branch-and-bound nodes per solve")
        p.add_argument("--bound", choices=("hull", "free"), default="hull",
                       help="lower bound used by the exact solver")
        p.add_argument("--heuristic-cap", type=int, default=DEFAULT_CAP,
                       help="iteration cap of the fixed-point heuristic")
        p.add_argument("--enumeration-limit", type=int, default=DEFAULT_LIMIT,
                       help="largest d**m the brute-force solver accepts")
        p.add_argument("--area", type=float, default=None,
                       help="uniform member area, m^2 (ten-bar default 1e-3)")
        p.add_argument("--c", type=float, default=None,
                       help="weighting modulus, Pa (default: mean stress/strain of the data)")
        p.add_argument("--out-dir", default=".", help="directory for result files")

    p = sub.add_parser("analyze", help="solve one load level")
    p.add_argument("model", help="truss JSON file or 'ten-bar'")
    p.add_argument("data", help="material data CSV (strain, stress in Pa)")
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="load multiplier (dimensionless)")
    p.add_argument("--solver", choices=("heuristic", "exact", "oracle"), default="exact")
    solver_opts(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="solve a list of load multipliers")
    p.add_argument("model", help="truss JSON file or 'ten-bar'")
    p.add_argument("data", help="material data CSV (strain, stress in Pa)")
    p.add_argument("--lambda-list", default="0:11:1",
                   help="comma list or inclusive start:stop:step (default 0:11:1)")
    p.add_argument("--solvers", default="heuristic,exact",
                   help="comma list from heuristic, exact, oracle")
    p.add_argument("--monitor-dof", default=None,
                   help="NODE,AXIS whose displacement (m) is reported; ten-bar default 2,1")
    p.add_argument("--no-timing", action="store_true",
                   help="leave the time_s column empty (byte-reproducible output)")
    solver_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-data", help="write a synthetic material data set")
    p.add_argument("--curve", default=ds_mod.DEFAULT_CURVE,
                   help="linear(E=...) or cubic_softening(E=..., beta=...), Pa")
    p.add_argument("--d", type=int, default=300, help="number of points")
    p.add_argument("--noise", type=float, default=ds_mod.DEFAULT_NOISE,
                   help="stress noise standard deviation, Pa")
    p.add_argument("--strain-min", type=float, default=ds_mod.DEFAULT_STRAIN_RANGE[0])
    p.add_argument("--strain-max", type=float, default=ds_mod.DEFAULT_STRAIN_RANGE[1])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except NumericalError as exc:
        if isinstance(exc, InputError):
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DDTrussError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
