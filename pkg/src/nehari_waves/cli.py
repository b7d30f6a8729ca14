"""Command-line front end: solve, sweep, continue-K, validate, rayfind.

Flags beat values from a ``--config`` JSON file, which beat built-in
defaults; the defaults reproduce the reference setup (K=6, N=2400,
dtau=5e-4), so ``nehari-waves solve --sigma2 1 --p 4 --q 3`` runs a full
production solve with no further flags.

Exit codes: 0 success, 1 usage or input error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .averaging import OperatorMode, average
from .errors import CsvFormatError
from .flow import FlowConfig, ProjectionMode, continue_in_K, solve, suggest_dtau
from .grid import GridProfile, GridSpec, ModelParams, read_profile_csv, write_profile_csv
from .lattice import validate_wave
from .nehari import RayCoefficients, ray_bracket, ray_max_value, ray_maximizer

__all__ = ["main", "run_sweep"]

DEFAULT_SIGMA2_LIST = (0.01, 0.1, 1.0, 10.0)
DEFAULT_PAIRS = ((4.0, 3.0), (3.0, 1.5))

_COMMON_DEFAULTS = {
    "K": 6.0,
    "N": 2400,
    "dtau": 5e-4,
    "tol_grad": 1e-8,
    "tol_constraint": 1e-10,
    "max_iters": 2_000_000,
    "init": "gaussian",
    "operator": "quadrature",
    "projection": "paper",
    "seed": 0,
}

DEFAULTS = {
    "solve": dict(
        _COMMON_DEFAULTS,
        out="profile.csv",
        summary="summary.json",
        plot=False,
    ),
    "sweep": dict(
        _COMMON_DEFAULTS,
        dtau="auto",
        sigma2_list=",".join(f"{s:g}" for s in DEFAULT_SIGMA2_LIST),
        pairs=",".join(f"{p:g}:{q:g}" for p, q in DEFAULT_PAIRS),
        out="sweep_out",
        plot=True,
        jobs=None,
    ),
    "continue-K": dict(
        _COMMON_DEFAULTS,
        K_start=6.0,
        factor=2.0,
        steps=3,
        N_start=2400,
        out="continuation.csv",
    ),
    "validate": dict(
        dt=1e-3,
        T=None,
        cells=4,
        operator="quadrature",
        out="drift_report.json",
    ),
    "rayfind": dict(tol=1e-12),
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit with code 1."""

    def error(self, message):
        raise _UsageError(message)


def _add_model_flags(sp):
    sp.add_argument("--sigma2", type=float, help="squared wave speed (> 0)")
    sp.add_argument("--p", type=float, help="high potential exponent (> 2)")
    sp.add_argument("--q", type=float, help="low potential exponent (1 < q < p)")


def _dtau_arg(text):
    return text if str(text).lower() == "auto" else float(text)


def _add_flow_flags(sp):
    sp.add_argument("--K", type=float, help="half-period of the cell")
    sp.add_argument("--N", type=int, help="number of grid points")
    sp.add_argument("--dtau", type=_dtau_arg,
                    help="flow time step, or 'auto' for a per-run stability estimate")
    sp.add_argument("--tol-grad", dest="tol_grad", type=float)
    sp.add_argument("--tol-constraint", dest="tol_constraint", type=float)
    sp.add_argument("--max-iters", dest="max_iters", type=int)
    sp.add_argument("--init", help="gaussian | constant | file:PATH")
    sp.add_argument("--operator", choices=["quadrature", "spectral"])
    sp.add_argument("--projection", choices=["paper", "exact"])
    sp.add_argument("--seed", type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="nehari-waves", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    sp = sub.add_parser("solve", help="compute one ground wave")
    _add_model_flags(sp)
    _add_flow_flags(sp)
    sp.add_argument("--out", help="profile CSV path")
    sp.add_argument("--summary", help="summary JSON path")
    sp.add_argument("--plot", action="store_true", default=argparse.SUPPRESS)
    sp.add_argument("--config", help="JSON config file (flags override it)")

    sp = sub.add_parser("sweep", help="solve across wave speeds and exponent pairs")
    _add_flow_flags(sp)
    sp.add_argument("--sigma2-list", dest="sigma2_list",
                    help="comma-separated squared speeds")
    sp.add_argument("--pairs", help="exponent pairs, e.g. 4:3,3:1.5")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--no-plot", dest="plot", action="store_false",
                    default=argparse.SUPPRESS)
    sp.add_argument("--jobs", type=int, help="parallel runs "
                    "(default: NEHARI_WAVES_JOBS or 1)")
    sp.add_argument("--config", help="JSON config file (flags override it)")

    sp = sub.add_parser("continue-K", help="grow the cell toward the solitary limit")
    _add_model_flags(sp)
    _add_flow_flags(sp)
    sp.add_argument("--K-start", dest="K_start", type=float)
    sp.add_argument("--factor", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--N-start", dest="N_start", type=int)
    sp.add_argument("--out", help="table CSV path")
    sp.add_argument("--config", help="JSON config file (flags override it)")

    sp = sub.add_parser("validate", help="integrate the chain and report drift")
    _add_model_flags(sp)
    sp.add_argument("--profile", help="profile CSV to validate")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--T", type=float, help="integration time (default one transit 2K/sigma)")
    sp.add_argument("--cells", type=int, help="periodic cells of atoms")
    sp.add_argument("--operator", choices=["quadrature", "spectral"])
    sp.add_argument("--out", help="drift report JSON path")
    sp.add_argument("--config", help="JSON config file (flags override it)")

    sp = sub.add_parser("rayfind", help="maximize the ray restriction of the action")
    sp.add_argument("--c2", type=float)
    sp.add_argument("--cq", type=float)
    sp.add_argument("--cp", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--tol", type=float)

    for s in sub.choices.values():
        for action in s._actions:
            if action.dest not in ("help",) and action.default is None:
                action.default = argparse.SUPPRESS
    return parser


def _merge_options(command: str, args: argparse.Namespace) -> dict:
    given = {k: v for k, v in vars(args).items() if k != "command"}
    config_path = given.pop("config", None)
    merged = dict(DEFAULTS[command])
    if config_path is not None:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read config file {config_path}: {exc}")
        if not isinstance(loaded, dict):
            raise _UsageError("config file must hold a JSON object")
        for key, value in loaded.items():
            merged[key.replace("-", "_")] = value
    merged.update(given)
    return merged


def _require(opts: dict, names, command: str):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise _UsageError(f"{command}: missing required flag(s): {flags}")


def _model(opts) -> ModelParams:
    return ModelParams(p=float(opts["p"]), q=float(opts["q"]),
                       sigma2=float(opts["sigma2"]))


def _flow_config(opts, params: ModelParams) -> FlowConfig:
    init = opts["init"]
    if isinstance(init, str) and init.startswith("file:"):
        init = read_profile_csv(init[len("file:"):])[0]
    dtau = opts["dtau"]
    if isinstance(dtau, str):
        if dtau.lower() != "auto":
            raise _UsageError(f"bad --dtau {dtau!r}")
        dtau = suggest_dtau(params)
    return FlowConfig(
        dtau=float(dtau),
        max_iters=int(opts["max_iters"]),
        tol_grad=float(opts["tol_grad"]),
        tol_constraint=float(opts["tol_constraint"]),
        operator_mode=OperatorMode.from_arg(opts["operator"]),
        projection_mode=ProjectionMode.from_arg(opts["projection"]),
        init=init,
        seed=int(opts["seed"]),
    )


def _write_summary(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_solve(opts) -> int:
    _require(opts, ("sigma2", "p", "q"), "solve")
    params = _model(opts)
    spec = GridSpec(K=float(opts["K"]), N=int(opts["N"]))
    cfg = _flow_config(opts, params)
    profile, summary = solve(params, spec, cfg)
    aw = average(profile, cfg.operator_mode)
    write_profile_csv(opts["out"], profile, aw)
    _write_summary(opts["summary"], summary.as_dict())
    if opts.get("plot"):
        from . import plots

        fig = plots.profile_figure(
            profile, aw,
            title=rf"$\sigma^2={params.sigma2:g}$, $p={params.p:g}$, $q={params.q:g}$",
        )
        plots.save_figure(fig, _plot_path(opts["out"]))
    print(
        f"{summary.classification}: action={summary.ell:.12g} "
        f"residual={summary.residual:.3g} iterations={summary.iterations}"
    )
    return 0 if summary.converged else 2


def _plot_path(csv_path: str) -> str:
    root, ext = os.path.splitext(csv_path)
    return root + ".svg"


def _parse_sigma2_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(s) for s in text]
    try:
        values = [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise _UsageError(f"bad --sigma2-list {text!r}")
    if not values:
        raise _UsageError("empty --sigma2-list")
    return values


def _parse_pairs(text) -> list:
    if isinstance(text, (list, tuple)):
        return [(float(p), float(q)) for p, q in text]
    pairs = []
    try:
        for chunk in str(text).split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            p_str, q_str = chunk.split(":")
            pairs.append((float(p_str), float(q_str)))
    except ValueError:
        raise _UsageError(f"bad --pairs {text!r} (expected p:q[,p:q...])")
    if not pairs:
        raise _UsageError("empty --pairs")
    return pairs


def _sweep_task(task):
    """Worker for one sweep run; writes that run's profile CSV."""
    params = ModelParams(p=task["p"], q=task["q"], sigma2=task["sigma2"])
    spec = GridSpec(K=task["K"], N=task["N"])
    dtau = task["dtau"]
    if isinstance(dtau, str):
        dtau = suggest_dtau(params)
    cfg = FlowConfig(
        dtau=dtau,
        max_iters=task["max_iters"],
        tol_grad=task["tol_grad"],
        tol_constraint=task["tol_constraint"],
        operator_mode=task["operator"],
        projection_mode=task["projection"],
        init=task["init"],
        seed=task["seed"],
    )
    profile, summary = solve(params, spec, cfg)
    aw = average(profile, cfg.operator_mode)
    write_profile_csv(task["csv_path"], profile, aw)
    return {
        "index": task["index"],
        "summary": summary.as_dict(),
        "values": profile.values,
        "aw": aw.values,
        "K": spec.K,
        "N": spec.N,
    }


def run_sweep(opts) -> tuple:
    """Run every (pair, sigma2) combination; returns (results, exit_code).

    Each result dict carries the summary plus the profile arrays so the
    caller can build figures or further checks without re-reading files.
    """
    sigma2_values = _parse_sigma2_list(opts["sigma2_list"])
    pairs = _parse_pairs(opts["pairs"])
    out_dir = opts["out"]
    os.makedirs(out_dir, exist_ok=True)
    if not isinstance(opts["init"], str) or opts["init"].startswith("file:"):
        raise _UsageError("sweep supports only gaussian/constant inits")

    tasks = []
    for p, q in pairs:
        for s2 in sigma2_values:
            name = f"profile_p{p:g}_q{q:g}_s2_{s2:g}.csv"
            tasks.append(
                {
                    "index": len(tasks),
                    "p": p,
                    "q": q,
                    "sigma2": s2,
                    "K": float(opts["K"]),
                    "N": int(opts["N"]),
                    "dtau": opts["dtau"],
                    "max_iters": int(opts["max_iters"]),
                    "tol_grad": float(opts["tol_grad"]),
                    "tol_constraint": float(opts["tol_constraint"]),
                    "operator": opts["operator"],
                    "projection": opts["projection"],
                    "init": opts["init"],
                    "seed": int(opts["seed"]),
                    "csv_path": os.path.join(out_dir, name),
                }
            )

    jobs = opts.get("jobs")
    if jobs is None:
        jobs = int(os.environ.get("NEHARI_WAVES_JOBS", "1"))
    jobs = max(1, int(jobs))

    if jobs == 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    results.sort(key=lambda r: r["index"])
    return results, (0 if all(r["summary"]["converged"] for r in results) else 2)


def cmd_sweep(opts) -> int:
    results, code = run_sweep(opts)
    out_dir = opts["out"]
    _write_summary(
        os.path.join(out_dir, "summary.json"), [r["summary"] for r in results]
    )
    if opts.get("plot", True):
        from . import plots

        panels = []
        for r in results:
            spec = GridSpec(K=r["K"], N=r["N"])
            panels.append(
                {
                    "sigma2": r["summary"]["sigma2"],
                    "p": r["summary"]["p"],
                    "q": r["summary"]["q"],
                    "W": GridProfile(spec, r["values"]),
                    "AW": GridProfile(spec, r["aw"]),
                }
            )
        plots.save_figure(plots.sweep_figure(panels),
                          os.path.join(out_dir, "sweep.svg"))
    for r in results:
        s = r["summary"]
        print(
            f"p={s['p']:g} q={s['q']:g} sigma2={s['sigma2']:g}: "
            f"{s['classification']} action={s['action']:.9g} "
            f"iterations={s['iterations']}"
        )
    return code


def cmd_continue_k(opts) -> int:
    _require(opts, ("sigma2", "p", "q"), "continue-K")
    params = _model(opts)
    cfg = _flow_config(opts, params)
    summaries = continue_in_K(
        params,
        cfg,
        K_start=float(opts["K_start"]),
        factor=float(opts["factor"]),
        steps=int(opts["steps"]),
        N_start=int(opts["N_start"]),
    )
    with open(opts["out"], "w", newline="\n") as fh:
        fh.write("K,ell,tail_mass,iterations,converged\n")
        for s in summaries:
            fh.write(
                f"{s.K:.17g},{s.ell:.17g},{s.tail_mass:.17g},"
                f"{s.iterations},{str(s.converged).lower()}\n"
            )
    for s in summaries:
        print(f"K={s.K:g}: ell={s.ell:.12g} tail_mass={s.tail_mass:.3g}")
    return 0 if all(s.converged for s in summaries) else 2


def cmd_validate(opts) -> int:
    _require(opts, ("sigma2", "p", "q", "profile"), "validate")
    params = _model(opts)
    W, _ = read_profile_csv(opts["profile"])
    T = opts.get("T")
    if T is None:
        T = 2.0 * W.spec.K / np.sqrt(params.sigma2)
    report = validate_wave(
        W,
        params,
        dt=float(opts["dt"]),
        T=float(T),
        n_cells=int(opts["cells"]),
        operator_mode=OperatorMode.from_arg(opts["operator"]),
    )
    _write_summary(opts["out"], report.as_dict())
    print(
        f"drift_l2={report.drift_l2:.3g} drift_sup={report.drift_sup:.3g} "
        f"energy_drift={report.energy_drift:.3g} "
        f"momentum_drift={report.momentum_drift:.3g}"
    )
    return 0


def cmd_rayfind(opts) -> int:
    _require(opts, ("c2", "cq", "cp", "p", "q"), "rayfind")
    c = RayCoefficients(float(opts["c2"]), float(opts["cq"]), float(opts["cp"]))
    p, q = float(opts["p"]), float(opts["q"])
    if not (p > 2 and 1 < q < p):
        raise _UsageError(f"rayfind: need p > 2 and 1 < q < p, got p={p}, q={q}")
    lo, hi = ray_bracket(c, p, q)
    root = ray_maximizer(c, p, q, tol=float(opts["tol"]))
    print(f"xi_bar = {root:.17g}")
    print(f"lambda = {ray_max_value(c, p, q, root):.17g}")
    print(f"bracket = [{lo:.17g}, {hi:.17g}]")
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "continue-K": cmd_continue_k,
    "validate": cmd_validate,
    "rayfind": cmd_rayfind,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        command = getattr(args, "command", None)
        if command is None:
            raise _UsageError("no command given (try --help)")
        opts = _merge_options(command, args)
        return _COMMANDS[command](opts)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CsvFormatError as exc:
        print(f"error: malformed profile CSV: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
