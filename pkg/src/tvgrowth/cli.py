"""Command-line front end.

Exit codes: 0 success, 1 solver failure, 2 input error.  Every subcommand
accepts ``--config FILE`` with ``key=value`` lines (keys are the long flag
names, dashes or underscores); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CritSearchResult,
    check_bounds,
    classify_arrays,
    find_lambda_crit,
)
from .bvp import NoBracketError, StepUnderflowError, full_symmetric_profile, shoot, shoot_symmetric_step
from .densities import DensityError, NonConvergenceError, lambda_inf, make_density, thresholds
from .experiment import ExperimentSpec, run_experiment
from .grid_energy import Grid, GridMismatchError
from .minimizer import BoxViolationError, solve
from .signals import GridDatum, csv_text, gen_signal, read_csv, read_signal, write_csv

log = logging.getLogger("tvgrowth")

EXIT_OK, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


def _emit(lines):
    for ln in lines:
        print(ln)


def _kv(items) -> dict:
    out = {}
    for it in items or ():
        if "=" not in it:
            raise InputError(f"expected key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = float(v) if _is_number(v) else v.strip()
    return out


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_config(path) -> dict:
    """Plain ``key=value`` lines; ``#`` starts a comment."""
    cfg = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def _density_args(p):
    p.add_argument("--density", default="phi-mu", help="phi-mu or f-eps")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)


def _density(args):
    try:
        return make_density(args.density, mu=args.mu, eps=args.eps)
    except DensityError as exc:
        raise InputError(str(exc)) from exc


def _positive_lambda(lam):
    if lam is None or not lam > 0:
        raise InputError("--lambda must be positive")
    return lam


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    params = _kv(args.param)
    if args.amplitude is not None:
        params["amplitude"] = args.amplitude
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        sig = gen_signal(args.kind, params, Grid(args.n))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    text = csv_text({"t": sig.grid.nodes, "value": sig.values})
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote={args.out}")
    else:
        sys.stdout.write(text)


def _load_signal(args):
    if args.input:
        sig = read_signal(args.input)
        if args.n is not None and args.n != sig.n:
            raise InputError(f"--n {args.n} does not match the {sig.n} samples in {args.input}")
        return sig
    return gen_signal(args.datum, _kv(args.param), Grid(args.n or 1001))


def cmd_denoise(args):
    d = _density(args)
    lam = _positive_lambda(args.lam)
    f = _load_signal(args)
    res = solve(f, d, lam)
    if args.out:
        write_csv(args.out, {"t": f.grid.nodes, "value": res.u})
    if args.sigma:
        write_csv(args.sigma, {"t": f.grid.nodes, "value": res.sigma})
    _emit([
        f"converged={str(res.converged).lower()}",
        f"iterations={res.iterations}",
        f"energy={res.J!r}",
        f"dual_value={res.dual_value!r}",
        f"duality_gap={res.duality_gap!r}",
        f"sigma_defect={res.defect!r}",
    ])
    if not res.converged:
        raise SolverFailure("Newton continuation did not converge")


def cmd_shoot(args):
    d = _density(args)
    lam = _positive_lambda(args.lam)
    try:
        if args.step_data:
            res = shoot_symmetric_step(d, lam)
            tr = res.trajectory
            t = np.concatenate((tr.t, 1.0 - tr.t[::-1][1:]))
            u = full_symmetric_profile(res, t)
            du = np.concatenate((tr.du, tr.du[::-1][1:]))
        else:
            if not args.input:
                raise InputError("shoot needs --step-data or --input")
            res = shoot(GridDatum(read_signal(args.input)), d, lam)
            t, u, du = res.trajectory.t, res.trajectory.u, res.trajectory.du
    except NoBracketError as exc:
        _emit(["classification=jump", f"message={exc}"])
        if exc.result is not None:
            _emit([f"u0_left_branch={exc.result.u0!r}"])
        raise SolverFailure("no continuous solution (jump regime)") from exc
    if args.out:
        write_csv(args.out, {"t": t, "u": u, "du": du})
    _emit([
        "classification=smooth",
        f"u0={res.u0!r}",
        f"residual={res.residual!r}",
        f"blew_up={str(res.blew_up).lower()}",
    ])
    if args.step_data:
        _emit(check_bounds(res, d, lam).lines())


def cmd_thresholds(args):
    _emit(thresholds(_density(args)).lines())


def cmd_critlambda(args):
    d = _density(args)
    if not args.tol > 0:
        raise InputError("--tol must be positive")
    res: CritSearchResult = find_lambda_crit(d, tol=args.tol, n=args.n, cross_check=not args.no_cross_check)
    _emit(res.lines())


def cmd_analyze(args):
    d = _density(args)
    lam = _positive_lambda(args.lam)
    cols_u = read_csv(args.solution)
    u = cols_u.get("value", cols_u.get("u"))
    if u is None:
        raise InputError(f"{args.solution}: expected a 'value' or 'u' column")
    n = len(u)
    h = 1.0 / (n - 1)
    # midpoint sigma from the constitutive relation; node values are kept for the mask
    se = d.deriv(np.diff(u) / h)
    rep = classify_arrays(u, se, d)
    lines = [f"lambda={lam!r}"] + rep.lines()
    if args.sigma:
        cols_s = read_csv(args.sigma)
        sn = cols_s.get("value", cols_s.get("sigma"))
        if sn is None or len(sn) != n:
            raise InputError(f"{args.sigma}: expected {n} sigma values")
        li = lambda_inf(d)
        lines.append(f"max_node_sigma_ratio={float(np.max(np.abs(sn)) / li)!r}")
        lines.append(f"sigma_boundary={float(sn[0])!r},{float(sn[-1])!r}")
    _emit(lines)


def _lambda_list(args):
    if args.lambdas is not None:
        items = [x for x in args.lambdas.split(",") if x.strip()]
        return tuple(float(x) for x in items)
    if args.lambda_range is not None:
        try:
            a, b, k = args.lambda_range.split(":")
            return tuple(np.linspace(float(a), float(b), int(k)))
        except ValueError as exc:
            raise InputError("--lambda-range expects start:stop:count") from exc
    return ()


def cmd_sweep(args):
    dparams = {"mu": args.mu} if args.density.startswith("phi") else {"eps": args.eps}
    datum_params = _kv(args.param)
    if args.amplitude is not None:
        datum_params["amplitude"] = args.amplitude
    if args.seed is not None:
        datum_params["seed"] = args.seed
    try:
        spec = ExperimentSpec(
            family=args.density,
            density_params=dparams,
            datum="csv" if args.input else args.datum,
            datum_params=datum_params,
            csv_path=args.input,
            lambdas=_lambda_list(args),
            n=args.n,
            out_dir=args.out_dir,
            workers=args.workers,
        )
    except (DensityError, FileNotFoundError) as exc:
        raise InputError(str(exc)) from exc
    rows = run_experiment(spec)
    for r in rows:
        print(f"lambda={r['lambda']!r} classification={r['classification']} u0={r['u0']!r}")
    print(f"summary={Path(args.out_dir) / 'sweep.csv'}")
    if any(r["classification"] == "error" for r in rows):
        raise SolverFailure("some lambda values failed")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvgrowth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", default=None, help="key=value file; flags take precedence")
        sp.set_defaults(func=fn)
        return sp

    sp = add("gen", cmd_gen, "sample a datum on the grid")
    sp.add_argument("--kind", default="step")
    sp.add_argument("--n", type=int, default=1001)
    sp.add_argument("--param", action="append", help="datum parameter key=value (repeatable)")
    sp.add_argument("--amplitude", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)

    sp = add("denoise", cmd_denoise, "minimise the discrete energy")
    _density_args(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--input", default=None, help="t,value CSV")
    sp.add_argument("--datum", default="step", help="generated datum when --input is absent")
    sp.add_argument("--param", action="append")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--sigma", default=None)

    sp = add("shoot", cmd_shoot, "solve the Neumann problem by shooting")
    _density_args(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--step-data", action="store_true")
    sp.add_argument("--input", default=None)
    sp.add_argument("--out", default=None)

    sp = add("thresholds", cmd_thresholds, "lambda_inf, omega_inf, lambda_mu and the critical bracket")
    _density_args(sp)

    sp = add("critlambda", cmd_critlambda, "search the critical lambda for the unit step")
    _density_args(sp)
    sp.add_argument("--tol", type=float, default=0.02)
    sp.add_argument("--n", type=int, default=1001)
    sp.add_argument("--no-cross-check", action="store_true")

    sp = add("analyze", cmd_analyze, "classify a stored solution")
    _density_args(sp)
    sp.add_argument("--solution", required=True)
    sp.add_argument("--sigma", default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)

    sp = add("sweep", cmd_sweep, "run a lambda sweep and write artifacts")
    _density_args(sp)
    sp.add_argument("--datum", default="step")
    sp.add_argument("--input", default=None)
    sp.add_argument("--param", action="append")
    sp.add_argument("--amplitude", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--lambdas", default=None, help="comma-separated list")
    sp.add_argument("--lambda-range", default=None, help="start:stop:count")
    sp.add_argument("--n", type=int, default=1001)
    sp.add_argument("--out-dir", default="out")
    sp.add_argument("--workers", type=int, default=1)
    return p


def _apply_config(parser, argv):
    """Re-parse with the config file's values as defaults of the chosen subcommand."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    alias = {"lambda": "lam"}
    defaults = {}
    for k, v in cfg.items():
        dest = alias.get(k, k)
        if dest not in known or dest in ("config", "func", "help"):
            raise InputError(f"{args.config}: unknown key {k!r} for '{args.command}'")
        action = next(a for a in sub._actions if a.dest == dest)
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = v.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[dest] = [x.strip() for x in v.split(";") if x.strip()]
        else:
            defaults[dest] = action.type(v) if action.type else v
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (SolverFailure, NoBracketError, StepUnderflowError, NonConvergenceError, BoxViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, GridMismatchError, DensityError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
