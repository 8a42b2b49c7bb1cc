"""Regularity diagnostics, analytic bounds and the search for the critical lambda."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .bvp import NoBracketError, ShootResult, shoot, shoot_symmetric_step
from .densities import Density, lambda_inf, omega_inf
from .grid_energy import Grid, Signal
from .minimizer import SolveResult, SolverConfig, solve
from .signals import StepDatum, as_datum, gen_signal

log = logging.getLogger(__name__)


class NoJumpRegimeError(ValueError):
    """omega_inf is infinite: minimisers are continuous for every lambda."""


@dataclass(frozen=True)
class RegularityConfig:
    tol_sing: float = 1e-3
    jump_floor_h: float = 5.0  # jump_height_floor in units of h
    slope_blowup_factor: float = 10.0

    def __post_init__(self):
        if not 0 < self.tol_sing < 1:
            raise ValueError("tol_sing must lie in (0, 1)")
        if self.jump_floor_h <= 0 or self.slope_blowup_factor <= 0:
            raise ValueError("jump thresholds must be positive")


@dataclass
class RegularityReport:
    jumps: list  # (location, height)
    max_slope: float
    singular_mask: np.ndarray
    classification: str
    max_sigma_ratio: float = 0.0  # max |sigma| / lambda_inf over edges

    @property
    def jump_height(self) -> float:
        return max((abs(h) for _, h in self.jumps), default=0.0)

    def lines(self) -> list[str]:
        out = [
            f"classification={self.classification}",
            f"max_slope={self.max_slope:.10g}",
            f"max_sigma_ratio={self.max_sigma_ratio:.10g}",
            f"singular_nodes={int(self.singular_mask.sum())}",
            f"jumps={len(self.jumps)}",
        ]
        out += [f"jump_{k}={t:.10g},{h:.10g}" for k, (t, h) in enumerate(self.jumps)]
        return out


def classify_arrays(u, sigma_edges, d: Density, cfg: Optional[RegularityConfig] = None) -> RegularityReport:
    """Jump detection from node values of u and edge (midpoint) values of sigma."""
    cfg = cfg or RegularityConfig()
    u = np.asarray(u, dtype=float)
    se = np.asarray(sigma_edges, dtype=float)
    n = len(u)
    if se.shape != (n - 1,):
        raise ValueError(f"expected {n - 1} edge values of sigma, got {se.shape}")
    h = 1.0 / (n - 1)
    du = np.diff(u)
    s = np.abs(du) / h
    typical = float(s.mean()) if len(s) else 0.0  # equals the total variation of u
    lam_inf = lambda_inf(d)
    saturated = np.abs(se) >= (1.0 - cfg.tol_sing) * lam_inf
    flagged = (np.abs(du) > cfg.jump_floor_h * h) & (s > cfg.slope_blowup_factor * typical) & saturated

    jumps = []
    k = 0
    while k < len(flagged):
        if flagged[k]:
            j = k
            while j + 1 < len(flagged) and flagged[j + 1]:
                j += 1
            jumps.append((0.5 * (k + j + 1) * h, float(du[k : j + 1].sum())))
            k = j + 1
        else:
            k += 1

    mask = np.zeros(n, dtype=bool)
    mask[:-1] |= saturated
    mask[1:] |= saturated
    if jumps:
        cls = "jump"
    elif saturated.any():
        cls = "near-singular"
    else:
        cls = "smooth"
    ratio = float(np.max(np.abs(se)) / lam_inf) if len(se) else 0.0
    return RegularityReport(jumps, float(s.max()) if len(s) else 0.0, mask, cls, ratio)


def detect_jumps(result: SolveResult, d: Density, cfg: Optional[RegularityConfig] = None) -> RegularityReport:
    """Regularity report of a minimiser, using its midpoint dual certificate."""
    return classify_arrays(result.u, result.sigma_edges, d, cfg)


def crit_bracket(d: Density) -> tuple:
    """(max{lambda_inf, 8 omega_inf}, 8 (lambda_inf + omega_inf)) for the unit step."""
    li, wi = lambda_inf(d), omega_inf(d)
    if math.isinf(wi):
        raise NoJumpRegimeError("omega_inf is infinite: no jump regime exists")
    return (max(li, 8.0 * wi), 8.0 * (li + wi))


@dataclass
class CritSearchResult:
    lambda_crit_est: float
    bracket_analytic: Optional[tuple]
    history: list = field(default_factory=list)  # (lambda, classification)
    search_bracket: Optional[tuple] = None
    inconsistencies: list = field(default_factory=list)  # (lambda, shooting, minimiser)
    no_jump_regime: bool = False

    def lines(self) -> list[str]:
        out = [f"lambda_crit={self.lambda_crit_est:.10g}"]
        if self.bracket_analytic is not None:
            out.append(f"bracket_analytic={self.bracket_analytic[0]:.10g},{self.bracket_analytic[1]:.10g}")
        else:
            out.append("bracket_analytic=none")
        if self.search_bracket is not None:
            out.append(f"search_bracket={self.search_bracket[0]:.10g},{self.search_bracket[1]:.10g}")
        out.append(f"no_jump_regime={str(self.no_jump_regime).lower()}")
        out += [f"trial={lam:.10g},{cls}" for lam, cls in self.history]
        out += [f"inconsistent={lam:.10g},shooting={a},minimizer={b}" for lam, a, b in self.inconsistencies]
        return out


def _is_unit_step(datum) -> bool:
    return isinstance(datum, StepDatum) and datum.at == 0.5


def shooting_class(d: Density, lam: float, datum=None) -> tuple:
    """("smooth", ShootResult) when a continuous solution exists, else ("jump", partial result)."""
    datum = StepDatum() if datum is None else datum
    try:
        res = shoot_symmetric_step(d, lam) if _is_unit_step(datum) else shoot(datum, d, lam)
        return "smooth", res
    except NoBracketError as exc:
        return "jump", exc.result


def find_lambda_crit(
    d: Density,
    f=None,
    tol: float = 0.02,
    n: int = 1001,
    cross_check: bool = True,
    lam_max: float = 100.0,
    reg_cfg: Optional[RegularityConfig] = None,
    solver_cfg: Optional[SolverConfig] = None,
) -> CritSearchResult:
    """Bisection over lambda with the shooting classifier; minimiser as cross-check.

    ``f`` is a datum object (default: unit step).  When omega_inf is infinite a
    ladder of lambdas up to ``lam_max`` is classified instead and no estimate
    is produced.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    datum = StepDatum() if f is None else as_datum(f)
    grid = Grid(n)
    sig = Signal(grid, datum(grid.nodes))
    history, inconsistent = [], []

    def trial(lam):
        cls, _ = shooting_class(d, lam, datum)
        history.append((lam, cls))
        if cross_check:
            rep = detect_jumps(solve(sig, d, lam, solver_cfg), d, reg_cfg)
            # near-singular is compatible with either outcome
            if rep.classification != "near-singular" and rep.classification != cls:
                inconsistent.append((lam, cls, rep.classification))
                log.info("classifiers disagree at lambda=%g: shooting=%s minimizer=%s", lam, cls, rep.classification)
        return cls

    try:
        bracket = crit_bracket(d)
    except NoJumpRegimeError:
        for lam in np.geomspace(1.0, lam_max, 5):
            trial(float(lam))
        found = [lam for lam, c in history if c == "jump"]
        return CritSearchResult(
            lambda_crit_est=math.inf if not found else min(found),
            bracket_analytic=None,
            history=history,
            inconsistencies=inconsistent,
            no_jump_regime=not found,
        )

    lo, hi = bracket
    if trial(lo) != "smooth":
        lo = _expand(trial, lo, down=True)
    if trial(hi) != "jump":
        hi = _expand(trial, hi, down=False)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if trial(mid) == "smooth":
            lo = mid
        else:
            hi = mid
    return CritSearchResult(0.5 * (lo + hi), bracket, history, (lo, hi), inconsistent)


def _expand(trial, lam, down, factor=2.0, rounds=8):
    """Move a bracket end outward until it classifies as expected."""
    want = "smooth" if down else "jump"
    for _ in range(rounds):
        lam = lam / factor if down else lam * factor
        if trial(lam) == want:
            return lam
    raise RuntimeError(f"could not find a {want} lambda while expanding the bracket")


# ---------------------------------------------------------------------------
# bounds for the step datum


@dataclass(frozen=True)
class Check:
    value: float
    bound: float
    passed: bool


@dataclass
class BoundsReport:
    checks: dict
    envelope_bound: float  # sqrt(u0^2 + 2 omega_inf / lambda)
    jump_certified: bool  # sup bound below 1/2

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def lines(self) -> list[str]:
        out = [f"{k}={c.value:.10g} bound={c.bound:.10g} passed={str(c.passed).lower()}" for k, c in self.checks.items()]
        out.append(f"envelope_bound={self.envelope_bound:.10g}")
        out.append(f"jump_certified={str(self.jump_certified).lower()}")
        return out


def _left_half(result):
    """(t, u, slope) samples on [0, 1/2) from a shooting or minimiser result."""
    if isinstance(result, ShootResult):
        tr = result.trajectory
        keep = tr.t < 0.5
        return tr.t[keep], tr.u[keep], tr.du[keep], None
    u = np.asarray(result.u)
    n = len(u)
    h = 1.0 / (n - 1)
    t = np.arange(n) * h
    # edges entirely inside [0, 1/2): slope on the edge, u at its midpoint
    s = np.diff(u) / h
    mid_t = t[:-1] + 0.5 * h
    keep = t[1:] <= 0.5 - 0.5 * h
    return mid_t[keep], 0.5 * (u[1:] + u[:-1])[keep], s[keep], h


def check_bounds(result: Union[SolveResult, ShootResult], d: Density, lam: float, tol: float = 1e-6) -> BoundsReport:
    """Step-datum bounds: u(0) decay, sup over [0, 1/2) and the envelope identity.

    The envelope identity holds exactly for the ODE; for a grid solution it
    holds up to the discretisation error, so the tolerance there is 10 h.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    li, wi = lambda_inf(d), omega_inf(d)
    t, u, du, h = _left_half(result)
    u0 = float(result.u0 if isinstance(result, ShootResult) else result.u[0])
    checks = {}
    b0 = math.sqrt(2.0 * li / lam)
    checks["u0"] = Check(u0, b0, u0 <= b0 + tol)
    sup_bound = math.sqrt(2.0 * (li + wi) / lam) if math.isfinite(wi) else math.inf
    sup = float(np.max(u)) if len(u) else u0
    checks["sup_left"] = Check(sup, sup_bound, sup <= sup_bound + tol)
    env = np.sqrt(np.maximum(u0**2 + 2.0 / lam * d.omega(du), 0.0))
    env_err = float(np.max(np.abs(env - u))) if len(u) else 0.0
    env_tol = tol if h is None else max(tol, 10.0 * h)
    checks["envelope_identity"] = Check(env_err, env_tol, env_err <= env_tol)
    envelope_bound = math.sqrt(u0**2 + 2.0 * wi / lam) if math.isfinite(wi) else math.inf
    return BoundsReport(checks, envelope_bound, sup_bound < 0.5)


def check_symmetry(u, exclude_edges=()) -> float:
    """max_i |u_i + u_{n-1-i} - 1|, skipping nodes of the given edges and their mirrors."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    defect = np.abs(u + u[::-1] - 1.0)
    keep = np.ones(n, dtype=bool)
    for e in exclude_edges:
        for i in (e, e + 1):
            keep[i] = keep[n - 1 - i] = False
    return float(defect[keep].max()) if keep.any() else 0.0


def jump_edges(report: RegularityReport, n: int) -> list[int]:
    """Edge indices covered by the report's jumps (nearest edge to each location)."""
    h = 1.0 / (n - 1)
    return [int(round(t / h - 0.5)) for t, _ in report.jumps]


def step_signal(n: int = 1001) -> Signal:
    return gen_signal("step", {}, n)
