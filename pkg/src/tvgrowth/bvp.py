"""Shooting for the Neumann problem  u'' = lam (u - f) / F''(u'),  u'(0) = u'(1) = 0.

The ODE is integrated in the equivalent first-order form

    u' = (F')^{-1}(sigma),   sigma' = lam (u - f),   sigma(0) = 0,

which avoids dividing by F''(u') (tiny at steep slopes).  A third state
carries int_0^t f u' so that the first integral

    u' F'(u') - F(u') = lam/2 (u^2 - u(0)^2) - int_0^t f u'

can be checked along every trajectory.  Steps are classical RK4 on each piece
between breakpoints of f.  A trajectory "blows up"
once |sigma| reaches (1 - 1e-8) lambda_inf, i.e. the slope leaves every
bounded range.

The step is fixed in a stretched clock s with dt/ds = min(1, gap/(0.05
lambda_inf)), gap = lambda_inf - |sigma|: plain t-steps while the slope is
moderate, proportionally shorter ones as sigma approaches lambda_inf.  Each
piece ends with one exact t-step onto its right knot.

Root finding on u(0) runs as a batched bisection: each round evaluates a
fan of candidates in one vectorised integration and keeps the sub-bracket
with the sign change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .densities import Density, inv_deriv, lambda_inf
from .signals import StepDatum, as_datum

BLOWUP_REL = 1e-8
MAX_STEP = 1e-3
STRETCH = 0.05
LAYER_RATE = 0.025
U0_WIDTH = 1e-12
BISECT_ROUNDS = 100
FAN = 32
RESIDUAL_TOL = 1e-6
MIN_DT = 1e-15
MAX_STEPS = 2_000_000
LAND_ITERS = 60
LAND_TOL = 1e-15


class StepUnderflowError(RuntimeError):
    """The stretched clock stopped advancing t before blow-up was declared."""


class NoBracketError(RuntimeError):
    """No continuous solution: the shooting miss has no root over [0, 1].

    ``result`` holds the boundary trajectory the search converged to (for the
    step datum this is the left branch of the discontinuous minimiser).
    """

    def __init__(self, msg, result: Optional["ShootResult"] = None):
        super().__init__(msg)
        self.result = result


@dataclass
class Trajectory:
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    sigma: np.ndarray
    fdu: np.ndarray  # running int_0^t f u'
    lam: float
    blew_up: bool = False
    t_blowup: Optional[float] = None

    @property
    def u0(self) -> float:
        return float(self.u[0])

    def at(self, t) -> np.ndarray:
        """u at arbitrary times inside the integrated range (cubic Hermite)."""
        t = np.asarray(t, dtype=float)
        keep = np.concatenate(([True], np.diff(self.t) > 0))
        spline = CubicHermiteSpline(self.t[keep], self.u[keep], self.du[keep])
        if np.any(t > self.t[-1] + 1e-12) or np.any(t < -1e-12):
            raise ValueError("requested times outside the integrated range")
        return spline(np.clip(t, 0.0, self.t[-1]))

    def conservation_residual(self, d: Density) -> np.ndarray:
        lhs = d.omega(self.du)
        rhs = 0.5 * self.lam * (self.u**2 - self.u[0] ** 2) - self.lam * self.fdu
        return lhs - rhs


@dataclass
class ShootResult:
    u0: float
    trajectory: Trajectory
    residual: float
    blew_up: bool
    iterations: int = 0


def _knots(t_end: float, breakpoints, extra=()) -> list:
    return sorted({0.0, t_end, *(b for b in (*breakpoints, *extra) if 0.0 < b < t_end)})


class _Field:
    """Right-hand side on the stretched clock s, with dt/ds = min(1, gap / scale).

    gap = lambda_inf - |sigma| and scale = max(STRETCH lambda_inf, MAX_STEP |sigma'| / LAYER_RATE).
    The clock does not depend on the step actually used, so refinement is plain RK4.
    Near blow-up the t-step shrinks with the gap, so sigma never crosses the
    cap inside an unresolved step, and at the default step the exponential
    decay of the gap in s moves by at most LAYER_RATE per step.
    """

    def __init__(self, datum, d: Density, lam: float, a: float, b: float):
        self.d, self.lam = d, lam
        self.lam_inf = lambda_inf(d)
        self.cap = (1.0 - BLOWUP_REL) * self.lam_inf
        # sample f strictly inside the piece so a jump at a knot is seen from the correct side
        span = b - a
        self.lo, self.hi = a + 1e-12 * span, b - 1e-12 * span
        self.f = datum

    def slope(self, sig, active):
        over = np.abs(sig) >= self.cap
        active = active & ~over
        p = np.zeros_like(sig)
        if np.any(active):
            p[active] = inv_deriv(self.d, sig[active])
        return p, active

    def dt(self, t, u, sig, acc, active):
        """Derivatives with respect to t."""
        p, active = self.slope(sig, active)
        fv = self.f(np.clip(t, self.lo, self.hi))
        return np.ones_like(t), p, self.lam * (u - fv), fv * p, active

    def ds(self, t, u, sig, acc, active):
        one, p, ds_, fa, active = self.dt(t, u, sig, acc, active)
        # the gap decays like exp(-|sigma'| s / scale); keep that rate resolved per step
        scale = np.maximum(STRETCH * self.lam_inf, MAX_STEP * np.abs(ds_) / LAYER_RATE)
        c = np.minimum(1.0, np.maximum(self.lam_inf - np.abs(sig), 0.0) / scale)
        return c * one, c * p, c * ds_, c * fa, active


def _rk4(field_fn, y, h, active):
    """One classical RK4 step for the state tuple y = (t, u, sigma, acc)."""
    k1 = field_fn(*y, active)
    act = k1[-1]
    k2 = field_fn(*(yi + 0.5 * h * ki for yi, ki in zip(y, k1[:4])), act)
    act = k2[-1]
    k3 = field_fn(*(yi + 0.5 * h * ki for yi, ki in zip(y, k2[:4])), act)
    act = k3[-1]
    k4 = field_fn(*(yi + h * ki for yi, ki in zip(y, k3[:4])), act)
    act = k4[-1]
    new = tuple(yi + h / 6.0 * (a + 2 * b + 2 * c + e) for yi, a, b, c, e in zip(y, k1[:4], k2[:4], k3[:4], k4[:4]))
    return new, act


def _land(fld, y, b, step, over, crossed, iters=LAND_ITERS):
    """Shortened s-step that ends on t = b (Illinois regula falsi on its length).

    A plain t-step would do here only where dt/ds = 1; inside a steep layer it
    loses all accuracy, while t is a smooth increasing function of the s-length.
    """
    lo, hi = np.zeros_like(y[0]), np.full_like(y[0], step)
    g_lo, g_hi = y[0] - b, over[0] - b
    best, act = over, crossed.copy()
    side = np.zeros_like(y[0])
    todo = crossed.copy()
    for _ in range(iters):
        if not np.any(todo):
            break
        den = np.where(todo, g_hi - g_lo, 1.0)
        h = np.where(todo, lo - g_lo * (hi - lo) / den, 0.0)
        trial, act_t = _rk4(fld.ds, y, h, todo)
        g = trial[0] - b
        best = tuple(np.where(todo, ti, bi) for ti, bi in zip(trial, best))
        act = np.where(todo, act_t, act)
        up = todo & (g > 0)
        dn = todo & (g <= 0)
        hi, g_hi = np.where(up, h, hi), np.where(up, g, g_hi)
        lo, g_lo = np.where(dn, h, lo), np.where(dn, g, g_lo)
        g_lo = np.where(up & (side > 0), 0.5 * g_lo, g_lo)
        g_hi = np.where(dn & (side < 0), 0.5 * g_hi, g_hi)
        side = np.where(up, 1.0, np.where(dn, -1.0, side))
        todo &= act_t & (np.abs(g) > LAND_TOL * max(1.0, abs(b)))
    return best, act


def _rk4_run(datum, d, lam, u0, knots, step, record=False):
    """Integrate a batch of initial values through the pieces between ``knots``.

    Returns final (u, sigma, acc), the alive mask, blow-up times, and for
    ``record`` the samples of member 0.
    """
    u = np.array(u0, dtype=float, ndmin=1)
    m = u.shape[0]
    y = (np.full(m, knots[0]), u, np.zeros(m), np.zeros(m))
    alive = np.ones(m, dtype=bool)
    t_blow = np.full(m, np.nan)
    hist = []

    def sample(fld, y):
        p, _ = fld.slope(y[2][:1], alive[:1].copy())
        hist.append((y[0][0], y[1][0], p[0], y[2][0], y[3][0]))

    for a, b in zip(knots[:-1], knots[1:]):
        fld = _Field(datum, d, lam, a, b)
        if record and not hist:
            sample(fld, y)
        running = alive.copy()
        y = (np.where(alive, a, y[0]),) + y[1:]
        n_steps = 0
        while np.any(running):
            n_steps += 1
            new, act = _rk4(fld.ds, y, step, running)
            stuck = running & act & (new[0] - y[0] < MIN_DT * max(1.0, b))
            if np.any(stuck) or n_steps > MAX_STEPS:
                k = int(np.argmax(stuck)) if np.any(stuck) else int(np.argmax(running))
                raise StepUnderflowError(
                    f"t-step underflow at t={y[0][k]:.17g} (sigma={y[2][k]:.17g}, u0={u[k]:.17g})"
                )
            crossed = running & act & (new[0] >= b)
            blown = running & ~act
            t_blow[blown] = y[0][blown]
            alive &= ~blown
            if np.any(crossed):
                land, act2 = _land(fld, y, b, step, new, crossed)
                ok = crossed & act2
                t_blow[crossed & ~act2] = y[0][crossed & ~act2]
                alive &= ~(crossed & ~act2)
                new = tuple(np.where(ok, li, ni) for li, ni in zip(land, new))
                new = (np.where(ok, b, new[0]),) + new[1:]
            adv = running & alive
            y = tuple(np.where(adv, ni, yi) for ni, yi in zip(new, y))
            running = adv & ~crossed
            if record and alive[0] and (adv[0]):
                sample(fld, y)
        if not np.any(alive):
            break
    return y[1], y[2], y[3], alive, t_blow, hist


def integrate(
    f,
    d: Density,
    lam: float,
    u0: float,
    t_end: float = 1.0,
    max_step: float = MAX_STEP,
    knots=(),
) -> Trajectory:
    """RK4 trajectory from u(0) = u0, u'(0) = 0 up to ``t_end`` or blow-up.

    ``knots`` are extra step boundaries (e.g. grid nodes to sample on).
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if not 0.0 <= u0 <= 1.0:
        raise ValueError("u0 must lie in [0, 1]")
    datum = as_datum(f)
    ks = _knots(t_end, getattr(datum, "breakpoints", ()), knots)
    _, _, _, alive, t_blow, hist = _rk4_run(datum, d, lam, [u0], ks, max_step, record=True)
    t, u, du, sig, acc = (np.array(col) for col in zip(*hist))
    return Trajectory(t, u, du, sig, acc, lam, blew_up=not alive[0], t_blowup=None if alive[0] else float(t_blow[0]))


def _batched_bisection(miss, lo, hi, width=U0_WIDTH, rounds=BISECT_ROUNDS, fan=FAN):
    """Shrink [lo, hi] around a sign change of ``miss`` (vectorised)."""
    m_lo, m_hi = miss(np.array([lo, hi]))
    if m_lo == 0:
        return lo, lo, 0
    if m_hi == 0:
        return hi, hi, 0
    if np.sign(m_lo) == np.sign(m_hi):
        return None, None, 0
    sgn_lo = np.sign(m_lo)
    it = 0
    while hi - lo > width and it < rounds:
        it += 1
        pts = np.linspace(lo, hi, fan + 2)[1:-1]
        m = miss(pts)
        same = np.sign(m) == sgn_lo
        # first candidate on the far side of the root
        k = int(np.argmin(same)) if not np.all(same) else fan
        new_lo = pts[k - 1] if k > 0 else lo
        new_hi = pts[k] if k < fan else hi
        if np.any(m == 0):
            z = pts[np.flatnonzero(m == 0)[0]]
            return z, z, it
        lo, hi = new_lo, new_hi
    return lo, hi, it


def shoot(f, d: Density, lam: float, max_step: float = MAX_STEP, residual_tol: float = RESIDUAL_TOL, knots=()) -> ShootResult:
    """Find u(0) with u'(1) = 0 by bisection over [0, 1].

    The miss is sigma(1) = F'(u'(1)); a blow-up counts as +-infinity in the
    direction of the blow-up.  A root is accepted when the final bracket has
    finite misses of opposite sign on both ends, or when the residual is below
    ``residual_tol``; otherwise :class:`NoBracketError` is raised.
    """
    datum = as_datum(f)
    ks = _knots(1.0, getattr(datum, "breakpoints", ()))

    def run(u0s):
        return _rk4_run(datum, d, lam, u0s, ks, max_step)[:4]

    def miss(u0s):
        _, sig, _, alive = run(u0s)
        return np.where(alive, sig, np.sign(sig) * np.inf)

    a, b, it = _bracket(miss, 0.0, 1.0, lam)
    _, sig, _, alive = run(np.array([a, b]))
    u0 = a if not alive[1] or abs(sig[0]) <= abs(sig[1]) else b
    traj = integrate(datum, d, lam, u0, 1.0, max_step, knots)
    res = ShootResult(float(u0), traj, float(abs(traj.du[-1])) if not traj.blew_up else math.inf, traj.blew_up, it)
    if alive.all() or res.residual <= residual_tol:
        return res
    raise NoBracketError(
        f"no continuous solution at lambda={lam}: search closed on a blow-up boundary "
        f"(u0={a:.6g}, residual={res.residual:.3g})",
        res,
    )


def shoot_symmetric_step(d: Density, lam: float, max_step: float = MAX_STEP, residual_tol: float = RESIDUAL_TOL, knots=()) -> ShootResult:
    """Step datum only: integrate f = 0 on [0, 1/2) and aim at u(1/2) = 1/2.

    The full solution is u(t) = 1 - u(1 - t) on (1/2, 1].  After bisection the
    right end of the bracket decides the regime: if it reaches height 1/2
    before its slope blows up, a continuous solution lies inside the bracket;
    if it blows up below height 1/2, the solution jumps at t = 1/2 and
    :class:`NoBracketError` carries the left branch.
    """
    datum = StepDatum(0.5)
    ks = [0.0, 0.5]

    def run(u0s):
        return _rk4_run(datum, d, lam, u0s, ks, max_step)[:4]

    def miss(u0s):
        u, _, _, alive = run(u0s)
        return np.where(alive, u - 0.5, np.inf)

    a, b, it = _bracket(miss, 0.0, 0.5, lam)
    u_end, _, _, alive = run(np.array([a, b]))
    u0 = b if alive[1] and abs(u_end[1] - 0.5) < abs(u_end[0] - 0.5) else a
    traj = integrate(datum, d, lam, u0, 0.5, max_step, knots)
    res = ShootResult(float(u0), traj, float(abs(traj.u[-1] - 0.5)), traj.blew_up, it)
    # terminal height of a blown member is its height at blow-up
    if alive[1] or u_end[1] >= 0.5 - residual_tol:
        return res
    raise NoBracketError(
        f"no continuous solution at lambda={lam}: slope blows up at height {u_end[1]:.6g} < 1/2 "
        f"(u0={a:.6g}, residual={res.residual:.3g})",
        res,
    )


def _bracket(miss, lo, hi, lam):
    a, b, it = _batched_bisection(miss, lo, hi)
    if a is None:
        raise NoBracketError(f"shooting miss keeps one sign on [{lo}, {hi}] at lambda={lam}")
    return a, b, it


def full_symmetric_profile(res: ShootResult, t) -> np.ndarray:
    """Evaluate the symmetric-step solution on [0, 1] from its left half."""
    t = np.asarray(t, dtype=float)
    left = t <= 0.5
    out = np.empty_like(t)
    out[left] = res.trajectory.at(t[left])
    out[~left] = 1.0 - res.trajectory.at(1.0 - t[~left])
    return out
