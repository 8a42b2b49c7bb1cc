"""Linear-growth densities F and their analytic thresholds.

A density is an even, strictly convex C^2 function with F(0) = 0 and bounded
derivative.  Two families ship with closed forms:

* ``PhiMu``  -- the mu-elliptic density Phi_mu(|p|), mu > 1;
* ``FEps``   -- the regularised TV density sqrt(eps^2 + p^2) - eps.

``CustomDensity`` wraps user callables; its thresholds are obtained by the
numerical limit protocol in :func:`lambda_inf` / :func:`omega_inf`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

# numerical-limit protocol for user densities
LIMIT_KMAX = 60
LIMIT_TOL = 1e-9
LIMIT_CAP = 1e12

CONJ_GUARD = 1e-12
ROOT_TOL = 1e-14
ROOT_MAXITER = 200


class DensityError(ValueError):
    """Invalid density parameters or an operation the density cannot support."""


class DomainError(DensityError):
    """Argument outside the range of F' (|q| >= lambda_inf)."""


class NonConvergenceError(RuntimeError):
    """A numerical limit or root search did not settle."""


@dataclass(frozen=True)
class Ellipticity:
    """mu-ellipticity descriptor: c1 (1+|p|)^-mu <= F''(p) <= c2 (1+|p|)^-1."""

    mu: float
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if not self.mu > 1:
            raise DensityError(f"ellipticity exponent must exceed 1, got {self.mu}")
        if not (self.c1 > 0 and self.c2 > 0):
            raise DensityError("ellipticity constants must be positive")


class Density:
    """Base class.  Subclasses implement ``value``, ``deriv`` and ``deriv2``.

    Families with closed forms additionally override ``_lambda_inf``,
    ``_omega_inf`` and ``_inv_deriv``; returning ``None`` (or raising
    ``NotImplementedError`` for the inverse) falls back to numerics.
    """

    name: str = "density"
    ellipticity: Optional[Ellipticity] = None

    def value(self, p):
        raise NotImplementedError

    def deriv(self, p):
        raise NotImplementedError

    def deriv2(self, p):
        raise NotImplementedError

    def omega(self, p):
        """p F'(p) - F(p); nonnegative and even."""
        p = np.asarray(p, dtype=float)
        return p * self.deriv(p) - self.value(p)

    def _lambda_inf(self) -> Optional[float]:
        return None

    def _omega_inf(self) -> Optional[float]:
        return None

    def _inv_deriv(self, q):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def __call__(self, p):
        return self.value(p)


@dataclass(frozen=True)
class PhiMu(Density):
    """Phi_mu(|p|) = int_0^|p| int_0^s (1+t)^-mu dt ds."""

    mu: float
    name: str = field(default="phi-mu", init=False)

    def __post_init__(self):
        if not self.mu > 1:
            raise DensityError(f"phi-mu requires mu > 1, got {self.mu}")

    @property
    def ellipticity(self) -> Ellipticity:
        return Ellipticity(self.mu, 1.0, 1.0)

    def value(self, p):
        r = np.abs(np.asarray(p, dtype=float))
        m = self.mu
        if m == 2.0:
            return r - np.log1p(r)
        # ((1+r)^(2-mu) - 1) / (mu-2) written to avoid cancellation near mu = 2
        tail = np.expm1((2.0 - m) * np.log1p(r)) / (m - 2.0)
        return (r + tail) / (m - 1.0)

    def deriv(self, p):
        p = np.asarray(p, dtype=float)
        m = self.mu
        return -np.sign(p) * np.expm1((1.0 - m) * np.log1p(np.abs(p))) / (m - 1.0)

    def deriv2(self, p):
        return np.power(1.0 + np.abs(np.asarray(p, dtype=float)), -self.mu)

    def omega(self, p):
        r = np.abs(np.asarray(p, dtype=float))
        if self.mu == 2.0:
            return np.log1p(r) - r / (1.0 + r)
        if self.mu == 3.0:
            return 0.5 * (r / (1.0 + r)) ** 2
        return super().omega(r)

    def _lambda_inf(self):
        return 1.0 / (self.mu - 1.0)

    def _omega_inf(self):
        m = self.mu
        return 1.0 / ((m - 1.0) * (m - 2.0)) if m > 2 else math.inf

    def _inv_deriv(self, q):
        q = np.asarray(q, dtype=float)
        m = self.mu
        # (1+p)^(1-mu) = 1 - (mu-1)|q|
        r = np.expm1(-np.log1p(-(m - 1.0) * np.abs(q)) / (m - 1.0))
        return np.sign(q) * r

    def params(self):
        return {"mu": self.mu}


@dataclass(frozen=True)
class FEps(Density):
    """sqrt(eps^2 + p^2) - eps."""

    eps: float
    name: str = field(default="f-eps", init=False)

    def __post_init__(self):
        if not self.eps > 0:
            raise DensityError(f"f-eps requires eps > 0, got {self.eps}")

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return p * p / (np.hypot(self.eps, p) + self.eps)

    def deriv(self, p):
        p = np.asarray(p, dtype=float)
        return p / np.hypot(self.eps, p)

    def deriv2(self, p):
        p = np.asarray(p, dtype=float)
        return self.eps**2 / np.hypot(self.eps, p) ** 3

    def omega(self, p):
        # eps - eps^2 / sqrt(eps^2 + p^2)
        p = np.asarray(p, dtype=float)
        s = np.hypot(self.eps, p)
        return self.eps * (s - self.eps) / s

    def _lambda_inf(self):
        return 1.0

    def _omega_inf(self):
        return self.eps

    def _inv_deriv(self, q):
        q = np.asarray(q, dtype=float)
        return self.eps * q / np.sqrt((1.0 - q) * (1.0 + q))

    def params(self):
        return {"eps": self.eps}


@dataclass(frozen=True)
class CustomDensity(Density):
    """Density from user callables (vectorised over numpy arrays)."""

    F: Callable
    dF: Callable
    d2F: Callable
    name: str = "custom"
    ellipticity: Optional[Ellipticity] = None

    def value(self, p):
        return self.F(np.asarray(p, dtype=float))

    def deriv(self, p):
        return self.dF(np.asarray(p, dtype=float))

    def deriv2(self, p):
        return self.d2F(np.asarray(p, dtype=float))


def make_phi_mu(mu: float) -> PhiMu:
    return PhiMu(float(mu))


def make_f_eps(eps: float) -> FEps:
    return FEps(float(eps))


def make_density(family: str, **params) -> Density:
    """Build a density from its CLI name (``phi-mu`` or ``f-eps``)."""
    family = family.lower().replace("_", "-")
    if family in ("phi-mu", "phi", "phimu"):
        if params.get("mu") is None:
            raise DensityError("phi-mu needs --mu")
        return make_phi_mu(params["mu"])
    if family in ("f-eps", "feps", "eps"):
        if params.get("eps") is None:
            raise DensityError("f-eps needs --eps")
        return make_f_eps(params["eps"])
    raise DensityError(f"unknown density family {family!r}")


# ---------------------------------------------------------------------------
# limits at infinity


def _limit_sequence(values_at, cap=LIMIT_CAP):
    """Run the geometric protocol p = 2^k; return (status, value).

    status is "converged", "diverged" or "stalled".
    """
    vals = []
    for k in range(LIMIT_KMAX + 1):
        v = float(values_at(2.0**k))
        if not math.isfinite(v) or abs(v) > cap:
            return "diverged", math.inf
        vals.append(v)
        if len(vals) >= 3 and max(vals[-3:]) - min(vals[-3:]) < LIMIT_TOL:
            a, b, c = vals[-3:]
            denom = (c - b) - (b - a)
            # Aitken extrapolation only when it is a small correction
            if denom != 0 and abs((c - b) ** 2 / denom) < LIMIT_TOL:
                return "converged", c - (c - b) ** 2 / denom
            return "converged", c
    diffs = np.diff(vals[-10:])
    if np.all(diffs > 0):
        return "diverged", math.inf
    return "stalled", vals[-1]


def lambda_inf(d: Density) -> float:
    """lim_{p->inf} F'(p)."""
    closed = d._lambda_inf()
    if closed is not None:
        return closed
    status, v = _limit_sequence(lambda p: d.deriv(p))
    if status != "converged":
        raise NonConvergenceError(f"F' has not stabilised by p = 2^{LIMIT_KMAX}")
    return v


def _omega_by_quadrature(d: Density):
    """omega(p) = int_0^p q F''(q) dq, accumulated dyadically (no cancellation)."""
    cache = {"p": 0.0, "acc": 0.0}

    def omega_at(p):
        a = cache["p"]
        piece, _ = integrate.quad(lambda q: q * float(d.deriv2(q)), a, p, limit=200)
        cache["p"], cache["acc"] = p, cache["acc"] + piece
        return cache["acc"]

    return omega_at


def omega_inf(d: Density) -> float:
    """lim_{p->inf} p F'(p) - F(p); may be +inf."""
    closed = d._omega_inf()
    if closed is not None:
        return closed
    status, v = _limit_sequence(_omega_by_quadrature(d))
    if status == "stalled":
        raise NonConvergenceError("omega(p) neither converged nor grew monotonically")
    return v


def lambda_mu(d: Density) -> float:
    """Nagumo-type bound (1/c1) int_1^inf s (1+s)^-mu ds."""
    e = d.ellipticity
    if e is None:
        raise DensityError(f"{d.name} carries no mu-ellipticity descriptor")
    m = e.mu
    if m <= 2:
        return math.inf
    # antiderivative in x = 1+s: x^(2-mu)/(2-mu) - x^(1-mu)/(1-mu), evaluated on [2, inf)
    return (2.0 ** (2 - m) / (m - 2) - 2.0 ** (1 - m) / (m - 1)) / e.c1


def nagumo_crossing(lo: float = 2.0 + 1e-6, hi: float = 10.0, tol: float = 1e-10) -> float:
    """Exponent mu > 2 where lambda_mu(Phi_mu) equals lambda_inf(Phi_mu), by bisection.

    Below it the existence range lambda < lambda_mu reaches past lambda_inf.
    """

    def gap(m):
        d = PhiMu(m)
        return lambda_mu(d) - lambda_inf(d)

    g_lo = gap(lo)
    if g_lo * gap(hi) > 0:
        raise NonConvergenceError(f"no sign change of lambda_mu - lambda_inf on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# inverse derivative and conjugate


def _check_domain(d: Density, q, lam_inf):
    q = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(q)) or np.any(np.abs(q) >= lam_inf):
        raise DomainError(f"|q| must be below lambda_inf = {lam_inf}")
    return q


def _inv_deriv_scalar(d: Density, q: float, lam_inf: float) -> float:
    if q == 0.0:
        return 0.0
    sgn = 1.0 if q > 0 else -1.0
    q = abs(q)
    lo, hi = 0.0, 1.0
    while float(d.deriv(hi)) < q:
        lo, hi = hi, 2.0 * hi
        if hi > 2.0**1000:
            raise NonConvergenceError("no bracket for F'(p) = q")
    p = 0.5 * (lo + hi)
    for _ in range(ROOT_MAXITER):
        r = float(d.deriv(p)) - q
        if abs(r) <= ROOT_TOL * max(1.0, q):
            break
        if r > 0:
            hi = p
        else:
            lo = p
        slope = float(d.deriv2(p))
        step = p - r / slope if slope > 0 else None
        # Newton when it stays inside the bracket, bisection otherwise
        p = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-16 * hi:
            break
    return sgn * p


def inv_deriv(d: Density, q):
    """The unique p with F'(p) = q, for |q| < lambda_inf."""
    lam = lambda_inf(d)
    q = _check_domain(d, q, lam)
    try:
        return d._inv_deriv(q)
    except NotImplementedError:
        pass
    out = np.vectorize(lambda x: _inv_deriv_scalar(d, float(x), lam), otypes=[float])(q)
    return out if out.ndim else float(out)


def conjugate(d: Density, q):
    """F*(q) = q p - F(p) with p = (F')^{-1}(q).

    Within a relative 1e-12 of the boundary the limit value omega_inf is
    returned instead of evaluating the (exploding) inverse.
    """
    lam = lambda_inf(d)
    q0 = _check_domain(d, q, lam)
    q = np.atleast_1d(q0)
    inner = np.abs(q) <= (1.0 - CONJ_GUARD) * lam
    out = np.empty_like(q)
    if np.any(inner):
        # q p - F(p) = omega(p) at the maximiser
        out[inner] = d.omega(np.asarray(inv_deriv(d, q[inner]), dtype=float))
    if not np.all(inner):
        out[~inner] = omega_inf(d)
    return out if q0.ndim else float(out[0])


# ---------------------------------------------------------------------------
# threshold report


@dataclass(frozen=True)
class ThresholdReport:
    lambda_inf: float
    omega_inf: float
    lambda_mu: Optional[float]
    crit_bracket: Optional[tuple]

    def lines(self) -> list[str]:
        def fmt(x):
            return "inf" if x is not None and math.isinf(x) else repr(x)

        br = (
            "not-applicable"
            if self.crit_bracket is None
            else f"{self.crit_bracket[0]!r},{self.crit_bracket[1]!r}"
        )
        return [
            f"lambda_inf={fmt(self.lambda_inf)}",
            f"omega_inf={fmt(self.omega_inf)}",
            f"lambda_mu={'not-applicable' if self.lambda_mu is None else fmt(self.lambda_mu)}",
            f"crit_bracket={br}",
        ]


def thresholds(d: Density) -> ThresholdReport:
    li = lambda_inf(d)
    wi = omega_inf(d)
    lm = lambda_mu(d) if d.ellipticity is not None else None
    bracket = None if math.isinf(wi) else (max(li, 8.0 * wi), 8.0 * (li + wi))
    return ThresholdReport(li, wi, lm, bracket)
