"""Independent reference computations used by the tests (no package code)."""

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq


def phi3_travel_time(lam, u0, u_end=0.5):
    """Time for the step-datum trajectory of Phi_3 to climb from u0 to u_end.

    Uses the first integral: p^2 / (2 (1+p)^2) = lam/2 (u^2 - u0^2), so with
    s = sqrt(lam (u^2 - u0^2)) the slope is p = s / (1 - s) and dt/du = 1/p.
    """

    def integrand(u):
        s = math.sqrt(max(lam * (u * u - u0 * u0), 0.0))
        return (1.0 - s) / s if 0 < s < 1 else 0.0

    return quad(integrand, u0, u_end, limit=400)[0]


def phi3_u0(lam):
    """u(0) of the continuous step-datum solution for Phi_3 (lam below critical)."""
    lo = math.sqrt(max(0.0, 0.25 - 1.0 / lam)) + 1e-12
    return brentq(lambda a: phi3_travel_time(lam, a) - 0.5, lo, 0.4999, xtol=1e-14)


def phi3_lambda_crit():
    """lam at which the trajectory reaching slope infinity at height 1/2 arrives at t = 1/2."""

    def g(lam):
        return phi3_travel_time(lam, math.sqrt(0.25 - 1.0 / lam)) - 0.5

    return brentq(g, 4.01, 8.0, xtol=1e-12)


def lambda_mu_quad(mu, c1=1.0):
    return quad(lambda s: s * (1.0 + s) ** (-mu), 1.0, np.inf, epsabs=1e-13, epsrel=1e-13)[0] / c1


def nagumo_crossing():
    """mu > 2 where lambda_mu = 1/(mu - 1), from quadrature."""
    return brentq(lambda m: lambda_mu_quad(m) - 1.0 / (m - 1.0), 2.2, 5.0, xtol=1e-12)


def phi_closed(mu, r):
    """Phi_mu from the double-integral definition."""
    return quad(lambda s: quad(lambda t: (1.0 + t) ** (-mu), 0.0, s)[0], 0.0, r)[0]
