"""Lorentzian line shape, spectral response and their averages.

Averages run over the one-sided detuning range [0, inf), on which the line
shape is normalised to unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import NumericalError, ValidationError

# |y - 1| below this uses the series for log(1/y)/(1 - y)
SERIES_BAND = 1e-6


class QuadratureError(NumericalError):
    pass


@dataclass(frozen=True)
class LineshapeAverages:
    avg_f: float
    delta_tilde: float

    @property
    def avg_delta_f(self) -> float:
        return self.delta_tilde * self.avg_f


def _positive(name, value):
    if not (np.all(np.isfinite(value)) and np.all(np.asarray(value) > 0)):
        raise ValidationError(f"{name} must be positive")


def lorentzian_g(delta, tau_star):
    """Line-shape density (2 tau*/pi) / (1 + delta^2 tau*^2)."""
    _positive("tau_star", tau_star)
    delta = np.asarray(delta, dtype=float)
    out = (2.0 * tau_star / math.pi) / (1.0 + (delta * tau_star) ** 2)
    return out if out.ndim else float(out)


def lorentzian_cdf(delta, tau_star):
    """Mass of the line shape on [0, delta]."""
    return (2.0 / math.pi) * np.arctan(np.asarray(delta, dtype=float) * tau_star)


def spectral_response_f(delta, tau_p):
    """F = 1 / (1 + delta^2 tau_p^2)."""
    _positive("tau_p", tau_p)
    delta = np.asarray(delta, dtype=float)
    out = 1.0 / (1.0 + (delta * tau_p) ** 2)
    return out if out.ndim else float(out)


def _log_ratio(y):
    """log(1/y) / (1 - y), continuous through y = 1 (value 1)."""
    y = np.asarray(y, dtype=float)
    eps = 1.0 - y
    near = np.abs(eps) < SERIES_BAND
    safe = np.where(near, 0.5, y)
    direct = -np.log(safe) / np.where(near, 0.5, 1.0 - safe)
    # -log(1 - e)/e = 1 + e/2 + e^2/3 + e^3/4 + ...
    series = 1.0 + eps / 2.0 + eps**2 / 3.0 + eps**3 / 4.0
    out = np.where(near, series, direct)
    return out if out.ndim else float(out)


def averages_analytic(tau_p: float, tau_star: float) -> LineshapeAverages:
    """Closed-form <F> and mean detuning for the Lorentzian line.

    <F> = 1/(1+y) and delta_tilde = (2/(pi tau*)) ln(tau*/tau_p)/(1-y) with
    y = tau_p/tau*.  <delta F> follows as their product.
    """
    _positive("tau_p", tau_p)
    _positive("tau_star", tau_star)
    y = tau_p / tau_star
    return LineshapeAverages(
        avg_f=1.0 / (1.0 + y),
        delta_tilde=2.0 / (math.pi * tau_star) * _log_ratio(y),
    )


def averages_analytic_array(y, tau_star):
    """Vectorised (avg_f, delta_tilde) over an array of y = tau_p/tau*."""
    y = np.asarray(y, dtype=float)
    return 1.0 / (1.0 + y), 2.0 / (math.pi * tau_star) * _log_ratio(y)


def lineshape_average(func, tau_star: float, *, rtol: float = 1e-10, breaks=()):
    """Integrate func(delta) * G(delta) over [0, inf) adaptively.

    The half line is mapped onto [0, 1) with u = d tau*/(1 + d tau*); the
    Lorentzian weight times the Jacobian then reduces to (2/pi)/(1 - 2u + 2u^2).
    ``breaks`` are detunings where the integrand changes scale.
    """
    _positive("tau_star", tau_star)

    def integrand(u):
        if u >= 1.0:
            return 0.0
        d = u / ((1.0 - u) * tau_star)
        return func(d) * (2.0 / math.pi) / (1.0 - 2.0 * u + 2.0 * u * u)

    pts = sorted({b * tau_star / (1.0 + b * tau_star) for b in breaks if b > 0})
    edges = [0.0, *pts, 1.0]
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rtol, limit=400)
        total += val
        err += e
    if err > max(10 * rtol * abs(total), 1e-14):
        raise QuadratureError(
            f"quadrature did not converge: estimate {total!r}, error {err:.3e}"
        )
    return total


def averages_quadrature(tau_p: float, tau_star: float) -> LineshapeAverages:
    """Numerical <F> and <delta F> by adaptive quadrature (independent oracle)."""
    _positive("tau_p", tau_p)
    _positive("tau_star", tau_star)
    knee = (1.0 / tau_p, 1.0 / tau_star)
    avg_f = lineshape_average(lambda d: 1.0 / (1.0 + (d * tau_p) ** 2), tau_star, breaks=knee)
    avg_df = lineshape_average(lambda d: d / (1.0 + (d * tau_p) ** 2), tau_star, breaks=knee)
    return LineshapeAverages(avg_f=avg_f, delta_tilde=avg_df / avg_f)


def sharp_line_averages(delta: float, tau_p: float) -> LineshapeAverages:
    """Delta-function line: <F> = F(delta) and delta_tilde = delta."""
    return LineshapeAverages(avg_f=spectral_response_f(delta, tau_p), delta_tilde=float(delta))
