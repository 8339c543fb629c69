"""Soliton dispersion law K(x) and velocity V for sharp and broadened lines.

Everything is in internal units (omega0 = c = kappa = 1):
K = k c / omega0, V = v / c, x = omega / omega0.  With the soliton
amplitude eliminated, the law reads

    K^2 = x^2 - 2 * delta_tilde * a,    V = K / (x - a),

where a = nu * s0 * <F> * tau0^2 (= x * Gamma).  The line shape only enters
through <F> and delta_tilde.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import lineshape
from ._numerics import bisect, golden_section, scan_grid, sign_change_brackets
from .core import LineShape, MediumParams, PulseParams, ValidationError, validate


class NonexistentSolution(ArithmeticError):
    """No soliton for these parameters (negative K^2, velocity pole, ...)."""


class Regime(str, enum.Enum):
    SUBLUMINAL = "subluminal"
    LUMINAL = "luminal"
    SUPERLUMINAL = "superluminal"


def regime_of(v: float) -> Regime:
    if v < 1.0:
        return Regime.SUBLUMINAL
    if v > 1.0:
        return Regime.SUPERLUMINAL
    return Regime.LUMINAL


@dataclass(frozen=True)
class DispersionSolution:
    k_dimless: float | None
    v_dimless: float | None
    gamma_factor: float
    g_factor: float | None
    exists: bool
    regime: Regime | None
    k_squared: float
    avg_f: float
    delta_tilde: float
    # formula value of V even when the soliton does not exist (None if K^2 < 0)
    v_raw: float | None = None
    reason: str = ""


@dataclass(frozen=True)
class CriticalWidthResult:
    x_at_min: float
    tau0_crit: float
    domain: tuple[float, float]


@dataclass(frozen=True)
class BranchRoots:
    x1: float | None
    x2: float | None
    finite_roots: tuple[float, ...]
    cubic_roots: tuple[float, ...]
    description: str = field(default="")


# --------------------------------------------------------------------------
# vectorised building blocks


def line_terms(medium: MediumParams, x, tau0):
    """Return (<F>, delta_tilde) broadcast over x and tau0."""
    x = np.asarray(x, dtype=float)
    tau0 = np.asarray(tau0, dtype=float)
    if LineShape(medium.lineshape) is LineShape.SHARP:
        delta = 1.0 - x
        avg_f = 1.0 / (1.0 + (delta * tau0) ** 2)
        return avg_f, delta + 0.0 * tau0
    ts = medium.omega0_tau_star
    avg_f, dt = lineshape.averages_analytic_array(tau0 / ts, ts)
    return avg_f + 0.0 * x, dt + 0.0 * x


def law_terms(medium: MediumParams, x, tau0, *, literal: bool = False):
    """Vectorised (K^2, velocity denominator, <F>, delta_tilde).

    ``literal`` swaps in the compact broadened closed form
    x^2 + (4 s0 nu omega0 tau*/pi) y^4 ln(y)/(y^2 - 1); it differs from the
    composed law both in sign and in the power of y.
    """
    x = np.asarray(x, dtype=float)
    tau0 = np.asarray(tau0, dtype=float)
    avg_f, dt = line_terms(medium, x, tau0)
    a = medium.nu * medium.s0 * avg_f * tau0**2
    if literal:
        if LineShape(medium.lineshape) is not LineShape.LORENTZIAN:
            raise ValidationError("the literal broadened law needs a Lorentzian line")
        ts = medium.omega0_tau_star
        y = tau0 / ts
        # ln(y)/(y^2 - 1) = [ln(1/y)/(1 - y)] / (1 + y)
        shape = lineshape._log_ratio(y) / (1.0 + y)
        k2 = x**2 + (4.0 * medium.s0 * medium.nu * ts / math.pi) * y**4 * shape
    else:
        k2 = x**2 - 2.0 * dt * a
    return k2, x - a, avg_f, dt


def solve_grid(medium: MediumParams, x, tau0, *, literal: bool = False):
    """Evaluate the law on a grid; returns arrays k, v, exists (nan where absent)."""
    k2, den, avg_f, dt = law_terms(medium, x, tau0, literal=literal)
    k2, den = np.broadcast_arrays(k2, den)
    ok_k = k2 >= 0
    k = np.sqrt(np.where(ok_k, k2, np.nan))
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(den != 0, k / den, np.nan)
    exists = ok_k & (den != 0) & (v >= 0) & np.isfinite(v)
    return {
        "k": np.where(exists, k, np.nan),
        "v": np.where(exists, v, np.nan),
        "v_raw": v,
        "exists": exists,
        "k_squared": k2,
        "avg_f": avg_f,
        "delta_tilde": dt,
    }


# --------------------------------------------------------------------------
# scalar operations


def line_averages(medium: MediumParams, pulse: PulseParams) -> lineshape.LineshapeAverages:
    if LineShape(medium.lineshape) is LineShape.SHARP:
        return lineshape.sharp_line_averages(pulse.detuning, pulse.tau_p)
    return lineshape.averages_analytic(pulse.tau_p, medium.omega0_tau_star)


def gamma_from_soliton(medium: MediumParams, pulse: PulseParams, avg_f: float) -> float:
    """Moving-frame factor Gamma = nu s0 <F> tau0^2 / x fixed by the soliton amplitude."""
    validate(medium, pulse)
    return medium.nu * medium.s0 * avg_f * pulse.tau0**2 / pulse.x


def _k(k2: float) -> float:
    if k2 < 0:
        raise NonexistentSolution("no propagating carrier (K^2<0)")
    return math.sqrt(k2)


def _v(k: float, den: float) -> float:
    if den == 0:
        raise NonexistentSolution("velocity pole")
    v = k / den
    if v < 0:
        raise NonexistentSolution("negative velocity: no forward soliton")
    return v


def _require(medium, shape):
    if LineShape(medium.lineshape) is not shape:
        raise ValidationError(f"operation requires a {shape.value} line")


def sharp_line_K(medium: MediumParams, pulse: PulseParams) -> float:
    validate(medium, pulse)
    _require(medium, LineShape.SHARP)
    k2, _, _, _ = law_terms(medium, pulse.x, pulse.tau0)
    return _k(float(k2))


def sharp_line_V(medium: MediumParams, pulse: PulseParams) -> float:
    k = sharp_line_K(medium, pulse)
    _, den, _, _ = law_terms(medium, pulse.x, pulse.tau0)
    return _v(k, float(den))


def broadened_K(medium: MediumParams, pulse: PulseParams, *, literal: bool = False) -> float:
    validate(medium, pulse)
    _require(medium, LineShape.LORENTZIAN)
    k2, _, _, _ = law_terms(medium, pulse.x, pulse.tau0, literal=literal)
    return _k(float(k2))


def broadened_V(medium: MediumParams, pulse: PulseParams, *, literal: bool = False) -> float:
    k = broadened_K(medium, pulse, literal=literal)
    _, den, _, _ = law_terms(medium, pulse.x, pulse.tau0, literal=literal)
    return _v(k, float(den))


def solve(medium: MediumParams, pulse: PulseParams, *, literal: bool = False) -> DispersionSolution:
    """Full dispersion solution for one (medium, pulse) pair."""
    validate(medium, pulse)
    k2, den, avg_f, dt = (float(v) for v in law_terms(medium, pulse.x, pulse.tau0, literal=literal))
    gamma = medium.nu * medium.s0 * avg_f * pulse.tau0**2 / pulse.x
    common = dict(gamma_factor=gamma, k_squared=k2, avg_f=avg_f, delta_tilde=dt)
    try:
        k = _k(k2)
    except NonexistentSolution as exc:
        return DispersionSolution(None, None, g_factor=None, exists=False, regime=None,
                                  reason=str(exc), **common)
    g = (pulse.x**2 - k2) / (2.0 * pulse.x)
    v_raw = k / den if den != 0 else None
    try:
        v = _v(k, den)
    except NonexistentSolution as exc:
        return DispersionSolution(k, None, g_factor=g, exists=False, regime=None,
                                  v_raw=v_raw, reason=str(exc), **common)
    return DispersionSolution(k, v, g_factor=g, exists=True, regime=regime_of(v),
                              v_raw=v, **common)


def alt_dispersion_K(x: float, v: float, delta_tilde: float, branch: int = 1) -> float:
    """Dispersion law solved for K at given velocity.

    K = dt/V +/- sqrt((x - dt)^2 + dt^2 (1/V^2 - 1)), the two roots of
    K^2 - 2 dt K / V + 2 x dt - x^2 = 0.  The minus root is taken from the
    product of roots so it keeps full precision.
    """
    if not (v > 0 and math.isfinite(v)):
        raise ValidationError("V must be positive and finite")
    rad = (x - delta_tilde) ** 2 + delta_tilde**2 * (1.0 / v**2 - 1.0)
    if rad < 0:
        raise NonexistentSolution("negative radicand in the alternate dispersion form")
    b = delta_tilde / v
    s = math.copysign(math.sqrt(rad), b) if b != 0 else math.sqrt(rad)
    big = b + s
    small = (2.0 * x * delta_tilde - x * x) / big if big != 0 else b - s
    plus, minus = (big, small) if s >= 0 else (small, big)
    return plus if branch > 0 else minus


def existence_condition(k: float, x: float, v: float, s0: int) -> bool:
    """(1 - K/(x V)) s0 > 0, i.e. Gamma s0 > 0."""
    if not (v > 0 and x > 0):
        raise ValidationError("existence condition needs V > 0 and x > 0")
    return (1.0 - k / (x * v)) * s0 > 0


def expected_regime(s0: int) -> Regime:
    """Regime the sign argument assigns: absorbers slow, amplifiers fast."""
    return Regime.SUBLUMINAL if s0 < 0 else Regime.SUPERLUMINAL


# --------------------------------------------------------------------------
# stopping: critical widths and branch roots


def _critical_denominator(x, nu):
    # (x - 1), not (1 - x): this is where K^2 changes sign (tau0_crit ~ 1.94 at nu = 1)
    return 2.0 * nu * (x - 1.0) - (x - 1.0) ** 2 * x**2


def critical_width(x: float, nu: float) -> float:
    """Pulse width at which the absorber (s0 = -1) sharp-line K^2 vanishes."""
    if not nu > 0:
        raise ValidationError("nu must be positive")
    if not x > 1:
        raise ValidationError("no finite stopping width at this x (stopping needs x > 1)")
    den = _critical_denominator(x, nu)
    if den <= 0:
        raise ValidationError("no finite stopping width at this x")
    return math.sqrt(x * x / den)


def cubic_stopping_roots(nu: float) -> tuple[float, ...]:
    """Positive real roots of x^3 - x^2 - 2 nu = 0 (long-pulse limit of K = 0)."""
    roots = np.roots([1.0, -1.0, 0.0, -2.0 * nu])
    real = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-12 and r.real > 0)
    return tuple(real)


def minimize_critical_width(nu: float, tol: float = 1e-8) -> CriticalWidthResult:
    """Smallest stopping width over x, by golden section on (1, x_cubic)."""
    if not nu > 0:
        raise ValidationError("nu must be positive")
    # the denominator is positive exactly between 1 and the cubic root
    hi = max(cubic_stopping_roots(nu))
    span = hi - 1.0
    x, t = golden_section(lambda v: critical_width(v, nu), 1.0 + 1e-9 * span, hi - 1e-9 * span, tol=tol)
    return CriticalWidthResult(x_at_min=x, tau0_crit=t, domain=(1.0, hi))


def stopping_roots(nu: float, tau0: float, *, s0: int = -1, x_max: float = 5.0,
                   n_scan: int = 2000) -> BranchRoots:
    """Carrier frequencies where the sharp-line K vanishes at width tau0."""
    medium = MediumParams(nu=nu, s0=s0)
    grid = scan_grid(x_max, n_scan)
    k2 = law_terms(medium, grid, tau0)[0]
    f = lambda v: float(law_terms(medium, v, tau0)[0])  # noqa: E731
    roots = tuple(bisect(f, a, b, tol=1e-10) for a, b in sign_change_brackets(grid, k2))
    x1 = roots[0] if roots else None
    x2 = roots[1] if len(roots) > 1 else None
    if len(roots) >= 2:
        desc = f"K exists on (0, {x1:.6g}] and [{x2:.6g}, inf); gap in between"
    elif roots:
        desc = f"single zero of K at x = {x1:.6g}"
    else:
        desc = "K exists for all scanned x"
    return BranchRoots(x1, x2, roots, cubic_stopping_roots(nu), desc)


# --------------------------------------------------------------------------
# amplifier: lowest superluminal carrier frequency


def superluminal_threshold(medium: MediumParams, tau0: float, *, literal: bool = False,
                           x_max: float = 5.0, n_scan: int = 2000) -> float:
    """Lower edge of the superluminal interval that extends to x_max (s0 = +1).

    Above the returned x every scanned point has an existing soliton with
    V > 1.  The edge is either a V = 1 crossing or a velocity pole; it is
    refined by bisection on the predicate to 1e-10.
    """
    if medium.s0 != 1:
        raise ValidationError("superluminal threshold is defined for s0 = +1")
    grid = scan_grid(x_max, n_scan)

    def fast(x):
        r = solve_grid(medium, x, tau0, literal=literal)
        return r["exists"] & (np.nan_to_num(r["v"], nan=0.0) > 1.0)

    ok = fast(grid)
    if not ok[-1]:
        raise NonexistentSolution("no superluminal crossing found in scan range")
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        raise NonexistentSolution("no superluminal crossing found in scan range")
    i = bad[-1]
    return bisect(lambda v: bool(fast(v)), float(grid[i]), float(grid[i + 1]), tol=1e-10)


def superluminal_estimate(nu: float, tau0: float, avg_f: float) -> float:
    """Simple estimate 1/3 + (nu/6) tau0^2 <F> (kept for comparison only)."""
    return 1.0 / 3.0 + nu * tau0**2 * avg_f / 6.0


def sharp_superluminal_condition(x, nu: float, tau0: float):
    """x - 1/2 - a/4 for the sharp line, a = nu <F> tau0^2; V > 1 where positive.

    Derived from K^2 > (x - a)^2 with delta_tilde = 1 - x (valid where x > a).
    """
    a = nu * tau0**2 / (1.0 + ((1.0 - np.asarray(x)) * tau0) ** 2)
    return np.asarray(x) - 0.5 - a / 4.0
