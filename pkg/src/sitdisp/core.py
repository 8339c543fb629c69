"""Nondimensional parameter types shared by every module.

Internal units: omega0 = 1 (frequency), c = 1 (speed), kappa = 1 (field
coupling).  Times are in 1/omega0, lengths in c/omega0, the field envelope
in omega0/kappa.  With these units the dipole constant gamma equals 4*nu.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class ValidationError(ValueError):
    """A parameter violates one of the documented invariants."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, instability, ...)."""


class LineShape(str, enum.Enum):
    SHARP = "sharp"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class Units:
    omega0: float = 1.0
    c: float = 1.0
    kappa: float = 1.0


UNITS = Units()


def nondimensionalize() -> Units:
    """Return the fixed internal unit convention."""
    return UNITS


def peak_amplitude(tau0: float) -> float:
    """Soliton peak field E0 from E0 * tau_p = 4 / kappa."""
    if not tau0 > 0:
        raise ValidationError("tau0 must be positive")
    return 4.0 / (UNITS.kappa * tau0)


@dataclass(frozen=True)
class MediumParams:
    """Material constants.

    ``omega0_tau_star`` is the Lorentzian broadening time in units of
    1/omega0; it must be ``None`` for a sharp line.
    """

    nu: float
    s0: int = -1
    lineshape: LineShape = LineShape.SHARP
    omega0_tau_star: float | None = None

    @property
    def tau_star(self) -> float | None:
        return self.omega0_tau_star

    @property
    def gamma(self) -> float:
        # nu = gamma * kappa / (4 * omega0)
        return 4.0 * self.nu * UNITS.omega0 / UNITS.kappa


@dataclass(frozen=True)
class PulseParams:
    x: float
    tau0: float

    @property
    def tau_p(self) -> float:
        return self.tau0 / UNITS.omega0

    @property
    def detuning(self) -> float:
        """Sharp-line detuning omega0 - omega = 1 - x."""
        return 1.0 - self.x

    def y(self, medium: MediumParams) -> float:
        if medium.omega0_tau_star is None:
            raise ValidationError("y = tau_p/tau_star needs omega0_tau_star")
        return self.tau0 / medium.omega0_tau_star


def _finite(v) -> bool:
    try:
        return math.isfinite(v)
    except TypeError:
        return False


def validate_medium(medium: MediumParams) -> MediumParams:
    # nu = 0 is kept as the uncoupled (vacuum) reference medium
    if not (_finite(medium.nu) and medium.nu >= 0):
        raise ValidationError("nu must be positive (or 0 for an uncoupled medium)")
    if medium.s0 not in (-1, 1) or isinstance(medium.s0, bool):
        raise ValidationError("s0 must be exactly -1 or +1")
    try:
        shape = LineShape(medium.lineshape)
    except ValueError:
        raise ValidationError(f"unknown lineshape {medium.lineshape!r}") from None
    if shape is LineShape.LORENTZIAN:
        t = medium.omega0_tau_star
        if t is None:
            raise ValidationError("omega0_tau_star is required for a Lorentzian line")
        if not (_finite(t) and t > 0):
            raise ValidationError("omega0_tau_star must be positive")
    elif medium.omega0_tau_star is not None:
        raise ValidationError("omega0_tau_star must be absent for a sharp line")
    return medium


def validate_pulse(pulse: PulseParams) -> PulseParams:
    if not (_finite(pulse.x) and pulse.x > 0):
        raise ValidationError("x must be positive")
    if not (_finite(pulse.tau0) and pulse.tau0 > 0):
        raise ValidationError("tau0 must be positive")
    return pulse


def validate(medium: MediumParams, pulse: PulseParams) -> tuple[MediumParams, PulseParams]:
    """Check every invariant of the pair and return it unchanged."""
    validate_medium(medium)
    validate_pulse(pulse)
    if medium.lineshape == LineShape.LORENTZIAN:
        y = pulse.y(medium)
        if not (_finite(y) and y > 0):
            raise ValidationError("y = tau0/omega0_tau_star must be finite and positive")
    return medium, pulse
