import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import brentq, minimize_scalar

from sitdisp import dispersion as disp
from sitdisp import lineshape
from sitdisp.core import LineShape, MediumParams, PulseParams, ValidationError

# frozen from independent oracles (scipy brentq / minimize_scalar / numpy roots)
CUBIC_ROOT_NU1 = 1.695620769559862
TAU_CRIT_MIN_NU1 = 1.9418804647


def lor(nu=1.0, s0=-1, ts=10.0):
    return MediumParams(nu, s0, LineShape.LORENTZIAN, ts)


def written_out_k2(x, nu, s0, tau0):
    """Sharp-line K^2 written out directly, as an independent check."""
    return x * x - 2 * nu * s0 * (1 - x) * tau0**2 / (1 + (1 - x) ** 2 * tau0**2)


# --------------------------------------------------------------------------
# gamma factor


@pytest.mark.parametrize("s0, g", [(-1, -1.0), (1, 1.0)])
def test_gamma_from_soliton(s0, g):
    assert disp.gamma_from_soliton(MediumParams(1.0, s0), PulseParams(1, 1), 1.0) == g


def test_gamma_vanishes_when_uncoupled():
    assert disp.gamma_from_soliton(MediumParams(0.0), PulseParams(1, 1), 1.0) == 0


# --------------------------------------------------------------------------
# sharp line


@given(st.floats(0.01, 5), st.floats(0.01, 5))
def test_resonance_gives_unit_k(nu, tau0):
    assert disp.sharp_line_K(MediumParams(nu), PulseParams(1.0, tau0)) == 1.0


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.sampled_from([-1, 1]))
def test_uncoupled_medium_is_vacuum(x, tau0, s0):
    for m in (MediumParams(0.0, s0), lor(0.0, s0, 3.0)):
        sol = disp.solve(m, PulseParams(x, tau0))
        assert sol.k_dimless == pytest.approx(x, rel=1e-15)
        assert sol.v_dimless == pytest.approx(1.0, rel=1e-15)


def test_k_nearly_vanishes_at_rounded_critical_width():
    # 1.9424 is the 4-digit rounding of the exact width 1.94246...; K^2 is
    # then 8.2e-5 and K itself about 9e-3
    assert disp.critical_width(1.3, 1.0) == pytest.approx(1.9424, abs=1e-4)
    k = disp.sharp_line_K(MediumParams(1.0), PulseParams(1.3, 1.9424))
    assert k * k <= 1e-4
    k = disp.sharp_line_K(MediumParams(1.0), PulseParams(1.3, 1.9424632))
    assert k <= 1e-3


@pytest.mark.parametrize("s0, tau0, v", [(-1, 1.0, 0.5), (1, math.sqrt(0.5), 2.0)])
def test_sharp_velocity_values(s0, tau0, v):
    sol = disp.solve(MediumParams(1.0, s0), PulseParams(1.0, tau0))
    assert sol.v_dimless == pytest.approx(v, rel=1e-14)
    assert sol.regime == (disp.Regime.SUBLUMINAL if v < 1 else disp.Regime.SUPERLUMINAL)


@given(st.floats(0.05, 3), st.floats(0.05, 4), st.floats(0.01, 2), st.sampled_from([-1, 1]))
def test_sharp_matches_written_out_formula(x, tau0, nu, s0):
    k2 = written_out_k2(x, nu, s0, tau0)
    sol = disp.solve(MediumParams(nu, s0), PulseParams(x, tau0))
    assert sol.k_squared == pytest.approx(k2, rel=1e-12, abs=1e-14)
    if k2 >= 0:
        den = x - nu * s0 * tau0**2 / (1 + (1 - x) ** 2 * tau0**2)
        if sol.exists:
            assert sol.v_dimless == pytest.approx(math.sqrt(k2) / den, rel=1e-12)


def test_negative_radicand_is_reported():
    m, p = MediumParams(1.0), PulseParams(1.4, 3.0)
    with pytest.raises(disp.NonexistentSolution, match="K\\^2<0"):
        disp.sharp_line_K(m, p)
    sol = disp.solve(m, p)
    assert not sol.exists and sol.k_dimless is None and sol.regime is None


def test_velocity_pole_is_reported():
    # s0 = +1, x = 1: denominator 1 - nu tau0^2 vanishes at tau0 = 1
    with pytest.raises(disp.NonexistentSolution, match="pole"):
        disp.sharp_line_V(MediumParams(1.0, 1), PulseParams(1.0, 1.0))


def test_grid_marks_nonexistence_with_nan():
    r = disp.solve_grid(MediumParams(1.0), np.array([1.0, 1.4]), 3.0)
    assert r["exists"].tolist() == [True, False]
    assert np.isnan(r["k"][1]) and np.isnan(r["v"][1])


def test_solve_rejects_invalid_inputs():
    with pytest.raises(ValidationError):
        disp.solve(MediumParams(-1.0), PulseParams(1, 1))
    with pytest.raises(ValidationError):
        disp.sharp_line_K(lor(), PulseParams(1, 1))
    with pytest.raises(ValidationError):
        disp.broadened_K(MediumParams(1.0), PulseParams(1, 1))


# --------------------------------------------------------------------------
# broadened line


def test_broadened_small_y_tends_to_resonance():
    ks = [disp.broadened_K(lor(1.0, -1, 1.0 / y), PulseParams(1.0, 1.0)) for y in (1e-2, 1e-4, 1e-6)]
    errs = [abs(k - 1) for k in ks]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-4


def test_broadened_k_against_quadrature_averages():
    m, p = lor(1.0, -1, 10.0), PulseParams(1.2, 5.0)
    q = lineshape.averages_quadrature(p.tau0, 10.0)
    k2 = p.x**2 - 2 * q.delta_tilde * m.nu * m.s0 * q.avg_f * p.tau0**2
    assert disp.broadened_K(m, p) == pytest.approx(math.sqrt(k2), rel=1e-7)


@given(st.floats(0.01, 3), st.floats(0.05, 2), st.floats(0.01, 2), st.sampled_from([-1, 1]),
       st.floats(0.5, 20))
def test_broadened_analytic_equals_quadrature_path(x, y, nu, s0, ts):
    m, p = lor(nu, s0, ts), PulseParams(x, y * ts)
    q = lineshape.averages_quadrature(p.tau0, ts)
    k2 = x * x - 2 * q.delta_tilde * nu * s0 * q.avg_f * p.tau0**2
    sol = disp.solve(m, p)
    assert sol.k_squared == pytest.approx(k2, rel=1e-7, abs=1e-12)


@given(st.floats(0.01, 0.99))
def test_broadened_denominator_form(y):
    ts = 10.0
    m, p = lor(1.0, 1, ts), PulseParams(1.5, y * ts)
    sol = disp.solve(m, p)
    den = p.x - m.nu * m.s0 * ts**2 * y**2 / (1 + y)
    if sol.exists:
        assert sol.v_dimless == pytest.approx(sol.k_dimless / den, rel=1e-12)


def test_broadened_amplifier_superluminal_at_small_y():
    for y in (1e-3, 1e-2, 5e-2):
        sol = disp.solve(lor(1.0, 1, 10.0), PulseParams(1.0, 10.0 * y))
        assert sol.v_dimless > 1


def test_broadened_absorber_velocity_decreases_in_y():
    ys = np.linspace(0.01, 1.0, 100)
    r = disp.solve_grid(lor(1.0, -1, 10.0), 1.0, 10.0 * ys)
    assert np.all(np.diff(r["v"]) < 0) and r["v"][-1] < 0.1


def test_literal_flag_uses_compact_formula():
    m, p = lor(1.0, -1, 4.0), PulseParams(1.3, 2.0)
    y = 0.5
    k2 = 1.3**2 + (4 * -1 * 1.0 * 4.0 / math.pi) * y**4 * math.log(y) / (y * y - 1)
    assert disp.solve(m, p, literal=True).k_squared == pytest.approx(k2, rel=1e-13)
    assert disp.solve(m, p).k_squared != pytest.approx(k2, rel=1e-3)
    with pytest.raises(ValidationError):
        disp.solve(MediumParams(1.0), p, literal=True)


# --------------------------------------------------------------------------
# alternate form and existence condition


def test_alternate_form_at_resonance():
    assert disp.alt_dispersion_K(1.7, 0.4, 0.0) == pytest.approx(1.7, rel=1e-15)


@pytest.mark.parametrize("s0, x, tau0", [(-1, 0.8, 1.0), (1, 1.2, 0.5)])
def test_alternate_form_round_trip(s0, x, tau0):
    sol = disp.solve(MediumParams(1.0, s0), PulseParams(x, tau0))
    k = disp.alt_dispersion_K(x, sol.v_dimless, sol.delta_tilde)
    assert abs(k / sol.k_dimless - 1) <= 1e-10


@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.01, 2), st.sampled_from([-1, 1]),
       st.booleans())
def test_alternate_form_round_trip_property(x, tau0, nu, s0, broad):
    m = lor(nu, s0, 5.0) if broad else MediumParams(nu, s0)
    sol = disp.solve(m, PulseParams(x, tau0))
    assume(sol.exists and sol.v_dimless > 0 and sol.k_dimless > 1e-6)
    res = min(abs(disp.alt_dispersion_K(x, sol.v_dimless, sol.delta_tilde, b) / sol.k_dimless - 1)
              for b in (1, -1))
    assert res <= 1e-10


def test_alternate_form_rejects_bad_velocity():
    with pytest.raises(ValidationError):
        disp.alt_dispersion_K(1.0, 0.0, 0.2)


@pytest.mark.parametrize("s0, v, ok", [(-1, 0.5, True), (-1, 2.0, False), (1, 2.0, True)])
def test_existence_condition(s0, v, ok):
    assert disp.existence_condition(1.0, 1.0, v, s0) is ok


@given(st.floats(0.05, 3), st.floats(0.05, 4), st.floats(0.01, 2), st.sampled_from([-1, 1]))
def test_existing_solutions_satisfy_existence_condition(x, tau0, nu, s0):
    sol = disp.solve(MediumParams(nu, s0), PulseParams(x, tau0))
    assume(sol.exists and sol.v_dimless > 0)
    assert sol.gamma_factor * s0 > 0
    assert disp.existence_condition(sol.k_dimless, x, sol.v_dimless, s0)


def test_absorber_can_be_superluminal():
    # V < 1 for s0 = -1 fails below x = 1/2 - a/4 with a = nu <F> tau0^2
    sol = disp.solve(MediumParams(1.0, -1), PulseParams(0.4, 0.5))
    assert sol.exists and sol.v_dimless > 1


@given(st.floats(0.02, 3), st.floats(0.05, 4), st.floats(0.01, 2))
def test_sharp_absorber_velocity_criterion(x, tau0, nu):
    # derived: for s0 = -1, V > 1 exactly when x < 1/2 - a/4 (a = nu <F> tau0^2)
    sol = disp.solve(MediumParams(nu, -1), PulseParams(x, tau0))
    a = nu * tau0**2 / (1 + (1 - x) ** 2 * tau0**2)
    margin = x - 0.5 + a / 4
    assume(sol.exists and abs(margin) > 1e-9)
    assert (sol.v_dimless < 1) == (margin > 0)


# --------------------------------------------------------------------------
# critical width and stopping roots


def test_critical_width_minimum_matches_oracle():
    res = disp.minimize_critical_width(1.0)
    f = lambda x: x * x / (2 * (x - 1) - (x - 1) ** 2 * x * x)  # noqa: E731
    ref = minimize_scalar(f, bounds=(1.05, 1.65), method="bounded", options={"xatol": 1e-10})
    assert res.x_at_min == pytest.approx(ref.x, abs=1e-6)
    assert res.tau0_crit == pytest.approx(math.sqrt(ref.fun), rel=1e-10)
    assert res.tau0_crit == pytest.approx(TAU_CRIT_MIN_NU1, abs=1e-9)
    assert abs(res.x_at_min - 1.30) < 0.01
    assert res.domain[0] < res.x_at_min < res.domain[1]


def test_critical_width_half_nu():
    res = disp.minimize_critical_width(0.5)
    xs = np.linspace(res.domain[0] + 1e-4, res.domain[1] - 1e-4, 20001)
    brute = min(disp.critical_width(float(x), 0.5) for x in xs)
    assert res.tau0_crit == pytest.approx(brute, rel=1e-6)


def test_critical_width_diverges_towards_resonance():
    vals = [disp.critical_width(1 + d, 1.0) for d in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 500


@pytest.mark.parametrize("x", [0.5, 1.0, 1.8])
def test_critical_width_out_of_domain(x):
    with pytest.raises(ValidationError, match="no finite stopping width"):
        disp.critical_width(x, 1.0)


@given(st.floats(1.01, 1.69))
def test_critical_width_is_sign_change_of_k2(x):
    tc = disp.critical_width(x, 1.0)
    m = MediumParams(1.0, -1)
    lo = float(disp.law_terms(m, x, tc * (1 - 1e-6))[0])
    hi = float(disp.law_terms(m, x, tc * (1 + 1e-6))[0])
    assert lo > 0 > hi


def test_cubic_root():
    (root,) = disp.cubic_stopping_roots(1.0)
    assert root == pytest.approx(brentq(lambda x: x**3 - x**2 - 2, 1, 2, xtol=1e-15), rel=1e-14)
    assert root == pytest.approx(CUBIC_ROOT_NU1, rel=1e-14)


def test_stopping_roots_bracket_the_gap():
    br = disp.stopping_roots(1.0, 3.0)
    assert br.x1 is not None and br.x2 is not None and 0 < br.x1 <= br.x2
    m = MediumParams(1.0)
    assert float(disp.law_terms(m, 0.5 * (br.x1 + br.x2), 3.0)[0]) < 0
    for r in (br.x1, br.x2):
        assert abs(written_out_k2(r, 1.0, -1, 3.0)) < 1e-8


def test_no_stopping_roots_below_critical_width():
    br = disp.stopping_roots(1.0, 1.0)
    assert br.finite_roots == () and br.x1 is None
    assert br.cubic_roots == pytest.approx((CUBIC_ROOT_NU1,))


# --------------------------------------------------------------------------
# superluminal threshold


def test_threshold_for_weak_coupling_is_one_half():
    t = disp.superluminal_threshold(MediumParams(1e-6, 1), 0.1)
    assert t == pytest.approx(0.5, abs=1e-5)
    # the simple estimate tends to 1/3 instead
    assert disp.superluminal_estimate(1e-6, 0.1, 1.0) == pytest.approx(1 / 3, abs=1e-6)


def test_threshold_matches_derived_condition():
    nu, tau0 = 1.0, 0.5
    t = disp.superluminal_threshold(MediumParams(nu, 1), tau0)
    ref = brentq(lambda x: disp.sharp_superluminal_condition(x, nu, tau0), 0.3, 1.5, xtol=1e-14)
    assert t == pytest.approx(ref, abs=1e-8)


def test_threshold_separates_regimes():
    m, tau0 = MediumParams(1.0, 1), 0.5
    t = disp.superluminal_threshold(m, tau0)
    above = disp.solve_grid(m, np.linspace(t + 1e-6, 5, 500), tau0)
    below = disp.solve_grid(m, np.linspace(0.01, t - 1e-6, 500), tau0)
    assert np.all(above["exists"]) and np.all(above["v"] > 1)
    assert not np.any(below["exists"] & (np.nan_to_num(below["v"]) > 1))


def test_threshold_requires_amplifier():
    with pytest.raises(ValidationError):
        disp.superluminal_threshold(MediumParams(1.0, -1), 0.5)


# --------------------------------------------------------------------------
# continuity


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.sampled_from([-1, 1]), st.booleans())
def test_continuity(x, tau0, s0, broad):
    m = lor(1.0, s0, 5.0) if broad else MediumParams(1.0, s0)
    a = disp.solve(m, PulseParams(x, tau0))
    b = disp.solve(m, PulseParams(x + 1e-8, tau0 + 1e-8))
    assume(a.exists and b.exists and a.k_dimless > 0.1 and abs(a.v_dimless) < 100)
    assert abs(a.k_dimless - b.k_dimless) < 1e-6
    # near the velocity pole dV/dx grows like V^2, so scale the bound
    assert abs(a.v_dimless - b.v_dimless) < 1e-6 * (1 + a.v_dimless**2)
