"""Bracketing root finder, golden-section minimiser and sign-change scan."""

from __future__ import annotations

import math

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(f, a: float, b: float, tol: float = 1e-10, maxiter: int = 200) -> float:
    """Root of f on [a, b]; f(a) and f(b) must differ in sign (or be zero).

    ``f`` may also return booleans: the result is then the switch point of
    the predicate between a and b.
    """
    fa, fb = f(a), f(b)
    predicate = isinstance(fa, (bool, np.bool_))
    if not predicate and fa == 0:
        return a
    if not predicate and fb == 0:
        return b
    if predicate:
        if fa == fb:
            raise ValueError("predicate does not switch on the bracket")
        same = lambda v: v == fa  # noqa: E731
    else:
        if (fa > 0) == (fb > 0):
            raise ValueError("root is not bracketed")
        same = lambda v: (v > 0) == (fa > 0)  # noqa: E731
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        if b - a <= tol:
            return m
        fm = f(m)
        if not predicate and fm == 0:
            return m
        if same(fm):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def golden_section(f, a: float, b: float, tol: float = 1e-8, maxiter: int = 500):
    """Minimise a unimodal f on [a, b]; returns (x_min, f(x_min))."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def sign_change_brackets(grid, values):
    """Index pairs (i, i+1) where a finite sampled function changes sign."""
    values = np.asarray(values, dtype=float)
    s = np.sign(values)
    idx = np.nonzero((s[:-1] * s[1:] < 0) | ((s[:-1] == 0) & (s[1:] != 0)))[0]
    return [(grid[i], grid[i + 1]) for i in idx]


def scan_grid(x_max: float = 5.0, n: int = 2000):
    """n uniform points on (0, x_max]."""
    return np.linspace(0.0, x_max, n + 1)[1:]
