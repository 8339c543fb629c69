"""Cached Maxwell-Bloch runs shared by the mbe and acceptance tests."""

import functools
import time

from sitdisp import mbe
from sitdisp.core import LineShape, MediumParams, PulseParams

SHARP = MediumParams(nu=0.2, s0=-1)
BROAD = MediumParams(nu=0.2, s0=-1, lineshape=LineShape.LORENTZIAN, omega0_tau_star=2.0)  # y = 0.5
PULSE = PulseParams(x=1.0, tau0=1.0)


@functools.lru_cache(maxsize=None)
def sharp_run(k_scale=1.0):
    t = time.perf_counter()
    run = mbe.run_soliton(SHARP, PULSE, n_tau=2048, steps=500, lengths=10, k_scale=k_scale)
    return run, time.perf_counter() - t


@functools.lru_cache(maxsize=None)
def broad_run(k_scale=1.0):
    t = time.perf_counter()
    run = mbe.run_soliton(BROAD, PULSE, n_tau=2048, steps=500, lengths=10, n_atoms=200,
                          k_scale=k_scale)
    return run, time.perf_counter() - t
