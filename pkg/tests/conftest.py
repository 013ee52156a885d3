import math

import numpy as np
import pytest

from sleeptherm.rr import RRSeries

ACCEPTANCE_RESULTS = []


def beats_from_rr_function(rr_of_t, duration, t0=0.0):
    """Beat times t_i solving t_i = t_{i-1} + RR(t_i), so interval i equals RR at its own timestamp.

    Fixed-point iteration; converges because |RR'| << 1 for the test signals.
    """
    intervals = []
    t = t0
    while t < duration + 5.0:
        nxt = t + rr_of_t(t)
        for _ in range(50):
            nxt_new = t + rr_of_t(nxt)
            if abs(nxt_new - nxt) < 1e-14:
                break
            nxt = nxt_new
        intervals.append(nxt - t)
        t = nxt
    return RRSeries(np.array(intervals), start=t0)


def two_tone(t, a_lf=0.04, f_lf=0.10, a_hf=0.02, f_hf=0.25):
    return a_lf * np.sin(2 * math.pi * f_lf * t) + a_hf * np.sin(2 * math.pi * f_hf * t)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
