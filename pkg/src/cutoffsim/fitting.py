"""Scaling-law fits for cutoff times and windows.

All fits are least squares in log space: the error model across decades
of n is multiplicative.  The time constant is fitted from t(1/2)
against a chosen form; the window exponent from log(t(0.25) - t(0.75))
against log n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import FitError
from .evolution import MixingProfile

REQUIRED_EPS = (0.25, 0.5, 0.75)


@dataclass
class CutoffFit:
    a_form: str
    a_constant: float
    b_exponent: float          # nan when every window is degenerate
    residual: float            # max |log t_half - log(a * form)| over n
    window_over_time: list     # (n, (t(.25) - t(.75)) / t(.5)) pairs
    consistent: bool           # relative window decreasing across the grid

    def window_values(self):
        return [w for _, w in self.window_over_time]


def _form_function(a_form: Union[str, tuple, Callable[[float], float]]):
    if callable(a_form):
        return a_form, getattr(a_form, "__name__", "custom")
    if a_form == "nlogn":
        return (lambda n: n * math.log(n)), "nlogn"
    if isinstance(a_form, tuple) and a_form[0] == "npow":
        gamma = float(a_form[1])
        return (lambda n: n ** gamma), f"npow({gamma:g})"
    raise FitError(f"unknown scaling form {a_form!r}")


def fit_cutoff(profiles: Sequence[MixingProfile],
               a_form: Union[str, tuple, Callable[[float], float]] = "nlogn",
               ) -> CutoffFit:
    """Fit the cutoff-time constant and window exponent from profiles.

    Requires at least three profiles sharing an eps grid that contains
    0.25, 0.5 and 0.75.  The fit rejects data whose half-mixing times
    are not monotone in n (no scaling law can hold then).
    """
    if len(profiles) < 3:
        raise FitError("need at least three profiles")
    for eps in REQUIRED_EPS:
        for p in profiles:
            if not np.any(np.isclose(p.eps_grid, eps)):
                raise FitError(f"profile for n={p.n} lacks eps={eps}")
    profiles = sorted(profiles, key=lambda p: p.n)
    ns = np.array([p.n for p in profiles], dtype=np.float64)
    t_half = np.array([p.t_at(0.5) for p in profiles], dtype=np.float64)
    if np.any(np.diff(t_half) <= 0):
        raise FitError("t(1/2) not increasing in n; data inconsistent "
                       "with a scaling law")
    form, name = _form_function(a_form)
    fvals = np.array([form(n) for n in ns])
    if np.any(fvals <= 0) or np.any(t_half <= 0):
        raise FitError("form values and times must be positive")
    log_resid = np.log(t_half) - np.log(fvals)
    log_a = float(np.mean(log_resid))
    residual = float(np.max(np.abs(log_resid - log_a)))

    widths = np.array([p.window(0.25, 0.75) for p in profiles], dtype=np.float64)
    if np.all(widths > 0):
        slope, _ = np.polyfit(np.log(ns), np.log(widths), 1)
        b_exponent = float(slope)
    else:
        b_exponent = math.nan  # degenerate (zero-width) windows
    wot = [(int(p.n), float(p.window(0.25, 0.75) / p.t_at(0.5))) for p in profiles]
    vals = [w for _, w in wot]
    consistent = all(b < a for a, b in zip(vals, vals[1:]))
    return CutoffFit(name, math.exp(log_a), b_exponent, residual, wot, consistent)
