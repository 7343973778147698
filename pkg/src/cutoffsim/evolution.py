"""Exact distribution evolution, total-variation curves, mixing profiles.

The t-step measure is obtained by repeated matrix-free application of
the sparse kernel rows (push semantics); no renormalization is ever
applied, mass drift is asserted instead so kernel bugs cannot hide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, CoverageError, ShapeError
from .models import ChainModel, check_distribution

MASS_TOL_PER_10K_STEPS = 1e-12
TV_MONOTONE_TOL = 1e-12
#: states * steps budget guarding a single curve computation
DEFAULT_CURVE_BUDGET = 2_000_000_000
#: switch to exact compensated summation above this state count
COMPENSATED_SUM_THRESHOLD = 100_000


def evolve(model: ChainModel, dist: np.ndarray, steps: int) -> np.ndarray:
    """Exact ``steps``-fold evolution of ``dist`` under the model kernel."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    cur = np.array(dist, dtype=np.float64, copy=True)
    if len(cur) != model.state_count:
        raise ShapeError(f"distribution length {len(cur)} != {model.state_count}")
    check_distribution(cur)
    for _ in range(steps):
        cur = model.step_distribution(cur)
    _assert_mass(cur, steps)
    return cur


def _assert_mass(dist: np.ndarray, steps: int) -> None:
    tol = MASS_TOL_PER_10K_STEPS * max(1.0, steps / 1e4)
    drift = abs(_exact_sum(dist) - 1.0)
    if drift > tol:
        raise AssertionError(f"mass drift {drift:.3e} exceeds {tol:.3e} "
                             f"after {steps} steps")


def _exact_sum(values: np.ndarray) -> float:
    if len(values) > COMPENSATED_SUM_THRESHOLD:
        return math.fsum(values.tolist())
    return float(np.sum(values))


def tv_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Total variation distance (1/2) sum |a_i - b_i|."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    return 0.5 * _exact_sum(diff)


@dataclass
class TvCurve:
    """Sampled total-variation trajectory against stationarity."""

    model_id: str
    n: int
    times: np.ndarray
    tv: np.ndarray
    stride: int = 1

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.tv = np.asarray(self.tv, dtype=np.float64)
        if self.times.shape != self.tv.shape:
            raise ShapeError("times and tv must have equal length")
        if np.any(np.diff(self.tv) > TV_MONOTONE_TOL):
            worst = float(np.max(np.diff(self.tv)))
            raise AssertionError(f"tv curve not monotone: max increase {worst:.3e}")
        if np.any((self.tv < -TV_MONOTONE_TOL) | (self.tv > 1 + TV_MONOTONE_TOL)):
            raise AssertionError("tv values outside [0, 1]")

    def to_csv(self, path) -> int:
        """Write `model,n,t,tv` rows; returns the number of data rows."""
        with open(path, "w", newline="\n") as fh:
            fh.write("model,n,t,tv\n")
            for t, d in zip(self.times, self.tv):
                fh.write(f"{self.model_id},{self.n},{t},{d:.17g}\n")
        return len(self.times)


@dataclass
class MixingProfile:
    """Threshold crossing times t(eps) extracted from a TvCurve."""

    model_id: str
    n: int
    eps_grid: np.ndarray
    t_eps: np.ndarray
    quantization: int = 1  # sampling stride of the source curve

    def t_at(self, eps: float) -> int:
        idx = np.where(np.isclose(self.eps_grid, eps))[0]
        if len(idx) == 0:
            raise KeyError(f"eps {eps} not in profile grid")
        return int(self.t_eps[idx[0]])

    def window(self, lo: float = 0.25, hi: float = 0.75) -> int:
        return self.t_at(lo) - self.t_at(hi)


def tv_curve(model: ChainModel, init: np.ndarray, t_max: int, stride: int = 1,
             budget: int = DEFAULT_CURVE_BUDGET) -> TvCurve:
    """TV distance to stationarity at t = 0, stride, ..., t_max."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if model.state_count * max(1, t_max) / stride > budget:
        raise CapacityError(
            f"curve cost {model.state_count}*{t_max}/{stride} exceeds budget {budget}")
    pi = model.stationary()
    cur = np.array(init, dtype=np.float64, copy=True)
    if len(cur) != model.state_count:
        raise ShapeError("init length does not match state count")
    check_distribution(cur)
    times = [0]
    tvs = [tv_distance(cur, pi)]
    t = 0
    while t + stride <= t_max:
        for _ in range(stride):
            cur = model.step_distribution(cur)
        t += stride
        times.append(t)
        tvs.append(tv_distance(cur, pi))
    _assert_mass(cur, t)
    return TvCurve(model.model_id, model.spec.n, np.array(times), np.array(tvs),
                   stride=stride)


def tv_curve_until(model: ChainModel, init: np.ndarray, eps_min: float,
                   stride: int = 1, budget: int = DEFAULT_CURVE_BUDGET,
                   max_steps: int = None) -> TvCurve:
    """Extend a curve until tv <= eps_min (or the step budget trips)."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    pi = model.stationary()
    cur = np.array(init, dtype=np.float64, copy=True)
    check_distribution(cur)
    times = [0]
    tvs = [tv_distance(cur, pi)]
    t = 0
    cap = max_steps if max_steps is not None else budget // max(1, model.state_count)
    while tvs[-1] > eps_min:
        if t + stride > cap:
            raise CapacityError(
                f"tv {tvs[-1]:.4f} still above {eps_min} at the step budget "
                f"({cap} steps, {model.model_id})")
        for _ in range(stride):
            cur = model.step_distribution(cur)
        t += stride
        times.append(t)
        tvs.append(tv_distance(cur, pi))
    _assert_mass(cur, t)
    return TvCurve(model.model_id, model.spec.n, np.array(times), np.array(tvs),
                   stride=stride)


def mixing_profile(curve: TvCurve, eps_grid: Sequence[float]) -> MixingProfile:
    """First sampled crossing times t(eps) = min {t : tv(t) <= eps}."""
    eps_grid = np.asarray(list(eps_grid), dtype=np.float64)
    t_eps = np.empty(len(eps_grid), dtype=np.int64)
    for i, eps in enumerate(eps_grid):
        hit = np.where(curve.tv <= eps)[0]
        if len(hit) == 0:
            raise CoverageError(eps, float(curve.tv.min()))
        t_eps[i] = curve.times[hit[0]]
    return MixingProfile(curve.model_id, curve.n, eps_grid, t_eps,
                         quantization=curve.stride)
