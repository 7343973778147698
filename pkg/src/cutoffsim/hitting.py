"""Hitting-time moments: closed forms, linear-solve oracle, Monte Carlo.

Closed forms follow the classical birth-and-death identities

    E[zeta_{k -> k-1}]   = (1/q_k) sum_{j >= k} pi(j)/pi(k)
    Var[zeta_{k -> k-1}] = (1/q_k) sum_{j >= k} (2 E[zeta_{j -> k-1}]
                            - E[zeta_{k -> k-1}]) pi(j)/pi(k)
                            - E[zeta_{k -> k-1}]

with every pi ratio formed in log space (binomial-times-exponential
weights overflow doubles near n = 1e3 otherwise).  Successive descents
are independent, so means and variances add along a descent path.
Pure-death chains bypass the ratios and use geometric moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve, solve_banded

from .backends import get_backend
from .errors import (CapacityError, ParameterError, SimulationTimeout,
                     UnreachableError, UnsupportedFamilyError)
from .models import BirthDeathModel, ChainModel, CylinderModel

LINEAR_SOLVE_STATE_CAP = 20_000
DENSE_SOLVE_STATE_CAP = 4_096
ORACLE_REL_TOL = 1e-9


@dataclass(frozen=True)
class HittingMoments:
    mean: float      # steps
    variance: float  # steps^2
    source: str      # "closed-form" | "linear-solve" | "monte-carlo"

    def __post_init__(self):
        if self.mean < 0 or self.variance < -1e-9 * (1.0 + self.mean ** 2):
            raise ValueError("hitting moments must be non-negative")
        if self.variance < 0:  # tolerated cancellation noise, clamp
            object.__setattr__(self, "variance", 0.0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


@dataclass
class McSample:
    """Per-replica hitting steps from a seeded simulation."""

    values: np.ndarray
    seed: int
    replicas: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if len(self.values) != self.replicas:
            raise ValueError("sample length must equal replica count")

    def summary(self):
        mean = float(self.values.mean())
        var = float(self.values.var(ddof=1)) if self.replicas > 1 else 0.0
        half = 2.5758293035489004 * math.sqrt(var / self.replicas)  # 99% normal
        return {"mean": mean, "variance": var,
                "ci99": (mean - half, mean + half)}

    def to_csv(self, path) -> int:
        with open(path, "w", newline="\n") as fh:
            fh.write("replica,steps\n")
            for i, v in enumerate(self.values):
                fh.write(f"{i},{v}\n")
        return len(self.values)


@dataclass
class DriftDiagnostic:
    """Strong-drift condition surrogate for a birth-and-death chain."""

    K_q_n: float                # inf of death rates on the descent range
    K_n: float                  # sup of q_i * E[T_{i -> i-1}]
    mean_full_descent: float    # E[T_{N -> 0}]
    ratio: float                # K_n^2 / (K_q_n * mean_full_descent)

    def csv_row(self, n: int) -> str:
        return f"{n},{self.K_q_n:.17g},{self.K_n:.17g}," \
               f"{self.mean_full_descent:.17g},{self.ratio:.17g}"


def _suffix_logsumexp(logv: np.ndarray) -> np.ndarray:
    return np.logaddexp.accumulate(logv[::-1])[::-1]


def bd_descent_moments(model: BirthDeathModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-level moments of zeta_{k->k-1}; index k valid for k >= 1.

    Returns (means, variances) as arrays over the state range.  The
    log-space suffix sums keep every pi ratio finite even when the
    stationary weights span thousands of orders of magnitude.
    """
    if model.is_pure_death:
        with np.errstate(divide="ignore"):
            m = 1.0 / model.q
            v = (1.0 - model.q) / model.q ** 2
        return m, v
    if np.any(model.p[:-1] <= 0):
        raise ParameterError("descent formulas need positive upward rates")
    logpi = model.log_stationary()
    # entries against the drift can overflow to inf; they are only ever
    # summed over descent ranges where the values are modest
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logq = np.log(model.q)
        logS = _suffix_logsumexp(logpi)
        logm = logS - logq - logpi
        m = np.exp(logm)
        logT = _suffix_logsumexp(logm + logS)
        v = np.exp(math.log(2.0) + logT - logq - logpi) - m * m - m
    return m, v


def bd_visit_moments(model: ChainModel, k: int) -> HittingMoments:
    """Moments of the first passage from state k to k-1."""
    _require_bd(model)
    if not 1 <= k < model.state_count:
        raise IndexError(f"k={k} has no descent inside 0..{model.state_count - 1}")
    if model.q[k] == 0:
        raise UnreachableError(f"death rate vanishes at state {k}")
    if np.all(model.p[k:] == 0):  # pure death at and above k
        qk = model.q[k]
        return HittingMoments(1.0 / qk, (1.0 - qk) / qk ** 2, "closed-form")
    m, v = bd_descent_moments(model)
    return HittingMoments(float(m[k]), float(v[k]), "closed-form")


def bd_hitting_moments(model: ChainModel, frm: int, to: int) -> HittingMoments:
    """Moments of the descent from ``frm`` down to ``to`` (< frm)."""
    _require_bd(model)
    if not 0 <= to < frm < model.state_count:
        raise IndexError("need 0 <= to < from < state_count")
    if np.any(model.q[to + 1:frm + 1] == 0):
        raise UnreachableError("death rate vanishes on the descent range")
    m, v = bd_descent_moments(model)
    sl = slice(to + 1, frm + 1)
    mean, var = float(np.sum(m[sl])), float(np.sum(v[sl]))
    if not (math.isfinite(mean) and math.isfinite(var)):
        raise CapacityError("descent moments overflow double precision "
                            f"on {frm}->{to} of {model.model_id}")
    return HittingMoments(mean, var, "closed-form")


def cylinder_hitting_moments(model: CylinderModel, theta: float) -> HittingMoments:
    """Moments of the cylinder's hitting of the bottom sqrt(theta) layers.

    Computed on the height chain, whose hitting time of any layer agrees
    with the full walk's by construction.
    """
    if not isinstance(model, CylinderModel):
        raise UnsupportedFamilyError("cylinder_hitting_moments needs a CylinderWalk")
    if theta < 1:
        raise ParameterError("theta must be >= 1")
    border = math.ceil(math.sqrt(theta)) - 1  # topmost layer with h < sqrt(theta)
    if border > model.l - 1:
        raise ParameterError(f"sqrt(theta) exceeds the height l={model.l}")
    if border >= model.l - 1:
        return HittingMoments(0.0, 0.0, "closed-form")
    height, _ = model.lump()
    return bd_hitting_moments(height, model.l - 1, border)


def linear_solve_hitting(model: ChainModel, init: int, target) -> HittingMoments:
    """First-step-analysis oracle: solve (I-Q)m = 1 and its companion.

    ``target`` is a boolean mask over states (or an index).  Birth-death
    chains use a banded tridiagonal solve; other models a dense solve.
    """
    mask = _target_mask(model, target)
    if mask[init]:
        return HittingMoments(0.0, 0.0, "linear-solve")
    if model.state_count > LINEAR_SOLVE_STATE_CAP:
        raise CapacityError(f"linear solve capped at {LINEAR_SOLVE_STATE_CAP} states")
    if isinstance(model, BirthDeathModel):
        return _banded_solve(model, init, mask)
    return _dense_solve(model, init, mask)


def _banded_solve(model: BirthDeathModel, init: int, mask: np.ndarray) -> HittingMoments:
    # restrict to the contiguous non-target segment containing init
    lo = init
    while lo > 0 and not mask[lo - 1]:
        lo -= 1
    hi = init
    while hi < model.state_count - 1 and not mask[hi + 1]:
        hi += 1
    seg = slice(lo, hi + 1)
    size = hi - lo + 1
    p, q, r = model.p[seg], model.q[seg], model.r[seg]
    if lo == 0 and not mask[0] and hi == model.state_count - 1:
        raise UnreachableError("no target state is reachable from init")
    ab = np.zeros((3, size))
    ab[0, 1:] = -p[:-1]      # superdiagonal: up moves
    ab[1, :] = 1.0 - r       # diagonal of I - Q
    ab[2, :-1] = -q[1:]      # subdiagonal: down moves
    ones = np.ones(size)
    try:
        m = solve_banded((1, 1), ab, ones)
        qm = np.zeros(size)  # (Q m) restricted to the segment
        qm += r * m
        qm[:-1] += p[:-1] * m[1:]
        qm[1:] += q[1:] * m[:-1]
        s = solve_banded((1, 1), ab, ones + 2 * qm)
    except np.linalg.LinAlgError as exc:
        raise UnreachableError(f"target unreachable from init ({exc})") from None
    i = init - lo
    mean = float(m[i])
    if not math.isfinite(mean) or mean < 0:
        raise CapacityError("first-step system too ill-conditioned for a "
                            "double-precision solve on this descent")
    return HittingMoments(mean, max(float(s[i]) - mean * mean, 0.0), "linear-solve")


def _dense_solve(model: ChainModel, init: int, mask: np.ndarray) -> HittingMoments:
    if model.state_count > DENSE_SOLVE_STATE_CAP:
        raise CapacityError(f"dense solve capped at {DENSE_SOLVE_STATE_CAP} states")
    keep = np.where(~mask)[0]
    pos = -np.ones(model.state_count, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    Q = np.zeros((len(keep), len(keep)))
    for a, s in enumerate(keep):
        for j, w in model.transition_row(s).items():
            if not mask[j]:
                Q[a, pos[j]] += w
    A = np.eye(len(keep)) - Q
    ones = np.ones(len(keep))
    try:
        m = solve(A, ones)
        s2 = solve(A, ones + 2 * (Q @ m))
    except np.linalg.LinAlgError as exc:
        raise UnreachableError(f"target unreachable from init ({exc})") from None
    i = pos[init]
    mean = float(m[i])
    return HittingMoments(mean, max(float(s2[i]) - mean * mean, 0.0), "linear-solve")


def mc_hitting(model: ChainModel, init_state: int, target, replicas: int,
               seed: int, step_cap: Optional[int] = None) -> McSample:
    """Simulate first hitting times; reproducible for a fixed seed.

    The step budget defaults to 1000x the closed-form mean when that is
    computable and to 1e9 steps otherwise; exhausting it raises
    :class:`SimulationTimeout` carrying the finished replicas.
    """
    if replicas < 1:
        raise ParameterError("need at least one replica")
    mask = _target_mask(model, target)
    if not mask.any():
        raise UnreachableError("empty target set")
    if step_cap is None:
        step_cap = _default_step_cap(model, init_state, mask)
    if isinstance(model, BirthDeathModel):
        kern = get_backend()
        steps, timed_out = kern.bd_hit(model.p, model.q, init_state,
                                       mask.view(np.uint8), step_cap, seed,
                                       replicas)
    else:
        steps, timed_out = _generic_hit(model, init_state, mask, step_cap,
                                        seed, replicas)
    if timed_out.any():
        done = int((~timed_out).sum())
        raise SimulationTimeout(
            f"{int(timed_out.sum())} of {replicas} replicas exceeded "
            f"{step_cap} steps ({done} finished)",
            partial=steps, unfinished=timed_out)
    return McSample(steps, seed, replicas)


def _default_step_cap(model, init_state, mask) -> int:
    if mask[init_state]:
        return 1
    try:
        if isinstance(model, BirthDeathModel):
            below = np.where(mask)[0]
            below = below[below < init_state]
            if len(below):
                mom = bd_hitting_moments(model, init_state, int(below.max()))
                return max(1000, int(1000 * mom.mean))
    except (ParameterError, UnreachableError, IndexError):
        pass
    return 1_000_000_000


def _generic_hit(model, init_state, mask, cap, seed, replicas):
    from ._rng import Stream
    steps = np.zeros(replicas, dtype=np.int64)
    timed_out = np.zeros(replicas, dtype=bool)
    rows = {}
    for rep in range(replicas):
        stream = Stream(seed, rep)
        s = init_state
        t = 0
        while not mask[s]:
            if t >= cap:
                timed_out[rep] = True
                break
            if s not in rows:
                items = sorted(model.transition_row(s).items())
                idx = np.array([j for j, _ in items])
                cdf = np.cumsum([w for _, w in items])
                rows[s] = (idx, cdf)
            idx, cdf = rows[s]
            u = stream.next_uniform()
            s = int(idx[np.searchsorted(cdf, u, side="right")])
            t += 1
        steps[rep] = t
    return steps, timed_out


def cantelli_check(sample: McSample, theta_grid: Sequence[float]):
    """Empirical upper-tail masses versus the 1/(1+theta^2) bound.

    Population-style moments (ddof=0) keep the degenerate and boundary
    cases exact; the sampling slack is 3/sqrt(replicas).
    """
    vals = sample.values.astype(np.float64)
    mu = float(vals.mean())
    sd = float(vals.std(ddof=0))
    slack = 3.0 / math.sqrt(sample.replicas)
    rows = []
    for theta in theta_grid:
        bound = 1.0 / (1.0 + theta * theta)
        if sd == 0.0:
            rows.append({"theta": theta, "tail": 0.0, "bound": bound, "pass": True})
            continue
        tail = float(np.mean(vals - mu >= theta * sd))
        rows.append({"theta": theta, "tail": tail, "bound": bound,
                     "pass": tail <= bound + slack})
    return rows


def quasi_determinism_ratio(moments: HittingMoments) -> float:
    """sigma over mean of a hitting time; the cutoff sharpness driver."""
    if moments.mean <= 0:
        raise ParameterError("ratio undefined for zero mean")
    return moments.sigma / moments.mean


def strong_drift_diagnostic(model: ChainModel) -> DriftDiagnostic:
    """Evaluate the drop-in strong-drift ratio K_n^2 / (K_q^n E[T_{N->0}])."""
    _require_bd(model)
    q = model.q[1:]
    if np.any(q == 0):
        return DriftDiagnostic(0.0, math.inf, math.inf, math.inf)
    m, _ = bd_descent_moments(model)
    K_q = float(q.min())
    K_n = float(np.max(model.q[1:] * m[1:]))
    full = float(np.sum(m[1:]))
    return DriftDiagnostic(K_q, K_n, full, K_n * K_n / (K_q * full))


def _require_bd(model: ChainModel) -> None:
    if not isinstance(model, BirthDeathModel):
        raise UnsupportedFamilyError(
            f"{model.model_id} is not a birth-and-death chain")


def _target_mask(model: ChainModel, target) -> np.ndarray:
    if isinstance(target, (int, np.integer)):
        mask = np.zeros(model.state_count, dtype=bool)
        mask[int(target)] = True
        return mask
    if callable(target):
        return np.fromiter((bool(target(i)) for i in range(model.state_count)),
                           dtype=bool, count=model.state_count)
    mask = np.asarray(target, dtype=bool)
    if mask.shape != (model.state_count,):
        raise ValueError("target mask length must equal state count")
    return mask
