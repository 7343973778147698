"""Nested state-space families, concentration checks, and the numeric
hypotheses of the hitting-time cutoff criterion.

Each supported family gets a theta-indexed membership mask with integer
boundaries rounded down (floor keeps nesting exact on integer states)
and a closed-form dominating bound on the stationary mass outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, List, Optional, Sequence

import numpy as np

from .backends import get_backend
from .errors import (CapacityError, ParameterError, SimulationTimeout,
                     UnsupportedFamilyError)
from .hitting import HittingMoments, McSample, bd_hitting_moments
from .models import (BirthDeathModel, ChainModel, CylinderModel, Family,
                     GlauberModel, HypercubeModel, IsingMagnetizationModel,
                     ModelSpec, TopInAtRandomModel, build_model,
                     index_to_permutation)

DEFAULT_THETA_GRID = (1.0, 2.0, 4.0, 8.0, 16.0)
#: n grid over which the Ising tail constant c_beta is fitted, then frozen
CBETA_FIT_GRID = (256, 512, 1024, 2048, 4096)
#: the tail mass climbs toward its Gaussian limit as n grows; the fitted
#: maximum gets this headroom so the frozen bound dominates beyond the grid
CBETA_HEADROOM = 1.5


@dataclass
class NestedFamily:
    """theta-indexed nested subsets A_theta with a concentration bound."""

    model_id: str
    mask: Callable[[float], np.ndarray]     # theta -> boolean membership
    h_bound: Callable[[float], float]       # theta -> bound on pi(outside)
    theta_grid: Sequence[float] = DEFAULT_THETA_GRID
    label: str = ""

    def member(self, theta: float, state: int) -> bool:
        return bool(self.mask(theta)[state])

    def check_nesting(self) -> bool:
        grid = sorted(self.theta_grid)
        prev = self.mask(grid[0])
        for theta in grid[1:]:
            cur = self.mask(theta)
            if np.any(prev & ~cur):
                return False
            prev = cur
        return True


def family_for(model: ChainModel,
               theta_grid: Sequence[float] = DEFAULT_THETA_GRID) -> NestedFamily:
    """The canonical nested family of a supported chain family."""
    if isinstance(model, IsingMagnetizationModel):
        return _ising_family(model, theta_grid)
    if isinstance(model, GlauberModel):
        return _glauber_family(model, theta_grid)
    if isinstance(model, BirthDeathModel) and model.spec.family is Family.EHRENFEST_URN:
        return _ehrenfest_family(model, theta_grid)
    if isinstance(model, HypercubeModel):
        return _hypercube_family(model, theta_grid)
    if isinstance(model, CylinderModel):
        return _cylinder_family(model, theta_grid)
    if isinstance(model, BirthDeathModel) and model.spec.family is Family.PARTIAL_DIFFUSIVE:
        return _diffusive_family(model, theta_grid)
    if isinstance(model, TopInAtRandomModel):
        return _tiar_family(model, theta_grid)
    raise UnsupportedFamilyError(f"no nested family defined for {model.model_id}")


def _ehrenfest_family(model, grid):
    n = model.spec.n
    idx = np.arange(n + 1)

    def mask(theta):
        half = math.floor(theta / 2 * math.sqrt(n))
        return np.abs(idx - n / 2) <= half

    return NestedFamily(model.model_id, mask, lambda th: 1.0 / th ** 2,
                        grid, "central band, half-width (theta/2) sqrt(n)")


def _hypercube_family(model, grid):
    n = model.spec.n
    weights = model.hamming_weights()

    def mask(theta):
        half = math.floor(theta / 2 * math.sqrt(n))
        return np.abs(weights - n / 2) <= half

    return NestedFamily(model.model_id, mask, lambda th: 1.0 / th ** 2,
                        grid, "Hamming-weight band")


def fit_ising_tail_constant(beta: float, n_grid: Sequence[int] = CBETA_FIT_GRID,
                            theta_grid: Sequence[float] = DEFAULT_THETA_GRID,
                            ) -> float:
    """Fit the constant of the 1/theta^2 magnetization tail bound.

    Returns the max over the (n, theta) fit grid of
    theta^2 * pi(outside A_theta), widened by :data:`CBETA_HEADROOM`;
    callers freeze the value into the family bound.  Anchoring the fit
    at a single large theta would undershoot the one-sigma tail, so the
    whole default theta grid participates.
    """
    worst = 0.0
    for n in n_grid:
        m = build_model(ModelSpec(Family.ISING_MAGNETIZATION, n, {"beta": beta}))
        fam = _ising_family_raw(m)
        pi = m.stationary()
        for theta in theta_grid:
            outside = float(pi[~fam(theta)].sum())
            worst = max(worst, theta * theta * outside)
    return CBETA_HEADROOM * worst


def _ising_family_raw(model):
    # half-width (theta/2) sqrt(n/(1-beta)): theta standard deviations of
    # the Gaussian limit, matching the Ehrenfest band at beta = 0
    n = model.spec.n
    beta = float(model.spec.params.get("beta", 0.0))
    k = np.arange(n + 1) - n / 2

    def mask(theta):
        half = math.floor(theta / 2 * math.sqrt(n / (1 - beta))) if beta < 1 else n
        return np.abs(k) <= half

    return mask


def _ising_family(model, grid):
    beta = float(model.spec.params.get("beta", 0.0))
    c_beta = fit_ising_tail_constant(beta)
    mask = _ising_family_raw(model)
    return NestedFamily(model.model_id, mask,
                        lambda th: c_beta / th ** 2, grid,
                        f"magnetization band, c_beta={c_beta:.6g}")


def _glauber_family(model, grid):
    beta = model.beta
    c_beta = fit_ising_tail_constant(beta)
    n = model.spec.n
    mags = model._weights - n / 2.0

    def mask(theta):
        half = math.floor(theta / 2 * math.sqrt(n / (1 - beta))) if beta < 1 else n
        return np.abs(mags) <= half

    return NestedFamily(model.model_id, mask, lambda th: c_beta / th ** 2,
                        grid, "spin-configuration magnetization band")


def _cylinder_family(model, grid):
    heights = np.repeat(np.arange(model.l), model.m)
    alpha = model.alpha

    def mask(theta):
        return heights < math.sqrt(theta)

    def bound(theta):
        # strictly dominates the exact geometric tail for every l
        return alpha ** math.sqrt(theta) / (1 - alpha)

    return NestedFamily(model.model_id, mask, bound, grid,
                        "bottom sqrt(theta) layers")


def _diffusive_family(model, grid):
    n = model.spec.n
    eps = float(model.spec.params["eps"])
    cap = model.diffusive_cap
    idx = np.arange(n + 1)
    exponent = n ** (2 * eps - 1)

    def border(theta):
        return math.floor(cap * theta ** exponent)

    def mask(theta):
        return idx <= border(theta)

    def bound(theta):
        b = border(theta)
        # sum_{i > b} pi(i) < c * cap * 2^{cap - b} / (b + 1), strict
        pi = model.stationary()
        c = float(pi[0])
        return c * cap * 2.0 ** (cap - b) / (b + 1)

    return NestedFamily(model.model_id, mask, bound, grid,
                        "sub-geometric band above the diffusive cap")


def diffusive_linear_family(model, grid=DEFAULT_THETA_GRID) -> NestedFamily:
    """Deliberately non-optimal alternative: linear-in-theta boundaries.

    Exists to demonstrate that the travel-time hypothesis fails for it
    with the n^{2 eps} window normalization.
    """
    n = model.spec.n
    cap = model.diffusive_cap
    idx = np.arange(n + 1)

    def mask(theta):
        return idx <= math.floor(theta * cap)

    def bound(theta):
        pi = model.stationary()
        b = math.floor(theta * cap)
        c = float(pi[0])
        return min(1.0, c * cap * 2.0 ** (cap - b) / (b + 1)) if b > cap else 1.0

    return NestedFamily(model.model_id, mask, bound, grid, "linear band (misuse)")


def _tiar_family(model, grid):
    model._require_exact()
    n = model.spec.n
    # model states are top-indexed decks; rising order reads bottom-up
    lengths = np.array(
        [first_rising_sequence_length(index_to_permutation(i, n)[::-1])
         for i in range(model.state_count)])

    def mask(theta):
        return lengths <= theta

    def bound(theta):
        return 1.0 / math.factorial(min(int(theta), 170))

    return NestedFamily(model.model_id, mask, bound, grid,
                        "rising-sequence length at most theta")


def h_concentration(model: ChainModel, fam: NestedFamily, theta: float):
    """Exact stationary mass outside A_theta versus the family bound."""
    pi = model.stationary()
    outside = float(math.fsum(pi[~fam.mask(theta)].tolist()))
    bound = fam.h_bound(theta)
    return outside, bound, outside < bound


# ---------------------------------------------------------------------------
# hitting moments of the nested sets, via the birth-and-death reductions

def zeta_moments(model: ChainModel, fam: NestedFamily, theta: float) -> HittingMoments:
    """Closed-form moments of the first entry into A_theta from the
    model's worst-case start, through the birth-and-death reduction."""
    chain, start, border = _descent_geometry(model, fam, theta)
    if start <= border:
        return HittingMoments(0.0, 0.0, "closed-form")
    return bd_hitting_moments(chain, start, border)


def _descent_geometry(model: ChainModel, fam: NestedFamily, theta: float):
    mask = fam.mask(theta)
    if isinstance(model, IsingMagnetizationModel):
        border = int(np.where(mask)[0].max())
        return model, model.state_count - 1, border
    if isinstance(model, BirthDeathModel) and model.spec.family is Family.EHRENFEST_URN:
        # start delta_0 mirrors onto a descent from n by the i <-> n-i symmetry
        border = int(np.where(mask)[0].max())
        return model, model.state_count - 1, border
    if isinstance(model, BirthDeathModel) and model.spec.family is Family.PARTIAL_DIFFUSIVE:
        border = int(np.where(mask)[0].max())
        return model, model.state_count - 1, border
    if isinstance(model, CylinderModel):
        heights = np.repeat(np.arange(model.l), model.m)
        border = int(heights[mask].max())
        height, _ = model.lump()
        return height, model.l - 1, border
    if isinstance(model, HypercubeModel):
        coarse, _ = model.lump()
        weights = model.hamming_weights()
        border = int(weights[mask].max())
        return coarse, coarse.state_count - 1, border
    if isinstance(model, GlauberModel):
        coarse, _ = model.lump()
        border = int((model._weights[mask]).max())
        return coarse, coarse.state_count - 1, border
    raise UnsupportedFamilyError(
        f"no birth-and-death reduction for {model.model_id}")


@dataclass
class HypothesisRow:
    n: int
    theta: float
    sigma_over_mean: float
    delta_n: float
    eq8_ratio: float        # Delta_n / E[zeta_1]
    eq9_ratio: float        # E[zeta_1 - zeta_theta] / (theta Delta_n)
    var_monotone: bool      # Var[zeta_theta] <= Var[zeta_1]
    mass_outside: float
    h_bound: float


@dataclass
class HypothesisReport:
    """Per-(n, theta) table of the numeric cutoff hypotheses."""

    rows: List[HypothesisRow] = field(default_factory=list)

    def for_n(self, n: int) -> List[HypothesisRow]:
        return [r for r in self.rows if r.n == n]

    def sigma_ratios(self) -> List[float]:
        seen = {}
        for r in self.rows:
            seen.setdefault(r.n, r.sigma_over_mean)
        return [seen[n] for n in sorted(seen)]

    def eq9_trend(self, theta: float) -> List[float]:
        vals = [(r.n, r.eq9_ratio) for r in self.rows if r.theta == theta]
        return [v for _, v in sorted(vals)]

    def to_csv(self, path) -> int:
        with open(path, "w", newline="\n") as fh:
            fh.write("n,theta,sigma_over_mean,eq8_ratio,eq9_ratio,"
                     "var_monotone,mass_outside,h_bound\n")
            for r in self.rows:
                fh.write(f"{r.n},{r.theta:.17g},{r.sigma_over_mean:.17g},"
                         f"{r.eq8_ratio:.17g},{r.eq9_ratio:.17g},"
                         f"{int(r.var_monotone)},{r.mass_outside:.17g},"
                         f"{r.h_bound:.17g}\n")
        return len(self.rows)


def hypothesis_report(make_model: Callable[[int], ChainModel],
                      n_grid: Sequence[int],
                      delta_rule: Callable[[int], float],
                      theta_grid: Sequence[float] = DEFAULT_THETA_GRID,
                      family: Optional[Callable[[ChainModel], NestedFamily]] = None,
                      ) -> HypothesisReport:
    """Tabulate the cutoff hypotheses over an n grid.

    ``delta_rule`` maps n to the window scale Delta_n; ``family``
    overrides the canonical nested family (used for the misuse demo).
    """
    report = HypothesisReport()
    for n in n_grid:
        model = make_model(n)
        fam = family(model) if family is not None else family_for(model, theta_grid)
        if not fam.check_nesting():
            raise ParameterError(f"family not nested on the grid ({model.model_id})")
        delta_n = float(delta_rule(n))
        z1 = zeta_moments(model, fam, 1.0)
        if z1.mean <= 0:
            raise ParameterError("start state already inside A_1")
        for theta in theta_grid:
            zt = zeta_moments(model, fam, theta)
            outside, bound, _ = h_concentration(model, fam, theta)
            report.rows.append(HypothesisRow(
                n=n, theta=float(theta),
                sigma_over_mean=z1.sigma / z1.mean,
                delta_n=delta_n,
                eq8_ratio=delta_n / z1.mean,
                eq9_ratio=(z1.mean - zt.mean) / (theta * delta_n),
                var_monotone=zt.variance <= z1.variance * (1 + 1e-12),
                mass_outside=outside,
                h_bound=bound))
    return report


# ---------------------------------------------------------------------------
# rising sequences and the shuffle simulation

def first_rising_sequence_length(perm: Sequence[int]) -> int:
    """Length of the maximal run 1,2,...,L in rising relative order.

    ``perm`` lists card values from the bottom of the deck upward, so
    the identity permutation is one rising sequence of full length.
    """
    n = len(perm)
    pos = {v: i for i, v in enumerate(perm)}
    length = 1
    while length < n and pos[length + 1] > pos[length]:
        length += 1
    return length


def count_rising_ge(n: int, theta: int) -> int:
    """|R_theta|: permutations with cards 1..theta+1 in rising order.

    Exact enumeration; capped at n <= 8.
    """
    if math.factorial(n) > 40320:
        raise CapacityError("rising-set enumeration capped at n = 8")
    if not 1 <= theta <= n - 1:
        raise ParameterError("theta must lie in 1..n-1")
    count = 0
    for perm in permutations(range(1, n + 1)):
        if first_rising_sequence_length(perm) >= theta + 1:
            count += 1
    return count


@dataclass
class TiarHitting:
    """Shuffle hitting sample: zeta plus the bracketing top times."""

    zeta: McSample                 # first time rising length <= theta
    tau_theta: np.ndarray          # first time card theta on top
    tau_theta_plus_1: np.ndarray   # first time card theta+1 on top

    def sandwich_holds(self) -> bool:
        z = self.zeta.values
        return bool(np.all(self.tau_theta_plus_1 <= z) and np.all(z <= self.tau_theta))


def top_in_at_random_hitting(n: int, theta: int, replicas: int, seed: int,
                             step_cap: Optional[int] = None) -> TiarHitting:
    """Simulate the shuffle from the sorted deck until the rising-sequence
    length drops to theta; also records when cards theta and theta+1
    reach the top and asserts the bracketing inequality replica-wise."""
    if replicas < 1:
        raise ParameterError("need at least one replica")
    if not 1 <= theta <= n:
        raise ParameterError("theta must lie in 1..n")
    if step_cap is None:
        step_cap = max(1000, int(200 * n * (math.log(n) + 1)))
    kern = get_backend()
    track = [theta]
    if theta + 1 <= n:
        track.append(theta + 1)
    tau, zeta, timed = kern.tiar_sim(
        n, np.asarray(track, dtype=np.int64),
        np.asarray([theta], dtype=np.int64), step_cap, seed, replicas)
    if timed.any():
        raise SimulationTimeout(
            f"{int(timed.sum())} of {replicas} shuffles exceeded {step_cap} steps",
            partial=zeta[:, 0], unfinished=timed)
    tau_theta = tau[:, 0]
    tau_next = tau[:, 1] if theta + 1 <= n else np.zeros(replicas, dtype=np.int64)
    result = TiarHitting(McSample(zeta[:, 0], seed, replicas), tau_theta, tau_next)
    if theta + 1 <= n and not result.sandwich_holds():
        raise AssertionError("bracketing tau^{theta+1} <= zeta <= tau^theta failed")
    return result
