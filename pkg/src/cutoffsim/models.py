"""Chain families: kernels, stationary measures, and lumping projections.

Every family is exposed as a :class:`ChainModel` with a uniform surface:
sparse transition rows, a closed-form stationary measure evaluated in
log space, a single-step distribution operator used by the evolution
module, and (where defined) a projection onto a coarser chain.

Families
--------
``CouponCollector``     pure-death chain on {0..n}
``TopInAtRandom``       card shuffle on S_n (exact enumeration for n <= 8)
``BiasedSegment``       nearest-neighbour walk on a segment with drift
``EhrenfestUrn``        lazy birth-and-death diffusion on {0..n}
``HypercubeWalk``       lazy walk on {0,1}^n, lumps to EhrenfestUrn
``CylinderWalk``        non-reversible drifted walk on an l x m cylinder
``PartialDiffusive``    drifted walk that turns diffusive below n^eps
``IsingMagnetization``  mean-field Glauber magnetization chain
``IsingGlauber``        mean-field Glauber spin chain, lumps to the above
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import CapacityError, ParameterError, ShapeError, UnsupportedFamilyError

MAX_EXACT_PERMUTATIONS = 40320   # 8!
MAX_EXACT_SPINS = 14             # 2^14 Glauber configurations
ROW_SUM_TOL = 1e-12


class Family(str, Enum):
    COUPON_COLLECTOR = "CouponCollector"
    TOP_IN_AT_RANDOM = "TopInAtRandom"
    BIASED_SEGMENT = "BiasedSegment"
    EHRENFEST_URN = "EhrenfestUrn"
    HYPERCUBE_WALK = "HypercubeWalk"
    CYLINDER_WALK = "CylinderWalk"
    PARTIAL_DIFFUSIVE = "PartialDiffusive"
    ISING_MAGNETIZATION = "IsingMagnetization"
    ISING_GLAUBER = "IsingGlauber"


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one chain instance."""

    family: Family
    n: int
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n <= 0:
            raise ParameterError("system size n must be positive")


@dataclass(frozen=True)
class LumpMap:
    """Projection from fine state indices onto coarse classes."""

    projection: np.ndarray          # int array, fine index -> coarse index
    coarse_count: int

    def __post_init__(self):
        proj = np.asarray(self.projection, dtype=np.int64)
        object.__setattr__(self, "projection", proj)
        if proj.min() < 0 or proj.max() >= self.coarse_count:
            raise ParameterError("projection image outside coarse range")
        if len(np.unique(proj)) != self.coarse_count:
            raise ParameterError("projection is not surjective")


def project_distribution(dist: np.ndarray, lm: LumpMap) -> np.ndarray:
    """Push a fine distribution through a lump map (mass preserving)."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape != lm.projection.shape:
        raise ShapeError(f"distribution length {dist.shape} does not match "
                         f"fine state count {lm.projection.shape}")
    return np.bincount(lm.projection, weights=dist, minlength=lm.coarse_count)


def check_distribution(dist: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    dist = np.asarray(dist)
    if np.any(dist < 0):
        raise ValueError("negative probability entry")
    if abs(math.fsum(dist.tolist()) - 1.0) > tol:
        raise ValueError("probability mass not normalized")


def delta_distribution(state_count: int, index: int) -> np.ndarray:
    d = np.zeros(state_count)
    d[index] = 1.0
    return d


class ChainModel:
    """Common surface of every chain family.

    Instances are immutable after construction and safe to share across
    concurrent readers.
    """

    spec: ModelSpec
    state_count: int
    model_id: str
    is_birth_death = False
    drift_beta: Optional[float] = None

    def transition_row(self, state: int) -> Dict[int, float]:
        raise NotImplementedError

    def step_distribution(self, dist: np.ndarray) -> np.ndarray:
        """One exact application of the kernel: returns dist @ P."""
        raise NotImplementedError

    def log_stationary(self) -> np.ndarray:
        raise NotImplementedError

    def stationary(self) -> np.ndarray:
        """Closed-form stationary measure, normalized in log space."""
        logpi = self.log_stationary()
        pi = np.exp(logpi - logsumexp(logpi))
        return pi / pi.sum()

    def default_start(self) -> int:
        """Index of the worst-case start state used throughout."""
        raise NotImplementedError

    def lump(self):
        """Return (coarse model, LumpMap) where a projection is defined."""
        raise UnsupportedFamilyError(
            f"{self.spec.family.value} has no lumping projection")

    def _check_state(self, state: int) -> None:
        if not 0 <= state < self.state_count:
            raise IndexError(f"state {state} outside 0..{self.state_count - 1}")


class BirthDeathModel(ChainModel):
    """Chain on {0..N} moving at most one step per transition.

    Holds the up/stay/down rate vectors ``p``, ``r``, ``q`` and a vector
    of unnormalized log stationary weights obtained from the detailed
    balance ratios (pure-death chains get a point mass at 0 instead).
    """

    is_birth_death = True

    def __init__(self, spec: ModelSpec, p: np.ndarray, q: np.ndarray,
                 model_id: str, log_weights: Optional[np.ndarray] = None):
        self.spec = spec
        self.p = np.asarray(p, dtype=np.float64)
        self.q = np.asarray(q, dtype=np.float64)
        self.r = 1.0 - self.p - self.q
        self.state_count = len(self.p)
        self.model_id = model_id
        if self.p[-1] != 0.0 or self.q[0] != 0.0:
            raise ParameterError("boundary rates must vanish")
        if np.any(self.p < 0) or np.any(self.q < 0) or np.any(self.r < -ROW_SUM_TOL):
            raise ParameterError("negative transition rate")
        self._log_weights = log_weights

    @property
    def is_pure_death(self) -> bool:
        return not np.any(self.p > 0)

    def transition_row(self, state: int) -> Dict[int, float]:
        self._check_state(state)
        row: Dict[int, float] = {}
        if self.q[state] > 0:
            row[state - 1] = self.q[state]
        if self.r[state] > 0:
            row[state] = self.r[state]
        if self.p[state] > 0:
            row[state + 1] = self.p[state]
        return row

    def step_distribution(self, dist: np.ndarray) -> np.ndarray:
        nxt = self.r * dist
        nxt[:-1] += self.q[1:] * dist[1:]
        nxt[1:] += self.p[:-1] * dist[:-1]
        return nxt

    def log_stationary(self) -> np.ndarray:
        if self._log_weights is not None:
            return self._log_weights
        if self.is_pure_death:
            # absorbing at 0: stationary is the point mass there
            w = np.full(self.state_count, -np.inf)
            w[0] = 0.0
            return w
        with np.errstate(divide="ignore"):
            ratios = np.log(self.p[:-1]) - np.log(self.q[1:])
        return np.concatenate([[0.0], np.cumsum(ratios)])

    def default_start(self) -> int:
        return self.state_count - 1


class CouponCollectorModel(BirthDeathModel):
    def default_start(self) -> int:
        return self.state_count - 1


class EhrenfestModel(BirthDeathModel):
    def default_start(self) -> int:
        return 0


class BiasedSegmentModel(BirthDeathModel):
    def default_start(self) -> int:
        return 0


class PartialDiffusiveModel(BirthDeathModel):
    #: rounded n^eps threshold separating diffusive from drifted states
    diffusive_cap: int

    def default_start(self) -> int:
        return self.state_count - 1


class IsingMagnetizationModel(BirthDeathModel):
    """Magnetization chain; index i encodes k = i - n/2."""

    def magnetization_of(self, index: int) -> int:
        return index - self.spec.n // 2

    def index_of(self, k: int) -> int:
        return k + self.spec.n // 2

    def default_start(self) -> int:
        return self.state_count - 1  # all spins up, k = n/2


class LumpedCylinderModel(BirthDeathModel):
    """Height chain of the cylinder walk (derived, not a spec family)."""

    def default_start(self) -> int:
        return self.state_count - 1


def _coupon_collector(spec: ModelSpec) -> CouponCollectorModel:
    n = spec.n
    i = np.arange(n + 1, dtype=np.float64)
    q = i / n
    p = np.zeros(n + 1)
    return CouponCollectorModel(spec, p, q, f"coupon-collector-n{n}")


def _ehrenfest(spec: ModelSpec) -> EhrenfestModel:
    n = spec.n
    i = np.arange(n + 1, dtype=np.float64)
    q = i / (2 * n)
    p = (n - i) / (2 * n)
    logw = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    return EhrenfestModel(spec, p, q, f"ehrenfest-n{n}", log_weights=logw)


def _biased_segment(spec: ModelSpec) -> BiasedSegmentModel:
    n = spec.n
    if n < 2:
        raise ParameterError("segment needs at least 2 sites")
    up = float(spec.params.get("up", 0.5))
    down = float(spec.params.get("down", 1.0 / 6.0))
    if not (up > 0 and down > 0 and up + down <= 1.0):
        raise ParameterError("need up > 0, down > 0, up + down <= 1")
    p = np.full(n, up)
    q = np.full(n, down)
    p[-1] = 0.0  # boundary excess folds into the self-loop
    q[0] = 0.0
    return BiasedSegmentModel(spec, p, q, f"biased-segment-n{n}")


def _partial_diffusive(spec: ModelSpec) -> PartialDiffusiveModel:
    n = spec.n
    eps = float(spec.params["eps"])
    if not 0.0 < eps <= 0.5:
        raise ParameterError("eps must lie in (0, 1/2]")
    cap = int(round(n ** eps))
    if cap < 1 or cap >= n:
        raise ParameterError("n^eps threshold degenerate for this (n, eps)")
    i = np.arange(n + 1, dtype=np.float64)
    q = np.where(i <= cap, 0.5, i / (2 * n))
    q[0] = 0.0
    p = np.where(i < cap, 0.5, i / (4 * n))
    p[-1] = 0.0
    model = PartialDiffusiveModel(spec, p, q, f"partial-diffusive-n{n}-eps{eps:g}")
    model.diffusive_cap = cap
    return model


def _ising_magnetization(spec: ModelSpec) -> IsingMagnetizationModel:
    n = spec.n
    beta = float(spec.params.get("beta", 0.0))
    if beta < 0:
        raise ParameterError("beta must be non-negative")
    if n % 2:
        raise ParameterError("n must be even")
    k = np.arange(n + 1, dtype=np.float64) - n / 2
    # single-site heat-bath rates projected onto the magnetization:
    # a flip at magnetization k sees the local field (2k +- 1)/n
    p = (n / 2 - k) / n * _sigmoid(2 * beta * (2 * k + 1) / n)
    q = (n / 2 + k) / n * _sigmoid(-2 * beta * (2 * k - 1) / n)
    p[-1] = 0.0
    q[0] = 0.0
    logw = (2 * beta / n) * k ** 2 \
        + gammaln(n + 1) - gammaln(n / 2 + k + 1) - gammaln(n / 2 - k + 1)
    return IsingMagnetizationModel(
        spec, p, q, f"ising-magnetization-n{n}-beta{beta:g}", log_weights=logw)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


class HypercubeModel(ChainModel):
    """Lazy walk on {0,1}^n; states are bitmask indices."""

    def __init__(self, spec: ModelSpec):
        n = spec.n
        if n > 20:
            raise CapacityError("hypercube enumeration capped at n = 20")
        self.spec = spec
        self.n = n
        self.state_count = 1 << n
        self.model_id = f"hypercube-n{n}"
        idx = np.arange(self.state_count, dtype=np.int64)
        self._flips = [idx ^ (1 << b) for b in range(n)]

    def transition_row(self, state: int) -> Dict[int, float]:
        self._check_state(state)
        row = {state: 0.5}
        for b in range(self.n):
            row[state ^ (1 << b)] = 1.0 / (2 * self.n)
        return row

    def step_distribution(self, dist: np.ndarray) -> np.ndarray:
        nxt = 0.5 * dist
        w = 1.0 / (2 * self.n)
        for flip in self._flips:
            nxt += w * dist[flip]
        return nxt

    def log_stationary(self) -> np.ndarray:
        return np.zeros(self.state_count)

    def default_start(self) -> int:
        return 0

    def hamming_weights(self) -> np.ndarray:
        idx = np.arange(self.state_count, dtype=np.uint64)
        return _popcount(idx)

    def lump(self):
        coarse = _ehrenfest(ModelSpec(Family.EHRENFEST_URN, self.n))
        lm = LumpMap(self.hamming_weights().astype(np.int64), self.n + 1)
        return coarse, lm


class GlauberModel(ChainModel):
    """Mean-field Glauber spin chain; states are bitmasks (bit=1: spin +1)."""

    def __init__(self, spec: ModelSpec):
        n = spec.n
        beta = float(spec.params.get("beta", 0.0))
        if beta < 0:
            raise ParameterError("beta must be non-negative")
        if n % 2:
            raise ParameterError("n must be even")
        if n > MAX_EXACT_SPINS:
            raise CapacityError(
                f"Glauber enumeration capped at n = {MAX_EXACT_SPINS} (2^n states)")
        self.spec = spec
        self.n = n
        self.beta = beta
        self.state_count = 1 << n
        self.model_id = f"ising-glauber-n{n}-beta{beta:g}"
        idx = np.arange(self.state_count, dtype=np.int64)
        self._weights = _popcount(idx.astype(np.uint64)).astype(np.int64)
        self._flips = [idx ^ (1 << b) for b in range(n)]
        # w_b[x]: probability (1/n) * P(site b update leaves the state at x)
        self._site_w = []
        m = self._weights - n / 2.0  # magnetization of each state
        for b in range(n):
            sigma = np.where(idx & (1 << b), 1.0, -1.0)
            local = (2 * m - sigma) / n
            s_plus = _sigmoid(2 * beta * local)
            w = np.where(sigma > 0, s_plus, 1.0 - s_plus) / n
            self._site_w.append(w)

    def transition_row(self, state: int) -> Dict[int, float]:
        self._check_state(state)
        row: Dict[int, float] = {}
        stay = 0.0
        for b in range(self.n):
            w_here = self._site_w[b][state]
            w_flip = 1.0 / self.n - w_here
            stay += w_here
            other = state ^ (1 << b)
            row[other] = row.get(other, 0.0) + w_flip
        row[state] = row.get(state, 0.0) + stay
        return row

    def step_distribution(self, dist: np.ndarray) -> np.ndarray:
        nxt = np.zeros_like(dist)
        for b in range(self.n):
            nxt += self._site_w[b] * (dist + dist[self._flips[b]])
        return nxt

    def log_stationary(self) -> np.ndarray:
        m = self._weights - self.n / 2.0
        return 2.0 * self.beta * m ** 2 / self.n

    def default_start(self) -> int:
        return self.state_count - 1  # all spins +1

    def lump(self):
        coarse = _ising_magnetization(
            ModelSpec(Family.ISING_MAGNETIZATION, self.n, dict(self.spec.params)))
        lm = LumpMap(self._weights, self.n + 1)
        return coarse, lm


class CylinderModel(ChainModel):
    """Drifted walk on an l x m cylindrical lattice, index = h*m + phi."""

    def __init__(self, spec: ModelSpec):
        q = float(spec.params["q"])
        r = float(spec.params["r"])
        if not (0.5 < q < 1.0 and 0.5 < r < 1.0):
            raise ParameterError("q and r must lie in (1/2, 1)")
        if "l" in spec.params or "m" in spec.params:
            l = int(spec.params["l"])
            m = int(spec.params["m"])
            if l < 2 or m < 2:
                raise ParameterError("need l >= 2 and m >= 2")
        else:
            omega = float(spec.params["omega"])
            if not 0.0 < omega < 1.0:
                raise ParameterError("omega must lie in (0, 1)")
            l = int(round(spec.n ** (1.0 - omega)))
            m = int(round(spec.n ** omega))
            if l < 2 or m < 3:
                raise ParameterError(f"rounded cylinder degenerate: l={l}, m={m}")
        if l * m != spec.n:
            spec = ModelSpec(spec.family, l * m, dict(spec.params))
        self.spec = spec
        self.l, self.m, self.q, self.rr = l, m, q, r
        self.state_count = l * m
        self.alpha = (1 - q) / q
        self.drift_beta = (2 * q - 1) / 2
        self.model_id = f"cylinder-l{l}-m{m}-q{q:g}-r{r:g}"

    def index_of(self, h: int, phi: int) -> int:
        return h * self.m + phi

    def coords_of(self, index: int):
        return divmod(index, self.m)

    def transition_row(self, state: int) -> Dict[int, float]:
        self._check_state(state)
        h, phi = self.coords_of(state)
        l, m, q, r = self.l, self.m, self.q, self.rr
        row: Dict[int, float] = {}

        def add(j, mass):
            row[j] = row.get(j, 0.0) + mass

        add(self.index_of(h - 1 if h > 0 else 0, phi), q / 2)
        add(self.index_of(h + 1 if h < l - 1 else l - 1, phi), (1 - q) / 2)
        add(self.index_of(h, (phi + 1) % m), r / 2)
        add(self.index_of(h, (phi - 1) % m), (1 - r) / 2)
        return row

    def step_distribution(self, dist: np.ndarray) -> np.ndarray:
        l, m, q, r = self.l, self.m, self.q, self.rr
        grid = dist.reshape(l, m)
        nxt = np.zeros_like(grid)
        nxt[:-1] += (q / 2) * grid[1:]      # down moves
        nxt[0] += (q / 2) * grid[0]         # clipped at the bottom
        nxt[1:] += ((1 - q) / 2) * grid[:-1]
        nxt[-1] += ((1 - q) / 2) * grid[-1]
        nxt += (r / 2) * np.roll(grid, 1, axis=1)
        nxt += ((1 - r) / 2) * np.roll(grid, -1, axis=1)
        return nxt.reshape(-1)

    def layer_log_weights(self) -> np.ndarray:
        return np.arange(self.l) * math.log(self.alpha)

    def log_stationary(self) -> np.ndarray:
        per_layer = self.layer_log_weights()
        return np.repeat(per_layer, self.m)

    def stationary(self) -> np.ndarray:
        # closed normalization: pi(h, phi) = alpha^h (2q-1)/(m q (1 - alpha^l))
        f0 = (2 * self.q - 1) / (self.m * self.q * (1 - self.alpha ** self.l))
        pi = np.repeat(f0 * self.alpha ** np.arange(self.l), self.m)
        return pi / pi.sum()

    def default_start(self) -> int:
        return self.index_of(self.l - 1, 0)

    def lump(self):
        lump_spec = ModelSpec(self.spec.family, self.l, dict(self.spec.params))
        coarse = _lumped_cylinder(lump_spec, self.l, self.q)
        proj = np.repeat(np.arange(self.l, dtype=np.int64), self.m)
        return coarse, LumpMap(proj, self.l)


def _lumped_cylinder(spec: ModelSpec, l: int, q: float) -> LumpedCylinderModel:
    p = np.full(l, (1 - q) / 2)
    qq = np.full(l, q / 2)
    p[-1] = 0.0
    qq[0] = 0.0
    logw = np.arange(l) * math.log((1 - q) / q)
    return LumpedCylinderModel(spec, p, qq, f"cylinder-height-l{l}-q{q:g}",
                               log_weights=logw)


class TopInAtRandomModel(ChainModel):
    """Top-in-at-random shuffle; exact enumeration only for n <= 8.

    State indices are Lehmer ranks of the deck read from the top; the
    sorted deck (card n on top, card 1 at the bottom) is the start.
    """

    def __init__(self, spec: ModelSpec, exact: bool):
        n = spec.n
        self.spec = spec
        self.n = n
        self.exact = exact
        self.model_id = f"top-in-at-random-n{n}"
        if exact:
            if math.factorial(n) > MAX_EXACT_PERMUTATIONS:
                raise CapacityError(
                    f"exact enumeration capped at {MAX_EXACT_PERMUTATIONS} permutations")
            self.state_count = math.factorial(n)
        else:
            self.state_count = 0  # simulation-only

    def _require_exact(self):
        if not self.exact:
            raise CapacityError(
                "model built in simulation-only mode; no exact enumeration")

    def transition_row(self, state: int) -> Dict[int, float]:
        self._require_exact()
        self._check_state(state)
        deck = list(index_to_permutation(state, self.n))
        top, rest = deck[0], deck[1:]
        row: Dict[int, float] = {}
        w = 1.0 / self.n
        for j in range(self.n):
            nxt = rest[:j] + [top] + rest[j:]
            k = permutation_to_index(nxt)
            row[k] = row.get(k, 0.0) + w
        return row

    def step_distribution(self, dist: np.ndarray) -> np.ndarray:
        self._require_exact()
        mat = self._matrix()
        return dist @ mat

    def _matrix(self):
        if not hasattr(self, "_csr"):
            from scipy.sparse import lil_matrix
            mat = lil_matrix((self.state_count, self.state_count))
            for s in range(self.state_count):
                for j, v in self.transition_row(s).items():
                    mat[s, j] = v
            self._csr = mat.tocsr()
        return self._csr

    def log_stationary(self) -> np.ndarray:
        self._require_exact()
        return np.zeros(self.state_count)

    def default_start(self) -> int:
        self._require_exact()
        return permutation_to_index(self.start_deck(self.n))

    @staticmethod
    def start_deck(n: int):
        return list(range(n, 0, -1))  # card n on top, card 1 at the bottom


def permutation_to_index(perm) -> int:
    """Lehmer rank of a permutation of {1..n} (any fixed card order)."""
    n = len(perm)
    items = sorted(perm)
    rank = 0
    for v in perm:
        j = items.index(v)
        rank = rank * len(items) + j
        items.pop(j)
    return rank


def index_to_permutation(rank: int, n: int):
    items = sorted(range(1, n + 1))
    digits = []
    for radix in range(1, n + 1):
        digits.append(rank % radix)
        rank //= radix
    perm = []
    for d in reversed(digits):
        perm.append(items.pop(d))
    return tuple(perm)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64)
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += (x & np.uint64(1)).astype(np.int64)
        x >>= np.uint64(1)
    return count


_BUILDERS = {
    Family.COUPON_COLLECTOR: _coupon_collector,
    Family.EHRENFEST_URN: _ehrenfest,
    Family.BIASED_SEGMENT: _biased_segment,
    Family.PARTIAL_DIFFUSIVE: _partial_diffusive,
    Family.ISING_MAGNETIZATION: _ising_magnetization,
}


def build_model(spec: ModelSpec) -> ChainModel:
    """Instantiate the chain family described by ``spec``."""
    if spec.family in _BUILDERS:
        return _BUILDERS[spec.family](spec)
    if spec.family is Family.HYPERCUBE_WALK:
        return HypercubeModel(spec)
    if spec.family is Family.ISING_GLAUBER:
        return GlauberModel(spec)
    if spec.family is Family.CYLINDER_WALK:
        return CylinderModel(spec)
    if spec.family is Family.TOP_IN_AT_RANDOM:
        exact = math.factorial(spec.n) <= MAX_EXACT_PERMUTATIONS
        return TopInAtRandomModel(spec, exact=exact)
    raise UnsupportedFamilyError(str(spec.family))


def lump(model: ChainModel):
    """Project a model onto its coarse chain; see ChainModel.lump."""
    return model.lump()


def transition_row(model: ChainModel, state: int) -> Dict[int, float]:
    """Sparse row of the transition kernel at ``state``."""
    return model.transition_row(state)


def stationary(model: ChainModel) -> np.ndarray:
    """Closed-form stationary measure of ``model``."""
    return model.stationary()
