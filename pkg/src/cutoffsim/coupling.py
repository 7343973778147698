"""Coupling constructions and coalescence-time measurement.

Three couplings are provided:

* ``independent_coupling`` - two copies evolve independently until the
  first meeting, then merge (sticky);
* ``sandwich_coupling`` - four copies of a sign-symmetric magnetization
  chain driven by one shared uniform per step through the monotone
  two-branch threshold rule; extreme copies stay mirror images and
  bracket the inner two, audited every step;
* ``cylinder_coupling`` - shared vertical/rotation proposals on the
  cylinder with boundary clipping; the height gap is a death-only
  process and the angular gap performs a lazy symmetric walk during
  bottom-layer sojourns.

All replicas draw their uniforms from per-replica counter streams, so
samples are independent of scheduling and backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .backends import get_backend
from .errors import (CouplingAuditError, ParameterError, SimulationTimeout,
                     UnsupportedFamilyError)
from .models import (BirthDeathModel, ChainModel, CylinderModel, Family,
                     IsingMagnetizationModel)


@dataclass
class CoalescenceStats:
    """Per-replica coalescence times with a window normalization."""

    samples: np.ndarray
    z0: int
    delta_n: float
    seed: int
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64)
        if self.delta_n <= 0:
            raise ParameterError("delta_n must be positive")

    def tail(self, theta: float) -> float:
        return float(np.mean(self.samples > theta * self.delta_n))

    def to_csv(self, path) -> int:
        gh = self.extras.get("gamma_h")
        gp = self.extras.get("gamma_phi")
        with open(path, "w", newline="\n") as fh:
            if gh is not None:
                fh.write("replica,gamma,gamma_H,gamma_Phi\n")
                for i, (g, a, b) in enumerate(zip(self.samples, gh, gp)):
                    fh.write(f"{i},{g},{a},{b}\n")
            else:
                fh.write("replica,gamma\n")
                for i, g in enumerate(self.samples):
                    fh.write(f"{i},{g}\n")
        return len(self.samples)


def coalescence_tail(stats: CoalescenceStats, theta_grid: Sequence[float]):
    """Empirical P(gamma > theta delta_n) over a theta grid."""
    rows = []
    prev = 1.0
    for theta in sorted(theta_grid):
        t = stats.tail(theta)
        if t > prev + 1e-15:
            raise AssertionError("tail must be non-increasing in theta")
        prev = t
        rows.append({"theta": float(theta), "tail": t})
    return rows


def default_window_scale(model: ChainModel) -> float:
    """The coalescence window normalization delta_n of each family."""
    n = model.spec.n
    fam = model.spec.family
    if fam is Family.PARTIAL_DIFFUSIVE:
        eps = float(model.spec.params["eps"])
        return 2.0 * (n ** (2 * eps) + n ** (1 - eps / 2))
    if fam in (Family.EHRENFEST_URN, Family.ISING_MAGNETIZATION,
               Family.ISING_GLAUBER, Family.COUPON_COLLECTOR,
               Family.TOP_IN_AT_RANDOM):
        return float(n)
    if isinstance(model, CylinderModel):
        return float(model.m ** 2 + math.sqrt(model.l))
    raise UnsupportedFamilyError(f"no window scale for {model.model_id}")


def _stationary_cdf(model: ChainModel) -> np.ndarray:
    return np.cumsum(model.stationary())


def independent_coupling(model: ChainModel, z0: int, replicas: int, seed: int,
                         delta_n: Optional[float] = None,
                         step_cap: int = 100_000_000) -> CoalescenceStats:
    """Independent evolution of a delta-started copy and a stationary
    copy until the first meeting (then merged)."""
    if not isinstance(model, BirthDeathModel):
        raise UnsupportedFamilyError("independent coupling implemented for "
                                     "birth-and-death chains")
    if not 0 <= z0 < model.state_count:
        raise IndexError("z0 outside the state space")
    if replicas < 1:
        raise ParameterError("need at least one replica")
    kern = get_backend()
    gamma, timed = kern.bd_independent_coupling(
        model.p, model.q, _stationary_cdf(model), z0, step_cap, seed, replicas)
    if timed.any():
        raise SimulationTimeout(
            f"{int(timed.sum())} of {replicas} replicas exceeded {step_cap} steps",
            partial=gamma, unfinished=timed)
    return CoalescenceStats(gamma, z0,
                            delta_n if delta_n is not None else
                            default_window_scale(model), seed)


def sandwich_coupling(model: ChainModel, theta: float, replicas: int, seed: int,
                      delta_n: Optional[float] = None,
                      step_cap: int = 100_000_000) -> CoalescenceStats:
    """Four-copy monotone coupling of a sign-symmetric chain.

    Copies start at z0 = (1/2) sqrt(n / (1 - beta)), its theta^(1/3)
    dilations, and a stationary sample; every step is driven by one
    shared uniform and audited for order preservation and extreme-copy
    antisymmetry.  Violations raise :class:`CouplingAuditError`.
    """
    chain = _centered_chain(model)
    n = chain.spec.n
    beta = float(chain.spec.params.get("beta", 0.0))
    if theta < 1:
        raise ParameterError("theta must be >= 1")
    nhalf = n // 2
    # monotone rule soundness: adjacent swap intervals must be disjoint,
    # i.e. an up-move of the lower copy can never share a uniform with a
    # down-move of the upper copy
    swap_mass = chain.p[:-1] + chain.q[1:]
    center = chain.p[nhalf] + chain.q[nhalf] + chain.p[nhalf - 1]
    if np.any(swap_mass > 1.0) or center > 1.0:
        raise ParameterError("adjacent swap intervals overlap; the monotone "
                             "rule cannot preserve order for these rates")
    sym = np.max(np.abs(chain.p - chain.q[::-1]))
    if sym > 1e-15:
        raise ParameterError("sandwich coupling needs p_k = q_{-k} symmetry")
    scale = math.sqrt(n / (1 - beta)) if beta < 1 else float(n)
    z0_k = int(round(0.5 * scale))
    zp_k = min(int(round(z0_k * theta ** (1.0 / 3.0))), nhalf)
    # the bracketing property starts from ordered copies, so the audit
    # covers exactly the replicas whose stationary draw lies between the
    # extreme starts +-z0 theta^(1/3)
    kern = get_backend()
    gamma, w_inside, viol, gamma_ext, timed = kern.bd_sandwich(
        chain.p, chain.q, _stationary_cdf(chain), nhalf,
        nhalf + z0_k, nhalf + zp_k,
        nhalf - zp_k, nhalf + zp_k,
        step_cap, seed, replicas)
    if viol.any():
        raise CouplingAuditError(
            f"monotone sandwich order violated in {int(viol.sum())} replicas")
    if timed.any():
        raise SimulationTimeout(
            f"{int(timed.sum())} of {replicas} replicas exceeded {step_cap} steps",
            partial=gamma, unfinished=timed)
    return CoalescenceStats(
        gamma, nhalf + z0_k,
        delta_n if delta_n is not None else float(n), seed,
        extras={"w_inside": w_inside, "gamma_extremes": gamma_ext,
                "z0_plus": zp_k, "theta": theta,
                "audited": int(w_inside.sum())})


def _centered_chain(model: ChainModel) -> BirthDeathModel:
    if isinstance(model, IsingMagnetizationModel):
        return model
    if isinstance(model, BirthDeathModel) and model.spec.family is Family.EHRENFEST_URN:
        if model.spec.n % 2:
            raise ParameterError("sandwich coupling needs even n")
        return model  # Ehrenfest rates already satisfy p_k = q_{-k}
    raise UnsupportedFamilyError(
        "sandwich coupling defined for EhrenfestUrn and IsingMagnetization")


def cylinder_coupling(model: CylinderModel, z0_phi: int, replicas: int, seed: int,
                      delta_n: Optional[float] = None,
                      step_cap: int = 100_000_000) -> CoalescenceStats:
    """Shared-update coupling of Fig-style reflection type on the cylinder.

    The delta-started copy begins on the bottom layer at angle
    ``z0_phi``; the stationary copy is sampled exactly by inverse CDF.
    Audited properties: the height gap never increases and sticks at 0,
    the angular gap sticks at 0, and the coalescence time equals the max
    of the two gap-vanishing times.  The height gap can close through a
    top-boundary clip before the stationary copy reaches the bottom
    layer; such replicas are counted in ``extras['topclip']``.
    """
    if not isinstance(model, CylinderModel):
        raise UnsupportedFamilyError("cylinder coupling needs a CylinderWalk")
    if not 0 <= z0_phi < model.m:
        raise IndexError("z0 angle outside the base circle")
    l, m, q, r = model.l, model.m, model.q, model.rr
    height, _ = model.lump()
    layer_cdf = np.cumsum(height.stationary())
    x = min(q / 4.0, (1.0 - r) / 2.0)
    b0 = q / 2.0 - 2.0 * x
    bounds = (b0, b0 + x, b0 + 2 * x, b0 + 3 * x, b0 + 4 * x,
              b0 + 4 * x + (r / 2.0 - x),
              b0 + 4 * x + (r / 2.0 - x) + ((1.0 - r) / 2.0 - x),
              q / 2.0, 0.5 + r / 2.0)
    kern = get_backend()
    gamma, gamma_h, gamma_phi, first_w_bottom, topclip, viol, timed = \
        kern.cylinder_coupling(l, m, q, r, layer_cdf, z0_phi, bounds,
                               step_cap, seed, replicas)
    if viol.any():
        raise CouplingAuditError(
            f"cylinder coupling property violated in {int(viol.sum())} replicas")
    if timed.any():
        raise SimulationTimeout(
            f"{int(timed.sum())} of {replicas} replicas exceeded {step_cap} steps",
            partial=gamma, unfinished=timed)
    if np.any(gamma != np.maximum(gamma_h, gamma_phi)):
        raise CouplingAuditError("gamma != max(gamma_H, gamma_Phi)")
    clean = topclip == 0
    if np.any(gamma_h[clean] != first_w_bottom[clean]):
        raise CouplingAuditError(
            "height coalescence differs from the stationary copy's "
            "bottom-hitting time in a replica without top clips")
    return CoalescenceStats(
        gamma, model.index_of(0, z0_phi),
        delta_n if delta_n is not None else default_window_scale(model), seed,
        extras={"gamma_h": gamma_h, "gamma_phi": gamma_phi,
                "first_w_bottom": first_w_bottom,
                "topclip": topclip, "topclip_count": int(topclip.sum())})
