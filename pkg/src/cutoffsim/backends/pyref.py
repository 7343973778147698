"""Pure-numpy simulation kernels (fallback backend).

Each kernel consumes the counter-based uniform stream of
``cutoffsim._rng`` in a fixed per-replica order, documented below, and
the compiled backend reproduces the same order, so both return
bit-identical samples:

``bd_hit``                  step t uses counter t
``bd_independent_coupling`` counter 0 seeds W; step t uses 2t+1 and 2t+2
``bd_sandwich``             counter 0 seeds W; step t uses counter t+1
``cylinder_coupling``       counters 0,1 seed W; step t uses counter t+2
``tiar_sim``                step t uses counter t

State update conventions (shared with the native kernels):

* birth-death move from state s: down when u < q[s], up when
  u > 1 - p[s], stay otherwise;
* sandwich move: the sign-dependent interval rule (down-interval next
  to 1 for positive states, mirrored for negative ones); the center
  state places up on [0, p), down on [p, p+q) so that adjacent order is
  preserved through 0;
* inverse-CDF sampling picks the first index whose cumulative mass
  strictly exceeds u.
"""

from __future__ import annotations

import numpy as np

from .._rng import stream_keys, uniform_vec

BACKEND_NAME = "python"


def _searchsorted_right(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right").astype(np.int64)
    return np.minimum(idx, len(cdf) - 1)  # guard: cdf[-1] may round below 1


def bd_hit(p, q, start, target, cap, seed, replicas):
    """First hitting of ``target`` (0/1 mask) from ``start``; returns
    (steps, timed_out)."""
    p = np.asarray(p); q = np.asarray(q)
    target = np.asarray(target).astype(bool)
    keys = stream_keys(seed, replicas)
    s = np.full(replicas, start, dtype=np.int64)
    steps = np.zeros(replicas, dtype=np.int64)
    active = ~target[s]
    t = 0
    while active.any() and t < cap:
        idx = np.where(active)[0]
        u = uniform_vec(keys[idx], t)
        sa = s[idx]
        sa = sa - (u < q[sa]) + (u > 1.0 - p[sa])
        s[idx] = sa
        t += 1
        hit = target[sa]
        steps[idx[hit]] = t
        active[idx[hit]] = False
    steps[active] = cap
    return steps, active.copy()


def bd_independent_coupling(p, q, cdf, z0, cap, seed, replicas):
    """Two independent copies until they meet; returns (gamma, timed_out)."""
    p = np.asarray(p); q = np.asarray(q); cdf = np.asarray(cdf)
    keys = stream_keys(seed, replicas)
    w = _searchsorted_right(cdf, uniform_vec(keys, 0))
    z = np.full(replicas, z0, dtype=np.int64)
    gamma = np.zeros(replicas, dtype=np.int64)
    active = z != w
    t = 0
    while active.any() and t < cap:
        idx = np.where(active)[0]
        uz = uniform_vec(keys[idx], 2 * t + 1)
        uw = uniform_vec(keys[idx], 2 * t + 2)
        za, wa = z[idx], w[idx]
        za = za - (uz < q[za]) + (uz > 1.0 - p[za])
        wa = wa - (uw < q[wa]) + (uw > 1.0 - p[wa])
        z[idx], w[idx] = za, wa
        t += 1
        met = za == wa
        gamma[idx[met]] = t
        active[idx[met]] = False
    gamma[active] = cap
    return gamma, active.copy()


def _sandwich_move(s, u, p, q, nhalf):
    k = s - nhalf
    ps, qs = p[s], q[s]
    out = s.copy()
    pos = k > 0
    neg = k < 0
    zero = k == 0
    out[pos & (u < ps)] += 1
    out[pos & (u > 1.0 - qs)] -= 1
    out[neg & (u < qs)] -= 1
    out[neg & (u > 1.0 - ps)] += 1
    out[zero & (u < ps)] += 1
    out[zero & (u >= ps) & (u < ps + qs)] -= 1
    return out


def bd_sandwich(p, q, cdf, nhalf, z0, zp0, inside_lo, inside_hi,
                cap, seed, replicas):
    """Four-copy sandwich coupling with per-step order audits.

    Returns (gamma, w_inside, violation, gamma_ext, timed_out); the
    violation flags record order or antisymmetry breaches (0 = clean).
    """
    p = np.asarray(p); q = np.asarray(q); cdf = np.asarray(cdf)
    keys = stream_keys(seed, replicas)
    w = _searchsorted_right(cdf, uniform_vec(keys, 0))
    z = np.full(replicas, z0, dtype=np.int64)
    zp = np.full(replicas, zp0, dtype=np.int64)
    zm = np.full(replicas, 2 * nhalf - zp0, dtype=np.int64)
    w_inside = (w >= inside_lo) & (w <= inside_hi)
    gamma = np.zeros(replicas, dtype=np.int64)
    gamma_ext = np.full(replicas, -1, dtype=np.int64)
    viol = np.zeros(replicas, dtype=np.int8)
    gamma_ext[zp == zm] = 0
    active = z != w
    t = 0
    while active.any() and t < cap:
        idx = np.where(active)[0]
        u = uniform_vec(keys[idx], t + 1)
        za = _sandwich_move(z[idx], u, p, q, nhalf)
        wa = _sandwich_move(w[idx], u, p, q, nhalf)
        zpa = _sandwich_move(zp[idx], u, p, q, nhalf)
        zma = _sandwich_move(zm[idx], u, p, q, nhalf)
        t += 1
        bad = (zma > za) | (za > zpa)
        bad |= w_inside[idx] & ((zma > wa) | (wa > zpa))
        premerge = zpa != zma
        bad |= premerge & ((zpa - nhalf) != -(zma - nhalf))
        viol[idx[bad]] = 1
        newly_ext = ~bad & (gamma_ext[idx] < 0) & (zpa == zma)
        gamma_ext[idx[newly_ext]] = t
        z[idx], w[idx], zp[idx], zm[idx] = za, wa, zpa, zma
        met = (za == wa) | bad
        gamma[idx[met]] = t
        active[idx[met]] = False
    gamma[active] = cap
    return gamma, w_inside, viol, gamma_ext, active.copy()


def cylinder_coupling(l, m, q, r, layer_cdf, z0_phi, bounds, cap, seed, replicas):
    """Shared-update cylinder coupling; returns per-replica times and audits.

    ``bounds`` are the precomputed joint-table thresholds
    (b0..b5, qhalf, phiplus) so both backends compare against identical
    floats.  Returns (gamma, gamma_h, gamma_phi, first_w_bottom,
    topclip, violation, timed_out).
    """
    layer_cdf = np.asarray(layer_cdf)
    b0, b1, b2, b3, b4, b5, b6, qhalf, phiplus = bounds
    keys = stream_keys(seed, replicas)
    h_w = _searchsorted_right(layer_cdf, uniform_vec(keys, 0))
    phi_w = np.minimum((uniform_vec(keys, 1) * m).astype(np.int64), m - 1)
    h_z = np.zeros(replicas, dtype=np.int64)
    phi_z = np.full(replicas, z0_phi, dtype=np.int64)

    def circ(a, b):
        d = np.abs(a - b)
        return np.minimum(d, m - d)

    dist = circ(phi_z, phi_w)
    height = np.abs(h_z - h_w)
    gamma = np.full(replicas, -1, dtype=np.int64)
    gamma_h = np.full(replicas, -1, dtype=np.int64)
    gamma_phi = np.full(replicas, -1, dtype=np.int64)
    first_w_bottom = np.full(replicas, -1, dtype=np.int64)
    topclip = np.zeros(replicas, dtype=np.int8)
    viol = np.zeros(replicas, dtype=np.int8)
    gamma_h[height == 0] = 0
    gamma_phi[dist == 0] = 0
    first_w_bottom[h_w == 0] = 0
    gamma[(height == 0) & (dist == 0)] = 0
    active = gamma < 0
    t = 0
    while active.any() and t < cap:
        idx = np.where(active)[0]
        u = uniform_vec(keys[idx], t + 2)
        hz, hw = h_z[idx], h_w[idx]
        pz, pw = phi_z[idx], phi_w[idx]
        d_old = dist[idx]
        h_old = height[idx]
        special = (hz == 0) & (hw == 0) & (d_old > 0)
        can = ~special
        # canonical zones: shared vertical or rotation proposal
        down = can & (u < qhalf)
        up = can & (u >= qhalf) & (u < 0.5)
        rotp = can & (u >= 0.5) & (u < phiplus)
        rotm = can & (u >= phiplus)
        tc = up & (hw == l - 1) & (hz < l - 1)  # H shrink via the top clip
        hz = np.where(down & (hz > 0), hz - 1, hz)
        hw = np.where(down & (hw > 0), hw - 1, hw)
        hz = np.where(up & (hz < l - 1), hz + 1, hz)
        hw = np.where(up & (hw < l - 1), hw + 1, hw)
        pz = np.where(rotp, (pz + 1) % m, pz)
        pw = np.where(rotp, (pw + 1) % m, pw)
        pz = np.where(rotm, (pz - 1) % m, pz)
        pw = np.where(rotm, (pw - 1) % m, pw)
        # bottom-layer joint table: only source of asynchronous rotations
        zrotp = special & (((u >= b1) & (u < b2)) | ((u >= b4) & (u < b5)))
        zrotm = special & (((u >= b3) & (u < b4)) | ((u >= b5) & (u < b6)))
        wrotp = special & (((u >= b0) & (u < b1)) | ((u >= b4) & (u < b5)))
        wrotm = special & (((u >= b2) & (u < b3)) | ((u >= b5) & (u < b6)))
        sup = special & (u >= b6)
        pz = np.where(zrotp, (pz + 1) % m, pz)
        pz = np.where(zrotm, (pz - 1) % m, pz)
        pw = np.where(wrotp, (pw + 1) % m, pw)
        pw = np.where(wrotm, (pw - 1) % m, pw)
        hz = np.where(sup & (hz < l - 1), hz + 1, hz)
        hw = np.where(sup & (hw < l - 1), hw + 1, hw)
        t += 1
        d_new = circ(pz, pw)
        h_new = np.abs(hz - hw)
        bad = (h_new > h_old) | ((h_old == 0) & (h_new != 0))
        bad |= (d_old == 0) & (d_new != 0)
        good = ~bad
        viol[idx[bad]] = 1
        topclip[idx[tc]] = 1
        newly = good & (first_w_bottom[idx] < 0) & (hw == 0)
        first_w_bottom[idx[newly]] = t
        newly = good & (gamma_h[idx] < 0) & (h_new == 0)
        gamma_h[idx[newly]] = t
        newly = good & (gamma_phi[idx] < 0) & (d_new == 0)
        gamma_phi[idx[newly]] = t
        h_z[idx], h_w[idx], phi_z[idx], phi_w[idx] = hz, hw, pz, pw
        dist[idx], height[idx] = d_new, h_new
        met = ((h_new == 0) & (d_new == 0)) | bad
        gamma[idx[met]] = t
        active[idx[met]] = False
    timed = active.copy()
    gamma[active] = cap
    return gamma, gamma_h, gamma_phi, first_w_bottom, topclip, viol, timed


def tiar_sim(n, track_cards, thetas, cap, seed, replicas):
    """Top-in-at-random shuffle recording tau (card on top) and zeta
    (first rising-sequence length <= theta) per replica.

    Returns (tau[R, len(track_cards)], zeta[R, len(thetas)], timed_out).
    Decks are bottom-indexed; the start is the sorted deck 1..n.
    """
    track_cards = np.asarray(track_cards, dtype=np.int64)
    thetas = np.asarray(thetas, dtype=np.int64)
    keys = stream_keys(seed, replicas)
    deck = np.tile(np.arange(1, n + 1, dtype=np.int64), (replicas, 1))
    pos = np.tile(np.arange(-1, n, dtype=np.int64), (replicas, 1))  # pos[card]
    tau = np.full((replicas, len(track_cards)), -1, dtype=np.int64)
    zeta = np.full((replicas, len(thetas)), -1, dtype=np.int64)
    tau[:, track_cards == n] = 0          # card n starts on top
    zeta[:, thetas >= n] = 0              # initial rising length is n
    cols = np.arange(n, dtype=np.int64)
    t = 0
    active = (tau < 0).any(axis=1) | (zeta < 0).any(axis=1)
    while active.any() and t < cap:
        idx = np.where(active)[0]
        u = uniform_vec(keys[idx], t)
        j = np.minimum((u * n).astype(np.int64), n - 1)[:, None]
        d = deck[idx]
        top = d[:, -1][:, None]
        rolled = np.empty_like(d)
        rolled[:, 1:] = d[:, :-1]
        rolled[:, 0] = 0
        deck[idx] = np.where(cols < j, d, np.where(cols == j, top, rolled))
        pa = pos[idx]
        shift = (pa >= j) & (pa <= n - 2)
        pa = pa + shift
        np.put_along_axis(pa, top, j, axis=1)
        pos[idx] = pa
        t += 1
        newtop = deck[idx, -1]
        hit = (tau[idx] < 0) & (newtop[:, None] == track_cards[None, :])
        tau_idx = tau[idx]
        tau_idx[hit] = t
        tau[idx] = tau_idx
        rising = pa[:, 2:] > pa[:, 1:-1]   # pos[c+1] > pos[c] for c = 1..n-1
        broken = ~rising
        length = np.where(broken.any(axis=1), broken.argmax(axis=1) + 1, n)
        hit = (zeta[idx] < 0) & (length[:, None] <= thetas[None, :])
        z_idx = zeta[idx]
        z_idx[hit] = t
        zeta[idx] = z_idx
        active[idx] = (tau[idx] < 0).any(axis=1) | (zeta[idx] < 0).any(axis=1)
    timed = active.copy()
    return tau, zeta, timed
