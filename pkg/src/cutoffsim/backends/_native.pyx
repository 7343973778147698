# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Bit-identical mirror of ``pyref``: same counter-based splitmix64
uniforms, same move rules, same audit semantics.  See the pyref module
docstring for the uniform-consumption protocol of each kernel.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "native"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t csim_mix64(uint64_t x) {
        uint64_t z = x + 0x9E3779B97F4B9C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline double csim_unit(uint64_t key, uint64_t counter) {
        uint64_t z = csim_mix64(key + counter * 0x9E3779B97F4B9C15ULL);
        return (z >> 11) * (1.0 / 9007199254740992.0);
    }
    """
    unsigned long long csim_mix64(unsigned long long x) nogil
    double csim_unit(unsigned long long key, unsigned long long counter) nogil

cdef unsigned long long GAMMA = 0x9E3779B97F4B9C15ULL


cdef inline unsigned long long stream_key(unsigned long long seed,
                                          unsigned long long replica) nogil:
    return csim_mix64(csim_mix64(seed) + replica * GAMMA)


cdef inline long long search_right(double[::1] cdf, double u) nogil:
    cdef long long lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    if lo > cdf.shape[0] - 1:
        lo = cdf.shape[0] - 1
    return lo


def bd_hit(double[::1] p, double[::1] q, long long start,
           cnp.uint8_t[::1] target, long long cap,
           unsigned long long seed, long long replicas):
    steps = np.zeros(replicas, dtype=np.int64)
    timed = np.zeros(replicas, dtype=bool)
    cdef long long[::1] steps_v = steps
    cdef cnp.uint8_t[::1] timed_v = timed.view(np.uint8)
    cdef long long rep, s, t
    cdef unsigned long long key
    cdef double u
    with nogil:
        for rep in range(replicas):
            key = stream_key(seed, <unsigned long long> rep)
            s = start
            t = 0
            if not target[s]:
                while True:
                    if t >= cap:
                        timed_v[rep] = 1
                        break
                    u = csim_unit(key, <unsigned long long> t)
                    if u < q[s]:
                        s -= 1
                    elif u > 1.0 - p[s]:
                        s += 1
                    t += 1
                    if target[s]:
                        break
            steps_v[rep] = t
    return steps, timed


def bd_independent_coupling(double[::1] p, double[::1] q, double[::1] cdf,
                            long long z0, long long cap,
                            unsigned long long seed, long long replicas):
    gamma = np.zeros(replicas, dtype=np.int64)
    timed = np.zeros(replicas, dtype=bool)
    cdef long long[::1] gamma_v = gamma
    cdef cnp.uint8_t[::1] timed_v = timed.view(np.uint8)
    cdef long long rep, z, w, t
    cdef unsigned long long key
    cdef double u
    with nogil:
        for rep in range(replicas):
            key = stream_key(seed, <unsigned long long> rep)
            w = search_right(cdf, csim_unit(key, 0))
            z = z0
            t = 0
            while z != w:
                if t >= cap:
                    timed_v[rep] = 1
                    break
                u = csim_unit(key, <unsigned long long> (2 * t + 1))
                if u < q[z]:
                    z -= 1
                elif u > 1.0 - p[z]:
                    z += 1
                u = csim_unit(key, <unsigned long long> (2 * t + 2))
                if u < q[w]:
                    w -= 1
                elif u > 1.0 - p[w]:
                    w += 1
                t += 1
            gamma_v[rep] = t
    return gamma, timed


cdef inline long long sandwich_move(long long s, double u, double[::1] p,
                                    double[::1] q, long long nhalf) nogil:
    cdef long long k = s - nhalf
    if k > 0:
        if u < p[s]:
            return s + 1
        if u > 1.0 - q[s]:
            return s - 1
        return s
    if k < 0:
        if u < q[s]:
            return s - 1
        if u > 1.0 - p[s]:
            return s + 1
        return s
    if u < p[s]:
        return s + 1
    if u >= p[s] and u < p[s] + q[s]:
        return s - 1
    return s


def bd_sandwich(double[::1] p, double[::1] q, double[::1] cdf,
                long long nhalf, long long z0, long long zp0,
                long long inside_lo, long long inside_hi,
                long long cap, unsigned long long seed, long long replicas):
    gamma = np.zeros(replicas, dtype=np.int64)
    w_inside = np.zeros(replicas, dtype=bool)
    viol = np.zeros(replicas, dtype=np.int8)
    gamma_ext = np.full(replicas, -1, dtype=np.int64)
    timed = np.zeros(replicas, dtype=bool)
    cdef long long[::1] gamma_v = gamma
    cdef cnp.uint8_t[::1] inside_v = w_inside.view(np.uint8)
    cdef cnp.int8_t[::1] viol_v = viol
    cdef long long[::1] ext_v = gamma_ext
    cdef cnp.uint8_t[::1] timed_v = timed.view(np.uint8)
    cdef long long rep, z, w, zp, zm, t
    cdef unsigned long long key
    cdef double u
    cdef bint inside, bad
    with nogil:
        for rep in range(replicas):
            key = stream_key(seed, <unsigned long long> rep)
            w = search_right(cdf, csim_unit(key, 0))
            z = z0
            zp = zp0
            zm = 2 * nhalf - zp0
            inside = inside_lo <= w <= inside_hi
            inside_v[rep] = inside
            if zp == zm:
                ext_v[rep] = 0
            t = 0
            while z != w:
                if t >= cap:
                    timed_v[rep] = 1
                    break
                u = csim_unit(key, <unsigned long long> (t + 1))
                z = sandwich_move(z, u, p, q, nhalf)
                w = sandwich_move(w, u, p, q, nhalf)
                zp = sandwich_move(zp, u, p, q, nhalf)
                zm = sandwich_move(zm, u, p, q, nhalf)
                t += 1
                bad = (zm > z) or (z > zp)
                if inside and ((zm > w) or (w > zp)):
                    bad = True
                if zp != zm and (zp - nhalf) != -(zm - nhalf):
                    bad = True
                if bad:
                    viol_v[rep] = 1
                    break
                if ext_v[rep] < 0 and zp == zm:
                    ext_v[rep] = t
            gamma_v[rep] = t
    return gamma, w_inside, viol, gamma_ext, timed


def cylinder_coupling(long long l, long long m, double q, double r,
                      double[::1] layer_cdf, long long z0_phi,
                      bounds, long long cap,
                      unsigned long long seed, long long replicas):
    gamma = np.full(replicas, -1, dtype=np.int64)
    gamma_h = np.full(replicas, -1, dtype=np.int64)
    gamma_phi = np.full(replicas, -1, dtype=np.int64)
    first_w_bottom = np.full(replicas, -1, dtype=np.int64)
    topclip = np.zeros(replicas, dtype=np.int8)
    viol = np.zeros(replicas, dtype=np.int8)
    timed = np.zeros(replicas, dtype=bool)
    cdef long long[::1] gamma_v = gamma
    cdef long long[::1] gh_v = gamma_h
    cdef long long[::1] gp_v = gamma_phi
    cdef long long[::1] fwb_v = first_w_bottom
    cdef cnp.int8_t[::1] tc_v = topclip
    cdef cnp.int8_t[::1] viol_v = viol
    cdef cnp.uint8_t[::1] timed_v = timed.view(np.uint8)
    cdef double b0 = bounds[0], b1 = bounds[1], b2 = bounds[2], b3 = bounds[3]
    cdef double b4 = bounds[4], b5 = bounds[5], b6 = bounds[6]
    cdef double qhalf = bounds[7], phiplus = bounds[8]
    cdef long long rep, hz, hw, pz, pw, t, d_old, h_old, d_new, h_new, tmp
    cdef unsigned long long key
    cdef double u
    cdef bint special, bad
    with nogil:
        for rep in range(replicas):
            key = stream_key(seed, <unsigned long long> rep)
            hw = search_right(layer_cdf, csim_unit(key, 0))
            u = csim_unit(key, 1)
            pw = <long long> (u * m)
            if pw > m - 1:
                pw = m - 1
            hz = 0
            pz = z0_phi
            tmp = pz - pw if pz >= pw else pw - pz
            d_old = tmp if tmp <= m - tmp else m - tmp
            h_old = hw - hz if hw >= hz else hz - hw
            if h_old == 0:
                gh_v[rep] = 0
            if d_old == 0:
                gp_v[rep] = 0
            if hw == 0:
                fwb_v[rep] = 0
            t = 0
            if h_old == 0 and d_old == 0:
                gamma_v[rep] = 0
                continue
            while True:
                if t >= cap:
                    timed_v[rep] = 1
                    gamma_v[rep] = cap
                    break
                u = csim_unit(key, <unsigned long long> (t + 2))
                special = hz == 0 and hw == 0 and d_old > 0
                if not special:
                    if u < qhalf:
                        if hz > 0: hz -= 1
                        if hw > 0: hw -= 1
                    elif u < 0.5:
                        if hw == l - 1 and hz < l - 1:
                            tc_v[rep] = 1
                        if hz < l - 1: hz += 1
                        if hw < l - 1: hw += 1
                    elif u < phiplus:
                        pz = (pz + 1) % m
                        pw = (pw + 1) % m
                    else:
                        pz = (pz - 1 + m) % m
                        pw = (pw - 1 + m) % m
                else:
                    if u < b0:
                        pass                      # both clip the down move
                    elif u < b1:
                        pw = (pw + 1) % m         # W rotates, Z stays
                    elif u < b2:
                        pz = (pz + 1) % m
                    elif u < b3:
                        pw = (pw - 1 + m) % m
                    elif u < b4:
                        pz = (pz - 1 + m) % m
                    elif u < b5:
                        pz = (pz + 1) % m
                        pw = (pw + 1) % m
                    elif u < b6:
                        pz = (pz - 1 + m) % m
                        pw = (pw - 1 + m) % m
                    else:
                        if hz < l - 1: hz += 1
                        if hw < l - 1: hw += 1
                t += 1
                tmp = pz - pw if pz >= pw else pw - pz
                d_new = tmp if tmp <= m - tmp else m - tmp
                h_new = hw - hz if hw >= hz else hz - hw
                bad = (h_new > h_old) or (h_old == 0 and h_new != 0)
                if d_old == 0 and d_new != 0:
                    bad = True
                if bad:
                    viol_v[rep] = 1
                    gamma_v[rep] = t
                    break
                if fwb_v[rep] < 0 and hw == 0:
                    fwb_v[rep] = t
                if gh_v[rep] < 0 and h_new == 0:
                    gh_v[rep] = t
                if gp_v[rep] < 0 and d_new == 0:
                    gp_v[rep] = t
                d_old = d_new
                h_old = h_new
                if h_new == 0 and d_new == 0:
                    gamma_v[rep] = t
                    break
    return gamma, gamma_h, gamma_phi, first_w_bottom, topclip, viol, timed


def tiar_sim(long long n, long long[::1] track_cards, long long[::1] thetas,
             long long cap, unsigned long long seed, long long replicas):
    cdef long long ntrack = track_cards.shape[0]
    cdef long long ntheta = thetas.shape[0]
    tau = np.full((replicas, ntrack), -1, dtype=np.int64)
    zeta = np.full((replicas, ntheta), -1, dtype=np.int64)
    timed = np.zeros(replicas, dtype=bool)
    cdef long long[:, ::1] tau_v = tau
    cdef long long[:, ::1] zeta_v = zeta
    cdef cnp.uint8_t[::1] timed_v = timed.view(np.uint8)
    deck_arr = np.empty(n, dtype=np.int64)
    pos_arr = np.empty(n + 1, dtype=np.int64)
    cdef long long[::1] deck = deck_arr
    cdef long long[::1] pos = pos_arr
    cdef long long rep, t, i, j, c, top, length, pending
    cdef unsigned long long key
    cdef double u
    with nogil:
        for rep in range(replicas):
            key = stream_key(seed, <unsigned long long> rep)
            for i in range(n):
                deck[i] = i + 1          # bottom-indexed, card n on top
                pos[i + 1] = i
            pending = ntrack + ntheta
            for i in range(ntrack):
                if track_cards[i] == n:
                    tau_v[rep, i] = 0
                    pending -= 1
                else:
                    tau_v[rep, i] = -1
            for i in range(ntheta):
                if thetas[i] >= n:
                    zeta_v[rep, i] = 0
                    pending -= 1
                else:
                    zeta_v[rep, i] = -1
            t = 0
            while pending > 0:
                if t >= cap:
                    timed_v[rep] = 1
                    break
                u = csim_unit(key, <unsigned long long> t)
                j = <long long> (u * n)
                if j > n - 1:
                    j = n - 1
                c = deck[n - 1]
                for i in range(n - 1, j, -1):
                    deck[i] = deck[i - 1]
                    pos[deck[i]] = i
                deck[j] = c
                pos[c] = j
                t += 1
                top = deck[n - 1]
                for i in range(ntrack):
                    if tau_v[rep, i] < 0 and track_cards[i] == top:
                        tau_v[rep, i] = t
                        pending -= 1
                length = 1
                while length < n and pos[length + 1] > pos[length]:
                    length += 1
                for i in range(ntheta):
                    if zeta_v[rep, i] < 0 and length <= thetas[i]:
                        zeta_v[rep, i] = t
                        pending -= 1
    return tau, zeta, timed
