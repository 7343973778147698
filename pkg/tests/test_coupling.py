"""Coupling constructions: stickiness, audits, tails, reproducibility."""

import math

import numpy as np
import pytest

from cutoffsim import (Family, ModelSpec, build_model, coalescence_tail,
                       cylinder_coupling, default_window_scale,
                       independent_coupling, sandwich_coupling)
from cutoffsim.coupling import CoalescenceStats
from cutoffsim.errors import (ParameterError, SimulationTimeout,
                              UnsupportedFamilyError)


def test_independent_coupling_ehrenfest_median_scale():
    n = 500
    model = build_model(ModelSpec(Family.EHRENFEST_URN, n))
    stats = independent_coupling(model, n // 2, replicas=4000, seed=13)
    assert stats.delta_n == n
    assert stats.tail(2.0) < 0.5  # median coalescence is O(n)


def test_independent_coupling_diffusive_tail_bound():
    n, eps = 2000, 0.4
    model = build_model(ModelSpec(Family.PARTIAL_DIFFUSIVE, n, {"eps": eps}))
    stats = independent_coupling(model, model.diffusive_cap,
                                 replicas=4000, seed=17)
    slack = 3.0 / math.sqrt(4000)
    for theta in (4.0, 8.0, 16.0):
        assert stats.tail(theta) <= 2.0 / theta + n ** -eps + slack


def test_independent_coupling_gamma_zero_possible():
    # W ~ pi can land exactly on z0; those replicas coalesce at t = 0
    model = build_model(ModelSpec(Family.EHRENFEST_URN, 30))
    stats = independent_coupling(model, 15, replicas=500, seed=2)
    assert np.any(stats.samples == 0)


def test_independent_coupling_reproducible():
    model = build_model(ModelSpec(Family.EHRENFEST_URN, 100))
    a = independent_coupling(model, 50, replicas=200, seed=7)
    b = independent_coupling(model, 50, replicas=200, seed=7)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = independent_coupling(model, 50, replicas=100, seed=7)
    np.testing.assert_array_equal(a.samples[:100], c.samples)


def test_independent_coupling_timeout():
    model = build_model(ModelSpec(Family.EHRENFEST_URN, 400))
    with pytest.raises(SimulationTimeout):
        independent_coupling(model, 200, replicas=50, seed=1, step_cap=3)


def test_sandwich_coupling_audits_pass_ising():
    model = build_model(ModelSpec(Family.ISING_MAGNETIZATION, 400, {"beta": 0.5}))
    stats = sandwich_coupling(model, 4.0, replicas=2000, seed=29)
    assert stats.extras["audited"] > 0
    assert len(stats.samples) == 2000
    assert np.any(stats.samples == 0)  # W can start exactly at z0
    # gamma_ext records the extremes' merge; where seen it caps gamma for
    # bracketed replicas started inside
    ext = stats.extras["gamma_extremes"]
    inside = stats.extras["w_inside"]
    seen = (ext >= 0) & inside
    assert np.all(stats.samples[seen] <= ext[seen])


def test_sandwich_coupling_audits_pass_ehrenfest():
    model = build_model(ModelSpec(Family.EHRENFEST_URN, 200))
    stats = sandwich_coupling(model, 8.0, replicas=2000, seed=31)
    assert stats.delta_n == 200


def test_sandwich_tail_envelope_and_monotone():
    model = build_model(ModelSpec(Family.ISING_MAGNETIZATION, 400, {"beta": 0.5}))
    tails, envs = [], []
    for theta in (4.0, 16.0, 64.0):
        stats = sandwich_coupling(model, theta, replicas=3000, seed=41)
        zp = stats.extras["z0_plus"]
        tails.append(stats.tail(theta))
        envs.append(zp / math.sqrt(theta * stats.delta_n))
    assert tails[0] >= tails[1] >= tails[2]
    c = max((t / e) for t, e in zip(tails, envs) if e > 0) if any(tails) else 1.0
    for t, e in zip(tails, envs):
        assert t <= c * e + 1e-12


def test_sandwich_coupling_needs_symmetric_family():
    model = build_model(ModelSpec(Family.COUPON_COLLECTOR, 10))
    with pytest.raises(UnsupportedFamilyError):
        sandwich_coupling(model, 4.0, replicas=5, seed=0)
    odd = build_model(ModelSpec(Family.BIASED_SEGMENT, 10))
    with pytest.raises(UnsupportedFamilyError):
        sandwich_coupling(odd, 4.0, replicas=5, seed=0)


def test_sandwich_reproducible():
    model = build_model(ModelSpec(Family.ISING_MAGNETIZATION, 100, {"beta": 0.25}))
    a = sandwich_coupling(model, 8.0, replicas=100, seed=3)
    b = sandwich_coupling(model, 8.0, replicas=100, seed=3)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_cylinder_coupling_properties_and_bound():
    q = 0.75
    model = build_model(ModelSpec(Family.CYLINDER_WALK, 75,
                                  {"q": q, "r": 0.7, "l": 15, "m": 5}))
    stats = cylinder_coupling(model, 0, replicas=4000, seed=5)
    gh = stats.extras["gamma_h"]
    # mean height-coalescence bounded by the stationary height drift time
    bound = (1 / model.drift_beta) * (1 - q) / (2 * q - 1)
    sd = gh.std(ddof=1) / math.sqrt(len(gh))
    assert gh.mean() <= bound + 3 * sd
    np.testing.assert_array_equal(
        stats.samples, np.maximum(gh, stats.extras["gamma_phi"]))


def test_cylinder_gamma_zero_when_w_starts_coincident():
    model = build_model(ModelSpec(Family.CYLINDER_WALK, 30,
                                  {"q": 0.8, "r": 0.7, "l": 6, "m": 5}))
    stats = cylinder_coupling(model, 0, replicas=2000, seed=19)
    assert np.any(stats.samples == 0)


def test_cylinder_phi_walk_scale_stable_across_m():
    ratios = []
    for m in (8, 16, 32):
        model = build_model(ModelSpec(Family.CYLINDER_WALK, 10 * m,
                                      {"q": 0.75, "r": 0.75, "l": 10, "m": m}))
        stats = cylinder_coupling(model, 0, replicas=2000, seed=37)
        ratios.append(stats.extras["gamma_phi"].mean() / m ** 2)
    for rho in ratios:
        assert 0.05 <= rho <= 1.0


def test_cylinder_rejects_bad_inputs():
    model = build_model(ModelSpec(Family.CYLINDER_WALK, 30,
                                  {"q": 0.8, "r": 0.7, "l": 6, "m": 5}))
    with pytest.raises(IndexError):
        cylinder_coupling(model, 9, replicas=5, seed=0)
    flat = build_model(ModelSpec(Family.EHRENFEST_URN, 10))
    with pytest.raises(UnsupportedFamilyError):
        cylinder_coupling(flat, 0, replicas=5, seed=0)


def test_coalescence_tail_table():
    stats = CoalescenceStats(np.zeros(100, dtype=np.int64), z0=0,
                             delta_n=10.0, seed=0)
    rows = coalescence_tail(stats, [1.0, 2.0, 4.0])
    assert all(r["tail"] == 0.0 for r in rows)

    samples = np.array([5, 15, 25, 120] * 25, dtype=np.int64)
    stats = CoalescenceStats(samples, z0=0, delta_n=10.0, seed=0)
    rows = coalescence_tail(stats, [1.0, 2.0, 4.0])
    tails = {r["theta"]: r["tail"] for r in rows}
    assert tails[1.0] >= tails[2.0] >= tails[4.0]
    mean = samples.mean()
    slack = 3.0 / math.sqrt(len(samples))
    for theta, tail in tails.items():
        assert tail <= mean / (theta * 10.0) + slack


def test_default_window_scale():
    eh = build_model(ModelSpec(Family.EHRENFEST_URN, 64))
    assert default_window_scale(eh) == 64
    pd = build_model(ModelSpec(Family.PARTIAL_DIFFUSIVE, 1000, {"eps": 0.4}))
    expected = 2 * (1000 ** 0.8 + 1000 ** 0.8)
    assert default_window_scale(pd) == pytest.approx(expected)
    cyl = build_model(ModelSpec(Family.CYLINDER_WALK, 60,
                                {"q": 0.8, "r": 0.7, "l": 12, "m": 5}))
    assert default_window_scale(cyl) == pytest.approx(25 + math.sqrt(12))


def test_coalescence_stats_validation():
    with pytest.raises(ParameterError):
        CoalescenceStats(np.array([1, 2]), z0=0, delta_n=0.0, seed=0)


def test_coupling_csv(tmp_path):
    stats = CoalescenceStats(np.array([4, 2]), z0=1, delta_n=5.0, seed=0)
    p = tmp_path / "c.csv"
    assert stats.to_csv(p) == 2
    assert p.read_text().splitlines()[0] == "replica,gamma"
    stats2 = CoalescenceStats(np.array([4]), z0=1, delta_n=5.0, seed=0,
                              extras={"gamma_h": np.array([1]),
                                      "gamma_phi": np.array([4])})
    p2 = tmp_path / "c2.csv"
    stats2.to_csv(p2)
    assert p2.read_text().splitlines() == ["replica,gamma,gamma_H,gamma_Phi",
                                           "0,4,1,4"]
