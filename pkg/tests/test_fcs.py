import math

import numpy as np
import pytest

from ifmsim.experiments import (
    GFEstimate,
    fcs_estimate,
    moments_from_gf,
    poisson_generating_function,
    zero_freq_psd_check,
)
from ifmsim.noise import ProtocolTiming, PulseSchedule
from ifmsim.protocols import run_qubit
from ifmsim.pulses import Pulse

AXIS = -np.pi / 2


def test_gf_at_zero_attenuation_is_one():
    gf = fcs_estimate(kappa=4e5, theta=0.5, total_duration=1e-5,
                      lambda_values=[0.0], realizations=200, master_seed=1)
    assert abs(gf.re[0] - 1.0) < 1e-15
    assert abs(gf.im[0]) < 1e-15


def test_gf_matches_poisson_at_pi_point():
    # kappa T = 4 and lambda theta = pi: gf = exp(-8)
    kappa_t = 4.0
    total = 1e-5
    theta = np.pi / 2
    r = 10_000
    gf = fcs_estimate(kappa_t / total, theta, total, lambda_values=[2.0],
                      realizations=r, master_seed=7)
    expected = math.exp(kappa_t * (math.cos(np.pi) - 1.0))  # exp(-8), imaginary part 0
    assert abs(gf.re[0] - expected) < 4.0 / math.sqrt(r)
    assert abs(gf.im[0]) < 4.0 / math.sqrt(r)


def test_gf_matches_poisson_across_grid():
    kappa_t = 4.0
    total = 1e-5
    theta = np.pi / 4
    lambdas = np.linspace(-2.0, 2.0, 41)
    r = 10_000
    gf = fcs_estimate(kappa_t / total, theta, total, lambdas, r, master_seed=11)
    analytic = poisson_generating_function(kappa_t / total, total, theta, lambdas)
    err = np.maximum(gf.statistical_error, 1e-12)
    assert np.max(np.abs(gf.re - analytic.real) / err) < 3.0
    assert np.max(np.abs(gf.im - analytic.imag) / err) < 3.0


def test_slot_placement_does_not_matter_for_qubit():
    # same-axis pulses: the response depends only on the total angle
    rng = np.random.default_rng(3)
    n = 20
    counts = np.zeros(n)
    np.add.at(counts, rng.integers(0, n, 7), 1.0)
    theta = 0.37
    timing = ProtocolTiming(n, 1.0, 0.0)

    def marker(c):
        pulses = tuple(Pulse([k * theta], [AXIS]) for k in c)
        return run_qubit(PulseSchedule(pulses, timing)).marker

    base = marker(counts)
    for _ in range(10):
        shuffled = counts.copy()
        rng.shuffle(shuffled)
        assert abs(marker(shuffled) - base) < 1e-12


def test_moments_plane_wave():
    # gf of a deterministic angle a: exp(i lambda a)
    a = 0.8
    h = 0.01
    lam = np.array([-h, 0.0, h])
    vals = np.exp(1j * lam * a)
    gf = GFEstimate(lam, vals.real, vals.imag, np.zeros(3))
    assert abs(moments_from_gf(gf, 1) - a) < 1e-4  # O(h^2) truncation
    assert abs(moments_from_gf(gf, 2) - a * a) < 1e-3


def test_moments_poisson_mean_and_variance_ratio():
    kappa_t = 4.0
    total = 1e-5
    theta = 0.1
    h = 0.01
    gf = fcs_estimate(kappa_t / total, theta, total, np.array([-h, 0.0, h]),
                      realizations=10_000, master_seed=13)
    m1 = moments_from_gf(gf, 1)
    assert abs(m1 - kappa_t * theta) < 0.02  # analytic mean 0.4
    m2 = moments_from_gf(gf, 2)
    mean_m = m1 / theta
    var_m = (m2 - m1 * m1) / theta**2
    assert abs(var_m / mean_m - 1.0) < 0.10


def test_moments_require_symmetric_grid():
    gf = GFEstimate(np.array([0.0, 0.01]), np.ones(2), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        moments_from_gf(gf, 1)
    gf2 = GFEstimate(np.array([-0.02, 0.0, 0.01]), np.ones(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        moments_from_gf(gf2, 2)


def test_zero_freq_psd_trivial_when_drive_vanishes():
    report = zero_freq_psd_check(kappa=1e5, theta=0.0, total_duration=1e-5,
                                 realizations=200, master_seed=5)
    assert report.theta_t2_fcs == 0.0
    assert report.theta_t2_psd == 0.0
    assert report.agrees


def test_zero_freq_psd_agreement():
    report = zero_freq_psd_check(kappa=1e6, theta=0.05, total_duration=1e-5,
                                 realizations=10_000, master_seed=17)
    assert report.agrees
    assert abs(report.ratio - 1.0) <= 0.15


def test_zero_freq_psd_scales_linearly_with_duration():
    # Poisson: <theta_T^2> = kT t^2 + (kT t)^2, so the connected part doubles with T
    kappa, theta = 1e6, 0.05
    r1 = zero_freq_psd_check(kappa, theta, 1e-5, realizations=8000, master_seed=19)
    r2 = zero_freq_psd_check(kappa, theta, 2e-5, realizations=8000, master_seed=23)
    kt1, kt2 = kappa * 1e-5, kappa * 2e-5
    expected1 = kt1 * theta**2 + (kt1 * theta) ** 2
    expected2 = kt2 * theta**2 + (kt2 * theta) ** 2
    assert abs(r1.theta_t2_fcs - expected1) / expected1 < 0.1
    assert abs(r2.theta_t2_fcs - expected2) / expected2 < 0.1


def test_stderr_shrinks_with_realizations():
    kappa_t, total, theta = 4.0, 1e-5, np.pi / 4
    lam = np.array([0.9])
    small = fcs_estimate(kappa_t / total, theta, total, lam, 1000, master_seed=29)
    large = fcs_estimate(kappa_t / total, theta, total, lam, 4000, master_seed=29)
    ratio = large.statistical_error[0] / small.statistical_error[0]
    assert abs(ratio - 0.5) < 0.1  # 1/sqrt(R) scaling within 20 percent
