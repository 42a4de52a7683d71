import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwave_rrm.channel import (ChannelConfig, ChannelRealization, GeometryConfig, array_response,
                                channel_matrix, coherence_deviation, draw_realization,
                                rbl_frequencies, rms_delay_spread)
from mmwave_rrm.errors import ConfigError


def single_path(nb=8, nu=4, aod=0.3, aoa=-0.2, q=3):
    one = np.ones((1, 1, 1))
    return ChannelRealization(
        seed=None, radius_m=np.array([10.0]), azimuth_rad=np.zeros(1), pathloss_db=np.zeros(1),
        cluster_delay_s=np.zeros((1, 1)), cluster_power=np.ones((1, 1)), path_delay_s=0 * one,
        path_power=one, path_phase=0 * one, aod_rad=aod * one, aoa_rad=aoa * one,
        rbl_freqs_hz=rbl_frequencies(GeometryConfig(), q), num_bs_antennas=nb, num_ue_antennas=nu)


def test_array_response_examples():
    np.testing.assert_allclose(array_response(4, 0.0), np.ones(4))
    np.testing.assert_allclose(array_response(2, np.pi / 2), [1, -1], atol=1e-15)
    assert np.allclose(np.abs(array_response(16, np.linspace(-1, 1, 7))), 1.0)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(1, 64))
def test_array_inner_product_is_dirichlet_kernel(a1, a2, n):
    ip = abs(np.vdot(array_response(n, a1), array_response(n, a2)))
    x = np.pi * (np.sin(a1) - np.sin(a2))
    ref = n if abs(np.sin(x / 2)) < 1e-9 else abs(np.sin(n * x / 2) / np.sin(x / 2))
    assert ip == pytest.approx(ref, rel=1e-6, abs=1e-6)


def test_single_path_channel_is_outer_product():
    real = single_path()
    g = channel_matrix(real, 0, 1)
    ref = np.outer(array_response(4, -0.2), array_response(8, 0.3).conj())
    np.testing.assert_allclose(g, ref, atol=1e-14)


def test_frobenius_norm_flat_without_delays():
    real = draw_realization(4, 2)
    real = dataclasses.replace(real, cluster_delay_s=0 * real.cluster_delay_s,
                               path_delay_s=0 * real.path_delay_s)
    norms = [np.linalg.norm(channel_matrix(real, 1, q)) for q in range(real.num_rbls)]
    np.testing.assert_allclose(norms, norms[0], rtol=1e-12)
    assert coherence_deviation(real, 1, 5, 6, 720e3) == pytest.approx(0.0, abs=1e-9)


def test_channel_energy_matches_expectation_over_phases():
    # E||G||_F^2 = N_u N_b 10^(-PL/10) / N_path when the ray phases are uniform.
    real = draw_realization(7, 1, ch_cfg=ChannelConfig(num_bs_antennas=16, num_ue_antennas=4))
    rng = np.random.default_rng(0)
    acc = []
    for _ in range(2000):
        r = dataclasses.replace(real, path_phase=rng.uniform(0, 2 * np.pi, real.path_phase.shape))
        acc.append(np.linalg.norm(channel_matrix(r, 0, 0)) ** 2)
    expected = 16 * 4 * 10 ** (-real.pathloss_db[0] / 10) / real.num_paths
    assert np.mean(acc) == pytest.approx(expected, rel=0.05)


def test_realization_is_deterministic():
    a, b = draw_realization(11, 10), draw_realization(11, 10)
    for f in dataclasses.fields(a):
        np.testing.assert_array_equal(getattr(a, f.name), getattr(b, f.name))
    np.testing.assert_array_equal(channel_matrix(a, 3, 7), channel_matrix(b, 3, 7))


def test_power_fractions_and_geometry():
    real = draw_realization(2, 50)
    np.testing.assert_allclose(real.cluster_power.sum(axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(real.path_power.sum(axis=2), 1, atol=1e-12)
    assert np.all(real.radius_m >= 6) and np.all(real.radius_m <= 75)
    assert np.all(real.cluster_delay_s >= 0) and np.all(real.path_delay_s >= 0)
    one = draw_realization(2, 3, ch_cfg=ChannelConfig(num_clusters=1, num_paths=1))
    np.testing.assert_array_equal(one.cluster_power, 1.0)
    np.testing.assert_array_equal(one.path_power, 1.0)


def test_cluster_delay_mean():
    real = draw_realization(5, 2000)  # 10^4 cluster delays
    assert real.cluster_delay_s.mean() == pytest.approx(200e-9, rel=0.05)


def test_rbl_frequencies_zero_based():
    f = rbl_frequencies(GeometryConfig(), 22)
    assert f[0] == pytest.approx(28e9 - 50e6)
    np.testing.assert_allclose(np.diff(f), 100e6 / 22)


def test_bad_inputs():
    with pytest.raises(ConfigError):
        draw_realization(0, 2, geom=GeometryConfig(exclusion_radius_m=80))
    with pytest.raises(ConfigError):
        draw_realization(0, 2, ch_cfg=ChannelConfig(num_clusters=0))
    with pytest.raises(ConfigError):
        draw_realization(0, 0)
    real = draw_realization(0, 2)
    with pytest.raises(IndexError):
        channel_matrix(real, 0, 22)
    with pytest.raises(IndexError):
        channel_matrix(real, 2, 0)


def test_subset_clones_ues():
    real = draw_realization(9, 3)
    twin = real.subset([1, 1])
    np.testing.assert_array_equal(channel_matrix(twin, 0, 4), channel_matrix(twin, 1, 4))
    np.testing.assert_array_equal(channel_matrix(twin, 0, 4), channel_matrix(real, 1, 4))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_delay_spread_diagnostics_are_finite(seed):
    real = draw_realization(seed, 1)
    tau = rms_delay_spread(real, 0)
    assert 0 <= tau < 5e-6
    assert np.isfinite(coherence_deviation(real, 0, 0, 6, 720e3))
