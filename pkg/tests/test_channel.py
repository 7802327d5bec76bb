import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rislink.channel import (BlockageModel, ChannelProcess, GeometryConfig,
                             UserState, array_response, effective_channel,
                             generate_channels, step_blockage, step_mobility,
                             user_channel_stack)


def test_array_response_broadside_is_ones():
    np.testing.assert_allclose(array_response(0.0, 4, 0.5), np.ones(4))


def test_array_response_endfire_two_elements():
    np.testing.assert_allclose(array_response(np.pi / 2, 2, 0.5),
                               np.array([1.0, -1.0]), atol=1e-12)


def test_array_response_phase_linearity():
    # element i's phase must be i times element 1's phase (mod 2pi)
    rng = np.random.default_rng(0)
    for angle in rng.uniform(-np.pi / 2, np.pi / 2, 100):
        v = array_response(angle, 5, 0.5)
        base = 2 * np.pi * 0.5 * np.sin(angle)
        expected = np.exp(1j * base * np.arange(5))
        np.testing.assert_allclose(v, expected, atol=1e-12)
    v = array_response(np.pi / 6, 3, 0.5)
    assert np.angle(v[2]) == pytest.approx(np.pi, abs=1e-12)


@given(st.floats(-10.0, 10.0), st.integers(1, 32))
def test_array_response_unit_magnitude(angle, n):
    assert np.allclose(np.abs(array_response(angle, n, 0.5)), 1.0)


def test_generate_channels_deterministic(small_geometry, small_users):
    a = generate_channels(small_geometry, small_users, 7)
    b = generate_channels(small_geometry, small_users, 7)
    assert np.array_equal(a.direct, b.direct)
    assert np.array_equal(a.bs_ris, b.bs_ris)
    assert np.array_equal(a.ris_user, b.ris_user)
    assert np.array_equal(a.blocked, b.blocked)
    c = generate_channels(small_geometry, small_users, 8)
    assert not np.array_equal(a.direct, c.direct)


def test_generate_channels_single_los_path_is_steering_vector():
    # one deterministic path at broadside, reference loss 0 dB at 1 m
    geo = GeometryConfig(n_bs_antennas=4, n_ris_elements=2, n_users=1, n_paths=1,
                         area_bounds=(0.5, -1.0, 3.0, 1.0),
                         bs_position=(0.0, 0.0), ris_position=(3.0, 0.0),
                         reference_pathloss_db=0.0)
    user = UserState(np.array([1.0, 0.0]), np.zeros(2), False)
    real = generate_channels(geo, [user], 3)
    np.testing.assert_allclose(real.direct[0], np.ones(4), atol=1e-12)


def test_generate_channels_rejects_user_on_bs():
    geo = GeometryConfig(n_users=1, area_bounds=(-1.0, -1.0, 1.0, 1.0),
                         bs_position=(0.0, 0.0))
    user = UserState(np.zeros(2), np.zeros(2), False)
    with pytest.raises(ValueError):
        generate_channels(geo, [user], 0)


def test_pathloss_distance_doubling_power_ratio():
    # Monte-Carlo oracle: with exponent 2, doubling the BS-user distance
    # scales mean per-entry power by exactly 1/4
    geo = GeometryConfig(n_bs_antennas=2, n_ris_elements=1, n_users=1, n_paths=3,
                         area_bounds=(1.0, -20.0, 25.0, 20.0),
                         bs_position=(0.0, 0.0), ris_position=(25.0, 0.0),
                         pathloss_exponent_los=2.0)
    near = UserState(np.array([5.0, 0.0]), np.zeros(2), False)
    far = UserState(np.array([10.0, 0.0]), np.zeros(2), False)
    ratios = np.empty(10_000)
    for seed in range(ratios.size):
        h_near = generate_channels(geo, [near], seed).direct
        h_far = generate_channels(geo, [far], seed).direct
        ratios[seed] = np.mean(np.abs(h_far) ** 2) / np.mean(np.abs(h_near) ** 2)
    assert abs(ratios.mean() - 0.25) < 1e-6


def test_effective_channel_scalar_cases():
    one = np.array([1.0 + 0j])
    g = np.array([[1.0 + 0j]])
    assert effective_channel(one, one, g, np.array([0.0]), 1)[0] == pytest.approx(2 + 0j)
    assert effective_channel(one, one, g, np.array([np.pi]), 1)[0] == pytest.approx(0 + 0j, abs=1e-12)


def test_effective_channel_indicator_masks_direct():
    rng = np.random.default_rng(1)
    h_r = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    g = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    theta = rng.uniform(0, 2 * np.pi, 3)
    ris_only = (np.conj(h_r) * np.exp(1j * theta)) @ g
    for _ in range(100):
        h_d = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        out = effective_channel(h_d, h_r, g, theta, 0)
        np.testing.assert_array_equal(out, ris_only)
        out1 = effective_channel(h_d, h_r, g, theta, 1)
        np.testing.assert_allclose(out1, np.conj(h_d) + ris_only, rtol=1e-15)


def test_effective_channel_dimension_mismatch():
    with pytest.raises(ValueError):
        effective_channel(np.ones(3), np.ones(2), np.ones((2, 4)), np.zeros(2), 1)


def test_step_mobility_static_without_jitter(small_geometry):
    users = [UserState(np.array([15.0, 10.0]), np.zeros(2), False)]
    out = step_mobility(users, small_geometry, seed=0, jitter_std=0.0, walk_std=0.0)
    np.testing.assert_array_equal(out[0].position, users[0].position)


def test_step_mobility_reflects_at_boundary(small_geometry):
    users = [UserState(np.array([29.5, 10.0]), np.array([0.8, 0.0]), False)]
    out = step_mobility(users, small_geometry, seed=0, jitter_std=0.0, walk_std=0.0)
    assert out[0].position[0] == pytest.approx(29.7)  # reflected off x=30
    assert out[0].velocity[0] == pytest.approx(-0.8)


def test_step_mobility_stays_in_bounds(small_geometry):
    rng = np.random.default_rng(2)
    users = [UserState(np.array([12.0, 5.0]), rng.normal(0, 0.8, 2), False)]
    lo_x, lo_y, hi_x, hi_y = small_geometry.area_bounds
    for _ in range(10_000):
        users = step_mobility(users, small_geometry, seed=rng)
        x, y = users[0].position
        assert lo_x <= x <= hi_x and lo_y <= y <= hi_y


def test_step_blockage_absorbing_and_certain():
    users = [UserState(np.zeros(2), np.zeros(2), False),
             UserState(np.zeros(2), np.zeros(2), True)]
    frozen = step_blockage(users, BlockageModel(0.0, 0.0), seed=0)
    assert [u.physically_blocked for u in frozen] == [False, True]
    flipped = step_blockage([users[0]], BlockageModel(1.0, 0.0), seed=0)
    assert flipped[0].physically_blocked


def test_step_blockage_stationary_fraction():
    model = BlockageModel(0.2, 0.4)
    user = [UserState(np.zeros(2), np.zeros(2), False)]
    rng = np.random.default_rng(3)
    blocked = 0
    steps = 100_000
    for _ in range(steps):
        user = step_blockage(user, model, rng)
        blocked += user[0].physically_blocked
    assert abs(blocked / steps - 0.2 / 0.6) < 0.02


def test_channel_process_fading_changes_scatter_preserves_los(small_geometry, small_users):
    proc = ChannelProcess(small_geometry, rho=0.9)
    rng = np.random.default_rng(4)
    proc.refresh(small_users, rng)
    before = proc.realization()
    los_gain_before = proc.state.bs_ris.gains[0]
    proc.step_fading(rng)
    after = proc.realization()
    assert proc.state.bs_ris.gains[0] == los_gain_before
    assert not np.array_equal(before.direct, after.direct)
    after.validate(small_geometry)


def test_user_channel_stack_layout(small_realization, small_geometry):
    stack = user_channel_stack(small_realization)
    k, n, m = (small_geometry.n_users, small_geometry.n_bs_antennas,
               small_geometry.n_ris_elements)
    assert stack.shape == (k, m + 1, n)
    np.testing.assert_array_equal(stack[1, 0], np.conj(small_realization.direct[1]))
    np.testing.assert_allclose(
        stack[0, 2], small_realization.ris_user[0, 1] * small_realization.bs_ris[1])
