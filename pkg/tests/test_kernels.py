import numpy as np
import pytest

from rislink import kernels
from rislink.kernels import _numpy as np_backend


def _instance(rng, k=4, n=8, m=8):
    return dict(
        direct=rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)),
        ris_user=rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m)),
        bs_ris=rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)),
        phases=rng.uniform(0, 2 * np.pi, m),
        active=rng.integers(0, 2, k).astype(float),
        w=rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)),
        sigma2=float(rng.uniform(0.01, 1.0)),
    )


def test_backend_name():
    assert kernels.BACKEND in ("cython", "numpy")


def test_user_rates_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(50):
        inst = _instance(rng)
        a = kernels.user_rates(**inst)
        b = np_backend.user_rates(**inst)
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_user_rates_matches_op_composition():
    from rislink.channel import effective_channel
    from rislink.signal import Precoder, sinr, spectral_efficiency

    rng = np.random.default_rng(1)
    inst = _instance(rng, k=3, n=4, m=5)
    rates = kernels.user_rates(**inst)
    heff = np.stack([
        effective_channel(inst["direct"][k], inst["ris_user"][k], inst["bs_ris"],
                          inst["phases"], inst["active"][k])
        for k in range(3)
    ])
    w = Precoder(inst["w"])
    for k in range(3):
        expected = spectral_efficiency(sinr(heff, w, inst["sigma2"], k))
        assert rates[k] == pytest.approx(expected, rel=1e-12)


def test_greedy_beam_rates_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(50):
        p = rng.uniform(0, 5, (4, 9))
        a_idx, a_rates = kernels.greedy_beam_rates(p, 0.3)
        b_idx, b_rates = np_backend.greedy_beam_rates(p, 0.3)
        np.testing.assert_array_equal(a_idx, b_idx)
        np.testing.assert_allclose(a_rates, b_rates, rtol=1e-12)


def test_greedy_beam_rates_tie_break_lowest_index():
    p = np.array([[1.0, 1.0, 0.5]])
    idx, _ = kernels.greedy_beam_rates(p, 1.0)
    assert idx[0] == 0
