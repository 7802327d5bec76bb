"""Pure NumPy implementations of the hot rate/sweep kernels.

These mirror the compiled versions in ``_fast.pyx`` exactly; the package
selects one backend at import time.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def user_rates(direct, ris_user, bs_ris, phases, active, w, sigma2):
    """Per-user spectral efficiencies for one channel realization.

    direct:   (K, N) complex, BS -> user rows
    ris_user: (K, M) complex, RIS -> user rows
    bs_ris:   (M, N) complex
    phases:   (M,) float, RIS phase shifts
    active:   (K,) float 0/1, direct-link indicator per user
    w:        (N, K) complex precoding matrix, column k serves user k
    sigma2:   noise power in watts

    Returns (K,) float rates log2(1 + SINR_k).
    """
    phase = np.exp(1j * phases)
    heff = active[:, None] * np.conj(direct) + (np.conj(ris_user) * phase[None, :]) @ bs_ris
    inner = heff @ w
    p = inner.real**2 + inner.imag**2
    sig = np.diagonal(p).copy()
    interf = p.sum(axis=1) - sig
    return np.log2(1.0 + sig / (interf + sigma2))


def greedy_beam_rates(beam_power, sigma2):
    """Greedy beam assignment given per-(user, beam) received powers.

    beam_power[k, q] is |h_eff_k^H w_q|^2 for candidate beam q (already
    power-scaled).  Users pick, in index order, the beam maximizing their own
    rate against interference from beams already assigned; ties break toward
    the lowest beam index.  Returns (assignment indices (K,), final rates (K,)).
    """
    p = np.asarray(beam_power, dtype=float)
    n_users, n_beams = p.shape
    chosen = np.zeros(n_users, dtype=np.int64)
    interf = np.zeros(n_users)
    for k in range(n_users):
        gamma = p[k] / (interf[k] + sigma2)
        q = int(np.argmax(gamma))
        chosen[k] = q
        interf += p[:, q]
        interf[k] -= p[k, q]
    # final rates account for interference from every assigned beam
    total = p[:, chosen].sum(axis=1)
    sig = p[np.arange(n_users), chosen]
    rates = np.log2(1.0 + sig / (total - sig + sigma2))
    return chosen, rates
