"""DFT beam codebooks and the exhaustive beam-sweeping baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ChannelRealization, array_response
from .signal import LinkBudget, PhaseConfig, Precoder, RateReport

TWO_PI = 2.0 * np.pi


@dataclass
class Codebook:
    """Either unit-norm BS beams (complex rows) or RIS phase profiles (real rows)."""

    entries: np.ndarray
    kind: str  # "bs" or "ris"

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def dft_bs_codebook(n: int, size: int) -> Codebook:
    """Normalized steering vectors on a uniform grid in sin-space.

    With size == n the entries are the columns of the n-point DFT matrix
    (orthonormal); larger sizes oversample the grid.
    """
    if size < 1:
        raise ValueError("codebook size must be >= 1")
    sines = -1.0 + 2.0 * np.arange(size) / size
    angles = np.arcsin(sines)
    beams = np.stack([array_response(a, n, 0.5) for a in angles]) / np.sqrt(n)
    return Codebook(beams, "bs")


def ris_phase_codebook(m: int, size: int) -> Codebook:
    """Linear phase ramps across the surface, the RIS analogue of DFT beams."""
    if size < 1:
        raise ValueError("codebook size must be >= 1")
    q = np.arange(size)[:, None]
    i = np.arange(m)[None, :]
    return Codebook(np.mod(TWO_PI * q * i / size, TWO_PI), "ris")


@dataclass
class SweepResult:
    precoder: Precoder
    phases: PhaseConfig
    report: RateReport
    ris_index: int
    bs_indices: np.ndarray
    table: list  # per-profile rows (ris_index, bs_indices..., sum_se)


def beam_sweep(realization: ChannelRealization, bs_cb: Codebook,
               ris_cb: Codebook, budget: LinkBudget) -> SweepResult:
    """Exhaustive scan over RIS profiles with greedy per-user beam assignment.

    Every user gets an equal power share p_max / K; the direct link is used
    wherever physically present.  Deterministic, ties broken by the lowest
    codebook index (RIS profile first, then beam).
    """
    h_d, g, h_r = realization.direct, realization.bs_ris, realization.ris_user
    n_users = h_d.shape[0]
    active = (~realization.blocked).astype(float)
    scale = np.sqrt(budget.p_max / n_users)
    beams = (bs_cb.entries * scale).T  # (N, Q)

    best = None
    table = []
    for ris_idx in range(ris_cb.size):
        phase = np.exp(1j * ris_cb.entries[ris_idx])
        heff = active[:, None] * np.conj(h_d) + (np.conj(h_r) * phase[None, :]) @ g
        inner = heff @ beams
        beam_power = inner.real**2 + inner.imag**2
        chosen, rates = kernels.greedy_beam_rates(beam_power, budget.sigma2)
        sum_se = float(rates.sum())
        table.append((ris_idx, tuple(int(c) for c in chosen), sum_se))
        if best is None or sum_se > best[0]:
            best = (sum_se, ris_idx, np.asarray(chosen), np.asarray(rates))

    _, ris_idx, chosen, rates = best
    w = beams[:, chosen]
    return SweepResult(
        precoder=Precoder(w),
        phases=PhaseConfig(ris_cb.entries[ris_idx].copy()),
        report=RateReport.from_rates(rates, budget.r_min),
        ris_index=int(ris_idx),
        bs_indices=chosen.astype(int),
        table=table,
    )
