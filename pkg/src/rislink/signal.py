"""Received signal, SINR, spectral efficiency, and feasibility projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ChannelRealization

TWO_PI = 2.0 * np.pi

POWER_TOL = 1e-9  # relative slack on the total-power constraint


@dataclass
class Precoder:
    """BS precoding matrix, column k serves user k."""

    w: np.ndarray  # complex (N, K)

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass
class PhaseConfig:
    """RIS phase shifts; the implied reflection coefficients e^{j angle}
    have unit modulus by construction."""

    angles: np.ndarray  # float (M,), each in [0, 2pi)

    def __post_init__(self):
        self.angles = np.mod(np.asarray(self.angles, dtype=float), TWO_PI)

    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.angles)


@dataclass(frozen=True)
class LinkBudget:
    p_max: float           # watts
    sigma2: float          # noise power per user, watts
    r_min: float = 0.0     # fairness floor, bits/s/Hz

    def __post_init__(self):
        if self.p_max <= 0 or self.sigma2 <= 0 or self.r_min < 0:
            raise ValueError("need p_max > 0, sigma2 > 0, r_min >= 0")


@dataclass
class RateReport:
    per_user_rate: np.ndarray
    sum_rate: float
    min_rate: float
    fairness_violated: bool

    @classmethod
    def from_rates(cls, rates: np.ndarray, r_min: float) -> "RateReport":
        rates = np.asarray(rates, dtype=float)
        mn = float(rates.min())
        return cls(rates, float(rates.sum()), mn, bool(mn < r_min))


def received_signal(h_eff, w: Precoder, symbols, noise_sample) -> complex:
    """Baseband sample at one user: desired + multi-user interference + noise.

    Only used for model validation; the optimization loop works from SINR.
    """
    h = np.asarray(h_eff)
    s = np.asarray(symbols)
    if w.w.shape[0] != h.shape[0] or w.w.shape[1] != s.shape[0]:
        raise ValueError("received_signal dimension mismatch")
    return complex((h @ w.w) @ s + noise_sample)


def sinr(h_eff_all, w: Precoder, sigma2: float, k: int) -> float:
    """SINR of user k: |h_k^H w_k|^2 over interference plus noise."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    h = np.asarray(h_eff_all)
    inner = h[k] @ w.w
    p = np.abs(inner) ** 2
    return float(p[k] / (p.sum() - p[k] + sigma2))


def spectral_efficiency(gamma: float) -> float:
    if gamma < 0:
        raise ValueError("SINR cannot be negative")
    return float(np.log2(1.0 + gamma))


def evaluate_rates(realization: ChannelRealization, modes, w: Precoder,
                   theta: PhaseConfig, budget: LinkBudget) -> RateReport:
    """Full rate chain for one slot.

    The direct link of user k contributes only when it is physically
    line-of-sight and the selected mode asks for it.
    """
    mode_bits = np.asarray(getattr(modes, "b", modes), dtype=float)
    active = (~realization.blocked).astype(float) * mode_bits
    rates = kernels.user_rates(
        realization.direct, realization.ris_user, realization.bs_ris,
        theta.angles, active, w.w, budget.sigma2,
    )
    return RateReport.from_rates(rates, budget.r_min)


def project_power(w_raw: np.ndarray, p_max: float) -> Precoder:
    """Scale the precoder onto the total-power ball when it overshoots."""
    w = np.asarray(w_raw, dtype=complex)
    if not np.all(np.isfinite(w.view(float))):
        raise ValueError("precoder entries must be finite")
    power = float(np.sum(np.abs(w) ** 2))
    if power == 0.0:
        raise ValueError("all-zero precoder has no direction to scale")
    if power <= p_max:
        return Precoder(w.copy())
    return Precoder(w * np.sqrt(p_max / power))


def angles_from_raw(raw: np.ndarray) -> PhaseConfig:
    """Map actor outputs in [-1, 1] onto RIS phases; clips out-of-range input."""
    r = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    return PhaseConfig(np.pi * (r + 1.0))
