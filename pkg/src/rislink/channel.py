"""Geometric multipath channels, user mobility, and blockage dynamics.

All three links (BS-user, BS-RIS, RIS-user) are sums over a fixed number of
propagation paths of complex gains times uniform-linear-array steering
vectors.  Path powers decay geometrically; the first path of a line-of-sight
link is deterministic at the geometric bearing, which makes the BS-RIS link
Rician-like with a dominant direct component.  Blocked BS-user links have no
deterministic path and use the NLoS pathloss exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .utils import as_rng, complex_normal

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeometryConfig:
    """Array sizes, deployment positions, and propagation constants.

    ``area_bounds`` is the rectangle (x_min, y_min, x_max, y_max) that
    confines the users; the BS and RIS may sit outside it.  Distances below
    one meter are clamped before applying the pathloss law so the near-field
    never amplifies.
    """

    n_bs_antennas: int = 8
    n_ris_elements: int = 8
    n_users: int = 4
    n_paths: int = 10
    element_spacing: float = 0.5
    area_bounds: tuple[float, float, float, float] = (20.0, 0.0, 44.0, 20.0)
    bs_position: tuple[float, float] = (0.0, 10.0)
    ris_position: tuple[float, float] = (44.0, 10.0)
    pathloss_exponent_los: float = 2.0
    pathloss_exponent_nlos: float = 3.3
    reference_pathloss_db: float = 20.0
    path_decay: float = 0.7
    bs_ris_los_share: float = 0.7

    def __post_init__(self):
        if min(self.n_bs_antennas, self.n_ris_elements, self.n_users, self.n_paths) < 1:
            raise ValueError("antenna, element, user, and path counts must all be >= 1")
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")
        x0, y0, x1, y1 = self.area_bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError("area_bounds rectangle is degenerate")

    @property
    def path_powers(self) -> np.ndarray:
        """Per-path average power weights, geometric decay, normalized to 1."""
        w = self.path_decay ** np.arange(self.n_paths)
        return w / w.sum()


@dataclass
class UserState:
    position: np.ndarray  # (2,) meters
    velocity: np.ndarray  # (2,) meters per macro-slot
    physically_blocked: bool = False

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)


@dataclass(frozen=True)
class BlockageModel:
    """Two-state Markov chain per user per macro-slot."""

    p_block: float = 0.1
    p_unblock: float = 0.3

    def __post_init__(self):
        for p in (self.p_block, self.p_unblock):
            if not 0.0 <= p <= 1.0:
                raise ValueError("blockage probabilities must lie in [0, 1]")

    @property
    def stationary_blocked(self) -> float:
        s = self.p_block + self.p_unblock
        return self.p_block / s if s > 0 else 0.0


@dataclass
class ChannelRealization:
    """One slot's channel matrices plus the users' physical blockage flags."""

    direct: np.ndarray    # (K, N) BS -> user rows
    bs_ris: np.ndarray    # (M, N)
    ris_user: np.ndarray  # (K, M) RIS -> user rows
    blocked: np.ndarray   # (K,) bool

    def validate(self, geometry: GeometryConfig) -> None:
        k, n, m = geometry.n_users, geometry.n_bs_antennas, geometry.n_ris_elements
        if self.direct.shape != (k, n) or self.bs_ris.shape != (m, n) or self.ris_user.shape != (k, m):
            raise ValueError("channel matrix shapes inconsistent with geometry")
        for a in (self.direct, self.bs_ris, self.ris_user):
            if not np.all(np.isfinite(a.view(float))):
                raise ValueError("channel realization contains non-finite entries")


def array_response(angle: float, n: int, spacing: float = 0.5) -> np.ndarray:
    """Uniform-linear-array steering vector, element i = exp(j*2pi*spacing*i*sin(angle))."""
    if n < 1:
        raise ValueError("array needs at least one element")
    idx = np.arange(n)
    return np.exp(1j * TWO_PI * spacing * np.sin(angle) * idx)


def effective_channel(h_direct, h_ris_user, bs_ris, theta, indicator) -> np.ndarray:
    """Combined downlink row for one user: indicator * direct + reflected path.

    ``indicator`` must already fold together physical LoS availability and
    the selected link mode; ``theta`` may be a PhaseConfig or a bare angle
    array.  Returns the length-N row b*h_d^H + h_r^H diag(e^{j theta}) G.
    """
    angles = np.asarray(getattr(theta, "angles", theta), dtype=float)
    h_d = np.asarray(h_direct)
    h_r = np.asarray(h_ris_user)
    g = np.asarray(bs_ris)
    if h_d.shape[0] != g.shape[1] or h_r.shape[0] != g.shape[0] or angles.shape[0] != g.shape[0]:
        raise ValueError("effective_channel dimension mismatch")
    reflected = (np.conj(h_r) * np.exp(1j * angles)) @ g
    return (1.0 if indicator else 0.0) * np.conj(h_d) + reflected


def _bearing(src, dst) -> float:
    return math.atan2(dst[1] - src[1], dst[0] - src[0])


def _pathloss_amplitude(distance: float, exponent: float, reference_db: float) -> float:
    d = max(distance, 1.0)
    loss_db = reference_db + 10.0 * exponent * math.log10(d)
    return 10.0 ** (-loss_db / 20.0)


@dataclass
class _LinkPaths:
    """Multipath cluster of one link; path 0 is deterministic when ``los``."""

    tx_angles: np.ndarray            # departure angles at the array end
    gains: np.ndarray                # complex per-path gains
    powers: np.ndarray               # average power weights, sum 1
    amplitude: float                 # pathloss amplitude factor
    los: bool
    rx_angles: np.ndarray | None = None  # arrival angles (matrix links only)

    def step_fading(self, rho: float, rng: np.random.Generator) -> None:
        start = 1 if self.los else 0
        fresh = complex_normal(rng, self.powers.shape) * np.sqrt(self.powers)
        mix = math.sqrt(max(1.0 - rho * rho, 0.0))
        self.gains[start:] = rho * self.gains[start:] + mix * fresh[start:]

    def vector(self, n: int, spacing: float) -> np.ndarray:
        steer = np.exp(
            1j * TWO_PI * spacing * np.outer(np.sin(self.tx_angles), np.arange(n))
        )
        return self.amplitude * (self.gains @ steer)

    def matrix(self, n_rx: int, n_tx: int, spacing: float) -> np.ndarray:
        rx = np.exp(1j * TWO_PI * spacing * np.outer(np.sin(self.rx_angles), np.arange(n_rx)))
        tx = np.exp(1j * TWO_PI * spacing * np.outer(np.sin(self.tx_angles), np.arange(n_tx)))
        return self.amplitude * np.einsum("p,pm,pn->mn", self.gains, rx, np.conj(tx))


def _draw_link(rng, n_paths, powers, amplitude, los_angle, los, rx_los_angle=None,
               with_rx=False, los_share=None):
    # Draw counts are fixed per link so a seed replays identically whatever
    # the blockage state or distances.
    tx_angles = rng.uniform(-math.pi / 2, math.pi / 2, n_paths)
    rx_angles = rng.uniform(-math.pi / 2, math.pi / 2, n_paths) if with_rx else None
    w = powers.copy()
    if los and los_share is not None and n_paths > 1:
        # deterministic path takes los_share of the power, the scattered
        # paths split the rest keeping their geometric ratios
        scatter = w[1:].sum()
        w[1:] *= (1.0 - los_share) / scatter
        w[0] = los_share
    gains = complex_normal(rng, n_paths) * np.sqrt(w)
    if los:
        tx_angles[0] = los_angle
        gains[0] = math.sqrt(w[0])
        if with_rx:
            rx_angles[0] = rx_los_angle
    return _LinkPaths(tx_angles, gains, w, amplitude, los, rx_angles)


@dataclass
class ChannelState:
    """Per-link multipath state for every user plus the fixed BS-RIS link."""

    geometry: GeometryConfig
    direct: list
    ris_user: list
    bs_ris: _LinkPaths
    blocked: np.ndarray

    def realize(self) -> ChannelRealization:
        geo = self.geometry
        n, m = geo.n_bs_antennas, geo.n_ris_elements
        sp = geo.element_spacing
        h_d = np.stack([lp.vector(n, sp) for lp in self.direct])
        h_r = np.stack([lp.vector(m, sp) for lp in self.ris_user])
        g = self.bs_ris.matrix(m, n, sp)
        return ChannelRealization(h_d, g, h_r, self.blocked.copy())


def init_channel_state(geometry: GeometryConfig, users, rng) -> ChannelState:
    """Draw fresh multipath clusters for all links given current user states."""
    rng = as_rng(rng)
    geo = geometry
    if len(users) != geo.n_users:
        raise ValueError(f"expected {geo.n_users} users, got {len(users)}")
    bs = np.asarray(geo.bs_position, dtype=float)
    ris = np.asarray(geo.ris_position, dtype=float)
    powers = geo.path_powers
    ref = geo.reference_pathloss_db

    direct, ris_user = [], []
    for u in users:
        d_bs = float(np.linalg.norm(u.position - bs))
        if d_bs == 0.0:
            raise ValueError("user coincides with the BS; pathloss undefined")
        exponent = geo.pathloss_exponent_nlos if u.physically_blocked else geo.pathloss_exponent_los
        amp = _pathloss_amplitude(d_bs, exponent, ref)
        direct.append(
            _draw_link(rng, geo.n_paths, powers, amp,
                       _bearing(bs, u.position), los=not u.physically_blocked)
        )
    for u in users:
        d_ris = float(np.linalg.norm(u.position - ris))
        amp = _pathloss_amplitude(d_ris, geo.pathloss_exponent_los, ref)
        ris_user.append(
            _draw_link(rng, geo.n_paths, powers, amp,
                       _bearing(ris, u.position), los=True)
        )
    d_br = float(np.linalg.norm(ris - bs))
    bs_ris = _draw_link(
        rng, geo.n_paths, powers,
        _pathloss_amplitude(d_br, geo.pathloss_exponent_los, ref),
        _bearing(bs, ris), los=True,
        rx_los_angle=_bearing(ris, bs), with_rx=True,
        los_share=geo.bs_ris_los_share,
    )
    blocked = np.array([u.physically_blocked for u in users], dtype=bool)
    return ChannelState(geo, direct, ris_user, bs_ris, blocked)


def generate_channels(geometry: GeometryConfig, users, seed) -> ChannelRealization:
    """One-shot channel draw; deterministic in (geometry, users, seed)."""
    return init_channel_state(geometry, users, as_rng(seed)).realize()


class ChannelProcess:
    """Two-timescale channel evolution used by the environment.

    ``step_fading`` runs every slot and AR(1)-mixes the scattered path gains
    with correlation ``rho``; ``refresh`` runs every macro-slot after
    mobility/blockage updates and redraws the clusters from the new
    positions.
    """

    def __init__(self, geometry: GeometryConfig, rho: float = 0.95):
        self.geometry = geometry
        self.rho = rho
        self.state: ChannelState | None = None

    def refresh(self, users, rng) -> None:
        self.state = init_channel_state(self.geometry, users, rng)

    def step_fading(self, rng) -> None:
        rng = as_rng(rng)
        st = self.state
        for lp in st.direct:
            lp.step_fading(self.rho, rng)
        for lp in st.ris_user:
            lp.step_fading(self.rho, rng)
        st.bs_ris.step_fading(self.rho, rng)

    def realization(self) -> ChannelRealization:
        return self.state.realize()


def _reflect_coord(x: float, lo: float, hi: float) -> tuple[float, float]:
    span = hi - lo
    t = (x - lo) % (2.0 * span)
    if t <= span:
        return lo + t, 1.0
    return lo + (2.0 * span - t), -1.0


def step_mobility(users, geometry: GeometryConfig, dt: float = 1.0, seed=None,
                  jitter_std: float = 0.1, walk_std: float = 0.05,
                  max_speed: float = 1.0):
    """Advance positions one macro-slot; reflect at the area boundary.

    Draw counts per user are fixed, so disabling jitter keeps streams aligned.
    """
    rng = as_rng(seed)
    lo_x, lo_y, hi_x, hi_y = geometry.area_bounds
    out = []
    for u in users:
        jitter = rng.normal(0.0, 1.0, 2) * jitter_std * math.sqrt(dt)
        walk = rng.normal(0.0, 1.0, 2) * walk_std
        pos = u.position + u.velocity * dt + jitter
        x, fx = _reflect_coord(float(pos[0]), lo_x, hi_x)
        y, fy = _reflect_coord(float(pos[1]), lo_y, hi_y)
        vel = u.velocity * np.array([fx, fy]) + walk
        vel = np.clip(vel, -max_speed, max_speed)
        out.append(UserState(np.array([x, y]), vel, u.physically_blocked))
    return out


def step_blockage(users, model: BlockageModel, seed=None):
    """Flip each user's LoS/NLoS flag per the two-state Markov chain."""
    rng = as_rng(seed)
    draws = rng.random(len(users))
    out = []
    for u, r in zip(users, draws):
        if u.physically_blocked:
            blocked = not (r < model.p_unblock)
        else:
            blocked = r < model.p_block
        out.append(UserState(u.position.copy(), u.velocity.copy(), blocked))
    return out


def spawn_users(geometry: GeometryConfig, model: BlockageModel, rng,
                speed_std: float = 0.3):
    """Random initial users: uniform positions, small velocities, blockage
    flags drawn from the chain's stationary distribution."""
    rng = as_rng(rng)
    lo_x, lo_y, hi_x, hi_y = geometry.area_bounds
    users = []
    for _ in range(geometry.n_users):
        pos = np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)])
        vel = rng.normal(0.0, speed_std, 2)
        blocked = rng.random() < model.stationary_blocked
        users.append(UserState(pos, vel, blocked))
    return users


def user_channel_stack(realization: ChannelRealization) -> np.ndarray:
    """Per-user encoder input: row 0 the conjugated direct link, rows 1..M
    the cascaded per-element RIS rows.  Shape (K, M+1, N)."""
    k, n = realization.direct.shape
    m = realization.bs_ris.shape[0]
    out = np.empty((k, m + 1, n), dtype=complex)
    out[:, 0, :] = np.conj(realization.direct)
    out[:, 1:, :] = realization.ris_user[:, :, None] * realization.bs_ris[None, :, :]
    return out
