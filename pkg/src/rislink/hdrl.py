"""Two-timescale SMDP environment and the DDPG controllers.

The meta-controller picks per-user link modes once per macro-slot from user
positions and blockage flags; the sub-controller picks a precoder and RIS
phases every slot from the users' channel embeddings plus the active goal.
A flat single-agent variant (same observations, joint action space) serves
as the non-hierarchical baseline, and the codebook sweep as the
learning-free one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (BlockageModel, ChannelProcess, GeometryConfig,
                      spawn_users, step_blockage, step_mobility,
                      user_channel_stack)
from .codebook import beam_sweep, dft_bs_codebook, ris_phase_codebook
from .encoder import EncoderParams, embed_batch
from .learn import AdamState, Mlp, adam_step, backward, forward, mlp_init, soft_update
from .signal import LinkBudget, PhaseConfig, Precoder, angles_from_raw, evaluate_rates, project_power
from .utils import as_rng

# seed-stream domains; evaluation environments are shared across methods
_DOMAIN_AGENT = 11
_DOMAIN_TRAIN_ENV = 23
_DOMAIN_EVAL_ENV = 47


@dataclass
class Goal:
    """Per-user link-mode bits chosen by the meta-controller."""

    b: np.ndarray  # (K,) int8 in {0, 1}

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.int8)


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    lr_actor: float = 1e-4
    lr_critic: float = 1e-4
    tau: float = 0.005
    batch: int = 64
    noise_std_start: float = 0.3
    noise_std_final: float = 0.02
    noise_decay_frac: float = 0.6
    penalty: float = 10.0
    macro_len: int = 10            # slots per macro-slot
    slot_duration_ms: float = 0.5
    meta_buffer: int = 500
    sub_buffer: int = 400
    hidden: tuple = (256, 256)
    fading_rho: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.macro_len < 1:
            raise ValueError("macro_len must be >= 1")
        if self.penalty < 0:
            raise ValueError("penalty must be nonnegative")


class ReplayBuffer:
    """Fixed-capacity FIFO ring of (s, a, r, s') rows."""

    def __init__(self, capacity: int, s_dim: int, a_dim: int):
        self.capacity = capacity
        self._s = np.empty((capacity, s_dim))
        self._a = np.empty((capacity, a_dim))
        self._r = np.empty(capacity)
        self._s2 = np.empty((capacity, s_dim))
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, s, a, r, s2) -> None:
        i = self._cursor
        self._s[i] = s
        self._a[i] = a
        self._r[i] = r
        self._s2[i] = s2
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch: int, rng):
        idx = as_rng(rng).integers(0, self._size, batch)
        return self._s[idx], self._a[idx], self._r[idx], self._s2[idx]


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s2: np.ndarray


class DownlinkEnv:
    """Channel/user dynamics: fading every slot, mobility and blockage every
    macro-slot.  All randomness comes from the env's own generator, so a
    rollout is a deterministic function of the seed given fixed policies."""

    def __init__(self, geometry: GeometryConfig, budget: LinkBudget,
                 blockage: BlockageModel, fading_rho: float = 0.95, seed=0,
                 jitter_std: float = 0.1, walk_std: float = 0.05):
        self.geometry = geometry
        self.budget = budget
        self.blockage = blockage
        self.jitter_std = jitter_std
        self.walk_std = walk_std
        self.rng = np.random.default_rng(seed)
        self.users = spawn_users(geometry, blockage, self.rng)
        self.process = ChannelProcess(geometry, fading_rho)
        self.process.refresh(self.users, self.rng)
        self._real = self.process.realization()

    def advance_slot(self) -> None:
        self.process.step_fading(self.rng)
        self._real = self.process.realization()

    def advance_macro(self) -> None:
        self.users = step_mobility(self.users, self.geometry, 1.0, self.rng,
                                   self.jitter_std, self.walk_std)
        self.users = step_blockage(self.users, self.blockage, self.rng)
        self.process.refresh(self.users, self.rng)
        self._real = self.process.realization()

    def realization(self):
        return self._real

    def encoder_inputs(self) -> np.ndarray:
        return user_channel_stack(self._real)

    def high_state(self) -> np.ndarray:
        lo_x, lo_y, hi_x, hi_y = self.geometry.area_bounds
        pos = np.stack([u.position for u in self.users])
        norm = (pos - np.array([lo_x, lo_y])) / np.array([hi_x - lo_x, hi_y - lo_y])
        blocked = np.array([float(u.physically_blocked) for u in self.users])
        return np.concatenate([norm.ravel(), blocked])


def low_state(embeddings: np.ndarray, goal: Goal) -> np.ndarray:
    """Sub-controller observation: flattened per-user embeddings + goal bits."""
    return np.concatenate([np.asarray(embeddings, dtype=float).ravel(),
                           goal.b.astype(float)])


def _meta_policy(state, actor: Mlp, noise_std: float, rng):
    out, _ = forward(actor, state)
    if noise_std > 0:
        out = out + as_rng(rng).normal(0.0, noise_std, out.shape)
    cont = np.clip(out, 0.0, 1.0)
    return cont, Goal((cont > 0.5).astype(np.int8))


def meta_select_goal(state, actor: Mlp, noise_std: float, seed) -> Goal:
    """Threshold the (noised) sigmoid outputs into per-user mode bits."""
    return _meta_policy(state, actor, noise_std, seed)[1]


def _interleave(w: np.ndarray) -> np.ndarray:
    flat = np.empty(2 * w.size)
    flat[0::2] = w.real.ravel()
    flat[1::2] = w.imag.ravel()
    return flat


def _sub_policy(state, actor: Mlp, noise_std: float, rng, n_bs: int,
                n_users: int, p_max: float):
    out, _ = forward(actor, state)
    if noise_std > 0:
        out = out + as_rng(rng).normal(0.0, noise_std, out.shape)
    raw = np.clip(out, -1.0, 1.0)
    precoder, phases = action_to_config(raw, n_bs, n_users, p_max)
    # replay buffers store the executed (projected) precoder entries
    stored = np.concatenate([_interleave(precoder.w), raw[2 * n_bs * n_users:]])
    return stored, precoder, phases


def action_to_config(raw: np.ndarray, n_bs: int, n_users: int, p_max: float):
    """Map a raw [-1, 1] action vector onto a feasible (precoder, phases).

    Layout: 2*N*K interleaved re/im precoder entries, then M phase controls.
    """
    split = 2 * n_bs * n_users
    wpart = raw[:split]
    w = (wpart[0::2] + 1j * wpart[1::2]).reshape(n_bs, n_users)
    if np.any(w):
        precoder = project_power(w, p_max)
    else:
        precoder = Precoder(w)  # all-zero action transmits nothing, trivially feasible
    return precoder, angles_from_raw(raw[split:])


def sub_select_action(state, actor: Mlp, noise_std: float, seed, n_bs: int,
                      n_users: int, p_max: float):
    """(Precoder, PhaseConfig) from the sub-controller; always feasible."""
    _, precoder, phases = _sub_policy(state, actor, noise_std, seed,
                                      n_bs, n_users, p_max)
    return precoder, phases


def low_reward(report, r_min: float, penalty: float) -> float:
    """Sum spectral efficiency, minus a flat penalty on fairness violation."""
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    hit = report.min_rate < r_min
    return float(report.sum_rate - (penalty if hit else 0.0))


def high_reward(low_rewards) -> float:
    """Undiscounted sum of the macro-slot's slot rewards."""
    rewards = list(low_rewards)
    if not rewards:
        raise ValueError("a macro-slot contains at least one slot")
    return float(sum(rewards))


class PowerBallMap:
    """Feasibility map for the precoder block of an action vector.

    Replay buffers store executed (already projected) actions, and the actor
    update differentiates through the projection, whose Jacobian is the
    tangential projector scaled by the shrink factor.  Without this the
    critic sees a radial direction along which the reward is constant, which
    in practice drives the tanh outputs into saturation.
    """

    def __init__(self, offset: int, n_w: int, p_max: float):
        self.sl = slice(offset, offset + n_w)
        self.p_max = p_max

    def apply(self, a: np.ndarray) -> np.ndarray:
        out = a.copy()
        w = a[:, self.sl]
        power = np.maximum((w * w).sum(axis=1, keepdims=True), 1e-300)
        scale = np.minimum(1.0, np.sqrt(self.p_max / power))
        out[:, self.sl] = w * scale
        return out

    def chain(self, a: np.ndarray, grad: np.ndarray) -> np.ndarray:
        out = grad.copy()
        w = a[:, self.sl]
        g = grad[:, self.sl]
        power = np.maximum((w * w).sum(axis=1, keepdims=True), 1e-300)
        active = power > self.p_max
        scale = np.where(active, np.sqrt(self.p_max / power), 1.0)
        radial = (g * w).sum(axis=1, keepdims=True) / power
        out[:, self.sl] = np.where(active, scale * (g - w * radial), g)
        return out


class DdpgAgent:
    """Actor-critic pair with target networks and a replay buffer."""

    def __init__(self, s_dim: int, a_dim: int, out_activation: str,
                 cfg: AgentConfig, buffer_capacity: int, rng,
                 action_map: PowerBallMap | None = None):
        rng = as_rng(rng)
        hidden = tuple(cfg.hidden)
        acts = ("relu",) * len(hidden)
        self.s_dim = s_dim
        self.a_dim = a_dim
        self.cfg = cfg
        self.action_map = action_map
        self.actor = mlp_init((s_dim, *hidden, a_dim), acts + (out_activation,),
                              rng, out_scale=1e-3)
        self.critic = mlp_init((s_dim + a_dim, *hidden, 1), acts + ("identity",), rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = AdamState(lr=cfg.lr_actor)
        self.critic_opt = AdamState(lr=cfg.lr_critic)
        self.buffer = ReplayBuffer(buffer_capacity, s_dim, a_dim)

    def _executed(self, a: np.ndarray) -> np.ndarray:
        return self.action_map.apply(a) if self.action_map is not None else a

    def update(self, rng):
        """One DDPG step; returns (critic_loss, actor_loss) or None when the
        buffer cannot fill a minibatch yet."""
        cfg = self.cfg
        if len(self.buffer) < cfg.batch:
            return None
        rng = as_rng(rng)
        s, a, r, s2 = self.buffer.sample(cfg.batch, rng)

        a2, _ = forward(self.target_actor, s2)
        q2, _ = forward(self.target_critic,
                        np.concatenate([s2, self._executed(a2)], axis=1))
        y = r[:, None] + cfg.gamma * q2

        q, tape_c = forward(self.critic, np.concatenate([s, a], axis=1))
        diff = q - y
        critic_loss = float(np.mean(diff * diff))
        g_critic, _ = backward(self.critic, tape_c, 2.0 * diff / diff.size)
        self.critic.params, self.critic_opt = adam_step(
            self.critic.params, g_critic, self.critic_opt)

        a_pred, tape_a = forward(self.actor, s)
        a_exec = self._executed(a_pred)
        q_a, tape_c2 = forward(self.critic, np.concatenate([s, a_exec], axis=1))
        actor_loss = float(-np.mean(q_a))
        _, d_input = backward(self.critic, tape_c2,
                              np.full_like(q_a, -1.0 / q_a.size),
                              need_param_grads=False)
        d_action = d_input[:, self.s_dim:]
        if self.action_map is not None:
            d_action = self.action_map.chain(a_pred, d_action)
        g_actor, _ = backward(self.actor, tape_a, d_action)
        self.actor.params, self.actor_opt = adam_step(
            self.actor.params, g_actor, self.actor_opt)

        self.target_actor = soft_update(self.target_actor, self.actor, cfg.tau)
        self.target_critic = soft_update(self.target_critic, self.critic, cfg.tau)
        return critic_loss, actor_loss


def ddpg_update(agent: DdpgAgent, seed):
    """Spec-level surface for one off-policy update on an agent."""
    return agent.update(seed)


def run_macro_slot(env: DownlinkEnv, meta_actor: Mlp, sub_actor: Mlp,
                   enc: EncoderParams, cfg: AgentConfig, rng,
                   meta_noise: float = 0.0, sub_noise: float = 0.0,
                   on_sub_transition=None):
    """Roll one macro-slot: goal selection, macro_len controlled slots, then
    the mobility/blockage step.

    Returns (meta transition, sub transitions, metrics).  Sub transitions
    close on the next slot's observation; the final one closes on the
    post-macro state under the same goal.  The meta transition stores the
    continuous pre-threshold goal as its action.
    """
    rng = as_rng(rng)
    geo = env.geometry
    s_h = env.high_state()
    cont_goal, goal = _meta_policy(s_h, meta_actor, meta_noise, rng)

    rewards = []
    sum_se = 0.0
    violations = 0
    subs = []
    pending = None  # (state, raw action, reward) awaiting its next state

    def close(next_state):
        tr = Transition(pending[0], pending[1], pending[2], next_state)
        subs.append(tr)
        if on_sub_transition is not None:
            on_sub_transition(tr)

    for _ in range(cfg.macro_len):
        env.advance_slot()
        emb = embed_batch(env.encoder_inputs(), enc)
        s_l = low_state(emb, goal)
        if pending is not None:
            close(s_l)
        raw, precoder, phases = _sub_policy(
            s_l, sub_actor, sub_noise, rng,
            geo.n_bs_antennas, geo.n_users, env.budget.p_max)
        report = evaluate_rates(env.realization(), goal, precoder, phases, env.budget)
        r_l = low_reward(report, env.budget.r_min, cfg.penalty)
        rewards.append(r_l)
        sum_se += report.sum_rate
        violations += int(report.fairness_violated)
        pending = (s_l, raw, r_l)

    env.advance_macro()
    emb = embed_batch(env.encoder_inputs(), enc)
    close(low_state(emb, goal))

    meta_tr = Transition(s_h, cont_goal, high_reward(rewards), env.high_state())
    metrics = {
        "mean_sum_se": sum_se / cfg.macro_len,
        "violations": violations,
        "rewards": rewards,
        "goal": goal,
    }
    return meta_tr, subs, metrics


def noise_schedule(cfg: AgentConfig, episode: int, total_episodes: int) -> float:
    """Linear decay from start to final over the first decay fraction."""
    span = max(int(total_episodes * cfg.noise_decay_frac), 1)
    t = min(episode / span, 1.0)
    return cfg.noise_std_start + (cfg.noise_std_final - cfg.noise_std_start) * t


@dataclass
class TrainConfig:
    geometry: GeometryConfig
    budget: LinkBudget
    blockage: BlockageModel
    agent: AgentConfig
    encoder: EncoderParams
    episodes: int = 2000
    macro_slots_per_episode: int = 2
    eval_every: int = 50
    eval_env_count: int = 20
    eval_macro_slots: int = 2

    def dims(self):
        geo = self.geometry
        k, n, m = geo.n_users, geo.n_bs_antennas, geo.n_ris_elements
        d_e = self.encoder.d_e
        return k, n, m, d_e


@dataclass
class TrainResult:
    rows: list                   # per-episode log rows
    eval_points: list            # (episode, mean eval sum SE)
    nets: dict                   # named Mlp networks
    algo: str

    @property
    def final_eval(self) -> float:
        return self.eval_points[-1][1] if self.eval_points else float("nan")


LOG_SCHEMA = "train-log v1"
LOG_COLUMNS = ("episode", "cum_reward", "eval_sum_se", "critic_loss",
               "actor_loss", "violations")


def _train_env(cfg: TrainConfig, seed: int, episode: int) -> DownlinkEnv:
    return DownlinkEnv(cfg.geometry, cfg.budget, cfg.blockage,
                       cfg.agent.fading_rho,
                       np.random.SeedSequence([_DOMAIN_TRAIN_ENV, seed, episode]))


def eval_env(cfg: TrainConfig, index: int) -> DownlinkEnv:
    """Held-out evaluation environments, shared by every method."""
    return DownlinkEnv(cfg.geometry, cfg.budget, cfg.blockage,
                       cfg.agent.fading_rho,
                       np.random.SeedSequence([_DOMAIN_EVAL_ENV, index]))


def train_fm_hdrl(cfg: TrainConfig, seed: int, logger=None) -> TrainResult:
    """Hierarchical training: sub-controller updates every slot, the
    meta-controller once per macro-slot, both off-policy."""
    k, n, m, d_e = cfg.dims()
    agent_rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_AGENT, seed]))
    meta = DdpgAgent(3 * k, k, "sigmoid", cfg.agent, cfg.agent.meta_buffer, agent_rng)
    sub = DdpgAgent(k * d_e + k, 2 * n * k + m, "tanh", cfg.agent,
                    cfg.agent.sub_buffer, agent_rng,
                    action_map=PowerBallMap(0, 2 * n * k, cfg.budget.p_max))
    rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_AGENT, seed, 1]))

    rows, eval_points = [], []
    for ep in range(cfg.episodes):
        env = _train_env(cfg, seed, ep)
        noise = noise_schedule(cfg.agent, ep, cfg.episodes)
        ep_reward = 0.0
        ep_violations = 0
        closs = aloss = math.nan

        def on_sub(tr):
            nonlocal closs, aloss
            sub.buffer.add(tr.s, tr.a, tr.r, tr.s2)
            out = sub.update(rng)
            if out is not None:
                closs, aloss = out

        for _ in range(cfg.macro_slots_per_episode):
            meta_tr, _, metrics = run_macro_slot(
                env, meta.actor, sub.actor, cfg.encoder, cfg.agent, rng,
                meta_noise=noise, sub_noise=noise, on_sub_transition=on_sub)
            meta.buffer.add(meta_tr.s, meta_tr.a, meta_tr.r, meta_tr.s2)
            meta.update(rng)
            ep_reward += sum(metrics["rewards"])
            ep_violations += metrics["violations"]

        eval_se = ""
        if (ep + 1) % cfg.eval_every == 0 or ep == cfg.episodes - 1:
            eval_se = evaluate_policy(cfg, meta.actor, sub.actor, "fm-hdrl")
            eval_points.append((ep, eval_se))
        row = (ep, ep_reward, eval_se, closs, aloss, ep_violations)
        rows.append(row)
        if logger is not None:
            logger.write(row)
    nets = {"meta_actor": meta.actor, "meta_critic": meta.critic,
            "sub_actor": sub.actor, "sub_critic": sub.critic}
    return TrainResult(rows, eval_points, nets, "fm-hdrl")


def _flat_dims(cfg: TrainConfig):
    k, n, m, d_e = cfg.dims()
    return k * d_e + 3 * k, k + 2 * n * k + m


def _flat_policy(state, actor: Mlp, noise_std: float, rng, cfg: TrainConfig):
    k, n, m, _ = cfg.dims()
    out, _ = forward(actor, state)
    if noise_std > 0:
        out = out + as_rng(rng).normal(0.0, noise_std, out.shape)
    raw = np.clip(out, -1.0, 1.0)
    goal = Goal((raw[:k] > 0.0).astype(np.int8))
    precoder, phases = action_to_config(raw[k:], n, k, cfg.budget.p_max)
    stored = np.concatenate([raw[:k], _interleave(precoder.w),
                             raw[k + 2 * n * k:]])
    return stored, goal, precoder, phases


def train_fm_drl(cfg: TrainConfig, seed: int, logger=None) -> TrainResult:
    """Flat baseline: one DDPG agent over the joint mode/precoder/phase
    action, re-deciding modes every slot."""
    s_dim, a_dim = _flat_dims(cfg)
    k, n, _, _ = cfg.dims()
    agent_rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_AGENT, seed]))
    agent = DdpgAgent(s_dim, a_dim, "tanh", cfg.agent, cfg.agent.sub_buffer, agent_rng,
                      action_map=PowerBallMap(k, 2 * n * k, cfg.budget.p_max))
    rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_AGENT, seed, 1]))

    rows, eval_points = [], []
    for ep in range(cfg.episodes):
        env = _train_env(cfg, seed, ep)
        noise = noise_schedule(cfg.agent, ep, cfg.episodes)
        ep_reward = 0.0
        ep_violations = 0
        closs = aloss = math.nan
        pending = None

        n_slots = cfg.macro_slots_per_episode * cfg.agent.macro_len
        for slot in range(n_slots):
            env.advance_slot()
            emb = embed_batch(env.encoder_inputs(), cfg.encoder)
            state = np.concatenate([emb.ravel(), env.high_state()])
            if pending is not None:
                agent.buffer.add(pending[0], pending[1], pending[2], state)
                out = agent.update(rng)
                if out is not None:
                    closs, aloss = out
            raw, goal, precoder, phases = _flat_policy(state, agent.actor, noise, rng, cfg)
            report = evaluate_rates(env.realization(), goal, precoder, phases, env.budget)
            r = low_reward(report, env.budget.r_min, cfg.agent.penalty)
            ep_reward += r
            ep_violations += int(report.fairness_violated)
            pending = (state, raw, r)
            if (slot + 1) % cfg.agent.macro_len == 0:
                env.advance_macro()
        # close the episode's last transition on the terminal observation
        emb = embed_batch(env.encoder_inputs(), cfg.encoder)
        state = np.concatenate([emb.ravel(), env.high_state()])
        agent.buffer.add(pending[0], pending[1], pending[2], state)
        out = agent.update(rng)
        if out is not None:
            closs, aloss = out

        eval_se = ""
        if (ep + 1) % cfg.eval_every == 0 or ep == cfg.episodes - 1:
            eval_se = evaluate_policy(cfg, None, agent.actor, "fm-drl")
            eval_points.append((ep, eval_se))
        row = (ep, ep_reward, eval_se, closs, aloss, ep_violations)
        rows.append(row)
        if logger is not None:
            logger.write(row)
    return TrainResult(rows, eval_points, {"actor": agent.actor, "critic": agent.critic},
                       "fm-drl")


def evaluate_policy(cfg: TrainConfig, meta_actor, actor: Mlp, algo: str) -> float:
    """Noise-free rollout over the held-out environments; mean per-slot sum SE."""
    total = 0.0
    slots = 0
    for idx in range(cfg.eval_env_count):
        env = eval_env(cfg, idx)
        for _ in range(cfg.eval_macro_slots):
            if algo == "fm-hdrl":
                s_h = env.high_state()
                _, goal = _meta_policy(s_h, meta_actor, 0.0, None)
                for _ in range(cfg.agent.macro_len):
                    env.advance_slot()
                    emb = embed_batch(env.encoder_inputs(), cfg.encoder)
                    s_l = low_state(emb, goal)
                    _, precoder, phases = _sub_policy(
                        s_l, actor, 0.0, None,
                        cfg.geometry.n_bs_antennas, cfg.geometry.n_users,
                        cfg.budget.p_max)
                    report = evaluate_rates(env.realization(), goal, precoder,
                                            phases, cfg.budget)
                    total += report.sum_rate
                    slots += 1
            else:
                for _ in range(cfg.agent.macro_len):
                    env.advance_slot()
                    emb = embed_batch(env.encoder_inputs(), cfg.encoder)
                    state = np.concatenate([emb.ravel(), env.high_state()])
                    _, goal, precoder, phases = _flat_policy(state, actor, 0.0, None, cfg)
                    report = evaluate_rates(env.realization(), goal, precoder,
                                            phases, cfg.budget)
                    total += report.sum_rate
                    slots += 1
            env.advance_macro()
    return total / slots


def evaluate_sweep_baseline(cfg: TrainConfig, bs_size: int, ris_size: int) -> float:
    """Beam-sweep baseline on the same held-out environments and slots."""
    geo = cfg.geometry
    bs_cb = dft_bs_codebook(geo.n_bs_antennas, bs_size)
    ris_cb = ris_phase_codebook(geo.n_ris_elements, ris_size)
    total = 0.0
    slots = 0
    for idx in range(cfg.eval_env_count):
        env = eval_env(cfg, idx)
        for _ in range(cfg.eval_macro_slots):
            for _ in range(cfg.agent.macro_len):
                env.advance_slot()
                result = beam_sweep(env.realization(), bs_cb, ris_cb, cfg.budget)
                total += result.report.sum_rate
                slots += 1
            env.advance_macro()
    return total / slots
