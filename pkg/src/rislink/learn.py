"""Dense networks with manual reverse-mode gradients, Adam/AdamW, and
finite-difference verification.  Everything runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .utils import as_rng

_ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0).astype(float)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class Mlp:
    """Fully-connected network; ``params`` maps w{i}/b{i} to arrays."""

    sizes: tuple
    activations: tuple
    params: dict

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, self.activations, {k: v.copy() for k, v in self.params.items()})


def mlp_init(sizes, activations, rng, out_scale: float | None = None) -> Mlp:
    """Xavier-uniform weights, zero biases; ``out_scale`` shrinks the final
    layer (stabilizes early actor training)."""
    rng = as_rng(rng)
    sizes = tuple(int(s) for s in sizes)
    activations = tuple(activations)
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    for a in activations:
        if a not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {a!r}")
    params = {}
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, (fan_in, fan_out))
        if out_scale is not None and i == len(sizes) - 2:
            w *= out_scale
        params[f"w{i}"] = w
        params[f"b{i}"] = np.zeros(fan_out)
    return Mlp(sizes, activations, params)


def forward(net: Mlp, x: np.ndarray):
    """Run the network; accepts a single vector or a batch of rows.

    Returns (output, tape); the tape holds what backward() needs.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    if a.shape[1] != net.sizes[0]:
        raise ValueError(f"input width {a.shape[1]} != {net.sizes[0]}")
    inputs, pre = [], []
    for i, act in enumerate(net.activations):
        inputs.append(a)
        z = a @ net.params[f"w{i}"] + net.params[f"b{i}"]
        pre.append(z)
        a = _act(act, z)
    tape = (inputs, pre, a, squeeze)
    return (a[0] if squeeze else a), tape


def backward(net: Mlp, tape, upstream: np.ndarray, need_param_grads: bool = True):
    """Reverse-mode gradients for a previous forward() call.

    Returns (grads dict mirroring net.params, gradient w.r.t. the input).
    ``need_param_grads=False`` skips the weight gradients and only chains
    the input gradient (used when differentiating through a frozen net).
    """
    inputs, pre, out, squeeze = tape
    delta = np.asarray(upstream, dtype=float)
    if squeeze:
        delta = delta[None, :]
    if delta.shape != out.shape:
        raise ValueError("upstream shape does not match forward output")
    grads = {}
    for i in reversed(range(net.n_layers)):
        a_out = out if i == net.n_layers - 1 else inputs[i + 1]
        delta = delta * _act_grad(net.activations[i], pre[i], a_out)
        if need_param_grads:
            grads[f"w{i}"] = inputs[i].T @ delta
            grads[f"b{i}"] = delta.sum(axis=0)
        delta = delta @ net.params[f"w{i}"].T
    dx = delta[0] if squeeze else delta
    return grads, dx


@dataclass
class AdamState:
    """Adam / AdamW moments; weight_decay > 0 gives decoupled decay."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected update; pure in (params, grads, state).

    Only keys present in ``grads`` are touched, so frozen parameters stay
    bit-identical.
    """
    new_params = dict(params)
    new_m = dict(state.m)
    new_v = dict(state.v)
    t = state.step + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for key, g in grads.items():
        p = params[key]
        m = state.m.get(key)
        v = state.v.get(key)
        m = (1.0 - state.beta1) * g if m is None else state.beta1 * m + (1.0 - state.beta1) * g
        v = (1.0 - state.beta2) * g * g if v is None else state.beta2 * v + (1.0 - state.beta2) * g * g
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        if state.weight_decay:
            update = update + state.lr * state.weight_decay * p
        new_params[key] = p - update
        new_m[key] = m
        new_v[key] = v
    new_state = AdamState(state.lr, state.beta1, state.beta2, state.eps,
                          state.weight_decay, t, new_m, new_v)
    return new_params, new_state


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """Polyak mix: target <- (1 - tau) * target + tau * online."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    if target.sizes != online.sizes:
        raise ValueError("networks must share a shape")
    mixed = {k: (1.0 - tau) * target.params[k] + tau * online.params[k]
             for k in target.params}
    return Mlp(target.sizes, target.activations, mixed)


def check_gradients(loss_fn, params: dict, analytic: dict, n_samples: int = 200,
                    eps: float = 1e-5, rng=None) -> float:
    """Max relative error between analytic gradients and central differences.

    ``loss_fn(params) -> float`` must be pure; coordinates are sampled
    uniformly over all parameters named in ``analytic``.
    """
    rng = as_rng(rng)
    keys = sorted(analytic.keys())
    flat = [(k, i) for k in keys for i in range(params[k].size)]
    idx = rng.choice(len(flat), size=min(n_samples, len(flat)), replace=False)
    worst = 0.0
    for j in idx:
        key, i = flat[j]
        probe = {k: v.copy() for k, v in params.items()}
        base = probe[key].ravel()
        orig = base[i]
        base[i] = orig + eps
        hi = loss_fn(probe)
        base[i] = orig - eps
        lo = loss_fn(probe)
        base[i] = orig
        fd = (hi - lo) / (2.0 * eps)
        an = analytic[key].ravel()[i]
        # the 1e-6 floor keeps FD roundoff on exactly-zero gradients
        # (shift-invariant parameters) from registering as disagreement
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
        worst = max(worst, rel)
    return worst
