"""Toy-scale transformer channel encoder.

A complex channel matrix is flattened into interleaved real/imag values,
split into non-overlapping patches, linearly projected, prepended with a CLS
token, and run through pre-norm transformer layers.  Pretraining masks a
fraction of the patches and reconstructs them (MSE on masked positions
only); fine-tuning trains just the output projection that turns the CLS row
into the low-dimensional embedding consumed by the controllers.

All forward/backward math is explicit NumPy in float64 so gradients can be
verified against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .learn import AdamState, adam_step
from .utils import as_rng

_LN_EPS = 1e-6


@dataclass
class PatchSequence:
    patches: np.ndarray  # (P, L) float
    mask: np.ndarray     # (P,) bool, True = masked during pretraining

    def __post_init__(self):
        self.patches = np.asarray(self.patches, dtype=float)
        if self.mask is None:
            self.mask = np.zeros(self.patches.shape[0], dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)


@dataclass
class Embedding:
    e: np.ndarray  # (d_e,) float


@dataclass
class EncoderParams:
    """Dimensions plus the flat parameter dictionary."""

    d_model: int
    n_layers: int
    n_heads: int
    d_ff: int
    n_patches: int
    patch_len: int
    d_e: int
    params: dict = field(default_factory=dict)
    input_scale: float = 1.0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")


def patchify(h: np.ndarray, n_patches: int) -> PatchSequence:
    """Flatten a complex matrix row-major with interleaved Re/Im and split
    into equal patches.  Lossless; see unpatchify."""
    h = np.asarray(h)
    x, y = h.shape
    total = 2 * x * y
    if total % n_patches != 0:
        raise ValueError(
            f"2*X*Y = {total} is not divisible by P = {n_patches}; "
            f"patch count must divide {total}"
        )
    flat = np.empty(total, dtype=float)
    flat[0::2] = h.real.ravel()
    flat[1::2] = h.imag.ravel()
    return PatchSequence(flat.reshape(n_patches, total // n_patches), None)


def unpatchify(seq: PatchSequence, x: int, y: int) -> np.ndarray:
    flat = seq.patches.ravel()
    if flat.size != 2 * x * y:
        raise ValueError("patch payload does not match the requested shape")
    return (flat[0::2] + 1j * flat[1::2]).reshape(x, y)


def channel_patches(channels: np.ndarray, n_patches: int, scale: float = 1.0) -> np.ndarray:
    """Vectorized patchify of a (B, X, Y) complex stack -> (B, P, L) floats."""
    channels = np.asarray(channels)
    b, x, y = channels.shape
    total = 2 * x * y
    if total % n_patches != 0:
        raise ValueError(f"2*X*Y = {total} not divisible by P = {n_patches}")
    flat = np.empty((b, total), dtype=float)
    flat[:, 0::2] = channels.real.reshape(b, -1)
    flat[:, 1::2] = channels.imag.reshape(b, -1)
    return (flat * scale).reshape(b, n_patches, total // n_patches)


def encoder_init(d_model=128, n_layers=2, n_heads=4, d_ff=256, n_patches=12,
                 patch_len=12, d_e=32, rng=None, input_scale=1.0) -> EncoderParams:
    rng = as_rng(rng)

    def xavier(fan_in, fan_out):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, (fan_in, fan_out))

    p = {
        "patch_proj": xavier(patch_len, d_model),
        "pos": rng.normal(0.0, 0.02, (n_patches + 1, d_model)),
        "cls": rng.normal(0.0, 0.02, d_model),
        "mask": rng.normal(0.0, 0.02, d_model),
        "lnf.g": np.ones(d_model),
        "lnf.b": np.zeros(d_model),
        "recon.w": xavier(d_model, patch_len),
        "recon.b": np.zeros(patch_len),
        "out_proj": xavier(d_model, d_e),
    }
    for i in range(n_layers):
        p[f"l{i}.ln1.g"] = np.ones(d_model)
        p[f"l{i}.ln1.b"] = np.zeros(d_model)
        for name in ("wq", "wk", "wv", "wo"):
            p[f"l{i}.{name}"] = xavier(d_model, d_model)
        for name in ("bq", "bk", "bv", "bo"):
            p[f"l{i}.{name}"] = np.zeros(d_model)
        p[f"l{i}.ln2.g"] = np.ones(d_model)
        p[f"l{i}.ln2.b"] = np.zeros(d_model)
        p[f"l{i}.ff1.w"] = xavier(d_model, d_ff)
        p[f"l{i}.ff1.b"] = np.zeros(d_ff)
        p[f"l{i}.ff2.w"] = xavier(d_ff, d_model)
        p[f"l{i}.ff2.b"] = np.zeros(d_model)
    return EncoderParams(d_model, n_layers, n_heads, d_ff, n_patches,
                         patch_len, d_e, p, input_scale)


def _layernorm_f(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xn = xc * inv
    return g * xn + b, (xn, inv)


def _layernorm_b(dy, cache, g):
    xn, inv = cache
    dxn = dy * g
    dg = (dy * xn).reshape(-1, xn.shape[-1]).sum(axis=0)
    db = dy.reshape(-1, xn.shape[-1]).sum(axis=0)
    dx = inv * (dxn - dxn.mean(-1, keepdims=True) - xn * (dxn * xn).mean(-1, keepdims=True))
    return dx, dg, db


def _split_heads(x, n_heads):
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _forward(enc: EncoderParams, patches: np.ndarray, mask: np.ndarray | None,
             keep_tape: bool):
    """Batched encoder pass.  patches (B, P, L), mask (B, P) bool or None.

    Returns (cls_out, patch_out, tape); tape is None unless requested.
    """
    p = enc.params
    b = patches.shape[0]
    n_heads = enc.n_heads
    scale = 1.0 / math.sqrt(enc.d_model // n_heads)

    emb = patches @ p["patch_proj"]
    if mask is not None and mask.any():
        emb = np.where(mask[:, :, None], p["mask"], emb)
    tokens = np.concatenate(
        [np.broadcast_to(p["cls"], (b, 1, enc.d_model)), emb], axis=1
    ) + p["pos"]

    layer_caches = []
    x = tokens
    for i in range(enc.n_layers):
        n1, c1 = _layernorm_f(x, p[f"l{i}.ln1.g"], p[f"l{i}.ln1.b"])
        q = n1 @ p[f"l{i}.wq"] + p[f"l{i}.bq"]
        k = n1 @ p[f"l{i}.wk"] + p[f"l{i}.bk"]
        v = n1 @ p[f"l{i}.wv"] + p[f"l{i}.bv"]
        qh, kh, vh = (_split_heads(z, n_heads) for z in (q, k, v))
        scores = np.matmul(qh, kh.transpose(0, 1, 3, 2)) * scale
        scores -= scores.max(axis=-1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(axis=-1, keepdims=True)
        ctx = _merge_heads(np.matmul(attn, vh))
        att_out = ctx @ p[f"l{i}.wo"] + p[f"l{i}.bo"]
        x_mid = x + att_out

        n2, c2 = _layernorm_f(x_mid, p[f"l{i}.ln2.g"], p[f"l{i}.ln2.b"])
        hidden = n2 @ p[f"l{i}.ff1.w"] + p[f"l{i}.ff1.b"]
        act = np.maximum(hidden, 0.0)
        x = x_mid + act @ p[f"l{i}.ff2.w"] + p[f"l{i}.ff2.b"]

        if keep_tape:
            layer_caches.append((n1, c1, qh, kh, vh, attn, ctx, c2, n2, hidden, act))

    out, cf = _layernorm_f(x, p["lnf.g"], p["lnf.b"])
    tape = None
    if keep_tape:
        tape = {"patches": patches, "mask": mask, "layers": layer_caches, "cf": cf}
    return out[:, 0, :], out[:, 1:, :], tape


def _backward(enc: EncoderParams, tape, d_cls, d_patch):
    """Gradients of the encoder for upstreams on the CLS and patch rows."""
    p = enc.params
    n_heads = enc.n_heads
    scale = 1.0 / math.sqrt(enc.d_model // n_heads)
    grads: dict[str, np.ndarray] = {}

    d_out = np.concatenate([d_cls[:, None, :], d_patch], axis=1)
    dx, grads["lnf.g"], grads["lnf.b"] = _layernorm_b(d_out, tape["cf"], p["lnf.g"])

    for i in reversed(range(enc.n_layers)):
        n1, c1, qh, kh, vh, attn, ctx, c2, n2, hidden, act = tape["layers"][i]

        # feed-forward sublayer (x_out = x_mid + relu(n2 W1 + b1) W2 + b2)
        d_act = dx @ p[f"l{i}.ff2.w"].T
        grads[f"l{i}.ff2.w"] = np.einsum("btf,btd->fd", act, dx)
        grads[f"l{i}.ff2.b"] = dx.sum(axis=(0, 1))
        d_hidden = d_act * (hidden > 0)
        grads[f"l{i}.ff1.w"] = np.einsum("btd,btf->df", n2, d_hidden)
        grads[f"l{i}.ff1.b"] = d_hidden.sum(axis=(0, 1))
        d_n2 = d_hidden @ p[f"l{i}.ff1.w"].T
        d_mid, grads[f"l{i}.ln2.g"], grads[f"l{i}.ln2.b"] = _layernorm_b(
            d_n2, c2, p[f"l{i}.ln2.g"])
        dx = dx + d_mid

        # attention sublayer
        d_ctx = dx @ p[f"l{i}.wo"].T
        grads[f"l{i}.wo"] = np.einsum("btd,bte->de", ctx, dx)
        grads[f"l{i}.bo"] = dx.sum(axis=(0, 1))
        d_ctx_h = _split_heads(d_ctx, n_heads)
        d_attn = np.matmul(d_ctx_h, vh.transpose(0, 1, 3, 2))
        d_vh = np.matmul(attn.transpose(0, 1, 3, 2), d_ctx_h)
        d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
        d_qh = np.matmul(d_scores, kh) * scale
        d_kh = np.matmul(d_scores.transpose(0, 1, 3, 2), qh) * scale
        d_q, d_k, d_v = (_merge_heads(z) for z in (d_qh, d_kh, d_vh))
        d_n1 = d_q @ p[f"l{i}.wq"].T + d_k @ p[f"l{i}.wk"].T + d_v @ p[f"l{i}.wv"].T
        for name, dz in (("wq", d_q), ("wk", d_k), ("wv", d_v)):
            grads[f"l{i}.{name}"] = np.einsum("btd,bte->de", n1, dz)
            grads[f"l{i}.b{name[1]}"] = dz.sum(axis=(0, 1))
        d_pre, grads[f"l{i}.ln1.g"], grads[f"l{i}.ln1.b"] = _layernorm_b(
            d_n1, c1, p[f"l{i}.ln1.g"])
        dx = dx + d_pre

    grads["pos"] = dx.sum(axis=0)
    grads["cls"] = dx[:, 0, :].sum(axis=0)
    d_emb = dx[:, 1:, :]
    mask = tape["mask"]
    if mask is not None and mask.any():
        grads["mask"] = d_emb[mask].sum(axis=0)
        d_emb = np.where(mask[:, :, None], 0.0, d_emb)
    else:
        grads["mask"] = np.zeros_like(p["mask"])
    grads["patch_proj"] = np.einsum("bpl,bpd->ld", tape["patches"], d_emb)
    return grads


def encode(seq: PatchSequence, enc: EncoderParams):
    """Single-sequence pass: (CLS row, per-patch rows)."""
    if seq.patches.shape != (enc.n_patches, enc.patch_len):
        raise ValueError("patch sequence does not match encoder dimensions")
    cls_out, patch_out, _ = _forward(enc, seq.patches[None], None, keep_tape=False)
    return cls_out[0], patch_out[0]


def attention_maps(seq: PatchSequence, enc: EncoderParams):
    """Per-layer attention weights (n_heads, T, T); diagnostic only."""
    _, _, tape = _forward(enc, seq.patches[None], None, keep_tape=True)
    return [layer[5][0] for layer in tape["layers"]]


def masked_loss_and_grads(enc: EncoderParams, patches: np.ndarray,
                          mask: np.ndarray):
    """Reconstruction MSE on masked positions and its parameter gradients."""
    cls_out, patch_out, tape = _forward(enc, patches, mask, keep_tape=True)
    p = enc.params
    recon = patch_out @ p["recon.w"] + p["recon.b"]
    diff = (recon - patches) * mask[:, :, None]
    n_masked = int(mask.sum())
    denom = max(n_masked, 1) * enc.patch_len
    loss = float((diff * diff).sum() / denom)
    d_recon = 2.0 * diff / denom
    grads = {
        "recon.w": np.einsum("bpd,bpl->dl", patch_out, d_recon),
        "recon.b": d_recon.sum(axis=(0, 1)),
    }
    d_patch = d_recon @ p["recon.w"].T
    d_cls = np.zeros_like(cls_out)
    grads.update(_backward(enc, tape, d_cls, d_patch))
    return loss, grads


def draw_masks(n_batch: int, n_patches: int, mask_fraction: float, rng) -> np.ndarray:
    """Per-sample random masks covering ceil(mask_fraction * P) patches."""
    if not 0.0 < mask_fraction < 1.0:
        raise ValueError("mask_fraction must lie in (0, 1)")
    n_mask = math.ceil(mask_fraction * n_patches)
    mask = np.zeros((n_batch, n_patches), dtype=bool)
    for i in range(n_batch):
        mask[i, rng.choice(n_patches, size=n_mask, replace=False)] = True
    return mask


def masked_pretrain_step(batch, enc: EncoderParams, mask_fraction: float,
                         opt_state: AdamState, rng):
    """One masked-reconstruction update over all encoder parameters."""
    rng = as_rng(rng)
    patches = _as_patch_array(batch, enc)
    mask = draw_masks(patches.shape[0], enc.n_patches, mask_fraction, rng)
    loss, grads = masked_loss_and_grads(enc, patches, mask)
    grads.pop("out_proj", None)  # untouched by this objective
    new_params, new_state = adam_step(enc.params, grads, opt_state)
    new_enc = EncoderParams(enc.d_model, enc.n_layers, enc.n_heads, enc.d_ff,
                            enc.n_patches, enc.patch_len, enc.d_e,
                            new_params, enc.input_scale)
    return loss, new_enc, new_state


def finetune_step(batch, enc: EncoderParams, opt_state: AdamState):
    """Regress output_projection @ CLS onto the targets; everything else is
    frozen (no gradient ever reaches it)."""
    patches = _as_patch_array([seq for seq, _ in batch], enc)
    targets = np.stack([np.asarray(t, dtype=float) for _, t in batch])
    cls_out, _, _ = _forward(enc, patches, None, keep_tape=False)
    pred = cls_out @ enc.params["out_proj"]
    diff = pred - targets
    loss = float(np.mean(diff * diff))
    d_pred = 2.0 * diff / diff.size
    grads = {"out_proj": cls_out.T @ d_pred}
    new_params, new_state = adam_step(enc.params, grads, opt_state)
    new_enc = EncoderParams(enc.d_model, enc.n_layers, enc.n_heads, enc.d_ff,
                            enc.n_patches, enc.patch_len, enc.d_e,
                            new_params, enc.input_scale)
    return loss, new_enc, new_state


def embed_channel(h: np.ndarray, enc: EncoderParams) -> Embedding:
    """Embedding of one complex channel matrix."""
    return Embedding(embed_batch(np.asarray(h)[None], enc)[0])


def embed_batch(channels: np.ndarray, enc: EncoderParams) -> np.ndarray:
    """(B, X, Y) complex stack -> (B, d_e) embeddings; the training hot path."""
    patches = channel_patches(channels, enc.n_patches, enc.input_scale)
    cls_out, _, _ = _forward(enc, patches, None, keep_tape=False)
    return cls_out @ enc.params["out_proj"]


def _as_patch_array(batch, enc: EncoderParams) -> np.ndarray:
    if isinstance(batch, np.ndarray) and batch.ndim == 3:
        return batch
    return np.stack([seq.patches for seq in batch])


def pretrain_encoder(patch_pool: np.ndarray, enc: EncoderParams, steps: int,
                     batch: int = 64, mask_fraction: float = 0.15,
                     lr: float = 1e-3, weight_decay: float = 0.01,
                     rng=None, logger=None):
    """Masked-reconstruction pretraining over a pool of patch sequences.

    Returns (encoder, per-step losses)."""
    rng = as_rng(rng)
    state = AdamState(lr=lr, weight_decay=weight_decay)
    losses = []
    for step in range(steps):
        idx = rng.integers(0, patch_pool.shape[0], min(batch, patch_pool.shape[0]))
        loss, enc, state = masked_pretrain_step(patch_pool[idx], enc,
                                                mask_fraction, state, rng)
        losses.append(loss)
        if logger is not None:
            logger.write((step, loss))
    return enc, losses


def sketch_targets(patch_pool: np.ndarray, d_e: int, seed: int = 0) -> np.ndarray:
    """Self-supervised fine-tuning targets: a fixed random linear sketch of
    each sample's own patch content, so the embedding must compress the
    channel itself."""
    s, p, l = patch_pool.shape
    proj = np.random.default_rng(seed).normal(0.0, 1.0 / math.sqrt(p * l), (p * l, d_e))
    return patch_pool.reshape(s, -1) @ proj


def finetune_encoder(patch_pool: np.ndarray, targets: np.ndarray,
                     enc: EncoderParams, steps: int, batch: int = 64,
                     lr: float = 1e-5, rng=None, logger=None):
    """Output-projection fine-tuning against per-sample target vectors."""
    rng = as_rng(rng)
    state = AdamState(lr=lr)
    losses = []
    n = patch_pool.shape[0]
    for step in range(steps):
        idx = rng.integers(0, n, min(batch, n))
        pairs = [(PatchSequence(patch_pool[i], None), targets[i]) for i in idx]
        loss, enc, state = finetune_step(pairs, enc, state)
        losses.append(loss)
        if logger is not None:
            logger.write((step, loss))
    return enc, losses
