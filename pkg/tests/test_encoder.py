import hashlib

import numpy as np
import pytest

from rislink.encoder import (EncoderParams, PatchSequence, attention_maps,
                             channel_patches, embed_batch, embed_channel,
                             encode, encoder_init, finetune_encoder,
                             finetune_step, masked_loss_and_grads,
                             masked_pretrain_step, patchify, pretrain_encoder,
                             sketch_targets, unpatchify)
from rislink.learn import AdamState, check_gradients


def _toy_encoder(rng=None, **kw):
    args = dict(d_model=16, n_layers=2, n_heads=2, d_ff=32, n_patches=4,
                patch_len=8, d_e=5, rng=rng if rng is not None else 11)
    args.update(kw)
    return encoder_init(**args)


def test_patchify_length_formula():
    h = np.arange(16).reshape(4, 4) + 1j
    seq = patchify(h, 8)
    assert seq.patches.shape == (8, 4)  # L = 2*16/8


def test_patchify_smallest_case():
    h = np.array([[3.0 + 4.0j]])
    seq = patchify(h, 2)
    np.testing.assert_array_equal(seq.patches, [[3.0], [4.0]])


def test_patchify_roundtrip():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    seq = patchify(h, 6)
    np.testing.assert_array_equal(unpatchify(seq, 3, 4), h)


def test_patchify_rejects_indivisible():
    with pytest.raises(ValueError, match="divis"):
        patchify(np.ones((3, 3), complex), 4)


def test_channel_patches_matches_patchify():
    rng = np.random.default_rng(1)
    stack = rng.standard_normal((5, 3, 4)) + 1j * rng.standard_normal((5, 3, 4))
    pool = channel_patches(stack, 6, scale=2.0)
    for i in range(5):
        np.testing.assert_allclose(pool[i], patchify(stack[i] * 2.0, 6).patches)


def test_encode_shapes_and_determinism():
    enc = _toy_encoder()
    seq = PatchSequence(np.random.default_rng(2).normal(0, 1, (4, 8)), None)
    cls1, patches1 = encode(seq, enc)
    cls2, patches2 = encode(seq, enc)
    assert cls1.shape == (16,)
    assert patches1.shape == (4, 16)
    np.testing.assert_array_equal(cls1, cls2)
    np.testing.assert_array_equal(patches1, patches2)


def test_encode_position_sensitivity():
    enc = _toy_encoder()
    rng = np.random.default_rng(3)
    patches = rng.normal(0, 1, (4, 8))
    swapped = patches[[1, 0, 2, 3]]
    cls_a, _ = encode(PatchSequence(patches, None), enc)
    cls_b, _ = encode(PatchSequence(swapped, None), enc)
    assert not np.allclose(cls_a, cls_b)


def test_attention_rows_stochastic():
    enc = _toy_encoder()
    seq = PatchSequence(np.random.default_rng(4).normal(0, 1, (4, 8)), None)
    for attn in attention_maps(seq, enc):
        assert np.all(attn >= 0)
        np.testing.assert_allclose(attn.sum(axis=-1), 1.0, atol=1e-6)


def test_pretrain_step_deterministic_and_nonnegative():
    enc = _toy_encoder()
    data = np.random.default_rng(5).normal(0, 1, (16, 4, 8))
    loss1, _, _ = masked_pretrain_step(data, enc, 0.25, AdamState(lr=1e-3), np.random.default_rng(9))
    loss2, _, _ = masked_pretrain_step(data, enc, 0.25, AdamState(lr=1e-3), np.random.default_rng(9))
    assert loss1 == loss2
    assert loss1 >= 0


def test_pretrain_loss_drops():
    rng = np.random.default_rng(6)
    enc = _toy_encoder(rng=rng)
    pool = rng.normal(0, 1, (32, 4, 8))
    enc, losses = pretrain_encoder(pool, enc, steps=120, batch=16,
                                   mask_fraction=0.25, lr=1e-3, rng=rng)
    assert np.mean(losses[-10:]) < 0.7 * np.mean(losses[:10])


def test_encoder_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    enc = _toy_encoder(rng=rng)
    patches = rng.normal(0, 1, (3, 4, 8))
    mask = np.zeros((3, 4), dtype=bool)
    mask[0, 1] = mask[1, 3] = mask[2, 0] = True
    _, grads = masked_loss_and_grads(enc, patches, mask)

    def loss_fn(params):
        probe = EncoderParams(enc.d_model, enc.n_layers, enc.n_heads, enc.d_ff,
                              enc.n_patches, enc.patch_len, enc.d_e, params,
                              enc.input_scale)
        return masked_loss_and_grads(probe, patches, mask)[0]

    assert check_gradients(loss_fn, enc.params, grads, n_samples=120, rng=1) < 1e-4


def _frozen_digest(enc):
    h = hashlib.sha256()
    for key in sorted(enc.params):
        if key != "out_proj":
            h.update(enc.params[key].tobytes())
    return h.hexdigest()


def test_finetune_zero_loss_no_update():
    enc = _toy_encoder()
    rng = np.random.default_rng(8)
    seq = PatchSequence(rng.normal(0, 1, (4, 8)), None)
    cls_out, _ = encode(seq, enc)
    target = cls_out @ enc.params["out_proj"]
    loss, enc2, _ = finetune_step([(seq, target)], enc, AdamState(lr=1e-3))
    assert loss == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_array_equal(enc2.params["out_proj"], enc.params["out_proj"])


def test_finetune_freezes_everything_but_head():
    rng = np.random.default_rng(9)
    enc = _toy_encoder(rng=rng)
    pool = rng.normal(0, 1, (24, 4, 8))
    targets = sketch_targets(pool, enc.d_e, seed=3)
    before = _frozen_digest(enc)
    head_before = enc.params["out_proj"].copy()
    enc, _ = finetune_encoder(pool, targets, enc, steps=100, batch=8, lr=1e-3, rng=rng)
    assert _frozen_digest(enc) == before
    assert not np.array_equal(enc.params["out_proj"], head_before)


def test_finetune_monotone_on_repeated_batch():
    rng = np.random.default_rng(10)
    enc = _toy_encoder(rng=rng)
    pool = rng.normal(0, 1, (8, 4, 8))
    targets = sketch_targets(pool, enc.d_e, seed=4)
    pairs = [(PatchSequence(pool[i], None), targets[i]) for i in range(8)]
    state = AdamState(lr=1e-4)
    losses = []
    for _ in range(40):
        loss, enc, state = finetune_step(pairs, enc, state)
        losses.append(loss)
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_embed_channel_properties():
    enc = _toy_encoder()
    rng = np.random.default_rng(11)
    h = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    e1 = embed_channel(h, enc)
    e2 = embed_channel(h, enc)
    assert e1.e.shape == (5,)
    np.testing.assert_array_equal(e1.e, e2.e)
    # the encoder sees Re/Im, so a global phase rotation changes the embedding
    e3 = embed_channel(h * np.exp(1j * 0.7), enc)
    assert not np.allclose(e1.e, e3.e)


def test_embed_batch_matches_single():
    enc = _toy_encoder()
    rng = np.random.default_rng(12)
    stack = rng.standard_normal((3, 2, 8)) + 1j * rng.standard_normal((3, 2, 8))
    batch = embed_batch(stack, enc)
    for i in range(3):
        np.testing.assert_allclose(batch[i], embed_channel(stack[i], enc).e, rtol=1e-12)
