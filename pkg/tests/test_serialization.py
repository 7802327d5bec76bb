import json

import numpy as np
import pytest

from rislink.channel import generate_channels
from rislink.encoder import encoder_init
from rislink.learn import mlp_init
from rislink.serialization import (CsvLogger, channel_record_size,
                                   channel_dataset_to_csv, file_checksum,
                                   load_checkpoint, load_encoder, load_mlps,
                                   read_channel_dataset, read_csv,
                                   save_checkpoint, save_encoder, save_mlps,
                                   write_channel_dataset, write_csv)


def test_channel_dataset_roundtrip(tmp_path, small_geometry, small_users):
    records = [generate_channels(small_geometry, small_users, s) for s in range(5)]
    path = tmp_path / "chan.bin"
    header = write_channel_dataset(path, small_geometry, records, {"note": "t"})
    assert header["records"] == 5
    back_header, back = read_channel_dataset(path)
    assert back_header["note"] == "t"
    assert len(back) == 5
    for orig, rec in zip(records, back):
        np.testing.assert_array_equal(rec.direct, orig.direct.astype(np.complex64).astype(np.complex128))
        np.testing.assert_array_equal(rec.blocked, orig.blocked)


def test_channel_dataset_size_formula(tmp_path, small_geometry, small_users):
    records = [generate_channels(small_geometry, small_users, s) for s in range(3)]
    path = tmp_path / "chan.bin"
    write_channel_dataset(path, small_geometry, records)
    with open(path, "rb") as fh:
        header_len = len(fh.readline())
    expected = header_len + 3 * channel_record_size(
        small_geometry.n_bs_antennas, small_geometry.n_ris_elements,
        small_geometry.n_users)
    assert path.stat().st_size == expected


def test_channel_dataset_checksum_stable(tmp_path, small_geometry, small_users):
    records = [generate_channels(small_geometry, small_users, s) for s in range(3)]
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    write_channel_dataset(p1, small_geometry, records)
    write_channel_dataset(p2, small_geometry, records)
    assert file_checksum(p1) == file_checksum(p2)


def test_channel_dataset_csv_dump(tmp_path, small_geometry, small_users):
    records = [generate_channels(small_geometry, small_users, 0)]
    path = tmp_path / "chan.bin"
    write_channel_dataset(path, small_geometry, records)
    n = channel_dataset_to_csv(path, tmp_path / "chan.csv")
    k, nb, m = (small_geometry.n_users, small_geometry.n_bs_antennas,
                small_geometry.n_ris_elements)
    assert n == k * nb + m * nb + k * m


def test_checkpoint_roundtrip(tmp_path):
    arrays = {"a": np.arange(6, dtype=float).reshape(2, 3), "b": np.array([1.5])}
    path = tmp_path / "x.ckpt"
    save_checkpoint(path, "test", {"hello": 1}, arrays)
    kind, meta, back = load_checkpoint(path)
    assert kind == "test" and meta["hello"] == 1
    np.testing.assert_array_equal(back["a"], arrays["a"])


def test_encoder_checkpoint_roundtrip(tmp_path):
    enc = encoder_init(d_model=16, n_layers=1, n_heads=2, d_ff=16, n_patches=4,
                       patch_len=6, d_e=3, rng=0, input_scale=2.5)
    path = tmp_path / "enc.ckpt"
    save_encoder(path, enc)
    back = load_encoder(path)
    assert back.input_scale == 2.5
    assert back.d_model == 16 and back.n_patches == 4
    for k in enc.params:
        np.testing.assert_allclose(back.params[k], enc.params[k], atol=2e-7)


def test_mlp_bundle_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    nets = {"actor": mlp_init((3, 8, 2), ("relu", "tanh"), rng),
            "critic": mlp_init((5, 8, 1), ("relu", "identity"), rng)}
    path = tmp_path / "agents.ckpt"
    save_mlps(path, "agents", nets, {"algo": "fm-hdrl"})
    back, meta = load_mlps(path, "agents")
    assert meta["algo"] == "fm-hdrl"
    assert back["actor"].sizes == (3, 8, 2)
    assert back["critic"].activations == ("relu", "identity")
    np.testing.assert_allclose(back["actor"].params["w0"],
                               nets["actor"].params["w0"], atol=2e-7)
    with pytest.raises(ValueError):
        load_mlps(path, "encoder")


def test_csv_roundtrip_and_stability(tmp_path):
    rows = [(0, 1.5, "x"), (1, float(np.float64(2.25)), "y")]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(p1, "demo v1", ("i", "v", "tag"), rows)
    write_csv(p2, "demo v1", ("i", "v", "tag"), rows)
    assert p1.read_bytes() == p2.read_bytes()
    schema, cols, back = read_csv(p1)
    assert schema == "rislink demo v1"
    assert cols == ["i", "v", "tag"]
    assert back[0] == ["0", "1.5", "x"]


def test_csv_logger_line_buffered(tmp_path):
    path = tmp_path / "log.csv"
    logger = CsvLogger(path, "log v1", ("a", "b"))
    logger.write((1, 2.0))
    # file is valid before close thanks to line buffering
    schema, cols, rows = read_csv(path)
    assert rows == [["1", "2.0"]]
    logger.close()
