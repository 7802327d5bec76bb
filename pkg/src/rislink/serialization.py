"""File containers: binary channel datasets, parameter checkpoints, CSVs.

Both binary formats start with one JSON header line (UTF-8, newline
terminated) followed by raw little-endian 32-bit floats, so files stay
self-describing and endianness-stable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, GeometryConfig
from .encoder import EncoderParams
from .learn import Mlp

CHANNEL_FORMAT = "rislink-channels"
CKPT_FORMAT = "rislink-ckpt"
FORMAT_VERSION = 1


def _f32_bytes(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f4").tobytes()


def _interleaved_bytes(m: np.ndarray) -> bytes:
    flat = np.empty(2 * m.size, dtype="<f4")
    flat[0::2] = m.real.ravel()
    flat[1::2] = m.imag.ravel()
    return flat.tobytes()


def _read_interleaved(buf: bytes, shape) -> np.ndarray:
    flat = np.frombuffer(buf, dtype="<f4").astype(np.float64)
    return (flat[0::2] + 1j * flat[1::2]).reshape(shape)


def channel_record_size(n_bs: int, n_ris: int, n_users: int) -> int:
    floats = 2 * (n_users * n_bs + n_ris * n_bs + n_users * n_ris)
    return 4 * floats + n_users  # blocked flags stored as one byte per user


def write_channel_dataset(path, geometry: GeometryConfig, realizations,
                          extra_meta: dict | None = None) -> dict:
    """Write realizations as a header-plus-records stream; returns the header."""
    realizations = list(realizations)
    header = {
        "format": CHANNEL_FORMAT,
        "version": FORMAT_VERSION,
        "n_bs": geometry.n_bs_antennas,
        "n_ris": geometry.n_ris_elements,
        "n_users": geometry.n_users,
        "records": len(realizations),
        "layout": "direct,bs_ris,ris_user interleaved re/im f32le + blocked u8",
    }
    if extra_meta:
        header.update(extra_meta)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for real in realizations:
            fh.write(_interleaved_bytes(real.direct))
            fh.write(_interleaved_bytes(real.bs_ris))
            fh.write(_interleaved_bytes(real.ris_user))
            fh.write(real.blocked.astype(np.uint8).tobytes())
    return header


def read_channel_dataset(path):
    """Returns (header dict, list of ChannelRealization)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CHANNEL_FORMAT:
            raise ValueError(f"{path} is not a channel dataset")
        k, m, n = header["n_users"], header["n_ris"], header["n_bs"]
        out = []
        for _ in range(header["records"]):
            direct = _read_interleaved(fh.read(8 * k * n), (k, n))
            bs_ris = _read_interleaved(fh.read(8 * m * n), (m, n))
            ris_user = _read_interleaved(fh.read(8 * k * m), (k, m))
            blocked = np.frombuffer(fh.read(k), dtype=np.uint8).astype(bool)
            out.append(ChannelRealization(direct, bs_ris, ris_user, blocked))
    return header, out


def channel_dataset_to_csv(path, csv_path) -> int:
    """Flat CSV inspection dump: one row per matrix entry."""
    header, records = read_channel_dataset(path)
    rows = []
    for idx, real in enumerate(records):
        for name, mat in (("direct", real.direct), ("bs_ris", real.bs_ris),
                          ("ris_user", real.ris_user)):
            for (i, j), v in np.ndenumerate(mat):
                rows.append((idx, name, i, j, v.real, v.imag))
    write_csv(csv_path, "channel-dump v1",
              ("record", "link", "row", "col", "re", "im"), rows)
    return len(rows)


def file_checksum(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def save_checkpoint(path, kind: str, meta: dict, arrays: dict) -> None:
    names = sorted(arrays.keys())
    header = {
        "format": CKPT_FORMAT,
        "version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
        "tensors": [[name, list(arrays[name].shape)] for name in names],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for name in names:
            fh.write(_f32_bytes(arrays[name]))


def load_checkpoint(path):
    """Returns (kind, meta, arrays as float64)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CKPT_FORMAT:
            raise ValueError(f"{path} is not a checkpoint")
        arrays = {}
        for name, shape in header["tensors"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(4 * count)
            arrays[name] = np.frombuffer(buf, dtype="<f4").astype(np.float64).reshape(shape)
    return header["kind"], header["meta"], arrays


def save_encoder(path, enc: EncoderParams) -> None:
    meta = {
        "d_model": enc.d_model, "n_layers": enc.n_layers, "n_heads": enc.n_heads,
        "d_ff": enc.d_ff, "n_patches": enc.n_patches, "patch_len": enc.patch_len,
        "d_e": enc.d_e, "input_scale": enc.input_scale,
    }
    save_checkpoint(path, "encoder", meta, enc.params)


def load_encoder(path) -> EncoderParams:
    kind, meta, arrays = load_checkpoint(path)
    if kind != "encoder":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, not an encoder")
    return EncoderParams(
        meta["d_model"], meta["n_layers"], meta["n_heads"], meta["d_ff"],
        meta["n_patches"], meta["patch_len"], meta["d_e"], arrays,
        meta["input_scale"],
    )


def save_mlps(path, kind: str, nets: dict, meta: dict | None = None) -> None:
    """Bundle several named Mlp networks into one checkpoint."""
    arrays = {}
    shapes = {}
    for net_name, net in nets.items():
        shapes[net_name] = {"sizes": list(net.sizes), "activations": list(net.activations)}
        for k, v in net.params.items():
            arrays[f"{net_name}.{k}"] = v
    save_checkpoint(path, kind, {"nets": shapes, **(meta or {})}, arrays)


def load_mlps(path, expect_kind: str | None = None):
    kind, meta, arrays = load_checkpoint(path)
    if expect_kind is not None and kind != expect_kind:
        raise ValueError(f"{path} holds a {kind!r} checkpoint, expected {expect_kind!r}")
    nets = {}
    for net_name, shape in meta["nets"].items():
        prefix = net_name + "."
        params = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
        nets[net_name] = Mlp(tuple(shape["sizes"]), tuple(shape["activations"]), params)
    return nets, meta


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path, schema: str, columns, rows) -> None:
    """CSV with a version comment line; floats via repr for byte stability."""
    with open(path, "w", buffering=1) as fh:
        fh.write(f"# rislink {schema}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """Returns (schema comment, column names, rows of strings)."""
    with open(path) as fh:
        schema = fh.readline().rstrip("\n").lstrip("# ")
        columns = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return schema, columns, rows


class CsvLogger:
    """Line-buffered CSV writer so interrupted runs leave valid files."""

    def __init__(self, path, schema: str, columns):
        self.path = path
        self._fh = open(path, "w", buffering=1)
        self._fh.write(f"# rislink {schema}\n")
        self._fh.write(",".join(columns) + "\n")

    def write(self, row) -> None:
        self._fh.write(",".join(_fmt(v) for v in row) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
