"""Experiment configuration: TOML or JSON files over desk-scale defaults.

Powers are written in dBm in config files and converted to watts here, at
the boundary; everything internal works in watts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .channel import BlockageModel, GeometryConfig
from .hdrl import AgentConfig
from .signal import LinkBudget
from .utils import dbm_to_watts

EXPERIMENT_KINDS = ("convergence", "se_vs_power", "se_vs_ris")


class ConfigError(Exception):
    """Bad or inconsistent configuration; maps to exit code 1."""


@dataclass
class EncoderConfig:
    d_model: int = 128
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    n_patches: int = 12
    d_e: int = 32
    mask_fraction: float = 0.15
    pretrain_steps: int = 600
    pretrain_lr: float = 1e-3
    weight_decay: float = 0.01
    pretrain_batch: int = 64
    finetune_steps: int = 300
    finetune_lr: float = 1e-5
    finetune_batch: int = 64
    finetune_target: str = "recon"  # "recon" (self-supervised) or "se" (sweep oracle)


@dataclass
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    budget: LinkBudget = field(default_factory=lambda: LinkBudget(1.0, 1e-9, 0.5))
    blockage: BlockageModel = field(default_factory=BlockageModel)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    bs_codebook: int = 8
    ris_codebook: int = 8
    episodes: int = 2000
    macro_slots_per_episode: int = 2
    eval_every: int = 50
    eval_env_count: int = 20
    eval_macro_slots: int = 2
    dataset_records: int = 96
    seeds: tuple = (0, 1, 2, 3, 4)
    outdir: str = "out"
    kind: str = "convergence"
    power_grid_dbm: tuple = (0.0, 10.0, 20.0, 30.0)
    ris_grid: tuple = (4, 8, 16)

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"experiment kind must be one of {EXPERIMENT_KINDS}")


def _build(cls, data: dict, convert=None):
    try:
        return cls(**(convert(data) if convert else data))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [{cls.__name__}] section: {exc}") from exc


def _budget_fields(data: dict) -> dict:
    out = dict(data)
    if "p_max_dbm" in out:
        out["p_max"] = dbm_to_watts(out.pop("p_max_dbm"))
    if "sigma2_dbm" in out:
        out["sigma2"] = dbm_to_watts(out.pop("sigma2_dbm"))
    return out


def _tupled(data: dict, *keys) -> dict:
    out = dict(data)
    for key in keys:
        if key in out:
            out[key] = tuple(out[key])
    return out


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    sections = {}
    if "geometry" in raw:
        sections["geometry"] = _build(
            GeometryConfig, _tupled(raw.pop("geometry"), "area_bounds",
                                    "bs_position", "ris_position"))
    if "budget" in raw:
        sections["budget"] = _build(LinkBudget, raw.pop("budget"), _budget_fields)
    if "blockage" in raw:
        sections["blockage"] = _build(BlockageModel, raw.pop("blockage"))
    if "encoder" in raw:
        sections["encoder"] = _build(EncoderConfig, raw.pop("encoder"))
    if "agent" in raw:
        sections["agent"] = _build(AgentConfig, _tupled(raw.pop("agent"), "hidden"))
    top = _tupled(raw, "seeds", "power_grid_dbm", "ris_grid")
    try:
        return ExperimentConfig(**sections, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_bytes()
    if path.suffix == ".json":
        raw = json.loads(text)
    elif path.suffix == ".toml":
        raw = tomllib.loads(text.decode())
    else:
        try:
            raw = tomllib.loads(text.decode())
        except Exception:
            try:
                raw = json.loads(text)
            except Exception as exc:
                raise ConfigError(f"{path}: neither valid TOML nor JSON") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return config_from_dict(raw)
