"""Model and training configuration, presets, and flat JSON config files."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

FULL_PAYLOAD_SET = tuple(range(20, 321, 20))
DESK_PAYLOAD_SET = (20, 60, 120)


@dataclass(frozen=True)
class Hyperparams:
    n_head: int = 8
    n_sb: int = 12
    n_ri: int = 4
    n_emb: int = 128
    t_en: int = 2
    t_de: int = 2
    ffn_width: int = 512
    payload_set: tuple[int, ...] = FULL_PAYLOAD_SET
    antenna_set: tuple[int, ...] = (32, 16)  # round-robin order, 32 first

    def __post_init__(self):
        if self.n_emb % self.n_head != 0:
            raise ValueError(f"n_emb={self.n_emb} not divisible by n_head={self.n_head}")
        for k in self.payload_set:
            if k <= 0 or k % 2 != 0:
                raise ValueError(f"payload {k} must be a positive even bit count")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 512
    stage1_epochs: int = 200
    stage2_epochs: int = 100
    stage3_epochs: int = 30
    warmup_steps: int = 4000
    lr_scale: float = 1.0  # c = lr_scale * n_emb^-0.5 in the warmup schedule
    stage3_lr_max: float = 1e-4
    stage3_lr_min: float = 1e-5
    train_fraction: float = 0.8

    def stage2_frozen_blocks(self, payload_set) -> set[str]:
        frozen = {"EN", "DE"}
        for k in payload_set:
            frozen |= {f"DS-{k}", f"US-{k}"}
        return frozen


def full_profile() -> tuple[Hyperparams, TrainConfig]:
    return Hyperparams(), TrainConfig()


def desk_profile() -> tuple[Hyperparams, TrainConfig]:
    """Reduced configuration that runs the whole pipeline in minutes on a laptop."""
    hp = Hyperparams(n_emb=32, t_en=1, t_de=1, ffn_width=128,
                     payload_set=DESK_PAYLOAD_SET)
    tc = TrainConfig(batch_size=100, stage1_epochs=10, stage2_epochs=5,
                     stage3_epochs=3, warmup_steps=100, lr_scale=0.2)
    return hp, tc


PRESETS = {"full": full_profile, "desk": desk_profile}


def to_flat_dict(hp: Hyperparams, tc: TrainConfig, extra: dict | None = None) -> dict:
    flat = {}
    for prefix, cfg in (("model.", hp), ("train.", tc)):
        for key, val in asdict(cfg).items():
            flat[prefix + key] = list(val) if isinstance(val, tuple) else val
    if extra:
        flat.update(extra)
    return flat


def from_flat_dict(flat: dict) -> tuple[Hyperparams, TrainConfig, dict]:
    """Split a flat key-value mapping into configs plus unclaimed extras."""
    hp_kwargs, tc_kwargs, extra = {}, {}, {}
    hp_fields = set(Hyperparams.__dataclass_fields__)
    tc_fields = set(TrainConfig.__dataclass_fields__)
    for key, val in flat.items():
        if key.startswith("model."):
            name = key[len("model."):]
            if name not in hp_fields:
                raise ValueError(f"unknown model config key: {key}")
            hp_kwargs[name] = tuple(val) if isinstance(val, list) else val
        elif key.startswith("train."):
            name = key[len("train."):]
            if name not in tc_fields:
                raise ValueError(f"unknown train config key: {key}")
            tc_kwargs[name] = val
        else:
            extra[key] = val
    return Hyperparams(**hp_kwargs), TrainConfig(**tc_kwargs), extra


def load_config(path_or_preset: str) -> tuple[Hyperparams, TrainConfig, dict]:
    """Load a flat JSON config file, or a named preset ("desk", "full")."""
    if path_or_preset in PRESETS:
        hp, tc = PRESETS[path_or_preset]()
        return hp, tc, {}
    with open(path_or_preset) as f:
        flat = json.load(f)
    return from_flat_dict(flat)


def save_config(path: str, hp: Hyperparams, tc: TrainConfig,
                extra: dict | None = None) -> None:
    with open(path, "w") as f:
        json.dump(to_flat_dict(hp, tc, extra), f, indent=2, sort_keys=True)
        f.write("\n")


def config_hash(hp: Hyperparams, tc: TrainConfig, extra: dict | None = None) -> str:
    """Stable short digest identifying a run configuration."""
    canon = json.dumps(to_flat_dict(hp, tc, extra), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
