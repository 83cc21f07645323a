"""Three-stage training: multi-payload loss over every branch, antenna
round-robin, selective freezing, and the two learning-rate schedules.

Stage 1 trains the core plus the base-antenna adapters on base-antenna data.
Stage 2 trains only the LPT-p/LT-p pair for each remaining antenna count with
everything else frozen. Stage 3 unfreezes all blocks and fine-tunes with
antenna round-robin batches under cosine annealing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .config import TrainConfig
from .dataset import Dataset, normalize_sample
from .metrics import multi_payload_loss
from .model import ScsiNet, pack_complex


@dataclass
class StepRecord:
    stage: int
    epoch: int
    step: int
    loss: float
    lr: float


def to_training_tensor(ds: Dataset) -> torch.Tensor:
    """Normalized, packed (n, n_sb, n_t, 2) float32 tensor, all layers pooled."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    packed = np.stack([pack_complex(normalize_sample(s).w) for s in ds.samples])
    return torch.from_numpy(packed)


def lr_schedule(index: int, stage: int, tc: TrainConfig, n_emb: int) -> float:
    """Stages 1-2: warmup-scaled inverse square root per optimizer step.

    Stage 3: cosine annealing per epoch from stage3_lr_max down to
    stage3_lr_min over stage3_epochs.
    """
    if stage in (1, 2):
        step = max(int(index), 1)
        c = tc.lr_scale * n_emb ** -0.5
        return c * min(step ** -0.5, step * tc.warmup_steps ** -1.5)
    if stage == 3:
        span = tc.stage3_lr_max - tc.stage3_lr_min
        frac = min(index / tc.stage3_epochs, 1.0)
        return tc.stage3_lr_min + 0.5 * span * (1.0 + math.cos(math.pi * frac))
    raise ValueError(f"unknown stage {stage}")


def _set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def train_step(model: ScsiNet, batch: torch.Tensor, antenna_count: int,
               optimizer: torch.optim.Optimizer) -> float:
    """Forward through ALL payload branches, one update on non-frozen blocks."""
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    recon = model.forward_all_payloads(batch, antenna_count)
    loss = multi_payload_loss(batch, recon, model.hp.payload_set)
    optimizer.zero_grad()
    if loss.requires_grad:  # everything frozen -> defined no-op
        loss.backward()
        optimizer.step()
    return float(loss.detach())


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def _train_epochs(model: ScsiNet, data: torch.Tensor, antenna_count: int,
                  optimizer: torch.optim.Optimizer, tc: TrainConfig,
                  stage: int, epochs: int, seed: int) -> list[StepRecord]:
    records = []
    step = 0
    for epoch in range(epochs):
        rng = np.random.default_rng([seed, stage, epoch])
        for idx in _epoch_batches(len(data), tc.batch_size, rng):
            step += 1
            lr = lr_schedule(step, stage, tc, model.hp.n_emb)
            _set_lr(optimizer, lr)
            loss = train_step(model, data[torch.from_numpy(idx)], antenna_count, optimizer)
            records.append(StepRecord(stage, epoch, step, loss, lr))
    return records


def round_robin_epoch(model: ScsiNet, data: dict[int, torch.Tensor],
                      optimizer: torch.optim.Optimizer, batch_size: int,
                      rng: np.random.Generator) -> list[float]:
    """One pass alternating batches over antenna counts in configured order."""
    order = list(model.hp.antenna_set)
    missing = [p for p in order if p not in data]
    if missing:
        raise ValueError(f"missing dataset(s) for antenna count(s) {missing}")
    batches = {p: list(_epoch_batches(len(data[p]), batch_size, rng)) for p in order}
    n_iter = max(len(b) for b in batches.values())
    losses = []
    for i in range(n_iter):
        for p in order:
            idx = batches[p][i % len(batches[p])]
            losses.append(train_step(model, data[p][torch.from_numpy(idx)], p, optimizer))
    return losses


def _as_tensor(data) -> torch.Tensor:
    return data if isinstance(data, torch.Tensor) else to_training_tensor(data)


def run_stage1(model: ScsiNet, data_base, tc: TrainConfig, seed: int = 0) -> list[StepRecord]:
    """Optimize the core, payload branches and base-antenna adapters only."""
    base = model.hp.antenna_set[0]
    data = _as_tensor(data_base)
    model.unfreeze_all()
    model.freeze_blocks([f"LPT-{p}" for p in model.hp.antenna_set if p != base]
                        + [f"LT-{p}" for p in model.hp.antenna_set if p != base])
    optimizer = torch.optim.Adam(model.trainable_parameters(), lr=0.0)
    records = _train_epochs(model, data, base, optimizer, tc,
                            stage=1, epochs=tc.stage1_epochs, seed=seed)
    model.completed_stages.add(1)
    return records


def run_stage2(model: ScsiNet, data_p, antenna_count: int, tc: TrainConfig,
               seed: int = 0) -> list[StepRecord]:
    """Optimize one LPT-p/LT-p pair; core and every payload branch stay frozen."""
    if 1 not in model.completed_stages:
        raise ValueError("stage 2 requires stage-1 weights (run stage 1 or load its checkpoint)")
    base = model.hp.antenna_set[0]
    if antenna_count == base or antenna_count not in model.hp.antenna_set:
        raise ValueError(f"stage 2 trains a non-base antenna count, got {antenna_count}")
    data = _as_tensor(data_p)
    model.unfreeze_all()
    model.freeze_blocks(name for name in model.block_names()
                        if name not in (f"LPT-{antenna_count}", f"LT-{antenna_count}"))
    optimizer = torch.optim.Adam(model.trainable_parameters(), lr=0.0)
    records = _train_epochs(model, data, antenna_count, optimizer, tc,
                            stage=2, epochs=tc.stage2_epochs, seed=seed)
    model.completed_stages.add(2)
    return records


def run_stage3(model: ScsiNet, datasets: dict[int, object], tc: TrainConfig,
               seed: int = 0) -> list[StepRecord]:
    """Unfreeze everything and fine-tune with round-robin + cosine annealing."""
    if 1 not in model.completed_stages:
        raise ValueError("stage 3 requires stage-1 weights")
    if len(model.hp.antenna_set) > 1 and 2 not in model.completed_stages:
        raise ValueError("stage 3 requires stage-2 weights for the non-base antenna counts")
    data = {p: _as_tensor(d) for p, d in datasets.items()}
    model.unfreeze_all()
    optimizer = torch.optim.Adam(model.trainable_parameters(), lr=0.0)
    records = []
    step = 0
    for epoch in range(tc.stage3_epochs):
        lr = lr_schedule(epoch, 3, tc, model.hp.n_emb)
        _set_lr(optimizer, lr)
        rng = np.random.default_rng([seed, 3, epoch])
        for loss in round_robin_epoch(model, data, optimizer, tc.batch_size, rng):
            step += 1
            records.append(StepRecord(3, epoch, step, loss, lr))
    model.completed_stages.add(3)
    return records


def run_pipeline(model: ScsiNet, datasets: dict[int, object], tc: TrainConfig,
                 seed: int = 0) -> list[StepRecord]:
    """All three stages in order. datasets maps antenna count to train data."""
    base = model.hp.antenna_set[0]
    if base not in datasets:
        raise ValueError(f"stage 1 needs data for the base antenna count {base}")
    data = {p: _as_tensor(d) for p, d in datasets.items()}
    records = run_stage1(model, data[base], tc, seed=seed)
    for p in model.hp.antenna_set:
        if p == base:
            continue
        if p not in data:
            raise ValueError(f"stage 2 needs data for antenna count {p}")
        records += run_stage2(model, data[p], p, tc, seed=seed)
    records += run_stage3(model, data, tc, seed=seed)
    return records
