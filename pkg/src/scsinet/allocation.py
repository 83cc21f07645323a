"""Rank-adaptive payload allocation across MIMO layers, plus the multi-layer
compress/decompress wrapper over the model's single-layer codec.

The allocation table is embedded as data; layer 1 carries the eigenvector of
the largest eigenvalue.
"""

from __future__ import annotations

import numpy as np

from .model import BranchConfig, ScsiNet

# (config_index, rank) -> per-layer payload bits. Values are data, not computed.
ALLOCATION_TABLE: dict[int, dict[int, tuple[int, ...]]] = {
    1: {1: (40,), 2: (60, 20), 3: (40, 20, 20), 4: (40, 20, 20, 20)},
    2: {1: (60,), 2: (80, 40), 3: (60, 40, 20), 4: (60, 20, 20, 40)},
    3: {1: (80,), 2: (100, 60), 3: (80, 40, 40), 4: (80, 40, 20, 40)},
    4: {1: (120,), 2: (160, 80), 3: (100, 80, 60), 4: (120, 60, 40, 40)},
    5: {1: (160,), 2: (220, 100), 3: (160, 120, 80), 4: (160, 100, 60, 60)},
    6: {1: (240,), 2: (320, 140), 3: (180, 140, 120), 4: (180, 140, 80, 60)},
}


def allocate(config_index: int, rank: int) -> list[int]:
    """Per-layer payload bits for one table row."""
    if config_index not in ALLOCATION_TABLE:
        raise ValueError(f"config_index must be 1..6, got {config_index}")
    if rank not in ALLOCATION_TABLE[config_index]:
        raise ValueError(f"rank must be 1..4, got {rank}")
    return list(ALLOCATION_TABLE[config_index][rank])


def compress_rank(w_layers, config_index: int, model: ScsiNet) -> tuple[np.ndarray, list[int]]:
    """Encode rank = len(w_layers) layers, layer i through its allocated
    branch. Returns (concatenated bits, cumulative segment end offsets)."""
    rank = len(w_layers)
    payloads = allocate(config_index, rank)
    arrays = [w.w if hasattr(w, "w") else np.asarray(w) for w in w_layers]
    antenna_counts = {a.shape[0] for a in arrays}
    if len(antenna_counts) != 1:
        raise ValueError(f"layers mix antenna counts {sorted(antenna_counts)}")
    n_t = antenna_counts.pop()
    segments = [model.encode(a, BranchConfig(n_t, k)) for a, k in zip(arrays, payloads)]
    boundaries = list(np.cumsum([len(s) for s in segments]))
    return np.concatenate(segments), boundaries


def decompress_rank(bits: np.ndarray, boundaries: list[int], antenna_count: int,
                    model: ScsiNet) -> list[np.ndarray]:
    """Split at the segment boundaries and decode each layer independently."""
    bits = np.asarray(bits)
    if not boundaries or boundaries[-1] != bits.size:
        raise ValueError(f"boundaries {boundaries} do not span {bits.size} bits")
    out = []
    start = 0
    for end in boundaries:
        segment = bits[start:end]
        out.append(model.decode(segment, BranchConfig(antenna_count, end - start)))
        start = end
    return out
