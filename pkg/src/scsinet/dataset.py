"""Eigenvector datasets: construction, normalization, drop-based splitting, file I/O.

File layout (little endian): header "EIGV" | u32 version | u32 n_t | u32 n_sb |
u32 n_ri | u64 count | u64 seed, then one record per sample: i32 drop_id |
i32 layer_index | n_t*n_sb interleaved (re, im) float32 pairs, row major over
(n_t, n_sb). Samples are stored as complex64 so write/read round-trips
bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, add_estimation_noise, extract_eigenvectors, subband_correlation

MAGIC = b"EIGV"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIQQ")


class DatasetFormatError(Exception):
    """Raised when a dataset file has a corrupt header or truncated records."""


@dataclass
class EigenSample:
    """Eigenvectors of one MIMO layer across all subbands, shape (n_t, n_sb)."""

    w: np.ndarray
    layer_index: int  # 1-based, layer 1 = largest eigenvalue
    drop_id: int
    antenna_count: int


@dataclass
class Dataset:
    samples: list[EigenSample]
    n_t: int
    n_sb: int
    n_ri: int
    seed: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    def counts_per_layer(self) -> dict[int, int]:
        counts: dict[int, int] = {i: 0 for i in range(1, self.n_ri + 1)}
        for s in self.samples:
            counts[s.layer_index] = counts.get(s.layer_index, 0) + 1
        return counts

    def drop_ids(self) -> set[int]:
        return {s.drop_id for s in self.samples}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.n_t, self.n_sb, self.n_ri, self.seed) != (other.n_t, other.n_sb, other.n_ri, other.seed):
            return False
        if len(self.samples) != len(other.samples):
            return False
        for a, b in zip(self.samples, other.samples):
            if (a.layer_index, a.drop_id, a.antenna_count) != (b.layer_index, b.drop_id, b.antenna_count):
                return False
            if not np.array_equal(a.w, b.w):
                return False
        return True


def normalize_sample(sample: EigenSample) -> EigenSample:
    """Scale so the largest entry magnitude equals 1. Directions unchanged."""
    peak = np.max(np.abs(sample.w))
    if peak == 0:
        raise ValueError("cannot normalize an all-zero eigenvector matrix")
    return EigenSample(w=(sample.w / peak).astype(sample.w.dtype),
                       layer_index=sample.layer_index,
                       drop_id=sample.drop_id,
                       antenna_count=sample.antenna_count)


def build_dataset(channels: list[ChannelRealization], n_sb: int, n_ri: int,
                  seed: int = 0, est_snr_db: float | None = None) -> Dataset:
    """Extract per-layer subband eigenvectors from channel realizations.

    Samples are ordered channel-major, layer-minor (layer cycles 1..n_ri),
    so the n_ri layers of one realization stay contiguous. est_snr_db, when
    set, perturbs each channel with complex Gaussian estimation noise before
    the correlation step.
    """
    if not channels:
        raise ValueError("no channel realizations given")
    n_t = channels[0].n_t
    noise_rng = np.random.default_rng([seed, 0xE57]) if est_snr_db is not None else None

    samples = []
    for ch in channels:
        if ch.n_t != n_t:
            raise ValueError("all channels in a dataset must share n_t")
        if est_snr_db is not None:
            ch = add_estimation_noise(ch, est_snr_db, noise_rng)
        corr = subband_correlation(ch, n_sb)
        per_sb = [extract_eigenvectors(r, n_ri) for r in corr]  # each (n_t, n_ri)
        for layer in range(1, n_ri + 1):
            w = np.stack([per_sb[s][:, layer - 1] for s in range(n_sb)], axis=1)
            samples.append(EigenSample(w=w.astype(np.complex64),
                                       layer_index=layer,
                                       drop_id=ch.drop_id,
                                       antenna_count=n_t))
    return Dataset(samples=samples, n_t=n_t, n_sb=n_sb, n_ri=n_ri, seed=seed)


def split_by_drop(ds: Dataset, train_fraction: float) -> tuple[Dataset, Dataset]:
    """Split with whole drops on one side only: first drops (sorted) train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0,1), got {train_fraction}")
    drops = sorted(ds.drop_ids())
    if len(drops) < 2:
        raise ValueError("need at least two drops to split")
    n_train = int(round(train_fraction * len(drops)))
    n_train = min(max(n_train, 1), len(drops) - 1)
    train_drops = set(drops[:n_train])
    train = [s for s in ds.samples if s.drop_id in train_drops]
    test = [s for s in ds.samples if s.drop_id not in train_drops]
    mk = lambda samples: Dataset(samples=samples, n_t=ds.n_t, n_sb=ds.n_sb,
                                 n_ri=ds.n_ri, seed=ds.seed)
    return mk(train), mk(test)


def write_dataset(ds: Dataset, path: str) -> None:
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, ds.n_t, ds.n_sb, ds.n_ri,
                             len(ds.samples), ds.seed))
        for s in ds.samples:
            f.write(struct.pack("<ii", s.drop_id, s.layer_index))
            w = np.ascontiguousarray(s.w, dtype=np.complex64)
            interleaved = np.empty(w.size * 2, dtype=np.float32)
            interleaved[0::2] = w.real.ravel()
            interleaved[1::2] = w.imag.ravel()
            f.write(interleaved.tobytes())


def read_dataset(path: str) -> Dataset:
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise DatasetFormatError(f"{path}: truncated header")
        magic, version, n_t, n_sb, n_ri, count, seed = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise DatasetFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise DatasetFormatError(f"{path}: unsupported version {version}")
        rec_bytes = 8 + n_t * n_sb * 8
        samples = []
        for i in range(count):
            rec = f.read(rec_bytes)
            if len(rec) != rec_bytes:
                raise DatasetFormatError(f"{path}: truncated record {i} of {count}")
            drop_id, layer_index = struct.unpack_from("<ii", rec)
            flat = np.frombuffer(rec, dtype=np.float32, offset=8)
            w = (flat[0::2] + 1j * flat[1::2]).astype(np.complex64).reshape(n_t, n_sb)
            samples.append(EigenSample(w=w, layer_index=layer_index,
                                       drop_id=drop_id, antenna_count=n_t))
        if f.read(1):
            raise DatasetFormatError(f"{path}: trailing bytes after {count} records")
    return Dataset(samples=samples, n_t=n_t, n_sb=n_sb, n_ri=n_ri, seed=seed)


def iter_layer_groups(ds: Dataset):
    """Yield lists of the n_ri samples belonging to one channel realization.

    Relies on the build order (layer index cycling 1..n_ri within each
    realization), which file round-trips and drop splits preserve.
    """
    group: list[EigenSample] = []
    for s in ds.samples:
        if s.layer_index == 1 and group:
            yield group
            group = []
        group.append(s)
    if group:
        yield group
