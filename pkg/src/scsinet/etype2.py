"""Simplified eType II-style DFT codec for eigenvectors: spatial beam
selection, frequency-domain compression, scalar coefficient quantization,
and exact payload accounting.

The reconstruction is W_s @ W_tilde @ W_f^H with W_s drawn from a
critically-sampled orthogonal DFT grid (per polarization, dual-polarized),
W_f from the orthogonal DFT basis over subbands. The coefficient quantizer
normalizes by the strongest coefficient (transmitted by index, implicit
amplitude 1 / phase 0), with a dB-uniform amplitude grid and PSK phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

AMP_STEP_DB = 3.0  # amplitude grid step; 2^amp_bits levels from 0 dB downward


@dataclass(frozen=True)
class Etype2Config:
    beams: int           # L, spatial beams per polarization group
    freq_ratio: float    # p, frequency compression ratio; M = ceil(p * n_sb)
    amp_bits: int = 3
    phase_bits: int = 4

    def m_columns(self, n_sb: int) -> int:
        m = math.ceil(self.freq_ratio * n_sb)
        if not 1 <= m <= n_sb:
            raise ValueError(f"M={m} outside [1, {n_sb}] (p={self.freq_ratio})")
        return m

    @property
    def quantized(self) -> bool:
        # amp_bits = phase_bits = 0 selects the unquantized analysis mode
        return self.amp_bits > 0 or self.phase_bits > 0


# --- bit bookkeeping ---------------------------------------------------------

def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _index_bits(n_choices: int) -> int:
    return math.ceil(math.log2(n_choices)) if n_choices > 1 else 0


def _subset_bits(n: int, k: int) -> int:
    return _index_bits(math.comb(n, k))


def _subset_rank(indices, n: int) -> int:
    """Lexicographic rank of a sorted index subset among C(n, k) subsets."""
    rank = 0
    k = len(indices)
    prev = -1
    for t, c in enumerate(indices):
        for v in range(prev + 1, c):
            rank += math.comb(n - 1 - v, k - 1 - t)
        prev = c
    return rank


def _subset_unrank(rank: int, n: int, k: int) -> list[int]:
    indices = []
    v = 0
    for t in range(k):
        while True:
            count = math.comb(n - 1 - v, k - 1 - t)
            if rank < count:
                break
            rank -= count
            v += 1
        indices.append(v)
        v += 1
    return indices


# --- DFT grids and selection ---------------------------------------------------

def spatial_beam_grid(n_t: int) -> np.ndarray:
    """Orthonormal (n_t, n_t) grid: DFT beams over n_t/2 antennas, one block
    per polarization."""
    if n_t % 2 != 0:
        raise ValueError(f"n_t={n_t} must be even (two polarization groups)")
    half = n_t // 2
    dft = np.exp(-2j * np.pi * np.outer(np.arange(half), np.arange(half)) / half)
    dft /= np.sqrt(half)
    grid = np.zeros((n_t, n_t), dtype=np.complex128)
    grid[:half, :half] = dft
    grid[half:, half:] = dft
    return grid


def _stack_layers(w_all_layers) -> np.ndarray:
    if isinstance(w_all_layers, np.ndarray) and w_all_layers.ndim == 2:
        w_all_layers = [w_all_layers]
    return np.concatenate([np.asarray(w) for w in w_all_layers], axis=1)


def select_spatial_beams(w_all_layers, beams: int) -> tuple[np.ndarray, list[int]]:
    """Pick the 2L grid columns with the largest projection energy summed
    over all layers and subbands. Returns (W_s, sorted grid indices)."""
    stacked = _stack_layers(w_all_layers)
    n_t = stacked.shape[0]
    if 2 * beams > n_t:
        raise ValueError(f"2L={2 * beams} exceeds n_t={n_t}")
    grid = spatial_beam_grid(n_t)
    energy = np.sum(np.abs(grid.conj().T @ stacked) ** 2, axis=1)
    chosen = sorted(np.argsort(-energy, kind="stable")[: 2 * beams].tolist())
    return grid[:, chosen], chosen


def frequency_basis(n_sb: int) -> np.ndarray:
    dft = np.exp(-2j * np.pi * np.outer(np.arange(n_sb), np.arange(n_sb)) / n_sb)
    return dft / np.sqrt(n_sb)


def compress_frequency(coeffs: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Keep the M orthogonal DFT columns (over subbands) capturing the most
    energy of coeffs (2L, n_sb). Returns (W_f, W_tilde = coeffs @ W_f, indices)."""
    n_sb = coeffs.shape[1]
    if not 1 <= m <= n_sb:
        raise ValueError(f"M={m} outside [1, {n_sb}]")
    basis = frequency_basis(n_sb)
    energy = np.sum(np.abs(coeffs @ basis) ** 2, axis=0)
    chosen = sorted(np.argsort(-energy, kind="stable")[:m].tolist())
    w_f = basis[:, chosen]
    return w_f, coeffs @ w_f, chosen


def reconstruct(w_s: np.ndarray, w_tilde: np.ndarray, w_f: np.ndarray) -> np.ndarray:
    """W_s @ W_tilde @ W_f^H, shape (n_t, n_sb)."""
    return w_s @ w_tilde @ w_f.conj().T


# --- coefficient quantization ------------------------------------------------

def _amp_grid(amp_bits: int) -> np.ndarray:
    return 10.0 ** (-AMP_STEP_DB * np.arange(2 ** amp_bits) / 20.0)


def quantize_coeffs(w_tilde: np.ndarray, amp_bits: int, phase_bits: int) -> np.ndarray:
    """Quantize relative to the strongest coefficient.

    Emits the strongest coefficient's flat index, then amp+phase codes for
    the remaining coefficients in row-major order.
    """
    flat = np.asarray(w_tilde).ravel()
    if not np.any(np.abs(flat) > 0):
        raise ValueError("cannot quantize an all-zero coefficient matrix")
    strongest = int(np.argmax(np.abs(flat)))
    rel = flat / flat[strongest]

    n_amp = 2 ** amp_bits
    n_phase = 2 ** phase_bits
    pieces = [_int_to_bits(strongest, _index_bits(flat.size))]
    for i, c in enumerate(rel):
        if i == strongest:
            continue
        r = np.abs(c)
        if r > 0:
            amp_idx = int(np.clip(round(-20.0 * math.log10(r) / AMP_STEP_DB), 0, n_amp - 1))
        else:
            amp_idx = n_amp - 1
        phase_idx = int(round(np.angle(c) * n_phase / (2 * np.pi))) % n_phase
        pieces.append(_int_to_bits(amp_idx, amp_bits))
        pieces.append(_int_to_bits(phase_idx, phase_bits))
    return np.concatenate(pieces)


def dequantize_coeffs(bits: np.ndarray, shape: tuple[int, int], amp_bits: int,
                      phase_bits: int) -> np.ndarray:
    size = shape[0] * shape[1]
    idx_bits = _index_bits(size)
    expected = idx_bits + (size - 1) * (amp_bits + phase_bits)
    bits = np.asarray(bits)
    if bits.size != expected:
        raise ValueError(f"coefficient stream has {bits.size} bits, expected {expected}")
    strongest = _bits_to_int(bits[:idx_bits])
    amps = _amp_grid(amp_bits)
    out = np.empty(size, dtype=np.complex128)
    pos = idx_bits
    for i in range(size):
        if i == strongest:
            out[i] = 1.0
            continue
        amp_idx = _bits_to_int(bits[pos:pos + amp_bits])
        phase_idx = _bits_to_int(bits[pos + amp_bits:pos + amp_bits + phase_bits])
        pos += amp_bits + phase_bits
        out[i] = amps[amp_idx] * np.exp(2j * np.pi * phase_idx / 2 ** phase_bits)
    return out.reshape(shape)


# --- full codec with exact payload accounting -----------------------------------

def payload_bits(cfg: Etype2Config, n_t: int, n_sb: int, n_layers: int = 1) -> int:
    """Exact report size: beam-subset index (shared), then per layer the
    frequency-subset index, strongest-coefficient index, and the quantized
    coefficients."""
    m = cfg.m_columns(n_sb)
    per_layer = _subset_bits(n_sb, m)
    per_layer += _index_bits(2 * cfg.beams * m)
    if cfg.quantized:
        per_layer += (2 * cfg.beams * m - 1) * (cfg.amp_bits + cfg.phase_bits)
    return _subset_bits(n_t, 2 * cfg.beams) + n_layers * per_layer


def encode(w_layers, cfg: Etype2Config) -> np.ndarray:
    """Compress one or more layers (each (n_t, n_sb)) into a bitstream whose
    length equals payload_bits(...). Unquantized mode is rejected here; use
    reconstruct_ideal for analysis."""
    if not cfg.quantized:
        raise ValueError("bitstream codec needs amp_bits/phase_bits >= 1")
    layers = [np.asarray(w) for w in ([w_layers] if isinstance(w_layers, np.ndarray)
                                      and w_layers.ndim == 2 else w_layers)]
    n_t, n_sb = layers[0].shape
    m = cfg.m_columns(n_sb)
    w_s, beam_idx = select_spatial_beams(layers, cfg.beams)
    pieces = [_int_to_bits(_subset_rank(beam_idx, n_t), _subset_bits(n_t, 2 * cfg.beams))]
    for w in layers:
        coeffs = w_s.conj().T @ w
        _, w_tilde, freq_idx = compress_frequency(coeffs, m)
        pieces.append(_int_to_bits(_subset_rank(freq_idx, n_sb), _subset_bits(n_sb, m)))
        pieces.append(quantize_coeffs(w_tilde, cfg.amp_bits, cfg.phase_bits))
    return np.concatenate(pieces)


def decode(bits: np.ndarray, cfg: Etype2Config, n_t: int, n_sb: int,
           n_layers: int = 1) -> list[np.ndarray]:
    bits = np.asarray(bits)
    expected = payload_bits(cfg, n_t, n_sb, n_layers)
    if bits.size != expected:
        raise ValueError(f"bitstream has {bits.size} bits, expected {expected}")
    m = cfg.m_columns(n_sb)
    grid = spatial_beam_grid(n_t)
    basis = frequency_basis(n_sb)

    pos = _subset_bits(n_t, 2 * cfg.beams)
    beam_idx = _subset_unrank(_bits_to_int(bits[:pos]), n_t, 2 * cfg.beams)
    w_s = grid[:, beam_idx]

    coeff_bits = _index_bits(2 * cfg.beams * m) + (2 * cfg.beams * m - 1) * (cfg.amp_bits + cfg.phase_bits)
    out = []
    for _ in range(n_layers):
        fb = _subset_bits(n_sb, m)
        freq_idx = _subset_unrank(_bits_to_int(bits[pos:pos + fb]), n_sb, m)
        pos += fb
        w_tilde = dequantize_coeffs(bits[pos:pos + coeff_bits], (2 * cfg.beams, m),
                                    cfg.amp_bits, cfg.phase_bits)
        pos += coeff_bits
        out.append(reconstruct(w_s, w_tilde, basis[:, freq_idx]))
    return out


def reconstruct_ideal(w_layers, cfg: Etype2Config) -> list[np.ndarray]:
    """Beam selection + frequency compression without quantization."""
    layers = [np.asarray(w) for w in ([w_layers] if isinstance(w_layers, np.ndarray)
                                      and w_layers.ndim == 2 else w_layers)]
    n_sb = layers[0].shape[1]
    m = cfg.m_columns(n_sb)
    w_s, _ = select_spatial_beams(layers, cfg.beams)
    out = []
    for w in layers:
        coeffs = w_s.conj().T @ w
        w_f, w_tilde, _ = compress_frequency(coeffs, m)
        out.append(reconstruct(w_s, w_tilde, w_f))
    return out
