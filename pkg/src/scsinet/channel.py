"""Synthetic frequency-selective MIMO channels and subband eigenvector extraction.

Channels are generated as a sum of random multipath clusters with an
exponential power-delay profile. Each cluster contributes a rank-1 outer
product of steering vectors, rotated per subcarrier by its delay, so the
channel is frequency selective and correlated across neighbouring
subcarriers. Transmit steering uses a random per-path phase slope across a
dual-polarized array (two groups of n_t/2 antennas with independent
polarization phases), giving eigenvectors the angular structure that both
learned compression and DFT-beam codebooks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_ANTENNA_COUNTS = (16, 32)

# Delays are in units of the OFDM symbol duration: a path at delay tau
# rotates by exp(-2j*pi*f*tau) on subcarrier f. DELAY_MAX ~ 0.05 gives a
# few full rotations across 48 subcarriers, enough to decorrelate subbands.
DEFAULT_N_PATHS = 4
DELAY_MAX = 0.05
DELAY_RMS = DELAY_MAX / 3.0
# Paths cluster around one dominant departure direction per realization;
# the spread is a phase-slope spread across the array. Tight spreads give
# strongly beam-structured (compressible) eigenvectors.
DEFAULT_ANGLE_SPREAD = 0.15


@dataclass
class ChannelRealization:
    """Per-subcarrier channel matrices for one UE snapshot.

    h holds the stacked channel, shape (n_c, n_r, n_t).
    """

    h: np.ndarray
    drop_id: int
    ue_id: int

    @property
    def n_c(self) -> int:
        return self.h.shape[0]

    @property
    def n_r(self) -> int:
        return self.h.shape[1]

    @property
    def n_t(self) -> int:
        return self.h.shape[2]


def _random_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(n))


def _tx_steering(rng: np.random.Generator, n_t: int, slope: float) -> np.ndarray:
    """Dual-polarized transmit steering: a linear phase slope across each
    n_t/2 group, independent polarization phases."""
    if n_t % 2 == 0:
        half = n_t // 2
        beam = np.exp(1j * slope * np.arange(half))
        pol = _random_phases(rng, 2)
        return np.concatenate([pol[0] * beam, pol[1] * beam])
    return np.exp(1j * slope * np.arange(n_t))


def _single_channel(rng: np.random.Generator, n_t: int, n_r: int, n_c: int,
                    n_paths: int, angle_spread: float) -> np.ndarray:
    delays = np.sort(rng.uniform(0.0, DELAY_MAX, size=n_paths))
    powers = np.exp(-delays / DELAY_RMS)
    powers /= powers.sum()
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths))
    gains *= np.sqrt(powers / 2.0)
    center = 2 * np.pi * rng.random()
    slopes = center + angle_spread * rng.standard_normal(n_paths)

    h = np.zeros((n_c, n_r, n_t), dtype=np.complex128)
    freqs = np.arange(n_c)
    for p in range(n_paths):
        a_r = _random_phases(rng, n_r)
        a_t = _tx_steering(rng, n_t, slopes[p])
        rot = np.exp(-2j * np.pi * freqs * delays[p])  # (n_c,)
        h += gains[p] * rot[:, None, None] * (a_r[:, None] @ a_t[None, :].conj())
    return h


def generate_channels(n_drops: int, ues_per_drop: int, n_t: int, n_r: int,
                      n_c: int, seed: int, samples_per_ue: int = 1,
                      n_paths: int = DEFAULT_N_PATHS,
                      angle_spread: float = DEFAULT_ANGLE_SPREAD) -> list[ChannelRealization]:
    """Generate ``n_drops * ues_per_drop * samples_per_ue`` channel realizations.

    Deterministic for a fixed seed; drops use independent seed streams so
    generation is parallelizable per drop without changing the output.
    """
    if n_t not in SUPPORTED_ANTENNA_COUNTS:
        raise ValueError(f"n_t must be one of {SUPPORTED_ANTENNA_COUNTS}, got {n_t}")
    if n_r < 1:
        raise ValueError(f"n_r must be >= 1, got {n_r}")
    if n_drops < 1 or ues_per_drop < 1 or samples_per_ue < 1:
        raise ValueError("n_drops, ues_per_drop and samples_per_ue must be >= 1")
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")

    channels = []
    for drop in range(n_drops):
        rng = np.random.default_rng([seed, drop])
        for ue in range(ues_per_drop):
            for _ in range(samples_per_ue):
                h = _single_channel(rng, n_t, n_r, n_c, n_paths, angle_spread)
                channels.append(ChannelRealization(h=h, drop_id=drop, ue_id=ue))
    return channels


def add_estimation_noise(channel: ChannelRealization, snr_db: float,
                         rng: np.random.Generator) -> ChannelRealization:
    """Emulate noisy channel estimation by additive complex Gaussian noise."""
    h = channel.h
    sig_power = np.mean(np.abs(h) ** 2)
    noise_power = sig_power / (10.0 ** (snr_db / 10.0))
    noise = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    noise *= np.sqrt(noise_power / 2.0)
    return ChannelRealization(h=h + noise, drop_id=channel.drop_id, ue_id=channel.ue_id)


def subband_correlation(channel: ChannelRealization, n_sb: int) -> list[np.ndarray]:
    """Average transmit-side correlation per subband.

    Subband s covers the s-th block of n_c/n_sb consecutive subcarriers;
    each returned matrix is the block average of H(f)^H H(f), Hermitian PSD.
    """
    n_c = channel.n_c
    if n_c % n_sb != 0:
        raise ValueError(f"n_c={n_c} not divisible by n_sb={n_sb}")
    block = n_c // n_sb
    out = []
    for s in range(n_sb):
        r = np.zeros((channel.n_t, channel.n_t), dtype=np.complex128)
        for f in range(s * block, (s + 1) * block):
            hf = channel.h[f]
            r += hf.conj().T @ hf
        out.append(r / block)
    return out


def _canonicalize_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = vecs.copy()
    for i in range(out.shape[1]):
        col = out[:, i]
        j = int(np.argmax(np.abs(col)))
        pivot = col[j]
        if np.abs(pivot) > 0:
            out[:, i] = col * (np.abs(pivot) / pivot)
    return out


def extract_eigenvectors(r_sb: np.ndarray, n_ri: int) -> np.ndarray:
    """Eigenvectors of a Hermitian PSD matrix for the n_ri largest eigenvalues.

    Columns are ordered by descending eigenvalue, unit norm, and phase
    canonicalized (largest-magnitude entry rotated to real positive) so the
    output is reproducible despite eigenvector phase ambiguity.
    """
    n = r_sb.shape[0]
    if r_sb.shape != (n, n):
        raise ValueError(f"correlation matrix must be square, got {r_sb.shape}")
    if n_ri > n:
        raise ValueError(f"n_ri={n_ri} exceeds matrix dimension {n}")
    _, vecs = np.linalg.eigh(r_sb)  # ascending eigenvalues
    top = vecs[:, ::-1][:, :n_ri]
    return _canonicalize_phase(top)
