import numpy as np
import pytest

from scsinet.channel import (
    ChannelRealization,
    add_estimation_noise,
    extract_eigenvectors,
    generate_channels,
    subband_correlation,
)

from conftest import random_complex


def test_single_path_is_rank_one():
    chans = generate_channels(1, 2, 16, 4, 24, seed=3, n_paths=1)
    for ch in chans:
        for f in range(ch.n_c):
            s = np.linalg.svd(ch.h[f], compute_uv=False)
            assert s[0] > 0
            assert s[1] < 1e-10 * s[0]


def test_same_seed_bit_identical():
    a = generate_channels(2, 3, 32, 4, 48, seed=42)
    b = generate_channels(2, 3, 32, 4, 48, seed=42)
    assert len(a) == len(b)
    for ca, cb in zip(a, b):
        assert np.array_equal(ca.h, cb.h)
        assert (ca.drop_id, ca.ue_id) == (cb.drop_id, cb.ue_id)


def test_different_seed_differs():
    a = generate_channels(1, 1, 16, 4, 16, seed=1)
    b = generate_channels(1, 1, 16, 4, 16, seed=2)
    assert not np.allclose(a[0].h, b[0].h)


def test_realization_counts_and_drop_ids():
    chans = generate_channels(2, 3, 16, 2, 12, seed=0)
    assert len(chans) == 6
    assert {c.drop_id for c in chans} == {0, 1}
    assert [c.ue_id for c in chans if c.drop_id == 0] == [0, 1, 2]


def test_samples_per_ue_multiplies_count():
    chans = generate_channels(2, 3, 16, 2, 12, seed=0, samples_per_ue=4)
    assert len(chans) == 24


@pytest.mark.parametrize("kwargs", [
    dict(n_t=8), dict(n_r=0), dict(n_drops=0), dict(n_paths=0),
])
def test_generate_rejects_bad_args(kwargs):
    base = dict(n_drops=1, ues_per_drop=1, n_t=16, n_r=2, n_c=12, seed=0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        generate_channels(**base)


def test_correlation_block_size_one_is_exact():
    # n_c == n_sb: each subband is a single subcarrier
    ch = generate_channels(1, 1, 16, 2, 4, seed=5)[0]
    corr = subband_correlation(ch, 4)
    for s in range(4):
        expected = ch.h[s].conj().T @ ch.h[s]
        assert np.allclose(corr[s], expected, atol=1e-12)


def test_correlation_identity_channel():
    h = np.stack([np.eye(4, dtype=np.complex128) for _ in range(8)])
    ch = ChannelRealization(h=h, drop_id=0, ue_id=0)
    for r in subband_correlation(ch, 2):
        assert np.allclose(r, np.eye(4), atol=1e-14)


def test_correlation_matches_brute_force_average():
    rng = np.random.default_rng(9)
    h = random_complex(rng, 4, 2, 2)
    ch = ChannelRealization(h=h, drop_id=0, ue_id=0)
    corr = subband_correlation(ch, 2)
    for s in range(2):
        acc = np.zeros((2, 2), dtype=np.complex128)
        for f in (2 * s, 2 * s + 1):
            acc += h[f].conj().T @ h[f]
        assert np.allclose(corr[s], acc / 2, atol=1e-12)


def test_correlation_rejects_bad_subband_count():
    ch = generate_channels(1, 1, 16, 2, 10, seed=0)[0]
    with pytest.raises(ValueError):
        subband_correlation(ch, 3)


def test_correlation_is_psd_and_hermitian():
    rng = np.random.default_rng(4)
    ch = generate_channels(1, 2, 32, 4, 24, seed=21)[0]
    for r in subband_correlation(ch, 6):
        assert np.allclose(r, r.conj().T, atol=1e-10)
        for _ in range(10):
            x = random_complex(rng, 32)
            assert (x.conj() @ r @ x).real >= -1e-9


def test_extract_rank_one_recovers_direction():
    rng = np.random.default_rng(1)
    v = random_complex(rng, 6)
    v /= np.linalg.norm(v)
    w = extract_eigenvectors(np.outer(v, v.conj()), 1)
    assert abs(abs(np.vdot(v, w[:, 0])) - 1.0) < 1e-10


def test_extract_degenerate_identity():
    # repeated eigenvalues: any orthonormal basis is valid, check R-invariance
    w = extract_eigenvectors(np.eye(5, dtype=np.complex128), 3)
    assert np.allclose(w.conj().T @ w, np.eye(3), atol=1e-12)
    assert np.allclose(np.eye(5) @ w, w, atol=1e-12)


def test_extract_matches_independent_eigensolver():
    rng = np.random.default_rng(2)
    a = random_complex(rng, 4, 4)
    r = a @ a.conj().T  # Hermitian PSD
    w = extract_eigenvectors(r, 4)
    # independent oracle: general (non-Hermitian) eigensolver on the same matrix
    vals, vecs = np.linalg.eig(r)
    order = np.argsort(-vals.real)
    for i in range(4):
        assert abs(abs(np.vdot(vecs[:, order[i]], w[:, i])) - 1.0) < 1e-8


def test_extract_ordering_norms_phase():
    rng = np.random.default_rng(3)
    a = random_complex(rng, 8, 8)
    r = a @ a.conj().T
    w = extract_eigenvectors(r, 4)
    rayleigh = [np.real(np.vdot(w[:, i], r @ w[:, i])) for i in range(4)]
    assert all(rayleigh[i] >= rayleigh[i + 1] - 1e-9 for i in range(3))
    for i in range(4):
        assert abs(np.linalg.norm(w[:, i]) - 1.0) < 1e-10
        pivot = w[np.argmax(np.abs(w[:, i])), i]
        assert abs(pivot.imag) < 1e-10 and pivot.real > 0
    assert np.allclose(w.conj().T @ w, np.eye(4), atol=1e-10)


def test_extract_rejects_n_ri_too_large():
    with pytest.raises(ValueError):
        extract_eigenvectors(np.eye(3, dtype=np.complex128), 4)


def test_estimation_noise_scales_with_snr():
    ch = generate_channels(1, 1, 16, 4, 12, seed=6)[0]
    rng_hi = np.random.default_rng(0)
    rng_lo = np.random.default_rng(0)
    noisy_hi = add_estimation_noise(ch, 40.0, rng_hi)
    noisy_lo = add_estimation_noise(ch, 0.0, rng_lo)
    err_hi = np.linalg.norm(noisy_hi.h - ch.h)
    err_lo = np.linalg.norm(noisy_lo.h - ch.h)
    assert 0 < err_hi < err_lo
