import numpy as np
import pytest
import torch

from scsinet.metrics import batch_sgcs, multi_payload_loss, sgcs
from scsinet.model import pack_complex

from conftest import central_diff_check, random_complex


def test_identity_is_exactly_one():
    rng = np.random.default_rng(0)
    w = random_complex(rng, 8, 5)
    res = sgcs(w, w)
    assert res.value == 1.0
    assert all(v == 1.0 for v in res.per_subband)


def test_value_is_mean_of_per_subband():
    rng = np.random.default_rng(1)
    res = sgcs(random_complex(rng, 4, 6), random_complex(rng, 4, 6))
    assert np.isclose(res.value, np.mean(res.per_subband), atol=1e-15)
    assert len(res.per_subband) == 6


def test_per_column_phase_and_scale_invariance():
    rng = np.random.default_rng(2)
    w = random_complex(rng, 6, 4)
    scales = rng.uniform(0.5, 3.0, 4) * np.exp(2j * np.pi * rng.random(4))
    res = sgcs(w, w * scales[None, :])
    assert abs(res.value - 1.0) < 1e-12


def test_hand_case_half():
    w = np.array([[1.0], [0.0]], dtype=complex)
    w_hat = np.array([[1.0], [1.0]], dtype=complex) / np.sqrt(2.0)
    assert abs(sgcs(w, w_hat).value - 0.5) < 1e-12


def test_range_and_symmetry_random():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = random_complex(rng, 4, 3)
        b = random_complex(rng, 4, 3)
        r_ab = sgcs(a, b)
        assert 0.0 <= r_ab.value <= 1.0
        assert all(0.0 <= v <= 1.0 for v in r_ab.per_subband)
        assert abs(r_ab.value - sgcs(b, a).value) < 1e-12


def test_unitary_invariance():
    rng = np.random.default_rng(4)
    a = random_complex(rng, 5, 3)
    b = random_complex(rng, 5, 3)
    q, _ = np.linalg.qr(random_complex(rng, 5, 5))
    assert abs(sgcs(q @ a, q @ b).value - sgcs(a, b).value) < 1e-12


def test_zero_column_rejected():
    w = np.ones((3, 2), dtype=complex)
    bad = w.copy()
    bad[:, 1] = 0
    with pytest.raises(ValueError):
        sgcs(w, bad)
    with pytest.raises(ValueError):
        sgcs(bad, w)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        sgcs(np.ones((3, 2), dtype=complex), np.ones((3, 3), dtype=complex))


def test_batch_sgcs_matches_numpy_sgcs():
    # the torch training path against the numpy metric as oracle
    rng = np.random.default_rng(5)
    ws = [random_complex(rng, 6, 4) for _ in range(8)]
    vs = [random_complex(rng, 6, 4) for _ in range(8)]
    target = torch.from_numpy(np.stack([pack_complex(w) for w in ws])).double()
    recon = torch.from_numpy(np.stack([pack_complex(v) for v in vs])).double()
    got = batch_sgcs(target, recon).numpy()
    want = np.array([sgcs(w, v).value for w, v in zip(ws, vs)])
    assert np.allclose(got, want, atol=1e-12)


def _packed(w):
    return torch.from_numpy(pack_complex(w)).double().unsqueeze(0)


def test_loss_perfect_reconstruction_is_minus_one():
    rng = np.random.default_rng(6)
    w = _packed(random_complex(rng, 4, 3))
    assert float(multi_payload_loss(w, {20: w.clone(), 40: w.clone()}, (20, 40))) == -1.0


def test_loss_singleton_payload():
    w = np.array([[1.0], [0.0]], dtype=complex)
    w_hat = np.array([[1.0], [1.0]], dtype=complex) / np.sqrt(2.0)
    loss = multi_payload_loss(_packed(w), {20: _packed(w_hat)}, (20,))
    assert abs(float(loss) + 0.5) < 1e-12


def test_loss_averages_over_payloads():
    # per-payload sgcs means 0.4 and 0.6 -> loss -0.5
    w = np.array([[1.0], [0.0]], dtype=complex)
    def recon(val):
        phi = np.arccos(np.sqrt(val))
        return np.array([[np.cos(phi)], [np.sin(phi)]], dtype=complex)
    loss = multi_payload_loss(_packed(w), {20: _packed(recon(0.4)), 40: _packed(recon(0.6))},
                              (20, 40))
    assert abs(float(loss) + 0.5) < 1e-12


def test_loss_missing_payload_rejected():
    rng = np.random.default_rng(7)
    w = _packed(random_complex(rng, 4, 3))
    with pytest.raises(ValueError):
        multi_payload_loss(w, {20: w}, (20, 40))


def test_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(8)
    torch.manual_seed(8)
    target = torch.randn(3, 4, 5, 2, dtype=torch.float64)
    recons = {k: torch.randn(3, 4, 5, 2, dtype=torch.float64, requires_grad=True)
              for k in (20, 40)}
    def loss_fn():
        return multi_payload_loss(target, recons, (20, 40))
    worst = central_diff_check(loss_fn, list(recons.values()), rng, rtol=1e-4)
    assert worst <= 1e-4
