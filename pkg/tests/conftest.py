import numpy as np
import pytest
import torch

from scsinet.channel import generate_channels
from scsinet.config import Hyperparams
from scsinet.dataset import build_dataset
from scsinet.model import build_model


@pytest.fixture(scope="session")
def tiny_hp():
    return Hyperparams(n_head=2, n_sb=4, n_ri=2, n_emb=16, t_en=1, t_de=1,
                       ffn_width=32, payload_set=(20, 40), antenna_set=(32, 16))


@pytest.fixture
def tiny_model(tiny_hp):
    return build_model(tiny_hp, seed=0)


@pytest.fixture(scope="session")
def tiny_dataset_32(tiny_hp):
    chans = generate_channels(4, 6, 32, 4, 16, seed=7)
    return build_dataset(chans, tiny_hp.n_sb, tiny_hp.n_ri, seed=7)


@pytest.fixture(scope="session")
def tiny_dataset_16(tiny_hp):
    chans = generate_channels(4, 6, 16, 4, 16, seed=8)
    return build_dataset(chans, tiny_hp.n_sb, tiny_hp.n_ri, seed=8)


def central_diff_check(loss_fn, tensors, rng, eps=1e-6, max_coords=16,
                       rtol=1e-3, atol=1e-8):
    """Compare autograd gradients of loss_fn() against central finite
    differences on a random subset of coordinates of each tensor.

    tensors must be float64 leaves; their data is perturbed in place and
    restored. Returns the worst relative error seen.
    """
    loss = loss_fn()
    grads = torch.autograd.grad(loss, tensors, allow_unused=False)
    worst = 0.0
    for t, g in zip(tensors, grads):
        flat = t.detach().reshape(-1)
        gflat = g.reshape(-1)
        coords = rng.choice(flat.numel(), size=min(max_coords, flat.numel()),
                            replace=False)
        for c in coords:
            orig = flat[c].item()
            flat[c] = orig + eps
            up = loss_fn().item()
            flat[c] = orig - eps
            down = loss_fn().item()
            flat[c] = orig
            numeric = (up - down) / (2 * eps)
            analytic = gflat[c].item()
            err = abs(analytic - numeric)
            scale = max(abs(analytic), abs(numeric), atol)
            worst = max(worst, err / scale)
            assert err <= rtol * scale + atol, (
                f"gradient mismatch at coord {c}: analytic {analytic:.6e}, "
                f"numeric {numeric:.6e}")
    return worst


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
