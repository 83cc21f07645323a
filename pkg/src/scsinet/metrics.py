"""Squared generalized cosine similarity and the multi-payload training loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class SgcsResult:
    value: float
    per_subband: list[float]


def sgcs(w: np.ndarray, w_hat: np.ndarray) -> SgcsResult:
    """Mean over subbands of |w^H w_hat|^2 / (|w|^2 |w_hat|^2).

    Invariant to per-column complex scaling of either argument; range [0,1].
    Columns are subbands.
    """
    w = np.asarray(w)
    w_hat = np.asarray(w_hat)
    if w.shape != w_hat.shape:
        raise ValueError(f"shape mismatch: {w.shape} vs {w_hat.shape}")
    per_subband = []
    for s in range(w.shape[1]):
        a = w[:, s].astype(np.complex128)
        b = w_hat[:, s].astype(np.complex128)
        na = np.vdot(a, a).real
        nb = np.vdot(b, b).real
        if na == 0.0 or nb == 0.0:
            raise ValueError(f"zero column at subband {s}: cosine undefined")
        inner = np.vdot(a, b)
        per_subband.append((inner.real ** 2 + inner.imag ** 2) / (na * nb))
    return SgcsResult(value=float(np.mean(per_subband)),
                      per_subband=[float(v) for v in per_subband])


def batch_sgcs(target: torch.Tensor, recon: torch.Tensor) -> torch.Tensor:
    """Per-sample SGCS for packed real tensors of shape (batch, n_sb, n_t, 2).

    Differentiable everywhere both column norms are nonzero.
    """
    if target.shape != recon.shape:
        raise ValueError(f"shape mismatch: {tuple(target.shape)} vs {tuple(recon.shape)}")
    tr, ti = target[..., 0], target[..., 1]
    rr, ri = recon[..., 0], recon[..., 1]
    # inner product conj(t) . r per (batch, subband)
    re = (tr * rr + ti * ri).sum(dim=-1)
    im = (tr * ri - ti * rr).sum(dim=-1)
    nt = (tr * tr + ti * ti).sum(dim=-1)
    nr = (rr * rr + ri * ri).sum(dim=-1)
    return ((re * re + im * im) / (nt * nr)).mean(dim=-1)


def multi_payload_loss(target: torch.Tensor,
                       reconstructions: dict[int, torch.Tensor],
                       payload_set) -> torch.Tensor:
    """Negative SGCS averaged over the batch and over all configured payloads.

    Minimizing this maximizes the mean recovery accuracy across every
    payload branch simultaneously.
    """
    missing = [k for k in payload_set if k not in reconstructions]
    if missing:
        raise ValueError(f"reconstructions missing payload(s) {missing}")
    per_payload = [batch_sgcs(target, reconstructions[k]).mean() for k in payload_set]
    return -torch.stack(per_payload).mean()
