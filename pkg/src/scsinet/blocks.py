"""Trainable building blocks: antenna adapters, payload branches with the
embedded 2-bit quantizer, sinusoidal positional encoding, and pre-normalized
transformer encode blocks.

Tensor conventions: eigenvector batches are packed real tensors of shape
(batch, n_sb, n_t, 2) with (real, imag) on the last axis; embeddings are
(batch, n_sb, n_emb).
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

QUANT_LEVELS = 4  # 2 bits per codeword symbol


def sinusoidal_positional_encoding(n_sb: int, n_emb: int,
                                   dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Fixed (n_sb, n_emb) sin/cos table added to transformer block inputs."""
    pos = torch.arange(n_sb, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(torch.arange(0, n_emb, 2, dtype=torch.float64)
                    * (-math.log(10000.0) / n_emb))
    pe = torch.zeros(n_sb, n_emb, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div[: n_emb // 2])
    return pe.to(dtype)


class MultiHeadSelfAttention(nn.Module):
    """Self-attention over the subband axis, scale 1/sqrt(n_emb/n_head)."""

    def __init__(self, n_emb: int, n_head: int):
        super().__init__()
        if n_emb % n_head != 0:
            raise ValueError(f"n_emb={n_emb} not divisible by n_head={n_head}")
        self.n_head = n_head
        self.d_head = n_emb // n_head
        self.q_proj = nn.Linear(n_emb, n_emb)
        self.k_proj = nn.Linear(n_emb, n_emb)
        self.v_proj = nn.Linear(n_emb, n_emb)
        self.out_proj = nn.Linear(n_emb, n_emb)

    def forward(self, x: torch.Tensor, return_weights: bool = False):
        b, s, e = x.shape
        def split(t):  # (b, s, e) -> (b, n_head, s, d_head)
            return t.view(b, s, self.n_head, self.d_head).transpose(1, 2)
        q, k, v = split(self.q_proj(x)), split(self.k_proj(x)), split(self.v_proj(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        attn = torch.softmax(scores, dim=-1)  # (b, n_head, s, s)
        out = (attn @ v).transpose(1, 2).reshape(b, s, e)
        out = self.out_proj(out)
        if return_weights:
            return out, attn
        return out


class TransformerEncodeBlock(nn.Module):
    """Pre-normalization block: x + MHA(LN(x)), then + FFN(LN(.))."""

    def __init__(self, n_emb: int, n_head: int, ffn_width: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(n_emb, eps=1e-5)
        self.attn = MultiHeadSelfAttention(n_emb, n_head)
        self.ln2 = nn.LayerNorm(n_emb, eps=1e-5)
        self.ffn = nn.Sequential(
            nn.Linear(n_emb, ffn_width),
            nn.ReLU(),
            nn.Linear(ffn_width, n_emb),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln1(x))
        x = x + self.ffn(self.ln2(x))
        return x


class LptBlock(nn.Module):
    """Linear pre-transform: (b, n_sb, n_t, 2) -> (b, n_sb, n_emb), no activation."""

    def __init__(self, n_t: int, n_emb: int):
        super().__init__()
        self.n_t = n_t
        self.proj = nn.Linear(2 * n_t, n_emb)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, s = x.shape[0], x.shape[1]
        return self.proj(x.reshape(b, s, 2 * self.n_t))


class LtBlock(nn.Module):
    """Linear transform back: (b, n_sb, n_emb) -> tanh -> (b, n_sb, n_t, 2)."""

    def __init__(self, n_t: int, n_emb: int):
        super().__init__()
        self.n_t = n_t
        self.proj = nn.Linear(n_emb, 2 * n_t)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, s = x.shape[0], x.shape[1]
        return torch.tanh(self.proj(x)).reshape(b, s, self.n_t, 2)


class DsBlock(nn.Module):
    """Down-sampling branch: flatten, affine to k/2 units, sigmoid to [0,1]."""

    def __init__(self, n_sb: int, n_emb: int, payload_bits: int):
        super().__init__()
        self.payload_bits = payload_bits
        self.proj = nn.Linear(n_sb * n_emb, payload_bits // 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.proj(x.reshape(x.shape[0], -1)))


class UsBlock(nn.Module):
    """Up-sampling branch: affine from k/2 to n_sb*n_emb, no activation."""

    def __init__(self, n_sb: int, n_emb: int, payload_bits: int):
        super().__init__()
        self.n_sb = n_sb
        self.n_emb = n_emb
        self.payload_bits = payload_bits
        self.proj = nn.Linear(payload_bits // 2, n_sb * n_emb)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        return self.proj(y).reshape(y.shape[0], self.n_sb, self.n_emb)


def lambda_map(x):
    """Elementwise [0,1] -> [-1,1]: y = 2x - 1. Works on arrays and tensors."""
    return 2 * x - 1


# --- 2-bit scalar uniform quantizer -----------------------------------------
# Decision boundaries {0.25, 0.5, 0.75}, boundary values go to the upper cell;
# reconstruction levels are the cell midpoints {0.125, 0.375, 0.625, 0.875}.

def quantize_codes(v: np.ndarray) -> np.ndarray:
    """[0,1] values to integer codes 0..3 (input clamped against drift)."""
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    return np.minimum((v * QUANT_LEVELS).astype(np.int64), QUANT_LEVELS - 1)


def codes_to_bits(codes: np.ndarray) -> np.ndarray:
    """2-bit symbols, most significant bit first, symbols in vector order."""
    codes = np.asarray(codes)
    bits = np.empty(codes.size * 2, dtype=np.uint8)
    bits[0::2] = (codes >> 1) & 1
    bits[1::2] = codes & 1
    return bits


def bits_to_codes(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.size % 2 != 0:
        raise ValueError(f"bit vector length {bits.size} is not a multiple of 2")
    return (bits[0::2].astype(np.int64) << 1) | bits[1::2].astype(np.int64)


def quantize_2bit(v: np.ndarray) -> np.ndarray:
    """[0,1]^m -> {0,1}^(2m)."""
    return codes_to_bits(quantize_codes(v))


def dequantize_2bit(bits: np.ndarray) -> np.ndarray:
    """{0,1}^(2m) -> cell midpoints in [0,1]^m."""
    return (bits_to_codes(bits) + 0.5) / QUANT_LEVELS


class _QuantizeDequantizeSTE(torch.autograd.Function):
    """Forward: quantize then dequantize to cell midpoints.

    Backward: straight-through identity, so gradients cross the quantizer
    during training.
    """

    @staticmethod
    def forward(ctx, v: torch.Tensor) -> torch.Tensor:
        codes = torch.clamp((torch.clamp(v, 0.0, 1.0) * QUANT_LEVELS).floor(),
                            max=QUANT_LEVELS - 1)
        return (codes + 0.5) / QUANT_LEVELS

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor) -> torch.Tensor:
        return grad_output


def ste_quantize_dequantize(v: torch.Tensor) -> torch.Tensor:
    return _QuantizeDequantizeSTE.apply(v)
