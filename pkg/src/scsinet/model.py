"""Multi-branch model assembly: routing, encode/decode, counters, checkpoints.

One shared transformer core (EN/DE) serves every branch; LPT-p/LT-p adapters
absorb the antenna count and DS-k/US-k branches absorb the payload. Exactly
one branch is active per (antenna_count, payload_bits) configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
import hashlib

import numpy as np
import torch
from torch import nn

from .blocks import (
    DsBlock,
    LptBlock,
    LtBlock,
    TransformerEncodeBlock,
    UsBlock,
    dequantize_2bit,
    lambda_map,
    quantize_2bit,
    sinusoidal_positional_encoding,
    ste_quantize_dequantize,
)
from .config import Hyperparams
from .dataset import EigenSample


class NoBranchError(ValueError):
    """Requested (antenna_count, payload_bits) has no configured branch."""


class CheckpointError(Exception):
    """Checkpoint content does not match the model (shape or name mismatch)."""


class MissingBlockError(CheckpointError):
    """Checkpoint lacks parameters for one or more required blocks."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"checkpoint missing block(s): {', '.join(self.missing)}")


@dataclass(frozen=True)
class BranchConfig:
    antenna_count: int
    payload_bits: int


class CoreBlock(nn.Module):
    """Stack of pre-normalized transformer encode blocks (EN or DE)."""

    def __init__(self, n_layers: int, n_emb: int, n_head: int, ffn_width: int):
        super().__init__()
        self.layers = nn.ModuleList(
            TransformerEncodeBlock(n_emb, n_head, ffn_width) for _ in range(n_layers)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


def pack_complex(w: np.ndarray) -> np.ndarray:
    """(n_t, n_sb) complex -> (n_sb, n_t, 2) float32, (real, imag) last."""
    wt = np.asarray(w).T
    return np.stack([wt.real, wt.imag], axis=-1).astype(np.float32)


def unpack_complex(x: np.ndarray) -> np.ndarray:
    """(n_sb, n_t, 2) float32 -> (n_t, n_sb) complex64."""
    return (x[..., 0] + 1j * x[..., 1]).T.astype(np.complex64)


class ScsiNet(nn.Module):
    """The scalable CSI feedback model with canonical block names.

    Blocks live in a name-keyed ModuleDict: LPT-p/LT-p per antenna count,
    DS-k/US-k per payload, and the shared EN/DE cores. Checkpoints and
    freezing address blocks by these names.
    """

    def __init__(self, hp: Hyperparams):
        super().__init__()
        self.hp = hp
        blocks: dict[str, nn.Module] = {}
        for p in hp.antenna_set:
            blocks[f"LPT-{p}"] = LptBlock(p, hp.n_emb)
        blocks["EN"] = CoreBlock(hp.t_en, hp.n_emb, hp.n_head, hp.ffn_width)
        for k in hp.payload_set:
            blocks[f"DS-{k}"] = DsBlock(hp.n_sb, hp.n_emb, k)
        for k in hp.payload_set:
            blocks[f"US-{k}"] = UsBlock(hp.n_sb, hp.n_emb, k)
        blocks["DE"] = CoreBlock(hp.t_de, hp.n_emb, hp.n_head, hp.ffn_width)
        for p in hp.antenna_set:
            blocks[f"LT-{p}"] = LtBlock(p, hp.n_emb)
        self.blocks = nn.ModuleDict(blocks)
        self.register_buffer("pos_enc", sinusoidal_positional_encoding(hp.n_sb, hp.n_emb))
        self._frozen: set[str] = set()
        self.completed_stages: set[int] = set()

    # --- routing -------------------------------------------------------------

    def block_names(self) -> list[str]:
        return list(self.blocks.keys())

    def validate_config(self, cfg: BranchConfig) -> None:
        if cfg.antenna_count not in self.hp.antenna_set:
            raise NoBranchError(
                f"no LPT/LT branch for antenna count {cfg.antenna_count} "
                f"(configured: {sorted(self.hp.antenna_set)})")
        if cfg.payload_bits not in self.hp.payload_set:
            raise NoBranchError(
                f"no DS/US branch for payload {cfg.payload_bits} bits "
                f"(configured: {sorted(self.hp.payload_set)})")

    def route(self, cfg: BranchConfig) -> list[str]:
        """Ordered block path activated for one configuration."""
        self.validate_config(cfg)
        p, k = cfg.antenna_count, cfg.payload_bits
        return [f"LPT-{p}", "EN", f"DS-{k}", f"US-{k}", "DE", f"LT-{p}"]

    # --- forward paths ---------------------------------------------------------

    def embed(self, x: torch.Tensor, antenna_count: int) -> torch.Tensor:
        """LPT adapter, positional encoding, EN core. x: (b, n_sb, n_t, 2)."""
        name = f"LPT-{antenna_count}"
        if name not in self.blocks:
            raise NoBranchError(f"no branch for antenna count {antenna_count}")
        h = self.blocks[name](x) + self.pos_enc
        return self.blocks["EN"](h)

    def reconstruct_from_symbols(self, y: torch.Tensor, cfg: BranchConfig) -> torch.Tensor:
        """US branch, positional encoding, DE core, LT adapter. y in [-1,1]^(k/2)."""
        u = self.blocks[f"US-{cfg.payload_bits}"](y) + self.pos_enc
        h = self.blocks["DE"](u)
        return self.blocks[f"LT-{cfg.antenna_count}"](h)

    def forward_branch(self, x: torch.Tensor, cfg: BranchConfig) -> torch.Tensor:
        """Training-path forward with the straight-through quantizer inside."""
        self.validate_config(cfg)
        h = self.embed(x, cfg.antenna_count)
        v = self.blocks[f"DS-{cfg.payload_bits}"](h)
        y = lambda_map(ste_quantize_dequantize(v))
        return self.reconstruct_from_symbols(y, cfg)

    def forward_all_payloads(self, x: torch.Tensor, antenna_count: int) -> dict[int, torch.Tensor]:
        """One shared encoder pass, every payload branch. Used by the loss."""
        h = self.embed(x, antenna_count)
        out = {}
        for k in self.hp.payload_set:
            cfg = BranchConfig(antenna_count, k)
            v = self.blocks[f"DS-{k}"](h)
            y = lambda_map(ste_quantize_dequantize(v))
            out[k] = self.reconstruct_from_symbols(y, cfg)
        return out

    # --- inference codec ---------------------------------------------------------

    def encode(self, w, cfg: BranchConfig) -> np.ndarray:
        """Compress one normalized eigenvector matrix into exactly k bits.

        The layer index is not an input: the model is layer-common.
        """
        self.validate_config(cfg)
        arr = w.w if isinstance(w, EigenSample) else np.asarray(w)
        expect = (cfg.antenna_count, self.hp.n_sb)
        if arr.shape != expect:
            raise ValueError(f"eigenvector matrix shape {arr.shape}, expected {expect}")
        x = torch.from_numpy(pack_complex(arr)).unsqueeze(0)
        with torch.no_grad():
            h = self.embed(x, cfg.antenna_count)
            v = self.blocks[f"DS-{cfg.payload_bits}"](h)[0].numpy()
        return quantize_2bit(v)

    def decode(self, bits: np.ndarray, cfg: BranchConfig) -> np.ndarray:
        """Reconstruct an (n_t, n_sb) complex matrix from a k-bit codeword."""
        self.validate_config(cfg)
        bits = np.asarray(bits)
        if bits.size != cfg.payload_bits:
            raise ValueError(f"codeword has {bits.size} bits, branch expects {cfg.payload_bits}")
        v = dequantize_2bit(bits).astype(np.float32)
        y = torch.from_numpy(lambda_map(v)).unsqueeze(0)
        with torch.no_grad():
            out = self.reconstruct_from_symbols(y, cfg)[0].numpy()
        return unpack_complex(out)

    # --- freezing ---------------------------------------------------------------

    @property
    def frozen_blocks(self) -> frozenset[str]:
        return frozenset(self._frozen)

    def freeze_blocks(self, names) -> None:
        for name in names:
            if name not in self.blocks:
                raise KeyError(f"unknown block name: {name}")
            self.blocks[name].requires_grad_(False)
            self._frozen.add(name)

    def unfreeze_all(self) -> None:
        self.blocks.requires_grad_(True)
        self._frozen.clear()

    def trainable_parameters(self):
        for name, module in self.blocks.items():
            if name not in self._frozen:
                yield from module.parameters()

    def block_parameter_hash(self, name: str) -> str:
        """SHA-256 over the block's parameter bytes, for freeze auditing."""
        if name not in self.blocks:
            raise KeyError(f"unknown block name: {name}")
        digest = hashlib.sha256()
        for pname, param in sorted(self.blocks[name].named_parameters()):
            digest.update(pname.encode())
            digest.update(param.detach().numpy().tobytes())
        return digest.hexdigest()

    # --- complexity counters ------------------------------------------------------

    def param_count_by_block(self) -> dict[str, int]:
        return {name: sum(p.numel() for p in module.parameters())
                for name, module in self.blocks.items()}

    def count_params(self) -> dict[str, int]:
        """Totals for encoder (LPT + EN + DS) and decoder (US + DE + LT)."""
        per_block = self.param_count_by_block()
        encoder = sum(n for name, n in per_block.items()
                      if name.startswith(("LPT-", "DS-")) or name == "EN")
        decoder = sum(n for name, n in per_block.items()
                      if name.startswith(("US-", "LT-")) or name == "DE")
        return {"encoder": encoder, "decoder": decoder}

    def count_flops(self, cfg: BranchConfig) -> tuple[int, int]:
        """Analytic FLOPs of the routed branch only.

        Convention: one multiply-add = 2 FLOPs; affine maps, attention
        projections, attention score/weighted-sum products and the FFN are
        counted; elementwise activations, layer norms and the quantizer are
        excluded.
        """
        self.validate_config(cfg)
        s, e, f = self.hp.n_sb, self.hp.n_emb, self.hp.ffn_width
        nt, k = cfg.antenna_count, cfg.payload_bits
        per_core_layer = 2 * (
            3 * s * e * e    # Q, K, V projections
            + s * s * e      # attention scores, all heads
            + s * s * e      # softmax-weighted value sums
            + s * e * e      # output projection
            + 2 * s * e * f  # FFN in and out
        )
        encoder = 2 * s * (2 * nt) * e + self.hp.t_en * per_core_layer + 2 * s * e * (k // 2)
        decoder = 2 * (k // 2) * s * e + self.hp.t_de * per_core_layer + 2 * s * e * (2 * nt)
        return encoder, decoder


def build_model(hp: Hyperparams, seed: int = 0) -> ScsiNet:
    """Construct with a deterministic weight initialization."""
    torch.manual_seed(seed)
    return ScsiNet(hp)


# --- checkpoints ------------------------------------------------------------------

_META_KEY = "__meta__/completed_stages"


def save_checkpoint(model: ScsiNet, path: str) -> None:
    """Block-name-keyed container; npz carries per-tensor shape/dtype headers."""
    arrays = {}
    for name, module in model.blocks.items():
        for pname, param in module.named_parameters():
            arrays[f"{name}/{pname}"] = param.detach().numpy()
    arrays[_META_KEY] = np.array(sorted(model.completed_stages), dtype=np.int64)
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def read_checkpoint(path: str) -> dict[str, dict[str, np.ndarray]]:
    """Checkpoint contents grouped by block name."""
    store: dict[str, dict[str, np.ndarray]] = {}
    with np.load(path) as data:
        for key in data.files:
            if key == _META_KEY:
                store.setdefault("__meta__", {})["completed_stages"] = data[key]
                continue
            block, pname = key.split("/", 1)
            store.setdefault(block, {})[pname] = data[key]
    return store


def _load_blocks(model: ScsiNet, store, block_names) -> None:
    missing = [b for b in block_names if b not in store]
    if missing:
        raise MissingBlockError(missing)
    with torch.no_grad():
        for name in block_names:
            params = dict(model.blocks[name].named_parameters())
            stored = store[name]
            extra = set(stored) - set(params)
            if extra:
                raise CheckpointError(f"block {name}: unexpected tensor(s) {sorted(extra)}")
            absent = set(params) - set(stored)
            if absent:
                raise CheckpointError(f"block {name}: missing tensor(s) {sorted(absent)}")
            for pname, param in params.items():
                arr = stored[pname]
                if tuple(arr.shape) != tuple(param.shape):
                    raise CheckpointError(
                        f"block {name}/{pname}: checkpoint shape {tuple(arr.shape)} "
                        f"!= model shape {tuple(param.shape)}")
                param.copy_(torch.from_numpy(arr))


def load_checkpoint(model: ScsiNet, path: str) -> None:
    """Restore every block; errors if any required block is absent."""
    store = read_checkpoint(path)
    _load_blocks(model, store, model.block_names())
    meta = store.get("__meta__", {})
    stages = meta.get("completed_stages")
    model.completed_stages = set(int(s) for s in stages) if stages is not None else set()


def partial_load(model: ScsiNet, path: str, block_names) -> None:
    """Restore only the named blocks, leaving all others untouched."""
    unknown = [b for b in block_names if b not in model.blocks]
    if unknown:
        raise KeyError(f"unknown block name(s): {sorted(unknown)}")
    store = read_checkpoint(path)
    _load_blocks(model, store, list(block_names))
