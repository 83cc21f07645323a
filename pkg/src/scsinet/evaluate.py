"""Evaluation reports: SGCS tables, complexity tables, baseline sweeps, and
model-vs-baseline comparison. CSV is the contract; plots are optional."""

from __future__ import annotations

import csv
import hashlib
from itertools import product

import numpy as np
import torch

from . import etype2
from .allocation import allocate, compress_rank, decompress_rank
from .blocks import lambda_map, ste_quantize_dequantize
from .dataset import Dataset, iter_layer_groups, normalize_sample
from .metrics import batch_sgcs, sgcs
from .model import BranchConfig, MissingBlockError, ScsiNet
from .training import to_training_tensor

EVAL_CHUNK = 512


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


def write_csv(path: str, header: list[str], rows: list[tuple], metadata: dict) -> None:
    """CSV with provenance comment lines; float cells use a fixed format so
    identical inputs give byte-identical files."""
    with open(path, "w", newline="") as f:
        for key in sorted(metadata):
            f.write(f"# {key}={metadata[key]}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])


def read_csv(path: str) -> tuple[dict, list[str], list[list[str]]]:
    metadata, header, rows = {}, [], []
    with open(path) as f:
        for line in f:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition("=")
                metadata[key] = val
                continue
            cells = next(csv.reader([line]))
            if not header:
                header = cells
            else:
                rows.append(cells)
    return metadata, header, rows


# --- model SGCS -----------------------------------------------------------------

def reconstruct_batches(model: ScsiNet, data: torch.Tensor, antenna_count: int,
                        payloads) -> dict[int, np.ndarray]:
    """Per-sample SGCS through each requested payload branch (quantizer on)."""
    for k in payloads:
        model.validate_config(BranchConfig(antenna_count, k))
    values = {k: [] for k in payloads}
    with torch.no_grad():
        for start in range(0, len(data), EVAL_CHUNK):
            x = data[start:start + EVAL_CHUNK]
            h = model.embed(x, antenna_count)
            for k in payloads:
                v = model.blocks[f"DS-{k}"](h)
                y = lambda_map(ste_quantize_dequantize(v))
                recon = model.reconstruct_from_symbols(y, BranchConfig(antenna_count, k))
                values[k].append(batch_sgcs(x, recon).numpy())
    return {k: np.concatenate(v) for k, v in values.items()}


def sgcs_table(model: ScsiNet, ds: Dataset, payloads) -> list[tuple]:
    """Rows (antenna, payload, layer, mean, p5, p50, p95, count); layer 0
    aggregates all layers."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    data = to_training_tensor(ds)
    per_payload = reconstruct_batches(model, data, ds.n_t, payloads)
    layer_idx = np.array([s.layer_index for s in ds.samples])
    rows = []
    for k in payloads:
        vals = per_payload[k]
        for layer in [0] + sorted(set(layer_idx.tolist())):
            sel = vals if layer == 0 else vals[layer_idx == layer]
            rows.append((ds.n_t, k, layer, float(sel.mean()),
                         float(np.percentile(sel, 5)), float(np.percentile(sel, 50)),
                         float(np.percentile(sel, 95)), int(sel.size)))
    return rows


def check_branches_available(model: ScsiNet, payloads, antenna_count: int) -> None:
    """Explicit error listing absent blocks before an eval starts."""
    missing = []
    for k in payloads:
        for name in (f"DS-{k}", f"US-{k}"):
            if name not in model.blocks:
                missing.append(name)
    for name in (f"LPT-{antenna_count}", f"LT-{antenna_count}"):
        if name not in model.blocks:
            missing.append(name)
    if missing:
        raise MissingBlockError(missing)


def rank_sgcs_table(model: ScsiNet, ds: Dataset, rank: int, config_index: int) -> list[tuple]:
    """Rows (antenna, payload, layer, mean, ..., count) for rank-adaptive
    allocation; one row per layer with its allocated payload."""
    payloads = allocate(config_index, rank)
    per_layer: dict[int, list[float]] = {i + 1: [] for i in range(rank)}
    for group in iter_layer_groups(ds):
        if len(group) < rank:
            continue
        layers = [normalize_sample(s) for s in group[:rank]]
        bits, bounds = compress_rank(layers, config_index, model)
        recons = decompress_rank(bits, bounds, ds.n_t, model)
        for i, (s, w_hat) in enumerate(zip(layers, recons)):
            per_layer[i + 1].append(sgcs(s.w, w_hat).value)
    rows = []
    for i in range(rank):
        vals = np.array(per_layer[i + 1])
        if vals.size == 0:
            raise ValueError("dataset has no complete layer groups for this rank")
        rows.append((ds.n_t, payloads[i], i + 1, float(vals.mean()),
                     float(np.percentile(vals, 5)), float(np.percentile(vals, 50)),
                     float(np.percentile(vals, 95)), int(vals.size)))
    return rows


# --- complexity -------------------------------------------------------------------

def flops_table(model: ScsiNet) -> list[tuple]:
    rows = []
    for nt in sorted(model.hp.antenna_set):
        for k in sorted(model.hp.payload_set):
            enc, dec = model.count_flops(BranchConfig(nt, k))
            rows.append((nt, k, "encoder", enc))
            rows.append((nt, k, "decoder", dec))
    return rows


def params_table(model: ScsiNet) -> list[tuple]:
    totals = model.count_params()
    return [("encoder", totals["encoder"]), ("decoder", totals["decoder"])]


# --- baseline sweep and comparison ---------------------------------------------------

def baseline_sweep(ds: Dataset, configs: list[etype2.Etype2Config],
                   max_groups: int | None = None) -> list[tuple]:
    """Rows (L, p, amp_bits, phase_bits, payload, mean_sgcs, count).

    Evaluates rank-1 reports: layer-1 eigenvectors only, payload accounted
    for a single-layer report.
    """
    groups = list(iter_layer_groups(ds))
    if max_groups is not None:
        groups = groups[:max_groups]
    if not groups:
        raise ValueError("empty dataset")
    layer1 = [normalize_sample(g[0]).w.astype(np.complex128) for g in groups]
    rows = []
    for cfg in configs:
        payload = etype2.payload_bits(cfg, ds.n_t, ds.n_sb, n_layers=1)
        vals = []
        for w in layer1:
            bits = etype2.encode([w], cfg)
            w_hat = etype2.decode(bits, cfg, ds.n_t, ds.n_sb, n_layers=1)[0]
            vals.append(sgcs(w, w_hat).value)
        rows.append((cfg.beams, cfg.freq_ratio, cfg.amp_bits, cfg.phase_bits,
                     payload, float(np.mean(vals)), len(vals)))
    return rows


def sweep_configs(beam_list, ratio_list, amp_list, phase_list, n_t: int,
                  n_sb: int) -> list[etype2.Etype2Config]:
    configs = []
    for beams, ratio, amp, phase in product(beam_list, ratio_list, amp_list, phase_list):
        if 2 * beams > n_t:
            continue
        cfg = etype2.Etype2Config(beams=beams, freq_ratio=ratio, amp_bits=amp,
                                  phase_bits=phase)
        cfg.m_columns(n_sb)  # validates M range
        configs.append(cfg)
    if not configs:
        raise ValueError("baseline sweep is empty (all configs invalid)")
    return configs


def compare_table(model_rows: list[tuple], baseline_rows: list[tuple],
                  payloads, payload_tol: float = 0.10) -> list[tuple]:
    """Rows (payload, model_sgcs, baseline_payload, baseline_sgcs,
    baseline_config, matched, model_beats). Unmatched payloads are flagged,
    never dropped."""
    model_by_payload = {row[1]: row[3] for row in model_rows if row[2] == 0}
    out = []
    for k in payloads:
        model_val = model_by_payload[k]
        candidates = [r for r in baseline_rows if abs(r[4] - k) <= payload_tol * k]
        if not candidates:
            out.append((k, model_val, "", "", "", "no", ""))
            continue
        best = max(candidates, key=lambda r: r[5])
        label = f"L={best[0]},p={best[1]},amp={best[2]},phase={best[3]}"
        out.append((k, model_val, best[4], best[5], label, "yes",
                    "yes" if model_val >= best[5] else "no"))
    return out


# --- optional plotting ------------------------------------------------------------

def plot_sgcs(rows: list[tuple], path: str) -> None:
    """SGCS vs payload, one line per (antenna, layer). Needs matplotlib."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple, list[tuple]] = {}
    for nt, k, layer, mean, *_ in rows:
        series.setdefault((nt, layer), []).append((k, mean))
    fig, ax = plt.subplots(figsize=(7, 5))
    for (nt, layer), pts in sorted(series.items()):
        pts.sort()
        label = f"Nt={nt}, " + ("all layers" if layer == 0 else f"layer {layer}")
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    ax.set_xlabel("payload (bits)")
    ax.set_ylabel("mean SGCS")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
