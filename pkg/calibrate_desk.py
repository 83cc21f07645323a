"""Calibration run for the desk preset: checks acceptance criterion 7 margins."""
import time

import numpy as np
import torch

from scsinet.channel import generate_channels
from scsinet.config import desk_profile
from scsinet.dataset import build_dataset, split_by_drop
from scsinet.evaluate import reconstruct_batches
from scsinet.model import build_model
from scsinet.training import run_stage1, run_stage2, run_stage3, to_training_tensor

t0 = time.time()
hp, tc = desk_profile()
print("desk profile:", hp, tc, flush=True)

data = {}
for nt, seed in ((32, 11), (16, 12)):
    chans = generate_channels(10, 31, nt, 4, 48, seed=seed, samples_per_ue=4)
    ds = build_dataset(chans, hp.n_sb, hp.n_ri, seed=seed)
    tr, te = split_by_drop(ds, 0.8)
    data[nt] = (to_training_tensor(tr), to_training_tensor(te))
    print(f"nt={nt}: {len(tr)} train / {len(te)} test; gen {time.time()-t0:.1f}s", flush=True)

model = build_model(hp, seed=0)


def eval_sgcs(m, nt):
    vals = reconstruct_batches(m, data[nt][1], nt, hp.payload_set)
    return {k: float(v.mean()) for k, v in vals.items()}


init32 = eval_sgcs(model, 32)
init16 = eval_sgcs(model, 16)
print("random-init sgcs nt=32:", init32, "nt=16:", init16, flush=True)

t1 = time.time()
rec1 = run_stage1(model, data[32][0], tc, seed=0)
print(f"stage1 {time.time()-t1:.1f}s, first loss {rec1[0].loss:.4f}, last {rec1[-1].loss:.4f}", flush=True)
s1_32 = eval_sgcs(model, 32)
print("stage1 sgcs nt=32:", s1_32, flush=True)
print("  7a margins:", {k: round(s1_32[k] - init32[k], 3) for k in s1_32}, flush=True)
print("  7b margin (120 vs 20):", round(s1_32[120] - s1_32[20], 4), flush=True)

t2 = time.time()
rec2 = run_stage2(model, data[16][0], 16, tc, seed=0)
print(f"stage2 {time.time()-t2:.1f}s, last loss {rec2[-1].loss:.4f}", flush=True)
s2_16 = eval_sgcs(model, 16)
print("stage2 sgcs nt=16:", s2_16, flush=True)
print("  7d margins:", {k: round(s2_16[k] - init16[k], 3) for k in s2_16}, flush=True)

t3 = time.time()
rec3 = run_stage3(model, {32: data[32][0], 16: data[16][0]}, tc, seed=0)
print(f"stage3 {time.time()-t3:.1f}s, last loss {rec3[-1].loss:.4f}", flush=True)
print("final sgcs nt=32:", eval_sgcs(model, 32), flush=True)
print("final sgcs nt=16:", eval_sgcs(model, 16), flush=True)
print(f"total {time.time()-t0:.1f}s", flush=True)
