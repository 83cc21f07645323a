"""Sweep lr settings for the desk preset, stage 1 only."""
import sys
import time

import numpy as np
import torch

from scsinet.channel import generate_channels
from scsinet.config import Hyperparams, TrainConfig
from scsinet.dataset import build_dataset, split_by_drop
from scsinet.evaluate import reconstruct_batches
from scsinet.model import build_model
from scsinet.training import run_stage1, to_training_tensor

hp = Hyperparams(n_emb=32, t_en=1, t_de=1, ffn_width=128, payload_set=(20, 60, 120))

t0 = time.time()
chans = generate_channels(10, 31, 32, 4, 48, seed=11, samples_per_ue=4)
ds = build_dataset(chans, hp.n_sb, hp.n_ri, seed=11)
tr, te = split_by_drop(ds, 0.8)
x_tr, x_te = to_training_tensor(tr), to_training_tensor(te)
print(f"data {len(tr)}/{len(te)} in {time.time()-t0:.1f}s", flush=True)


def eval_model(m):
    vals = reconstruct_batches(m, x_te, 32, hp.payload_set)
    return {k: float(v.mean()) for k, v in vals.items()}


base = eval_model(build_model(hp, seed=0))
print("random-init:", {k: round(v, 4) for k, v in base.items()}, flush=True)

for lr_scale, warmup, batch, epochs in [
    (0.1, 50, 200, 10),
    (0.2, 50, 200, 10),
    (0.1, 100, 100, 10),
    (0.2, 100, 100, 10),
    (0.4, 100, 100, 10),
]:
    tc = TrainConfig(batch_size=batch, stage1_epochs=epochs, warmup_steps=warmup,
                     lr_scale=lr_scale)
    m = build_model(hp, seed=0)
    t1 = time.time()
    rec = run_stage1(m, x_tr, tc, seed=0)
    s = eval_model(m)
    margins = {k: round(s[k] - base[k], 3) for k in s}
    print(f"lr_scale={lr_scale} warmup={warmup} batch={batch} e={epochs}: "
          f"{time.time()-t1:.0f}s loss {rec[-1].loss:.4f} "
          f"sgcs={{k: round(v,3) for k,v in s.items()}} "
          f"sgcs={ {k: round(v,3) for k,v in s.items()} } margins={margins} "
          f"mono={s[120]-s[20]:.4f}", flush=True)
