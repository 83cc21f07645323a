"""Data difficulty grid: which (paths, angle spread) makes payload capacity bind?"""
import time

import numpy as np
import torch

import scsinet.channel as chan
from scsinet.channel import generate_channels
from scsinet.config import Hyperparams, TrainConfig
from scsinet.dataset import build_dataset, split_by_drop
from scsinet.evaluate import reconstruct_batches
from scsinet.model import build_model
from scsinet.training import lr_schedule, to_training_tensor, train_step

hp = Hyperparams(n_emb=32, t_en=1, t_de=1, ffn_width=128, payload_set=(20, 60, 120))
tc = TrainConfig(batch_size=100, warmup_steps=100, lr_scale=0.2)


def experiment(paths, spread, epochs=20):
    chan.ANGLE_SPREAD = spread
    chans = generate_channels(10, 31, 32, 4, 48, seed=11, samples_per_ue=4, n_paths=paths)
    ds = build_dataset(chans, hp.n_sb, hp.n_ri, seed=11)
    tr, te = split_by_drop(ds, 0.8)
    x_tr, x_te = to_training_tensor(tr), to_training_tensor(te)
    m = build_model(hp, seed=0)
    init = {k: float(v.mean()) for k, v in
            reconstruct_batches(m, x_te, 32, hp.payload_set).items()}
    opt = torch.optim.Adam(m.parameters(), lr=0.0)
    step = 0
    t0 = time.time()
    for epoch in range(epochs):
        rng = np.random.default_rng([0, 1, epoch])
        perm = rng.permutation(len(x_tr))
        for start in range(0, len(x_tr), tc.batch_size):
            step += 1
            lr = lr_schedule(step, 1, tc, hp.n_emb)
            for g in opt.param_groups:
                g["lr"] = lr
            train_step(m, x_tr[torch.from_numpy(perm[start:start + tc.batch_size])], 32, opt)
    s = {k: float(v.mean()) for k, v in
         reconstruct_batches(m, x_te, 32, hp.payload_set).items()}
    print(f"paths={paths} spread={spread}: init {init[20]:.3f} -> "
          f"{ {k: round(v,3) for k, v in s.items()} } "
          f"margin {min(s[k]-init[k] for k in s):.3f} mono {s[120]-s[20]:.4f} "
          f"({time.time()-t0:.0f}s)", flush=True)


experiment(4, 0.35)
experiment(4, 0.15)
experiment(6, 0.15)
experiment(2, 0.5)
