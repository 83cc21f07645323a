"""Stage-1 learning dynamics on the full desk dataset: schedule vs constant lr."""
import time

import numpy as np
import torch

from scsinet.channel import generate_channels
from scsinet.config import Hyperparams, TrainConfig
from scsinet.dataset import build_dataset, split_by_drop
from scsinet.evaluate import reconstruct_batches
from scsinet.model import build_model
from scsinet.training import lr_schedule, to_training_tensor, train_step

hp = Hyperparams(n_emb=32, t_en=1, t_de=1, ffn_width=128, payload_set=(20, 60, 120))
chans = generate_channels(10, 31, 32, 4, 48, seed=11, samples_per_ue=4)
ds = build_dataset(chans, hp.n_sb, hp.n_ri, seed=11)
tr, te = split_by_drop(ds, 0.8)
x_tr, x_te = to_training_tensor(tr), to_training_tensor(te)
print("train:", x_tr.shape, flush=True)


def run(tag, lr_fn, epochs=10, batch=100):
    m = build_model(hp, seed=0)
    opt = torch.optim.Adam(m.parameters(), lr=0.0)
    step = 0
    t0 = time.time()
    for epoch in range(epochs):
        rng = np.random.default_rng([0, 1, epoch])
        perm = rng.permutation(len(x_tr))
        for start in range(0, len(x_tr), batch):
            step += 1
            lr = lr_fn(step)
            for g in opt.param_groups:
                g["lr"] = lr
            loss = train_step(m, x_tr[torch.from_numpy(perm[start:start + batch])], 32, opt)
            if step % 80 == 0:
                print(f"  step {step} lr {lr:.2e} loss {loss:.4f}", flush=True)
    vals = reconstruct_batches(m, x_te, 32, hp.payload_set)
    s = {k: round(float(v.mean()), 3) for k, v in vals.items()}
    print(f"{tag}: test sgcs {s} mono {s[120]-s[20]:.4f} ({time.time()-t0:.0f}s)", flush=True)
    return m


tc = TrainConfig(batch_size=100, stage1_epochs=10, warmup_steps=100, lr_scale=0.2)
run("schedule ls=0.2 wu=100", lambda s: lr_schedule(s, 1, tc, hp.n_emb))
run("constant 3e-3", lambda s: 3e-3)
run("constant 1e-2", lambda s: 1e-2)
