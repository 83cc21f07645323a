"""Can the desk model overfit 64 samples? Isolates architecture vs schedule."""
import time

import numpy as np
import torch

from scsinet.channel import generate_channels
from scsinet.config import Hyperparams
from scsinet.dataset import build_dataset
from scsinet.metrics import batch_sgcs, multi_payload_loss
from scsinet.model import build_model
from scsinet.training import to_training_tensor

hp = Hyperparams(n_emb=32, t_en=1, t_de=1, ffn_width=128, payload_set=(20, 60, 120))
chans = generate_channels(2, 8, 32, 4, 48, seed=11)
ds = build_dataset(chans, hp.n_sb, hp.n_ri, seed=11)
x = to_training_tensor(ds)[:64]
print("data:", x.shape)


def run(tag, lr, steps, quantize=True, n_emb=32):
    hp_ = Hyperparams(n_emb=n_emb, t_en=1, t_de=1, ffn_width=4 * n_emb,
                      payload_set=(20, 60, 120))
    m = build_model(hp_, seed=0)
    opt = torch.optim.Adam(m.parameters(), lr=lr)
    t0 = time.time()
    for i in range(steps):
        if quantize:
            recon = m.forward_all_payloads(x, 32)
        else:
            h = m.embed(x, 32)
            recon = {}
            for k in hp_.payload_set:
                from scsinet.blocks import lambda_map
                v = m.blocks[f"DS-{k}"](h)
                recon[k] = m.reconstruct_from_symbols(lambda_map(v),
                          __import__("scsinet.model", fromlist=["BranchConfig"]).BranchConfig(32, k))
        loss = multi_payload_loss(x, recon, hp_.payload_set)
        opt.zero_grad(); loss.backward(); opt.step()
    with torch.no_grad():
        recon = m.forward_all_payloads(x, 32)
        s = {k: float(batch_sgcs(x, r).mean()) for k, r in recon.items()}
    print(f"{tag}: loss {float(loss):.4f} sgcs {{ {', '.join(f'{k}: {v:.3f}' for k, v in s.items())} }} "
          f"({time.time()-t0:.0f}s)", flush=True)


run("lr=1e-3 q=on  300 steps", 1e-3, 300)
run("lr=3e-3 q=on  300 steps", 3e-3, 300)
run("lr=1e-2 q=on  300 steps", 1e-2, 300)
run("lr=3e-3 q=off 300 steps", 3e-3, 300, quantize=False)
run("lr=3e-3 q=on  emb=64 300", 3e-3, 300, n_emb=64)
