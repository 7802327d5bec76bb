"""Calibration probe (working script, not part of the package)."""
import os
import sys
import time

import numpy as np

from rislink.config import ExperimentConfig
from rislink.cli import generate_records, build_encoder_params, make_train_config
from rislink.hdrl import train_fm_hdrl, train_fm_drl, evaluate_sweep_baseline
from rislink.serialization import save_encoder, load_encoder

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 600
algo = sys.argv[2] if len(sys.argv) > 2 else "fm-hdrl"
seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0

cfg = ExperimentConfig(episodes=episodes, eval_every=100, dataset_records=96)
cache = "/tmp/enc_desk.ckpt"
if os.path.exists(cache):
    enc = load_encoder(cache)
else:
    records = generate_records(cfg, cfg.dataset_records, 0)
    t0 = time.perf_counter()
    enc = build_encoder_params(cfg, records, 0)
    print(f"encoder: {time.perf_counter()-t0:.1f}s", flush=True)
    save_encoder(cache, enc)

tcfg = make_train_config(cfg, enc)
sw = evaluate_sweep_baseline(tcfg, 8, 8)
print(f"sweep: {sw:.3f}, target(1.05x): {1.05*sw:.3f}", flush=True)
t0 = time.perf_counter()
train = train_fm_hdrl if algo == "fm-hdrl" else train_fm_drl
res = train(tcfg, seed)
print(f"{algo} {episodes} ep: {time.perf_counter()-t0:.1f}s", flush=True)
for ep, se in res.eval_points:
    print(f"  ep {ep:4d}: eval SE {se:.3f}", flush=True)
