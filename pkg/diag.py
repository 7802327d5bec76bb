"""Deep diagnostic of sub-agent learning (working script)."""
import sys
import numpy as np
from dataclasses import replace
from rislink.config import ExperimentConfig
from rislink.cli import make_train_config
from rislink.serialization import load_encoder
from rislink.hdrl import (DdpgAgent, PowerBallMap, run_macro_slot, _train_env,
                          evaluate_policy, noise_schedule, evaluate_sweep_baseline)
from rislink.learn import forward

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 300
penalty = float(sys.argv[2]) if len(sys.argv) > 2 else 10.0
r_min = float(sys.argv[3]) if len(sys.argv) > 3 else 0.5
lr_c = float(sys.argv[4]) if len(sys.argv) > 4 else 1e-4

from rislink.signal import LinkBudget
cfg = ExperimentConfig(episodes=episodes)
cfg = replace(cfg, budget=LinkBudget(cfg.budget.p_max, cfg.budget.sigma2, r_min),
              agent=replace(cfg.agent, penalty=penalty, lr_critic=lr_c))
enc = load_encoder("/tmp/enc_desk.ckpt")
tcfg = make_train_config(cfg, enc)
print(f"sweep={evaluate_sweep_baseline(tcfg, 8, 8):.3f} penalty={penalty} r_min={r_min} lr_c={lr_c}")

k, n, m, d_e = tcfg.dims()
rng0 = np.random.default_rng(np.random.SeedSequence([11, 0]))
meta = DdpgAgent(3*k, k, "sigmoid", tcfg.agent, tcfg.agent.meta_buffer, rng0)
sub = DdpgAgent(k*d_e+k, 2*n*k+m, "tanh", tcfg.agent, tcfg.agent.sub_buffer, rng0,
                action_map=PowerBallMap(0, 2*n*k, tcfg.budget.p_max))
rng = np.random.default_rng(np.random.SeedSequence([11, 0, 1]))

stats = dict(closs=[], aloss=[], viol=0, slots=0, se=0.0)
def on_sub(tr):
    sub.buffer.add(tr.s, tr.a, tr.r, tr.s2)
    out = sub.update(rng)
    if out: stats["closs"].append(out[0]); stats["aloss"].append(out[1])

for ep in range(episodes):
    env = _train_env(tcfg, 0, ep)
    noise = noise_schedule(tcfg.agent, ep, episodes)
    for _ in range(tcfg.macro_slots_per_episode):
        meta_tr, subs, metrics = run_macro_slot(env, meta.actor, sub.actor, enc,
                                                tcfg.agent, rng, noise, noise, on_sub)
        meta.buffer.add(meta_tr.s, meta_tr.a, meta_tr.r, meta_tr.s2)
        meta.update(rng)
        stats["viol"] += metrics["violations"]; stats["slots"] += tcfg.agent.macro_len
        stats["se"] += metrics["mean_sum_se"] * tcfg.agent.macro_len
    if (ep+1) % 50 == 0:
        s, a, r, s2 = sub.buffer.sample(64, rng)
        q, _ = forward(sub.critic, np.concatenate([s, a], axis=1))
        apred, _ = forward(sub.actor, s)
        ev = evaluate_policy(tcfg, meta.actor, sub.actor, "fm-hdrl")
        print(f"ep{ep+1:4d} noise={noise:.3f} evalSE={ev:6.3f} "
              f"trainSE={stats['se']/stats['slots']:6.3f} viol={stats['viol']/stats['slots']:.2f} "
              f"closs={np.mean(stats['closs'][-500:]):8.2f} Q[{q.min():8.1f},{q.max():8.1f}] "
              f"r[{r.min():6.1f},{r.max():6.1f}] |a|sat={np.mean(np.abs(apred)>0.95):.2f}", flush=True)
        stats["se"]=0; stats["slots"]=0; stats["viol"]=0
