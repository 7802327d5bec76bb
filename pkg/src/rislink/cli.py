"""Command-line entry points: dataset generation, encoder training, agent
training, baseline sweeps, experiments, and reporting.

Every command is reproducible: the config file plus seeds fully determine
the outputs.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import user_channel_stack
from .codebook import beam_sweep, dft_bs_codebook, ris_phase_codebook
from .config import ConfigError, ExperimentConfig, load_config
from .encoder import (EncoderParams, channel_patches, encoder_init,
                      finetune_encoder, pretrain_encoder, sketch_targets)
from .hdrl import (DownlinkEnv, TrainConfig, evaluate_policy,
                   evaluate_sweep_baseline, train_fm_drl, train_fm_hdrl)
from .serialization import (CsvLogger, channel_dataset_to_csv, file_checksum,
                            load_encoder, read_channel_dataset, read_csv,
                            save_encoder, save_mlps, write_channel_dataset,
                            write_csv)
from .signal import LinkBudget
from .utils import dbm_to_watts

_DOMAIN_DATA = 89
_DOMAIN_ENC = 97

ALGOS = ("fm-hdrl", "fm-drl")


# ---------------------------------------------------------------- pipeline

def generate_records(cfg: ExperimentConfig, n_records: int, seed: int,
                     geometry=None):
    """Channel realizations captured while rolling seeded environments
    (fading every slot, mobility/blockage every macro-slot)."""
    geo = geometry or cfg.geometry
    out = []
    env_idx = 0
    while len(out) < n_records:
        env = DownlinkEnv(geo, cfg.budget, cfg.blockage, cfg.agent.fading_rho,
                          np.random.SeedSequence([_DOMAIN_DATA, seed, env_idx]))
        for _ in range(2):  # two macro-slots per environment layout
            for _ in range(cfg.agent.macro_len):
                if len(out) >= n_records:
                    break
                env.advance_slot()
                out.append(env.realization())
            env.advance_macro()
        env_idx += 1
    return out


def pick_patch_count(total: int, requested: int) -> int:
    """Largest divisor of the flattened channel length not above the request."""
    for p in range(min(requested, total), 0, -1):
        if total % p == 0:
            return p
    return 1


def dataset_patch_pool(cfg: ExperimentConfig, records, geometry=None):
    """Per-user patch pool plus the global input scale (1 / RMS entry)."""
    geo = geometry or cfg.geometry
    stacks = np.concatenate([user_channel_stack(r) for r in records])
    total = 2 * (geo.n_ris_elements + 1) * geo.n_bs_antennas
    n_patches = pick_patch_count(total, cfg.encoder.n_patches)
    rms = float(np.sqrt(np.mean(np.abs(stacks) ** 2)))
    scale = 1.0 / rms if rms > 0 else 1.0
    return channel_patches(stacks, n_patches, scale), n_patches, scale


def sweep_oracle_targets(cfg: ExperimentConfig, records, d_e: int,
                         geometry=None) -> np.ndarray:
    """Supervised fine-tuning targets: each user's sweep rate in the first
    embedding coordinate."""
    geo = geometry or cfg.geometry
    bs_cb = dft_bs_codebook(geo.n_bs_antennas, cfg.bs_codebook)
    ris_cb = ris_phase_codebook(geo.n_ris_elements, cfg.ris_codebook)
    k = geo.n_users
    targets = np.zeros((len(records) * k, d_e))
    for i, real in enumerate(records):
        result = beam_sweep(real, bs_cb, ris_cb, cfg.budget)
        targets[i * k:(i + 1) * k, 0] = result.report.per_user_rate
    return targets


def build_encoder_params(cfg: ExperimentConfig, records, seed: int,
                         geometry=None, pre_logger=None,
                         fin_logger=None) -> EncoderParams:
    """Full encoder pipeline: init, masked pretraining, fine-tuning."""
    geo = geometry or cfg.geometry
    ec = cfg.encoder
    pool, n_patches, scale = dataset_patch_pool(cfg, records, geo)
    patch_len = pool.shape[2]
    rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_ENC, seed]))
    enc = encoder_init(ec.d_model, ec.n_layers, ec.n_heads, ec.d_ff,
                       n_patches, patch_len, ec.d_e, rng, scale)
    enc, _ = pretrain_encoder(pool, enc, ec.pretrain_steps, ec.pretrain_batch,
                              ec.mask_fraction, ec.pretrain_lr,
                              ec.weight_decay, rng, pre_logger)
    if ec.finetune_steps > 0:
        if ec.finetune_target == "se":
            targets = sweep_oracle_targets(cfg, records, ec.d_e, geo)
        else:
            targets = sketch_targets(pool, ec.d_e, seed)
        enc, _ = finetune_encoder(pool, targets, enc, ec.finetune_steps,
                                  ec.finetune_batch, ec.finetune_lr, rng,
                                  fin_logger)
    return enc


def make_train_config(cfg: ExperimentConfig, enc: EncoderParams,
                      geometry=None, budget=None) -> TrainConfig:
    return TrainConfig(
        geometry=geometry or cfg.geometry,
        budget=budget or cfg.budget,
        blockage=cfg.blockage,
        agent=cfg.agent,
        encoder=enc,
        episodes=cfg.episodes,
        macro_slots_per_episode=cfg.macro_slots_per_episode,
        eval_every=cfg.eval_every,
        eval_env_count=cfg.eval_env_count,
        eval_macro_slots=cfg.eval_macro_slots,
    )


def _train_job(payload):
    tcfg, algo, seed, log_path = payload
    logger = CsvLogger(log_path, "train-log v1",
                       ("episode", "cum_reward", "eval_sum_se", "critic_loss",
                        "actor_loss", "violations")) if log_path else None
    try:
        train = train_fm_hdrl if algo == "fm-hdrl" else train_fm_drl
        result = train(tcfg, seed, logger)
    finally:
        if logger is not None:
            logger.close()
    return result


def run_training(tcfg: TrainConfig, algo: str, seeds, outdir: Path | None,
                 threads: int = 1):
    """Train one algorithm over several seeds; returns TrainResults in seed
    order (deterministic regardless of thread count)."""
    jobs = []
    for seed in seeds:
        log_path = None
        if outdir is not None:
            log_path = str(outdir / f"{algo.replace('-', '_')}_seed{seed}.csv")
        jobs.append((tcfg, algo, seed, log_path))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_train_job, jobs))
    return [_train_job(j) for j in jobs]


def eval_result(tcfg: TrainConfig, result) -> float:
    if result.algo == "fm-hdrl":
        return evaluate_policy(tcfg, result.nets["meta_actor"],
                               result.nets["sub_actor"], "fm-hdrl")
    return evaluate_policy(tcfg, None, result.nets["actor"], "fm-drl")


# ------------------------------------------------------------- experiments

def run_convergence(cfg: ExperimentConfig, enc, outdir: Path, threads: int):
    tcfg = make_train_config(cfg, enc)
    rows = []
    for algo in ALGOS:
        results = run_training(tcfg, algo, cfg.seeds, outdir, threads)
        for ep in range(cfg.episodes):
            vals = np.array([res.rows[ep][1] for res in results])
            rows.append((algo, ep, float(vals.mean()), float(vals.std())))
    path = outdir / "convergence.csv"
    write_csv(path, "experiment-convergence v1",
              ("algorithm", "episode", "mean_cum_reward", "std_cum_reward"), rows)
    return path


def run_se_vs_power(cfg: ExperimentConfig, enc, outdir: Path, threads: int):
    tcfg = make_train_config(cfg, enc)
    trained = {algo: run_training(tcfg, algo, cfg.seeds, outdir, threads)
               for algo in ALGOS}
    rows = []
    for p_dbm in cfg.power_grid_dbm:
        budget = LinkBudget(dbm_to_watts(p_dbm), cfg.budget.sigma2, cfg.budget.r_min)
        tcfg_p = replace(tcfg, budget=budget)
        for algo in ALGOS:
            vals = np.array([eval_result(tcfg_p, res) for res in trained[algo]])
            rows.append((p_dbm, algo, float(vals.mean()), float(vals.std())))
        sweep = evaluate_sweep_baseline(tcfg_p, cfg.bs_codebook, cfg.ris_codebook)
        rows.append((p_dbm, "sweep", sweep, 0.0))
    path = outdir / "se_vs_power.csv"
    write_csv(path, "experiment-se-vs-power v1",
              ("p_max_dbm", "method", "mean_sum_se", "std_sum_se"), rows)
    return path


def run_se_vs_ris(cfg: ExperimentConfig, enc_unused, outdir: Path, threads: int):
    # agents are retrained per RIS size because the action and encoder input
    # dimensions change with M
    rows = []
    for m in cfg.ris_grid:
        geo = replace(cfg.geometry, n_ris_elements=int(m))
        records = generate_records(cfg, cfg.dataset_records, cfg.seeds[0], geo)
        enc = build_encoder_params(cfg, records, cfg.seeds[0], geo)
        tcfg = make_train_config(cfg, enc, geometry=geo)
        for algo in ALGOS:
            results = run_training(tcfg, algo, cfg.seeds, outdir, threads)
            vals = np.array([eval_result(tcfg, res) for res in results])
            rows.append((m, algo, float(vals.mean()), float(vals.std())))
        sweep = evaluate_sweep_baseline(tcfg, cfg.bs_codebook, cfg.ris_codebook)
        rows.append((m, "sweep", sweep, 0.0))
    path = outdir / "se_vs_ris.csv"
    write_csv(path, "experiment-se-vs-ris v1",
              ("n_ris", "method", "mean_sum_se", "std_sum_se"), rows)
    return path


def render_plot(csv_path: Path, group_col: str, x_col: str, y_col: str,
                out_svg: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    _, columns, rows = read_csv(csv_path)
    gi, xi, yi = (columns.index(c) for c in (group_col, x_col, y_col))
    groups = {}
    for row in rows:
        groups.setdefault(row[gi], []).append((float(row[xi]), float(row[yi])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, pts in groups.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.grid(True, linestyle=":")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------- commands

def _load_cfg(args) -> ExperimentConfig:
    if args.config:
        return load_config(args.config)
    return ExperimentConfig()


def _outdir(args) -> Path:
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    cfg = _load_cfg(args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    records = args.records or cfg.dataset_records
    out = Path(args.out or "channels.bin")
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.split:
        counts = {"train": int(round(records * 0.70)),
                  "val": int(round(records * 0.15))}
        counts["test"] = records - counts["train"] - counts["val"]
        offsets = {"train": 0, "val": 1000, "test": 2000}  # disjoint seed ranges
        for name, count in counts.items():
            path = out.with_name(f"{out.stem}_{name}{out.suffix}")
            recs = generate_records(cfg, count, seed + offsets[name])
            write_channel_dataset(path, cfg.geometry, recs, {"split": name})
            print(f"{path}: {count} records sha256={file_checksum(path)}")
    else:
        recs = generate_records(cfg, records, seed)
        write_channel_dataset(out, cfg.geometry, recs)
        print(f"{out}: {records} records sha256={file_checksum(out)}")
        if args.csv:
            n = channel_dataset_to_csv(out, out.with_suffix(".csv"))
            print(f"{out.with_suffix('.csv')}: {n} rows")
    return 0


def cmd_pretrain(args) -> int:
    cfg = _load_cfg(args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    header, records = read_channel_dataset(args.dataset)
    _check_dataset(cfg, header)
    out = Path(args.out or "encoder.ckpt")
    out.parent.mkdir(parents=True, exist_ok=True)
    ec = cfg.encoder
    pool, n_patches, scale = dataset_patch_pool(cfg, records)
    rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_ENC, seed]))
    enc = encoder_init(ec.d_model, ec.n_layers, ec.n_heads, ec.d_ff, n_patches,
                       pool.shape[2], ec.d_e, rng, scale)
    steps = args.steps if args.steps is not None else ec.pretrain_steps
    with CsvLogger(out.with_suffix(".loss.csv"), "pretrain-loss v1",
                   ("step", "loss")) as logger:
        enc, losses = pretrain_encoder(pool, enc, steps, ec.pretrain_batch,
                                       ec.mask_fraction, ec.pretrain_lr,
                                       ec.weight_decay, rng, logger)
    save_encoder(out, enc)
    first = losses[0] if losses else float("nan")
    last = losses[-1] if losses else float("nan")
    print(f"{out}: pretrained {steps} steps, loss {first:.4f} -> {last:.4f}")
    return 0


def cmd_finetune(args) -> int:
    cfg = _load_cfg(args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    header, records = read_channel_dataset(args.dataset)
    _check_dataset(cfg, header)
    enc = load_encoder(args.init)
    out = Path(args.out or "encoder_ft.ckpt")
    out.parent.mkdir(parents=True, exist_ok=True)
    ec = cfg.encoder
    stacks = np.concatenate([user_channel_stack(r) for r in records])
    pool = channel_patches(stacks, enc.n_patches, enc.input_scale)
    mode = args.target or ec.finetune_target
    if mode == "se":
        targets = sweep_oracle_targets(cfg, records, enc.d_e)
    else:
        targets = sketch_targets(pool, enc.d_e, seed)
    steps = args.steps if args.steps is not None else ec.finetune_steps
    rng = np.random.default_rng(np.random.SeedSequence([_DOMAIN_ENC, seed, 2]))
    with CsvLogger(out.with_suffix(".loss.csv"), "finetune-loss v1",
                   ("step", "loss")) as logger:
        enc, losses = finetune_encoder(pool, targets, enc, steps,
                                       ec.finetune_batch, ec.finetune_lr,
                                       rng, logger)
    save_encoder(out, enc)
    first = losses[0] if losses else float("nan")
    last = losses[-1] if losses else float("nan")
    print(f"{out}: fine-tuned {steps} steps ({mode}), loss {first:.6f} -> {last:.6f}")
    return 0


def _check_dataset(cfg: ExperimentConfig, header: dict) -> None:
    geo = cfg.geometry
    want = (geo.n_bs_antennas, geo.n_ris_elements, geo.n_users)
    got = (header["n_bs"], header["n_ris"], header["n_users"])
    if want != got:
        raise ConfigError(f"dataset dims {got} do not match config {want}")


def _seeds(args, cfg) -> tuple:
    if args.seeds:
        return tuple(int(s) for s in args.seeds.split(","))
    if args.seed is not None:
        return (args.seed,)
    return cfg.seeds


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    enc = load_encoder(args.encoder)
    _check_encoder(cfg, enc)
    outdir = _outdir(args)
    seeds = _seeds(args, cfg)
    tcfg = make_train_config(cfg, enc)
    results = run_training(tcfg, args.algo, seeds, outdir, args.threads)
    for seed, res in zip(seeds, results):
        ckpt = outdir / f"{args.algo.replace('-', '_')}_seed{seed}.ckpt"
        save_mlps(ckpt, "agents", res.nets, {"algo": args.algo, "seed": seed})
    summary_rows = []
    for ep in range(tcfg.episodes):
        vals = np.array([res.rows[ep][1] for res in results])
        summary_rows.append((ep, float(vals.mean()), float(vals.std())))
    summary = outdir / f"{args.algo.replace('-', '_')}_summary.csv"
    write_csv(summary, "train-summary v1",
              ("episode", "mean_cum_reward", "std_cum_reward"), summary_rows)
    finals = [res.final_eval for res in results]
    print(f"{args.algo}: {len(seeds)} seed(s), final eval sum SE "
          f"{np.mean(finals):.3f} +/- {np.std(finals):.3f} bps/Hz -> {summary}")
    return 0


def _check_encoder(cfg: ExperimentConfig, enc: EncoderParams) -> None:
    geo = cfg.geometry
    total = 2 * (geo.n_ris_elements + 1) * geo.n_bs_antennas
    if enc.n_patches * enc.patch_len != total:
        raise ConfigError(
            f"encoder checkpoint covers {enc.n_patches * enc.patch_len} channel "
            f"values per user but the geometry needs {total}")


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    env = DownlinkEnv(cfg.geometry, cfg.budget, cfg.blockage,
                      cfg.agent.fading_rho, np.random.SeedSequence([_DOMAIN_DATA, seed]))
    env.advance_slot()
    bs_cb = dft_bs_codebook(cfg.geometry.n_bs_antennas, cfg.bs_codebook)
    ris_cb = ris_phase_codebook(cfg.geometry.n_ris_elements, cfg.ris_codebook)
    result = beam_sweep(env.realization(), bs_cb, ris_cb, cfg.budget)
    out = Path(args.out or "sweep.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = [(ris, " ".join(str(b) for b in beams), se)
            for ris, beams, se in result.table]
    write_csv(out, "sweep-table v1", ("ris_index", "bs_indices", "sum_se"), rows)
    print(f"best: ris={result.ris_index} beams={list(result.bs_indices)} "
          f"sum SE={result.report.sum_rate:.3f} bps/Hz -> {out}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _load_cfg(args)
    outdir = _outdir(args)
    records = generate_records(cfg, cfg.dataset_records, cfg.seeds[0])
    enc = build_encoder_params(cfg, records, cfg.seeds[0])
    runners = {"convergence": run_convergence,
               "se_vs_power": run_se_vs_power,
               "se_vs_ris": run_se_vs_ris}
    path = runners[cfg.kind](cfg, enc, outdir, args.threads)
    print(f"wrote {path}")
    if args.plot:
        svg = path.with_suffix(".svg")
        axes = {"convergence": ("algorithm", "episode", "mean_cum_reward"),
                "se_vs_power": ("method", "p_max_dbm", "mean_sum_se"),
                "se_vs_ris": ("method", "n_ris", "mean_sum_se")}[cfg.kind]
        render_plot(path, *axes, svg)
        print(f"wrote {svg}")
    return 0


def cmd_report(args) -> int:
    outdir = Path(args.out or "out")
    rows = []
    for path in sorted(outdir.glob("*.csv")):
        schema, columns, data = read_csv(path)
        if not schema.startswith("rislink train-log"):
            continue
        rewards = [float(r[1]) for r in data]
        evals = [float(r[2]) for r in data if r[2] not in ("", "nan")]
        tail = rewards[-100:] if rewards else [float("nan")]
        rows.append((path.name, len(rewards), float(np.mean(tail)),
                     evals[-1] if evals else float("nan")))
    if not rows:
        print(f"no training logs under {outdir}")
        return 0
    report = outdir / "report.csv"
    write_csv(report, "report v1",
              ("log", "episodes", "mean_tail_reward", "final_eval_sum_se"), rows)
    for name, n, tail, ev in rows:
        print(f"{name}: {n} episodes, tail reward {tail:.2f}, final eval {ev:.3f}")
    print(f"wrote {report}")
    return 0


# ------------------------------------------------------------------- main

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are config errors (exit 1)
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rislink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--seeds", help="comma-separated seed list")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--plot", action="store_true")
        return p

    p = common(sub.add_parser("generate", help="write a channel dataset"))
    p.add_argument("--records", type=int, default=None)
    p.add_argument("--split", action="store_true",
                   help="70/15/15 train/val/test files with disjoint seeds")
    p.add_argument("--csv", action="store_true", help="also dump a CSV view")
    p.set_defaults(func=cmd_generate)

    p = common(sub.add_parser("pretrain", help="masked-reconstruction pretraining"))
    p.add_argument("--dataset", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(func=cmd_pretrain)

    p = common(sub.add_parser("finetune", help="fine-tune the output projection"))
    p.add_argument("--dataset", required=True)
    p.add_argument("--init", required=True, help="pretrained encoder checkpoint")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--target", choices=("recon", "se"), default=None)
    p.set_defaults(func=cmd_finetune)

    p = common(sub.add_parser("train", help="train a controller"))
    p.add_argument("--encoder", required=True, help="encoder checkpoint")
    p.add_argument("--algo", choices=ALGOS, default="fm-hdrl")
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("sweep", help="run the beam-sweep baseline once"))
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("experiment", help="run the configured experiment"))
    p.set_defaults(func=cmd_experiment)

    p = common(sub.add_parser("report", help="summarize training logs"))
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
