"""Command-line driver: data generation, training, evaluation, baseline
comparison, and complexity reporting.

Exit codes: 0 success, 2 validation error, 3 I/O or file-format error,
4 missing branch/block, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import sys

import torch

from . import evaluate
from .channel import generate_channels
from .config import config_hash, load_config
from .dataset import DatasetFormatError, build_dataset, read_dataset, split_by_drop, write_dataset
from .model import (
    CheckpointError,
    MissingBlockError,
    NoBranchError,
    ScsiNet,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from .training import run_pipeline, run_stage1, run_stage2, run_stage3, to_training_tensor

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_MISSING_BRANCH = 4


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def cmd_gen_data(args) -> int:
    if args.nc % args.nsb != 0:
        raise ValueError(f"--nc {args.nc} not divisible by --nsb {args.nsb}")
    channels = generate_channels(args.drops, args.ues, args.nt, args.nr, args.nc,
                                 args.seed, samples_per_ue=args.samples_per_ue,
                                 n_paths=args.paths, angle_spread=args.angle_spread)
    ds = build_dataset(channels, args.nsb, args.nri, seed=args.seed,
                       est_snr_db=args.est_snr_db)
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples (nt={ds.n_t}, nsb={ds.n_sb}, nri={ds.n_ri}, "
          f"drops={args.drops}) to {args.out}")
    return EXIT_OK


def _load_datasets(paths: list[str]) -> dict[int, object]:
    by_nt = {}
    for path in paths:
        ds = read_dataset(path)
        if ds.n_t in by_nt:
            raise ValueError(f"two datasets share antenna count {ds.n_t}")
        by_nt[ds.n_t] = ds
    return by_nt


def _history_lines(records) -> list[str]:
    lines = ["stage,epoch,step,loss,lr"]
    for r in records:
        lines.append(f"{r.stage},{r.epoch},{r.step},{r.loss!r},{r.lr!r}")
    return lines


def cmd_train(args) -> int:
    hp, tc, _ = load_config(args.config)
    datasets = _load_datasets(args.data)
    train_frac = args.train_frac if args.train_frac is not None else tc.train_fraction
    train_data = {}
    for nt, ds in datasets.items():
        train_ds, _ = split_by_drop(ds, train_frac)
        train_data[nt] = to_training_tensor(train_ds)

    base = hp.antenna_set[0]
    if args.stage in ("1", "all"):
        model = build_model(hp, seed=args.seed)
        if args.ckpt_in:
            load_checkpoint(model, args.ckpt_in)
    else:
        if not args.ckpt_in:
            raise ValueError(f"--stage {args.stage} requires --ckpt-in")
        model = build_model(hp, seed=args.seed)
        load_checkpoint(model, args.ckpt_in)

    torch.manual_seed(args.seed)
    if args.stage == "1":
        if base not in train_data:
            raise ValueError(f"stage 1 needs a dataset for antenna count {base}")
        records = run_stage1(model, train_data[base], tc, seed=args.seed)
    elif args.stage == "2":
        records = []
        for p in hp.antenna_set:
            if p != base:
                if p not in train_data:
                    raise ValueError(f"stage 2 needs a dataset for antenna count {p}")
                records += run_stage2(model, train_data[p], p, tc, seed=args.seed)
    elif args.stage == "3":
        records = run_stage3(model, train_data, tc, seed=args.seed)
    else:
        records = run_pipeline(model, train_data, tc, seed=args.seed)

    save_checkpoint(model, args.ckpt_out)
    if args.history:
        with open(args.history, "w") as f:
            f.write("\n".join(_history_lines(records)) + "\n")
    final = records[-1].loss if records else float("nan")
    print(f"stage {args.stage}: {len(records)} steps, final loss {final:.6f}, "
          f"checkpoint -> {args.ckpt_out}")
    return EXIT_OK


def _report_metadata(args, hp, tc, extra_paths: list[str]) -> dict:
    meta = {"config_hash": config_hash(hp, tc), "seed": args.seed}
    for path in extra_paths:
        meta[f"sha256_{path.replace('/', '_')}"] = evaluate.file_sha256(path)
    return meta


def cmd_eval(args) -> int:
    hp, tc, _ = load_config(args.config)
    model = build_model(hp, seed=args.seed)
    load_checkpoint(model, args.ckpt)
    payloads = args.payloads or sorted(hp.payload_set)
    rows = []
    for path in args.data:
        ds = read_dataset(path)
        if args.split != "all":
            train_ds, test_ds = split_by_drop(ds, args.train_frac)
            ds = train_ds if args.split == "train" else test_ds
        if len(ds) == 0:
            raise ValueError(f"{path}: empty dataset after split")
        evaluate.check_branches_available(model, payloads, ds.n_t)
        rows += evaluate.sgcs_table(model, ds, payloads)
        if args.rank is not None:
            rows += evaluate.rank_sgcs_table(model, ds, args.rank, args.alloc_config)
    meta = _report_metadata(args, hp, tc, [args.ckpt] + args.data)
    header = ["antenna", "payload", "layer", "mean_sgcs", "p5", "p50", "p95", "count"]
    evaluate.write_csv(args.out, header, rows, meta)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.plot:
        evaluate.plot_sgcs(rows, args.plot)
        print(f"wrote plot to {args.plot}")
    return EXIT_OK


def _sweep_from_args(args, n_t: int, n_sb: int):
    return evaluate.sweep_configs(args.L, args.p, args.amp_bits, args.phase_bits,
                                  n_t, n_sb)


def cmd_baseline_eval(args) -> int:
    ds = read_dataset(args.data)
    if args.split != "all":
        train_ds, test_ds = split_by_drop(ds, args.train_frac)
        ds = train_ds if args.split == "train" else test_ds
    configs = _sweep_from_args(args, ds.n_t, ds.n_sb)
    rows = evaluate.baseline_sweep(ds, configs, max_groups=args.max_groups)
    meta = {"seed": args.seed, f"sha256_{args.data.replace('/', '_')}":
            evaluate.file_sha256(args.data)}
    header = ["L", "p", "amp_bits", "phase_bits", "payload", "mean_sgcs", "count"]
    evaluate.write_csv(args.report, header, rows, meta)
    print(f"wrote {len(rows)} sweep rows to {args.report}")
    return EXIT_OK


def cmd_compare(args) -> int:
    hp, tc, _ = load_config(args.config)
    model = build_model(hp, seed=args.seed)
    load_checkpoint(model, args.ckpt)
    ds = read_dataset(args.data)
    if args.split != "all":
        train_ds, test_ds = split_by_drop(ds, args.train_frac)
        ds = train_ds if args.split == "train" else test_ds
    payloads = args.payloads or sorted(hp.payload_set)
    evaluate.check_branches_available(model, payloads, ds.n_t)
    model_rows = evaluate.sgcs_table(model, ds, payloads)
    configs = _sweep_from_args(args, ds.n_t, ds.n_sb)
    baseline_rows = evaluate.baseline_sweep(ds, configs, max_groups=args.max_groups)
    rows = evaluate.compare_table(model_rows, baseline_rows, payloads)
    meta = _report_metadata(args, hp, tc, [args.ckpt, args.data])
    header = ["payload", "model_sgcs", "baseline_payload", "baseline_sgcs",
              "baseline_config", "matched", "model_beats"]
    evaluate.write_csv(args.out, header, rows, meta)
    unmatched = [str(r[0]) for r in rows if r[5] == "no"]
    if unmatched:
        print(f"unmatched payload(s) within ±10%: {', '.join(unmatched)}")
    print(f"wrote {len(rows)} comparison rows to {args.out}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    hp, tc, _ = load_config(args.config)
    model = ScsiNet(hp)
    meta = {"config_hash": config_hash(hp, tc)}
    evaluate.write_csv(args.flops_out, ["antenna", "payload", "side", "flops"],
                       evaluate.flops_table(model), meta)
    evaluate.write_csv(args.params_out, ["side", "parameters"],
                       evaluate.params_table(model), meta)
    print(f"wrote FLOP table to {args.flops_out} and parameter totals to {args.params_out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scsinet",
                                     description="Scalable CSI feedback: data, training, evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic eigenvector dataset")
    g.add_argument("--drops", type=int, required=True)
    g.add_argument("--ues", type=int, required=True)
    g.add_argument("--nt", type=int, required=True, choices=(16, 32))
    g.add_argument("--nr", type=int, default=4)
    g.add_argument("--nc", type=int, default=48)
    g.add_argument("--nsb", type=int, default=12)
    g.add_argument("--nri", type=int, default=4)
    g.add_argument("--samples-per-ue", type=int, default=1)
    g.add_argument("--paths", type=int, default=4)
    g.add_argument("--angle-spread", type=float, default=0.15)
    g.add_argument("--est-snr-db", type=float, default=None,
                   help="emulate noisy channel estimation at this SNR")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="run the three-stage training pipeline")
    t.add_argument("--stage", choices=("1", "2", "3", "all"), default="all")
    t.add_argument("--config", required=True, help="flat JSON config file, or preset 'desk'/'full'")
    t.add_argument("--data", nargs="+", required=True, help="dataset file(s), one per antenna count")
    t.add_argument("--ckpt-in", default=None)
    t.add_argument("--ckpt-out", required=True)
    t.add_argument("--history", default=None, help="write the loss trajectory CSV here")
    t.add_argument("--train-frac", type=float, default=None)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="SGCS report for a trained checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--config", required=True)
    e.add_argument("--data", nargs="+", required=True)
    e.add_argument("--payloads", type=_int_list, default=None)
    e.add_argument("--rank", type=int, default=None)
    e.add_argument("--alloc-config", type=int, default=4)
    e.add_argument("--split", choices=("train", "test", "all"), default="test")
    e.add_argument("--train-frac", type=float, default=0.8)
    e.add_argument("--out", required=True)
    e.add_argument("--plot", default=None)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("baseline-eval", help="sweep the DFT-codebook baseline")
    b.add_argument("--data", required=True)
    b.add_argument("--L", type=_int_list, default=[2, 4])
    b.add_argument("--p", type=_float_list, default=[0.25, 0.5])
    b.add_argument("--amp-bits", type=_int_list, default=[2, 3])
    b.add_argument("--phase-bits", type=_int_list, default=[2, 3, 4])
    b.add_argument("--max-groups", type=int, default=None)
    b.add_argument("--split", choices=("train", "test", "all"), default="test")
    b.add_argument("--train-frac", type=float, default=0.8)
    b.add_argument("--report", required=True)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_baseline_eval)

    c = sub.add_parser("compare", help="model vs baseline SGCS at matched payloads")
    c.add_argument("--ckpt", required=True)
    c.add_argument("--config", required=True)
    c.add_argument("--data", required=True)
    c.add_argument("--payloads", type=_int_list, default=None)
    c.add_argument("--L", type=_int_list, default=[2, 4])
    c.add_argument("--p", type=_float_list, default=[0.25, 0.5])
    c.add_argument("--amp-bits", type=_int_list, default=[2, 3])
    c.add_argument("--phase-bits", type=_int_list, default=[2, 3, 4])
    c.add_argument("--max-groups", type=int, default=None)
    c.add_argument("--split", choices=("train", "test", "all"), default="test")
    c.add_argument("--train-frac", type=float, default=0.8)
    c.add_argument("--out", required=True)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_compare)

    x = sub.add_parser("complexity", help="regenerate FLOP and parameter tables")
    x.add_argument("--config", default="full")
    x.add_argument("--flops-out", required=True)
    x.add_argument("--params-out", required=True)
    x.set_defaults(func=cmd_complexity)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NoBranchError, MissingBlockError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_BRANCH
    except (DatasetFormatError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
