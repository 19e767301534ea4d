"""Command-line front end: generate, split, train, recover, eval.

Exit codes: 0 on success, 2 for invalid input or flags, 3 for numerical
divergence during training. stdout carries one-line summaries, stderr
diagnostics; all data goes to files.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, fields, replace

from .data import (
    load_sidecar,
    load_triplets,
    split_by_sampling_rate,
    write_entry_set,
    write_sidecar,
    write_triplets,
)
from .engine import TrainConfig, load_checkpoint, recover, save_checkpoint, train
from .errors import DivergenceError, ParameterError, StrecoverError
from .evaluation import merge_reports, sweep_dimension, sweep_sampling
from .graph import load_coords, write_coords
from .synthetic import SMOKE_SPEC, SynthSpec, generate

TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
SYNTH_KEYS = {f.name for f in fields(SynthSpec)}
IO_KEYS = {"input", "coords", "meta", "out"}
CONFIG_KEYS = TRAIN_KEYS | SYNTH_KEYS | IO_KEYS

TRIPLETS_FILE = "triplets.csv"
COORDS_FILE = "coords.csv"
SIDECAR_FILE = "meta.json"


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ParameterError(f"{path}: config must be a JSON object")
    unknown = sorted(set(doc) - CONFIG_KEYS)
    if unknown:
        raise ParameterError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return doc


def _resolve(args, config, key, default=None):
    """Flag value if given, else config-file value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(key, default)


def _add_train_flags(parser):
    g = parser.add_argument_group("training hyperparameters")
    g.add_argument("--latent-dim", type=int, dest="latent_dim")
    g.add_argument("--reg-lambda", type=float, dest="reg_lambda")
    g.add_argument("--lr", type=float)
    g.add_argument("--beta1", type=float)
    g.add_argument("--beta2", type=float)
    g.add_argument("--max-epochs", type=int, dest="max_epochs")
    g.add_argument("--full-every", type=int, dest="full_every")
    g.add_argument("--k-nn", type=int, dest="k_nn")
    g.add_argument("--tol", type=float)


def _resolve_train_config(args, config):
    values = {}
    for key in TRAIN_KEYS:
        resolved = _resolve(args, config, key)
        if resolved is not None:
            values[key] = resolved
    return TrainConfig(**values)


def _load_dataset(args, config):
    path = _resolve(args, config, "input")
    if path is None:
        raise ParameterError("no input triplet file given (--input)")
    meta = _resolve(args, config, "meta")
    n_rows = n_cols = None
    if meta is not None:
        n_rows, n_cols = load_sidecar(meta)
    return load_triplets(path, n_rows=n_rows, n_cols=n_cols)


def _out_dir(args, config):
    out = _resolve(args, config, "out")
    if out is None:
        raise ParameterError("no output directory given (--out)")
    os.makedirs(out, exist_ok=True)
    return out


def _parse_grid(text, cast):
    try:
        if ":" in text:
            start, stop, step = (cast(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [cast(round(start + k * step, 12)) for k in range(count)]
        else:
            values = [cast(p) for p in text.split(",")]
    except (ValueError, TypeError):
        raise ParameterError(f"bad grid specification {text!r}") from None
    if not values:
        raise ParameterError(f"empty grid {text!r}")
    return values


def _parse_seeds(text):
    try:
        if ".." in text:
            lo, hi = text.split("..")
            seeds = list(range(int(lo), int(hi) + 1))
        else:
            seeds = [int(p) for p in text.split(",")]
    except ValueError:
        raise ParameterError(f"bad seed specification {text!r}") from None
    if not seeds:
        raise ParameterError(f"empty seed specification {text!r}")
    return seeds


def cmd_generate(args):
    config = _load_config(args.config)
    base = asdict(SMOKE_SPEC) if args.preset == "smoke" else {}
    values = dict(base)
    for key in SYNTH_KEYS:
        resolved = _resolve(args, config, key)
        if resolved is not None:
            values[key] = resolved
    missing = sorted(k for k in ("rows", "cols", "rank") if k not in values)
    if missing:
        raise ParameterError(f"missing required generation parameters: {', '.join(missing)}")
    spec = SynthSpec(**values)
    out = _out_dir(args, config)
    full, coords = generate(spec)
    write_triplets(full, os.path.join(out, TRIPLETS_FILE))
    write_coords(coords, os.path.join(out, COORDS_FILE))
    write_sidecar(full.n_rows, full.n_cols, os.path.join(out, SIDECAR_FILE))
    print(
        f"generated {full.n_rows}x{full.n_cols} rank={spec.rank} "
        f"entries={full.n_known} seed={spec.seed} -> {out}"
    )
    return 0


def cmd_split(args):
    config = _load_config(args.config)
    rate = _resolve(args, config, "rate")
    if rate is None:
        raise ParameterError("no sampling rate given (--rate)")
    if not 0.0 < rate < 1.0:
        raise ParameterError(f"split rate must be in (0, 1), got {rate}")
    seed = _resolve(args, config, "seed", 0)
    full = _load_dataset(args, config)
    out = _out_dir(args, config)
    fit, held_out = split_by_sampling_rate(full, rate, seed)
    write_triplets(fit, os.path.join(out, "train.csv"))
    write_entry_set(held_out, os.path.join(out, "test.csv"))
    write_sidecar(full.n_rows, full.n_cols, os.path.join(out, SIDECAR_FILE))
    print(
        f"split {full.n_known} entries at rate {rate}: "
        f"train={fit.n_known} test={len(held_out)} -> {out}"
    )
    return 0


def cmd_train(args):
    config = _load_config(args.config)
    cfg = _resolve_train_config(args, config)
    observed = _load_dataset(args, config)
    coords_path = _resolve(args, config, "coords")
    if coords_path is None:
        raise ParameterError("no coordinate file given (--coords)")
    coords = load_coords(coords_path)
    out = _out_dir(args, config)
    model, trace = train(observed, coords, cfg)
    save_checkpoint(model, out)
    trace.write_csv(os.path.join(out, "trace.csv"))
    print(
        f"trained {model.n_rows}x{model.n_cols} d={cfg.latent_dim}: "
        f"rmse={model.final_rmse:.6f} epochs={model.epochs_run} -> {out}"
    )
    return 0


def cmd_recover(args):
    model = load_checkpoint(args.checkpoint)
    dense = recover(model)
    if args.merge_observed is not None:
        observed = load_triplets(
            args.merge_observed, n_rows=model.n_rows, n_cols=model.n_cols
        )
        dense[observed.row_idx, observed.col_idx] = observed.values
    out = args.out
    if out is None:
        raise ParameterError("no output file given (--out)")
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for row in dense:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    merged = " (observations merged)" if args.merge_observed else ""
    print(f"recovered {dense.shape[0]}x{dense.shape[1]} matrix{merged} -> {out}")
    return 0


def cmd_eval(args):
    config = _load_config(args.config)
    cfg = _resolve_train_config(args, config)
    full = _load_dataset(args, config)
    coords_path = _resolve(args, config, "coords")
    if coords_path is None:
        raise ParameterError("no coordinate file given (--coords)")
    coords = load_coords(coords_path)
    out = _out_dir(args, config)
    seeds = _parse_seeds(args.seeds)
    dataset = args.dataset_label
    if dataset is None:
        input_path = _resolve(args, config, "input")
        dataset = os.path.splitext(os.path.basename(input_path))[0]

    if args.sweep_rates is not None and args.sweep_dims is not None:
        raise ParameterError("--sweep-rates and --sweep-dims are mutually exclusive")
    if args.sweep_rates is not None:
        rates = _parse_grid(args.sweep_rates, float)
        baseline = replace(cfg, beta1=0.0, beta2=0.0)
        report = merge_reports(
            sweep_sampling(full, coords, rates, seeds, cfg, dataset=dataset,
                           model_label="lfa-rtd", on_divergence="record"),
            sweep_sampling(full, coords, rates, seeds, baseline, dataset=dataset,
                           model_label="lfa", on_divergence="record"),
        )
    elif args.sweep_dims is not None:
        if args.rate is None:
            raise ParameterError("--sweep-dims requires --rate")
        dims = _parse_grid(args.sweep_dims, int)
        report = sweep_dimension(full, coords, dims, args.rate, seeds, cfg,
                                 dataset=dataset, on_divergence="record")
    else:
        if args.rate is None:
            raise ParameterError("need --rate, --sweep-rates, or --sweep-dims")
        report = sweep_sampling(full, coords, [args.rate], seeds, cfg,
                                dataset=dataset, on_divergence="record")

    report.write_csv(os.path.join(out, "report.csv"))
    report.write_json(os.path.join(out, "report.json"))
    report.write_summary_csv(os.path.join(out, "summary.csv"))
    diverged = sum(1 for r in report.records if math.isnan(r.rmse))
    note = f" ({diverged} diverged)" if diverged else ""
    print(f"evaluated {len(report.records)} cells{note} -> {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="strecover",
        description="Spatio-temporal matrix completion toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--preset", choices=["smoke"])
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--spatial-rounds", type=int, dest="spatial_rounds")
    p.add_argument("--temporal-rounds", type=int, dest="temporal_rounds")
    p.add_argument("--noise-sd", type=float, dest="noise_sd")
    p.add_argument("--box-size", type=float, dest="box_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="mask a dataset into train/test files")
    p.add_argument("--input")
    p.add_argument("--meta")
    p.add_argument("--rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit latent factors on a training file")
    p.add_argument("--input")
    p.add_argument("--coords")
    p.add_argument("--meta")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recover", help="write the dense reconstruction of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--merge-observed", dest="merge_observed", metavar="TRIPLETS",
                   help="overwrite known cells with their observed values")
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("eval", help="run RMSE benchmarks and sweeps")
    p.add_argument("--input")
    p.add_argument("--coords")
    p.add_argument("--meta")
    p.add_argument("--rate", type=float)
    p.add_argument("--seeds", default="1..5")
    p.add_argument("--sweep-rates", dest="sweep_rates", metavar="START:STOP:STEP")
    p.add_argument("--sweep-dims", dest="sweep_dims", metavar="START:STOP:STEP")
    p.add_argument("--dataset-label", dest="dataset_label")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    _add_train_flags(p)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (StrecoverError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
