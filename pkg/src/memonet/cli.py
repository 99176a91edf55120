"""Command-line front end: gen, train, eval, kif, and sweep subcommands.

Run directories are append-only: a command refuses to write into a non-empty
directory unless --force is given. Machine-readable results go to stdout;
progress and diagnostics go to stderr. Config files are key=value lines with
'#' comments; every run echoes its fully resolved config next to its outputs
so any run can be reproduced from its own directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .data import Dataset, Schema, Vocabulary, ingest
from .errors import ConfigError, MemoNetError
from .kif import far_scores, fnr_scores, select_kif
from .metrics import evaluate
from .model import FitResult, TrainConfig, fit, load_checkpoint, save_checkpoint
from .synthetic import generate, parse_generator_spec

SCHEMA_FILE = "schema.txt"
TRAIN_FILE = "train.csv"
VALID_FILE = "valid.csv"
TEST_FILE = "test.csv"
CHECKPOINT_FILE = "checkpoint.bin"
HISTORY_FILE = "history.jsonl"
CONFIG_ECHO_FILE = "config.txt"
SUMMARY_FILE = "summary.csv"


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(part) for part in text.split(","))


def _parse_kif(text: str) -> frozenset[int]:
    return frozenset(int(part) for part in text.split(","))


def _parse_str(text: str) -> str:
    return text


# config-file key -> (TrainConfig field, parser)
CONFIG_KEYS = {
    "mode": ("mode", _parse_str),
    "restore": ("restore_mode", _parse_str),
    "embedding_dim": ("embedding_dim", _parse_int),
    "codeword_dim": ("codeword_dim", _parse_int),
    "codewords": ("codeword_count", _parse_int),
    "hashes": ("hash_count", _parse_int),
    "hidden": ("attn_hidden", _parse_int),
    "decimals": ("decimal_places", _parse_int),
    "mlp": ("mlp_layers", _parse_int_tuple),
    "kif": ("kif_fields", _parse_kif),
    "lr": ("learning_rate", _parse_float),
    "batch_size": ("batch_size", _parse_int),
    "epochs": ("epochs", _parse_int),
    "beta1": ("adam_beta1", _parse_float),
    "beta2": ("adam_beta2", _parse_float),
    "epsilon": ("adam_eps", _parse_float),
    "seed": ("seed", _parse_int),
}


def read_config_file(path) -> TrainConfig:
    """Parse a key=value config file; unknown keys are hard errors."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ConfigError(f"{path} line {lineno}: expected key=value, got {line!r}")
            key, _, value = text.partition("=")
            key = key.strip()
            spec = CONFIG_KEYS.get(key)
            if spec is None:
                raise ConfigError(f"{path} line {lineno}: unknown config key {key!r}")
            if spec[0] in values:
                raise ConfigError(f"{path} line {lineno}: duplicate key {key!r}")
            try:
                values[spec[0]] = spec[1](value.strip())
            except ValueError:
                raise ConfigError(f"{path} line {lineno}: bad value for {key!r}: {value.strip()!r}")
    return TrainConfig(**values)


def echo_config(config: TrainConfig, path) -> None:
    """Write the resolved config in the same key=value format it is read in."""
    lines = []
    for key, (field_name, _) in CONFIG_KEYS.items():
        value = getattr(config, field_name)
        if field_name == "codeword_dim":
            value = config.resolved_codeword_dim
        if field_name == "kif_fields":
            if value is None:
                continue
            value = ",".join(str(k) for k in sorted(value))
        elif field_name == "mlp_layers":
            value = ",".join(str(w) for w in value)
        lines.append(f"{key}={value}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(sorted(lines)) + "\n")


def apply_config_override(config: TrainConfig, key: str, raw_value: str) -> TrainConfig:
    spec = CONFIG_KEYS.get(key)
    if spec is None:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return replace(config, **{spec[0]: spec[1](raw_value)})
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw_value!r}")


def _prepare_out_dir(path, force: bool) -> Path:
    out = Path(path)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise ConfigError(f"output directory {out} is not empty; pass --force to reuse it")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_splits(data_dir) -> tuple[Schema, Dataset, Dataset, Vocabulary]:
    data = Path(data_dir)
    schema = Schema.load(data / SCHEMA_FILE)
    train_ds, vocab = ingest(data / TRAIN_FILE, schema)
    valid_ds, _ = ingest(data / VALID_FILE, schema, vocab)
    return schema, train_ds, valid_ds, vocab


def _write_history(history, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for stats in history:
            fh.write(json.dumps(stats.to_json_dict(), sort_keys=True) + "\n")


def _run_training(
    config: TrainConfig,
    schema: Schema,
    train_ds: Dataset,
    valid_ds: Dataset,
    vocab: Vocabulary,
    out_dir: Path,
) -> FitResult:
    result = fit(train_ds, valid_ds, config)
    echo_config(config, out_dir / CONFIG_ECHO_FILE)
    _write_history(result.history, out_dir / HISTORY_FILE)
    meta = {
        "best_epoch": result.best_epoch,
        "best_valid_auc": result.best_valid_auc,
        "n_train": len(train_ds),
        "n_valid": len(valid_ds),
    }
    save_checkpoint(out_dir / CHECKPOINT_FILE, result.params, config, schema, vocab, meta)
    return result


def cmd_gen(args) -> int:
    spec = parse_generator_spec(args.spec, seed_override=args.seed)
    out = _prepare_out_dir(args.out, args.force)
    paths = generate(spec, out)
    print(f"wrote {paths.schema.parent}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    config = read_config_file(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out = _prepare_out_dir(args.out, args.force)
    schema, train_ds, valid_ds, vocab = _load_splits(args.data)
    result = _run_training(config, schema, train_ds, valid_ds, vocab, out)
    print(
        f"trained {config.mode} for {config.epochs} epochs; "
        f"best epoch {result.best_epoch}, valid auc {result.best_valid_auc}",
        file=sys.stderr,
    )
    return 0


def cmd_eval(args) -> int:
    bundle = load_checkpoint(args.checkpoint)
    dataset, _ = ingest(args.data, bundle.schema, bundle.vocab)
    result = evaluate(bundle.params, dataset)
    print(json.dumps(result.to_json_dict(), sort_keys=True))
    return 0


def cmd_kif(args) -> int:
    if args.method == "fnr":
        data = Path(args.data)
        schema = Schema.load(data / SCHEMA_FILE)
        _, vocab = ingest(data / TRAIN_FILE, schema)
        report = fnr_scores(vocab, schema)
    else:
        if args.checkpoint is None:
            raise ConfigError("the attention ranking (--method far) needs --checkpoint")
        bundle = load_checkpoint(args.checkpoint)
        data = Path(args.data)
        valid_ds, _ = ingest(data / VALID_FILE, bundle.schema, bundle.vocab)
        report = far_scores(bundle.params, valid_ds)
    payload = report.to_json_dict()
    if args.top_k is not None:
        payload["selected"] = sorted(select_kif(report, args.top_k))
    print(json.dumps(payload, sort_keys=True))
    print(report.to_table(), file=sys.stderr)
    return 0


def _sweep_worker(job: tuple[dict, str, str]) -> dict:
    config_dict, data_dir, run_dir = job
    config = TrainConfig.from_json_dict(config_dict)
    out = Path(run_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema, train_ds, valid_ds, vocab = _load_splits(data_dir)
    result = _run_training(config, schema, train_ds, valid_ds, vocab, out)
    test_ds, _ = ingest(Path(data_dir) / TEST_FILE, schema, vocab)
    test_result = evaluate(result.params, test_ds)
    return {
        "seed": config.seed,
        "best_epoch": result.best_epoch,
        "valid_auc": result.best_valid_auc,
        "test_auc": test_result.auc,
        "test_logloss": test_result.logloss,
    }


def cmd_sweep(args) -> int:
    base = read_config_file(args.config)
    if args.key not in CONFIG_KEYS:
        raise ConfigError(f"unknown config key {args.key!r}")
    values = [v for v in args.values.split(",") if v != ""]
    if not values:
        raise ConfigError("sweep needs at least one value")
    seeds = (
        [int(s) for s in args.seeds.split(",")] if args.seeds is not None else [base.seed]
    )
    out = _prepare_out_dir(args.out, args.force)
    jobs = []
    for value in values:
        for seed in seeds:
            config = apply_config_override(base, args.key, value)
            config = replace(config, seed=seed)
            run_dir = out / f"{args.key}={value}" / f"seed={seed}"
            jobs.append((value, seed, config, run_dir))
    rows = []
    if args.parallel > 1:
        payloads = [
            (config.to_json_dict(), str(args.data), str(run_dir))
            for _, _, config, run_dir in jobs
        ]
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(_sweep_worker, payloads))
        for (value, seed, _, _), result in zip(jobs, results):
            rows.append({"key": args.key, "value": value, **result})
    else:
        # Sequential runs share one ingest of the data splits.
        schema, train_ds, valid_ds, vocab = _load_splits(args.data)
        test_ds, _ = ingest(Path(args.data) / TEST_FILE, schema, vocab)
        for value, seed, config, run_dir in jobs:
            run_dir.mkdir(parents=True, exist_ok=True)
            result = _run_training(config, schema, train_ds, valid_ds, vocab, run_dir)
            test_result = evaluate(result.params, test_ds)
            rows.append(
                {
                    "key": args.key,
                    "value": value,
                    "seed": seed,
                    "best_epoch": result.best_epoch,
                    "valid_auc": result.best_valid_auc,
                    "test_auc": test_result.auc,
                    "test_logloss": test_result.logloss,
                }
            )
            print(
                f"sweep {args.key}={value} seed={seed}: test auc {test_result.auc:.5f}",
                file=sys.stderr,
            )
    columns = ["key", "value", "seed", "best_epoch", "valid_auc", "test_auc", "test_logloss"]
    with open(out / SUMMARY_FILE, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memonet",
        description="Train and probe click-through models that memorize cross features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset from a spec file")
    p.add_argument("spec", help="generator spec (key=value lines)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    p.add_argument("--force", action="store_true", help="write into a non-empty directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train one model over a generated dataset")
    p.add_argument("--config", required=True, help="training config (key=value lines)")
    p.add_argument("--data", required=True, help="dataset directory (schema + splits)")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p.add_argument("--force", action="store_true", help="write into a non-empty directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labelled CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="labelled CSV file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("kif", help="rank fields for key-interaction selection")
    p.add_argument("--method", choices=("fnr", "far"), required=True)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--checkpoint", default=None, help="trained model (far only)")
    p.add_argument("--top-k", type=int, default=None, dest="top_k")
    p.set_defaults(func=cmd_kif)

    p = sub.add_parser("sweep", help="train a grid over one config key and seeds")
    p.add_argument("--config", required=True, help="base training config")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="sweep directory")
    p.add_argument("--key", required=True, help="config key to vary")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", default=None, help="comma-separated seeds (default: config seed)")
    p.add_argument("--parallel", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--force", action="store_true", help="write into a non-empty directory")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MemoNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())
