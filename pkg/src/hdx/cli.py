"""Command-line front end: train / eval / sweep.

Configuration precedence: command-line flags override a line-oriented
``key=value`` config file (``--config``), which overrides built-in defaults.
The seed may also come from the ``HDX_SEED`` environment variable as a last
resort.

Exit codes:
    0  success
    2  configuration error (bad flag, missing seed, invalid hyperparameter)
    3  I/O error (missing or unreadable file)
    4  parse error (malformed data or model file)
    5  schema mismatch (record arity differs from the model)
    6  empty normal subset (training impossible)

The model file is canonical JSON: loading and re-saving a model reproduces
the file byte for byte. Base and level tables are regenerated from the
stored seed; the two class vectors are stored in full.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .core import RealHypervector, SeededRng
from .dataset import (
    EmptySubsetError,
    FeatureSpec,
    LabeledDataset,
    ParseError,
    RecordSchema,
    build_dataset,
    column_shuffle,
    extract_normal_subset,
    fit_feature_specs,
    load_nslkdd,
    write_normalized_csv,
)
from .encoder import EncoderConfig, EncoderModel, encode_packed
from .evaluate import baseline_report, compute_metrics, threshold_sweep
from .oneclass import (
    MODE_ABSOLUTE,
    MODE_COMPARATIVE,
    SimilarityModel,
    TrainConfig,
    classify_batch,
    train_packed,
)

__all__ = ["RunConfig", "cmd_eval", "cmd_sweep", "cmd_train", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_SCHEMA = 5
EXIT_EMPTY_NORMAL = 6

MODEL_FORMAT_VERSION = 1

SEED_ENV_VAR = "HDX_SEED"

# stream ids for deriving independent draw domains from the one user seed
ENCODER_STREAM = 0
SHUFFLE_STREAM = 1


class ConfigError(ValueError):
    """Invalid or missing configuration."""


class SchemaError(ValueError):
    """Evaluation data does not match the persisted model's schema."""


@dataclass
class RunConfig:
    """All knobs for one pipeline run. Defaults follow the reference setup."""

    dim: int = 10000
    levels: int = 10
    alpha: float = 0.02
    epochs: int = 10
    seed: int | None = None
    mode: str = MODE_COMPARATIVE
    threshold: float | None = None
    normal_sample: int | None = None
    symmetric_updates: bool = False
    workers: int = 1
    train: str | None = None
    test: str | None = None
    model: str | None = None
    split: str | None = None
    grid: str | None = None
    out: str = "."
    dump_normalized: str | None = None
    # eval-time overrides of the model's decision rule; None = use the model's
    eval_mode: str | None = None
    eval_threshold: float | None = None

    def config_line(self) -> str:
        thr = "none" if self.threshold is None else repr(self.threshold)
        cap = "none" if self.normal_sample is None else str(self.normal_sample)
        return (
            f"dim={self.dim} levels={self.levels} alpha={self.alpha!r} "
            f"epochs={self.epochs} seed={self.seed} mode={self.mode} "
            f"threshold={thr} normal_sample={cap} "
            f"symmetric_updates={str(self.symmetric_updates).lower()}"
        )


_INT_KEYS = {"dim", "levels", "epochs", "seed", "normal_sample", "workers"}
_FLOAT_KEYS = {"alpha", "threshold", "eval_threshold"}
_BOOL_KEYS = {"symmetric_updates"}
_STR_KEYS = {
    "mode", "train", "test", "model", "split", "grid", "out",
    "dump_normalized", "eval_mode",
}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS


def _coerce(key: str, value: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        return value
    except ValueError:
        raise ConfigError(f"config key {key!r} has invalid value {value!r}") from None


def read_config_file(path) -> dict:
    """Parse a key=value config file ('#' starts a comment)."""
    entries: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _ALL_KEYS:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            entries[key] = _coerce(key, value)
    return entries


def build_run_config(cli_args: dict, config_path: str | None) -> RunConfig:
    """defaults < config file < explicit CLI flags; HDX_SEED as seed fallback."""
    merged = asdict(RunConfig())
    if config_path is not None:
        merged.update(read_config_file(config_path))
    merged.update({k: v for k, v in cli_args.items() if v is not None})
    if merged.get("seed") is None and os.environ.get(SEED_ENV_VAR):
        merged["seed"] = _coerce("seed", os.environ[SEED_ENV_VAR])
    cfg = RunConfig(**merged)
    _validate_run_config(cfg)
    return cfg


def _validate_run_config(cfg: RunConfig) -> None:
    if cfg.normal_sample is not None and cfg.normal_sample < 1:
        raise ConfigError(f"--normal-sample must be >= 1, got {cfg.normal_sample}")
    if cfg.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {cfg.workers}")
    if cfg.mode not in (MODE_COMPARATIVE, MODE_ABSOLUTE):
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.mode == MODE_ABSOLUTE and (
        cfg.threshold is None or not math.isfinite(cfg.threshold)
    ):
        raise ConfigError("absolute mode requires --threshold")


# ---------------------------------------------------------------------------
# model persistence
# ---------------------------------------------------------------------------


def _spec_to_dict(spec: FeatureSpec) -> dict:
    if spec.kind == "continuous":
        return {"kind": "continuous", "min": spec.min, "max": spec.max}
    return {"kind": "categorical", "vocabulary": list(spec.vocabulary)}


def _spec_from_dict(d: dict) -> FeatureSpec:
    if d["kind"] == "continuous":
        return FeatureSpec(kind="continuous", min=d["min"], max=d["max"])
    return FeatureSpec(kind="categorical", vocabulary=tuple(d["vocabulary"]))


def model_payload(cfg: RunConfig, specs: list[FeatureSpec], sim: SimilarityModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "config": {
            "dim": cfg.dim,
            "levels": cfg.levels,
            "alpha": cfg.alpha,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "mode": cfg.mode,
            "threshold": cfg.threshold,
            "normal_sample": cfg.normal_sample,
            "symmetric_updates": cfg.symmetric_updates,
        },
        "feature_names": list(RecordSchema().feature_names),
        "feature_specs": [_spec_to_dict(s) for s in specs],
        "s_norm": sim.s_norm.values.tolist(),
        "s_shuf": sim.s_shuf.values.tolist(),
        "training_stats": list(sim.training_stats),
    }


def write_model(path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_model(path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a valid model file: {exc}") from None
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ParseError(
            f"{path}: unsupported model format version {payload.get('format_version')!r}"
        )
    return payload


def restore_model(payload: dict) -> tuple[EncoderModel, SimilarityModel, RunConfig]:
    """Rebuild encoder tables from the stored seed and rehydrate class vectors."""
    c = payload["config"]
    specs = [_spec_from_dict(d) for d in payload["feature_specs"]]
    cfg = RunConfig(
        dim=c["dim"], levels=c["levels"], alpha=c["alpha"], epochs=c["epochs"],
        seed=c["seed"], mode=c["mode"], threshold=c["threshold"],
        normal_sample=c["normal_sample"],
        symmetric_updates=c.get("symmetric_updates", False),
    )
    enc_cfg = EncoderConfig(dim=cfg.dim, levels=cfg.levels, n_features=len(specs), seed=cfg.seed)
    encoder = EncoderModel.build(enc_cfg, specs)
    tcfg = TrainConfig(
        alpha=cfg.alpha, epochs=cfg.epochs, mode=cfg.mode,
        threshold=cfg.threshold, symmetric_updates=cfg.symmetric_updates,
    )
    sim = SimilarityModel(
        s_norm=RealHypervector(cfg.dim, np.asarray(payload["s_norm"], dtype=np.float64)),
        s_shuf=RealHypervector(cfg.dim, np.asarray(payload["s_shuf"], dtype=np.float64)),
        config=tcfg,
        training_stats=[int(x) for x in payload["training_stats"]],
    )
    return encoder, sim, cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _truncate(ds: LabeledDataset, limit: int) -> LabeledDataset:
    if limit >= len(ds):
        return ds
    return LabeledDataset(
        rows=ds.rows[:limit].copy(),
        labels=ds.labels[:limit].copy(),
        source_labels=ds.source_labels[:limit],
        difficulty=None if ds.difficulty is None else ds.difficulty[:limit].copy(),
    )


def cmd_train(cfg: RunConfig) -> int:
    if cfg.train is None:
        raise ConfigError("train requires --train FILE")
    if cfg.seed is None:
        raise ConfigError(f"train requires --seed (or {SEED_ENV_VAR})")
    schema = RecordSchema()
    raw = load_nslkdd(cfg.train, schema)
    specs = fit_feature_specs(raw, schema)
    ds, unseen = build_dataset(raw, specs, schema)
    normal = extract_normal_subset(ds)
    if cfg.normal_sample is not None:
        normal = _truncate(normal, cfg.normal_sample)
    shuffled = column_shuffle(normal, SeededRng(cfg.seed, stream=SHUFFLE_STREAM))

    encoder = EncoderModel.build(
        EncoderConfig(dim=cfg.dim, levels=cfg.levels, n_features=schema.n_features, seed=cfg.seed),
        specs,
    )
    normal_words = encode_packed(encoder, normal.rows, workers=cfg.workers)
    shuf_words = encode_packed(encoder, shuffled.rows, workers=cfg.workers)
    tcfg = TrainConfig(
        alpha=cfg.alpha, epochs=cfg.epochs, mode=cfg.mode,
        threshold=cfg.threshold, symmetric_updates=cfg.symmetric_updates,
    )
    sim = train_packed(normal_words, shuf_words, cfg.dim, tcfg)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"
    write_model(model_path, model_payload(cfg, specs, sim))

    if cfg.dump_normalized:
        write_normalized_csv(ds, cfg.dump_normalized, schema)

    print(f"loaded {len(raw)} records from {cfg.train}")
    print(f"normal subset: {len(normal)} records; shuffled negatives: {len(shuffled)}")
    for epoch, updates in enumerate(sim.training_stats, start=1):
        print(f"epoch {epoch}: {updates} updates")
    print(f"model written to {model_path}")
    return EXIT_OK


def _split_token(split: str) -> str:
    return {"train+": "train_plus", "test+": "test_plus", "test-21": "test_21"}[split]


def _load_eval_inputs(cfg: RunConfig):
    if cfg.model is None:
        raise ConfigError("this command requires --model FILE")
    if cfg.test is None:
        raise ConfigError("this command requires --test FILE")
    payload = load_model(cfg.model)
    encoder, sim, model_cfg = restore_model(payload)
    schema = RecordSchema()
    if len(encoder.feature_specs) != schema.n_features:
        raise SchemaError(
            f"model expects {len(encoder.feature_specs)} features, "
            f"schema has {schema.n_features}"
        )
    raw = load_nslkdd(cfg.test, schema)
    ds, unseen = build_dataset(raw, encoder.feature_specs, schema)
    words = encode_packed(encoder, ds.rows, workers=cfg.workers)
    return encoder, sim, model_cfg, ds, words, unseen


def _metrics_block(m) -> str:
    c = m.confusion
    return (
        f"accuracy:  {m.accuracy:.6f}\n"
        f"precision: {m.precision:.6f}\n"
        f"recall:    {m.recall:.6f}\n"
        f"f1:        {m.f1:.6f}\n"
        f"confusion: tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}\n"
    )


def _metrics_dict(m) -> dict:
    c = m.confusion
    return {
        "accuracy": m.accuracy,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
    }


def _write_sweep_csv(path, sweep) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,accuracy,precision,recall,f1,tp,fp,tn,fn\n")
        for p in sweep.points:
            m = p.metrics
            c = m.confusion
            fh.write(
                f"{p.threshold!r},{m.accuracy!r},{m.precision!r},{m.recall!r},"
                f"{m.f1!r},{c.tp},{c.fp},{c.tn},{c.fn}\n"
            )


def cmd_eval(cfg: RunConfig) -> int:
    if cfg.split not in ("train+", "test+", "test-21"):
        raise ConfigError("eval requires --split {train+,test+,test-21}")
    encoder, sim, model_cfg, ds, words, unseen = _load_eval_inputs(cfg)

    mode = cfg.eval_mode if cfg.eval_mode is not None else model_cfg.mode
    threshold = cfg.eval_threshold if cfg.eval_threshold is not None else model_cfg.threshold
    if mode == MODE_ABSOLUTE and (threshold is None or not math.isfinite(threshold)):
        raise ConfigError("absolute mode requires --threshold")
    predictions, sims_n, _ = classify_batch(sim, words, mode=mode, threshold=threshold)
    metrics = compute_metrics(predictions, ds.labels)
    sweep = threshold_sweep(sim, words, ds.labels)
    report = baseline_report({cfg.split: metrics.accuracy})

    rule = mode if mode == MODE_COMPARATIVE else f"absolute (threshold {threshold!r})"
    header = (
        f"hdx evaluation report\n"
        f"split: {cfg.split}\n"
        f"records: {len(ds)}\n"
        f"model config: {model_cfg.config_line()}\n"
        f"decision rule: {rule}\n"
        f"unseen categorical values: {unseen}\n"
    )
    text = (
        header + "\n" + _metrics_block(metrics) + "\n"
        + f"best sweep threshold: {sweep.best_threshold!r} "
        + f"(accuracy {sweep.best_accuracy:.6f})\n\n"
        + report.to_text()
    )

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    token = _split_token(cfg.split)
    (out_dir / f"eval_{token}.txt").write_text(text, encoding="utf-8")
    payload = {
        "split": cfg.split,
        "records": len(ds),
        "model_config": {
            "dim": model_cfg.dim, "levels": model_cfg.levels, "alpha": model_cfg.alpha,
            "epochs": model_cfg.epochs, "seed": model_cfg.seed, "mode": mode,
            "threshold": threshold, "normal_sample": model_cfg.normal_sample,
            "symmetric_updates": model_cfg.symmetric_updates,
        },
        "metrics": _metrics_dict(metrics),
        "sweep_best": {
            "threshold": sweep.best_threshold,
            "accuracy": sweep.best_accuracy,
        },
        "baseline": report.to_dict(),
        "unseen_categories": unseen,
    }
    (out_dir / f"eval_{token}.json").write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    _write_sweep_csv(out_dir / f"sweep_{token}.csv", sweep)

    print(f"split {cfg.split}: accuracy {metrics.accuracy:.6f} over {len(ds)} records")
    print(f"best sweep threshold {sweep.best_threshold!r} (accuracy {sweep.best_accuracy:.6f})")
    print(f"reports written to {out_dir}")
    return EXIT_OK


def _parse_grid(spec: str) -> np.ndarray:
    try:
        if ":" in spec:
            lo, hi, count = spec.split(":")
            return np.linspace(float(lo), float(hi), int(count))
        return np.asarray([float(v) for v in spec.split(",")], dtype=np.float64)
    except (ValueError, TypeError):
        raise ConfigError(f"invalid grid spec {spec!r}; use LO:HI:COUNT or v1,v2,...") from None


def cmd_sweep(cfg: RunConfig) -> int:
    _, sim, _, ds, words, _ = _load_eval_inputs(cfg)
    grid = _parse_grid(cfg.grid) if cfg.grid is not None else None
    sweep = threshold_sweep(sim, words, ds.labels, grid=grid)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_sweep_csv(out_dir / "sweep.csv", sweep)
    print(f"best threshold {sweep.best_threshold!r} (accuracy {sweep.best_accuracy:.6f})")
    print(f"sweep written to {out_dir / 'sweep.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common_hyperparams(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, help="hypervector dimensionality (default 10000)")
    p.add_argument("--levels", type=int, help="quantization levels (default 10)")
    p.add_argument("--alpha", type=float, help="learning rate (default 0.02)")
    p.add_argument("--epochs", type=int, help="refinement passes (default 10)")
    p.add_argument("--seed", type=int, help=f"RNG seed (fallback: ${SEED_ENV_VAR})")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdx",
        description="Hyperdimensional one-class anomaly detection for NSL-KDD records.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit encoder + similarity model from KDDTrain+")
    _add_common_hyperparams(p_train)
    p_train.add_argument("--train", help="path to the training file (KDDTrain+)")
    p_train.add_argument("--out", help="output directory (default .)")
    p_train.add_argument("--mode", choices=[MODE_COMPARATIVE, MODE_ABSOLUTE])
    p_train.add_argument("--threshold", type=float, help="decision threshold (absolute mode)")
    p_train.add_argument("--normal-sample", dest="normal_sample", type=int,
                         help="cap the normal subset at the first N rows")
    p_train.add_argument("--symmetric-updates", dest="symmetric_updates",
                         action="store_const", const=True,
                         help="also run the mirrored update pass over shuffled records")
    p_train.add_argument("--workers", type=int, help="encoding threads (default 1)")
    p_train.add_argument("--config", help="key=value config file")
    p_train.add_argument("--dump-normalized", dest="dump_normalized",
                         help="write the normalized training table to this CSV path")

    for name, descr in (("eval", "evaluate a model on a split"),
                        ("sweep", "threshold sweep over a split")):
        p = sub.add_parser(name, help=descr)
        p.add_argument("--model", help="path to model.json")
        p.add_argument("--test", help="path to the data file to evaluate")
        p.add_argument("--out", help="output directory (default .)")
        p.add_argument("--workers", type=int, help="encoding threads (default 1)")
        p.add_argument("--config", help="key=value config file")
        if name == "eval":
            p.add_argument("--split", choices=["train+", "test+", "test-21"],
                           help="which split the data file is")
            p.add_argument("--mode", dest="eval_mode",
                           choices=[MODE_COMPARATIVE, MODE_ABSOLUTE],
                           help="override the model's decision rule")
            p.add_argument("--threshold", dest="eval_threshold", type=float,
                           help="override the model's decision threshold")
        else:
            p.add_argument("--grid", help="thresholds: LO:HI:COUNT or v1,v2,...")
    return parser


_DISPATCH = {"train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = build_run_config(args, config_path)
        return _DISPATCH[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except EmptySubsetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_NORMAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
