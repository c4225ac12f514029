"""NSL-KDD ingestion, normalization, and synthetic-negative generation.

Input files are comma-separated, one connection record per line, 42 or 43
fields: 41 features, the attack label, and an optional difficulty score.
The label is collapsed to binary: the string ``normal`` is normal, anything
else is anomalous.

Continuous features are min-max normalized with train-set statistics and
clamped to [0, 1]; categorical features (protocol_type, service, flag) are
integer-coded against the sorted train-set vocabulary and scaled to [0, 1].
Synthetic anomalies come from column-wise shuffling: each column of the
normal subset is independently permuted, preserving per-column marginals
while destroying inter-feature structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SeededRng

__all__ = [
    "LABEL_ANOMALOUS",
    "LABEL_NORMAL",
    "EmptySubsetError",
    "FeatureSpec",
    "LabeledDataset",
    "ParseError",
    "RawRecords",
    "RecordSchema",
    "build_dataset",
    "column_shuffle",
    "extract_normal_subset",
    "fit_feature_specs",
    "load_nslkdd",
    "normalize_record",
    "write_normalized_csv",
]

LABEL_NORMAL = 0
LABEL_ANOMALOUS = 1

# 41 feature names in NSL-KDD column order.
NSLKDD_FEATURE_NAMES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in",
    "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)


class ParseError(ValueError):
    """Malformed input file (wrong arity, non-numeric continuous value, ...)."""


class EmptySubsetError(ValueError):
    """A required subset (e.g. normal training rows) came out empty."""


@dataclass(frozen=True)
class RecordSchema:
    """NSL-KDD column layout: 41 features, label, optional difficulty."""

    feature_names: tuple[str, ...] = NSLKDD_FEATURE_NAMES
    categorical_indices: frozenset[int] = frozenset({1, 2, 3})
    label_column: int = 41
    difficulty_column: int | None = 42

    def __post_init__(self):
        if len(self.feature_names) != 41:
            raise ValueError(
                f"schema must carry exactly 41 features, got {len(self.feature_names)}"
            )

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass
class RawRecords:
    """Parsed but not yet normalized records."""

    features: list[list[str]]
    labels: np.ndarray  # int8, LABEL_NORMAL / LABEL_ANOMALOUS
    source_labels: list[str]
    difficulty: np.ndarray | None  # int32, present only if the file had 43 fields

    def __len__(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class FeatureSpec:
    """Normalization record for one feature column."""

    kind: str  # "continuous" | "categorical"
    min: float = 0.0
    max: float = 0.0
    vocabulary: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "continuous":
            if not self.min <= self.max:
                raise ValueError(
                    f"continuous spec needs min <= max, got {self.min} > {self.max}"
                )
        elif self.kind == "categorical":
            if not self.vocabulary:
                raise ValueError("categorical spec needs a non-empty vocabulary")
            if list(self.vocabulary) != sorted(set(self.vocabulary)):
                raise ValueError("vocabulary must be sorted and duplicate-free")
        else:
            raise ValueError(f"unknown feature kind {self.kind!r}")


@dataclass
class LabeledDataset:
    """Normalized rows in [0,1] plus binary labels and bookkeeping columns."""

    rows: np.ndarray  # (N, n_features) float64
    labels: np.ndarray  # (N,) int8
    source_labels: list[str] = field(default_factory=list)
    difficulty: np.ndarray | None = None

    def __len__(self) -> int:
        return self.rows.shape[0]


def _map_label(raw: str) -> int:
    return LABEL_NORMAL if raw == "normal" else LABEL_ANOMALOUS


def load_nslkdd(path, schema: RecordSchema | None = None) -> RawRecords:
    """Parse an NSL-KDD text file. Blank lines are skipped.

    Raises ParseError (with the 1-based line number) on a row that does not
    have 42 or 43 comma-separated fields or a non-integer difficulty value;
    OSError if the file is unreadable.
    """
    schema = schema or RecordSchema()
    n = schema.n_features
    features: list[list[str]] = []
    labels: list[int] = []
    source_labels: list[str] = []
    difficulty: list[int] = []
    saw_difficulty = False

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) not in (n + 1, n + 2):
                raise ParseError(
                    f"{path}: line {lineno}: expected {n + 1} or {n + 2} fields, "
                    f"got {len(fields)}"
                )
            features.append(fields[:n])
            raw_label = fields[schema.label_column].strip()
            source_labels.append(raw_label)
            labels.append(_map_label(raw_label))
            if len(fields) == n + 2:
                saw_difficulty = True
                try:
                    difficulty.append(int(fields[n + 1]))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}: difficulty field "
                        f"{fields[n + 1]!r} is not an integer"
                    ) from None
            else:
                difficulty.append(-1)

    return RawRecords(
        features=features,
        labels=np.asarray(labels, dtype=np.int8),
        source_labels=source_labels,
        difficulty=np.asarray(difficulty, dtype=np.int32) if saw_difficulty else None,
    )


def fit_feature_specs(raw: RawRecords, schema: RecordSchema | None = None) -> list[FeatureSpec]:
    """Train-set statistics per column: min/max or sorted vocabulary."""
    schema = schema or RecordSchema()
    if not raw.features:
        raise ValueError("cannot fit feature specs on an empty table")
    columns = list(zip(*raw.features))
    specs: list[FeatureSpec] = []
    for i, name in enumerate(schema.feature_names):
        col = columns[i]
        if i in schema.categorical_indices:
            specs.append(FeatureSpec(kind="categorical", vocabulary=tuple(sorted(set(col)))))
        else:
            try:
                values = np.asarray(col, dtype=np.float64)
            except ValueError:
                bad = next(v for v in col if not _is_float(v))
                raise ParseError(
                    f"feature {name!r} (column {i}): non-numeric value {bad!r}"
                ) from None
            specs.append(FeatureSpec(kind="continuous", min=float(values.min()), max=float(values.max())))
    return specs


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def normalize_record(row, specs: list[FeatureSpec], unseen: dict[int, int] | None = None):
    """Normalize one raw row to an array of floats in [0, 1].

    Continuous: (v - min) / (max - min) clamped to [0, 1]; a constant feature
    maps to 0.0. Categorical: vocabulary index / max(1, len(vocab) - 1); an
    unseen category maps to 0.0 and bumps ``unseen[column]`` when a counter
    dict is supplied.
    """
    if len(row) != len(specs):
        raise ValueError(f"row has {len(row)} fields, specs expect {len(specs)}")
    out = np.empty(len(specs), dtype=np.float64)
    for i, (value, spec) in enumerate(zip(row, specs)):
        if spec.kind == "continuous":
            span = spec.max - spec.min
            if span <= 0.0:
                out[i] = 0.0
            else:
                out[i] = min(max((float(value) - spec.min) / span, 0.0), 1.0)
        else:
            try:
                idx = spec.vocabulary.index(value)
            except ValueError:
                if unseen is not None:
                    unseen[i] = unseen.get(i, 0) + 1
                out[i] = 0.0
                continue
            out[i] = idx / max(1, len(spec.vocabulary) - 1)
    return out


def build_dataset(
    raw: RawRecords,
    specs: list[FeatureSpec],
    schema: RecordSchema | None = None,
) -> tuple[LabeledDataset, int]:
    """Normalize a whole raw table. Returns the dataset and the count of
    unseen categorical values encountered (test rows outside the train
    vocabulary)."""
    schema = schema or RecordSchema()
    if len(specs) != schema.n_features:
        raise ValueError(f"got {len(specs)} specs for {schema.n_features} features")
    n_rows = len(raw.features)
    rows = np.empty((n_rows, schema.n_features), dtype=np.float64)
    unseen_total = 0
    columns = list(zip(*raw.features)) if n_rows else [()] * schema.n_features
    for i, spec in enumerate(specs):
        col = columns[i]
        if spec.kind == "continuous":
            try:
                values = np.asarray(col, dtype=np.float64)
            except ValueError:
                bad = next(v for v in col if not _is_float(v))
                raise ParseError(
                    f"feature {schema.feature_names[i]!r} (column {i}): "
                    f"non-numeric value {bad!r}"
                ) from None
            span = spec.max - spec.min
            if span <= 0.0:
                rows[:, i] = 0.0
            else:
                rows[:, i] = np.clip((values - spec.min) / span, 0.0, 1.0)
        else:
            vocab = np.asarray(spec.vocabulary)
            col_arr = np.asarray(col)
            idx = np.searchsorted(vocab, col_arr)
            idx_clipped = np.minimum(idx, len(vocab) - 1)
            found = vocab[idx_clipped] == col_arr
            unseen_total += int((~found).sum())
            denom = max(1, len(vocab) - 1)
            rows[:, i] = np.where(found, idx_clipped / denom, 0.0)
    ds = LabeledDataset(
        rows=rows,
        labels=raw.labels.copy(),
        source_labels=list(raw.source_labels),
        difficulty=None if raw.difficulty is None else raw.difficulty.copy(),
    )
    return ds, unseen_total


def extract_normal_subset(ds: LabeledDataset) -> LabeledDataset:
    """Rows labeled normal, original order preserved."""
    mask = ds.labels == LABEL_NORMAL
    if not mask.any():
        raise EmptySubsetError("dataset contains no normal rows; cannot train")
    idx = np.nonzero(mask)[0]
    return LabeledDataset(
        rows=ds.rows[idx].copy(),
        labels=ds.labels[idx].copy(),
        source_labels=[ds.source_labels[i] for i in idx] if ds.source_labels else [],
        difficulty=None if ds.difficulty is None else ds.difficulty[idx].copy(),
    )


def column_shuffle(ds: LabeledDataset, rng: SeededRng) -> LabeledDataset:
    """Synthetic negatives: permute each column independently.

    Per-column marginals are preserved exactly; all output labels are
    anomalous (bookkeeping only — training never reads them). Columns are
    permuted left to right, one permutation draw per column.
    """
    if len(ds) == 0:
        raise ValueError("cannot shuffle an empty dataset")
    n_rows, n_cols = ds.rows.shape
    out = np.empty_like(ds.rows)
    for j in range(n_cols):
        perm = rng.gen.permutation(n_rows)
        out[:, j] = ds.rows[perm, j]
    return LabeledDataset(
        rows=out,
        labels=np.full(n_rows, LABEL_ANOMALOUS, dtype=np.int8),
        source_labels=["shuffled"] * n_rows,
        difficulty=None,
    )


def write_normalized_csv(ds: LabeledDataset, path, schema: RecordSchema | None = None) -> None:
    """Debug dump: normalized rows with a one-line header (names + label)."""
    schema = schema or RecordSchema()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join((*schema.feature_names, "label")) + "\n")
        for i in range(len(ds)):
            vals = ",".join(repr(v) for v in ds.rows[i].tolist())
            name = "normal" if ds.labels[i] == LABEL_NORMAL else "anomalous"
            fh.write(f"{vals},{name}\n")
