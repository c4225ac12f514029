"""One-class similarity model: initialization, online refinement, classification.

Two real-valued class vectors are kept: one summed from encoded normal
records, one from encoded column-shuffled records. Training makes repeated
online passes over the normal encodings; whenever a record is closer (by
cosine) to the shuffled vector than to the normal one, the record is pulled
into the normal vector and pushed out of the shuffled vector:

    s_norm += alpha * bits     s_shuf -= alpha * bits

Updates take effect immediately, so later records in the same epoch see the
adjusted vectors. Iteration order is the stored record order, which makes
training fully deterministic.

Classification is either comparative (normal iff sim_norm >= sim_shuf; the
parameter-free default) or absolute (normal iff sim_norm > threshold).

The per-record pass is the hot loop (hundreds of thousands of records times
epochs), so it runs as a numba-compiled kernel over the packed words; class
vector norms are tracked across updates by full recomputation, never by
incremental adjustment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from .core import (
    POPCOUNT_TABLE,
    BitHypervector,
    DimensionError,
    RealHypervector,
    cosine_similarity,
)
from .dataset import LABEL_ANOMALOUS, LABEL_NORMAL

__all__ = [
    "ClassifyResult",
    "SimilarityModel",
    "TrainConfig",
    "classify",
    "classify_batch",
    "init_similarity",
    "score",
    "score_batch",
    "train",
    "train_packed",
]

MODE_COMPARATIVE = "comparative"
MODE_ABSOLUTE = "absolute"

# Per-byte set-bit positions (MSB-first) and counts, for packed-word iteration.
_BIT_POS = np.zeros((256, 8), dtype=np.int64)
_BIT_CNT = np.zeros(256, dtype=np.int64)
for _v in range(256):
    _c = 0
    for _b in range(8):
        if (_v >> (7 - _b)) & 1:
            _BIT_POS[_v, _c] = _b
            _c += 1
    _BIT_CNT[_v] = _c


@dataclass(frozen=True)
class TrainConfig:
    """Refinement hyperparameters and the classification rule."""

    alpha: float = 0.02
    epochs: int = 10
    mode: str = MODE_COMPARATIVE
    threshold: float | None = None
    symmetric_updates: bool = False

    def __post_init__(self):
        # alpha 0 is allowed: training degenerates to a no-op refinement
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.mode not in (MODE_COMPARATIVE, MODE_ABSOLUTE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_ABSOLUTE and (
            self.threshold is None or not math.isfinite(self.threshold)
        ):
            raise ValueError("absolute mode requires a finite threshold")


@dataclass
class SimilarityModel:
    """Trained class vectors plus the config and per-epoch update counts."""

    s_norm: RealHypervector
    s_shuf: RealHypervector
    config: TrainConfig
    training_stats: list[int] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.s_norm.dim


class ClassifyResult(NamedTuple):
    label: int  # LABEL_NORMAL or LABEL_ANOMALOUS
    sim_norm: float
    sim_shuf: float


def _stack_words(encoded: Sequence[BitHypervector]) -> tuple[np.ndarray, int]:
    if len(encoded) == 0:
        raise ValueError("empty hypervector array")
    dim = encoded[0].dim
    for hv in encoded:
        if hv.dim != dim:
            raise DimensionError(f"mixed dimensions in hypervector array: {hv.dim} != {dim}")
    return np.stack([hv.words for hv in encoded]), dim


def _column_sums(words: np.ndarray, dim: int) -> np.ndarray:
    """Per-position counts of set bits across packed rows, as float64."""
    sums = np.zeros(dim, dtype=np.int64)
    for start in range(0, words.shape[0], 4096):
        chunk = words[start : start + 4096]
        sums += np.unpackbits(chunk, axis=1)[:, :dim].sum(axis=0, dtype=np.int64)
    return sums.astype(np.float64)


def init_similarity(encoded: Sequence[BitHypervector]) -> RealHypervector:
    """Column-wise sum of encoded records: the starting class vector."""
    words, dim = _stack_words(encoded)
    return RealHypervector(dim, _column_sums(words, dim))


@njit(cache=True)
def _epoch_pass(words, popcounts, s_a, s_b, nsq_a, nsq_b, alpha, dim, bit_pos, bit_cnt):
    """One online pass: pull records toward s_a when they sit closer to s_b.

    Mutates s_a / s_b in place. Returns (updates, nsq_a, nsq_b) with the
    norms recomputed from scratch after every update.
    """
    n_rows, n_words = words.shape
    updates = 0
    for i in range(n_rows):
        d_a = 0.0
        d_b = 0.0
        for w in range(n_words):
            v = words[i, w]
            base = w * 8
            for t in range(bit_cnt[v]):
                j = base + bit_pos[v, t]
                d_a += s_a[j]
                d_b += s_b[j]
        pc = popcounts[i]
        if pc <= 0.0:
            sim_a = 0.0
            sim_b = 0.0
        else:
            sim_a = d_a / np.sqrt(pc * nsq_a) if nsq_a > 0.0 else 0.0
            sim_b = d_b / np.sqrt(pc * nsq_b) if nsq_b > 0.0 else 0.0
        if sim_a < sim_b:
            for w in range(n_words):
                v = words[i, w]
                base = w * 8
                for t in range(bit_cnt[v]):
                    j = base + bit_pos[v, t]
                    s_a[j] += alpha
                    s_b[j] -= alpha
            na = 0.0
            nb = 0.0
            for j in range(dim):
                na += s_a[j] * s_a[j]
                nb += s_b[j] * s_b[j]
            nsq_a = na
            nsq_b = nb
            updates += 1
    return updates, nsq_a, nsq_b


def train_packed(
    normal_words: np.ndarray,
    shuf_words: np.ndarray,
    dim: int,
    cfg: TrainConfig | None = None,
) -> SimilarityModel:
    """Train from packed word matrices (one row per encoded record)."""
    cfg = cfg or TrainConfig()
    normal_words = np.ascontiguousarray(normal_words, dtype=np.uint8)
    shuf_words = np.ascontiguousarray(shuf_words, dtype=np.uint8)
    if normal_words.ndim != 2 or shuf_words.ndim != 2 or normal_words.shape[0] == 0 or shuf_words.shape[0] == 0:
        raise ValueError("both encoded sets must be non-empty 2-D packed matrices")
    if normal_words.shape[1] != shuf_words.shape[1]:
        raise DimensionError(
            f"packed widths differ: {normal_words.shape[1]} != {shuf_words.shape[1]}"
        )

    s_norm = _column_sums(normal_words, dim)
    s_shuf = _column_sums(shuf_words, dim)
    nsq_n = float(np.dot(s_norm, s_norm))
    nsq_s = float(np.dot(s_shuf, s_shuf))
    pc_norm = POPCOUNT_TABLE[normal_words].sum(axis=1).astype(np.float64)
    pc_shuf = POPCOUNT_TABLE[shuf_words].sum(axis=1).astype(np.float64)

    stats: list[int] = []
    for _ in range(cfg.epochs):
        updates, nsq_n, nsq_s = _epoch_pass(
            normal_words, pc_norm, s_norm, s_shuf, nsq_n, nsq_s,
            cfg.alpha, dim, _BIT_POS, _BIT_CNT,
        )
        if cfg.symmetric_updates:
            mirrored, nsq_s, nsq_n = _epoch_pass(
                shuf_words, pc_shuf, s_shuf, s_norm, nsq_s, nsq_n,
                cfg.alpha, dim, _BIT_POS, _BIT_CNT,
            )
            updates += mirrored
        stats.append(int(updates))

    return SimilarityModel(
        s_norm=RealHypervector(dim, s_norm),
        s_shuf=RealHypervector(dim, s_shuf),
        config=cfg,
        training_stats=stats,
    )


def train(
    normal_enc: Sequence[BitHypervector],
    shuf_enc: Sequence[BitHypervector],
    cfg: TrainConfig | None = None,
) -> SimilarityModel:
    """Train from sequences of encoded hypervectors (see module docstring)."""
    normal_words, dim_n = _stack_words(normal_enc)
    shuf_words, dim_s = _stack_words(shuf_enc)
    if dim_n != dim_s:
        raise DimensionError(f"dimension mismatch: {dim_n} != {dim_s}")
    return train_packed(normal_words, shuf_words, dim_n, cfg)


def score(model: SimilarityModel, hv: BitHypervector) -> tuple[float, float]:
    """Cosine similarities of one record against (s_norm, s_shuf)."""
    return (
        cosine_similarity(hv, model.s_norm),
        cosine_similarity(hv, model.s_shuf),
    )


def classify(model: SimilarityModel, hv: BitHypervector) -> ClassifyResult:
    """Decide normal/anomalous for one record.

    Comparative mode: normal iff sim_norm >= sim_shuf (ties break normal).
    Absolute mode: normal iff sim_norm > threshold (strict).
    """
    sim_n, sim_s = score(model, hv)
    if model.config.mode == MODE_ABSOLUTE:
        normal = sim_n > model.config.threshold
    else:
        normal = sim_n >= sim_s
    return ClassifyResult(LABEL_NORMAL if normal else LABEL_ANOMALOUS, sim_n, sim_s)


def _sims_against(words: np.ndarray, dim: int, s: np.ndarray) -> np.ndarray:
    """Batch cosine of packed rows against one real vector."""
    nsq = float(np.dot(s, s))
    n = words.shape[0]
    sims = np.zeros(n, dtype=np.float64)
    if nsq <= 0.0:
        return sims
    pc = POPCOUNT_TABLE[words].sum(axis=1).astype(np.float64)
    for start in range(0, n, 2048):
        chunk = words[start : start + 2048]
        bits = np.unpackbits(chunk, axis=1)[:, :dim].astype(np.float64)
        sims[start : start + 2048] = bits @ s
    nonzero = pc > 0
    sims[nonzero] /= np.sqrt(pc[nonzero] * nsq)
    sims[~nonzero] = 0.0
    return sims


def score_batch(model: SimilarityModel, words: np.ndarray, dim: int | None = None):
    """Similarities of many packed records: (sims_norm, sims_shuf)."""
    dim = model.dim if dim is None else dim
    if dim != model.dim:
        raise DimensionError(f"dimension mismatch: {dim} != {model.dim}")
    words = np.ascontiguousarray(words, dtype=np.uint8)
    return (
        _sims_against(words, dim, model.s_norm.values),
        _sims_against(words, dim, model.s_shuf.values),
    )


def classify_batch(
    model: SimilarityModel,
    words: np.ndarray,
    dim: int | None = None,
    mode: str | None = None,
    threshold: float | None = None,
):
    """Vectorized classify: returns (labels, sims_norm, sims_shuf).

    ``mode``/``threshold`` default to the model's training config.
    """
    mode = model.config.mode if mode is None else mode
    threshold = model.config.threshold if threshold is None else threshold
    sims_n, sims_s = score_batch(model, words, dim)
    if mode == MODE_ABSOLUTE:
        if threshold is None or not math.isfinite(threshold):
            raise ValueError("absolute mode requires a finite threshold")
        normal = sims_n > threshold
    elif mode == MODE_COMPARATIVE:
        normal = sims_n >= sims_s
    else:
        raise ValueError(f"unknown mode {mode!r}")
    labels = np.where(normal, LABEL_NORMAL, LABEL_ANOMALOUS).astype(np.int8)
    return labels, sims_n, sims_s
