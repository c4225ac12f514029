"""Record-to-hypervector encoder.

Every feature index gets a random base hypervector; every quantization level
gets a level hypervector from a ladder built by progressively flipping a fixed
number of distinct random bits, so nearby levels stay similar and distant ones
drift toward orthogonality. A record is encoded by XOR-binding each feature's
base vector with the level vector of its quantized value, summing the bound
vectors element-wise, and majority-binarizing the sums.

All draws come from one SeededRng: base table first (one hypervector per
feature), then the ladder (initial vector, then one flip-position draw per
step). Rebuilding a model from the same config therefore reproduces it
bit-for-bit, which is how persisted models regenerate their tables from just
the seed.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from .core import (
    BitHypervector,
    DimensionError,
    SeededRng,
    random_hv,
    words_for,
)

__all__ = [
    "EncoderConfig",
    "EncoderModel",
    "build_base_table",
    "build_level_ladder",
    "encode_dataset",
    "encode_packed",
    "encode_record",
    "quantize",
]

# Rows per chunk in the batched encoder; bounds peak memory at roughly
# chunk_rows * dim * 3 bytes.
_CHUNK_ROWS = 1024


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder hyperparameters: dimensionality, level count, feature count, seed."""

    dim: int
    levels: int
    n_features: int
    seed: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"invalid dimension {self.dim}")
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        if self.dim < self.levels:
            raise ValueError(
                f"dim ({self.dim}) must be >= levels ({self.levels}) "
                "so each ladder step flips at least one bit"
            )
        if self.n_features < 1:
            raise ValueError(f"n_features must be >= 1, got {self.n_features}")


def build_base_table(config: EncoderConfig, rng: SeededRng) -> list[BitHypervector]:
    """One independent random hypervector per feature index."""
    return [random_hv(config.dim, rng) for _ in range(config.n_features)]


def build_level_ladder(config: EncoderConfig, rng: SeededRng) -> list[BitHypervector]:
    """Level hypervectors L_1..L_k.

    L_1 is random; each later level flips exactly dim // levels distinct
    positions of its predecessor (positions drawn without replacement,
    independently per step). Consecutive levels are therefore at exact
    Hamming distance dim // levels.
    """
    dim = config.dim
    flips = dim // config.levels
    ladder = [random_hv(dim, rng)]
    for _ in range(config.levels - 1):
        positions = rng.gen.choice(dim, size=flips, replace=False)
        mask_bits = np.zeros(dim, dtype=np.uint8)
        mask_bits[positions] = 1
        mask = np.packbits(mask_bits)
        ladder.append(BitHypervector(dim, np.bitwise_xor(ladder[-1].words, mask)))
    return ladder


def quantize(value: float, levels: int) -> int:
    """Map a normalized value to its level index: min(floor(v*levels), levels-1).

    Out-of-range and non-finite inputs are clamped into [0, 1] first, so the
    function is total.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if not value >= 0.0:  # also catches NaN
        return 0
    if value >= 1.0:
        return levels - 1
    return min(int(value * levels), levels - 1)


def _quantize_matrix(rows: np.ndarray, levels: int) -> np.ndarray:
    clipped = np.clip(rows, 0.0, 1.0)
    return np.minimum((clipped * levels).astype(np.int64), levels - 1)


class EncoderModel:
    """Immutable base table + level ladder + the normalization specs they pair with.

    Thread-safe to share once built; the unpacked bound-vector cache is
    computed lazily (a duplicated build under a race is benign).
    """

    def __init__(
        self,
        config: EncoderConfig,
        base_table: list[BitHypervector],
        level_ladder: list[BitHypervector],
        feature_specs=None,
    ):
        if len(base_table) != config.n_features:
            raise ValueError(
                f"base table has {len(base_table)} entries, expected {config.n_features}"
            )
        if len(level_ladder) != config.levels:
            raise ValueError(
                f"level ladder has {len(level_ladder)} entries, expected {config.levels}"
            )
        for hv in (*base_table, *level_ladder):
            if hv.dim != config.dim:
                raise DimensionError(
                    f"table hypervector has dim {hv.dim}, expected {config.dim}"
                )
        self.config = config
        self.base_table = base_table
        self.level_ladder = level_ladder
        self.feature_specs = feature_specs
        self._bound_bits: np.ndarray | None = None

    @classmethod
    def build(cls, config: EncoderConfig, feature_specs=None) -> "EncoderModel":
        """Deterministically build tables from config.seed (stream 0).

        Draw order is fixed: base table first, then the ladder.
        """
        rng = SeededRng(config.seed, stream=0)
        base = build_base_table(config, rng)
        ladder = build_level_ladder(config, rng)
        return cls(config, base, ladder, feature_specs)

    def bound_bits(self) -> np.ndarray:
        """Unpacked XOR-bound vectors, shape (n_features, levels, dim) uint8."""
        if self._bound_bits is None:
            base = np.stack([hv.words for hv in self.base_table])
            ladder = np.stack([hv.words for hv in self.level_ladder])
            bound = np.bitwise_xor(base[:, None, :], ladder[None, :, :])
            self._bound_bits = np.unpackbits(bound, axis=2)[:, :, : self.config.dim]
        return self._bound_bits

    def to_state(self) -> dict:
        """Config plus raw packed bit arrays, for persistence or inspection."""
        return {
            "dim": self.config.dim,
            "levels": self.config.levels,
            "n_features": self.config.n_features,
            "seed": self.config.seed,
            "base_table": [hv.words.tobytes().hex() for hv in self.base_table],
            "level_ladder": [hv.words.tobytes().hex() for hv in self.level_ladder],
        }

    @classmethod
    def from_state(cls, state: dict, feature_specs=None) -> "EncoderModel":
        config = EncoderConfig(
            dim=state["dim"],
            levels=state["levels"],
            n_features=state["n_features"],
            seed=state["seed"],
        )
        dim = config.dim

        def unhex(h: str) -> BitHypervector:
            return BitHypervector(dim, np.frombuffer(bytes.fromhex(h), dtype=np.uint8))

        base = [unhex(h) for h in state["base_table"]]
        ladder = [unhex(h) for h in state["level_ladder"]]
        return cls(config, base, ladder, feature_specs)


def _encode_chunk(model: EncoderModel, level_idx: np.ndarray) -> np.ndarray:
    """Encode pre-quantized level indices (C, n_features) to packed rows."""
    cfg = model.config
    bound = model.bound_bits()
    counts = np.zeros((level_idx.shape[0], cfg.dim), dtype=np.int16)
    for i in range(cfg.n_features):
        counts += bound[i, level_idx[:, i], :]
    threshold = (cfg.n_features + 1) // 2  # count >= n/2 for integer counts
    return np.packbits(counts >= threshold, axis=1)


def encode_packed(model: EncoderModel, rows, workers: int = 1) -> np.ndarray:
    """Encode a (N, n_features) matrix of normalized values to packed rows.

    Returns a (N, ceil(dim/8)) uint8 array, one packed hypervector per row.
    Rows are independent; with workers > 1 chunks are encoded across threads,
    producing bit-identical output to the sequential path.
    """
    cfg = model.config
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"record matrix must be 2-D, got shape {rows.shape}")
    if rows.shape[1] != cfg.n_features:
        raise DimensionError(
            f"records have {rows.shape[1]} features, encoder expects {cfg.n_features}"
        )
    finite = np.isfinite(rows).all(axis=1)
    if not finite.all():
        bad = int(np.nonzero(~finite)[0][0])
        raise ValueError(f"record {bad}: non-finite feature value")

    level_idx = _quantize_matrix(rows, cfg.levels)
    n = rows.shape[0]
    out = np.empty((n, words_for(cfg.dim)), dtype=np.uint8)
    starts = range(0, n, _CHUNK_ROWS)
    if workers > 1 and n > _CHUNK_ROWS:
        model.bound_bits()  # build the cache once before fanning out
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_encode_chunk, model, level_idx[s : s + _CHUNK_ROWS]): s
                for s in starts
            }
            for fut, s in futures.items():
                out[s : s + _CHUNK_ROWS] = fut.result()
    else:
        for s in starts:
            out[s : s + _CHUNK_ROWS] = _encode_chunk(model, level_idx[s : s + _CHUNK_ROWS])
    return out


def encode_record(model: EncoderModel, features) -> BitHypervector:
    """Encode one record of n_features normalized values."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 1 or arr.size != model.config.n_features:
        raise DimensionError(
            f"record has {arr.size} features, encoder expects {model.config.n_features}"
        )
    if not np.isfinite(arr).all():
        raise ValueError("record contains a non-finite feature value")
    packed = encode_packed(model, arr[None, :])
    return BitHypervector(model.config.dim, packed[0])


def encode_dataset(model: EncoderModel, records, workers: int = 1) -> list[BitHypervector]:
    """Encode many records, preserving order. Empty input gives an empty list."""
    rows = np.asarray(records, dtype=np.float64)
    if rows.size == 0:
        return []
    packed = encode_packed(model, rows, workers=workers)
    dim = model.config.dim
    return [BitHypervector(dim, packed[i]) for i in range(packed.shape[0])]
