"""Detection metrics, threshold sweeps, and the published-baseline comparison.

The positive class for precision/recall is "anomalous" (detection
convention); accuracy is class-symmetric. Published accuracies from the
original NSL-KDD comparison are embedded as constants so a run can report
its deltas without re-running any baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import LABEL_ANOMALOUS, LABEL_NORMAL
from .oneclass import SimilarityModel, _sims_against, _stack_words

__all__ = [
    "BASELINE_ROWS",
    "TRAIN_PLUS_TARGET_PCT",
    "BaselineReport",
    "BaselineRow",
    "ConfusionMatrix",
    "Metrics",
    "SweepPoint",
    "SweepResult",
    "baseline_report",
    "compute_metrics",
    "default_grid",
    "threshold_sweep",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: ConfusionMatrix


def compute_metrics(predictions, labels) -> Metrics:
    """Standard binary metrics with anomalous (=1) as the positive class.

    Precision, recall, and F1 fall back to 0.0 when their denominator is 0.
    """
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    if pred.shape != lab.shape or pred.ndim != 1:
        raise ValueError(f"shape mismatch: predictions {pred.shape}, labels {lab.shape}")
    if pred.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    pos_pred = pred == LABEL_ANOMALOUS
    pos_lab = lab == LABEL_ANOMALOUS
    tp = int(np.sum(pos_pred & pos_lab))
    fp = int(np.sum(pos_pred & ~pos_lab))
    fn = int(np.sum(~pos_pred & pos_lab))
    tn = int(np.sum(~pos_pred & ~pos_lab))
    total = tp + fp + tn + fn
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(
        accuracy=(tp + tn) / total,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn),
    )


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    metrics: Metrics


@dataclass(frozen=True)
class SweepResult:
    points: list[SweepPoint]
    best_threshold: float
    best_accuracy: float


def default_grid(scores: np.ndarray, count: int = 101) -> np.ndarray:
    """Evenly spaced thresholds over the observed [min, max] score range."""
    return np.linspace(float(np.min(scores)), float(np.max(scores)), count)


def threshold_sweep(
    model: SimilarityModel,
    encoded,
    labels,
    grid=None,
) -> SweepResult:
    """Absolute-threshold sweep over sim_norm scores.

    At threshold t a record is normal iff its sim_norm score is strictly
    greater than t. ``encoded`` may be a sequence of BitHypervector or a
    packed (N, words) uint8 matrix. The best threshold is the first grid
    point reaching maximum accuracy.
    """
    if isinstance(encoded, np.ndarray):
        words = np.ascontiguousarray(encoded, dtype=np.uint8)
    else:
        words, dim = _stack_words(encoded)
        if dim != model.dim:
            raise ValueError(f"dimension mismatch: {dim} != {model.dim}")
    lab = np.asarray(labels)
    if lab.size != words.shape[0]:
        raise ValueError(f"{words.shape[0]} records but {lab.size} labels")
    scores = _sims_against(words, model.dim, model.s_norm.values)
    if grid is None:
        grid = default_grid(scores)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("threshold grid is empty")

    points = []
    best_idx = 0
    best_acc = -1.0
    for k, t in enumerate(grid):
        pred = np.where(scores > t, LABEL_NORMAL, LABEL_ANOMALOUS).astype(np.int8)
        m = compute_metrics(pred, lab)
        points.append(SweepPoint(threshold=float(t), metrics=m))
        if m.accuracy > best_acc:
            best_acc = m.accuracy
            best_idx = k
    return SweepResult(
        points=points,
        best_threshold=float(grid[best_idx]),
        best_accuracy=best_acc,
    )


@dataclass(frozen=True)
class BaselineRow:
    model_name: str
    acc_test_plus: float  # percent
    acc_test_21: float  # percent


# Published accuracies (percent) on KDDTest+ / KDDTest-21.
BASELINE_ROWS: tuple[BaselineRow, ...] = (
    BaselineRow("J48", 81.05, 63.97),
    BaselineRow("Naive Bayes", 76.56, 55.77),
    BaselineRow("NB Tree", 82.02, 66.16),
    BaselineRow("Random Forest", 80.67, 63.26),
    BaselineRow("Random Tree", 81.59, 58.51),
    BaselineRow("Multi-layer Perceptron", 77.41, 57.34),
    BaselineRow("SVM", 69.52, 42.29),
    BaselineRow("Proposed Method", 86.21, 81.75),
)

# Published full-train-split accuracy (percent) for the proposed method.
TRAIN_PLUS_TARGET_PCT = 91.55

SPLIT_TRAIN_PLUS = "train+"
SPLIT_TEST_PLUS = "test+"
SPLIT_TEST_21 = "test-21"
_KNOWN_SPLITS = (SPLIT_TRAIN_PLUS, SPLIT_TEST_PLUS, SPLIT_TEST_21)


@dataclass(frozen=True)
class BaselineReport:
    """Published rows plus this run's accuracies (percent) and deltas."""

    measured_pct: dict[str, float]
    deltas_pct: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "baselines": [
                {
                    "model": row.model_name,
                    "acc_test_plus": row.acc_test_plus,
                    "acc_test_21": row.acc_test_21,
                }
                for row in BASELINE_ROWS
            ],
            "train_plus_target": TRAIN_PLUS_TARGET_PCT,
            "measured": dict(sorted(self.measured_pct.items())),
            "delta_vs_published": dict(sorted(self.deltas_pct.items())),
        }

    def to_text(self) -> str:
        mp = self.measured_pct.get(SPLIT_TEST_PLUS)
        m21 = self.measured_pct.get(SPLIT_TEST_21)
        lines = ["baseline comparison (accuracy %)"]
        lines.append(f"{'model':<24}{'test+':>8}{'test-21':>9}")
        for row in BASELINE_ROWS:
            lines.append(f"{row.model_name:<24}{row.acc_test_plus:>8.2f}{row.acc_test_21:>9.2f}")
        lines.append(
            f"{'this run':<24}"
            + (f"{mp:>8.2f}" if mp is not None else f"{'-':>8}")
            + (f"{m21:>9.2f}" if m21 is not None else f"{'-':>9}")
        )
        if SPLIT_TRAIN_PLUS in self.measured_pct:
            label = f"train+ (target {TRAIN_PLUS_TARGET_PCT:.2f})"
            lines.append(f"{label:<24}{self.measured_pct[SPLIT_TRAIN_PLUS]:>8.2f}")
        for split in _KNOWN_SPLITS:
            if split in self.deltas_pct:
                lines.append(f"delta vs published ({split}): {self.deltas_pct[split]:+.2f}")
        return "\n".join(lines) + "\n"


def baseline_report(measured: Mapping[str, float]) -> BaselineReport:
    """Compare measured accuracies (fractions in [0, 1]) with published numbers.

    ``measured`` maps split names ("train+", "test+", "test-21") to accuracy
    fractions; at least one known split is required.
    """
    known = {k: v for k, v in measured.items() if k in _KNOWN_SPLITS}
    if not known:
        raise ValueError(f"need at least one of {_KNOWN_SPLITS}, got {list(measured)}")
    measured_pct = {k: 100.0 * v for k, v in known.items()}
    published = {
        SPLIT_TRAIN_PLUS: TRAIN_PLUS_TARGET_PCT,
        SPLIT_TEST_PLUS: BASELINE_ROWS[-1].acc_test_plus,
        SPLIT_TEST_21: BASELINE_ROWS[-1].acc_test_21,
    }
    deltas = {k: measured_pct[k] - published[k] for k in measured_pct}
    return BaselineReport(measured_pct=measured_pct, deltas_pct=deltas)
