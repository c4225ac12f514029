"""hdx: hyperdimensional one-class anomaly detection for NSL-KDD records."""

from .core import (
    BitHypervector,
    DimensionError,
    IntAccumulator,
    RealHypervector,
    SeededRng,
    accumulate,
    axpy,
    binarize_majority,
    cosine_similarity,
    hamming,
    popcount,
    random_hv,
    xor_bind,
)
from .encoder import (
    EncoderConfig,
    EncoderModel,
    build_base_table,
    build_level_ladder,
    encode_dataset,
    encode_packed,
    encode_record,
    quantize,
)
from .dataset import (
    LABEL_ANOMALOUS,
    LABEL_NORMAL,
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
    normalize_record,
)
from .oneclass import (
    ClassifyResult,
    SimilarityModel,
    TrainConfig,
    classify,
    classify_batch,
    init_similarity,
    score,
    score_batch,
    train,
    train_packed,
)
from .evaluate import (
    BaselineReport,
    ConfusionMatrix,
    Metrics,
    SweepResult,
    baseline_report,
    compute_metrics,
    threshold_sweep,
)

__version__ = "0.1.0"
