"""grayfuzz: gray image extraction from Gaussian-noise-corrupted scenes.

Fifteen histogram auto-thresholding methods are fused - numerically and by
per-pixel majority vote - into training data for a fuzzy rule base that
restores the image content, evaluated with MAE/MSE/SNR/PSNR.
"""

from .image_core import (
    GrayImage,
    Histogram,
    NoiseSpec,
    RegionLabeling,
    PartitionVerdict,
    PgmError,
    MalformedHeaderError,
    UnsupportedMaxvalError,
    TruncatedRasterError,
    add_gaussian_noise,
    bimodal_phantom,
    histogram,
    load_image,
    load_pgm,
    range_predicate,
    round_half_up,
    save_pgm,
    two_level_phantom,
    validate_partition,
)
from .thresholding import (
    BinaryMask,
    ThresholdEntry,
    ThresholdFailure,
    ThresholdMethod,
    ThresholdReport,
    METHOD_ORDER,
    binarize,
    compute_threshold,
    fuse_decision_level,
    fuse_feature_level,
    threshold_report,
)
from .fuzzy import (
    DefuzzResult,
    FuzzyOutput,
    FuzzyPartition,
    FuzzyRule,
    MembershipFunction,
    RuleBase,
    build_partition,
    combine,
    defuzzify,
    generate_rules,
    infer,
    membership,
)
from .pipeline import (
    ExtractionResult,
    PipelineConfig,
    extract,
    fuzzify_image,
    neighborhood_mean,
    two_level_image,
)
from .metrics import MetricsRecord, compare, format_metric
from .cli import BenchmarkSpec, BenchmarkResult, run_benchmark, run_single

__version__ = "0.1.0"
