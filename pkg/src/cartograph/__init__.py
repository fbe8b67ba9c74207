"""Dataset cartography from training dynamics.

Capture per-epoch gold-label probabilities from any training loop through
the ``cartograph-dynlog`` line format, turn them into per-instance
confidence / variability / correctness, classify and select instances
(easy / hard / ambiguous), rank mislabel candidates, benchmark detection
against planted label noise, and render data maps -- all runnable on a
laptop thanks to a bundled convex text classifier.
"""

from ._version import __version__
from .carto import (
    REGIONS,
    STRATEGIES,
    RegionAssignment,
    SelectionSpec,
    classify,
    rank_hard_to_learn,
    read_selection,
    select,
    subset_count,
    write_selection,
)
from .datasets import make_cluster_dataset, make_demo_corpus
from .dynamics import (
    DynamicsMetrics,
    MetricsTable,
    compute_all,
    confidence,
    correctness,
    variability,
)
from .dynlog import (
    LogWriter,
    RunLog,
    RunMeta,
    SnapshotRecord,
    ValidationReport,
    append_snapshot,
    open_writer,
    parse_log,
    utc_now_iso,
    validate,
    validate_file,
    write_header,
    write_log,
)
from .errors import CartographError, DatasetError, LogFormatError, TrainingDivergedError
from .experiment import run_experiment
from .noisebench import (
    DetectionReport,
    NoiseSpec,
    eval_detection,
    inject_noise,
    permutation_pvalue,
    run_benchmark,
)
from .render import CurveStyle, MapStyle, map_transform, render_curves, render_map
from .report import ExperimentManifest, RunResult, format_report
from .trainer import (
    CurveLog,
    Dataset,
    Instance,
    ModelState,
    SoftmaxTextClassifier,
    TrainConfig,
    cross_entropy_loss_and_grad,
    evaluate,
    featurize,
    instances_to_matrix,
    load_dataset,
    load_model,
    predict_proba,
    save_model,
    softmax,
    train,
    write_dataset,
    zero_model,
)

__all__ = [
    "__version__",
    "CartographError",
    "CurveLog",
    "CurveStyle",
    "Dataset",
    "DatasetError",
    "DetectionReport",
    "DynamicsMetrics",
    "ExperimentManifest",
    "Instance",
    "LogFormatError",
    "LogWriter",
    "MapStyle",
    "MetricsTable",
    "ModelState",
    "NoiseSpec",
    "REGIONS",
    "RegionAssignment",
    "RunLog",
    "RunMeta",
    "RunResult",
    "STRATEGIES",
    "SelectionSpec",
    "SnapshotRecord",
    "SoftmaxTextClassifier",
    "TrainConfig",
    "TrainingDivergedError",
    "ValidationReport",
    "append_snapshot",
    "classify",
    "compute_all",
    "confidence",
    "correctness",
    "cross_entropy_loss_and_grad",
    "eval_detection",
    "evaluate",
    "featurize",
    "format_report",
    "inject_noise",
    "instances_to_matrix",
    "load_dataset",
    "load_model",
    "make_cluster_dataset",
    "make_demo_corpus",
    "map_transform",
    "open_writer",
    "parse_log",
    "permutation_pvalue",
    "predict_proba",
    "rank_hard_to_learn",
    "read_selection",
    "render_curves",
    "render_map",
    "run_benchmark",
    "run_experiment",
    "save_model",
    "select",
    "softmax",
    "subset_count",
    "train",
    "utc_now_iso",
    "validate",
    "validate_file",
    "variability",
    "write_dataset",
    "write_header",
    "write_log",
    "write_selection",
    "zero_model",
]
