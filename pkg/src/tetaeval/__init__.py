"""Tracking evaluation toolkit.

Local-cluster tracking metric (localization / association / classification
scores with incomplete- and complete-annotation modes), HOTA and CLEAR-MOT
baselines, synthetic perturbations, and a reproducible CLI.
"""

__version__ = "0.1.0"

from .assignment import (
    Assignment,
    CostMatrix,
    brute_force_assignment,
    iou,
    iou_matrix,
    solve_max_assignment,
)
from .backend import backend_name
from .baselines import ClearReport, HotaReport, clear_evaluate, hota_evaluate
from .harness import (
    ComparisonTable,
    OverlapCdf,
    PerturbSpec,
    compare_metrics,
    copy_paste_tracks,
    fragment_tracks,
    inject_class_noise,
    merge_tail_classes,
    overlap_cdf,
    temporal_class_correction,
)
from .ingest import (
    IngestOptions,
    ParseError,
    parse,
    sniff_format,
    top_k_filter,
    write_canonical,
    write_cocovid,
    write_mot_csv,
)
from .model import (
    BBox,
    CategoryEntry,
    CategoryTable,
    Dataset,
    Frame,
    GtBox,
    PredBox,
    Sequence,
    ValidationReport,
    canonicalize,
    gt_track_counts,
    merge_gt_pred,
    validate_dataset,
)
from .teta import (
    EvalConfig,
    LocCounts,
    ClsCounts,
    MatchResult,
    MatchedPair,
    TetaReport,
    association_scores,
    build_clusters,
    classification_scores,
    clusters_for_match,
    compose_teta,
    evaluate,
    frequency_groups,
    localization_scores,
    match_sequence,
    to_percent,
)

__all__ = [
    "Assignment",
    "BBox",
    "CategoryEntry",
    "CategoryTable",
    "ClearReport",
    "ClsCounts",
    "ComparisonTable",
    "CostMatrix",
    "Dataset",
    "EvalConfig",
    "Frame",
    "GtBox",
    "HotaReport",
    "IngestOptions",
    "LocCounts",
    "MatchResult",
    "MatchedPair",
    "OverlapCdf",
    "ParseError",
    "PerturbSpec",
    "PredBox",
    "Sequence",
    "TetaReport",
    "ValidationReport",
    "association_scores",
    "backend_name",
    "brute_force_assignment",
    "build_clusters",
    "canonicalize",
    "classification_scores",
    "clear_evaluate",
    "clusters_for_match",
    "compare_metrics",
    "compose_teta",
    "copy_paste_tracks",
    "evaluate",
    "fragment_tracks",
    "frequency_groups",
    "gt_track_counts",
    "hota_evaluate",
    "inject_class_noise",
    "iou",
    "iou_matrix",
    "localization_scores",
    "match_sequence",
    "merge_gt_pred",
    "merge_tail_classes",
    "overlap_cdf",
    "parse",
    "sniff_format",
    "solve_max_assignment",
    "temporal_class_correction",
    "to_percent",
    "top_k_filter",
    "validate_dataset",
    "write_canonical",
    "write_cocovid",
    "write_mot_csv",
]
