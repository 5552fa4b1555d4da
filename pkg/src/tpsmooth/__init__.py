"""Temporal probability smoothing for video segmentation, with a
stability-metrics harness and a synthetic benchmark generator."""

from .errors import (
    BadMagicError,
    ConfigError,
    FormatError,
    HeaderError,
    InvalidInputError,
    SceneError,
    SchemaError,
    SequencingError,
    ToolError,
    TruncatedFileError,
    UndefinedTestError,
    UnsupportedFormatError,
    ValueRangeError,
    VersionMismatchError,
)
from .grid import FlowField, GrayFrame, Mask, ScalarField, luminance, sigmoid_map, threshold_mask
from .flow import (
    FlowParams,
    MotionUncertaintyParams,
    estimate_flow,
    flow_residual,
    mean_flow_magnitude,
    motion_uncertainty,
    warp_backward,
)
from .smoother import (
    FrameResult,
    FusionParams,
    SmootherState,
    StepDiagnostics,
    blend_coefficient,
    entropy_map,
    fuse,
    parse_fusion_mode,
    run_sequence,
    smooth_step,
)
from .metrics import (
    FrameMetrics,
    UssWeights,
    boundary_f,
    dropout_indicator,
    evaluate_masks,
    extract_boundary,
    fill_uss,
    mask_iou,
    robust_normalize,
    summarize,
    temporal_iou,
    uss_series,
    warped_iou,
)
from .stats import PairedSample, WilcoxonResult, wilcoxon_signed_rank
from .formats import SequenceManifest

__version__ = "0.1.0"
