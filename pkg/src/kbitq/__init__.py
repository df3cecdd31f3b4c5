"""kbitq: blockwise k-bit weight quantization toolkit.

Codebook data types (int, minifloat, dynamic exponent, quantile), blockwise
absmax quantization with optional centering, outlier-aware mixed precision,
bit-cost accounting, packed tensor serialization, and scaling-curve
analysis over (total model bits, metric) observations.
"""

from .accounting import (
    BitsBreakdown,
    ErrorReport,
    bits_per_param,
    error_metrics,
    payload_sections,
    pearson_correlation,
    total_model_bits,
)
from .codebooks import (
    Codebook,
    CodebookKind,
    DynamicSpec,
    FloatSpec,
    QuantileSpec,
    build_dynamic_codebook,
    build_float_codebook,
    build_int_codebook,
    build_quantile_codebook,
    build_uint_codebook,
    default_exponent_bits,
    estimate_quantiles,
    heuristic_exponent_bits,
)
from .outliers import LayerChain, OutlierSet, detect_outlier_dims, quantize_mixed
from .quantizer import (
    QuantConfig,
    QuantizedTensor,
    codebook_for,
    dequantize_tensor,
    lookup_index,
    lookup_indices,
    pack_indices,
    quantize_tensor,
    reconstruct_codebook,
    unpack_indices,
)
from .scaling import (
    MetricKind,
    ScalingCurve,
    ScalingRecord,
    fit_curves,
    parallelism_offsets,
    pareto_optimal_precision,
    read_records_csv,
    scaling_report,
)
from .store import (
    TensorContainer,
    read_container,
    read_kbq,
    write_container,
    write_kbq,
)
from .synth import make_tensor

__version__ = "0.1.0"

__all__ = [
    "BitsBreakdown",
    "Codebook",
    "CodebookKind",
    "DynamicSpec",
    "ErrorReport",
    "FloatSpec",
    "LayerChain",
    "MetricKind",
    "OutlierSet",
    "QuantConfig",
    "QuantileSpec",
    "QuantizedTensor",
    "ScalingCurve",
    "ScalingRecord",
    "TensorContainer",
    "bits_per_param",
    "build_dynamic_codebook",
    "build_float_codebook",
    "build_int_codebook",
    "build_quantile_codebook",
    "build_uint_codebook",
    "codebook_for",
    "default_exponent_bits",
    "dequantize_tensor",
    "detect_outlier_dims",
    "error_metrics",
    "estimate_quantiles",
    "fit_curves",
    "heuristic_exponent_bits",
    "lookup_index",
    "lookup_indices",
    "make_tensor",
    "pack_indices",
    "parallelism_offsets",
    "pareto_optimal_precision",
    "payload_sections",
    "pearson_correlation",
    "quantize_mixed",
    "quantize_tensor",
    "read_container",
    "read_kbq",
    "read_records_csv",
    "reconstruct_codebook",
    "scaling_report",
    "total_model_bits",
    "unpack_indices",
    "write_container",
    "write_kbq",
]
