"""Outlier-aware mixed precision for chains of linear layers.

Hidden units whose weight columns have unusually large standard deviation
produce outlier features downstream. Detection ranks the per-unit weight
stds of each layer and marks the top fraction; the matching input rows of
the next layer are then stored at 16 bits while everything else is
quantized to k bits. Detection is input-independent, so the memory
footprint is constant across tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebooks import Codebook, CodebookKind
from .errors import (
    DimensionError,
    EmptyInputError,
    InvalidFractionError,
    InvalidIndexError,
)
from .quantizer import (
    QuantConfig,
    QuantizedTensor,
    _check_input,
    _check_codebook_config,
    _encode_blocks,
    pack_indices,
    to_float16,
)


class LayerChain:
    """An ordered sequence of 2-D weight matrices W_i of shape (h_i, o_i).

    Consecutive layers must chain: the o_i output units of W_i feed the
    h_{i+1} input dimensions of W_{i+1}.
    """

    def __init__(self, weights) -> None:
        mats = [np.asarray(w, dtype=np.float64) for w in weights]
        if not mats:
            raise EmptyInputError("layer chain must contain at least one matrix")
        for i, w in enumerate(mats):
            if w.ndim != 2:
                raise DimensionError(f"layer {i} is not 2-D (shape {w.shape})")
        for i in range(len(mats) - 1):
            if mats[i].shape[1] != mats[i + 1].shape[0]:
                raise DimensionError(
                    f"layer {i} has {mats[i].shape[1]} outputs but layer {i + 1} "
                    f"expects {mats[i + 1].shape[0]} inputs"
                )
        self.weights = tuple(mats)

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


@dataclass(frozen=True)
class OutlierSet:
    """Per-layer sorted input-dimension indices held at 16-bit."""

    per_layer: tuple[np.ndarray, ...]
    fraction: float

    def __getitem__(self, i: int) -> np.ndarray:
        return self.per_layer[i]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def detect_outlier_dims(chain: LayerChain, p: float) -> OutlierSet:
    """Mark the top-p fraction of hidden units of each layer by weight std.

    Layer i's units are ranked by the population std of their incoming
    weights (columns of W_i); the winners become the 16-bit input
    dimensions of layer i+1. The first layer receives no treatment. Ties
    are broken toward the lower index and the count is round-half-up of
    p * o_i, so the result is deterministic.
    """
    if isinstance(chain, (list, tuple)):
        chain = LayerChain(chain)
    if not 0.0 <= p < 1.0:
        raise InvalidFractionError(f"outlier fraction must be in [0, 1), got {p}")
    per_layer = [np.zeros(0, dtype=np.int32)]
    for w in chain.weights[:-1] if len(chain) > 1 else []:
        stds = w.std(axis=0)
        count = _round_half_up(p * stds.size)
        # stable sort on descending std keeps the lower index on ties
        order = np.argsort(-stds, kind="stable")
        per_layer.append(np.sort(order[:count]).astype(np.int32))
    return OutlierSet(per_layer=tuple(per_layer), fraction=float(p))


def quantize_mixed(W, J, codebook: Codebook, config: QuantConfig) -> QuantizedTensor:
    """Quantize a matrix with the input rows in J kept verbatim at 16-bit.

    Outlier rows are excluded from block statistics entirely, so a single
    large row cannot inflate any block constant. With J empty this reduces
    to plain quantization.
    """
    arr = _check_input(W)
    if arr.ndim != 2:
        raise DimensionError(f"mixed-precision quantization needs a 2-D matrix, got {arr.shape}")
    _check_codebook_config(codebook, config)

    dims = np.unique(np.asarray(J, dtype=np.int64)).astype(np.int32)
    if dims.size and (dims[0] < 0 or dims[-1] >= arr.shape[0]):
        raise InvalidIndexError(
            f"outlier dims must be in [0, {arr.shape[0]}), got {dims[dims >= arr.shape[0]]}"
            if dims[-1] >= arr.shape[0]
            else f"outlier dims must be non-negative, got {dims[dims < 0]}"
        )

    keep = np.ones(arr.shape[0], dtype=bool)
    keep[dims] = False
    rest = arr[keep].ravel()

    if rest.size:
        indices, absmax16, means16 = _encode_blocks(rest, codebook, config)
        packed = pack_indices(indices, config.bits)
    else:
        packed, absmax16, means16 = b"", np.zeros(0, dtype=np.float16), None
        if config.centered:
            means16 = np.zeros(0, dtype=np.float16)

    return QuantizedTensor(
        shape=tuple(arr.shape),
        config=config,
        packed_indices=packed,
        n_quantized=int(rest.size),
        absmax=absmax16,
        means=means16,
        outlier_dims=dims,
        outlier_rows=to_float16(arr[dims]).reshape(dims.size, arr.shape[1] if dims.size else 0),
        codebook_values=codebook.values.copy() if config.kind is CodebookKind.QUANTILE else None,
    )
