"""Blockwise quantization and dequantization against a codebook.

The input tensor is flattened row-major and split into blocks. Each block
is optionally centered on its mean, divided by its absolute maximum, and
every element is mapped to the nearest code. Normalization constants and
means are stored as IEEE binary16, so a normalized value can land slightly
outside [-1, 1]; nearest-code lookup clamps it to an extreme code. Blocks
whose absolute maximum rounds to zero store the zero code everywhere,
which reconstructs them exactly.

All operations are pure and block-independent; results are deterministic
regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

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
    default_exponent_bits,
    _check_bits,
)
from .errors import (
    CorruptDataError,
    EmptyInputError,
    InvalidFractionError,
    InvalidSpecError,
    InvalidValueError,
    LengthError,
)

FLOAT16_MAX = 65504.0

_QUANTIZABLE_KINDS = (
    CodebookKind.INT,
    CodebookKind.FLOAT,
    CodebookKind.DYNAMIC,
    CodebookKind.QUANTILE,
)


@dataclass(frozen=True)
class QuantConfig:
    """Full description of a quantization method.

    block_size None means one block spanning the whole tensor. The outlier
    fraction is the share of input dimensions kept at 16 bits; it only
    takes effect through an explicit index set (see the outliers module)
    but always participates in bit accounting.
    """

    kind: CodebookKind
    bits: int
    block_size: int | None = None
    centered: bool = False
    outlier_fraction: float = 0.0
    exponent_bits: int | None = None

    def __post_init__(self) -> None:
        kind = CodebookKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in _QUANTIZABLE_KINDS:
            raise InvalidSpecError(f"cannot quantize with codebook kind {kind.value!r}")
        _check_bits(self.bits, low=3 if kind is CodebookKind.FLOAT else 2)
        if self.block_size is not None and self.block_size < 1:
            raise InvalidSpecError(f"block size must be >= 1, got {self.block_size}")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise InvalidFractionError(
                f"outlier fraction must be in [0, 1), got {self.outlier_fraction}"
            )
        if self.exponent_bits is not None and kind is not CodebookKind.FLOAT:
            raise InvalidSpecError("exponent_bits only applies to the float kind")


@dataclass(eq=False)
class QuantizedTensor:
    """Packed codes plus the per-block constants needed to decode them.

    indices cover the quantized (non-outlier) elements in row-major order;
    rows listed in outlier_dims are stored verbatim at 16-bit in
    outlier_rows. Quantile codebooks are data-dependent, so their values
    travel with the tensor.
    """

    shape: tuple[int, ...]
    config: QuantConfig
    packed_indices: bytes
    n_quantized: int
    absmax: np.ndarray
    means: np.ndarray | None
    outlier_dims: np.ndarray
    outlier_rows: np.ndarray
    codebook_values: np.ndarray | None = None

    @property
    def element_count(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    @property
    def block_size(self) -> int:
        return self.config.block_size or max(self.n_quantized, 1)

    @property
    def n_blocks(self) -> int:
        return -(-self.n_quantized // self.block_size) if self.n_quantized else 0

    def indices(self) -> np.ndarray:
        """Unpacked code indices, one per quantized element."""
        return unpack_indices(self.packed_indices, self.config.bits, self.n_quantized)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizedTensor):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return (a is None) == (b is None)
            return a.dtype == b.dtype and a.shape == b.shape and np.array_equal(a, b)

        return (
            self.shape == other.shape
            and self.config == other.config
            and self.packed_indices == other.packed_indices
            and self.n_quantized == other.n_quantized
            and same(self.absmax, other.absmax)
            and same(self.means, other.means)
            and same(self.outlier_dims, other.outlier_dims)
            and same(self.outlier_rows, other.outlier_rows)
            and same(self.codebook_values, other.codebook_values)
        )


def to_float16(x) -> np.ndarray:
    """Round to binary16 (round-to-nearest-even), saturating at +-65504."""
    y = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = y.astype(np.float16)
    overflow = np.isinf(out) & np.isfinite(y)
    if np.any(overflow):
        out = np.where(overflow, np.sign(y).astype(np.float16) * np.float16(FLOAT16_MAX), out)
    return out


def lookup_indices(codebook: Codebook, x) -> np.ndarray:
    """Nearest-code index for each element, ties toward the smaller index.

    Uses binary search over the sorted codes; out-of-range inputs clamp to
    an extreme code.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidValueError("cannot look up non-finite values")
    values = codebook.values
    j = np.searchsorted(values, arr)
    j = np.clip(j, 1, values.size - 1)
    take_left = (arr - values[j - 1]) <= (values[j] - arr)
    return np.where(take_left, j - 1, j)


def lookup_index(codebook: Codebook, x: float) -> int:
    """Scalar form of lookup_indices."""
    return int(lookup_indices(codebook, np.asarray(float(x))))


def pack_indices(indices, k: int) -> bytes:
    """Pack code indices into a little-endian bitstream, k bits each.

    Bits fill each byte LSB-first; the final byte is zero-padded.
    """
    _check_bits(k)
    arr = np.asarray(indices)
    if arr.size == 0:
        return b""
    if np.any(arr < 0) or np.any(arr >= 2**k):
        raise InvalidValueError(f"indices must be in [0, 2^{k})")
    bits = np.unpackbits(arr.astype(np.uint8)[:, None], axis=1, bitorder="little")[:, :k]
    return np.packbits(bits.ravel(), bitorder="little").tobytes()


def unpack_indices(data: bytes, k: int, count: int) -> np.ndarray:
    """Inverse of pack_indices: recover `count` k-bit indices."""
    _check_bits(k)
    if count == 0:
        return np.zeros(0, dtype=np.uint8)
    needed = -(-count * k // 8)
    if len(data) < needed:
        raise LengthError(f"need {needed} bytes for {count} {k}-bit indices, got {len(data)}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    bits = bits[: count * k].reshape(count, k).astype(np.uint16)
    weights = (1 << np.arange(k, dtype=np.uint16))
    return (bits * weights).sum(axis=1).astype(np.uint8)


def _block_layout(n: int, block_size: int | None):
    b = block_size or max(n, 1)
    starts = np.arange(0, n, b)
    counts = np.diff(np.append(starts, n))
    return starts, counts


def _encode_blocks(flat: np.ndarray, codebook: Codebook, config: QuantConfig):
    """Quantize a flat array; returns (indices, absmax16, means16)."""
    n = flat.size
    starts, counts = _block_layout(n, config.block_size)

    means16 = None
    shifted = flat
    if config.centered:
        means = np.add.reduceat(flat, starts) / counts
        means16 = to_float16(means)
        shifted = flat - np.repeat(means16.astype(np.float64), counts)

    absmax16 = to_float16(np.maximum.reduceat(np.abs(shifted), starts))
    c = np.repeat(absmax16.astype(np.float64), counts)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(c > 0, shifted / np.where(c > 0, c, 1.0), 0.0)
    indices = lookup_indices(codebook, normalized)
    indices = np.where(c > 0, indices, codebook.zero_index)
    return indices, absmax16, means16


def _check_input(t) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("cannot quantize an empty tensor")
    if not np.all(np.isfinite(arr)):
        raise InvalidValueError("tensor contains non-finite values")
    return arr


def _check_codebook_config(codebook: Codebook, config: QuantConfig) -> None:
    if codebook.kind is not config.kind or codebook.bits != config.bits:
        raise InvalidSpecError(
            f"codebook ({codebook.kind.value}, {codebook.bits}b) does not match "
            f"config ({config.kind.value}, {config.bits}b)"
        )


def quantize_tensor(t, codebook: Codebook, config: QuantConfig) -> QuantizedTensor:
    """Quantize a tensor of any shape with no outlier sidecar."""
    arr = _check_input(t)
    _check_codebook_config(codebook, config)
    indices, absmax16, means16 = _encode_blocks(arr.ravel(), codebook, config)
    return QuantizedTensor(
        shape=tuple(arr.shape),
        config=config,
        packed_indices=pack_indices(indices, config.bits),
        n_quantized=arr.size,
        absmax=absmax16,
        means=means16,
        outlier_dims=np.zeros(0, dtype=np.int32),
        outlier_rows=np.zeros((0, 0), dtype=np.float16),
        codebook_values=codebook.values.copy() if config.kind is CodebookKind.QUANTILE else None,
    )


def reconstruct_codebook(q: QuantizedTensor) -> Codebook:
    """Rebuild the codebook a tensor was quantized with.

    Int, float, and dynamic codebooks are regenerated from the config;
    quantile codebooks come from the values embedded in the tensor.
    """
    cfg = q.config
    if cfg.kind is CodebookKind.QUANTILE:
        if q.codebook_values is None:
            raise CorruptDataError("quantile tensor is missing its embedded codebook")
        return Codebook(CodebookKind.QUANTILE, cfg.bits, q.codebook_values)
    return _fixed_codebook(cfg)


def _fixed_codebook(config: QuantConfig) -> Codebook:
    if config.kind is CodebookKind.INT:
        return build_int_codebook(config.bits)
    if config.kind is CodebookKind.FLOAT:
        e = config.exponent_bits or default_exponent_bits(config.bits)
        return build_float_codebook(FloatSpec(config.bits, e))
    if config.kind is CodebookKind.DYNAMIC:
        return build_dynamic_codebook(DynamicSpec(config.bits))
    raise InvalidSpecError(f"no fixed codebook for kind {config.kind.value!r}")


def codebook_for(t, config: QuantConfig) -> Codebook:
    """Build the codebook a config calls for, estimating from `t` if needed.

    Quantile codebooks are estimated from the blockwise-normalized values
    of the tensor itself, i.e. from the distribution the lookup will
    actually see (for whole-tensor blocks this coincides with the
    absmax-normalized tensor).
    """
    if config.kind is not CodebookKind.QUANTILE:
        return _fixed_codebook(config)
    arr = _check_input(t).ravel()
    starts, counts = _block_layout(arr.size, config.block_size)
    shifted = arr
    if config.centered:
        means16 = to_float16(np.add.reduceat(arr, starts) / counts)
        shifted = arr - np.repeat(means16.astype(np.float64), counts)
    c = np.repeat(to_float16(np.maximum.reduceat(np.abs(shifted), starts)).astype(np.float64), counts)
    with np.errstate(divide="ignore", invalid="ignore"):
        sample = np.where(c > 0, shifted / np.where(c > 0, c, 1.0), 0.0)
    if not np.any(sample):
        raise InvalidValueError("cannot estimate a quantile codebook from an all-zero tensor")
    return build_quantile_codebook(QuantileSpec(config.bits, sample))


def dequantize_tensor(q: QuantizedTensor, codebook: Codebook | None = None) -> np.ndarray:
    """Decode a quantized tensor back to real values.

    Looks up each code, scales by the block constant, re-adds the block
    mean when present, and restores outlier rows from the sidecar. If no
    codebook is passed it is reconstructed from the tensor itself.
    """
    if codebook is None:
        codebook = reconstruct_codebook(q)
    else:
        _check_codebook_config(codebook, q.config)

    indices = q.indices()
    if indices.size and int(indices.max()) >= len(codebook):
        raise CorruptDataError(
            f"index {int(indices.max())} out of range for {len(codebook)}-code codebook"
        )
    starts, counts = _block_layout(q.n_quantized, q.config.block_size)
    if q.absmax.size != starts.size:
        raise CorruptDataError(
            f"expected {starts.size} block constants, found {q.absmax.size}"
        )
    decoded = codebook.values[indices] * np.repeat(q.absmax.astype(np.float64), counts)
    if q.means is not None:
        decoded = decoded + np.repeat(q.means.astype(np.float64), counts)

    if q.outlier_dims.size == 0:
        return decoded.reshape(q.shape)

    h = q.shape[0]
    out = np.empty(q.shape, dtype=np.float64)
    keep = np.ones(h, dtype=bool)
    keep[q.outlier_dims] = False
    out[keep] = decoded.reshape(int(keep.sum()), *q.shape[1:])
    out[q.outlier_dims] = q.outlier_rows.astype(np.float64).reshape(-1, *q.shape[1:])
    return out
