"""Tensor file I/O: full-precision containers and packed KBQ files.

Containers follow the common JSON-header binary layout: an 8-byte
little-endian header length, a JSON table mapping tensor names to dtype
(F32/F16), shape, and [begin, end) offsets into the data region that
follows. Quantized tensors are serialized in the KBQ1 format: a 4-byte
magic, a 4-byte little-endian manifest length, a UTF-8 JSON manifest, then
8-byte-aligned binary sections (packed indices, binary16 constants and
means, 32-bit outlier dims, binary16 outlier rows, float64 embedded
codebook values). All multi-byte integers are little-endian.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .codebooks import CodebookKind
from .errors import (
    CorruptDataError,
    FormatError,
    LengthError,
    ParseError,
)
from .quantizer import QuantConfig, QuantizedTensor

KBQ_MAGIC = b"KBQ1"
KBQ_VERSION = 1
_ALIGN = 8

_DTYPES = {"F32": np.dtype("<f4"), "F16": np.dtype("<f2")}


class TensorContainer:
    """Lazily addressable view over a JSON-header tensor container."""

    def __init__(self, header: dict, data: bytes | memoryview) -> None:
        self._header = header
        self._data = memoryview(data)

    def names(self) -> list[str]:
        return list(self._header)

    def __contains__(self, name: str) -> bool:
        return name in self._header

    def shape(self, name: str) -> tuple[int, ...]:
        return tuple(self._header[name]["shape"])

    def tensor(self, name: str) -> np.ndarray:
        """Decode one tensor to float32 working precision."""
        entry = self._header[name]
        begin, end = entry["data_offsets"]
        raw = np.frombuffer(self._data[begin:end], dtype=_DTYPES[entry["dtype"]])
        return raw.reshape(entry["shape"]).astype(np.float32)

    def items(self):
        for name in self._header:
            yield name, self.tensor(name)


def read_container(path) -> TensorContainer:
    """Read a container file, validating layout before any tensor access."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise ParseError(f"{path}: too short for a container header")
    (header_len,) = struct.unpack("<Q", blob[:8])
    if 8 + header_len > len(blob):
        raise LengthError(f"{path}: declared header of {header_len} bytes overruns the file")
    try:
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: malformed JSON header: {exc}") from exc
    if not isinstance(header, dict):
        raise ParseError(f"{path}: header must be a JSON object")
    header.pop("__metadata__", None)

    data = blob[8 + header_len :]
    spans = []
    for name, entry in header.items():
        try:
            dtype, shape = entry["dtype"], entry["shape"]
            begin, end = (int(v) for v in entry["data_offsets"])
        except KeyError as exc:
            raise ParseError(f"{path}: tensor {name!r} is missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: tensor {name!r} entry is malformed: {exc}") from exc
        if dtype not in _DTYPES:
            raise ParseError(f"{path}: tensor {name!r} has unsupported dtype {dtype!r}")
        try:
            expected = int(np.prod(shape, dtype=np.int64)) * _DTYPES[dtype].itemsize
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: tensor {name!r} has a malformed shape: {exc}") from exc
        if end - begin != expected:
            raise ParseError(
                f"{path}: tensor {name!r} spans {end - begin} bytes, shape needs {expected}"
            )
        if begin < 0 or end > len(data):
            raise LengthError(f"{path}: tensor {name!r} data is truncated")
        spans.append((begin, end, name))
    spans.sort()
    for (b0, e0, n0), (b1, e1, n1) in zip(spans, spans[1:]):
        if b1 < e0:
            raise ParseError(f"{path}: tensors {n0!r} and {n1!r} overlap")
    return TensorContainer(header, data)


def write_container(path, tensors: dict[str, np.ndarray]) -> None:
    """Write arrays as a container; float16 stays F16, everything else F32."""
    header: dict[str, dict] = {}
    chunks: list[bytes] = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        dtype = "F16" if arr.dtype == np.float16 else "F32"
        raw = np.ascontiguousarray(arr.astype(_DTYPES[dtype])).tobytes()
        header[name] = {
            "dtype": dtype,
            "shape": list(arr.shape),
            "data_offsets": [offset, offset + len(raw)],
        }
        chunks.append(raw)
        offset += len(raw)
    encoded = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(encoded)))
        fh.write(encoded)
        for chunk in chunks:
            fh.write(chunk)


def _pad(n: int) -> int:
    return (-n) % _ALIGN


def _tensor_sections(q: QuantizedTensor) -> dict[str, bytes]:
    sections = {
        "indices": q.packed_indices,
        "absmax": q.absmax.astype("<f2").tobytes(),
        "means": q.means.astype("<f2").tobytes() if q.means is not None else b"",
        "outlier_dims": q.outlier_dims.astype("<i4").tobytes(),
        "outlier_rows": q.outlier_rows.astype("<f2").tobytes(),
    }
    if q.codebook_values is not None:
        sections["codebook"] = q.codebook_values.astype("<f8").tobytes()
    return sections


def write_kbq(tensors: dict[str, QuantizedTensor], path) -> None:
    """Serialize quantized tensors; read_kbq inverts this bit-exactly."""
    payload: list[bytes] = []
    relative: list[tuple[str, str, int, int]] = []
    entries: dict[str, dict] = {}
    rel = 0
    for name, q in tensors.items():
        for sec_name, raw in _tensor_sections(q).items():
            relative.append((name, sec_name, rel, len(raw)))
            payload.append(raw)
            payload.append(b"\0" * _pad(len(raw)))
            rel += len(raw) + _pad(len(raw))
        cfg = q.config
        entries[name] = {
            "shape": list(q.shape),
            "dtype": {
                "kind": cfg.kind.value,
                "bits": cfg.bits,
                "exponent_bits": cfg.exponent_bits,
            },
            "block_size": cfg.block_size,
            "centered": cfg.centered,
            "outlier_fraction": cfg.outlier_fraction,
            "n_quantized": q.n_quantized,
            "sections": {},
        }

    def encode(base: int) -> bytes:
        for name, sec_name, off, length in relative:
            entries[name]["sections"][sec_name] = [base + off, length]
        manifest = {"version": KBQ_VERSION, "tensors": entries}
        return json.dumps(manifest, separators=(",", ":")).encode("utf-8")

    # Absolute offsets depend on the manifest length, which depends on the
    # offsets' digit counts; iterate to a fixed point (grows monotonically,
    # so this settles within a few rounds).
    base = 0
    while True:
        encoded = encode(base)
        new_base = len(KBQ_MAGIC) + 4 + len(encoded)
        new_base += _pad(new_base)
        if new_base == base:
            break
        base = new_base

    blob = bytearray()
    blob += KBQ_MAGIC
    blob += struct.pack("<I", len(encoded))
    blob += encoded
    blob += b"\0" * _pad(len(blob))
    for chunk in payload:
        blob += chunk
    with open(path, "wb") as fh:
        fh.write(blob)


def _read_section(blob: bytes, span, path, what: str) -> bytes:
    offset, length = span
    if offset < 0 or offset + length > len(blob):
        raise CorruptDataError(f"{path}: section {what} [{offset}, {offset + length}) overruns file")
    return blob[offset : offset + length]


def read_kbq(path) -> dict[str, QuantizedTensor]:
    """Load a KBQ file back into quantized tensors."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(KBQ_MAGIC)] != KBQ_MAGIC:
        raise FormatError(f"{path}: not a KBQ file (bad magic)")
    if len(blob) < len(KBQ_MAGIC) + 4:
        raise CorruptDataError(f"{path}: missing manifest length")
    (manifest_len,) = struct.unpack("<I", blob[4:8])
    if 8 + manifest_len > len(blob):
        raise CorruptDataError(f"{path}: manifest overruns file")
    try:
        manifest = json.loads(blob[8 : 8 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptDataError(f"{path}: manifest is not valid JSON: {exc}") from exc
    if manifest.get("version") != KBQ_VERSION:
        raise FormatError(f"{path}: unsupported version {manifest.get('version')!r}")

    out: dict[str, QuantizedTensor] = {}
    for name, entry in manifest.get("tensors", {}).items():
        try:
            dtype = entry["dtype"]
            config = QuantConfig(
                kind=CodebookKind(dtype["kind"]),
                bits=int(dtype["bits"]),
                block_size=entry["block_size"],
                centered=bool(entry["centered"]),
                outlier_fraction=float(entry["outlier_fraction"]),
                exponent_bits=dtype["exponent_bits"],
            )
            shape = tuple(int(s) for s in entry["shape"])
            n_quantized = int(entry["n_quantized"])
            sections = entry["sections"]

            def sec(what: str) -> bytes:
                if what not in sections:
                    raise CorruptDataError(f"{path}: tensor {name!r} is missing section {what!r}")
                return _read_section(blob, sections[what], path, f"{name}/{what}")

            row_width = shape[1] if len(shape) > 1 else 1
            dims = np.frombuffer(sec("outlier_dims"), dtype="<i4").astype(np.int32)
            q = QuantizedTensor(
                shape=shape,
                config=config,
                packed_indices=sec("indices"),
                n_quantized=n_quantized,
                absmax=np.frombuffer(sec("absmax"), dtype="<f2").astype(np.float16),
                means=(
                    np.frombuffer(sec("means"), dtype="<f2").astype(np.float16)
                    if config.centered
                    else None
                ),
                outlier_dims=dims,
                outlier_rows=np.frombuffer(sec("outlier_rows"), dtype="<f2")
                .astype(np.float16)
                .reshape(dims.size, row_width if dims.size else 0),
                codebook_values=(
                    np.frombuffer(sec("codebook"), dtype="<f8").astype(np.float64)
                    if config.kind is CodebookKind.QUANTILE
                    else None
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptDataError(f"{path}: tensor {name!r} manifest entry is invalid: {exc}") from exc
        expected_idx_bytes = -(-n_quantized * config.bits // 8)
        if len(q.packed_indices) != expected_idx_bytes:
            raise CorruptDataError(
                f"{path}: tensor {name!r} index section holds {len(q.packed_indices)} bytes, "
                f"manifest arithmetic needs {expected_idx_bytes}"
            )
        if q.absmax.size != q.n_blocks:
            raise CorruptDataError(
                f"{path}: tensor {name!r} has {q.absmax.size} constants for {q.n_blocks} blocks"
            )
        out[name] = q
    return out
