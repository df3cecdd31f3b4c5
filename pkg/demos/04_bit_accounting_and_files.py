"""Bit accounting and the KBQ packed file format.

The effective cost of a quantization method is the code width plus
amortized overheads: 16/B bits per parameter for block constants, the
same again for means when centering, and p*(16-k) for 16-bit outlier
rows. Exact whole-model totals count every sidecar byte. Quantized
tensors serialize to KBQ files that round-trip bit-exactly, and quantile
codebooks travel inside the file so decoding needs no external data.
"""

import tempfile
from pathlib import Path

import numpy as np

from kbitq import (
    QuantConfig,
    bits_per_param,
    codebook_for,
    dequantize_tensor,
    make_tensor,
    payload_sections,
    quantize_tensor,
    read_kbq,
    total_model_bits,
    write_container,
    write_kbq,
)

# Headline per-parameter figures.
for config, label in [
    (QuantConfig(kind="int", bits=4, block_size=64), "k=4, B=64"),
    (QuantConfig(kind="int", bits=4, block_size=64, centered=True), "k=4, B=64, centered"),
    (QuantConfig(kind="int", bits=4, outlier_fraction=0.02), "k=4, whole, p=0.02"),
    (QuantConfig(kind="int", bits=3, block_size=64, outlier_fraction=0.02), "k=3, B=64, p=0.02"),
]:
    b = bits_per_param(config)
    print(f"{label:22s} -> {b.total:.4f} bits/param "
          f"(base {b.base_bits}, blocks {b.block_overhead:.4f}, "
          f"means {b.centering_overhead:.4f}, outliers {b.outlier_overhead:.4f})")

# Exact totals for a small model: every section rounded to whole bytes.
print()
tensors = {}
for i, shape in enumerate([(256, 256), (256, 512), (512,)]):
    x = make_tensor("gaussian", shape, seed=i)
    config = QuantConfig(kind="quantile", bits=4, block_size=64)
    tensors[f"layer{i}"] = quantize_tensor(x, codebook_for(x, config), config)

total = total_model_bits(tensors.values())
n_elements = sum(q.element_count for q in tensors.values())
print(f"model: {n_elements} parameters -> {total} bits total "
      f"({total / n_elements:.4f} bits/param exact)")
for name, q in tensors.items():
    print(f"  {name}: {payload_sections(q)}")

# Round-trip through a KBQ file: bit-exact identity.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.kbq"
    write_kbq(tensors, path)
    back = read_kbq(path)
    print()
    print(f"wrote {path.stat().st_size} bytes; "
          f"identity on read-back: {all(back[k] == tensors[k] for k in tensors)}")

    # The quantile codebook is embedded, so decoding needs nothing else.
    decoded = dequantize_tensor(back["layer0"])
    original = make_tensor("gaussian", (256, 256), seed=0)
    print(f"decode from file alone: mse={np.mean((original - decoded) ** 2):.6f}")

    # Full-precision containers use the common JSON-header binary layout.
    write_container(Path(tmp) / "decoded.st", {"layer0": decoded.astype(np.float32)})
    print(f"container written: {(Path(tmp) / 'decoded.st').stat().st_size} bytes")
