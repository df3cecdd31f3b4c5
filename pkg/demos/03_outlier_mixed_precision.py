"""Outlier-aware mixed precision on a chain of linear layers.

Some hidden units develop weight columns with a std up to 20x larger than
their peers; the matching input rows of the next layer are exactly where
low-bit quantization falls apart. Detection ranks each layer's per-unit
weight stds (input-independent, so the footprint is fixed) and the top
fraction p of rows downstream stay at 16 bits, costing p*(16-k) extra
bits per parameter.
"""

import numpy as np

from kbitq import (
    QuantConfig,
    bits_per_param,
    build_int_codebook,
    dequantize_tensor,
    detect_outlier_dims,
    quantize_mixed,
    quantize_tensor,
)

rng = np.random.Generator(np.random.Philox(key=3))

# Two chained layers; plant 8 high-std hidden units in the first, and
# make the rows they feed in the second layer heavy too, which is the
# stress case the 16-bit sidecar exists for.
h, o = 512, 768
w0 = rng.standard_normal((h, o))
planted = np.sort(rng.choice(o, size=8, replace=False))
w0[:, planted] *= 20.0
w1 = rng.standard_normal((o, h))
w1[planted] *= 20.0

p = planted.size / o
detected = detect_outlier_dims([w0, w1], p)
print("planted hidden units:", planted)
print("detected for layer 1:", detected[1])
print("exact recovery:", np.array_equal(detected[1], planted))

# Quantize the second layer at 3 bits, with and without the sidecar.
book = build_int_codebook(3)
config = QuantConfig(kind="int", bits=3, block_size=64, outlier_fraction=p)
plain_config = QuantConfig(kind="int", bits=3, block_size=64)

q_mixed = quantize_mixed(w1, detected[1], book, config)
q_plain = quantize_tensor(w1, book, plain_config)

mse_mixed = float(np.mean((w1 - dequantize_tensor(q_mixed, book)) ** 2))
mse_plain = float(np.mean((w1 - dequantize_tensor(q_plain, book)) ** 2))

print()
print(f"3-bit plain  : mse={mse_plain:.6f}  bits/param={bits_per_param(plain_config).total}")
print(f"3-bit mixed  : mse={mse_mixed:.6f}  bits/param={bits_per_param(config).total:.4f}")
print(f"{q_mixed.outlier_dims.size} rows kept at 16-bit "
      f"({q_mixed.outlier_rows.size} values in the sidecar)")

# The sidecar rows come back at full 16-bit fidelity.
decoded = dequantize_tensor(q_mixed, book)
row_err = np.max(np.abs(decoded[detected[1]] - w1[detected[1]]))
print(f"max error on 16-bit rows: {row_err:.2e} (binary16 rounding only)")
