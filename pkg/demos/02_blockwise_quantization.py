"""Blockwise absmax quantization: why small blocks help.

Quantization maps each value to the nearest code after dividing by a
normalization constant. With one constant per tensor, a single outlier
stretches the constant and squashes everything else into a few codes near
zero. Blockwise quantization gives every block of B values its own 16-bit
constant, confining outliers to the blocks they live in, at a cost of
16/B extra bits per parameter.
"""

import numpy as np

from kbitq import (
    QuantConfig,
    bits_per_param,
    build_int_codebook,
    dequantize_tensor,
    error_metrics,
    make_tensor,
    quantize_tensor,
)

book = build_int_codebook(4)


def mse(x, config):
    q = quantize_tensor(x, book, config)
    return float(np.mean((x - dequantize_tensor(q, book)) ** 2))


# Heavy-tailed data (Student-t with two degrees of freedom) is the
# stress case: rare values hundreds of sigma out.
x = make_tensor("student-t", 1 << 20, seed=7)
print(f"Student-t tensor: n={x.size}, absmax={np.max(np.abs(x)):.1f}")
print()
print(f"{'block size':>12s} {'bits/param':>11s} {'mse':>12s}")
for block in (None, 1024, 256, 64):
    config = QuantConfig(kind="int", bits=4, block_size=block)
    cost = bits_per_param(config, element_count=x.size).total
    label = "whole" if block is None else str(block)
    print(f"{label:>12s} {cost:>11.4f} {mse(x, config):>12.5f}")

# Centering helps asymmetric distributions use both halves of a signed
# codebook. Shift a Gaussian far off zero and compare.
print()
shifted = make_tensor("gaussian", 1 << 18, seed=8) + 25.0
plain = QuantConfig(kind="int", bits=4, block_size=64)
centered = QuantConfig(kind="int", bits=4, block_size=64, centered=True)
print(f"shifted Gaussian (mean 25): plain mse={mse(shifted, plain):.5f}, "
      f"centered mse={mse(shifted, centered):.5f} "
      f"(+{bits_per_param(centered).centering_overhead} bits/param for the means)")

# The full report for one configuration.
print()
config = QuantConfig(kind="int", bits=4, block_size=64)
q = quantize_tensor(x, book, config)
report = error_metrics(x, dequantize_tensor(q, book), q)
print("k=4, B=64 on the Student-t tensor:")
for key, value in report.as_dict().items():
    print(f"  {key}: {value}")
