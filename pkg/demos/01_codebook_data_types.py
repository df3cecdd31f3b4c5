"""Tour of the four k-bit codebook data types.

A k-bit data type is nothing more than the sorted set of values its codes
decode to, normalized so the largest magnitude is exactly 1. This script
builds each kind at 4 bits and shows how differently they spend their 16
codes on the interval [-1, 1].
"""

import numpy as np

from kbitq import (
    DynamicSpec,
    FloatSpec,
    QuantileSpec,
    build_dynamic_codebook,
    build_float_codebook,
    build_int_codebook,
    build_quantile_codebook,
    default_exponent_bits,
)

np.set_printoptions(precision=4, suppress=True)

K = 4

# Integer: a uniform grid. Every gap is the same size.
int_book = build_int_codebook(K)
print(f"int{K}      ({len(int_book)} codes):", int_book.values)

# Float: 1 sign bit, 2 exponent bits, 1 mantissa bit. Codes cluster near
# zero and spread out geometrically; the bias cancels under normalization.
float_book = build_float_codebook(FloatSpec(K, default_exponent_bits(K)))
print(f"float{K}    ({len(float_book)} codes):", float_book.values)

# Dynamic exponent: a run of zeros picks a power of ten, the rest is a
# linear fraction. Huge dynamic range, coarse within each decade.
dyn_book = build_dynamic_codebook(DynamicSpec(K))
print(f"dynamic{K}  ({len(dyn_book)} codes):", dyn_book.values)

# Quantile: data-dependent equal-mass bins. Built here from a Gaussian
# sample, so codes crowd where the mass is.
rng = np.random.Generator(np.random.Philox(key=0))
sample = rng.standard_normal(100_000)
quant_book = build_quantile_codebook(QuantileSpec(K, sample))
print(f"quantile{K} ({len(quant_book)} codes):", quant_book.values)

print()
print("largest adjacent gap per kind (bigger = worse worst-case error):")
for name, book in [
    ("int", int_book),
    ("float", float_book),
    ("dynamic", dyn_book),
    ("quantile", quant_book),
]:
    print(f"  {name:9s} max_gap={book.max_gap:.4f}  coverage_radius={book.coverage_radius:.4f}")

# How evenly does each data type get used on Gaussian data? Count how
# often each code is the nearest one for a fresh sample.
from kbitq import lookup_indices

fresh = rng.standard_normal(200_000)
fresh /= np.max(np.abs(fresh))
print()
print("fraction of codes used at least 1% of the time on Gaussian data:")
for name, book in [
    ("int", int_book),
    ("float", float_book),
    ("dynamic", dyn_book),
    ("quantile", quant_book),
]:
    counts = np.bincount(lookup_indices(book, fresh), minlength=len(book))
    busy = np.mean(counts / fresh.size >= 0.01)
    print(f"  {name:9s} {busy:.2f}")
