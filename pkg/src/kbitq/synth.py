"""Seeded synthetic tensors for benchmarks and tests.

Streams come from the Philox 4x64 counter-based generator keyed directly
with the seed, so a (kind, shape, seed) triple produces bit-identical data
on every platform and numpy build.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpecError

KINDS = ("gaussian", "student-t", "uniform")

# Heavy-tailed default: two degrees of freedom gives infinite variance.
STUDENT_T_DF = 2.0


def generator(seed: int) -> np.random.Generator:
    """Counter-based generator keyed with a 64-bit seed.

    The seed is reduced modulo 2^64, so negative values map to their
    two's-complement key deterministically.
    """
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


def make_tensor(kind: str, shape, seed: int) -> np.ndarray:
    """Draw a float64 tensor of the given shape from a named distribution."""
    rng = generator(seed)
    if kind == "gaussian":
        return rng.standard_normal(shape)
    if kind == "student-t":
        return rng.standard_t(STUDENT_T_DF, size=shape)
    if kind == "uniform":
        return rng.uniform(-1.0, 1.0, size=shape)
    raise InvalidSpecError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
