"""Scaling-curve analysis: which precision wins at a fixed bit budget?

Observations of (total model bits, metric) are grouped by precision and
fit with piecewise-linear interpolations over log2(total bits). If the
curves are close to parallel, one precision dominates across budgets;
where curves cross, the best choice switches. This script synthesizes
records shaped like real zero-shot sweeps, with the 4-bit family planted
on top, and reads off the budget-optimal precision.
"""

import json

import numpy as np

from kbitq import (
    ScalingRecord,
    fit_curves,
    parallelism_offsets,
    pareto_optimal_precision,
    scaling_report,
)

rng = np.random.Generator(np.random.Philox(key=9))

# Accuracy grows roughly linearly in log2(bits); each precision carries
# its own offset. 4-bit planted best, 3-bit worst (instability), small
# zero-shot noise on top, two replicas per point to show averaging.
offsets = {3.0: -0.035, 4.0: 0.045, 5.0: 0.020, 8.0: 0.005, 16.0: 0.0}
records = []
for precision, offset in offsets.items():
    for x in np.arange(24.0, 34.0, 2.0):  # 16 MBit .. 8 GBit budgets
        for _ in range(2):
            value = 0.024 * x + offset - 0.35 + rng.normal(0, 0.002)
            records.append(
                ScalingRecord(
                    family="synth",
                    n_params=int(2.0**x / precision),
                    precision_bits=precision,
                    total_bits=2.0**x,
                    metric_kind="accuracy",
                    value=float(np.clip(value, 0, 1)),
                )
            )

curves = fit_curves(records)
print(f"fitted {len(curves)} curves, knot ranges in log2 bits:")
for precision, curve in sorted(curves.items()):
    lo, hi = curve.x_range
    print(f"  {precision:>4.1f}-bit: [{lo:.1f}, {hi:.1f}]")

budgets = [2.0**x for x in np.arange(24.5, 32.0, 1.0)]
best = pareto_optimal_precision(curves, budgets)
print()
print(f"{'budget (bits)':>16s} {'best precision':>15s}")
for budget, precision in zip(budgets, best):
    print(f"{budget:>16.3e} {precision:>15.1f}")

# Near-parallel curves mean precision choice decouples from scale:
# offsets differ, dispersions stay small.
print()
print("parallelism (offset from pooled mean curve, dispersion across grid):")
for precision, stats in sorted(parallelism_offsets(curves).items()):
    print(f"  {precision:>4.1f}-bit: offset {stats.offset:+.4f}, dispersion {stats.dispersion:.5f}")

# The same analysis as one JSON document (what the CLI emits).
report = scaling_report(records, budgets[:3])
print()
print("report excerpt:", json.dumps(report["pareto"], indent=2))
