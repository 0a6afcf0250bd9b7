"""Benchmark sweeps: how much noise and how little data can each method take?

Runs the predator-prey identification pipeline over a grid of measurement
noise levels and training lengths, many random realizations each, and
prints median validation error per method.  A scaled-down version of the
package's full sweep harness (fewer realizations, coarser grids) so it
finishes in seconds.
"""

import dataclasses

from sindy_mpc import builtin_plan, sweep_noise, sweep_training_length

plan = builtin_plan("lotka")
plan = dataclasses.replace(
    plan,
    recipes=[r for r in plan.recipes if r.name in ("sindyc", "dmdc")],
)


def print_summary(summary, axis):
    models = sorted({row["model"] for row in summary})
    points = sorted({row[axis] for row in summary})
    header = f"{axis:>8s}" + "".join(f"{m:>12s}" for m in models)
    print(header)
    for p in points:
        cells = ""
        for m in models:
            row = next(r for r in summary if r["model"] == m and r[axis] == p)
            cells += f"{row['avg_rel_error_median']:12.4f}"
        print(f"{p:8g}" + cells)


print("median validation error vs measurement noise "
      "(fraction of signal spread, 8 realizations each)")
rows, summary = sweep_noise(plan, etas=(0.0, 0.05, 0.25), realizations=8)
print_summary(summary, "eta")
print("\nthe linear fit is structurally wrong for this system (it has a "
      "predator-prey\ninteraction term), so its error is large even on "
      "clean data; the sparse fit\ndegrades gracefully as noise grows.")

print("\nmedian validation error vs training samples (10% noise)")
noisy_plan = dataclasses.replace(
    plan, training=dataclasses.replace(plan.training, noise_eta=0.1))
rows, summary, _ = sweep_training_length(
    noisy_plan, lengths=(20, 50, 200, 1001), realizations=8)
print_summary(summary, "length")
print("\nunder noise the sparse method is data-hungry: short noisy records "
      "produce\nwrong term selections that diverge in rollout, and only the "
      "full record beats\nthe linear baseline.  the linear fit hits its "
      "structural error floor sooner.")
