"""Recover predator-prey dynamics from a single forced simulation.

Simulates the two-species system under a low-amplitude multisine input,
fits a sparse model on an order-2 polynomial library, and compares the
recovered coefficients against the generating equations.  A linear fit of
the same data is shown for contrast: it tracks one step well but has no
way to express the product term that couples the species.
"""

import numpy as np

from sindy_mpc import (
    IntegratorConfig,
    NoiseSpec,
    add_noise,
    coefficient_table,
    default_library,
    fit_sindyc,
    integrate,
    fit_dmdc,
    lotka_volterra,
    schroeder_sweep,
    true_sparse_model,
)

system = lotka_volterra()
signal = schroeder_sweep(amplitude=0.5, base_freq=0.1)
traj = integrate(system, [50.0, 30.0], signal, 100.0, IntegratorConfig(dt=0.1))
print(f"training data: {traj.n_samples} samples over {traj.times[-1]:.0f} time units")

# --- clean fit: exact recovery ---------------------------------------------
library = default_library(2, 1, poly_order=2)
model = fit_sindyc(traj, library, thresholds=1e-4)
truth = true_sparse_model(system)

print("\nrecovered model (clean data):")
print(coefficient_table(model))
err = np.max(np.abs(model.coefficients - truth.coefficients))
print(f"max coefficient error vs generating equations: {err:.2e}")

# --- the linear fit cannot say 'x1*x2' --------------------------------------
linear = fit_dmdc(traj)
x, u = traj.states[:, 500], traj.inputs[:, 500]
one_step_lin = linear.step(x, u)
print(f"\nlinear one-step prediction at t=50: {one_step_lin.round(3)}")
print(f"actual next sample:                  {traj.states[:, 501].round(3)}")
print("(close in one step, but the missing interaction term compounds)")

# --- moderate measurement noise ---------------------------------------------
# at 10% noise neither method recovers the exact term set; the useful
# comparison is how far ahead each fitted model stays predictive
from sindy_mpc import avg_relative_error, predict, sine_product

noisy = add_noise(traj, NoiseSpec(magnitude=0.1, seed=0))
noisy_sparse = fit_sindyc(noisy, default_library(2, 1, 2, normalize=True),
                          thresholds=0.5, smooth_window=21)
noisy_linear = fit_dmdc(noisy)

probe = sine_product(amplitude=1.0)
val = integrate(system, traj.final_state, probe, 100.0, IntegratorConfig(dt=0.1))
for label, fitted in (("sparse", noisy_sparse), ("linear", noisy_linear)):
    pred = predict(fitted, val.states[:, 0], probe, 100.0, dt=0.1)
    print(f"\n{label} fit from 10% noise, error on unseen forcing: "
          f"{avg_relative_error(val, pred):.2f}")
