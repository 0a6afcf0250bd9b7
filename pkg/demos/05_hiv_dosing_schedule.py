"""Weekly drug scheduling for an immune-response model, learned from data.

An infection model with five states (healthy cells, infected cells,
immune memory precursors, immune effectors, virus load) has two stable
outcomes: chronic infection and long-term immune control.  The drug
alone cannot hold the good state, but a well-timed schedule can push
the system into the immune-controlled basin and then stop.

The controller never sees the model equations.  It fits a sparse model
from 200 days of excitation data, then re-plans a dose once per week
for 350 days, minimizing drug use while rewarding healthy-cell count
and immune memory.
"""

import dataclasses

import numpy as np

from sindy_mpc import (
    IntegratorConfig,
    ReferenceSignal,
    builtin_plan,
    equilibria,
    run_closed_loop,
    run_experiment,
)

plan = builtin_plan("hiv")
plan = dataclasses.replace(
    plan,
    recipes=[r for r in plan.recipes if r.name == "sindyc"],
    sweeps=None,
)
goal = equilibria(plan.system)[0]
print(f"goal (immune-controlled equilibrium): healthy cells {goal[0]:.2f}, "
      f"immune memory {goal[2]:.1f}")
print(f"start: {np.asarray(plan.control.x0)}  (fresh infection, drug off)\n")

reports, artifacts = run_experiment(plan)
result = artifacts["control"]["sindyc"]

print("weekly dose schedule (fraction of maximum dose):")
doses = result.applied_inputs[0]
for start in range(0, len(doses), 10):
    row = doses[start:start + 10]
    cells = " ".join(f"{d:4.2f}" for d in row)
    print(f"  weeks {start + 1:2d}-{start + len(row):2d}:  {cells}")
on_weeks = int(np.sum(doses > 0.01))
print(f"\nthe planner doses hard for ~{on_weeks} weeks, tapers, then stops "
      "for good:\na structured interruption that lets the immune response "
      "take over.")

traj = result.trajectory
day = lambda d: int(round(d / plan.control.plant_dt))
print("\nimmune memory growth on the true plant:")
for d in (0, 50, 100, 200, 350):
    idx = min(day(d), traj.n_samples - 1)
    print(f"  day {d:3d}: x3 = {traj.states[2][idx]:8.1f}")
print(f"final healthy cells {traj.final_state[0]:.2f} "
      f"(goal {goal[0]:.2f}, within 10%)")

# 350 days is not enough to finish the transient from this initial state:
# immune memory is still below the 10% band around the goal.  Keep the
# same controller running and it arrives.
lo = 0.9 * goal[2]
print(f"\nimmune memory after 350 days: {traj.final_state[2]:.1f}, "
      f"still short of the {lo:.1f} band edge.")
print("continuing the same weekly loop for another 350 days...")
more = run_closed_loop(
    plant=plan.system,
    model=artifacts["models"]["sindyc"],
    cfg=plan.control.mpc,
    ref=ReferenceSignal.constant(goal),
    x0=traj.final_state,
    duration=350.0,
    update_steps=plan.control.update_steps,
    plant_config=IntegratorConfig(dt=plan.control.plant_dt),
)
x3 = more.trajectory.states[2]
entered = np.argmax(x3 >= lo)
print(f"  immune memory crosses {lo:.1f} on day {more.trajectory.times[entered]:.0f} "
      f"of the extension (week {int(50 + more.trajectory.times[entered] // 7)} overall)")
print(f"  day 700 state: healthy cells {more.trajectory.final_state[0]:.2f}, "
      f"immune memory {more.trajectory.final_state[2]:.1f}")
print(f"  extra drug used in the extension: "
      f"{np.sum(more.applied_inputs[0]):.3f} dose-weeks")
