"""Receding-horizon controller: costs, solver optima, closed loop."""

import numpy as np
import numpy.testing as npt
import pytest

from sindy_mpc import (
    IntegratorConfig,
    LinearModel,
    MpcConfig,
    ReferenceSignal,
    SparseModel,
    StateConstraint,
    default_library,
    horizon_cost,
    horizon_problem,
    lotka_volterra,
    run_closed_loop,
    solve_mpc_step,
    stage_cost,
    system_from_model,
    true_sparse_model,
)


def _scalar_model(a, b, dt=0.1):
    return LinearModel(a=[[a]], b=[[b]], dt=dt, state_offset=np.zeros(1),
                       kind="dmdc", n_states=1, n_inputs=1)


def _scalar_cfg(**kw):
    base = dict(n_states=1, n_inputs=1, horizon=1, model_dt=0.1)
    base.update(kw)
    return MpcConfig(**base)


# ------------------------------------------------------------------ stage cost

def test_stage_cost_zero_at_setpoint():
    cfg = _scalar_cfg()
    assert stage_cost([3.0], [0.0], [0.0], [3.0], cfg) == 0.0


def test_stage_cost_quadratic_oracle():
    cfg = _scalar_cfg(q_weights=1.0, r_u=0.5, r_du=1.0)
    # err = 2 -> 4; input 1 -> 0.5; no increment
    assert stage_cost([3.0], [1.0], [0.0], [1.0], cfg) == pytest.approx(4.5)
    # increment 1 adds r_du * 1
    assert stage_cost([3.0], [1.0], [1.0], [1.0], cfg) == pytest.approx(5.5)


def test_stage_cost_treatment_oracle():
    cfg = _scalar_cfg(objective="treatment", treatment_terms=((0, 1.0),))
    # on target: only the input magnitude term remains
    assert stage_cost([2.0], [1.0], [0.0], [2.0], cfg) == pytest.approx(1.0, abs=1e-5)
    cfg_signed = _scalar_cfg(objective="treatment", treatment_terms=((0, 3.0),),
                             treatment_signed=True)
    # signed deviation: below target is rewarded, not penalized
    assert stage_cost([0.0], [0.0], [0.0], [2.0], cfg_signed) == \
        pytest.approx(-6.0, abs=1e-5)


def test_stage_cost_soft_constraint_penalty():
    cfg = _scalar_cfg(state_constraints=(StateConstraint(index=0, lower=0.0,
                                                         weight=100.0),))
    clean = stage_cost([0.5], [0.0], [0.0], [0.5], cfg)
    violated = stage_cost([-0.2], [0.0], [0.0], [-0.2], cfg)
    assert clean == 0.0
    assert violated == pytest.approx(100.0 * 0.2 ** 2)


# ---------------------------------------------------------------- horizon cost

def test_horizon_cost_hand_computed():
    model = _scalar_model(1.0, 1.0)  # x' = x + u
    cfg = _scalar_cfg(horizon=2, q_weights=1.0, r_u=1.0, r_du=1.0,
                      q_terminal=2.0)
    ref = ReferenceSignal.constant([0.0])
    cost, states = horizon_cost(model, [1.0], [[0.5, -0.25]], ref, cfg)
    npt.assert_allclose(states, [[1.0, 1.5, 1.25]])
    # running 1 + 1.5^2, terminal 2 * 1.25^2, inputs 0.25 + 0.0625,
    # increments 0.5^2 + 0.75^2
    assert cost == pytest.approx(3.25 + 3.125 + 0.3125 + 0.8125)


def test_horizon_extension_holds_last_input():
    model = _scalar_model(0.8, 0.4)
    ref = ReferenceSignal.constant([0.0])
    short = _scalar_cfg(horizon=3, control_horizon=1, objective="treatment")
    full = _scalar_cfg(horizon=3, objective="treatment")
    c1, s1 = horizon_cost(model, [1.0], [[0.3]], ref, short)
    c3, s3 = horizon_cost(model, [1.0], [[0.3, 0.3, 0.3]], ref, full)
    npt.assert_allclose(s1, s3)
    assert c1 == pytest.approx(c3)


def test_horizon_cost_barrier_on_divergence():
    model = _scalar_model(4.0, 0.0)  # blows past any finite bound within 30 steps
    cfg = _scalar_cfg(horizon=30)
    ref = ReferenceSignal.constant([0.0])
    cost, states = horizon_cost(model, [1.0], np.full((1, 30), 0.0), ref, cfg)
    assert np.isfinite(cost) and cost > 1e9
    assert np.all(np.isfinite(states))


def test_horizon_cost_checks_sequence_length():
    model = _scalar_model(1.0, 1.0)
    cfg = _scalar_cfg(horizon=3)
    with pytest.raises(ValueError):
        horizon_cost(model, [1.0], [[0.1, 0.2]], ref=ReferenceSignal.constant([0.0]),
                     cfg=cfg)


# --------------------------------------------------------------------- solver

def test_solver_matches_one_step_closed_form():
    # minimize Q(a x0 + b u)^2 + R_u u^2 + R_du (u - u_prev)^2 over u
    a, b, q, ru, rdu, x0 = 0.9, 0.5, 2.0, 0.4, 0.3, 2.0
    model = _scalar_model(a, b)
    cfg = _scalar_cfg(q_weights=q, r_u=ru, r_du=rdu)
    ref = ReferenceSignal.constant([0.0])
    for u_prev in (0.0, 0.6):
        expected = (rdu * u_prev - a * b * q * x0) / (b * b * q + ru + rdu)
        sol = solve_mpc_step(model, [x0], np.array([u_prev]), ref, cfg)
        assert sol.converged
        assert sol.first_input[0] == pytest.approx(expected, abs=1e-5)


def test_solver_clips_active_bound_exactly():
    a, b, q, ru, rdu = 0.9, 0.5, 2.0, 0.4, 0.3
    model = _scalar_model(a, b)
    cfg = _scalar_cfg(q_weights=q, r_u=ru, r_du=rdu, u_max=0.5, u_min=-0.5)
    ref = ReferenceSignal.constant([0.0])
    # unconstrained optimum is +1.5, far outside the box
    sol = solve_mpc_step(model, [-2.0], np.zeros(1), ref, cfg)
    assert sol.first_input[0] == 0.5


def test_solver_is_quiet_at_setpoint():
    model = _scalar_model(0.9, 0.5)
    cfg = _scalar_cfg(horizon=4)
    ref = ReferenceSignal.constant([0.0])
    sol = solve_mpc_step(model, [0.0], np.zeros(1), ref, cfg)
    npt.assert_allclose(sol.u_sequence, 0.0, atol=1e-8)
    assert sol.cost == pytest.approx(0.0, abs=1e-12)


def test_solver_warm_start_does_not_regress():
    model = _scalar_model(0.95, 0.3)
    cfg = _scalar_cfg(horizon=6, q_weights=3.0, r_u=0.1, r_du=0.1)
    ref = ReferenceSignal.constant([1.0])
    cold = solve_mpc_step(model, [0.0], np.zeros(1), ref, cfg)
    warm = solve_mpc_step(model, [0.0], np.zeros(1), ref, cfg, warm_start=cold)
    assert warm.cost <= cold.cost * (1.0 + 1e-6) + 1e-9
    assert warm.converged


def test_solver_respects_rate_bounds():
    model = _scalar_model(1.0, 1.0)
    cfg = _scalar_cfg(horizon=3, du_min=-0.1, du_max=0.1, q_weights=50.0)
    ref = ReferenceSignal.constant([-5.0])
    sol = solve_mpc_step(model, [0.0], np.zeros(1), ref, cfg)
    du = np.diff(np.concatenate([[0.0], sol.u_sequence[0]]))
    assert np.all(du >= -0.1 - 1e-12) and np.all(du <= 0.1 + 1e-12)


def test_gradient_matches_independent_differences():
    # batched central-difference gradient vs a plain per-coordinate loop at
    # a different step size, at random interior points
    system = lotka_volterra()
    model = true_sparse_model(system)
    cfg = MpcConfig(n_states=2, n_inputs=1, horizon=5, model_dt=0.1,
                    q_weights=(1.0, 0.5), r_u=0.2, r_du=0.4)
    ref = ReferenceSignal.constant([100.0, 20.0])
    prob = horizon_problem(model, [60.0, 30.0], np.zeros(1), ref, cfg)
    rng = np.random.default_rng(11)
    for _ in range(3):
        z = rng.uniform(-1.0, 1.0, size=5)
        _, grad = prob.cost_and_grad(z)
        h = 1e-5
        ref_grad = np.empty_like(z)
        for i in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            ref_grad[i] = (prob.cost(zp) - prob.cost(zm)) / (2.0 * h)
        npt.assert_allclose(grad, ref_grad, rtol=1e-4, atol=1e-8)


# -------------------------------------------------------------- configuration

def test_config_validation():
    with pytest.raises(ValueError):
        _scalar_cfg(horizon=0)
    with pytest.raises(ValueError):
        _scalar_cfg(horizon=2, control_horizon=3)
    with pytest.raises(ValueError):
        _scalar_cfg(u_min=1.0, u_max=0.0)
    with pytest.raises(ValueError):
        _scalar_cfg(du_min=0.5)  # must allow holding the input
    with pytest.raises(ValueError):
        _scalar_cfg(objective="absolute")
    with pytest.raises(ValueError):
        _scalar_cfg(objective="treatment", treatment_terms=((3, 1.0),))
    with pytest.raises(ValueError):
        _scalar_cfg(state_constraints=(StateConstraint(index=5, lower=0.0),))
    with pytest.raises(ValueError):
        _scalar_cfg(r_u=-1.0)  # input weight must be positive definite


def test_reference_signal_shapes():
    const = ReferenceSignal.constant([1.0, 2.0])
    npt.assert_array_equal(const.at(3.7), [1.0, 2.0])
    grid = const.horizon(0.0, 0.5, 4)
    assert grid.shape == (5, 2)
    varying = ReferenceSignal.time_varying(lambda t: [t, -t], 2)
    npt.assert_allclose(varying.horizon(1.0, 1.0, 2),
                        [[1.0, -1.0], [2.0, -2.0], [3.0, -3.0]])


# ---------------------------------------------------------------- closed loop

def _servo_setup():
    # dx/dt = -x + u: steady state x = u, target 0.5
    lib = default_library(1, 1, poly_order=1)
    model = SparseModel(coefficients=np.array([[0.0, -1.0, 1.0]]),
                        library=lib, form="continuous", dt=0.1)
    plant = system_from_model(model)
    cfg = MpcConfig(n_states=1, n_inputs=1, horizon=8, model_dt=0.1,
                    q_weights=5.0, r_u=0.01, r_du=0.01)
    ref = ReferenceSignal.constant([0.5])
    return plant, model, cfg, ref


def test_closed_loop_reaches_setpoint():
    plant, model, cfg, ref = _servo_setup()
    result = run_closed_loop(plant, model, cfg, ref, [0.0], duration=4.0,
                             update_steps=1, plant_config=IntegratorConfig(dt=0.1))
    assert result.success
    assert result.tick_times.shape == (40,)
    assert result.applied_inputs.shape == (1, 40)
    assert result.trajectory.n_samples == 41
    assert abs(result.final_state[0] - 0.5) < 0.05
    # integrated stage costs accumulate monotonically
    assert np.all(np.diff(result.cumulative_costs) >= 0.0)
    assert result.failure_time is None


def test_closed_loop_holds_input_between_updates():
    plant, model, cfg, ref = _servo_setup()
    result = run_closed_loop(plant, model, cfg, ref, [0.0], duration=2.0,
                             update_steps=5, plant_config=IntegratorConfig(dt=0.1))
    # 4 controller ticks, input constant across each 5-step interval
    assert result.tick_times.shape == (4,)
    inputs = result.trajectory.inputs[0]
    for j in range(4):
        segment = inputs[1 + 5 * j: 1 + 5 * (j + 1)]
        npt.assert_array_equal(segment, segment[0])


def test_closed_loop_is_deterministic():
    plant, model, cfg, ref = _servo_setup()
    kw = dict(duration=1.0, update_steps=2,
              plant_config=IntegratorConfig(dt=0.1))
    a = run_closed_loop(plant, model, cfg, ref, [0.0], **kw)
    b = run_closed_loop(plant, model, cfg, ref, [0.0], **kw)
    npt.assert_array_equal(a.trajectory.states, b.trajectory.states)
    npt.assert_array_equal(a.applied_inputs, b.applied_inputs)

    noisy = dict(kw, measurement_sigma=0.05)
    c = run_closed_loop(plant, model, cfg, ref, [0.0], seed=7, **noisy)
    d = run_closed_loop(plant, model, cfg, ref, [0.0], seed=7, **noisy)
    e = run_closed_loop(plant, model, cfg, ref, [0.0], seed=8, **noisy)
    npt.assert_array_equal(c.applied_inputs, d.applied_inputs)
    assert not np.array_equal(c.applied_inputs, e.applied_inputs)


def test_closed_loop_zero_duration():
    plant, model, cfg, ref = _servo_setup()
    result = run_closed_loop(plant, model, cfg, ref, [0.3], duration=0.0,
                             update_steps=1, plant_config=IntegratorConfig(dt=0.1))
    assert result.success
    assert result.tick_times.size == 0
    npt.assert_array_equal(result.trajectory.states, [[0.3]])


def test_closed_loop_rejects_partial_interval():
    plant, model, cfg, ref = _servo_setup()
    with pytest.raises(ValueError):
        run_closed_loop(plant, model, cfg, ref, [0.0], duration=0.55,
                        update_steps=5, plant_config=IntegratorConfig(dt=0.1))
