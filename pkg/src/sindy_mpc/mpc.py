"""Receding-horizon control on top of identified models.

Each controller step minimizes a finite-horizon cost over a sequence of
input increments.  Representing the decision variables as increments keeps
rate bounds as simple box constraints, and the running clip of their
cumulative sum enforces the input box exactly, so every returned sequence
is feasible by construction.  The optimizer is scipy's box-constrained
quasi-Newton (L-BFGS-B) driven by forward finite-difference gradients that
are evaluated in one batched model rollout per gradient.

State constraints are soft: one-sided quadratic penalties on the predicted
trajectory.  Two stage-cost shapes are provided, quadratic tracking and a
smoothed absolute-deviation form used for the treatment benchmark.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .dynamics import (DivergenceError, IntegratorConfig, Trajectory,
                       constant_signal, integrate)
from .sysid import rollout_batch

__all__ = [
    "StateConstraint",
    "MpcConfig",
    "ReferenceSignal",
    "MpcSolution",
    "ClosedLoopResult",
    "stage_cost",
    "horizon_cost",
    "horizon_problem",
    "solve_mpc_step",
    "run_closed_loop",
]

_BARRIER = 1e10


def _as_weight_matrix(w, size, name):
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        return float(w) * np.eye(size)
    if w.ndim == 1:
        if w.shape[0] != size:
            raise ValueError(f"{name} has length {w.shape[0]}, expected {size}")
        return np.diag(w)
    if w.shape != (size, size):
        raise ValueError(f"{name} must be ({size}, {size})")
    return w.copy()


def _check_psd(mat, name, strict):
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(mat)
    if strict and eigs.min() <= 0:
        raise ValueError(f"{name} must be positive definite")
    if not strict and eigs.min() < -1e-10:
        raise ValueError(f"{name} must be positive semidefinite")


def _as_bound(value, size, default):
    if value is None:
        return np.full(size, default)
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return np.full(size, float(value))
    if value.shape != (size,):
        raise ValueError(f"bound must be scalar or length {size}")
    return value.copy()


@dataclass(frozen=True)
class StateConstraint:
    """Soft one-sided bounds on one predicted state component."""

    index: int
    lower: float | None = None
    upper: float | None = None
    weight: float = 1e4

    def __post_init__(self):
        if self.lower is None and self.upper is None:
            raise ValueError("constraint needs a lower or an upper bound")
        if self.weight <= 0:
            raise ValueError("constraint weight must be positive")


@dataclass
class MpcConfig:
    """Controller settings.

    ``horizon`` is the prediction length in model steps; ``control_horizon``
    (defaulting to it, never exceeding it) is the number of optimized
    inputs, the last of which is held for the remaining steps.  Weights may
    be scalars, diagonals, or full matrices.  ``objective`` selects
    quadratic tracking or the smoothed absolute-deviation treatment cost;
    the latter uses ``treatment_terms`` (state index, weight) pairs plus a
    unit-weight input magnitude term.
    """

    n_states: int
    n_inputs: int
    horizon: int
    model_dt: float
    q_weights: np.ndarray = 1.0
    r_u: np.ndarray = 1.0
    r_du: np.ndarray = 1.0
    q_terminal: np.ndarray | None = None
    control_horizon: int | None = None
    u_min: np.ndarray | None = None
    u_max: np.ndarray | None = None
    du_min: np.ndarray | None = None
    du_max: np.ndarray | None = None
    state_constraints: tuple = ()
    objective: str = "quadratic"
    treatment_terms: tuple = ((0, 1.0),)
    treatment_signed: bool = False
    smooth_eps: float = 1e-6
    max_iterations: int = 100
    cost_tolerance: float = 1e-8
    fd_step: float = 1e-6

    def __post_init__(self):
        n, q = self.n_states, self.n_inputs
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.control_horizon is None:
            self.control_horizon = self.horizon
        if not 1 <= self.control_horizon <= self.horizon:
            raise ValueError("control horizon must lie in [1, horizon]")
        if self.model_dt <= 0:
            raise ValueError("model_dt must be positive")
        self.q_weights = _as_weight_matrix(self.q_weights, n, "q_weights")
        self.r_u = _as_weight_matrix(self.r_u, q, "r_u")
        self.r_du = _as_weight_matrix(self.r_du, q, "r_du")
        _check_psd(self.q_weights, "q_weights", strict=False)
        _check_psd(self.r_u, "r_u", strict=True)
        _check_psd(self.r_du, "r_du", strict=True)
        if self.q_terminal is None:
            self.q_terminal = self.q_weights.copy()
        else:
            self.q_terminal = _as_weight_matrix(self.q_terminal, n, "q_terminal")
            _check_psd(self.q_terminal, "q_terminal", strict=False)
        self.u_min = None if self.u_min is None else _as_bound(self.u_min, q, -np.inf)
        self.u_max = None if self.u_max is None else _as_bound(self.u_max, q, np.inf)
        if self.u_min is not None and self.u_max is not None \
                and np.any(self.u_min > self.u_max):
            raise ValueError("u_min exceeds u_max")
        self.du_min = None if self.du_min is None else _as_bound(self.du_min, q, -np.inf)
        self.du_max = None if self.du_max is None else _as_bound(self.du_max, q, np.inf)
        if self.du_min is not None and np.any(self.du_min > 0):
            raise ValueError("du_min must allow holding the input (<= 0)")
        if self.du_max is not None and np.any(self.du_max < 0):
            raise ValueError("du_max must allow holding the input (>= 0)")
        self.state_constraints = tuple(self.state_constraints)
        for c in self.state_constraints:
            if not 0 <= c.index < n:
                raise ValueError(f"constraint index {c.index} out of range")
        if self.objective not in ("quadratic", "treatment"):
            raise ValueError("objective must be 'quadratic' or 'treatment'")
        self.treatment_terms = tuple((int(i), float(w)) for i, w in self.treatment_terms)
        for i, _ in self.treatment_terms:
            if not 0 <= i < n:
                raise ValueError(f"treatment state index {i} out of range")


class ReferenceSignal:
    """Target state trajectory; constant or a function of time."""

    def __init__(self, fn, n_states):
        self._fn = fn
        self.n_states = n_states

    @classmethod
    def constant(cls, value):
        value = np.asarray(value, dtype=float)
        return cls(lambda t: value, value.shape[0])

    @classmethod
    def time_varying(cls, fn, n_states):
        return cls(lambda t: np.asarray(fn(t), dtype=float), n_states)

    def at(self, t):
        return self._fn(t)

    def horizon(self, t0, dt, steps):
        return np.asarray([self._fn(t0 + k * dt) for k in range(steps + 1)])


def _smooth_abs(z, eps):
    return np.sqrt(z * z + eps * eps)


def _penalty_batch(states, cfg):
    # states: (B, m_p + 1, n); current state excluded, it is not a decision
    total = np.zeros(states.shape[0])
    for c in cfg.state_constraints:
        x = states[:, 1:, c.index]
        if c.lower is not None:
            total += c.weight * (np.maximum(c.lower - x, 0.0) ** 2).sum(axis=1)
        if c.upper is not None:
            total += c.weight * (np.maximum(x - c.upper, 0.0) ** 2).sum(axis=1)
    return total


def stage_cost(x, u, du, ref_value, cfg):
    """Realized one-step cost of applying ``u`` (previous input + ``du``)
    in state ``x`` while tracking ``ref_value``; includes any soft state
    constraint penalty at ``x``."""
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    du = np.atleast_1d(np.asarray(du, dtype=float))
    err = x - np.asarray(ref_value, dtype=float)
    if cfg.objective == "quadratic":
        cost = float(err @ cfg.q_weights @ err + u @ cfg.r_u @ u + du @ cfg.r_du @ du)
    else:
        cost = 0.0
        for i, w in cfg.treatment_terms:
            dev = err[i]
            cost += w * (dev if cfg.treatment_signed else _smooth_abs(dev, cfg.smooth_eps))
        cost += float(_smooth_abs(u, cfg.smooth_eps).sum())
    penalty = 0.0
    for c in cfg.state_constraints:
        if c.lower is not None:
            penalty += c.weight * max(c.lower - x[c.index], 0.0) ** 2
        if c.upper is not None:
            penalty += c.weight * max(x[c.index] - c.upper, 0.0) ** 2
    return cost + penalty


class _HorizonProblem:
    """Finite-horizon cost as a function of the input-increment vector."""

    def __init__(self, model, x0, u_prev, ref_values, cfg):
        self.model = model
        self.x0 = np.asarray(x0, dtype=float)
        self.u_prev = np.asarray(u_prev, dtype=float)
        self.refs = np.asarray(ref_values, dtype=float)  # (m_p + 1, n)
        if self.refs.shape != (cfg.horizon + 1, cfg.n_states):
            raise ValueError("need one reference value per predicted sample")
        self.cfg = cfg
        self.n_vars = cfg.control_horizon * cfg.n_inputs

    def inputs_from_deltas(self, z):
        """Map increments (B, m_c * q) to feasible input sequences (B, m_c, q)."""
        cfg = self.cfg
        z = np.atleast_2d(np.asarray(z, dtype=float))
        nb = z.shape[0]
        z = z.reshape(nb, cfg.control_horizon, cfg.n_inputs)
        u = np.empty_like(z)
        prev = np.tile(self.u_prev, (nb, 1))
        for k in range(cfg.control_horizon):
            cur = prev + z[:, k, :]
            if cfg.u_min is not None:
                cur = np.maximum(cur, cfg.u_min)
            if cfg.u_max is not None:
                cur = np.minimum(cur, cfg.u_max)
            u[:, k, :] = cur
            prev = cur
        return u

    def extend(self, u):
        """Hold the last optimized input through the prediction horizon."""
        cfg = self.cfg
        if cfg.horizon == cfg.control_horizon:
            return u
        tail = np.repeat(u[:, -1:, :], cfg.horizon - cfg.control_horizon, axis=1)
        return np.concatenate([u, tail], axis=1)

    def cost_of_inputs(self, u):
        """Cost of input sequences (B, m_c, q); also returns predictions."""
        cfg = self.cfg
        useq = self.extend(u)
        states, fail_step = rollout_batch(self.model, self.x0, useq, cfg.model_dt)
        err = states - self.refs[None, :, :]
        if cfg.objective == "quadratic":
            run = np.einsum("bki,ij,bkj->b", err[:, :-1, :], cfg.q_weights,
                            err[:, :-1, :])
            term = np.einsum("bi,ij,bj->b", err[:, -1, :], cfg.q_terminal,
                             err[:, -1, :])
            du = np.diff(np.concatenate(
                [np.tile(self.u_prev, (u.shape[0], 1, 1)), u], axis=1), axis=1)
            cost = (run + term
                    + np.einsum("bki,ij,bkj->b", u, cfg.r_u, u)
                    + np.einsum("bki,ij,bkj->b", du, cfg.r_du, du))
        else:
            cost = np.zeros(states.shape[0])
            for i, w in cfg.treatment_terms:
                dev = err[:, :, i]
                cost += w * (dev if cfg.treatment_signed
                             else _smooth_abs(dev, cfg.smooth_eps)).sum(axis=1)
            cost += _smooth_abs(useq, cfg.smooth_eps).sum(axis=(1, 2))
        cost = cost + _penalty_batch(states, cfg)
        failed = fail_step <= cfg.horizon
        if failed.any():
            cost = np.where(
                failed,
                _BARRIER * (1.0 + (cfg.horizon + 1 - fail_step) / cfg.horizon),
                cost)
        return cost, states, failed

    def cost(self, z):
        c, _, _ = self.cost_of_inputs(self.inputs_from_deltas(z))
        return float(c[0])

    def gradient(self, z):
        """Central finite-difference gradient, one batched rollout."""
        return self.cost_and_grad(z)[1]

    def cost_and_grad(self, z):
        # central differences: a one-sided probe reads a spurious zero
        # gradient whenever the cumulative input sits on a clipped bound
        # (the surface is flat on the clipped side), which would pin a
        # saturated input there for good
        z = np.asarray(z, dtype=float)
        h = self.cfg.fd_step * np.maximum(1.0, np.abs(z))
        batch = np.tile(z, (2 * self.n_vars + 1, 1))
        batch[1:self.n_vars + 1] += np.diag(h)
        batch[self.n_vars + 1:] -= np.diag(h)
        costs, _, _ = self.cost_of_inputs(self.inputs_from_deltas(batch))
        grad = (costs[1:self.n_vars + 1] - costs[self.n_vars + 1:]) / (2.0 * h)
        return float(costs[0]), grad


def horizon_problem(model, x0, u_prev, ref, cfg, t0=0.0):
    """Build the horizon cost/gradient object the solver minimizes."""
    refs = ref.horizon(t0, cfg.model_dt, cfg.horizon)
    return _HorizonProblem(model, x0, u_prev, refs, cfg)


def horizon_cost(model, x0, u_seq, ref, cfg, u_prev=None, t0=0.0):
    """Cost of an explicit input sequence over the prediction horizon.

    ``u_seq`` is (q, m_c).  Returns (cost, predicted_states) where the
    predictions are (n, m_p + 1).  A model blow-up inside the horizon
    yields a large finite barrier value instead of NaN.
    """
    u_seq = np.atleast_2d(np.asarray(u_seq, dtype=float))
    if u_prev is None:
        u_prev = np.zeros(cfg.n_inputs)
    prob = horizon_problem(model, x0, u_prev, ref, cfg, t0)
    u = u_seq.T[None, :, :]
    if u.shape[1] != cfg.control_horizon:
        raise ValueError("input sequence length must equal the control horizon")
    cost, states, _ = prob.cost_of_inputs(u)
    return float(cost[0]), states[0].T


@dataclass
class MpcSolution:
    """One controller step: feasible input plan and its predicted outcome."""

    u_sequence: np.ndarray
    predicted_states: np.ndarray
    cost: float
    iterations: int
    converged: bool
    iterate_costs: np.ndarray
    diverged: bool = False

    @property
    def first_input(self):
        return self.u_sequence[:, 0].copy()


def solve_mpc_step(model, x0, u_prev, ref, cfg, warm_start=None, t0=0.0):
    """Minimize the horizon cost and return a feasible input sequence.

    ``warm_start`` may be the previous step's solution (or its input
    sequence); it is shifted one step, the last entry repeated.  The
    returned plan satisfies input and rate bounds exactly regardless of
    optimizer termination; ``converged`` records whether the tolerance was
    met within the iteration budget.
    """
    prob = horizon_problem(model, x0, u_prev, ref, cfg, t0)
    m_c, q = cfg.control_horizon, cfg.n_inputs
    if warm_start is not None:
        u_ws = warm_start.u_sequence if isinstance(warm_start, MpcSolution) else warm_start
        u_ws = np.atleast_2d(np.asarray(u_ws, dtype=float))
        shifted = np.concatenate([u_ws[:, 1:], u_ws[:, -1:]], axis=1)
        z0 = np.diff(np.concatenate([u_prev[:, None], shifted], axis=1), axis=1)
        z0 = z0.T.reshape(-1)
    else:
        z0 = np.zeros(m_c * q)
    lo = np.tile(-np.inf if cfg.du_min is None else cfg.du_min, m_c)
    hi = np.tile(np.inf if cfg.du_max is None else cfg.du_max, m_c)
    z0 = np.clip(z0, lo, hi)
    iterate_costs = [prob.cost(z0)]

    def record(zk):
        iterate_costs.append(prob.cost(zk))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(prob.cost_and_grad, z0, jac=True, method="L-BFGS-B",
                       bounds=list(zip(lo, hi)), callback=record,
                       options={"maxiter": cfg.max_iterations,
                                "ftol": cfg.cost_tolerance,
                                "gtol": 1e-12})
    u = prob.inputs_from_deltas(res.x[None, :])
    cost, states, failed = prob.cost_of_inputs(u)
    return MpcSolution(
        u_sequence=u[0].T.copy(),
        predicted_states=states[0].T.copy(),
        cost=float(cost[0]),
        iterations=int(res.nit),
        converged=bool(res.success),
        iterate_costs=np.asarray(iterate_costs),
        diverged=bool(failed[0]),
    )


@dataclass
class ClosedLoopResult:
    """Receding-horizon run at plant rate with per-update diagnostics.

    ``cumulative_costs[j]`` is the running integral of the realized stage
    cost up to and including update ``j`` (stage cost times the update
    interval).  ``success`` is False when the plant diverged; the
    trajectory is then truncated at the last finite sample.
    """

    trajectory: Trajectory
    tick_times: np.ndarray
    applied_inputs: np.ndarray
    stage_costs: np.ndarray
    cumulative_costs: np.ndarray
    solve_times: np.ndarray
    solve_iterations: np.ndarray
    success: bool
    failure_time: float | None = None

    @property
    def final_state(self):
        return self.trajectory.states[:, -1].copy()


def run_closed_loop(plant, model, cfg, ref, x0, duration, update_steps,
                    plant_config, u_init=None, measurement_sigma=0.0, seed=0):
    """Drive a plant with receding-horizon control of an identified model.

    The controller re-plans every ``update_steps`` plant steps and applies
    the first planned input, held constant in between.  Warm starts shift
    the previous plan.  A zero ``duration`` returns an empty result.

    Parameters
    ----------
    plant : SystemSpec
    model : SparseModel or LinearModel
        Prediction model used by the controller.
    cfg : MpcConfig
    ref : ReferenceSignal
    x0 : array, shape (n,)
    duration : float
        Must be a nonnegative multiple of the update interval.
    update_steps : int
        Plant steps between controller updates.
    plant_config : IntegratorConfig
    measurement_sigma : float
        Optional Gaussian noise on the state fed back to the controller.
    """
    if update_steps < 1:
        raise ValueError("update_steps must be >= 1")
    interval = update_steps * plant_config.dt
    n_ticks = int(round(duration / interval))
    if abs(duration - n_ticks * interval) > 1e-9 * max(1.0, abs(duration)):
        raise ValueError("duration must be a multiple of the update interval")
    x = np.asarray(x0, dtype=float).copy()
    q = cfg.n_inputs
    u_prev = np.zeros(q) if u_init is None else np.asarray(u_init, dtype=float).copy()
    rng = np.random.default_rng(seed) if measurement_sigma > 0 else None

    if n_ticks == 0:
        traj = Trajectory(np.array([0.0]), x[:, None], np.zeros((q, 1)))
        empty = np.zeros(0)
        return ClosedLoopResult(traj, empty, np.zeros((q, 0)), empty, empty,
                                empty, np.zeros(0, dtype=int), True)

    times = [np.array([0.0])]
    states = [x[:, None].copy()]
    inputs = [u_prev[:, None].copy()]
    tick_times = np.empty(n_ticks)
    applied = np.empty((q, n_ticks))
    stage_costs = np.empty(n_ticks)
    solve_times = np.empty(n_ticks)
    solve_iters = np.empty(n_ticks, dtype=int)
    warm = None
    success = True
    failure_time = None
    done = 0
    for j in range(n_ticks):
        t_j = j * interval
        x_meas = x if rng is None else x + rng.normal(0.0, measurement_sigma, x.shape)
        t_start = time.perf_counter()
        sol = solve_mpc_step(model, x_meas, u_prev, ref, cfg, warm_start=warm, t0=t_j)
        solve_times[j] = time.perf_counter() - t_start
        solve_iters[j] = sol.iterations
        u_apply = sol.first_input
        tick_times[j] = t_j
        applied[:, j] = u_apply
        stage_costs[j] = stage_cost(x, u_apply, u_apply - u_prev, ref.at(t_j), cfg)
        try:
            seg = integrate(plant, x, constant_signal(u_apply),
                            (t_j, t_j + interval), plant_config)
        except DivergenceError as exc:
            success = False
            failure_time = exc.last_valid_time
            done = j + 1
            if exc.partial is not None and exc.partial.n_samples > 1:
                times.append(exc.partial.times[1:])
                states.append(exc.partial.states[:, 1:])
                inputs.append(np.tile(u_apply[:, None],
                                      (1, exc.partial.n_samples - 1)))
            break
        times.append(seg.times[1:])
        states.append(seg.states[:, 1:])
        inputs.append(np.tile(u_apply[:, None], (1, seg.n_samples - 1)))
        x = seg.final_state
        u_prev = u_apply
        warm = sol
        done = j + 1

    traj = Trajectory(np.concatenate(times), np.concatenate(states, axis=1),
                      np.concatenate(inputs, axis=1))
    stage = stage_costs[:done]
    return ClosedLoopResult(
        trajectory=traj,
        tick_times=tick_times[:done],
        applied_inputs=applied[:, :done],
        stage_costs=stage,
        cumulative_costs=np.cumsum(stage * interval),
        solve_times=solve_times[:done],
        solve_iterations=solve_iters[:done],
        success=success,
        failure_time=failure_time,
    )
