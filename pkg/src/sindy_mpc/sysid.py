"""Model identification from actuated trajectory data.

Two model families are fitted here.  Sparse nonlinear models regress state
derivatives (or advanced states, in the discrete form) onto a candidate
function library with sequentially thresholded least squares, yielding a
small set of active terms.  Linear models regress advanced states onto
states and inputs, optionally with delay embedding or a polynomial lift.

The same prediction kernels serve single-trajectory validation and the
batched horizon rollouts used by the controller.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory, eval_signal
from .features import (FeatureMatrix, LibrarySpec, build_library,
                       evaluate_library, unscale_coefficients)

__all__ = [
    "ConditioningWarning",
    "UnderdeterminedWarning",
    "SparseModel",
    "LinearModel",
    "NoiseSpec",
    "FeedbackLaw",
    "StlsResult",
    "compute_derivatives",
    "stls",
    "adapt_thresholds",
    "fit_sindyc",
    "fit_dmdc",
    "fit_delay_dmdc",
    "fit_edmdc",
    "identify_feedback",
    "add_noise",
    "noise_sigma",
    "predict",
    "rollout_batch",
    "true_sparse_model",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
    "coefficient_table",
]

# states frozen at their last finite value count as failed from this step on
_BLOWUP_LIMIT = 1e12


class ConditioningWarning(UserWarning):
    """Regression matrix was rank deficient; minimum-norm solution used."""


class UnderdeterminedWarning(UserWarning):
    """Fewer samples than unknowns; minimum-norm solution returned."""


@dataclass
class SparseModel:
    """Sparse dynamics model: coefficients over a function library.

    ``coefficients`` is (n, p) in the *unnormalized* library basis.  The
    continuous form models derivatives, the discrete form the next sample
    at step ``dt``.
    """

    coefficients: np.ndarray
    library: LibrarySpec
    form: str
    dt: float
    thresholds: np.ndarray | None = None

    def __post_init__(self):
        self.coefficients = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if self.form not in ("continuous", "discrete"):
            raise ValueError("form must be 'continuous' or 'discrete'")

    @property
    def n_states(self):
        return self.coefficients.shape[0]

    @property
    def n_inputs(self):
        return len(self.library.variables) - self.n_states

    @property
    def is_continuous(self):
        return self.form == "continuous"

    def _theta(self, x, u):
        return evaluate_library(self.library, np.asarray(x, dtype=float)[:, None],
                                np.asarray(u, dtype=float)[:, None])[:, 0]

    def continuous_rhs(self, x, u):
        if not self.is_continuous:
            raise ValueError("discrete model has no continuous right-hand side")
        return self.coefficients @ self._theta(x, u)

    def step(self, x, u):
        if self.is_continuous:
            raise ValueError("continuous model: use an integrator, not step()")
        return self.coefficients @ self._theta(x, u)

    def support(self):
        return self.coefficients != 0.0


@dataclass
class LinearModel:
    """Discrete linear model ``z' = A z + B v`` at fixed step ``dt``.

    Plain form: z is the state minus ``state_offset`` and v the input.
    Delay form: z stacks ``delays`` lagged copies of the offset state and v
    stacks equally many lagged inputs.  Lifted form: z is a library
    evaluation of (state, input) and ``readback`` gives the rows holding
    the plain state coordinates.
    """

    a: np.ndarray
    b: np.ndarray
    dt: float
    state_offset: np.ndarray
    kind: str = "dmdc"
    n_states: int = 0
    n_inputs: int = 0
    delays: int = 1
    lag_steps: int = 1
    library: LibrarySpec | None = None
    readback: np.ndarray | None = None

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.state_offset = np.asarray(self.state_offset, dtype=float)
        if self.kind not in ("dmdc", "delay", "polylift"):
            raise ValueError(f"unknown linear model kind {self.kind!r}")

    @property
    def is_continuous(self):
        return False

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.kind == "dmdc":
            return self.a @ (x - self.state_offset) + self.b @ u + self.state_offset
        if self.kind == "polylift":
            z = evaluate_library(self.library, x[:, None], u[:, None])[:, 0]
            return (self.a @ z + self.b @ u)[self.readback]
        raise ValueError("delay models need a history; use predict() or rollout_batch()")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian measurement noise; the standard deviation is
    ``magnitude`` times the largest per-state standard deviation of the
    clean data."""

    magnitude: float
    seed: int = 0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("noise magnitude must be nonnegative")


@dataclass
class FeedbackLaw:
    """Sparse static map from state to input, u = Xi * theta(x)."""

    coefficients: np.ndarray
    library: LibrarySpec

    def __call__(self, x):
        theta = evaluate_library(self.library, np.asarray(x, dtype=float)[:, None])
        return self.coefficients @ theta[:, 0]


@dataclass
class StlsResult:
    coefficients: np.ndarray
    support: np.ndarray
    iterations: int
    converged: bool
    support_history: list


def _moving_average(values, window):
    """Centered moving average along axis 1, window shrinking at the edges."""
    if window < 2:
        return values
    half = window // 2
    m = values.shape[1]
    csum = np.concatenate([np.zeros((values.shape[0], 1)), np.cumsum(values, axis=1)],
                          axis=1)
    lo = np.maximum(0, np.arange(m) - half)
    hi = np.minimum(m, np.arange(m) + half + 1)
    return (csum[:, hi] - csum[:, lo]) / (hi - lo)


def compute_derivatives(traj, smooth_window=None):
    """Finite-difference state derivatives on a uniform grid.

    Second-order central differences in the interior and one-sided
    second-order stencils at the ends (both exact on quadratics).  With
    ``smooth_window`` the states are passed through a centered moving
    average first; use this for noisy measurements.
    """
    t = traj.times
    if t.shape[0] < 3:
        raise ValueError("need at least three samples to differentiate")
    steps = np.diff(t)
    dt = steps[0]
    if np.any(np.abs(steps - dt) > 1e-9 * max(abs(dt), 1.0)):
        raise ValueError("time grid must be uniform")
    x = traj.states
    if smooth_window is not None:
        if smooth_window < 3 or smooth_window % 2 == 0:
            raise ValueError("smooth_window must be odd and >= 3")
        x = _moving_average(x, smooth_window)
    dx = np.empty_like(x)
    dx[:, 1:-1] = (x[:, 2:] - x[:, :-2]) / (2.0 * dt)
    dx[:, 0] = (-3.0 * x[:, 0] + 4.0 * x[:, 1] - x[:, 2]) / (2.0 * dt)
    dx[:, -1] = (3.0 * x[:, -1] - 4.0 * x[:, -2] + x[:, -3]) / (2.0 * dt)
    return dx


def _lstsq(a, y):
    sol, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    return sol, rank


def stls(theta, targets, thresholds, max_iter=25):
    """Sequentially thresholded least squares.

    Parameters
    ----------
    theta : FeatureMatrix or array, shape (p, m)
        Candidate function values.  Thresholds act on coefficients in this
        basis; pass a normalized matrix to threshold scaled coefficients.
    targets : array, shape (n, m)
    thresholds : float or array, shape (n,)
        Per-target-row magnitude cutoff; entries strictly below it are
        removed before the row is re-regressed on the survivors.
    max_iter : int
        Sweep budget; iteration stops early once the active set repeats.

    Returns
    -------
    StlsResult
        Coefficients (n, p) in the given basis, final support, and the
        support after each sweep (never growing).
    """
    values = theta.values if isinstance(theta, FeatureMatrix) else np.atleast_2d(theta)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if values.shape[1] != targets.shape[1]:
        raise ValueError("feature and target sample counts disagree")
    n = targets.shape[0]
    p = values.shape[0]
    eps = np.broadcast_to(np.asarray(thresholds, dtype=float), (n,)).copy()
    if np.any(eps < 0):
        raise ValueError("thresholds must be nonnegative")

    a = values.T
    xi, rank = _lstsq(a, targets.T)
    xi = xi.T
    deficient = rank < a.shape[1]
    support = np.ones((n, p), dtype=bool)
    history = []
    iterations = 0
    converged = False
    for _ in range(max_iter):
        iterations += 1
        new_support = np.abs(xi) >= eps[:, None]
        history.append(new_support.copy())
        if np.array_equal(new_support, support) and iterations > 1:
            converged = True
            break
        support = new_support
        xi = np.zeros_like(xi)
        for k in range(n):
            cols = support[k]
            if not cols.any():
                continue
            sol, rank = _lstsq(a[:, cols], targets[k])
            xi[k, cols] = sol
            deficient = deficient or rank < int(cols.sum())
    else:
        converged = False
    if deficient:
        warnings.warn("rank-deficient regression; minimum-norm solution used",
                      ConditioningWarning, stacklevel=2)
    return StlsResult(coefficients=xi, support=support, iterations=iterations,
                      converged=converged, support_history=history)


def _regression_data(traj, library, form, smooth_window, derivative_source):
    if form == "continuous":
        if derivative_source == "measured":
            if traj.derivatives is None:
                raise ValueError("trajectory carries no measured derivatives")
            return traj.states, traj.inputs, traj.derivatives
        use_fd = derivative_source == "finite_difference" or (
            derivative_source == "auto" and traj.derivatives is None)
        if use_fd:
            # smoothing is a trajectory preprocess: the differenced states
            # and the regression features must come from the same smoothed
            # signal, otherwise the noise bias differs between the two sides
            targets = compute_derivatives(traj, smooth_window)
            states = traj.states
            if smooth_window is not None:
                states = _moving_average(traj.states, smooth_window)
            return states, traj.inputs, targets
        if derivative_source != "auto":
            raise ValueError(f"unknown derivative source {derivative_source!r}")
        return traj.states, traj.inputs, traj.derivatives
    if form == "discrete":
        return traj.states[:, :-1], traj.inputs[:, :-1], traj.states[:, 1:]
    raise ValueError("form must be 'continuous' or 'discrete'")


def fit_sindyc(traj, library, thresholds, form="continuous", smooth_window=None,
               derivative_source="auto", max_iter=25):
    """Fit a sparse dynamics model with actuation.

    The continuous form regresses state derivatives onto the library
    evaluated at (states, inputs); derivatives recorded by the simulator
    are used when present (``derivative_source="auto"``), otherwise finite
    differences, optionally smoothed.  The discrete form regresses each
    next sample onto the library at the current one.

    Thresholds act on coefficients in the (possibly normalized) library
    basis; returned coefficients are always unnormalized.
    """
    states, inputs, targets = _regression_data(traj, library, form,
                                               smooth_window, derivative_source)
    if states.shape[0] + inputs.shape[0] != len(library.variables):
        raise ValueError("library variables do not match state/input dimensions")
    theta = build_library(states, inputs, library)
    result = stls(theta, targets, thresholds, max_iter=max_iter)
    xi = unscale_coefficients(result.coefficients, theta.column_scales)
    eps = np.broadcast_to(np.asarray(thresholds, dtype=float),
                          (targets.shape[0],)).copy()
    return SparseModel(coefficients=xi, library=library, form=form,
                       dt=traj.dt, thresholds=eps)


def adapt_thresholds(traj, library, initial, form="continuous",
                     smooth_window=None, derivative_source="auto",
                     floor=1e-12, max_iter=25):
    """Per-state thresholds, relaxed until every dynamics row is nonzero.

    Starting from ``initial`` (scalar or per-state), any state whose fitted
    row comes back empty has its threshold divided by 10 and is refitted,
    down to ``floor``; if the row is still empty there a warning is issued
    and the floor value kept.
    """
    states, inputs, targets = _regression_data(traj, library, form,
                                               smooth_window, derivative_source)
    theta = build_library(states, inputs, library)
    n = targets.shape[0]
    eps = np.broadcast_to(np.asarray(initial, dtype=float), (n,)).astype(float).copy()
    for k in range(n):
        while True:
            row = stls(theta, targets[k:k + 1], eps[k], max_iter=max_iter)
            if row.support.any():
                break
            if eps[k] <= floor:
                warnings.warn(f"state {k}: no active terms even at threshold floor",
                              UserWarning, stacklevel=2)
                break
            eps[k] = max(eps[k] / 10.0, floor)
    return eps


def fit_dmdc(traj, state_offset=None):
    """Least-squares linear model x' = A (x - c) + B u + c.

    ``state_offset`` c defaults to zero; passing a goal state makes the
    model linear in the deviation from it.  Underdetermined problems warn
    and return the minimum-norm solution.
    """
    n, q = traj.n_states, traj.n_inputs
    offset = np.zeros(n) if state_offset is None else np.asarray(state_offset, dtype=float)
    x = traj.states[:, :-1] - offset[:, None]
    xp = traj.states[:, 1:] - offset[:, None]
    u = traj.inputs[:, :-1]
    z = np.vstack([x, u])
    if z.shape[1] < z.shape[0]:
        warnings.warn("fewer sample pairs than unknowns; minimum-norm solution",
                      UnderdeterminedWarning, stacklevel=2)
    g, rank = _lstsq(z.T, xp.T)
    g = g.T
    return LinearModel(a=g[:, :n], b=g[:, n:], dt=traj.dt, state_offset=offset,
                       kind="dmdc", n_states=n, n_inputs=q)


def fit_delay_dmdc(traj, delays, state_offset=None, lag_steps=1):
    """Linear model on delay-embedded data.

    The regression state stacks ``delays`` copies of the offset state at
    lags 0, tau, 2 tau, ... (tau = ``lag_steps`` samples); the regression
    input stacks the input at the same lags.  ``delays=1`` coincides with
    :func:`fit_dmdc`.
    """
    if delays < 1 or lag_steps < 1:
        raise ValueError("delays and lag_steps must be >= 1")
    n, q = traj.n_states, traj.n_inputs
    offset = np.zeros(n) if state_offset is None else np.asarray(state_offset, dtype=float)
    x = traj.states - offset[:, None]
    u = traj.inputs
    m = traj.n_samples
    first = (delays - 1) * lag_steps
    if first + 2 > m:
        raise ValueError("trajectory too short for the requested embedding")
    rows_z = [x[:, first - i * lag_steps: m - 1 - i * lag_steps]
              for i in range(delays)]
    rows_u = [u[:, first - i * lag_steps: m - 1 - i * lag_steps]
              for i in range(delays)]
    z = np.vstack(rows_z)
    v = np.vstack(rows_u)
    zp_rows = [x[:, first + 1 - i * lag_steps: m - i * lag_steps]
               for i in range(delays)]
    zp = np.vstack(zp_rows)
    reg = np.vstack([z, v])
    if reg.shape[1] < reg.shape[0]:
        warnings.warn("fewer sample pairs than unknowns; minimum-norm solution",
                      UnderdeterminedWarning, stacklevel=2)
    g, _ = _lstsq(reg.T, zp.T)
    g = g.T
    dn = delays * n
    return LinearModel(a=g[:, :dn], b=g[:, dn:], dt=traj.dt, state_offset=offset,
                       kind="delay", n_states=n, n_inputs=q, delays=delays,
                       lag_steps=lag_steps)


def fit_edmdc(traj, library):
    """Linear model on a polynomial lift of (state, input).

    Regresses the lifted next sample onto the lifted current sample and the
    input.  The library must exclude the constant column (it would make the
    regression matrix rank deficient by duplicating a fixed row) and must
    be unnormalized.  Prediction re-lifts at every step and reads the
    degree-one state coordinates back out.
    """
    if library.include_constant:
        raise ValueError("lift library must exclude the constant column; "
                         "see library_without_constant()")
    if library.normalize:
        raise ValueError("lift library must be unnormalized")
    n, q = traj.n_states, traj.n_inputs
    if len(library.variables) != n + q:
        raise ValueError("library variables do not match state/input dimensions")
    z = evaluate_library(library, traj.states, traj.inputs)
    u = traj.inputs[:, :-1]
    reg = np.vstack([z[:, :-1], u])
    if reg.shape[1] < reg.shape[0]:
        warnings.warn("fewer sample pairs than unknowns; minimum-norm solution",
                      UnderdeterminedWarning, stacklevel=2)
    g, _ = _lstsq(reg.T, z[:, 1:].T)
    g = g.T
    p = z.shape[0]
    exps = library.exponents()
    readback = np.empty(n, dtype=int)
    for i in range(n):
        unit = np.zeros(n + q, dtype=np.int64)
        unit[i] = 1
        matches = np.flatnonzero((exps == unit).all(axis=1))
        if matches.size != 1:
            raise ValueError("library lacks a degree-one column for every state")
        readback[i] = matches[0]
    return LinearModel(a=g[:, :p], b=g[:, p:], dt=traj.dt,
                       state_offset=np.zeros(n), kind="polylift", n_states=n,
                       n_inputs=q, library=library, readback=readback)


def identify_feedback(traj, library, thresholds, max_iter=25):
    """Recover a sparse state-feedback law from closed-loop data.

    Regresses recorded inputs onto a library over the states alone.
    """
    if len(library.variables) != traj.n_states:
        raise ValueError("feedback library must be over the states only")
    theta = build_library(traj.states, None, library)
    result = stls(theta, traj.inputs, thresholds, max_iter=max_iter)
    xi = unscale_coefficients(result.coefficients, theta.column_scales)
    return FeedbackLaw(coefficients=xi, library=library)


def noise_sigma(traj, magnitude):
    """Noise standard deviation for a given relative magnitude."""
    return float(magnitude * np.std(traj.states, axis=1).max())


def add_noise(traj, noise):
    """Corrupt states with seeded Gaussian noise; inputs stay exact.

    Measured derivatives are dropped from the result since they no longer
    describe the corrupted states.  Zero magnitude returns the data
    unchanged (bit for bit).
    """
    sigma = noise_sigma(traj, noise.magnitude)
    states = traj.states.copy()
    if sigma > 0.0:
        rng = np.random.default_rng(noise.seed)
        states = states + rng.normal(0.0, sigma, size=states.shape)
    return Trajectory(traj.times.copy(), states, traj.inputs.copy(), None)


def _delay_input_stack(useq, k, delays, lag):
    # (B, m, q) -> (B, delays*q); indices clamp at zero (history seeded by
    # replicating the earliest input)
    cols = [useq[:, max(k - i * lag, 0), :] for i in range(delays)]
    return np.concatenate(cols, axis=1)


def rollout_batch(model, x0, useq, dt):
    """Propagate a model under a batch of input sequences.

    Parameters
    ----------
    model : SparseModel or LinearModel
    x0 : array, shape (n,)
        Shared initial state.
    useq : array, shape (B, n_steps, q)
    dt : float
        Step size; must equal ``model.dt`` for discrete models.

    Returns
    -------
    states : array, shape (B, n_steps + 1, n)
    fail_step : int array, shape (B,)
        Index of the first non-finite step per batch member (states are
        frozen at the last finite value from there on); ``n_steps + 1``
        where the rollout stayed finite.
    """
    useq = np.asarray(useq, dtype=float)
    if useq.ndim != 3:
        raise ValueError("useq must have shape (batch, steps, inputs)")
    nb, n_steps, q = useq.shape
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    if not model.is_continuous and abs(dt - model.dt) > 1e-9 * model.dt:
        raise ValueError("rollout dt must equal the discrete model dt")

    states = np.empty((nb, n_steps + 1, n))
    states[:, 0, :] = x0
    fail_step = np.full(nb, n_steps + 1, dtype=int)
    alive = np.ones(nb, dtype=bool)

    is_sparse = isinstance(model, SparseModel)
    if is_sparse:
        coeffs_t = model.coefficients.T
        spec = model.library

        def _rhs(xb, ub):
            theta = evaluate_library(spec, xb.T, ub.T)
            return theta.T @ coeffs_t
    elif model.kind == "delay":
        offset = model.state_offset
        z = np.tile(np.concatenate([x0 - offset] * model.delays), (nb, 1))
    elif model.kind == "polylift":
        spec = model.library

    x = np.tile(x0, (nb, 1))
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            u = useq[:, k, :]
            if is_sparse and model.is_continuous:
                k1 = _rhs(x, u)
                k2 = _rhs(x + 0.5 * dt * k1, u)
                k3 = _rhs(x + 0.5 * dt * k2, u)
                k4 = _rhs(x + dt * k3, u)
                xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            elif is_sparse:
                xn = _rhs(x, u)
            elif model.kind == "dmdc":
                xn = (x - model.state_offset) @ model.a.T + u @ model.b.T \
                    + model.state_offset
            elif model.kind == "delay":
                ustack = _delay_input_stack(useq, k, model.delays, model.lag_steps)
                z = z @ model.a.T + ustack @ model.b.T
                xn = z[:, :n] + model.state_offset
            else:  # polylift
                theta = evaluate_library(spec, x.T, u.T)
                zp = theta.T @ model.a.T + u @ model.b.T
                xn = zp[:, model.readback]
            bad = ~(np.isfinite(xn).all(axis=1) & (np.abs(xn) < _BLOWUP_LIMIT).all(axis=1))
            newly = alive & bad
            if newly.any():
                fail_step[newly] = k + 1
                alive &= ~newly
                xn[newly] = x[newly]
                if not is_sparse and model.kind == "delay":
                    z[newly] = np.nan_to_num(z[newly], nan=0.0,
                                             posinf=_BLOWUP_LIMIT,
                                             neginf=-_BLOWUP_LIMIT)
            x = np.where(alive[:, None], xn, x)
            states[:, k + 1, :] = x
    return states, fail_step


def predict(model, x0, signal, duration, dt=None):
    """Roll a fitted model forward under an input signal.

    Continuous sparse models are integrated with fixed-step RK4 at ``dt``
    (the input held over each step); discrete models are iterated at their
    own step, which ``dt`` must match if given.  If the rollout blows up
    the remaining states are NaN and ``diverged_at`` records the last
    finite sample time.
    """
    if model.is_continuous:
        if dt is None:
            raise ValueError("dt is required for continuous models")
    else:
        if dt is None:
            dt = model.dt
        elif abs(dt - model.dt) > 1e-9 * model.dt:
            raise ValueError("dt must equal the discrete model dt")
    n_steps = int(round(duration / dt))
    if n_steps < 1 or abs(duration / dt - n_steps) > 1e-9 * max(1.0, duration / dt):
        raise ValueError("duration must be a positive multiple of dt")
    times = dt * np.arange(n_steps + 1)
    q = model.n_inputs
    useq = np.empty((1, n_steps, q))
    for k in range(n_steps):
        useq[0, k, :] = eval_signal(signal, times[k])
    states, fail_step = rollout_batch(model, np.asarray(x0, dtype=float), useq, dt)
    out = states[0].T.copy()
    inputs = np.empty((q, n_steps + 1))
    inputs[:, :n_steps] = useq[0].T
    inputs[:, -1] = eval_signal(signal, times[-1])
    diverged_at = None
    if fail_step[0] <= n_steps:
        out[:, fail_step[0]:] = np.nan
        diverged_at = float(times[fail_step[0] - 1])
    return Trajectory(times, out, inputs, None, diverged_at=diverged_at)


def true_sparse_model(system, poly_order=None, form="continuous"):
    """Exact coefficients of a built-in plant on a monomial library.

    Useful as an oracle for identification tests and as a perfect model for
    the controller.  Raises for identified kinds.
    """
    from .features import default_library

    p = system.params
    if system.kind == "LotkaVolterra":
        order = poly_order or 2
        terms = [
            {"x1": p["prey_growth"], "x1*x2": -p["predation"]},
            {"x2": -p["predator_death"], "x1*x2": p["predator_growth"], "u": 1.0},
        ]
    elif system.kind == "Lorenz":
        order = poly_order or 2
        terms = [
            {"x1": -p["sigma"], "x2": p["sigma"], "u": 1.0},
            {"x1": p["rho"], "x2": -1.0, "x1*x3": -1.0},
            {"x3": -p["beta"], "x1*x2": 1.0},
        ]
    elif system.kind == "F8":
        order = poly_order or 3
        terms = [
            {"x1": -0.877, "x3": 1.0, "x1*x3": -0.088, "x1^2": 0.47,
             "x2^2": -0.019, "x1^2*x3": -1.0, "x1^3": 3.846, "u": -0.215,
             "x1^2*u": 0.28, "x1*u^2": 0.47, "u^3": 0.63},
            {"x3": 1.0},
            {"x1": -4.208, "x3": -0.396, "x1^2": -0.47, "x1^3": -3.564,
             "u": -20.967, "x1^2*u": 6.265, "x1*u^2": 46.0, "u^3": 61.1},
        ]
    elif system.kind == "HIV":
        order = poly_order or 3
        beta_eff = p["infection_rate"] * p["drug_efficacy"]
        c2q = p["prolif_2"] * p["diff_fraction"]
        terms = [
            {"1": p["production"], "x1": -p["death_rate"],
             "x1*x2": -p["infection_rate"], "x1*x2*u": beta_eff},
            {"x2": -p["infected_death_rate"], "x1*x2": p["infection_rate"],
             "x2*x4": -p["kill_rate_1"], "x2*x5": -p["kill_rate_2"],
             "x1*x2*u": -beta_eff},
            {"x3": -p["decay_2"], "x2*x3": -c2q, "x1*x2*x3": p["prolif_2"]},
            {"x4": -p["decay_1"], "x2*x4": p["prolif_1"]},
            {"x5": -p["effector_decay"], "x2*x3": c2q},
        ]
    else:
        raise ValueError(f"no closed-form coefficients for kind {system.kind!r}")
    library = default_library(system.n_states, system.n_inputs, order)
    names = library.column_names()
    index = {name: j for j, name in enumerate(names)}
    xi = np.zeros((system.n_states, len(names)))
    for i, row in enumerate(terms):
        for name, value in row.items():
            xi[i, index[name]] = value
    return SparseModel(coefficients=xi, library=library, form=form, dt=0.0)


def model_to_json(model):
    if isinstance(model, SparseModel):
        return {
            "model_type": "sparse",
            "coefficients": model.coefficients.tolist(),
            "library": model.library.to_json(),
            "form": model.form,
            "dt": model.dt,
            "thresholds": None if model.thresholds is None else model.thresholds.tolist(),
        }
    if isinstance(model, LinearModel):
        return {
            "model_type": "linear",
            "kind": model.kind,
            "a": model.a.tolist(),
            "b": model.b.tolist(),
            "dt": model.dt,
            "state_offset": model.state_offset.tolist(),
            "n_states": model.n_states,
            "n_inputs": model.n_inputs,
            "delays": model.delays,
            "lag_steps": model.lag_steps,
            "library": None if model.library is None else model.library.to_json(),
            "readback": None if model.readback is None else model.readback.tolist(),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_json(obj):
    if obj.get("model_type") == "sparse":
        thr = obj.get("thresholds")
        return SparseModel(
            coefficients=np.asarray(obj["coefficients"], dtype=float),
            library=LibrarySpec.from_json(obj["library"]),
            form=obj["form"],
            dt=obj["dt"],
            thresholds=None if thr is None else np.asarray(thr, dtype=float),
        )
    if obj.get("model_type") == "linear":
        lib = obj.get("library")
        rb = obj.get("readback")
        return LinearModel(
            a=np.asarray(obj["a"], dtype=float),
            b=np.asarray(obj["b"], dtype=float),
            dt=obj["dt"],
            state_offset=np.asarray(obj["state_offset"], dtype=float),
            kind=obj["kind"],
            n_states=obj["n_states"],
            n_inputs=obj["n_inputs"],
            delays=obj.get("delays", 1),
            lag_steps=obj.get("lag_steps", 1),
            library=None if lib is None else LibrarySpec.from_json(lib),
            readback=None if rb is None else np.asarray(rb, dtype=int),
        )
    raise ValueError("not a recognized model document")


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2)


def load_model(path):
    with open(path) as fh:
        return model_from_json(json.load(fh))


def coefficient_table(model):
    """Human-readable table of the nonzero coefficients per state row."""
    if isinstance(model, SparseModel):
        names = model.library.column_names()
        xi = model.coefficients
    elif isinstance(model, FeedbackLaw):
        names = model.library.column_names()
        xi = model.coefficients
    else:
        raise TypeError("coefficient tables are defined for sparse models only")
    n = xi.shape[0]
    active = np.flatnonzero((xi != 0.0).any(axis=0))
    width = max([len(names[j]) for j in active], default=1)
    header = " " * (width + 2) + "  ".join(f"d{k + 1}".rjust(12) for k in range(n))
    lines = [header]
    for j in active:
        cells = "  ".join(
            f"{xi[k, j]: .5g}".rjust(12) if xi[k, j] != 0.0 else " " * 12
            for k in range(n))
        lines.append(f"{names[j].ljust(width)}  {cells}")
    return "\n".join(lines)
