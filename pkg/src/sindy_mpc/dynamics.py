"""Benchmark plants, excitation signals, and a fixed-step RK4 integrator.

Four forced nonlinear systems are built in: a predator-prey model with
actuation on the predator, the forced Lorenz system, the longitudinal
dynamics of an F-8 aircraft, and a five-state within-host infection model
with treatment input.  Identified models (sparse or linear) can be wrapped
in a :class:`SystemSpec` so they are usable anywhere a plant is expected.

Trajectories store samples column-wise (``states`` is ``n x m``) and can be
round-tripped through CSV without precision loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DivergenceError",
    "EquilibriumNotFoundError",
    "CsvFormatError",
    "SystemSpec",
    "Trajectory",
    "ExcitationSignal",
    "IntegratorConfig",
    "lotka_volterra",
    "lorenz",
    "f8_aircraft",
    "hiv_immune",
    "system_from_model",
    "rhs_eval",
    "integrate",
    "eval_signal",
    "equilibria",
    "f8_reference",
    "schroeder_sweep",
    "sine_product",
    "cubed_sine",
    "prbs",
    "piecewise_constant_random",
    "zero_signal",
    "constant_signal",
    "custom_signal",
    "write_trajectory_csv",
    "read_trajectory_csv",
]


class DivergenceError(RuntimeError):
    """Raised when an integration produces non-finite state values.

    Attributes
    ----------
    last_valid_time : float
        Time of the last finite sample.
    partial : Trajectory | None
        Samples accumulated before the failure, when available.
    """

    def __init__(self, message, last_valid_time, partial=None):
        super().__init__(message)
        self.last_valid_time = last_valid_time
        self.partial = partial


class EquilibriumNotFoundError(ValueError):
    """Raised when a requested equilibrium does not exist for the parameters."""


class CsvFormatError(ValueError):
    """Raised on malformed trajectory CSV input; carries the offending line."""

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class SystemSpec:
    """A simulatable plant: a named benchmark system or an identified model.

    ``kind`` is one of ``LotkaVolterra``, ``Lorenz``, ``F8``, ``HIV``,
    ``IdentifiedSparse`` or ``IdentifiedLinear``.  ``params`` holds the
    physical parameters (or the fitted model object for identified kinds).
    """

    kind: str
    params: dict
    n_states: int
    n_inputs: int

    def __post_init__(self):
        if self.n_states < 1 or self.n_inputs < 0:
            raise ValueError("state/input dimensions must be positive")


def lotka_volterra(prey_growth=0.5, predation=0.025, predator_death=0.5,
                   predator_growth=0.005):
    """Two-species predator-prey dynamics with additive control of the predator."""
    return SystemSpec(
        kind="LotkaVolterra",
        params={
            "prey_growth": float(prey_growth),
            "predation": float(predation),
            "predator_death": float(predator_death),
            "predator_growth": float(predator_growth),
        },
        n_states=2,
        n_inputs=1,
    )


def lorenz(sigma=10.0, beta=8.0 / 3.0, rho=28.0):
    """Forced Lorenz system; the input acts additively on the first state."""
    return SystemSpec(
        kind="Lorenz",
        params={"sigma": float(sigma), "beta": float(beta), "rho": float(rho)},
        n_states=3,
        n_inputs=1,
    )


def f8_aircraft():
    """F-8 longitudinal dynamics: angle of attack, pitch angle, pitch rate.

    The elevator deflection enters through affine, quadratic and cubic terms,
    so the system is non-affine in the control.  Coefficients are fixed.
    """
    return SystemSpec(kind="F8", params={}, n_states=3, n_inputs=1)


def hiv_immune(production=1.0, death_rate=0.1, infection_rate=1.0,
               infected_death_rate=0.2, kill_rate_1=1.0, kill_rate_2=1.0,
               prolif_1=0.03, prolif_2=0.06, decay_1=0.1, decay_2=0.01,
               diff_fraction=0.5, effector_decay=0.1, drug_efficacy=0.9799):
    """Five-state within-host infection model with immune response.

    States: healthy target cells, infected cells, immune memory precursors,
    helper-independent effectors, helper-dependent effectors.  The input is
    the relative drug dose in [0, 1]; at full dose the infection term is
    scaled by ``1 - drug_efficacy``.
    """
    return SystemSpec(
        kind="HIV",
        params={
            "production": float(production),
            "death_rate": float(death_rate),
            "infection_rate": float(infection_rate),
            "infected_death_rate": float(infected_death_rate),
            "kill_rate_1": float(kill_rate_1),
            "kill_rate_2": float(kill_rate_2),
            "prolif_1": float(prolif_1),
            "prolif_2": float(prolif_2),
            "decay_1": float(decay_1),
            "decay_2": float(decay_2),
            "diff_fraction": float(diff_fraction),
            "effector_decay": float(effector_decay),
            "drug_efficacy": float(drug_efficacy),
        },
        n_states=5,
        n_inputs=1,
    )


def system_from_model(model):
    """Wrap a fitted model so it can be simulated like a plant.

    Continuous sparse models expose ``continuous_rhs``; discrete models (any
    kind) expose ``step`` and a ``dt`` and are advanced as maps.
    """
    if getattr(model, "is_continuous", False):
        kind = "IdentifiedSparse"
    elif hasattr(model, "step"):
        kind = "IdentifiedLinear" if not hasattr(model, "continuous_rhs") else "IdentifiedSparse"
    else:
        raise TypeError("model does not expose continuous_rhs or step")
    return SystemSpec(kind=kind, params={"model": model},
                      n_states=model.n_states, n_inputs=model.n_inputs)


def _rhs_lotka(p, x, u):
    x1, x2 = x
    return np.array([
        p["prey_growth"] * x1 - p["predation"] * x1 * x2,
        -p["predator_death"] * x2 + p["predator_growth"] * x1 * x2 + u[0],
    ])


def _rhs_lorenz(p, x, u):
    x1, x2, x3 = x
    return np.array([
        p["sigma"] * (x2 - x1) + u[0],
        x1 * (p["rho"] - x3) - x2,
        x1 * x2 - p["beta"] * x3,
    ])


def _rhs_f8(x, u):
    x1, x2, x3 = x
    w = u[0]
    dx1 = (-0.877 * x1 + x3 - 0.088 * x1 * x3 + 0.47 * x1 * x1
           - 0.019 * x2 * x2 - x1 * x1 * x3 + 3.846 * x1 ** 3
           - 0.215 * w + 0.28 * x1 * x1 * w + 0.47 * x1 * w * w
           + 0.63 * w ** 3)
    dx2 = x3
    dx3 = (-4.208 * x1 - 0.396 * x3 - 0.47 * x1 * x1 - 3.564 * x1 ** 3
           - 20.967 * w + 6.265 * x1 * x1 * w + 46.0 * x1 * w * w
           + 61.1 * w ** 3)
    return np.array([dx1, dx2, dx3])


def _rhs_hiv(p, x, u):
    x1, x2, x3, x4, x5 = x
    infect = p["infection_rate"] * (1.0 - p["drug_efficacy"] * u[0]) * x1 * x2
    return np.array([
        p["production"] - p["death_rate"] * x1 - infect,
        infect - p["infected_death_rate"] * x2
        - p["kill_rate_1"] * x4 * x2 - p["kill_rate_2"] * x5 * x2,
        p["prolif_2"] * x1 * x2 * x3 - p["prolif_2"] * p["diff_fraction"] * x2 * x3
        - p["decay_2"] * x3,
        p["prolif_1"] * x2 * x4 - p["decay_1"] * x4,
        p["prolif_2"] * p["diff_fraction"] * x2 * x3 - p["effector_decay"] * x5,
    ])


def rhs_eval(system, x, u, t=0.0):
    """Evaluate the continuous-time right-hand side of a plant.

    Parameters
    ----------
    system : SystemSpec
    x : array, shape (n,)
    u : array, shape (q,)
    t : float
        Unused by the built-in systems (all are time-invariant); kept so
        custom wrappers can depend on time.

    Returns
    -------
    array, shape (n,)
    """
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if x.shape != (system.n_states,):
        raise ValueError(f"expected state of shape ({system.n_states},), got {x.shape}")
    if u.shape != (system.n_inputs,):
        raise ValueError(f"expected input of shape ({system.n_inputs},), got {u.shape}")
    kind = system.kind
    if kind == "LotkaVolterra":
        return _rhs_lotka(system.params, x, u)
    if kind == "Lorenz":
        return _rhs_lorenz(system.params, x, u)
    if kind == "F8":
        return _rhs_f8(x, u)
    if kind == "HIV":
        return _rhs_hiv(system.params, x, u)
    if kind == "IdentifiedSparse":
        return system.params["model"].continuous_rhs(x, u)
    if kind == "IdentifiedLinear":
        raise ValueError("discrete identified models have no continuous right-hand side")
    raise ValueError(f"unknown system kind {kind!r}")


@dataclass
class Trajectory:
    """Sampled trajectory on a uniform time grid.

    ``states`` is ``(n, m)``, ``inputs`` is ``(q, m)``.  ``derivatives``
    holds the plant right-hand side evaluated at each sample when the
    trajectory came from a simulation of a known system, else None.
    """

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    derivatives: np.ndarray | None = None
    # time of the last finite sample when a model rollout blew up; the
    # remaining states are NaN in that case
    diverged_at: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        m = self.times.shape[0]
        if self.states.shape[1] != m or self.inputs.shape[1] != m:
            raise ValueError("times, states and inputs must share the sample count")
        if self.derivatives is not None:
            self.derivatives = np.atleast_2d(np.asarray(self.derivatives, dtype=float))
            if self.derivatives.shape != self.states.shape:
                raise ValueError("derivatives must match states in shape")

    @property
    def n_states(self):
        return self.states.shape[0]

    @property
    def n_inputs(self):
        return self.inputs.shape[0]

    @property
    def n_samples(self):
        return self.times.shape[0]

    @property
    def dt(self):
        if self.n_samples < 2:
            raise ValueError("need at least two samples to define a step")
        return float(self.times[1] - self.times[0])

    @property
    def final_state(self):
        return self.states[:, -1].copy()

    def subsample(self, every):
        """Keep every ``every``-th sample (including the first)."""
        if every < 1:
            raise ValueError("subsample factor must be >= 1")
        der = None if self.derivatives is None else self.derivatives[:, ::every]
        return Trajectory(self.times[::every], self.states[:, ::every],
                          self.inputs[:, ::every], der)

    def window(self, start, stop):
        """Slice by sample index, keeping derivative data if present."""
        der = None if self.derivatives is None else self.derivatives[:, start:stop]
        return Trajectory(self.times[start:stop], self.states[:, start:stop],
                          self.inputs[:, start:stop], der)


class ExcitationSignal:
    """Time-indexed input signal u(t); deterministic given its parameters.

    Instances are built through the factory functions below.  Randomized
    kinds (PRBS, random steps) precompute their switching schedule from a
    seed so repeated evaluation is reproducible and cheap.
    """

    def __init__(self, kind, params, n_inputs=1):
        self.kind = kind
        self.params = dict(params)
        self.n_inputs = int(n_inputs)
        self._setup()

    def _setup(self):
        p = self.params
        if self.kind == "SchroederSweep":
            k = np.arange(1, int(p["components"]) + 1)
            # flat-spectrum phases keep the crest factor low
            self._phases = -np.pi * k * (k - 1) / int(p["components"])
            self._freqs = 2.0 * np.pi * k * float(p["base_freq"])
        elif self.kind == "PRBS":
            rng = np.random.default_rng(p["seed"])
            nbits = int(math.ceil(float(p["t_max"]) / float(p["bit_duration"]))) + 1
            self._bits = rng.integers(0, 2, size=nbits) * 2.0 - 1.0
        elif self.kind == "PiecewiseConstantRandom":
            rng = np.random.default_rng(p["seed"])
            switch_times = [0.0]
            values = []
            while switch_times[-1] < float(p["t_max"]):
                values.append(rng.uniform(p["low"], p["high"]))
                switch_times.append(switch_times[-1]
                                    + rng.uniform(p["hold_min"], p["hold_max"]))
            self._switch_times = np.asarray(switch_times[1:])
            self._values = np.asarray(values)
        elif self.kind not in ("SineProduct", "CubedSine", "Zero", "Constant", "Custom"):
            raise ValueError(f"unknown signal kind {self.kind!r}")

    def __call__(self, t):
        return eval_signal(self, t)

    def to_json(self):
        if self.kind == "Custom":
            raise TypeError("custom signals are not serializable")
        return {"kind": self.kind, "n_inputs": self.n_inputs, "params": self.params}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], obj["params"], obj.get("n_inputs", 1))


def schroeder_sweep(amplitude=1.0, base_freq=0.05, components=20):
    """Sum of ``components`` harmonics of ``base_freq`` with phases chosen
    for a flat spectrum and low peak amplitude."""
    return ExcitationSignal("SchroederSweep", {
        "amplitude": float(amplitude), "base_freq": float(base_freq),
        "components": int(components)})


def sine_product(amplitude=2.0, rate=1.0, slow_rate=0.1):
    """Squared product of a fast and a slow sine; non-negative."""
    return ExcitationSignal("SineProduct", {
        "amplitude": float(amplitude), "rate": float(rate),
        "slow_rate": float(slow_rate)})


def cubed_sine(amplitude=5.0, rate=30.0):
    """(amplitude * sin(rate * t)) cubed."""
    return ExcitationSignal("CubedSine", {"amplitude": float(amplitude),
                                          "rate": float(rate)})


def prbs(amplitude, bit_duration, t_max, seed=0):
    """Pseudo-random binary sequence taking values +-amplitude."""
    return ExcitationSignal("PRBS", {
        "amplitude": float(amplitude), "bit_duration": float(bit_duration),
        "t_max": float(t_max), "seed": int(seed)})


def piecewise_constant_random(low, high, hold_min, hold_max, t_max, seed=0):
    """Uniform random levels held for uniform random durations."""
    return ExcitationSignal("PiecewiseConstantRandom", {
        "low": float(low), "high": float(high), "hold_min": float(hold_min),
        "hold_max": float(hold_max), "t_max": float(t_max), "seed": int(seed)})


def zero_signal(n_inputs=1):
    return ExcitationSignal("Zero", {}, n_inputs)


def constant_signal(value):
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return ExcitationSignal("Constant", {"value": value}, value.shape[0])


def custom_signal(fn, n_inputs=1):
    """Wrap a callable t -> array of shape (n_inputs,)."""
    return ExcitationSignal("Custom", {"fn": fn}, n_inputs)


def eval_signal(signal, t):
    """Evaluate a signal at scalar time ``t``; returns shape ``(q,)``."""
    p = signal.params
    kind = signal.kind
    if kind == "Zero":
        return np.zeros(signal.n_inputs)
    if kind == "Constant":
        return np.array(p["value"], dtype=float)
    if kind == "SchroederSweep":
        val = p["amplitude"] * np.cos(signal._freqs * t + signal._phases).sum()
        return np.array([val])
    if kind == "SineProduct":
        val = (p["amplitude"] * np.sin(p["rate"] * t)
               * np.sin(p["slow_rate"] * t)) ** 2
        return np.array([val])
    if kind == "CubedSine":
        return np.array([(p["amplitude"] * np.sin(p["rate"] * t)) ** 3])
    if kind == "PRBS":
        idx = min(int(t / p["bit_duration"]), signal._bits.shape[0] - 1)
        return np.array([p["amplitude"] * signal._bits[max(idx, 0)]])
    if kind == "PiecewiseConstantRandom":
        idx = int(np.searchsorted(signal._switch_times, t, side="right"))
        idx = min(idx, signal._values.shape[0] - 1)
        return np.array([signal._values[idx]])
    if kind == "Custom":
        return np.atleast_1d(np.asarray(p["fn"](t), dtype=float))
    raise ValueError(f"unknown signal kind {kind!r}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings; only classic RK4 is provided."""

    dt: float
    method: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")


def _step_count(t0, t1, dt):
    span = t1 - t0
    if span <= 0:
        raise ValueError("time span must be positive")
    steps = span / dt
    n = int(round(steps))
    if n < 1 or abs(steps - n) > 1e-9 * max(1.0, abs(steps)):
        raise ValueError(f"span {span} is not a positive multiple of dt {dt}")
    return n


def integrate(system, x0, signal, t_span, config):
    """Simulate a plant under an input signal on a uniform grid.

    The input is held constant over each step at its value at the step
    start.  For continuous systems the recorded ``derivatives`` are exact
    right-hand side evaluations at the samples, which identification code
    may use in place of finite differencing.

    Parameters
    ----------
    system : SystemSpec
    x0 : array, shape (n,)
    signal : ExcitationSignal
    t_span : float or (t0, t1)
        Duration from zero, or explicit window.  Must be a positive
        multiple of ``config.dt``.
    config : IntegratorConfig

    Raises
    ------
    DivergenceError
        If any state becomes non-finite; the error carries the last valid
        time and the partial trajectory.
    """
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else (float(t_span[0]), float(t_span[1]))
    n_steps = _step_count(t0, t1, config.dt)
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (system.n_states,):
        raise ValueError(f"x0 must have shape ({system.n_states},)")

    if system.kind == "IdentifiedLinear" or (
            system.kind == "IdentifiedSparse"
            and not getattr(system.params["model"], "is_continuous", True)):
        return _iterate_discrete(system, x, signal, t0, n_steps, config)

    dt = config.dt
    times = t0 + dt * np.arange(n_steps + 1)
    states = np.empty((system.n_states, n_steps + 1))
    inputs = np.empty((system.n_inputs, n_steps + 1))
    derivs = np.empty_like(states)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            u = eval_signal(signal, times[k])
            states[:, k] = x
            inputs[:, k] = u
            k1 = rhs_eval(system, x, u)
            derivs[:, k] = k1
            k2 = rhs_eval(system, x + 0.5 * dt * k1, u)
            k3 = rhs_eval(system, x + 0.5 * dt * k2, u)
            k4 = rhs_eval(system, x + dt * k3, u)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                partial = Trajectory(times[: k + 1], states[:, : k + 1],
                                     inputs[:, : k + 1], derivs[:, : k + 1])
                raise DivergenceError(
                    f"state became non-finite after t={times[k]:g}",
                    last_valid_time=float(times[k]), partial=partial)
        u = eval_signal(signal, times[-1])
        states[:, -1] = x
        inputs[:, -1] = u
        derivs[:, -1] = rhs_eval(system, x, u)
    return Trajectory(times, states, inputs, derivs)


def _iterate_discrete(system, x, signal, t0, n_steps, config):
    model = system.params["model"]
    if abs(config.dt - model.dt) > 1e-9 * model.dt:
        raise ValueError("integrator dt must equal the discrete model dt")
    times = t0 + config.dt * np.arange(n_steps + 1)
    states = np.empty((system.n_states, n_steps + 1))
    inputs = np.empty((system.n_inputs, n_steps + 1))
    for k in range(n_steps):
        u = eval_signal(signal, times[k])
        states[:, k] = x
        inputs[:, k] = u
        x = model.step(x, u)
        if not np.all(np.isfinite(x)):
            partial = Trajectory(times[: k + 1], states[:, : k + 1], inputs[:, : k + 1])
            raise DivergenceError(
                f"state became non-finite after t={times[k]:g}",
                last_valid_time=float(times[k]), partial=partial)
    inputs[:, -1] = eval_signal(signal, times[-1])
    states[:, -1] = x
    return Trajectory(times, states, inputs, None)


def equilibria(system):
    """Return the relevant fixed points of a built-in system, unforced.

    LotkaVolterra: the coexistence point.  Lorenz: the two symmetric
    nontrivial fixed points.  HIV: the treatment-free state with an
    established immune response; raises :class:`EquilibriumNotFoundError`
    when its discriminant is negative.
    """
    p = system.params
    if system.kind == "LotkaVolterra":
        return [np.array([p["predator_death"] / p["predator_growth"],
                          p["prey_growth"] / p["predation"]])]
    if system.kind == "Lorenz":
        r = math.sqrt(p["beta"] * (p["rho"] - 1.0))
        z = p["rho"] - 1.0
        return [np.array([r, r, z]), np.array([-r, -r, z])]
    if system.kind == "HIV":
        lam, d = p["production"], p["death_rate"]
        beta, a = p["infection_rate"], p["infected_death_rate"]
        p2, c2 = p["kill_rate_2"], p["prolif_2"]
        b2, q, h = p["decay_2"], p["diff_fraction"], p["effector_decay"]
        lin = c2 * (lam - d * q) - b2 * beta
        disc = lin * lin - 4.0 * beta * c2 * q * d * b2
        if disc < 0:
            raise EquilibriumNotFoundError(
                "no real immune-response equilibrium for these parameters")
        x2 = (lin - math.sqrt(disc)) / (2.0 * beta * c2 * q)
        x1 = lam / (d + beta * x2)
        x5 = (x2 * c2 * (beta * q - a) + b2 * beta) / (c2 * p2 * x2)
        x3 = h * x5 / (c2 * q * x2)
        return [np.array([x1, x2, x3, 0.0, x5])]
    raise ValueError(f"no closed-form equilibria for kind {system.kind!r}")


def f8_reference(t):
    """Pitch-angle reference command for the F-8 tracking benchmark.

    A smooth double-sigmoid pulse on a 0.1-unit time scale; tends to
    -0.16 rad as t grows.
    """
    t = np.asarray(t, dtype=float)
    s = t / 0.1
    with np.errstate(over="ignore"):
        r = 0.4 * (-0.5 / (1.0 + np.exp(s - 0.8)) + 1.0 / (1.0 + np.exp(s - 3.0)) - 0.4)
    return r if r.ndim else float(r)


def _format_row(values):
    return ",".join(f"{v:.17g}" for v in values)


def write_trajectory_csv(traj, path):
    """Write ``t,x1..xn,u1..uq`` rows at full double precision."""
    n, q = traj.n_states, traj.n_inputs
    header = "t," + ",".join(f"x{i + 1}" for i in range(n))
    header += "," + ",".join(f"u{j + 1}" for j in range(q))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for k in range(traj.n_samples):
            row = np.concatenate(([traj.times[k]], traj.states[:, k], traj.inputs[:, k]))
            fh.write(_format_row(row) + "\n")


def read_trajectory_csv(path):
    """Parse a trajectory CSV; raises :class:`CsvFormatError` with the line
    number on malformed content."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvFormatError("empty file", 1)
    fields = lines[0].split(",")
    if not fields or fields[0] != "t":
        raise CsvFormatError("header must start with 't'", 1)
    n = sum(1 for f in fields if f.startswith("x"))
    q = sum(1 for f in fields if f.startswith("u"))
    expected = [ "t" ] + [f"x{i+1}" for i in range(n)] + [f"u{j+1}" for j in range(q)]
    if fields != expected or n < 1 or q < 0:
        raise CsvFormatError(f"unexpected header {lines[0]!r}", 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 1 + n + q:
            raise CsvFormatError(
                f"expected {1 + n + q} fields, found {len(parts)}", lineno)
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise CsvFormatError(str(exc), lineno) from None
    if not rows:
        raise CsvFormatError("no data rows", 2)
    data = np.asarray(rows)
    return Trajectory(data[:, 0], data[:, 1:1 + n].T, data[:, 1 + n:].T, None)
