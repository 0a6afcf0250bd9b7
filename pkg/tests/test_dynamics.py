"""Plant definitions, integration, excitation signals and trajectory I/O."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from sindy_mpc import (
    CsvFormatError,
    DivergenceError,
    ExcitationSignal,
    IntegratorConfig,
    LinearModel,
    SparseModel,
    Trajectory,
    constant_signal,
    cubed_sine,
    custom_signal,
    default_library,
    equilibria,
    eval_signal,
    f8_aircraft,
    f8_reference,
    hiv_immune,
    integrate,
    lorenz,
    lotka_volterra,
    piecewise_constant_random,
    prbs,
    read_trajectory_csv,
    rhs_eval,
    schroeder_sweep,
    sine_product,
    system_from_model,
    write_trajectory_csv,
    zero_signal,
)


def _decay_system():
    # dx/dt = -x as an identified sparse model; exact solution exp(-t)
    lib = default_library(1, 1, poly_order=1)
    model = SparseModel(coefficients=np.array([[0.0, -1.0, 0.0]]),
                        library=lib, form="continuous", dt=0.01)
    return system_from_model(model)


def test_rk4_matches_exponential_decay():
    traj = integrate(_decay_system(), [1.0], zero_signal(), 1.0,
                     IntegratorConfig(dt=0.001))
    assert abs(traj.states[0, -1] - math.exp(-1.0)) < 1e-12


def test_rk4_fourth_order_convergence():
    exact = math.exp(-1.0)
    errs = []
    for dt in (0.1, 0.05):
        traj = integrate(_decay_system(), [1.0], zero_signal(), 1.0,
                         IntegratorConfig(dt=dt))
        errs.append(abs(traj.states[0, -1] - exact))
    ratio = errs[0] / errs[1]
    # halving the step should cut the global error by ~2**4
    assert 12.0 < ratio < 20.0


def test_integrate_records_exact_rhs(lotka_system, lotka_traj):
    for k in (0, 17, lotka_traj.n_samples - 1):
        expected = rhs_eval(lotka_system, lotka_traj.states[:, k],
                            lotka_traj.inputs[:, k])
        npt.assert_allclose(lotka_traj.derivatives[:, k], expected, rtol=1e-12)


def test_integrate_holds_input_over_step():
    ramp = custom_signal(lambda t: np.array([t]))
    traj = integrate(_decay_system(), [1.0], ramp, 0.5, IntegratorConfig(dt=0.1))
    npt.assert_allclose(traj.inputs[0], traj.times)


def test_integrate_rejects_non_multiple_span():
    with pytest.raises(ValueError):
        integrate(lotka_volterra(), [10.0, 10.0], zero_signal(), 1.05,
                  IntegratorConfig(dt=0.1))


def test_integrate_accepts_time_window():
    sys = _decay_system()
    traj = integrate(sys, [1.0], zero_signal(), (2.0, 3.0),
                     IntegratorConfig(dt=0.1))
    assert traj.times[0] == pytest.approx(2.0)
    assert traj.times[-1] == pytest.approx(3.0)


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_discrete_divergence_reports_partial():
    model = LinearModel(a=[[2.0]], b=[[0.0]], dt=1.0, state_offset=np.zeros(1),
                        kind="dmdc", n_states=1, n_inputs=1)
    sys = system_from_model(model)
    with pytest.raises(DivergenceError) as excinfo:
        integrate(sys, [1.0], zero_signal(), 1100.0, IntegratorConfig(dt=1.0))
    err = excinfo.value
    assert err.partial is not None
    assert np.all(np.isfinite(err.partial.states))
    assert err.last_valid_time == pytest.approx(err.partial.times[-1])


def test_lotka_equilibrium_is_fixed_point():
    sys = lotka_volterra()
    (eq,) = equilibria(sys)
    npt.assert_allclose(eq, [100.0, 20.0])
    npt.assert_allclose(rhs_eval(sys, eq, [0.0]), 0.0, atol=1e-12)


def test_lorenz_equilibria_are_fixed_points():
    sys = lorenz()
    points = equilibria(sys)
    assert len(points) == 2
    npt.assert_allclose(points[0], [math.sqrt(72.0), math.sqrt(72.0), 27.0])
    for eq in points:
        npt.assert_allclose(rhs_eval(sys, eq, [0.0]), 0.0, atol=1e-12)


def test_hiv_equilibrium_is_fixed_point():
    sys = hiv_immune()
    (eq,) = equilibria(sys)
    assert eq[3] == 0.0
    assert eq.min() >= 0.0
    npt.assert_allclose(rhs_eval(sys, eq, [0.0]), 0.0, atol=1e-10)


def test_f8_rhs_is_non_affine_in_input():
    sys = f8_aircraft()
    x = np.array([0.1, 0.0, 0.05])
    f0 = rhs_eval(sys, x, [0.0])
    f1 = rhs_eval(sys, x, [0.1])
    f2 = rhs_eval(sys, x, [0.2])
    # an affine-in-u system would satisfy f2 - f1 == f1 - f0
    assert not np.allclose(f2 - f1, f1 - f0)


def test_f8_reference_limits():
    assert f8_reference(5.0) == pytest.approx(-0.16, abs=1e-6)
    assert f8_reference(0.0) > 0.0
    arr = f8_reference(np.linspace(0.0, 1.0, 7))
    assert arr.shape == (7,)


def test_schroeder_sweep_is_deterministic_sum_of_cosines():
    sig = schroeder_sweep(amplitude=0.5, base_freq=0.1, components=3)
    t = 0.37
    k = np.arange(1, 4)
    phases = -np.pi * k * (k - 1) / 3
    expected = 0.5 * np.cos(2 * np.pi * k * 0.1 * t + phases).sum()
    assert eval_signal(sig, t) == pytest.approx(expected)


def test_sine_product_and_cubed_sine_formulas():
    t = 1.234
    sp = sine_product(amplitude=2.0, rate=1.0, slow_rate=0.1)
    assert eval_signal(sp, t)[0] == pytest.approx(
        (2.0 * math.sin(t) * math.sin(0.1 * t)) ** 2)
    cs = cubed_sine(amplitude=5.0, rate=30.0)
    assert eval_signal(cs, t)[0] == pytest.approx((5.0 * math.sin(30.0 * t)) ** 3)


def test_prbs_levels_and_reproducibility():
    sig = prbs(2.0, bit_duration=0.5, t_max=10.0, seed=3)
    again = prbs(2.0, bit_duration=0.5, t_max=10.0, seed=3)
    ts = np.linspace(0.0, 10.0, 101)
    vals = np.array([eval_signal(sig, t)[0] for t in ts])
    assert set(np.unique(vals)) <= {-2.0, 2.0}
    npt.assert_array_equal(vals, [eval_signal(again, t)[0] for t in ts])
    # constant within a bit period
    assert eval_signal(sig, 0.0)[0] == eval_signal(sig, 0.49)[0]


def test_piecewise_constant_random_bounds_and_holds():
    sig = piecewise_constant_random(-1.0, 4.0, hold_min=1.0, hold_max=2.0,
                                    t_max=20.0, seed=7)
    vals = np.array([eval_signal(sig, t)[0] for t in np.arange(0.0, 20.0, 0.01)])
    assert vals.min() >= -1.0 and vals.max() <= 4.0
    changes = np.flatnonzero(np.diff(vals) != 0.0)
    assert np.all(np.diff(changes) >= 99)  # holds at least hold_min


def test_signal_json_round_trip():
    for sig in (schroeder_sweep(0.3, 0.05, 8), prbs(1.0, 1.0, 5.0, seed=2),
                zero_signal(2), constant_signal([1.5, -2.0]),
                piecewise_constant_random(0.0, 1.0, 0.5, 1.5, 5.0, seed=1)):
        clone = ExcitationSignal.from_json(sig.to_json())
        for t in (0.0, 0.7, 3.3):
            npt.assert_array_equal(eval_signal(clone, t), eval_signal(sig, t))


def test_custom_signal_rejects_serialization():
    with pytest.raises(TypeError):
        custom_signal(lambda t: [0.0]).to_json()


def test_trajectory_helpers(lotka_traj):
    sub = lotka_traj.subsample(4)
    assert sub.n_samples == math.ceil(lotka_traj.n_samples / 4)
    assert sub.dt == pytest.approx(4 * lotka_traj.dt)
    win = lotka_traj.window(10, 20)
    assert win.n_samples == 10
    npt.assert_array_equal(win.states, lotka_traj.states[:, 10:20])
    npt.assert_array_equal(win.derivatives, lotka_traj.derivatives[:, 10:20])
    npt.assert_array_equal(lotka_traj.final_state, lotka_traj.states[:, -1])


def test_csv_round_trip(tmp_path, lotka_traj):
    path = tmp_path / "run.csv"
    write_trajectory_csv(lotka_traj, path)
    back = read_trajectory_csv(path)
    npt.assert_array_equal(back.times, lotka_traj.times)
    npt.assert_array_equal(back.states, lotka_traj.states)
    npt.assert_array_equal(back.inputs, lotka_traj.inputs)


def test_csv_errors_carry_line_numbers(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("time,x1,u1\n0,1,0\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_trajectory_csv(bad_header)
    assert excinfo.value.line_number == 1

    bad_row = tmp_path / "r.csv"
    bad_row.write_text("t,x1,u1\n0,1,0\n0.1,not-a-number,0\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_trajectory_csv(bad_row)
    assert excinfo.value.line_number == 3


def test_trajectory_requires_consistent_shapes():
    with pytest.raises(ValueError):
        Trajectory(np.arange(3.0), np.zeros((2, 4)), np.zeros((1, 3)))
