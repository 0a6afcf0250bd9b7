"""Sparse and linear system identification with predictive control.

The package splits into six layers:

* :mod:`sindy_mpc.dynamics` - benchmark plants, excitation signals, a
  fixed-step RK4 integrator and trajectory CSV I/O.
* :mod:`sindy_mpc.features` - polynomial candidate-function libraries.
* :mod:`sindy_mpc.sysid` - sparse (thresholded least squares) and linear
  (plain, delay-embedded, polynomial-lifted) model fitting plus rollout.
* :mod:`sindy_mpc.mpc` - receding-horizon control on any fitted model.
* :mod:`sindy_mpc.bench` - end-to-end benchmark protocols and sweeps.
* :mod:`sindy_mpc.cli` - the ``sindy-mpc`` command line front end.
"""

from .dynamics import (CsvFormatError, DivergenceError,
                       EquilibriumNotFoundError, ExcitationSignal,
                       IntegratorConfig, SystemSpec, Trajectory,
                       constant_signal, cubed_sine, custom_signal, equilibria,
                       eval_signal, f8_aircraft, f8_reference, hiv_immune,
                       integrate, lorenz, lotka_volterra,
                       piecewise_constant_random, prbs, read_trajectory_csv,
                       rhs_eval, schroeder_sweep, sine_product,
                       system_from_model, write_trajectory_csv, zero_signal)
from .features import (EmptyDataError, FeatureMatrix, LibrarySpec,
                       build_library, default_library, evaluate_library,
                       library_without_constant, unscale_coefficients)
from .sysid import (ConditioningWarning, FeedbackLaw, LinearModel, NoiseSpec,
                    SparseModel, StlsResult, UnderdeterminedWarning,
                    adapt_thresholds, add_noise, coefficient_table,
                    compute_derivatives, fit_delay_dmdc, fit_dmdc, fit_edmdc,
                    fit_sindyc, identify_feedback, load_model,
                    model_from_json, model_to_json, noise_sigma, predict,
                    rollout_batch, save_model, stls, true_sparse_model)
from .mpc import (ClosedLoopResult, MpcConfig, MpcSolution, ReferenceSignal,
                  StateConstraint, horizon_cost, horizon_problem,
                  run_closed_loop, solve_mpc_step, stage_cost)
from .bench import (BUILTIN_PLANS, ControlSpec, ExperimentPlan, MetricsReport,
                    ModelRecipe, SweepSpec, TrainingSpec, ValidationSpec,
                    avg_relative_error, builtin_plan, derive_seed, fit_recipe,
                    mse_error, prediction_horizon, run_experiment,
                    sweep_noise, sweep_training_length)

__version__ = "0.1.0"
