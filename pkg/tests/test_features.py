"""Candidate-function libraries: ordering, counts, normalization."""

import numpy as np
import numpy.testing as npt
import pytest

from sindy_mpc import (
    EmptyDataError,
    LibrarySpec,
    build_library,
    default_library,
    evaluate_library,
    library_without_constant,
    unscale_coefficients,
)


def test_graded_lex_ordering_oracle():
    # hand-evaluated order-2 library in (x1, x2, u) at x=(2,3), u=1
    lib = default_library(2, 1, poly_order=2)
    assert lib.column_names() == ["1", "x1", "x2", "u", "x1^2", "x1*x2",
                                  "x1*u", "x2^2", "x2*u", "u^2"]
    theta = evaluate_library(lib, np.array([[2.0], [3.0]]), np.array([[1.0]]))
    npt.assert_array_equal(theta.ravel(), [1, 2, 3, 1, 4, 6, 2, 9, 3, 1])


@pytest.mark.parametrize("n_vars,order,expected", [
    (6, 3, 84),   # five states plus one input, cubic
    (3, 4, 35),   # two states plus one input, quartic
    (6, 2, 28),
    (4, 3, 35),
])
def test_column_counts(n_vars, order, expected):
    lib = default_library(n_vars - 1, 1, poly_order=order)
    assert lib.column_count == expected
    assert len(lib.column_names()) == expected


def test_without_constant_drops_exactly_one_column():
    lib = default_library(5, 1, poly_order=3)
    stripped = library_without_constant(lib)
    assert lib.column_count == 84
    assert stripped.column_count == 83
    assert stripped.column_names() == lib.column_names()[1:]


def test_exponent_rows_match_names():
    lib = default_library(1, 1, poly_order=3)
    exps = lib.exponents()
    assert exps.shape == (lib.column_count, 2)
    # degree never decreases along the column order
    degrees = exps.sum(axis=1)
    assert np.all(np.diff(degrees) >= 0)


def test_normalization_and_unscaling():
    rng = np.random.default_rng(0)
    states = rng.normal(size=(2, 50))
    inputs = rng.normal(size=(1, 50))
    lib = default_library(2, 1, poly_order=2, normalize=True)
    fm = build_library(states, inputs, lib)
    npt.assert_allclose(np.linalg.norm(fm.values, axis=1), 1.0, rtol=1e-12)
    raw = evaluate_library(lib, states, inputs)
    npt.assert_allclose(fm.values * fm.column_scales[:, None], raw, rtol=1e-12)
    # coefficients fitted on the scaled basis map back to the raw one:
    # predictions agree whichever basis is used
    xi_scaled = rng.normal(size=(2, fm.n_columns))
    xi = unscale_coefficients(xi_scaled, fm.column_scales)
    npt.assert_allclose(xi @ raw, xi_scaled @ fm.values, rtol=1e-12)


def test_zero_row_keeps_unit_scale():
    lib = default_library(1, 1, poly_order=1, normalize=True)
    # u identically zero: its row cannot be normalized
    fm = build_library(np.ones((1, 10)), np.zeros((1, 10)), lib)
    u_row = lib.column_names().index("u")
    assert fm.column_scales[u_row] == 1.0
    npt.assert_array_equal(fm.values[u_row], 0.0)


def test_trig_columns_appended():
    lib = LibrarySpec(poly_order=1, variables=("x1", "u"),
                      trig_terms=(("sin", "x1"), ("cos", "x1")))
    x = np.array([[0.3, -1.2]])
    u = np.array([[0.0, 0.5]])
    theta = evaluate_library(lib, x, u)
    assert lib.column_count == 5
    npt.assert_allclose(theta[-2], np.sin(x[0]))
    npt.assert_allclose(theta[-1], np.cos(x[0]))


def test_library_spec_json_round_trip():
    lib = LibrarySpec(poly_order=3, variables=("x1", "x2", "u"),
                      include_constant=False, normalize=True,
                      trig_terms=(("sin", "x2"),))
    clone = LibrarySpec.from_json(lib.to_json())
    assert clone == lib


def test_empty_data_rejected():
    lib = default_library(2, 1, poly_order=2)
    with pytest.raises(EmptyDataError):
        build_library(np.zeros((2, 0)), np.zeros((1, 0)), lib)


def test_spec_validation():
    with pytest.raises(ValueError):
        LibrarySpec(poly_order=0, variables=("x1",))
    with pytest.raises(ValueError):
        LibrarySpec(poly_order=1, variables=("x1", "x1"))
    with pytest.raises(ValueError):
        LibrarySpec(poly_order=1, variables=("x1",), trig_terms=(("tan", "x1"),))
    with pytest.raises(ValueError):
        unscale_coefficients(np.ones((1, 3)), np.array([1.0, 0.0, 1.0]))


def test_sample_count_mismatch_rejected():
    lib = default_library(1, 1, poly_order=1)
    with pytest.raises(ValueError):
        evaluate_library(lib, np.ones((1, 5)), np.ones((1, 4)))
