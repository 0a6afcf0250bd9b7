"""Polynomial (and optional trigonometric) feature libraries.

A library maps stacked state/input samples to a matrix of candidate
functions, one row per function, one column per sample.  Monomials are
enumerated in graded lexicographic order: the constant, then degree one in
variable order, then degree two, and so on.  Optional per-row
normalization divides each row by its Euclidean norm and records the
divisor so fitted coefficients can be mapped back to the raw library.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np

__all__ = [
    "EmptyDataError",
    "LibrarySpec",
    "FeatureMatrix",
    "build_library",
    "library_without_constant",
    "unscale_coefficients",
    "evaluate_library",
]


class EmptyDataError(ValueError):
    """Raised when a library is requested for zero samples."""


@dataclass(frozen=True)
class LibrarySpec:
    """Candidate-function library description.

    ``variables`` names the columns of the stacked sample matrix, states
    first then inputs.  ``trig_terms`` is a tuple of ("sin"|"cos",
    variable_name) pairs appended after the polynomial block.
    """

    poly_order: int
    variables: tuple
    include_constant: bool = True
    normalize: bool = False
    trig_terms: tuple = ()

    def __post_init__(self):
        if self.poly_order < 1:
            raise ValueError("poly_order must be >= 1")
        if len(self.variables) < 1:
            raise ValueError("at least one variable required")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("variable names must be unique")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "trig_terms", tuple(tuple(t) for t in self.trig_terms))
        for fn, var in self.trig_terms:
            if fn not in ("sin", "cos") or var not in self.variables:
                raise ValueError(f"bad trig term ({fn!r}, {var!r})")

    @property
    def column_count(self):
        v, r = len(self.variables), self.poly_order
        count = comb(v + r, r)
        if not self.include_constant:
            count -= 1
        return count + len(self.trig_terms)

    def exponents(self):
        """Integer exponent matrix, one row per monomial (trig rows excluded)."""
        v = len(self.variables)
        rows = []
        if self.include_constant:
            rows.append((0,) * v)
        for degree in range(1, self.poly_order + 1):
            for combo in combinations_with_replacement(range(v), degree):
                e = [0] * v
                for idx in combo:
                    e[idx] += 1
                rows.append(tuple(e))
        return np.asarray(rows, dtype=np.int64)

    def column_names(self):
        names = []
        for e in self.exponents():
            if not e.any():
                names.append("1")
                continue
            parts = []
            for var, power in zip(self.variables, e):
                if power == 1:
                    parts.append(var)
                elif power > 1:
                    parts.append(f"{var}^{power}")
            names.append("*".join(parts))
        names.extend(f"{fn}({var})" for fn, var in self.trig_terms)
        return names

    def to_json(self):
        return {
            "poly_order": self.poly_order,
            "variables": list(self.variables),
            "include_constant": self.include_constant,
            "normalize": self.normalize,
            "trig_terms": [list(t) for t in self.trig_terms],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            poly_order=obj["poly_order"],
            variables=tuple(obj["variables"]),
            include_constant=obj.get("include_constant", True),
            normalize=obj.get("normalize", False),
            trig_terms=tuple(tuple(t) for t in obj.get("trig_terms", [])),
        )


def default_library(n_states, n_inputs, poly_order, include_constant=True,
                    normalize=False):
    """Library over x1..xn then u (or u1..uq) at the given order."""
    names = [f"x{i + 1}" for i in range(n_states)]
    if n_inputs == 1:
        names.append("u")
    else:
        names.extend(f"u{j + 1}" for j in range(n_inputs))
    return LibrarySpec(poly_order=poly_order, variables=tuple(names),
                       include_constant=include_constant, normalize=normalize)


@dataclass
class FeatureMatrix:
    """Evaluated library: ``values`` is (p, m); scales are all ones unless
    the library spec requested normalization."""

    values: np.ndarray
    column_names: list
    column_scales: np.ndarray

    @property
    def n_columns(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]


@lru_cache(maxsize=None)
def _cached_exponents(spec):
    exps = spec.exponents()
    exps.setflags(write=False)
    return exps


def evaluate_library(spec, states, inputs=None):
    """Evaluate library functions on a batch of samples, unnormalized.

    ``states`` is (n, m) and ``inputs`` (q, m); returns (p, m).  Used both
    for fitting (via :func:`build_library`) and model rollouts.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if inputs is None or np.asarray(inputs).size == 0:
        stacked = states
    else:
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        if inputs.shape[1] != states.shape[1]:
            raise ValueError("states and inputs must share the sample count")
        stacked = np.vstack([states, inputs])
    v = len(spec.variables)
    if stacked.shape[0] != v:
        raise ValueError(
            f"library expects {v} variables, got {stacked.shape[0]} data rows")
    exps = _cached_exponents(spec)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.prod(stacked[None, :, :] ** exps[:, :, None], axis=1)
        if spec.trig_terms:
            name_to_row = {name: i for i, name in enumerate(spec.variables)}
            extra = [getattr(np, fn)(stacked[name_to_row[var]])
                     for fn, var in spec.trig_terms]
            values = np.vstack([values, np.asarray(extra)])
    return values


def build_library(states, inputs, spec):
    """Evaluate a library spec on sampled data.

    Returns a :class:`FeatureMatrix` whose rows follow the spec's column
    order.  With ``spec.normalize`` each row is divided by its Euclidean
    norm and the norms are stored as ``column_scales``; rows that are
    identically zero keep a scale of one.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] == 0:
        raise EmptyDataError("cannot build a library from zero samples")
    values = evaluate_library(spec, states, inputs)
    scales = np.ones(values.shape[0])
    if spec.normalize:
        norms = np.linalg.norm(values, axis=1)
        nonzero = norms > 0.0
        scales[nonzero] = norms[nonzero]
        values = values / scales[:, None]
    return FeatureMatrix(values=values, column_names=spec.column_names(),
                         column_scales=scales)


def library_without_constant(spec):
    """Copy of a spec with the constant column removed."""
    return LibrarySpec(poly_order=spec.poly_order, variables=spec.variables,
                       include_constant=False, normalize=spec.normalize,
                       trig_terms=spec.trig_terms)


def unscale_coefficients(xi_scaled, scales):
    """Map coefficients fitted on a normalized library back to the raw one.

    ``xi_scaled`` is (n_targets, p); entry [k, j] is divided by
    ``scales[j]``.
    """
    xi_scaled = np.atleast_2d(np.asarray(xi_scaled, dtype=float))
    scales = np.asarray(scales, dtype=float)
    if xi_scaled.shape[1] != scales.shape[0]:
        raise ValueError("coefficient and scale dimensions disagree")
    if np.any(scales <= 0.0) or not np.all(np.isfinite(scales)):
        raise ValueError("scales must be positive and finite")
    return xi_scaled / scales[None, :]
