"""Truncated power series in momentum and the nonrelativistic expansion of E(p).

A :class:`TruncatedSeries` holds ``c_0 ... c_N`` of ``sum c_j p^j``; all arithmetic
drops powers above ``N``. The energy of each closed-form model is expanded by
running its root formula through this arithmetic, so the rest energy and
inertial mass fall out of the ``p^0`` and ``p^2`` coefficients without any
finite differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dsrlab.errors import ParameterError
from dsrlab.kinematics import Branch, Model, PhysParams

DEFAULT_ORDER = 4
SERIES_ATOL = 1e-14


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    coefficients: np.ndarray
    variable: str = field(default="p")

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float, ndmin=1)
        if coeffs.ndim != 1:
            raise ParameterError("series coefficients must be one-dimensional")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, value: float, order: int, variable: str = "p") -> "TruncatedSeries":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c, variable)

    @classmethod
    def monomial(cls, power: int, order: int, coeff: float = 1.0, variable: str = "p") -> "TruncatedSeries":
        c = np.zeros(order + 1)
        if power <= order:
            c[power] = coeff
        return cls(c, variable)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, j: int) -> float:
        return float(self.coefficients[j])

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_add(self, other)
        return series_add(self, TruncatedSeries.constant(other, self.order, self.variable))

    __radd__ = __add__

    def __neg__(self):
        return series_scale(self, -1.0)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, series_reciprocal(other))
        return series_scale(self, 1.0 / other)

    def allclose(self, other: "TruncatedSeries", atol: float = SERIES_ATOL) -> bool:
        return self.order == other.order and bool(
            np.all(np.abs(self.coefficients - other.coefficients) <= atol)
        )

    def evaluate(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coefficients))

    def __repr__(self):
        terms = ", ".join(f"{c:.17g}" for c in self.coefficients)
        return f"TruncatedSeries([{terms}], order={self.order}, variable={self.variable!r})"


def _check_orders(a: TruncatedSeries, b: TruncatedSeries):
    if a.order != b.order:
        raise ParameterError(f"series orders differ: {a.order} vs {b.order}")


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    _check_orders(a, b)
    return TruncatedSeries(a.coefficients + b.coefficients, a.variable)


def series_scale(a: TruncatedSeries, factor: float) -> TruncatedSeries:
    return TruncatedSeries(a.coefficients * factor, a.variable)


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at the common order."""
    _check_orders(a, b)
    n = a.order + 1
    return TruncatedSeries(np.convolve(a.coefficients, b.coefficients)[:n], a.variable)


def series_reciprocal(a: TruncatedSeries) -> TruncatedSeries:
    c = a.coefficients
    if c[0] == 0:
        raise ParameterError("reciprocal of a series needs a nonzero constant term")
    r = np.zeros_like(c)
    r[0] = 1.0 / c[0]
    for j in range(1, len(c)):
        r[j] = -np.dot(c[1 : j + 1], r[j - 1 :: -1][:j]) / c[0]
    return TruncatedSeries(r, a.variable)


def series_sqrt(a: TruncatedSeries) -> TruncatedSeries:
    """Square root by Newton iteration ``s <- (s + a/s) / 2`` in series arithmetic.

    Each sweep doubles the number of correct leading coefficients, so
    ``ceil(log2(N + 1)) + 1`` sweeps suffice; iteration stops early once a sweep
    leaves the coefficients unchanged.
    """
    c0 = a.coefficients[0]
    if not c0 > 0:
        raise ParameterError(f"series sqrt needs a positive constant term, got {c0!r}")
    s = TruncatedSeries.constant(math.sqrt(c0), a.order, a.variable)
    for _ in range(math.ceil(math.log2(a.order + 1)) + 2):
        nxt = series_scale(series_add(s, series_mul(a, series_reciprocal(s))), 0.5)
        if np.array_equal(nxt.coefficients, s.coefficients):
            break
        s = nxt
    return s


def expand_energy(
    params: PhysParams,
    branch: Branch = Branch.PARTICLE,
    model: Model = Model.AC_TRUNCATED,
    order: int = DEFAULT_ORDER,
) -> TruncatedSeries:
    """Power series of the on-shell energy ``E(p)`` about ``p = 0``.

    Coefficient 0 is the signed rest energy and coefficient 2 equals
    ``sign / (2 * inertial_mass)``; odd coefficients vanish identically since
    every closed form depends on ``p`` only through ``p^2``.
    """
    if order < 2 or order % 2:
        raise ParameterError(f"expansion order must be even and >= 2, got {order}")
    if model is Model.AC_EXACT:
        raise ParameterError("the exact relation has no closed-form root; use effective_masses")
    M, k, mu, s = params.rest_energy, params.k, params.mu, branch.sign
    P = TruncatedSeries.monomial(2, order, params.c**2)
    if model is Model.SPECIAL_RELATIVITY:
        return s * series_sqrt(P + M * M)
    if model is Model.AC_TRUNCATED:
        root = series_sqrt(P * P * (1 / k**2) + 4 * P + 4 * M * M)
        return (P * (1 / k) + s * root) * 0.5
    # Magueijo-Smolin: (1 - mu^2) E^2 + 2 M mu E - (M^2 + P) = 0
    root = series_sqrt(P * (1 - mu * mu) + M * M)
    return (s * root - M * mu) * (1 / (1 - mu * mu))


def rest_and_inertial(series: TruncatedSeries) -> tuple[float, float]:
    """(rest energy, inertial mass) read off a branch expansion."""
    return abs(series[0]), abs(1.0 / (2.0 * series[2]))


@dataclass(frozen=True)
class ReciprocityReport:
    ac_rest: float
    ac_inertial: float
    ms_rest: float
    ms_inertial: float
    c: float
    tolerance: float = 1e-10

    @property
    def rest_matches_inertial(self) -> bool:
        """AC rest energy equals MS inertial mass times c^2."""
        return math.isclose(self.ac_rest, self.ms_inertial * self.c**2, rel_tol=self.tolerance, abs_tol=0)

    @property
    def inertial_matches_rest(self) -> bool:
        return math.isclose(self.ac_inertial * self.c**2, self.ms_rest, rel_tol=self.tolerance, abs_tol=0)

    @property
    def holds(self) -> bool:
        return self.rest_matches_inertial and self.inertial_matches_rest

    def as_dict(self) -> dict:
        return {
            "ac": {"rest_energy": self.ac_rest, "inertial_mass": self.ac_inertial},
            "ms": {"rest_energy": self.ms_rest, "inertial_mass": self.ms_inertial},
            "rest_matches_inertial": self.rest_matches_inertial,
            "inertial_matches_rest": self.inertial_matches_rest,
            "tolerance": self.tolerance,
        }


def reciprocity_report(params: PhysParams, order: int = DEFAULT_ORDER) -> ReciprocityReport:
    """Particle-branch rest/inertial table of the truncated AC and MS relations."""
    ac = rest_and_inertial(expand_energy(params, Branch.PARTICLE, Model.AC_TRUNCATED, order))
    ms = rest_and_inertial(expand_energy(params, Branch.PARTICLE, Model.MAGUEIJO_SMOLIN, order))
    return ReciprocityReport(ac[0], ac[1], ms[0], ms[1], params.c)
