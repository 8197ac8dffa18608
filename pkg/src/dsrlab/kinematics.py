"""Deformed dispersion relations and their on-shell kinematics.

Units: hbar = 1 throughout, ``c`` and the deformation scale ``k`` (an energy)
are explicit. Energies are in energy units, momenta in momentum units, so the
combinations that enter the dispersion relations are ``M = m c**2`` and
``P = (p c)**2``.

Four dispersion models are supported::

    SpecialRelativity         E^2 = P + M^2
    AmelinoCameliaExact       2 k^2 [cosh(E/k) - cosh(M/k)] = P exp(E/k)
    AmelinoCameliaTruncated   E^2 - P - (P/k) E = M^2
    MagueijoSmolin            E^2 = P + M^2 (1 - E/k)^2

Each relation has exactly one root with E > 0 (particle branch) and one with
E < 0 (antiparticle branch) inside its momentum range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from dsrlab.errors import BranchNotFoundError, OverflowCapError, ParameterError
from dsrlab.rootfind import safeguarded_newton

#: Default cap on |E/k| before cosh/exp evaluations are refused.
OVERFLOW_CAP = 30.0


@dataclass(frozen=True)
class PhysParams:
    """Model constants: rest mass ``m``, speed of light ``c``, deformation scale ``k``.

    ``k`` carries energy units; in the model it plays the role of the Planck
    energy ``E_p = sqrt(hbar c^5 / G)`` or a multiple of it. The dimensionless
    ratio ``mu = m c^2 / k`` must lie in (0, 1) so that the antiparticle inertial
    mass ``m / (1 - mu)`` stays finite and positive.
    """

    m: float
    c: float = 1.0
    k: float = 10.0

    def __post_init__(self):
        for name in ("m", "c", "k"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value)):
                raise ParameterError(f"{name} must be a finite real number, got {value!r}")
            if value <= 0:
                raise ParameterError(f"{name} must be positive, got {value!r}")
        if self.mu >= 1:
            raise ParameterError(f"mu = m c^2 / k must be < 1, got {self.mu!r}")

    @property
    def rest_energy(self) -> float:
        return self.m * self.c**2

    @property
    def mu(self) -> float:
        return self.m * self.c**2 / self.k

    @property
    def momentum_limit(self) -> float:
        """|p| bound of the exact relation, |p| c < k."""
        return self.k / self.c

    def with_k(self, k: float) -> "PhysParams":
        return PhysParams(self.m, self.c, k)


class Branch(enum.Enum):
    PARTICLE = 1
    ANTIPARTICLE = -1

    @property
    def sign(self) -> int:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Branch":
        key = text.strip().lower()
        aliases = {"particle": cls.PARTICLE, "+": cls.PARTICLE, "plus": cls.PARTICLE,
                   "antiparticle": cls.ANTIPARTICLE, "-": cls.ANTIPARTICLE, "minus": cls.ANTIPARTICLE}
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown branch {text!r}") from None


class Model(enum.Enum):
    SPECIAL_RELATIVITY = "sr"
    AC_EXACT = "ac-exact"
    AC_TRUNCATED = "ac-truncated"
    MAGUEIJO_SMOLIN = "ms"

    @classmethod
    def parse(cls, text: str) -> "Model":
        try:
            return cls(text.strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ParameterError(f"unknown model {text!r} (choose from {choices})") from None


@dataclass(frozen=True)
class EffectiveMasses:
    rest_energy: float
    inertial_mass: float
    branch: Branch


def _check_cap(E, k, cap=OVERFLOW_CAP):
    E = np.asarray(E)
    if E.size == 0:
        return
    ratio = np.max(np.abs(E) / k)
    if ratio > cap:
        raise OverflowCapError(float(ratio), cap)


def casimir_of_squared(params: PhysParams, E, pc_squared, *, cap: float = OVERFLOW_CAP):
    """Exact-relation residual with the momentum entering as ``(p c)^2`` directly."""
    E = np.asarray(E)
    _check_cap(E, params.k, cap)
    k = params.k
    M = params.rest_energy
    return 4 * k * k * np.sinh((E + M) / (2 * k)) * np.sinh((E - M) / (2 * k)) - pc_squared * np.exp(E / k)


def casimir_residual(params: PhysParams, E, p, *, cap: float = OVERFLOW_CAP):
    """Residual ``2k^2 [cosh(E/k) - cosh(mc^2/k)] - p^2 c^2 exp(E/k)`` of the exact relation.

    The cosh difference is evaluated as ``4 k^2 sinh((E+M)/2k) sinh((E-M)/2k)``,
    the same quantity without the cancellation that ruins the naive form once
    ``k`` is much larger than the energies involved. Works on arrays and keeps
    their floating dtype, ``np.longdouble`` included.

    :raises OverflowCapError: if ``|E/k|`` exceeds ``cap``
    """
    return casimir_of_squared(params, E, (np.asarray(p) * params.c) ** 2, cap=cap)


def casimir_scale(params: PhysParams) -> float:
    """Normalisation ``2 k^2 cosh(mc^2/k)`` used for relative Casimir residuals."""
    return 2 * params.k**2 * np.cosh(params.mu)


# --- per-model defining relations -------------------------------------------------

def _quadratic_coefficients(params: PhysParams, P, model: Model):
    """Coefficients (a, b, c0) of ``a E^2 + b E + c0 = 0`` for the polynomial models."""
    M, k, mu = params.rest_energy, params.k, params.mu
    if model is Model.SPECIAL_RELATIVITY:
        return 1.0, 0.0 * P, -(P + M * M)
    if model is Model.AC_TRUNCATED:
        return 1.0, -P / k, -(P + M * M)
    if model is Model.MAGUEIJO_SMOLIN:
        return 1.0 - mu * mu, 2 * M * mu + 0.0 * P, -(M * M + P)
    raise ParameterError(f"{model} has no quadratic form")


def dispersion_residual(params: PhysParams, E, p, model: Model):
    """Defining relation of ``model`` written as ``F(E, p) = 0``."""
    E = np.asarray(E, dtype=float)
    P = (np.asarray(p, dtype=float) * params.c) ** 2
    if model is Model.AC_EXACT:
        return casimir_residual(params, E, p)
    a, b, c0 = _quadratic_coefficients(params, P, model)
    return (a * E + b) * E + c0


def _residual_derivative(params: PhysParams, E, P, model: Model):
    if model is Model.AC_EXACT:
        k = params.k
        return 2 * k * np.sinh(E / k) - (P / k) * np.exp(E / k)
    a, b, _ = _quadratic_coefficients(params, P, model)
    return 2 * a * E + b


def residual_scale(params: PhysParams, E, p, model: Model):
    """Magnitude against which a model residual is judged "relatively" small."""
    E = np.asarray(E, dtype=float)
    P = (np.asarray(p, dtype=float) * params.c) ** 2
    M = params.rest_energy
    if model is Model.AC_EXACT:
        return casimir_scale(params) + 0 * E
    return E * E + P + M * M + np.abs(P * E) / params.k


def closed_form_energy(params: PhysParams, p, branch: Branch, model: Model):
    """Quadratic-formula root for SR, truncated AC and MS (cancellation-free variant)."""
    P = (np.asarray(p, dtype=float) * params.c) ** 2
    a, b, c0 = _quadratic_coefficients(params, P, model)
    disc = np.sqrt(b * b - 4 * a * c0)
    q = -0.5 * (b + np.where(b >= 0, disc, -disc))
    r1, r2 = q / a, c0 / q
    root = np.where(r1 > 0, r1, r2) if branch is Branch.PARTICLE else np.where(r1 < 0, r1, r2)
    return root if np.ndim(root) else float(root)


def _validate_momentum(params: PhysParams, p, model: Model):
    if model is Model.AC_EXACT and np.size(p):
        over = np.abs(p) >= params.momentum_limit
        if np.any(over):
            i = np.flatnonzero(np.broadcast_to(over, np.shape(over)))[0]
            pc = np.ravel(np.abs(p) * params.c + 0 * over)[i]
            k = np.ravel(params.k + 0 * over)[i]
            raise ParameterError(f"|p| c = {pc:.6g} must stay below k = {k:.6g} for the exact relation")


def bracket_branch(params: PhysParams, P, branch: Branch, residual, *, cap: float | None = None):
    """One-sided bracket ``(inner, outer)`` around the root on ``branch``.

    Assumes ``residual(0) < 0`` and ``residual -> +inf`` as ``E -> +/-inf``, true of
    every relation handled here. Seeds from the special-relativity root inflated
    by ``(1 + mu)^2``; the inner end falls back to ``E = 0``, the outer end is
    doubled until the residual turns positive. ``cap`` bounds ``|E/k|`` during
    the search.
    """
    s = branch.sign
    M = params.rest_energy
    mu = params.mu
    e_sr = np.sqrt(P + M * M)
    inner = s * e_sr / (1 + mu) ** 2
    outer = s * e_sr * (1 + mu) ** 2
    inner = np.where(residual(inner) < 0, inner, 0.0)
    for _ in range(200):
        bad = residual(outer) <= 0
        if not np.any(bad):
            return inner, outer
        outer = np.where(bad, 2 * outer, outer)
        if cap is not None and np.max(np.abs(outer) / params.k) > cap:
            raise OverflowCapError(float(np.max(np.abs(outer) / params.k)), cap)
    raise BranchNotFoundError(f"could not bracket the {branch.name.lower()} root")


def solve_dispersion(
    params: PhysParams,
    p,
    branch: Branch = Branch.PARTICLE,
    model: Model = Model.AC_EXACT,
    *,
    max_iter: int = 100,
    cap: float = OVERFLOW_CAP,
):
    """On-shell energy ``E(p)`` of ``model`` on ``branch`` by safeguarded Newton.

    ``p`` may be a scalar or an array of momenta (signed; only ``p^2`` enters).
    Valid momentum range: ``|p| c < k`` for the exact relation, unrestricted for
    the three polynomial relations.
    """
    scalar = np.ndim(p) == 0
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    E = _solve(params, p_arr, branch, model, max_iter, cap)
    return float(E[0]) if scalar else E


@dataclass(frozen=True)
class ParamArrays:
    """Array-valued stand-in for :class:`PhysParams`, for solving many parameter sets at once."""

    m: np.ndarray
    c: np.ndarray
    k: np.ndarray

    rest_energy = PhysParams.rest_energy
    mu = PhysParams.mu
    momentum_limit = PhysParams.momentum_limit


def solve_dispersion_batch(m, c, k, p, branch: Branch = Branch.PARTICLE, model: Model = Model.AC_EXACT,
                           *, max_iter: int = 100, cap: float = OVERFLOW_CAP) -> np.ndarray:
    """:func:`solve_dispersion` over broadcast arrays of ``(m, c, k, p)``.

    Each element is validated as :class:`PhysParams` would be.
    """
    m, c, k, p = (np.asarray(a, dtype=float) for a in (m, c, k, p))
    m, c, k, p = np.broadcast_arrays(m, c, k, p)
    shape = p.shape
    m, c, k, p = (np.ravel(a) for a in (m, c, k, p))
    for name, arr in (("m", m), ("c", c), ("k", k)):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ParameterError(f"{name} must be finite and positive everywhere")
    if np.any(m * c * c / k >= 1):
        raise ParameterError("mu = m c^2 / k must be < 1 everywhere")
    if not np.all(np.isfinite(p)):
        raise ParameterError("momenta must be finite")
    return _solve(ParamArrays(m, c, k), p, branch, model, max_iter, cap).reshape(shape)


def _solve(params, p_arr, branch, model, max_iter, cap):
    _validate_momentum(params, p_arr, model)
    P = (p_arr * params.c) ** 2

    def residual(E):
        if model is Model.AC_EXACT:
            return casimir_residual(params, E, p_arr, cap=np.inf)
        a, b, c0 = _quadratic_coefficients(params, P, model)
        return (a * E + b) * E + c0

    def derivative(E):
        return _residual_derivative(params, E, P, model)

    lo, hi = bracket_branch(params, P, branch, residual, cap=cap if model is Model.AC_EXACT else None)
    seed = branch.sign * np.sqrt(P + params.rest_energy**2)
    seed = np.where((seed - lo) * (seed - hi) < 0, seed, 0.5 * (lo + hi))
    E = safeguarded_newton(residual, derivative, lo, hi, seed, max_iter=max_iter)
    if model is Model.AC_EXACT:
        _check_cap(E, params.k, cap)
    return E


def group_velocity(params: PhysParams, p, branch: Branch = Branch.PARTICLE, model: Model = Model.AC_EXACT):
    """``dE/dp`` by central differences with one Richardson refinement.

    Step ``h = max(1e-6, 1e-6 |p|)``; the estimate ``(4 D(h/2) - D(h)) / 3`` removes the
    O(h^2) term of the central difference ``D``.
    """
    scalar = np.ndim(p) == 0
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    h = np.maximum(1e-6, 1e-6 * np.abs(p_arr))
    nodes = np.concatenate([p_arr + h, p_arr - h, p_arr + h / 2, p_arr - h / 2])
    E = solve_dispersion(params, nodes, branch, model).reshape(4, -1)
    d_full = (E[0] - E[1]) / (2 * h)
    d_half = (E[2] - E[3]) / h
    v = (4 * d_half - d_full) / 3
    return float(v[0]) if scalar else v


def particle_velocity(params: PhysParams, p, E):
    """``p c^2 / E``."""
    E_arr = np.asarray(E, dtype=float)
    if np.any(E_arr == 0):
        raise ZeroDivisionError("particle velocity undefined at E = 0")
    v = np.asarray(p, dtype=float) * params.c**2 / E_arr
    return float(v) if np.ndim(v) == 0 else v


def m_plus(params: PhysParams) -> float:
    """Particle inertial mass ``m / (1 + mc^2/k)`` of the truncated relation."""
    return params.m / (1 + params.mu)


def m_minus(params: PhysParams) -> float:
    """Antiparticle inertial mass ``m / (1 - mc^2/k)``."""
    if params.mu >= 1:
        raise ParameterError(f"m_minus needs mu < 1, got {params.mu!r}")
    return params.m / (1 - params.mu)


#: momentum step of the curvature stencil, in units of m c
CURVATURE_STEP = 1e-3


def effective_masses(
    params: PhysParams, branch: Branch = Branch.PARTICLE, model: Model = Model.AC_TRUNCATED
) -> EffectiveMasses:
    """Rest energy ``|E(0)|`` and inertial mass ``1 / |d^2E/dp^2|`` at ``p = 0``.

    The curvature uses the 5-point central stencil at ``h = 1e-3 m c`` and at ``2h``,
    combined once by Richardson extrapolation, ``(16 D(h) - D(2h)) / 15``. ``E`` is
    even in ``p`` so only non-negative nodes are solved for.
    """
    h = CURVATURE_STEP * params.m * params.c
    E = solve_dispersion(params, np.array([0.0, h, 2 * h, 4 * h]), branch, model)
    e0, e1, e2, e4 = E
    d_h = (-2 * e2 + 32 * e1 - 30 * e0) / (12 * h * h)
    d_2h = (-2 * e4 + 32 * e2 - 30 * e0) / (48 * h * h)
    curvature = (16 * d_h - d_2h) / 15
    return EffectiveMasses(rest_energy=abs(float(e0)), inertial_mass=float(1.0 / abs(curvature)), branch=branch)


def dirac_operators(params: PhysParams, E, *, cap: float = OVERFLOW_CAP):
    """``(D_0, sum_a D_a^2)`` of the deformed Dirac operator at energy ``E``.

    ``sum_a D_a^2 = 2 e^{E/k} [cosh(E/k) - cosh(m/k)] / sinh^2(m/k)`` is independent
    of the direction of ``p``, and it is negative inside the mass gap where the
    ``D_a`` themselves are imaginary.
    """
    E = np.asarray(E, dtype=float)
    _check_cap(E, params.k, cap)
    k, mu = params.k, params.mu
    x = E / k
    s = np.sinh(mu)
    # e^x - cosh(mu) = e^mu (e^{x-mu} - 1) + sinh(mu)
    d0 = np.exp(mu) * np.expm1(x - mu) / s + 1.0
    spatial = 2 * np.exp(x) * (2 * np.sinh((x + mu) / 2) * np.sinh((x - mu) / 2)) / (s * s)
    return d0, spatial


def dirac_massshell_identity(params: PhysParams, E, p=None):
    """``D_0^2 - sum_a D_a^2``, which equals 1 for every ``E`` (``p`` does not enter)."""
    d0, spatial = dirac_operators(params, E)
    out = d0 * d0 - spatial
    return float(out) if np.ndim(out) == 0 else out


def cpt_ratio(params: PhysParams) -> float:
    """Relative particle/antiparticle inertial-mass split ``|m+ - m-| / m = 2 mu / (1 - mu^2)``.

    The first-order value ``2 mc^2 / k`` is what usually gets quoted; see
    :func:`cpt_ratio_first_order`.
    """
    mu = params.mu
    # m- - m+ = m [1/(1-mu) - 1/(1+mu)], written without the cancelling subtraction
    return 2 * mu / ((1 - mu) * (1 + mu))


def cpt_ratio_first_order(params: PhysParams) -> float:
    return 2 * params.mu


def k_lower_bound(m: float, relative_mass_split: float, c: float = 1.0) -> float:
    """Smallest ``k`` compatible with a bound on ``|m+ - m-| / m``, to first order: ``2 m c^2 / split``."""
    if not relative_mass_split > 0:
        raise ParameterError(f"relative mass split must be positive, got {relative_mass_split!r}")
    return 2 * m * c**2 / relative_mass_split
