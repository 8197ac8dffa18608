"""Named desk-scale experiments that produce deterministic, serialisable reports.

Every report pairs each measurement with a prediction and a verdict carrying
its tolerance. Wavepacket experiments use the truncated deformed relation,
evolve exactly per Fourier mode and read velocities off the circular mean
position.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from dsrlab.errors import ParameterError
from dsrlab.kinematics import (
    Branch,
    Model,
    PhysParams,
    cpt_ratio,
    cpt_ratio_first_order,
    dirac_massshell_identity,
    effective_masses,
    group_velocity,
    k_lower_bound,
    m_minus,
    m_plus,
    particle_velocity,
    solve_dispersion,
)
from dsrlab.waves import (
    DiracModel,
    Equation,
    Grid1D,
    ScalarField,
    dirac_mode_energy,
    evolve_kg,
    evolve_schrodinger,
    gaussian_packet,
    observables,
    recombine_dirac,
    decompose_dirac,
    remove_rest_phase,
    single_branch_dirac,
    single_branch_kg,
)

DEFAULT_GRID = Grid1D(4096, 800.0)
DEFAULT_FRAMES = 81

# tolerances, one per kind of claim
VELOCITY_RTOL = 1e-2
NULL_SEPARATION = 0.08
EQUIVALENCE_TOL = 1e-2
NORM_DRIFT_TOL = 1e-12
BASELINE_RTOL = 0.10
UNDEFORMED_MU = 1e-6
TABLE_RTOL = 1e-2
RECIPROCITY_RTOL = 1e-3
EXPONENT_RANGE = (1.8, 2.2)
CPT_RTOL = 1e-12
CPT_GAP_FACTOR = 1.05
IDENTITY_TOL = 1e-12
GAP_PREDICTION_RTOL = 0.05


@dataclass(frozen=True)
class Verdict:
    passed: bool
    measured: float
    predicted: float
    tolerance: float
    rule: str


@dataclass
class ExperimentReport:
    name: str
    params_used: dict
    measurements: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)

    def predict(self, key: str, value: float, reference: str):
        self.predictions[key] = {"value": float(value), "ref": reference}

    def measure(self, key: str, value: float):
        self.measurements[key] = float(value)

    def check(self, key: str, measured: float, predicted: float, tolerance: float, rule: str) -> bool:
        """Record a verdict. ``rule`` is one of ``rel``, ``abs``, ``max``, ``min``, ``range``."""
        if rule == "rel":
            ok = abs(measured - predicted) <= tolerance * abs(predicted)
        elif rule == "abs":
            ok = abs(measured - predicted) <= tolerance
        elif rule == "max":
            ok = measured <= tolerance
        elif rule == "min":
            ok = measured >= tolerance
        else:
            raise ValueError(f"unknown verdict rule {rule!r}")
        ok = bool(ok) and math.isfinite(measured)
        self.verdicts[key] = Verdict(ok, float(measured), float(predicted), float(tolerance), rule)
        return ok

    def check_range(self, key: str, measured: float, lo: float, hi: float) -> bool:
        ok = bool(lo <= measured <= hi)
        self.verdicts[key] = Verdict(ok, float(measured), 0.5 * (lo + hi), 0.5 * (hi - lo), "range")
        return ok

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def failing(self) -> list[str]:
        return [f"{self.name}.{k}" for k, v in self.verdicts.items() if not v.passed]

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "params_used": self.params_used,
            "measurements": self.measurements,
            "predictions": self.predictions,
            "verdicts": {k: asdict(v) for k, v in self.verdicts.items()},
            "passed": self.passed,
        }


def _physics(params: PhysParams) -> dict:
    return {"m": params.m, "c": params.c, "k": params.k, "mu": params.mu}


def _inertial_mass(params: PhysParams, branch: Branch) -> float:
    return m_plus(params) if branch is Branch.PARTICLE else m_minus(params)


# --- wavepacket runs ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PacketRun:
    """Observable time series of one evolved packet."""

    times: np.ndarray
    norm: np.ndarray
    mean_x: np.ndarray
    var_x: np.ndarray
    densities: np.ndarray | None = None

    def rows(self):
        for row in zip(self.times, self.norm, self.mean_x, self.var_x):
            yield tuple(float(v) for v in row)


def frame_times(t_max: float, frames: int) -> np.ndarray:
    if t_max < 0:
        raise ParameterError(f"t_max must be >= 0, got {t_max!r}")
    if frames < 2:
        raise ParameterError(f"need at least 2 frames, got {frames!r}")
    return np.linspace(0.0, t_max, frames)


def start_position(params: PhysParams, p0: float, t_max: float, branch: Branch) -> float:
    """Start offset that centres the expected drift on the box centre."""
    return -branch.sign * p0 / params.m * t_max / 2


def check_packet_fits(grid: Grid1D, sigma: float, x0: float):
    if 6 * sigma > grid.length / 2:
        raise ParameterError(f"6 sigma = {6 * sigma:g} does not fit half the box ({grid.length / 2:g})")
    if abs(x0) + 6 * sigma > grid.length / 2:
        raise ParameterError("initial packet within 6 sigma of the periodic boundary")


def _series_from_fields(times, fields, keep_density: bool) -> PacketRun:
    obs = [observables(f) for f in fields]
    grid = fields[0].grid
    L = grid.length
    means = np.array([o.mean_position for o in obs])
    unwrapped = np.unwrap(means * 2 * np.pi / L) * L / (2 * np.pi)
    dens = np.array([f.density for f in fields]) if keep_density else None
    return PacketRun(
        np.asarray(times, dtype=float),
        np.array([o.norm for o in obs]),
        unwrapped,
        np.array([o.position_variance for o in obs]),
        dens,
    )


def evolve_packet(
    params: PhysParams,
    packet: ScalarField,
    times: Sequence[float],
    equation: Equation = Equation.KLEIN_GORDON,
    branch: Branch = Branch.PARTICLE,
    model: Model | DiracModel | None = None,
    *,
    remove_rest: bool = False,
    keep_density: bool = False,
) -> tuple[PacketRun, list]:
    """Place ``packet`` on one branch and evolve it to each of ``times``.

    Klein-Gordon runs default to the truncated relation, Dirac runs to the
    modified 1+1D system. Returns the observable series and the fields.
    """
    if equation is Equation.KLEIN_GORDON:
        decomp = single_branch_kg(params, packet, branch, model or Model.AC_TRUNCATED)
        fields = []
        for t in times:
            f = evolve_kg(decomp, t)
            fields.append(remove_rest_phase(f, params.rest_energy, branch, t) if remove_rest else f)
    else:
        dmodel = model or DiracModel.MODIFIED
        decomp = decompose_dirac(params, single_branch_dirac(params, packet, branch, dmodel), dmodel)
        fields = []
        for t in times:
            f = recombine_dirac(decomp, t)
            fields.append(remove_rest_phase(f, params.rest_energy, branch, t) if remove_rest else f)
    return _series_from_fields(times, fields, keep_density), fields


def fit_velocity(times: np.ndarray, positions: np.ndarray) -> float:
    """Least-squares slope of ``positions(times)`` over the second half of the run."""
    half = len(times) // 2
    t, x = times[half:], positions[half:]
    if len(t) < 2:
        raise ParameterError("too few frames for a velocity fit")
    slope, _ = np.polyfit(t, x, 1)
    return float(slope)


def _norm_drift(run: PacketRun) -> float:
    return float(np.max(np.abs(run.norm - run.norm[0])) / run.norm[0])


def run_mass_extraction(
    params: PhysParams,
    p0: float = 0.05,
    sigma: float = 20.0,
    t_max: float = 2000.0,
    grid: Grid1D = DEFAULT_GRID,
    equation: Equation = Equation.KLEIN_GORDON,
    branch: Branch = Branch.PARTICLE,
    frames: int = DEFAULT_FRAMES,
) -> ExperimentReport:
    """Measure the drift velocity of a branch-restricted packet and invert it for the inertial mass."""
    if frames < 20:
        raise ParameterError("velocity fits need at least 20 frames")
    x0 = start_position(params, p0, t_max, branch)
    check_packet_fits(grid, sigma, x0)
    times = frame_times(t_max, frames)
    run, _ = evolve_packet(params, gaussian_packet(grid, x0, sigma, p0), times, equation, branch)

    report = ExperimentReport(
        "mass_extraction",
        {**_physics(params), "p0": p0, "sigma": sigma, "t_max": t_max, "n": grid.n,
         "length": grid.length, "equation": equation.value, "branch": branch.name.lower(),
         "frames": frames},
    )
    v = fit_velocity(times, run.mean_x)
    mass = _inertial_mass(params, branch)
    v_pred = branch.sign * p0 / mass
    v_null = branch.sign * p0 / params.m
    drift = float(np.max(np.abs(run.mean_x - run.mean_x[0])))

    report.measure("velocity", v)
    report.predict("velocity", v_pred, "v = +-p0/m+- of the truncated relation")
    report.check("velocity", v, v_pred, VELOCITY_RTOL, "rel")
    report.measure("inertial_mass", p0 / abs(v) if v else math.inf)
    report.predict("inertial_mass", mass, "m+ = m/(1+mu), m- = m/(1-mu)")
    report.check("inertial_mass", report.measurements["inertial_mass"], mass, VELOCITY_RTOL, "rel")
    report.predict("null_velocity", v_null, "undeformed v = +-p0/m")
    if abs(v_pred - v_null) >= NULL_SEPARATION * abs(v_null) > 0:
        sep = abs(v - v_null) / abs(v_null)
        report.measure("null_separation", sep)
        report.check("null_separation", sep, abs(v_pred - v_null) / abs(v_null), NULL_SEPARATION, "min")
    report.measure("max_drift", drift)
    report.check("wraparound", drift, 0.0, grid.length / 3, "max")
    report.measure("norm_drift", _norm_drift(run))
    report.check("norm_drift", report.measurements["norm_drift"], 0.0, NORM_DRIFT_TOL, "max")
    report.series["observables"] = run
    return report


def _schrodinger_run(mass: float, branch: Branch, packet: ScalarField, times) -> tuple[PacketRun, list]:
    fields = [evolve_schrodinger(mass, branch, packet, t) for t in times]
    return _series_from_fields(times, fields, False), fields


def _density_gap(a_fields, b_fields) -> np.ndarray:
    dx = a_fields[0].grid.spacing
    return np.array([np.sqrt(np.sum((a.density - b.density) ** 2) * dx) for a, b in zip(a_fields, b_fields)])


def _compare_to_schrodinger(params, packet, times, equation, branch, model, mass):
    run, fields = evolve_packet(params, packet, times, equation, branch, model, remove_rest=True)
    s_run, s_fields = _schrodinger_run(mass, branch, packet, times)
    gap = _density_gap(fields, s_fields)
    var_gap = np.abs(run.var_x - s_run.var_x) / s_run.var_x
    return run, gap, var_gap


def run_schrodinger_equivalence(
    params: PhysParams,
    p0: float = 0.05,
    sigma: float = 20.0,
    t_max: float = 2000.0,
    grid: Grid1D = DEFAULT_GRID,
    branch: Branch = Branch.PARTICLE,
    equation: Equation = Equation.KLEIN_GORDON,
    frames: int = DEFAULT_FRAMES,
    *,
    baseline: bool = True,
) -> ExperimentReport:
    """Branch-restricted relativistic evolution against Schrodinger evolution with ``m+-``.

    The relativistic side is the truncated Klein-Gordon field (or the modified
    Dirac spinor) with its rest phase stripped. With ``baseline`` the same
    comparison is repeated for the undeformed pair, special-relativistic field
    against Schrodinger with ``m``, which calibrates the relativistic error
    floor that is not due to the deformation.
    """
    x0 = start_position(params, p0, t_max, branch)
    check_packet_fits(grid, sigma, x0)
    times = frame_times(t_max, frames)
    packet = gaussian_packet(grid, x0, sigma, p0)
    mass = _inertial_mass(params, branch)

    report = ExperimentReport(
        "schrodinger_equivalence",
        {**_physics(params), "p0": p0, "sigma": sigma, "t_max": t_max, "n": grid.n,
         "length": grid.length, "equation": equation.value, "branch": branch.name.lower(),
         "frames": frames},
    )
    run, gap, var_gap = _compare_to_schrodinger(params, packet, times, equation, branch, None, mass)
    report.measure("density_l2_max", float(np.max(gap)))
    report.predict("density_l2_max", 0.0, "i dpsi/dt = -+ (1/2m+-) d2psi/dx2 after rest-phase removal")
    report.check("density_l2_max", float(np.max(gap)), 0.0, EQUIVALENCE_TOL, "max")
    report.measure("variance_rel_max", float(np.max(var_gap)))
    report.predict("variance_rel_max", 0.0, "Schrodinger spreading with m+-")
    report.measure("norm_drift", _norm_drift(run))
    report.check("norm_drift", report.measurements["norm_drift"], 0.0, NORM_DRIFT_TOL, "max")

    if baseline:
        base_model = Model.SPECIAL_RELATIVITY if equation is Equation.KLEIN_GORDON else DiracModel.ORDINARY
        b_run, b_gap, _ = _compare_to_schrodinger(params, packet, times, equation, branch, base_model, params.m)
        report.measure("baseline_density_l2_max", float(np.max(b_gap)))
        report.predict("baseline_density_l2_max", 0.0, "undeformed field against Schrodinger with m")
        report.check("baseline_density_l2_max", float(np.max(b_gap)), 0.0, EQUIVALENCE_TOL, "max")
        report.measure("baseline_norm_drift", _norm_drift(b_run))
        report.check("baseline_norm_drift", report.measurements["baseline_norm_drift"], 0.0,
                     NORM_DRIFT_TOL, "max")
        if params.mu <= UNDEFORMED_MU:
            report.check("matches_baseline", float(np.max(gap)), float(np.max(b_gap)), BASELINE_RTOL, "rel")
    report.series["density_gap"] = np.column_stack([times, gap])
    report.series["observables"] = run
    return report


# --- kinematic tables ------------------------------------------------------------------

def run_velocity_table(params: PhysParams, p0: float = 0.05) -> ExperimentReport:
    """Group and particle velocities of the truncated and MS relations at small ``p0``."""
    report = ExperimentReport("velocity_table", {**_physics(params), "p0": p0})
    mp = m_plus(params)
    table = {
        "ac_group": (Model.AC_TRUNCATED, "group", p0 / mp, "v_g = p/m+"),
        "ac_particle": (Model.AC_TRUNCATED, "particle", p0 / params.m, "v_particle = p/m"),
        "ms_group": (Model.MAGUEIJO_SMOLIN, "group", p0 / params.m, "v_g = p/m"),
        "ms_particle": (Model.MAGUEIJO_SMOLIN, "particle", p0 / mp, "v_particle = p/m+"),
    }
    for key, (model, kind, pred, ref) in table.items():
        if kind == "group":
            v = group_velocity(params, p0, Branch.PARTICLE, model)
        else:
            v = particle_velocity(params, p0, solve_dispersion(params, p0, Branch.PARTICLE, model))
        report.measure(key, v)
        report.predict(key, pred, ref)
        report.check(key, v, pred, TABLE_RTOL, "rel")
    m = report.measurements
    report.check("reciprocity_group", m["ac_group"], m["ms_particle"], RECIPROCITY_RTOL, "rel")
    report.check("reciprocity_particle", m["ac_particle"], m["ms_group"], RECIPROCITY_RTOL, "rel")
    return report


def truncation_errors(params: PhysParams, p: float, k_list: Sequence[float], branch: Branch) -> np.ndarray:
    errs = []
    for k in k_list:
        pk = params.with_k(k)
        errs.append(abs(solve_dispersion(pk, p, branch, Model.AC_EXACT)
                        - solve_dispersion(pk, p, branch, Model.AC_TRUNCATED)))
    return np.array(errs)


def fit_exponent(k_list: Sequence[float], errors: np.ndarray) -> float:
    """``-slope`` of ``log(error)`` against ``log(k)``."""
    slope, _ = np.polyfit(np.log(np.asarray(k_list, float)), np.log(errors), 1)
    return float(-slope)


def run_convergence_study(params: PhysParams, p: float = 0.3,
                          k_list: Sequence[float] = (10.0, 20.0, 40.0, 80.0)) -> ExperimentReport:
    """How fast the truncated relation approaches the exact one as ``k`` grows."""
    if len(k_list) < 2:
        raise ParameterError("convergence study needs at least two values of k")
    report = ExperimentReport("convergence_study", {"m": params.m, "c": params.c, "p": p,
                                                    "k_list": [float(k) for k in k_list]})
    for branch in Branch:
        tag = branch.name.lower()
        errs = truncation_errors(params, p, k_list, branch)
        report.series[f"errors_{tag}"] = np.column_stack([np.asarray(k_list, float), errs])
        for k, e in zip(k_list, errs):
            report.measure(f"error_{tag}_k{k:g}", e)
        floor = 1e-15 * params.rest_energy
        if np.all(errs <= floor):
            report.measure(f"max_error_{tag}", float(np.max(errs)))
            report.predict(f"max_error_{tag}", 0.0, "rest energy exact in both relations")
            report.check(f"max_error_{tag}", float(np.max(errs)), 0.0, floor, "max")
            continue
        exponent = fit_exponent(k_list, errs)
        report.measure(f"exponent_{tag}", exponent)
        report.predict(f"exponent_{tag}", 2.0, "neglected terms are O(1/k^2) at fixed p")
        report.check_range(f"exponent_{tag}", exponent, *EXPONENT_RANGE)
    return report


def run_cpt_report(params: PhysParams, assumed_split: float | None = None) -> ExperimentReport:
    """Particle/antiparticle inertial-mass split and the bound it places on ``k``."""
    report = ExperimentReport("cpt_report", {**_physics(params), "assumed_split": assumed_split})
    mu = params.mu
    plus = effective_masses(params, Branch.PARTICLE, Model.AC_TRUNCATED).inertial_mass
    minus = effective_masses(params, Branch.ANTIPARTICLE, Model.AC_TRUNCATED).inertial_mass
    exact = cpt_ratio(params)
    first = cpt_ratio_first_order(params)
    gap = (exact - first) / first

    report.measure("ratio", exact)
    report.predict("ratio", 2 * mu / (1 - mu * mu), "|m+ - m-|/m = 2mu/(1-mu^2)")
    report.check("ratio", exact, 2 * mu / (1 - mu * mu), CPT_RTOL, "rel")
    report.measure("ratio_first_order", first)
    report.predict("ratio_first_order", 2 * mu, "2 m c^2 / k")
    report.measure("first_order_gap", gap)
    report.predict("first_order_gap", mu * mu / (1 - mu * mu), "(exact - first)/first = mu^2/(1-mu^2)")
    report.check("first_order_gap", gap, mu * mu / (1 - mu * mu), CPT_RTOL, "abs")
    report.check("first_order_gap_bound", gap, 0.0, CPT_GAP_FACTOR * mu * mu, "max")
    fd_ratio = abs(minus - plus) / params.m
    report.measure("ratio_from_curvature", fd_ratio)
    report.check("ratio_from_curvature", fd_ratio, exact, 1e-8, "abs")
    if assumed_split is not None:
        bound = k_lower_bound(params.m, assumed_split, params.c)
        report.measure("k_lower_bound", bound)
        report.predict("k_lower_bound", 2 * params.rest_energy / assumed_split, "k >= 2 m c^2 / split")
        report.check("k_lower_bound", bound, 2 * params.rest_energy / assumed_split, 0.0, "abs")
    return report


def dirac_sample_grid(params: PhysParams, sample_count: int) -> np.ndarray:
    """Deterministic energies spanning ``[-3, 3] m c^2``, including the mass gap."""
    return np.linspace(-3.0, 3.0, sample_count) * params.rest_energy


def mode_energy_gap(params: PhysParams, p: float, branch: Branch = Branch.PARTICLE) -> float:
    return abs(dirac_mode_energy(params, p, branch, DiracModel.MODIFIED)
               - solve_dispersion(params, p, branch, Model.AC_TRUNCATED))


def run_dirac_consistency(params: PhysParams, sample_count: int = 1000, p: float = 0.1) -> ExperimentReport:
    """Mass-shell identity of the deformed Dirac operator and the Dirac/KG mode-energy gap."""
    report = ExperimentReport("dirac_consistency", {**_physics(params), "sample_count": sample_count, "p": p})
    E = dirac_sample_grid(params, sample_count)
    dev = float(np.max(np.abs(dirac_massshell_identity(params, E) - 1.0)))
    report.measure("identity_deviation", dev)
    report.predict("identity_deviation", 0.0, "D0^2 - sum Da^2 = 1")
    report.check("identity_deviation", dev, 0.0, IDENTITY_TOL, "max")

    g1 = mode_energy_gap(params, p)
    g2 = mode_energy_gap(params.with_k(2 * params.k), p)
    E1 = solve_dispersion(params, p, Branch.PARTICLE, Model.AC_TRUNCATED)
    P = (p * params.c) ** 2
    report.measure("mode_energy_gap", g1)
    report.measure("mode_energy_gap_2k", g2)
    if g1 == 0:
        report.predict("mode_energy_gap", 0.0, "gap vanishes at p = 0")
        report.check("mode_energy_gap", g1, 0.0, 0.0, "abs")
        return report
    # leading term of the extra -P E^2/4k^2 in the Dirac condition
    pred = P * E1 * E1 / (4 * params.k**2) / abs(2 * E1 - P / params.k)
    report.predict("mode_energy_gap", pred, "P E^2 / (4 k^2 |2E - P/k|)")
    report.check("mode_energy_gap", g1, pred, GAP_PREDICTION_RTOL, "rel")
    exponent = math.log(g1 / g2) / math.log(2)
    report.measure("gap_exponent", exponent)
    report.predict("gap_exponent", 2.0, "gap scales as 1/k^2")
    report.check_range("gap_exponent", exponent, *EXPONENT_RANGE)
    return report


EXPERIMENTS = {
    "mass_extraction": run_mass_extraction,
    "schrodinger_equivalence": run_schrodinger_equivalence,
    "velocity_table": run_velocity_table,
    "convergence_study": run_convergence_study,
    "cpt_report": run_cpt_report,
    "dirac_consistency": run_dirac_consistency,
}
