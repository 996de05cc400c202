"""Acceptance criteria behind `isofield verify`.

Each criterion measures one number against one tolerance. Criteria with
several parts report the binding part (largest measured/tolerance
ratio) at the top level and every part under `detail`. Monte-Carlo
criteria draw fewer realizations under the fast budget and the full
count under the full budget; seeds are fixed, so a report is a pure
function of the budget.
"""

import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .coupling import gaunt_consistency_max_error, gg_block
from .correlation import (
    RadialKernelSet,
    SpectralMeasure,
    VectorSpectralPair,
    constant_radial,
    damage_A_from_M,
    damage_M_from_A,
    exponential_radial,
    gaussian_radial,
    inplane_H_from_T,
    inplane_corr,
    irrotational_f_from_g,
    m_to_l,
    scalar_corr,
    solenoidal_g_from_f,
    vector_corr,
)
from .simulate import (
    SimulationPlan,
    estimate_correlation,
    simulate_scalar,
    simulate_vector,
    unified_atoms,
    vector_expansion_covariance,
)
from .special_fn import SphericalPoint, quadrature_rule, rayleigh_partial_sum
from .sphere import (
    AngularPowerSpectrum,
    alm_from_real_basis,
    alm_to_stokes,
    estimate_cell,
    parity_transform,
    real_basis_expansion,
    stokes_to_alm,
    synthesize_alm,
    synthesize_ensemble,
)

_BUDGETS = {
    "fast": {"scalar": 2000, "vector": 2000, "cmb": 300},
    "full": {"scalar": 10000, "vector": 10000, "cmb": 1000},
}


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: float
    tolerance: float
    seconds: float
    detail: dict = field(default_factory=dict)


def _ratio(measured, tolerance):
    if tolerance > 0.0:
        return measured / tolerance
    return 0.0 if measured == 0.0 else math.inf


def _combine(checks):
    """Fold named (measured, tolerance) parts into one verdict.

    Returns (measured, tolerance, passed, detail) with the binding part
    on top. Parts with tolerance zero demand an exact zero.
    """
    binding = max(checks, key=lambda c: _ratio(c[1], c[2]))
    passed = all(
        (m < t) if t > 0.0 else (m == 0.0) for _, m, t in checks
    )
    detail = {
        label: {"measured": float(m), "tolerance": float(t)}
        for label, m, t in checks
    }
    detail["binding"] = binding[0]
    return float(binding[1]), float(binding[2]), passed, detail


# ---------------------------------------------------------------------------
# criteria


def _c01_coupling_anchors(budget):
    err_scalar = float(
        np.max(np.abs(gg_block(0, 1, 1)[0] - np.eye(3) / math.sqrt(3.0)))
    )
    err_zonal = float(
        np.max(
            np.abs(gg_block(2, 1, 1)[2] - np.diag([-1.0, 2.0, -1.0]) / math.sqrt(6.0))
        )
    )
    return _combine(
        [("scalar_block", err_scalar, 1e-12), ("zonal_block", err_zonal, 1e-12)]
    )


def _c02_gaunt_equivalence(budget):
    start = time.perf_counter()
    error = gaunt_consistency_max_error(6)
    seconds = time.perf_counter() - start
    return _combine(
        [("max_abs_error", float(error), 1e-8), ("runtime_seconds", seconds, 30.0)]
    )


def _c03_spectral_basis_identities(budget):
    rng = np.random.default_rng(20240903)
    worst = 0.0
    for _ in range(100):
        rvec = rng.standard_normal(3) * rng.uniform(0.2, 2.0)
        for rank in (1, 2):
            for built, expanded in m_to_l(rank, rvec):
                worst = max(worst, float(np.max(np.abs(built - expanded))))
    return _combine([("max_abs_error", worst, 1e-10)])


def _c04_plane_wave_sum(budget):
    rng = np.random.default_rng(20240904)
    worst = 0.0
    for _ in range(50):
        k = rng.standard_normal(3)
        r = rng.standard_normal(3)
        k *= rng.uniform(0.05, 2.5) / np.linalg.norm(k)
        r *= rng.uniform(0.05, 2.0) / np.linalg.norm(r)
        want = np.exp(1j * float(k @ r))
        got = rayleigh_partial_sum(k, r, 30)
        worst = max(worst, abs(got - want))
    return _combine([("max_abs_error", worst, 1e-8)])


def _c05_scalar_monte_carlo(budget):
    start = time.perf_counter()
    realizations = _BUDGETS[budget]["scalar"]
    separations = np.linspace(0.4, 4.0, 10)
    points = []
    for r in separations:
        points.append((0.0, 0.0, -r / 2.0))
        points.append((0.0, 0.0, r / 2.0))
    measure = SpectralMeasure(((1.0, 1.0),))
    plan = SimulationPlan(
        kind="scalar",
        spectral=measure,
        points=tuple(points),
        ell_max=12,
        realizations=realizations,
        master_seed=20240905,
    )
    sample = simulate_scalar(plan)
    pairs = [(2 * k, 2 * k + 1) for k in range(len(separations))]
    est = estimate_correlation(sample, pairs)
    worst = 0.0
    for k, r in enumerate(separations):
        want = scalar_corr(float(r), measure)
        z = abs(est.moments[k, 0, 0] - want) / est.standard_errors[k, 0, 0]
        worst = max(worst, float(z))
    seconds = time.perf_counter() - start
    measured, tolerance, passed, detail = _combine(
        [("max_z_score", worst, 3.0), ("runtime_seconds", seconds, 120.0)]
    )
    detail["realizations"] = realizations
    return measured, tolerance, passed, detail


def _vector_test_pair():
    return VectorSpectralPair(
        phi1=SpectralMeasure(((0.8, 0.6), (1.7, 0.4))),
        phi2=SpectralMeasure(((1.2, 0.5),)),
    )


def _c06_vector_monte_carlo(budget):
    start = time.perf_counter()
    realizations = _BUDGETS[budget]["vector"]
    pair = _vector_test_pair()
    directions = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 0.6, 0.8],
            [0.48, -0.6, 0.64],
            [-0.8, 0.36, 0.48],
            [0.6, 0.8, 0.0],
        ]
    )
    radii = np.array([0.3, 0.8, 1.3, 1.8, 2.2])
    seps = directions * radii[:, None]
    points = []
    for s in seps:
        points.append(tuple(-0.5 * s))
        points.append(tuple(0.5 * s))
    plan = SimulationPlan(
        kind="vector",
        spectral=pair,
        points=tuple(points),
        ell_max=8,
        realizations=realizations,
        master_seed=20240906,
    )
    sample = simulate_vector(plan)
    pairs = [(2 * k, 2 * k + 1) for k in range(len(radii))]
    est = estimate_correlation(sample, pairs)
    worst = 0.0
    for k, s in enumerate(seps):
        want = vector_corr(s, pair)
        z = np.abs(est.moments[k] - want) / est.standard_errors[k]
        worst = max(worst, float(np.max(z)))
    min_eig = math.inf
    for atom_index in range(len(unified_atoms(pair))):
        cov = vector_expansion_covariance(pair, 8, atom_index)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(cov).min()))
    eig_deficit = max(0.0, -min_eig)
    seconds = time.perf_counter() - start
    measured, tolerance, passed, detail = _combine(
        [
            ("max_z_score", worst, 3.0),
            ("psd_eigenvalue_deficit", eig_deficit, 1e-9),
            ("runtime_seconds", seconds, 600.0),
        ]
    )
    detail["realizations"] = realizations
    detail["min_eigenvalue"] = min_eig
    return measured, tolerance, passed, detail


def _c07_restriction_relations(budget):
    radii = np.linspace(0.1, 3.0, 30)

    err_fg = 0.0
    f_gauss = gaussian_radial(1.0, 1.2)
    g_route = solenoidal_g_from_f(f_gauss)
    for r in radii:
        want = (1.0 - (r / 1.2) ** 2) * f_gauss(r)
        err_fg = max(err_fg, abs(g_route(float(r)) - want))
    f_exp = exponential_radial(1.0, 0.9)
    g_route = solenoidal_g_from_f(f_exp)
    for r in radii:
        want = (1.0 - r / (2.0 * 0.9)) * f_exp(r)
        err_fg = max(err_fg, abs(g_route(float(r)) - want))
    g_gauss = gaussian_radial(1.0, 1.1)
    f_route = irrotational_f_from_g(g_gauss)
    for r in radii:
        want = (1.0 - 2.0 * (r / 1.1) ** 2) * g_gauss(r)
        err_fg = max(err_fg, abs(f_route(float(r)) - want))
    g_exp = exponential_radial(1.0, 1.3)
    f_route = irrotational_f_from_g(g_exp)
    for r in radii:
        want = (1.0 - r / 1.3) * g_exp(r)
        err_fg = max(err_fg, abs(f_route(float(r)) - want))

    kernels = RadialKernelSet.inplane(
        gaussian_radial(0.8, 1.0),
        exponential_radial(0.5, 1.4),
        gaussian_radial(0.3, 2.0),
        constant_radial(0.1),
    )
    err_ht = 0.0
    for r in (0.5, 1.0, 2.0):
        t = inplane_corr(np.array([r, 0.0]), kernels)
        back = inplane_H_from_T(
            t[0, 0, 0, 0], t[1, 1, 1, 1], t[0, 0, 1, 1], t[0, 1, 0, 1], r
        )
        want = kernels.coefficient_values(r)
        err_ht = max(err_ht, max(abs(b - w) for b, w in zip(back, want)))

    # dyadic-rational coefficients keep every sum and difference exact
    a = (0.25, -0.5, 0.75, 1.5, -2.0)
    m = damage_M_from_A(a)
    a_back, residual = damage_A_from_M(m[:6])
    err_am = max(abs(x - y) for x, y in zip(a_back, a))
    err_am = max(err_am, abs(m[6]))

    measured, tolerance, passed, detail = _combine(
        [
            ("f_g_identities", err_fg, 1e-8),
            ("inplane_round_trip", err_ht, 1e-12),
            ("damage_round_trip", err_am, 0.0),
            ("damage_residual", abs(residual), 0.0),
        ]
    )
    return measured, tolerance, passed, detail


def _sphere_test_spectrum(ell_max, v_amplitude=0.2):
    return AngularPowerSpectrum.power_law(
        ell_max, (1.0, 0.5, 0.5, v_amplitude), 0.0
    )


def _c08_sphere_round_trips(budget):
    ell_max = 16
    spec = _sphere_test_spectrum(ell_max)
    alm = synthesize_alm(spec, seed=20240908)
    rule = quadrature_rule(ell_max)

    smap = alm_to_stokes(alm, rule)
    back = stokes_to_alm(smap, ell_max, rule)
    err_rt = float(np.max(np.abs(back.coefficients - alm.coefficients)))

    rset = real_basis_expansion(alm)
    again = alm_from_real_basis(rset)
    err_bij = float(np.max(np.abs(again.coefficients - alm.coefficients)))

    twice = parity_transform(parity_transform(alm))
    err_inv = float(np.max(np.abs(twice.coefficients - alm.coefficients)))

    base_points = (
        SphericalPoint(0.7, 1.1),
        SphericalPoint(1.9, 4.0),
        SphericalPoint(2.4, 0.3),
        SphericalPoint(1.2, 5.9),
    )
    anti_points = tuple(
        SphericalPoint(math.pi - p.theta, (p.phi + math.pi) % (2.0 * math.pi))
        for p in base_points
    )
    original = alm_to_stokes(alm, base_points)
    flipped = alm_to_stokes(parity_transform(alm), anti_points)
    signs = np.array([1.0, 1.0, -1.0, 1.0])
    err_anti = float(np.max(np.abs(flipped.values - signs * original.values)))

    return _combine(
        [
            ("synthesis_analysis", err_rt, 1e-8),
            ("real_basis_bijection", err_bij, 1e-8),
            ("parity_involution", err_inv, 0.0),
            ("antipodal_parity", err_anti, 1e-10),
        ]
    )


def _c09_stokes_ensemble(budget):
    start = time.perf_counter()
    realizations = _BUDGETS[budget]["cmb"]
    ell_max = 8
    spec = _sphere_test_spectrum(ell_max)
    ensemble = synthesize_ensemble(spec, seed=12345, realizations=realizations)
    est = estimate_cell(ensemble)
    worst = 0.0
    dead_err = 0.0
    for ell in range(ell_max + 1):
        want = spec.matrix(ell)
        for i in range(4):
            for j in range(4):
                se = est.standard_errors[ell, i, j]
                diff = abs(est.means[ell, i, j] - want[i, j])
                if se > 0.0:
                    worst = max(worst, float(diff / se))
                else:
                    dead_err = max(dead_err, float(diff))

    silent = _sphere_test_spectrum(ell_max, v_amplitude=0.0)
    alm = synthesize_alm(silent, seed=7)
    smap = alm_to_stokes(alm, quadrature_rule(ell_max))
    v_leak = float(np.max(np.abs(smap.values[:, 3])))

    seconds = time.perf_counter() - start
    measured, tolerance, passed, detail = _combine(
        [
            ("max_z_score", worst, 3.0),
            ("dead_entry_error", dead_err, 0.0),
            ("v_silence", v_leak, 0.0),
            ("runtime_seconds", seconds, 300.0),
        ]
    )
    detail["realizations"] = realizations
    return measured, tolerance, passed, detail


def _c10_thread_determinism(budget):
    from . import cli

    scalar_plan = {
        "spectral": {"atoms": [[0.9, 1.0], [1.6, 0.5]]},
        "points": [[0.3, -0.2, 0.5], [1.0, 0.4, -0.7], [-0.6, 1.1, 0.2]],
        "ell_max": 8,
        "realizations": 6,
        "seed": 99,
    }
    vector_plan = {
        "spectral": {
            "phi1": [[0.8, 0.6], [1.7, 0.4]],
            "phi2": [[1.2, 0.5]],
        },
        "points": [[0.5, 0.0, 0.1], [-0.4, 0.8, 0.3], [0.2, -0.9, 0.6]],
        "ell_max": 6,
        "realizations": 6,
        "seed": 123,
    }
    detail = {}
    mismatches = 0.0
    saved = os.environ.get("ISOFIELD_THREADS")
    try:
        with tempfile.TemporaryDirectory() as work:
            for kind, plan in (("scalar", scalar_plan), ("vector", vector_plan)):
                plan_path = os.path.join(work, kind + "_plan.json")
                with open(plan_path, "w") as handle:
                    json.dump(plan, handle)
                outputs = []
                for threads in (1, 2, 8):
                    os.environ["ISOFIELD_THREADS"] = str(threads)
                    out_path = os.path.join(work, "%s_t%d.csv" % (kind, threads))
                    code = cli.main(
                        ["simulate", kind, "--plan", plan_path, "--out", out_path]
                    )
                    if code != 0:
                        raise RuntimeError("simulate %s exited %d" % (kind, code))
                    with open(out_path, "rb") as handle:
                        outputs.append(handle.read())
                same = outputs[0] == outputs[1] == outputs[2]
                detail[kind + "_identical"] = bool(same)
                if not same:
                    mismatches += 1.0
    finally:
        if saved is None:
            os.environ.pop("ISOFIELD_THREADS", None)
        else:
            os.environ["ISOFIELD_THREADS"] = saved
    measured, tolerance, passed, combined = _combine(
        [("mismatched_runs", mismatches, 0.0)]
    )
    combined.update(detail)
    return measured, tolerance, passed, combined


_CRITERIA = (
    (1, "coupling anchors", _c01_coupling_anchors),
    (2, "gaunt equivalence", _c02_gaunt_equivalence),
    (3, "spectral basis identities", _c03_spectral_basis_identities),
    (4, "plane-wave partial sum", _c04_plane_wave_sum),
    (5, "scalar monte carlo", _c05_scalar_monte_carlo),
    (6, "vector monte carlo", _c06_vector_monte_carlo),
    (7, "restriction relations", _c07_restriction_relations),
    (8, "sphere round trips", _c08_sphere_round_trips),
    (9, "stokes ensemble", _c09_stokes_ensemble),
    (10, "determinism across threads", _c10_thread_determinism),
)


def run_criterion(cid, budget="fast"):
    """Run one acceptance criterion and return its CriterionResult."""
    if budget not in _BUDGETS:
        raise ValueError("budget must be 'fast' or 'full', got %r" % (budget,))
    for num, name, fn in _CRITERIA:
        if num == cid:
            start = time.perf_counter()
            measured, tolerance, passed, detail = fn(budget)
            seconds = time.perf_counter() - start
            return CriterionResult(
                cid=num,
                name=name,
                passed=bool(passed),
                measured=float(measured),
                tolerance=float(tolerance),
                seconds=round(seconds, 3),
                detail=detail,
            )
    raise ValueError("criterion id must be 1..%d, got %r" % (len(_CRITERIA), cid))


def run_all(budget="fast"):
    """Run every criterion and assemble the machine-readable report."""
    if budget not in _BUDGETS:
        raise ValueError("budget must be 'fast' or 'full', got %r" % (budget,))
    start = time.perf_counter()
    results = [run_criterion(num, budget) for num, _, _ in _CRITERIA]
    report = {
        "package": "isofield",
        "version": __version__,
        "budget": budget,
        "criteria": [asdict(r) for r in results],
        "all_passed": all(r.passed for r in results),
        "total_seconds": round(time.perf_counter() - start, 3),
    }
    return report
