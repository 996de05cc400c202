"""Monte-Carlo synthesis of isotropic random fields on R^3.

Realizations come from truncated Karhunen-type expansions: Gaussian
coefficients drawn per spectral atom, angular factors from the real
harmonics, radial factors from the spherical Bessel functions. Vector
fields use correlated coefficient blocks assembled from the degree
coupling tables; the same blocks power a deterministic truncated
covariance that closes the loop against the correlation module.

Noise is Gaussian throughout (the second-order theory fixes only two
moments; the choice is recorded on the realization). Every stochastic
routine derives its draws from labelled substreams of the plan's
master seed, so outputs are a pure function of the plan and never
depend on the worker-thread count, which is read from the
ISOFIELD_THREADS environment variable.

The truncation degree should satisfy ell_max >= lambda_max * r_max + 10
for the Bessel tail to be negligible at the largest point radius.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._rng import standard_normals, substream, thread_count
from .correlation import _CART_FROM_M, SpectralMeasure, VectorSpectralPair
from .coupling import gg_block
from .errors import NumericalCheckError
from .special_fn import real_harmonic_table, spherical_bessel_all

__all__ = [
    "CorrelationEstimate",
    "DEFAULT_ELL_MAX",
    "EXPANSION_PREFACTOR",
    "FieldRealization",
    "SimulationPlan",
    "estimate_correlation",
    "simulate_dyadic",
    "simulate_scalar",
    "simulate_vector",
    "truncated_scalar_covariance",
    "truncated_vector_covariance",
    "unified_atoms",
    "vector_expansion_covariance",
]

DEFAULT_ELL_MAX = 16

# sqrt of the unit-sphere area: makes the lambda = 0 atom contribute
# exactly its mass to the pointwise variance
EXPANSION_PREFACTOR = 2.0 * math.sqrt(math.pi)

_CHUNK = 512
_PSD_FLOOR = -1e-9

_KINDS = ("scalar", "vector", "dyadic")


@dataclass(frozen=True)
class SimulationPlan:
    """Everything a simulation run depends on.

    `points` are evaluation sites in R^3. `spectral` is a
    SpectralMeasure for scalar plans and a VectorSpectralPair for
    vector and dyadic plans. Realizations are reproducible functions of
    `master_seed` alone.
    """

    kind: str
    spectral: object
    points: tuple
    ell_max: int = DEFAULT_ELL_MAX
    realizations: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "scalar":
            if not isinstance(self.spectral, SpectralMeasure):
                raise ValueError("scalar plans need a SpectralMeasure")
        elif not isinstance(self.spectral, VectorSpectralPair):
            raise ValueError(f"{self.kind} plans need a VectorSpectralPair")
        if int(self.ell_max) != self.ell_max or self.ell_max < 0:
            raise ValueError("ell_max must be a nonnegative integer")
        object.__setattr__(self, "ell_max", int(self.ell_max))
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ValueError("realizations must be a positive integer")
        object.__setattr__(self, "realizations", int(self.realizations))
        seed = int(self.master_seed)
        if not 0 <= seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        object.__setattr__(self, "master_seed", seed)
        pts = []
        for p in self.points:
            q = tuple(float(v) for v in p)
            if len(q) != 3 or not all(math.isfinite(v) for v in q):
                raise ValueError("points must be finite 3-vectors")
            pts.append(q)
        if not pts:
            raise ValueError("points must be non-empty")
        object.__setattr__(self, "points", tuple(pts))

    @property
    def point_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)


@dataclass(frozen=True)
class FieldRealization:
    """Simulated values, indexed by (realization, point, component)."""

    plan: SimulationPlan
    values: np.ndarray
    component_names: tuple
    noise: str = "gaussian"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        want = (self.plan.realizations, len(self.plan.points), len(self.component_names))
        if vals.shape != want:
            raise ValueError(f"values shape {vals.shape} does not match plan {want}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("realization values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "component_names", tuple(self.component_names))


def _point_geometry(pts: np.ndarray):
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    radii = np.linalg.norm(pts, axis=1)
    safe = np.where(radii > 0.0, radii, 1.0)
    cz = np.clip(pts[:, 2] / safe, -1.0, 1.0)
    thetas = np.where(radii > 0.0, np.arccos(cz), 0.0)
    phis = np.where(
        radii > 0.0, np.arctan2(pts[:, 1], pts[:, 0]) % (2.0 * math.pi), 0.0
    )
    return radii, thetas, phis


def _row_counts(ell_max: int) -> np.ndarray:
    return 2 * np.arange(ell_max + 1) + 1


def _run_chunks(realizations: int, worker) -> None:
    # fixed chunk boundaries keep the substream assignment identical
    # for every thread count
    spans = [(lo, min(lo + _CHUNK, realizations)) for lo in range(0, realizations, _CHUNK)]
    workers = thread_count()
    if workers == 1 or len(spans) == 1:
        for lo, hi in spans:
            worker(lo, hi)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda span: worker(*span), spans))


# ---------------------------------------------------------------------------
# scalar fields


def _scalar_basis(phi: SpectralMeasure, pts: np.ndarray, ell_max: int) -> np.ndarray:
    """Design matrix B with values = B @ coefficients.

    Column block k belongs to atom k and holds
    2 sqrt(pi) sqrt(mass_k) S^m_ell(point direction) j_ell(lambda_k r)
    over the (ell, m) rows.
    """
    radii, thetas, phis = _point_geometry(pts)
    if not phi.atoms:
        return np.zeros((radii.shape[0], 0))
    sh = real_harmonic_table(ell_max, thetas, phis)
    counts = _row_counts(ell_max)
    blocks = []
    for lam, mass in phi.atoms:
        j = spherical_bessel_all(ell_max, lam * radii)
        jr = np.repeat(j, counts, axis=0)
        blocks.append(EXPANSION_PREFACTOR * math.sqrt(mass) * (sh * jr).T)
    return np.concatenate(blocks, axis=1)


def simulate_scalar(plan: SimulationPlan) -> FieldRealization:
    """Draw realizations of an isotropic scalar field at the plan points."""
    if plan.kind != "scalar":
        raise ValueError("plan kind must be 'scalar'")
    basis = _scalar_basis(plan.spectral, plan.point_array, plan.ell_max)
    npts = basis.shape[0]
    dim = basis.shape[1]
    out = np.empty((plan.realizations, npts, 1))

    def worker(lo: int, hi: int) -> None:
        xi = np.empty((dim, hi - lo))
        for b, r in enumerate(range(lo, hi)):
            xi[:, b] = standard_normals(substream(plan.master_seed, r, "scalar"), dim)
        out[lo:hi, :, 0] = (basis @ xi).T

    _run_chunks(plan.realizations, worker)
    return FieldRealization(plan=plan, values=out, component_names=("T",))


def truncated_scalar_covariance(
    phi: SpectralMeasure, x, y, ell_max: int = DEFAULT_ELL_MAX
) -> float:
    """Covariance of the truncated scalar expansion between two points.

    Converges to scalar_corr(|x - y|) as ell_max grows; the difference
    is the truncation tail the simulator carries.
    """
    basis = _scalar_basis(phi, np.array([x, y], dtype=float), ell_max)
    return float(basis[0] @ basis[1])


# ---------------------------------------------------------------------------
# vector fields


@lru_cache(maxsize=None)
def _coefficient_matrix(n_role: int, ell_max: int) -> np.ndarray:
    """Unit-mass coefficient covariance for one measure of the pair.

    Indexed by (component in the real m-basis of degree 1, ell, m),
    flattened component-major. The two roles differ only in the weight
    of the degree-2 coupling term. Symmetric by the coupling swap rule;
    positive semidefinite up to roundoff.
    """
    if n_role not in (1, 2):
        raise ValueError("measure role must be 1 or 2")
    nlm = (ell_max + 1) ** 2
    g211 = gg_block(2, 1, 1)
    weight = -1.0 / (5.0 * math.sqrt(6.0)) if n_role == 1 else math.sqrt(2.0) / (5.0 * math.sqrt(3.0))
    four = np.zeros((3, nlm, 3, nlm))
    eye3 = np.eye(3)
    for ell in range(ell_max + 1):
        for ellp in (ell - 2, ell, ell + 2):
            if ellp < 0 or ellp > ell_max:
                continue
            # i^(ell' - ell) is -1 for the off-diagonal degree blocks
            sign = 1.0 if ellp == ell else -1.0
            pref = 4.0 * math.pi * sign * math.sqrt((2 * ell + 1) * (2 * ellp + 1))
            block = np.zeros((3, 2 * ell + 1, 3, 2 * ellp + 1))
            if ellp == ell:
                b0 = gg_block(0, ell, ell)
                pair0 = b0[0] * b0[0, ell, ell]
                block += np.einsum("ij,mn->imjn", eye3, pair0) / 3.0
            b2 = gg_block(2, ell, ellp)
            zonal = b2[2, ell, ellp]
            if zonal != 0.0:
                block += weight * zonal * np.einsum("kij,kmn->imjn", g211, b2)
            four[:, ell * ell : (ell + 1) ** 2, :, ellp * ellp : (ellp + 1) ** 2] = (
                pref * block
            )
    mat = four.reshape(3 * nlm, 3 * nlm)
    skew = np.max(np.abs(mat - mat.T))
    if skew > 1e-12 * max(1.0, np.max(np.abs(mat))):
        raise NumericalCheckError(
            f"coefficient covariance asymmetry {skew:.3e} for role {n_role}"
        )
    mat = 0.5 * (mat + mat.T)
    mat.setflags(write=False)
    return mat


def unified_atoms(pair: VectorSpectralPair) -> tuple:
    """Merged atom list (wavenumber, mass in measure 1, mass in measure 2).

    Wavenumbers are the sorted union over both measures, with mass 0
    where a measure has no atom. Roles follow the canonical kernel
    normalization (measure 1 solenoidal, measure 2 potential).
    """
    bar = pair.as_barycentric()
    first = dict(bar.phi1.atoms)
    second = dict(bar.phi2.atoms)
    lams = sorted(set(first) | set(second))
    return tuple((lam, first.get(lam, 0.0), second.get(lam, 0.0)) for lam in lams)


def vector_expansion_covariance(
    pair: VectorSpectralPair, ell_max: int, atom_index: int
) -> np.ndarray:
    """Coefficient covariance of one merged atom, over both measures.

    Block-diagonal over the measure role since coefficients of the two
    measures are uncorrelated; each block is the unit-mass coefficient
    matrix scaled by that measure's mass at the atom.
    """
    atoms = unified_atoms(pair)
    if not 0 <= atom_index < len(atoms):
        raise ValueError(f"atom index {atom_index} out of range for {len(atoms)} atoms")
    _, m1, m2 = atoms[atom_index]
    dim = 3 * (ell_max + 1) ** 2
    cov = np.zeros((2 * dim, 2 * dim))
    cov[:dim, :dim] = m1 * _coefficient_matrix(1, ell_max)
    cov[dim:, dim:] = m2 * _coefficient_matrix(2, ell_max)
    low = float(np.linalg.eigvalsh(cov).min())
    if low < _PSD_FLOOR:
        raise NumericalCheckError(
            f"coefficient covariance minimum eigenvalue {low:.3e} below {_PSD_FLOOR}"
        )
    return cov


def _vector_factors(pair: VectorSpectralPair, ell_max: int):
    """Per-(measure, atom) factor F with F F^T the coefficient covariance."""
    bar = pair.as_barycentric()
    out = []
    for n_role, phi in ((1, bar.phi1), (2, bar.phi2)):
        base = _coefficient_matrix(n_role, ell_max)
        for ai, (lam, mass) in enumerate(phi.atoms):
            w, v = np.linalg.eigh(mass * base)
            low = float(w.min())
            if low < _PSD_FLOOR:
                raise NumericalCheckError(
                    f"coefficient covariance minimum eigenvalue {low:.3e} "
                    f"below {_PSD_FLOOR} (role {n_role}, atom {ai})"
                )
            w = np.clip(w, 0.0, None)
            out.append((n_role, ai, lam, v * np.sqrt(w)))
    return out


def _simulate_vector_tagged(plan: SimulationPlan, tag: str) -> FieldRealization:
    pts = plan.point_array
    radii, thetas, phis = _point_geometry(pts)
    sh = real_harmonic_table(plan.ell_max, thetas, phis)
    counts = _row_counts(plan.ell_max)
    npts = pts.shape[0]
    nlm = (plan.ell_max + 1) ** 2
    dim = 3 * nlm
    pieces = []
    for n_role, ai, lam, factor in _vector_factors(plan.spectral, plan.ell_max):
        j = spherical_bessel_all(plan.ell_max, lam * radii)
        angular = (sh * np.repeat(j, counts, axis=0)).T
        pieces.append((f"{tag}/n{n_role}/a{ai}", factor, angular))
    out = np.empty((plan.realizations, npts, 3))
    to_cart = _CART_FROM_M.T

    def worker(lo: int, hi: int) -> None:
        acc = np.zeros((hi - lo, npts, 3))
        for label, factor, angular in pieces:
            xi = np.empty((dim, hi - lo))
            for b, r in enumerate(range(lo, hi)):
                xi[:, b] = standard_normals(substream(plan.master_seed, r, label), dim)
            z = (factor @ xi).reshape(3, nlm, hi - lo)
            acc += np.einsum("pq,iqb->bpi", angular, z)
        out[lo:hi] = acc @ to_cart

    _run_chunks(plan.realizations, worker)
    return FieldRealization(plan=plan, values=out, component_names=("T1", "T2", "T3"))


def simulate_vector(plan: SimulationPlan) -> FieldRealization:
    """Draw realizations of an isotropic vector field (cartesian components)."""
    if plan.kind != "vector":
        raise ValueError("plan kind must be 'vector'")
    return _simulate_vector_tagged(plan, "vector")


def truncated_vector_covariance(
    pair: VectorSpectralPair, x, y, ell_max: int = DEFAULT_ELL_MAX
) -> np.ndarray:
    """3x3 covariance of the truncated vector expansion between two points.

    Converges to vector_corr(x - y) as ell_max grows; exact agreement
    at finite ell_max is the deterministic loop-closure check for the
    coefficient covariance assembly.
    """
    bar = pair.as_barycentric()
    pts = np.array([x, y], dtype=float)
    radii, thetas, phis = _point_geometry(pts)
    sh = real_harmonic_table(ell_max, thetas, phis)
    counts = _row_counts(ell_max)
    nlm = (ell_max + 1) ** 2
    cov_m = np.zeros((3, 3))
    for n_role, phi in ((1, bar.phi1), (2, bar.phi2)):
        if not phi.atoms:
            continue
        four = _coefficient_matrix(n_role, ell_max).reshape(3, nlm, 3, nlm)
        for lam, mass in phi.atoms:
            j = np.repeat(spherical_bessel_all(ell_max, lam * radii), counts, axis=0)
            gx = sh[:, 0] * j[:, 0]
            gy = sh[:, 1] * j[:, 1]
            cov_m += mass * np.einsum("a,iajb,b->ij", gx, four, gy)
    return _CART_FROM_M @ cov_m @ _CART_FROM_M.T


# ---------------------------------------------------------------------------
# dyadic fields


def simulate_dyadic(
    mu: float,
    s: float,
    a_corr: VectorSpectralPair,
    b_corr: VectorSpectralPair,
    plan: SimulationPlan,
) -> FieldRealization:
    """Shear-like 2x2 tensor field mu delta_ij + s a_i(x) b_j(x).

    `a_corr` and `b_corr` describe the two independent Gaussian vector
    factors; each is simulated in three dimensions and restricted to
    its in-plane components. Components are flattened row-major
    (C11, C12, C21, C22). The mean tensor is mu times the identity.
    """
    if plan.kind != "dyadic":
        raise ValueError("plan kind must be 'dyadic'")
    plan_a = replace(plan, kind="vector", spectral=a_corr)
    plan_b = replace(plan, kind="vector", spectral=b_corr)
    a = _simulate_vector_tagged(plan_a, "dyadic/a").values
    b = _simulate_vector_tagged(plan_b, "dyadic/b").values
    out = np.empty((plan.realizations, len(plan.points), 4))
    out[..., 0] = mu + s * a[..., 0] * b[..., 0]
    out[..., 1] = s * a[..., 0] * b[..., 1]
    out[..., 2] = s * a[..., 1] * b[..., 0]
    out[..., 3] = mu + s * a[..., 1] * b[..., 1]
    return FieldRealization(
        plan=plan, values=out, component_names=("C11", "C12", "C21", "C22")
    )


# ---------------------------------------------------------------------------
# empirical estimators


@dataclass(frozen=True)
class CorrelationEstimate:
    """Empirical cross-moments and jackknife standard errors.

    `moments[k, c, d]` estimates the covariance of component c at the
    first point of pair k with component d at the second point.
    """

    pairs: tuple
    moments: np.ndarray
    standard_errors: np.ndarray


def _cross_moment(x: np.ndarray, y: np.ndarray):
    # exact sums make the estimate invariant under realization
    # reordering; the jackknife needs three realizations to resolve a
    # spread, so two report an infinite standard error
    r = x.shape[0]
    sx = math.fsum(x)
    sy = math.fsum(y)
    sxy = math.fsum(x * y)
    est = (sxy - sx * sy / r) / (r - 1)
    if r < 3:
        return est, math.inf
    sx_i = sx - x
    sy_i = sy - y
    sxy_i = sxy - x * y
    theta = (sxy_i - sx_i * sy_i / (r - 1)) / (r - 2)
    tbar = math.fsum(theta) / r
    var = math.fsum((theta - tbar) ** 2) * (r - 1) / r
    return est, math.sqrt(max(var, 0.0))


def estimate_correlation(
    realization: FieldRealization, pairs: Sequence
) -> CorrelationEstimate:
    """Unbiased two-point moment estimates over the realization axis."""
    vals = realization.values
    nreal, npts, ncomp = vals.shape
    if nreal < 2:
        raise ValueError("need at least two realizations")
    cleaned = []
    for p, q in pairs:
        p, q = int(p), int(q)
        if not (0 <= p < npts and 0 <= q < npts):
            raise ValueError(f"point pair ({p}, {q}) out of range for {npts} points")
        cleaned.append((p, q))
    if not cleaned:
        raise ValueError("need at least one point pair")
    moments = np.empty((len(cleaned), ncomp, ncomp))
    errors = np.empty_like(moments)
    for k, (p, q) in enumerate(cleaned):
        for c in range(ncomp):
            x = vals[:, p, c]
            for d in range(ncomp):
                moments[k, c, d], errors[k, c, d] = _cross_moment(x, vals[:, q, d])
    return CorrelationEstimate(
        pairs=tuple(cleaned), moments=moments, standard_errors=errors
    )
