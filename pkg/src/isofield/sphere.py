"""Isotropic random fields on the sphere: CMB Stokes parameters.

Synthesis of temperature and polarization maps (Theta, Q, U, V) from
per-degree covariance matrices through harmonic coefficients of the
electric/magnetic decomposition, the quadrature analysis inverse on
Gauss-Legendre grids, the spin raising/lowering route to the scalar
electric and magnetic fields, the parity action, and the exact
conversion to the expansion over real-valued ordinary and spin-2
harmonics.

Coefficient components are ordered (Theta, E, B, V) everywhere; Stokes
map columns are ordered (Theta, Q, U, V). The complex coefficients
a^X_{ell,m} of the four spin-0 components all satisfy the reality
constraint a^X_{ell,-m} = (-1)^m conj(a^X_{ell,m}), and the spin
(+/-)2 expansion coefficients of Q +/- iU are the combinations
a^(+/-2) = a^E +/- i a^B.

Synthesis draws every degree from its own seeded substream, so the
result is independent of how degrees are split across workers; the
functions here are cheap enough to run serially.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalCheckError
from ._rng import standard_normals, substream
from .special_fn import (
    QuadratureRule,
    SphericalPoint,
    eth_on_basis,
    harmonic_row_index,
    spin_harmonic_table,
)

__all__ = [
    "COMPONENTS",
    "STOKES_COLUMNS",
    "DEFAULT_ELL_MIN",
    "AngularPowerSpectrum",
    "AlmSet",
    "StokesMap",
    "RealAlmSet",
    "CellEstimate",
    "synthesize_alm",
    "synthesize_ensemble",
    "alm_to_stokes",
    "stokes_to_alm",
    "spin_pair_from_alm",
    "eb_via_eth",
    "eth_squared_weight",
    "estimate_cell",
    "parity_transform",
    "real_basis_expansion",
    "alm_from_real_basis",
]

COMPONENTS = ("Theta", "E", "B", "V")
STOKES_COLUMNS = ("Theta", "Q", "U", "V")

# temperature and the two polarization potentials start at the
# quadrupole; circular polarization may carry a monopole
DEFAULT_ELL_MIN = (2, 2, 2, 0)

# pairs whose cross-spectra vanish when mixed-parity correlations are
# excluded: Theta-B, E-B, B-V
_PARITY_ODD_PAIRS = ((0, 2), (1, 2), (2, 3))

_PSD_FLOOR = -1e-9


def _component_index(name):
    try:
        return COMPONENTS.index(name)
    except ValueError:
        raise ValueError(
            "unknown component %r; expected one of %s" % (name, (COMPONENTS,))
        ) from None


@dataclass(frozen=True)
class AngularPowerSpectrum:
    """Per-degree 4x4 covariance matrices over (Theta, E, B, V).

    `matrices` has shape (ell_max + 1, 4, 4); entry ell is the
    covariance of the degree-ell coefficient 4-vector. Each matrix must
    be symmetric and positive semidefinite, rows/columns of component c
    must vanish below ell_min[c], and with enforce_parity=True the
    mixed-parity cross entries (Theta-B, E-B, B-V) must vanish at every
    degree.
    """

    matrices: np.ndarray
    ell_min: tuple = DEFAULT_ELL_MIN
    enforce_parity: bool = True

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1:] != (4, 4) or mats.shape[0] < 1:
            raise ValueError("matrices must have shape (ell_max + 1, 4, 4)")
        if not np.all(np.isfinite(mats)):
            raise ValueError("spectrum matrices must be finite")
        ell_min = tuple(int(v) for v in self.ell_min)
        if len(ell_min) != 4 or any(v < 0 for v in ell_min):
            raise ValueError("ell_min must be four integers >= 0")
        scale = max(1.0, float(np.abs(mats).max()))
        if np.abs(mats - mats.transpose(0, 2, 1)).max() > 1e-12 * scale:
            raise ValueError("spectrum matrices must be symmetric")
        mats = 0.5 * (mats + mats.transpose(0, 2, 1))
        for comp, lo in enumerate(ell_min):
            bad = np.abs(mats[:lo, comp, :]).max() if lo > 0 else 0.0
            if bad > 0.0:
                raise ValueError(
                    "component %s has power below its minimum degree %d"
                    % (COMPONENTS[comp], lo)
                )
        if self.enforce_parity:
            for i, j in _PARITY_ODD_PAIRS:
                if np.abs(mats[:, i, j]).max() > 1e-12 * scale:
                    raise ValueError(
                        "mixed-parity cross-spectrum %s-%s must vanish"
                        % (COMPONENTS[i], COMPONENTS[j])
                    )
        eigs = np.linalg.eigvalsh(mats)
        if float(eigs.min()) < _PSD_FLOOR * scale:
            raise NumericalCheckError(
                "every spectrum matrix must be positive semidefinite "
                "(min eigenvalue %.3e)" % float(eigs.min())
            )
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "ell_min", ell_min)

    @property
    def ell_max(self):
        return self.matrices.shape[0] - 1

    def matrix(self, ell):
        if not 0 <= ell <= self.ell_max:
            raise ValueError("degree out of range")
        return self.matrices[ell]

    def scaled(self, factor):
        """Same spectrum with every matrix multiplied by `factor`."""
        if factor < 0:
            raise ValueError("scale factor must be >= 0")
        return AngularPowerSpectrum(
            matrices=self.matrices * float(factor),
            ell_min=self.ell_min,
            enforce_parity=self.enforce_parity,
        )

    @classmethod
    def power_law(cls, ell_max, amplitudes, alpha, ell_min=DEFAULT_ELL_MIN):
        """Diagonal spectrum C_ell[c, c] = A_c * ell**(-alpha).

        Degrees below each component's minimum carry no power. When a
        component's minimum degree is 0 its monopole entry carries the
        bare amplitude, since the power law itself is singular there.
        """
        amps = tuple(float(a) for a in amplitudes)
        if len(amps) != 4 or any(a < 0 for a in amps):
            raise ValueError("amplitudes must be four values >= 0")
        if ell_max < 0:
            raise ValueError("ell_max must be >= 0")
        mats = np.zeros((ell_max + 1, 4, 4))
        for comp, amp in enumerate(amps):
            for ell in range(int(ell_min[comp]), ell_max + 1):
                mats[ell, comp, comp] = amp if ell == 0 else amp * float(ell) ** -alpha
        return cls(matrices=mats, ell_min=ell_min)


@lru_cache(maxsize=None)
def _reality_permutation(ell_max):
    """Row permutation m -> -m and the signs (-1)^m, both read-only."""
    nlm = (ell_max + 1) ** 2
    perm = np.empty(nlm, dtype=int)
    signs = np.empty(nlm)
    for ell in range(ell_max + 1):
        for m in range(-ell, ell + 1):
            perm[harmonic_row_index(ell, m)] = harmonic_row_index(ell, -m)
            signs[harmonic_row_index(ell, m)] = (-1.0) ** m
    perm.setflags(write=False)
    signs.setflags(write=False)
    return perm, signs


@lru_cache(maxsize=None)
def _degree_of_row(ell_max):
    out = np.empty((ell_max + 1) ** 2, dtype=int)
    for ell in range(ell_max + 1):
        out[ell * ell:(ell + 1) ** 2] = ell
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AlmSet:
    """Complex harmonic coefficients for the four spin-0 components.

    `coefficients` has shape (4, (ell_max + 1)^2), rows ordered by
    COMPONENTS and columns by harmonic_row_index. Construction checks
    the reality constraint a_{ell,-m} = (-1)^m conj(a_{ell,m}).
    """

    ell_max: int
    coefficients: np.ndarray

    def __post_init__(self):
        if self.ell_max < 0:
            raise ValueError("ell_max must be >= 0")
        coeff = np.array(self.coefficients, dtype=complex)
        nlm = (self.ell_max + 1) ** 2
        if coeff.shape != (4, nlm):
            raise ValueError("coefficients must have shape (4, (ell_max + 1)^2)")
        if not np.all(np.isfinite(coeff)):
            raise ValueError("coefficients must be finite")
        perm, signs = _reality_permutation(self.ell_max)
        tol = 1e-9 * max(1.0, float(np.abs(coeff).max()))
        if np.abs(coeff[:, perm] * signs - coeff.conj()).max() > tol:
            raise ValueError(
                "coefficients break the reality constraint "
                "a_{ell,-m} = (-1)^m conj(a_{ell,m})"
            )
        coeff.setflags(write=False)
        object.__setattr__(self, "coefficients", coeff)

    def component(self, name):
        """Read-only coefficient row of one component."""
        return self.coefficients[_component_index(name)]

    def get(self, name, ell, m):
        if not (0 <= ell <= self.ell_max and abs(m) <= ell):
            raise ValueError("index out of range")
        return complex(self.coefficients[_component_index(name), harmonic_row_index(ell, m)])

    @classmethod
    def zeros(cls, ell_max):
        return cls(ell_max=ell_max, coefficients=np.zeros((4, (ell_max + 1) ** 2), complex))

    @classmethod
    def from_entries(cls, ell_max, entries):
        """Build a set from {(component, ell, m): value}.

        The reality partner at (ell, -m) is filled automatically unless
        the caller supplies it explicitly.
        """
        coeff = np.zeros((4, (ell_max + 1) ** 2), complex)
        for (name, ell, m), value in entries.items():
            if not (0 <= ell <= ell_max and abs(m) <= ell):
                raise ValueError("entry (%s, %d, %d) out of range" % (name, ell, m))
            coeff[_component_index(name), harmonic_row_index(ell, m)] = value
        for (name, ell, m), value in entries.items():
            if m == 0:
                continue
            partner = (name, ell, -m)
            if partner not in entries:
                coeff[_component_index(name), harmonic_row_index(ell, -m)] = (
                    (-1.0) ** m * np.conj(value)
                )
        return cls(ell_max=ell_max, coefficients=coeff)


@dataclass(frozen=True)
class StokesMap:
    """Real Stokes parameter values on a fixed point set.

    `values` has shape (npoints, 4) with columns STOKES_COLUMNS.
    """

    points: tuple
    values: np.ndarray

    def __post_init__(self):
        points = tuple(self.points)
        if not points or not all(isinstance(p, SphericalPoint) for p in points):
            raise ValueError("points must be a nonempty sequence of SphericalPoint")
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(points), 4):
            raise ValueError("values must have shape (npoints, 4)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("Stokes values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", vals)

    def angle_arrays(self):
        thetas = np.array([p.theta for p in self.points])
        phis = np.array([p.phi for p in self.points])
        return thetas, phis

    def column(self, name):
        try:
            col = STOKES_COLUMNS.index(name)
        except ValueError:
            raise ValueError(
                "unknown Stokes column %r; expected one of %s" % (name, (STOKES_COLUMNS,))
            ) from None
        return self.values[:, col]


def _matrix_sqrt(matrix):
    """Symmetric square root with a small negative eigenvalue floor."""
    eigvals, eigvecs = np.linalg.eigh(matrix)
    scale = max(1.0, float(np.abs(eigvals).max()))
    if float(eigvals.min()) < _PSD_FLOOR * scale:
        raise NumericalCheckError(
            "per-degree covariance matrix is not positive semidefinite "
            "(min eigenvalue %.3e)" % float(eigvals.min())
        )
    return (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T


def synthesize_alm(spec, seed, realization=0):
    """Draw one coefficient set with E[a a^dagger] = C_ell.

    Per degree and order m > 0 the coefficient 4-vector is complex
    Gaussian with independent real and imaginary parts of covariance
    C_ell / 2 each; at m = 0 it is real with covariance C_ell; at m < 0
    it is fixed by the reality constraint. Coefficients are
    uncorrelated across degrees and orders. Each degree consumes its
    own seeded substream, so any parallel split over degrees reproduces
    the serial result, and scaling C_ell rescales the same draw.
    """
    ell_max = spec.ell_max
    coeff = np.zeros((4, (ell_max + 1) ** 2), dtype=complex)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for ell in range(ell_max + 1):
        matrix = spec.matrix(ell)
        if not matrix.any():
            continue
        factor = _matrix_sqrt(matrix)
        gen = substream(seed, realization, "cmb/ell%d" % ell)
        draws = standard_normals(gen, (2 * ell + 1, 4))
        coeff[:, harmonic_row_index(ell, 0)] = factor @ draws[0]
        for m in range(1, ell + 1):
            value = factor @ (draws[2 * m - 1] + 1j * draws[2 * m]) * inv_sqrt2
            coeff[:, harmonic_row_index(ell, m)] = value
            coeff[:, harmonic_row_index(ell, -m)] = (-1.0) ** m * value.conj()
    return AlmSet(ell_max=ell_max, coefficients=coeff)


def synthesize_ensemble(spec, seed, realizations):
    """Independent coefficient sets indexed 0..realizations-1."""
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    return [synthesize_alm(spec, seed, realization=r) for r in range(realizations)]


def spin_pair_from_alm(alm):
    """Spin +2 and -2 expansion coefficients of Q + iU and Q - iU."""
    a_e = alm.component("E")
    a_b = alm.component("B")
    return a_e + 1j * a_b, a_e - 1j * a_b


def _grid_angles(grid):
    if isinstance(grid, QuadratureRule):
        thetas, phis = grid.grid_angles()
        points = tuple(grid.nodes)
        return thetas, phis, points
    points = tuple(grid)
    if not points or not all(isinstance(p, SphericalPoint) for p in points):
        raise ValueError("grid must be a QuadratureRule or SphericalPoint sequence")
    thetas = np.array([p.theta for p in points])
    phis = np.array([p.phi for p in points])
    return thetas, phis, points


def alm_to_stokes(alm, grid):
    """Evaluate the four Stokes maps at the grid points.

    Theta and V are spin-0 syntheses; Q +/- iU are the spin +/-2
    syntheses of a^E +/- i a^B. The imaginary residue of each map must
    stay below 1e-10 relative to its amplitude (guaranteed by the
    reality constraint up to rounding) and is then dropped.
    """
    thetas, phis, points = _grid_angles(grid)
    table0 = spin_harmonic_table(0, alm.ell_max, thetas, phis)
    theta_map = alm.component("Theta") @ table0
    v_map = alm.component("V") @ table0
    plus, minus = spin_pair_from_alm(alm)
    p_plus = plus @ spin_harmonic_table(2, alm.ell_max, thetas, phis)
    p_minus = minus @ spin_harmonic_table(-2, alm.ell_max, thetas, phis)
    q_map = 0.5 * (p_plus + p_minus)
    u_map = -0.5j * (p_plus - p_minus)
    values = np.empty((len(points), 4))
    for col, cmap in enumerate((theta_map, q_map, u_map, v_map)):
        residue = float(np.abs(cmap.imag).max()) if len(points) else 0.0
        if residue > 1e-10 * max(1.0, float(np.abs(cmap).max())):
            raise NumericalCheckError(
                "synthesized %s map has imaginary residue %.3e"
                % (STOKES_COLUMNS[col], residue)
            )
        values[:, col] = cmap.real
    return StokesMap(points=points, values=values)


def stokes_to_alm(smap, ell_max, rule):
    """Quadrature analysis of a Stokes map back to coefficients.

    The map must be sampled on the rule's grid in node order and the
    rule must integrate products of two degree-ell_max harmonics
    exactly (rule degree >= 2 ell_max). Band-limited maps are recovered
    exactly up to rounding; content above the band aliases into the
    returned coefficients without raising.
    """
    if not isinstance(rule, QuadratureRule):
        raise ValueError("rule must be a QuadratureRule")
    if rule.degree < 2 * ell_max:
        raise ValueError(
            "quadrature of degree %d cannot analyze band %d" % (rule.degree, ell_max)
        )
    thetas, phis = smap.angle_arrays()
    rule_thetas, rule_phis = rule.grid_angles()
    if len(smap.points) != rule.npoints or (
        np.abs(thetas - rule_thetas).max() > 1e-12
        or np.abs(phis - rule_phis).max() > 1e-12
    ):
        raise ValueError("map points do not match the quadrature grid")
    weights = rule.weights
    table0 = spin_harmonic_table(0, ell_max, thetas, phis)
    a_theta = table0.conj() @ (weights * smap.values[:, 0])
    a_v = table0.conj() @ (weights * smap.values[:, 3])
    p_plus = smap.values[:, 1] + 1j * smap.values[:, 2]
    p_minus = smap.values[:, 1] - 1j * smap.values[:, 2]
    a_plus = spin_harmonic_table(2, ell_max, thetas, phis).conj() @ (weights * p_plus)
    a_minus = spin_harmonic_table(-2, ell_max, thetas, phis).conj() @ (weights * p_minus)
    a_e = 0.5 * (a_plus + a_minus)
    a_b = -0.5j * (a_plus - a_minus)
    return AlmSet(ell_max=ell_max, coefficients=np.stack([a_theta, a_e, a_b, a_v]))


def eth_squared_weight(ell):
    """sqrt((ell + 2)! / (ell - 2)!), zero below the quadrupole."""
    if ell < 2:
        return 0.0
    return math.sqrt((ell + 2) * (ell + 1) * ell * (ell - 1.0))


def eb_via_eth(spin_plus, spin_minus, ell_max):
    """Scalar electric/magnetic fields from the spin +/-2 coefficients.

    Applies the spin-lowering ladder twice to the spin +2 expansion and
    the spin-raising ladder twice to the spin -2 expansion, then splits
    into even and odd combinations. The outputs are coefficients of
    spin-0 fields equal to sqrt((ell + 2)!/(ell - 2)!) times a^E and
    a^B.
    """
    spin_plus = np.asarray(spin_plus, dtype=complex)
    spin_minus = np.asarray(spin_minus, dtype=complex)
    nlm = (ell_max + 1) ** 2
    if spin_plus.shape != (nlm,) or spin_minus.shape != (nlm,):
        raise ValueError("coefficient arrays must have length (ell_max + 1)^2")
    lowered = np.empty(nlm)
    raised = np.empty(nlm)
    for ell in range(ell_max + 1):
        rows = slice(ell * ell, (ell + 1) ** 2)
        lowered[rows] = (
            eth_on_basis(2, ell, "lower").value * eth_on_basis(1, ell, "lower").value
        )
        raised[rows] = (
            eth_on_basis(-2, ell, "raise").value * eth_on_basis(-1, ell, "raise").value
        )
    e_field = 0.5 * (lowered * spin_plus + raised * spin_minus)
    b_field = -0.5j * (lowered * spin_plus - raised * spin_minus)
    return e_field, b_field


@dataclass(frozen=True)
class CellEstimate:
    """Per-degree covariance estimates with standard errors.

    `means` and `standard_errors` have shape (ell_max + 1, 4, 4); the
    errors are infinite when fewer than two realizations were given.
    """

    means: np.ndarray
    standard_errors: np.ndarray
    realizations: int

    @property
    def ell_max(self):
        return self.means.shape[0] - 1


def _single_cell(alm):
    ell_max = alm.ell_max
    out = np.empty((ell_max + 1, 4, 4))
    for ell in range(ell_max + 1):
        block = alm.coefficients[:, ell * ell:(ell + 1) ** 2]
        cell = (block @ block.conj().T).real / (2 * ell + 1)
        out[ell] = 0.5 * (cell + cell.T)
    return out


def estimate_cell(ensemble, ell_max=None, rule=None):
    """Unbiased spectrum estimate (2 ell + 1)^{-1} sum_m a a^dagger.

    `ensemble` is an AlmSet, a sequence of AlmSet, or a sequence of
    StokesMap (then `ell_max` and `rule` drive the analysis step).
    Entries of the returned means average the per-realization
    estimates; standard errors are per-entry sample errors of that
    mean.
    """
    if isinstance(ensemble, AlmSet):
        alms = [ensemble]
    else:
        alms = list(ensemble)
        if not alms:
            raise ValueError("ensemble must contain at least one realization")
        if isinstance(alms[0], StokesMap):
            if ell_max is None or rule is None:
                raise ValueError("map ensembles need ell_max and rule")
            alms = [stokes_to_alm(m, ell_max, rule) for m in alms]
    if not all(isinstance(a, AlmSet) for a in alms):
        raise ValueError("ensemble must consist of AlmSet or StokesMap values")
    if len({a.ell_max for a in alms}) != 1:
        raise ValueError("ensemble members must share ell_max")
    cells = np.stack([_single_cell(a) for a in alms])
    count = cells.shape[0]
    means = cells.mean(axis=0)
    if count < 2:
        errors = np.full_like(means, math.inf)
    else:
        errors = cells.std(axis=0, ddof=1) / math.sqrt(count)
    return CellEstimate(means=means, standard_errors=errors, realizations=count)


def parity_transform(alm):
    """Coefficients of the point-reflected field.

    Theta, E and V pick up (-1)^ell; B picks up (-1)^(ell+1). Applying
    the transform twice is the identity, and the Stokes maps of the
    result are the antipodal maps (Theta, Q, U, V)(-n) of the input.
    """
    signs = (-1.0) ** _degree_of_row(alm.ell_max)
    coeff = alm.coefficients * signs
    coeff[2] = -coeff[2]
    return AlmSet(ell_max=alm.ell_max, coefficients=coeff)


@dataclass(frozen=True)
class RealAlmSet:
    """Coefficients over real ordinary and real spin-2 harmonics.

    `theta` and `v` expand Theta and V over the real spherical
    harmonics; `spin2` and `spin_minus2` expand the (Q, U) pair over
    the two R^2-valued real spin-weighted harmonics. All four arrays
    are real with length (ell_max + 1)^2, ordered by
    harmonic_row_index.
    """

    ell_max: int
    theta: np.ndarray
    spin2: np.ndarray
    spin_minus2: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        nlm = (self.ell_max + 1) ** 2
        for field in ("theta", "spin2", "spin_minus2", "v"):
            arr = np.array(getattr(self, field), dtype=float)
            if arr.shape != (nlm,):
                raise ValueError("%s must have shape ((ell_max + 1)^2,)" % field)
            if not np.all(np.isfinite(arr)):
                raise ValueError("%s must be finite" % field)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def _real_from_complex_spin0(row, ell_max):
    perm, _ = _reality_permutation(ell_max)
    out = np.empty(row.shape[0])
    sqrt2 = math.sqrt(2.0)
    for ell in range(ell_max + 1):
        out[harmonic_row_index(ell, 0)] = row[harmonic_row_index(ell, 0)].real
        for m in range(1, ell + 1):
            value = row[harmonic_row_index(ell, m)]
            out[harmonic_row_index(ell, m)] = sqrt2 * value.real
            out[harmonic_row_index(ell, -m)] = sqrt2 * (-1.0) ** m * value.imag
    return out


def _complex_from_real_spin0(row, ell_max):
    out = np.zeros(row.shape[0], dtype=complex)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for ell in range(ell_max + 1):
        out[harmonic_row_index(ell, 0)] = row[harmonic_row_index(ell, 0)]
        for m in range(1, ell + 1):
            re = row[harmonic_row_index(ell, m)] * inv_sqrt2
            im = (-1.0) ** m * row[harmonic_row_index(ell, -m)] * inv_sqrt2
            out[harmonic_row_index(ell, m)] = re + 1j * im
            out[harmonic_row_index(ell, -m)] = (-1.0) ** m * (re - 1j * im)
    return out


def real_basis_expansion(alm):
    """Exact conversion to the real-basis coefficient sets.

    For the spin-0 components the cosine-branch coefficient is
    sqrt(2) Re a_{ell,m} and the sine-branch one is
    sqrt(2) (-1)^m Im a_{ell,m}. For the polarization pair the two real
    spin-2 coefficient families are Re and Im of a^(2)_{ell,m} / 2 at
    every order, since each R^2-valued basis vector has squared norm 4.
    """
    plus, _ = spin_pair_from_alm(alm)
    return RealAlmSet(
        ell_max=alm.ell_max,
        theta=_real_from_complex_spin0(alm.component("Theta"), alm.ell_max),
        spin2=0.5 * plus.real,
        spin_minus2=0.5 * plus.imag,
        v=_real_from_complex_spin0(alm.component("V"), alm.ell_max),
    )


def alm_from_real_basis(rset):
    """Inverse of real_basis_expansion; exact linear bijection."""
    ell_max = rset.ell_max
    plus = 2.0 * (rset.spin2 + 1j * rset.spin_minus2)
    perm, signs = _reality_permutation(ell_max)
    minus = signs * plus[perm].conj()
    coefficients = np.stack(
        [
            _complex_from_real_spin0(rset.theta, ell_max),
            0.5 * (plus + minus),
            -0.5j * (plus - minus),
            _complex_from_real_spin0(rset.v, ell_max),
        ]
    )
    return AlmSet(ell_max=ell_max, coefficients=coefficients)
