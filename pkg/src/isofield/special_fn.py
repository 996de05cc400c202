"""Special functions for spectral expansions of isotropic random fields.

Spherical Bessel functions, spherical harmonics (real, complex and
spin-weighted), Wigner rotation-matrix entries, the spin raising and
lowering ladder, plane-wave partial sums, and Gauss-Legendre quadrature
on the sphere.

Conventions
-----------
* Harmonics are orthonormal for the surface measure sin(theta) dtheta
  dphi (total mass 4 pi) and carry the Condon-Shortley phase, so
  Y_{1,0} = sqrt(3/4pi) cos(theta) and
  Y_{1,1} = -sqrt(3/8pi) sin(theta) e^{i phi}.
* Real harmonics are the unitary cosine / sine recombination
  S^m = sqrt(2) Re Y_{ell,m} for m > 0, S^0 = Y_{ell,0}, and
  S^{-mu} = -sqrt(2) (-1)^mu Im Y_{ell,mu} for mu > 0.
* Spin-weighted harmonics follow the rotation-matrix definition
  sY_{ell,m}(theta, phi)
      = (-1)^s sqrt((2 ell + 1)/4 pi) d^ell_{m,-s}(theta) e^{i m phi},
  which reduces to Y_{ell,m} at s = 0 and satisfies
  sY_{ell,m}(pi - theta, phi + pi) = (-1)^ell (-s)Y_{ell,m}(theta, phi).
* The stereographic chart used by SphericalPoint is
  zeta = cot(theta/2) e^{i phi}; the north pole is the point at
  infinity and the south pole is zeta = 0.

Associated Legendre values are generated by the standard fully
normalized three-term recurrence, which is upward stable. Spin-weighted
values go through Jacobi polynomials; the two routes coincide at s = 0
and that agreement is exercised by the test-suite rather than assumed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import eval_jacobi, roots_legendre

__all__ = [
    "HarmonicIndex",
    "SphericalPoint",
    "QuadratureRule",
    "EthFactor",
    "spherical_bessel",
    "spherical_bessel_all",
    "real_harmonic",
    "complex_harmonic",
    "spin_harmonic",
    "wigner_d",
    "wigner_D_m0",
    "eth_on_basis",
    "rayleigh_partial_sum",
    "quadrature_rule",
    "real_harmonic_table",
    "spin_harmonic_table",
    "legendre_poly_table",
]

FOUR_PI = 4.0 * math.pi

# ---------------------------------------------------------------------------
# basic types


@dataclass(frozen=True)
class HarmonicIndex:
    """Index (ell, m, spin) of one (spin-weighted) spherical harmonic.

    Requires ell >= 0 and |m| <= ell. |spin| > ell is allowed and labels
    an identically zero harmonic.
    """

    ell: int
    m: int
    spin: int = 0

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0, got %d" % self.ell)
        if abs(self.m) > self.ell:
            raise ValueError("|m| must be <= ell, got m=%d ell=%d" % (self.m, self.ell))


@dataclass(frozen=True)
class SphericalPoint:
    """Point on S^2 with colatitude theta in [0, pi] and longitude phi.

    The `zeta` property gives the stereographic coordinate
    cot(theta/2) e^{i phi}; it is None at the north pole (the point at
    infinity of the chart). `from_zeta` inverts the chart; the two maps
    are mutually inverse away from the poles.
    """

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError("theta must lie in [0, pi], got %r" % (self.theta,))
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    @property
    def zeta(self):
        if self.theta == 0.0:
            return None
        cot_half = math.cos(self.theta / 2.0) / math.sin(self.theta / 2.0)
        return cot_half * cmath.exp(1j * self.phi)

    @classmethod
    def from_zeta(cls, zeta):
        if zeta is None:
            return cls(0.0, 0.0)
        zeta = complex(zeta)
        if cmath.isinf(zeta):
            return cls(0.0, 0.0)
        rho = abs(zeta)
        theta = 2.0 * math.atan2(1.0, rho)
        phi = math.atan2(zeta.imag, zeta.real) % (2.0 * math.pi) if rho > 0.0 else 0.0
        return cls(theta, phi)

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )


@dataclass(frozen=True)
class QuadratureRule:
    """Product Gauss-Legendre x trapezoid rule on the sphere.

    Exactly integrates products of spherical harmonics with combined
    degree <= `degree`. Nodes are theta-major: the flattened point index
    is i_theta * len(phis) + i_phi. Weights are positive and sum to
    4 pi.
    """

    thetas: np.ndarray
    phis: np.ndarray
    theta_weights: np.ndarray
    phi_weight: float
    degree: int

    @property
    def npoints(self) -> int:
        return len(self.thetas) * len(self.phis)

    @property
    def weights(self) -> np.ndarray:
        return np.repeat(self.theta_weights * self.phi_weight, len(self.phis))

    @property
    def nodes(self):
        return [
            SphericalPoint(float(t), float(p)) for t in self.thetas for p in self.phis
        ]

    def grid_angles(self):
        """Flattened (theta, phi) arrays in node order."""
        th = np.repeat(self.thetas, len(self.phis))
        ph = np.tile(self.phis, len(self.thetas))
        return th, ph


def quadrature_rule(ell_max: int) -> QuadratureRule:
    """Sphere quadrature exact for harmonic products up to 2 * ell_max.

    Gauss-Legendre with ell_max + 1 colatitude nodes handles the
    polynomial part (degree 2 ell_max + 1 in cos theta) and a uniform
    grid of 2 ell_max + 1 longitudes handles Fourier modes up to
    |m| = 2 ell_max exactly.
    """
    if ell_max < 0:
        raise ValueError("ell_max must be >= 0")
    x, w = roots_legendre(ell_max + 1)
    order = np.argsort(-x)  # theta ascending
    thetas = np.arccos(x[order])
    theta_weights = w[order]
    n_phi = 2 * ell_max + 1
    phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
    return QuadratureRule(
        thetas=thetas,
        phis=phis,
        theta_weights=theta_weights,
        phi_weight=2.0 * math.pi / n_phi,
        degree=2 * ell_max,
    )


# ---------------------------------------------------------------------------
# spherical Bessel functions


def _bessel_series(ell: int, x: float) -> float:
    # j_ell(x) = sum_k (-1)^k x^(2k+ell) / (2^k k! (2 ell + 2k + 1)!!)
    lead = 1.0
    for n in range(1, ell + 1):
        lead *= x / (2 * n + 1)
    term = lead
    total = lead
    for k in range(1, 80):
        term *= -(x * x) / (2.0 * k * (2.0 * (ell + k) + 1.0))
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return total


def spherical_bessel(ell: int, x: float) -> float:
    """Spherical Bessel function j_ell(x) for ell >= 0 and x >= 0.

    Closed forms for ell <= 1; upward recurrence above the turning point
    x >= ell where it is stable; a truncated power series for small
    arguments; downward (Miller) recurrence normalized against j_0 or
    j_1 in between. Relative accuracy is about 1e-13 for x <= 100 and
    ell <= 64; values below the normal floating range underflow to 0.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    if x < 0.0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return 1.0 if ell == 0 else 0.0
    if ell == 0:
        return math.sin(x) / x
    if ell == 1:
        if x < 0.5:
            # the closed form cancels catastrophically as x -> 0
            return _bessel_series(1, x)
        return math.sin(x) / (x * x) - math.cos(x) / x
    if x >= ell:
        jm = math.sin(x) / x
        jc = math.sin(x) / (x * x) - math.cos(x) / x
        for n in range(1, ell):
            jm, jc = jc, (2 * n + 1) / x * jc - jm
        return jc
    if x * x < 0.1 * (2 * ell + 3):
        return _bessel_series(ell, x)
    return float(spherical_bessel_all(ell, np.array([x]))[ell, 0])


def spherical_bessel_all(ell_max: int, x) -> np.ndarray:
    """j_ell(x_i) for every ell <= ell_max, shape (ell_max + 1, len(x)).

    One downward Miller sweep per call, vectorized over the argument
    axis, with exact power-of-two rescaling to dodge overflow. The
    start order sits 50 above both ell_max and max(x), which puts the
    seed deep in the decay zone for every column.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0):
        raise ValueError("arguments must be >= 0")
    n = x.shape[0]
    out = np.zeros((ell_max + 1, n))
    zero = x == 0.0
    out[0, zero] = 1.0
    pos = ~zero
    if not np.any(pos):
        return out
    xp = x[pos]
    npos = xp.shape[0]

    if ell_max == 0:
        out[0, pos] = np.sin(xp) / xp
        return out

    start = max(ell_max, int(math.ceil(np.max(xp)))) + 50
    big = math.ldexp(1.0, 512)  # 2^512
    small = math.ldexp(1.0, -512)

    jp = np.zeros(npos)  # trial j_{n+1}
    jc = np.ones(npos)  # trial j_n, arbitrary seed
    rescales = np.zeros(npos, dtype=np.int64)
    trial = np.zeros((ell_max + 1, npos))
    trial_rescales = np.zeros((ell_max + 1, npos), dtype=np.int64)

    for nn in range(start, 0, -1):
        jp, jc = jc, (2 * nn + 1) / xp * jc - jp
        mask = np.abs(jc) > big
        if np.any(mask):
            jc[mask] *= small
            jp[mask] *= small
            rescales[mask] += 1
        if nn - 1 <= ell_max:
            trial[nn - 1] = jc
            trial_rescales[nn - 1] = rescales

    j0_true = np.sin(xp) / xp
    j1_true = np.sin(xp) / (xp * xp) - np.cos(xp) / xp
    use_j1 = np.abs(j1_true) > np.abs(j0_true)
    calib_true = np.where(use_j1, j1_true, j0_true)
    calib_trial = np.where(use_j1, jp, jc)  # jc is trial j_0, jp trial j_1

    ratio = calib_true / calib_trial
    vals = trial * ratio[None, :]
    shift = -512 * (rescales[None, :] - trial_rescales)
    out[:, pos] = np.ldexp(vals, shift.astype(np.int32))
    return out


# ---------------------------------------------------------------------------
# associated Legendre engine (theta factors of the scalar harmonics)


def _legendre_block(ell_max: int, m: int, x: np.ndarray) -> np.ndarray:
    """Normalized associated Legendre values for fixed order m >= 0.

    Returns rows ell = m .. ell_max of the theta factor of Y_{ell,m},
    Condon-Shortley phase included, so that
    Y_{ell,m}(theta, phi) = block[ell - m] * exp(i m phi) at
    x = cos(theta).
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.full_like(x, 1.0 / math.sqrt(FOUR_PI))
    for k in range(1, m + 1):
        pmm = pmm * (-math.sqrt((2 * k + 1) / (2.0 * k))) * s
    rows = [pmm]
    if ell_max > m:
        rows.append(math.sqrt(2 * m + 3.0) * x * pmm)
    for ell in range(m + 2, ell_max + 1):
        a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
        b = math.sqrt(
            ((2.0 * ell + 1.0) * (ell - 1 - m) * (ell - 1 + m))
            / ((2.0 * ell - 3.0) * (ell * ell - m * m))
        )
        rows.append(a * x * rows[-1] - b * rows[-2])
    return np.stack(rows)


def _legendre_theta(ell: int, m: int, theta: float) -> float:
    block = _legendre_block(ell, m, np.array([math.cos(theta)]))
    return float(block[ell - m, 0])


def complex_harmonic(idx: HarmonicIndex, p: SphericalPoint) -> complex:
    """Complex spherical harmonic Y_{ell,m}(theta, phi), spin 0 only.

    Satisfies Y_{ell,-m} = (-1)^m conj(Y_{ell,m}).
    """
    if idx.spin != 0:
        raise ValueError("complex_harmonic is defined for spin 0 indices")
    mu = abs(idx.m)
    val = _legendre_theta(idx.ell, mu, p.theta) * cmath.exp(1j * mu * p.phi)
    if idx.m < 0:
        val = (-1.0) ** mu * val.conjugate()
    return val


def real_harmonic(idx: HarmonicIndex, p: SphericalPoint) -> float:
    """Real spherical harmonic S^m_ell(theta, phi), spin 0 only.

    Orthonormal for sin(theta) dtheta dphi; the cosine branch sits at
    m > 0 and the sine branch at m < 0.
    """
    if idx.spin != 0:
        raise ValueError("real_harmonic is defined for spin 0 indices")
    mu = abs(idx.m)
    leg = _legendre_theta(idx.ell, mu, p.theta)
    if idx.m == 0:
        return leg
    if idx.m > 0:
        return math.sqrt(2.0) * leg * math.cos(mu * p.phi)
    return -math.sqrt(2.0) * (-1.0) ** mu * leg * math.sin(mu * p.phi)


# ---------------------------------------------------------------------------
# Wigner d entries and spin-weighted harmonics


@lru_cache(maxsize=None)
def _wigner_prefactor(s_: int, mu: int, nu: int) -> float:
    num = math.factorial(s_) * math.factorial(s_ + mu + nu)
    den = math.factorial(s_ + mu) * math.factorial(s_ + nu)
    return math.sqrt(float(Fraction(num, den)))


def wigner_d(ell: int, m: int, n: int, theta) -> np.ndarray:
    """Wigner small-d entry d^ell_{m,n}(theta).

    Convention with d^1_{1,0} = -sin(theta)/sqrt(2) and
    d^1_{0,0} = cos(theta). Evaluated through Jacobi polynomials, which
    is stable for the orders used here. `theta` may be an array.
    """
    theta = np.asarray(theta, dtype=float)
    if abs(m) > ell or abs(n) > ell:
        return np.zeros_like(theta)
    mu = abs(m - n)
    nu = abs(m + n)
    s_ = ell - (mu + nu) // 2
    xi = 1.0 if n >= m else (-1.0) ** ((m - n) % 2)
    pref = _wigner_prefactor(s_, mu, nu)
    half = theta / 2.0
    jac = eval_jacobi(s_, mu, nu, np.cos(theta))
    return xi * pref * np.sin(half) ** mu * np.cos(half) ** nu * jac


def spin_harmonic(idx: HarmonicIndex, p: SphericalPoint) -> complex:
    """Spin-weighted spherical harmonic sY_{ell,m}(theta, phi).

    Zero when |spin| > ell. At spin 0 this agrees with
    complex_harmonic through an independent (Jacobi) evaluation route.
    """
    if abs(idx.spin) > idx.ell:
        return 0.0 + 0.0j
    d = float(wigner_d(idx.ell, idx.m, -idx.spin, p.theta))
    amp = (-1.0) ** idx.spin * math.sqrt((2 * idx.ell + 1) / FOUR_PI) * d
    return amp * cmath.exp(1j * idx.m * p.phi)


def wigner_D_m0(ell: int, m: int, p: SphericalPoint) -> complex:
    """Rotation-matrix entry D^ell_{m,0}(phi, theta, 0).

    Equals sqrt(4 pi / (2 ell + 1)) conj(Y_{ell,m}(theta, phi)); the
    column is independent of the third Euler angle.
    """
    if abs(m) > ell:
        raise ValueError("|m| must be <= ell")
    d = float(wigner_d(ell, m, 0, p.theta))
    return d * cmath.exp(-1j * m * p.phi)


class EthFactor(NamedTuple):
    value: float
    in_band: bool


def eth_on_basis(s: int, ell: int, direction: str) -> EthFactor:
    """Action of the spin raising / lowering operator on sY_{ell,m}.

    "raise" maps spin s to s + 1 with factor +sqrt((ell - s)(ell + s + 1));
    "lower" maps spin s to s - 1 with factor -sqrt((ell + s)(ell - s + 1)).
    Outside the band |spin| <= ell the result is a defined zero with
    in_band=False.
    """
    if direction == "raise":
        target = s + 1
        inside = abs(s) <= ell and abs(target) <= ell
        if not inside:
            return EthFactor(0.0, False)
        return EthFactor(math.sqrt((ell - s) * (ell + s + 1.0)), True)
    if direction == "lower":
        target = s - 1
        inside = abs(s) <= ell and abs(target) <= ell
        if not inside:
            return EthFactor(0.0, False)
        return EthFactor(-math.sqrt((ell + s) * (ell - s + 1.0)), True)
    raise ValueError("direction must be 'raise' or 'lower', got %r" % (direction,))


# ---------------------------------------------------------------------------
# plane-wave partial sums


def legendre_poly_table(ell_max: int, x) -> np.ndarray:
    """Legendre polynomials P_ell(x) for ell <= ell_max, rows by ell."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((ell_max + 1, x.shape[0]))
    out[0] = 1.0
    if ell_max >= 1:
        out[1] = x
    for ell in range(1, ell_max):
        out[ell + 1] = ((2 * ell + 1) * x * out[ell] - ell * out[ell - 1]) / (ell + 1)
    return out


def rayleigh_partial_sum(k, r, ell_max: int) -> complex:
    """Truncated plane-wave expansion of exp(i k . r) in R^3.

    Sums shells ell <= ell_max of
    exp(i k . r) = sum_ell (2 ell + 1) i^ell j_ell(|k||r|) P_ell(cos angle),
    the closed shell form of the harmonic expansion. Converges rapidly
    once ell_max exceeds |k||r|.
    """
    k = np.asarray(k, dtype=float)
    r = np.asarray(r, dtype=float)
    kn = float(np.linalg.norm(k))
    rn = float(np.linalg.norm(r))
    x = kn * rn
    if x == 0.0:
        return 1.0 + 0.0j
    cosg = float(np.clip(np.dot(k, r) / x, -1.0, 1.0))
    jl = spherical_bessel_all(ell_max, np.array([x]))[:, 0]
    pl = legendre_poly_table(ell_max, np.array([cosg]))[:, 0]
    total = 0.0 + 0.0j
    for ell in range(ell_max + 1):
        total += (2 * ell + 1) * (1j**ell) * jl[ell] * pl[ell]
    return total


# ---------------------------------------------------------------------------
# tabulated harmonics on point sets


def harmonic_row_index(ell: int, m: int) -> int:
    """Row of (ell, m) in tables ordered ell-major, m ascending."""
    return ell * ell + ell + m


def real_harmonic_table(ell_max: int, theta, phi) -> np.ndarray:
    """S^m_ell at the given angles, shape ((ell_max + 1)^2, npoints).

    Rows are ordered by harmonic_row_index. Vectorized over points via
    the per-order Legendre recurrence.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if theta.shape != phi.shape:
        raise ValueError("theta and phi must have matching shapes")
    x = np.cos(theta)
    out = np.empty(((ell_max + 1) ** 2, theta.shape[0]))
    sqrt2 = math.sqrt(2.0)
    for m in range(ell_max + 1):
        block = _legendre_block(ell_max, m, x)
        if m == 0:
            for ell in range(ell_max + 1):
                out[harmonic_row_index(ell, 0)] = block[ell]
            continue
        c = sqrt2 * np.cos(m * phi)
        s = -sqrt2 * (-1.0) ** m * np.sin(m * phi)
        for ell in range(m, ell_max + 1):
            out[harmonic_row_index(ell, m)] = block[ell - m] * c
            out[harmonic_row_index(ell, -m)] = block[ell - m] * s
    return out


def spin_harmonic_table(spin: int, ell_max: int, theta, phi) -> np.ndarray:
    """sY_{ell,m} at the given angles, shape ((ell_max + 1)^2, npoints).

    Complex valued; rows with |spin| > ell are zero. Row order matches
    real_harmonic_table.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if theta.shape != phi.shape:
        raise ValueError("theta and phi must have matching shapes")
    out = np.zeros(((ell_max + 1) ** 2, theta.shape[0]), dtype=complex)
    for ell in range(abs(spin), ell_max + 1):
        amp = (-1.0) ** spin * math.sqrt((2 * ell + 1) / FOUR_PI)
        for m in range(-ell, ell + 1):
            d = wigner_d(ell, m, -spin, theta)
            out[harmonic_row_index(ell, m)] = amp * d * np.exp(1j * m * phi)
    return out
