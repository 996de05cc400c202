"""Homogeneous and isotropic tensor random fields on R^3 and
spin-weighted random fields on the sphere.

Subpackages
-----------
special_fn
    Spherical Bessel functions, spherical harmonics (real, complex,
    spin-weighted), Wigner rotation entries, spin ladder factors,
    plane-wave partial sums, sphere quadrature.
coupling
    Clebsch-Gordan coefficients, real-basis coupling tables, real Gaunt
    integrals.
correlation
    Spectral measures and two-point correlation kernels for scalar,
    vector and symmetric rank-2 tensor fields.
simulate
    Spectral Monte-Carlo simulation of the above fields and empirical
    correlation estimation.
sphere
    Angular power spectra, Stokes parameter maps, harmonic analysis and
    synthesis on the sphere, parity and real-basis transforms.
cli
    Command line entry points.
"""

__version__ = "0.1.0"

from . import special_fn, coupling, correlation, simulate, sphere  # noqa: F401,E402
