"""Shared exception types."""


class NumericalCheckError(RuntimeError):
    """An internal numerical consistency check failed.

    Raised when a computed quantity violates a structural guarantee
    (imaginary residue on a provably real result, a covariance that is
    not positive semidefinite beyond tolerance, a failed self-check).
    The command line maps this to exit status 2.
    """
