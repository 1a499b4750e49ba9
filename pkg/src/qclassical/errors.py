"""Exception types shared across the package.

All errors derive from ValueError so that callers who do not care about the
specific failure mode can still catch them uniformly.
"""


class DimensionError(ValueError):
    """Operands have incompatible matrix or subsystem dimensions."""


class NotUnitaryError(ValueError):
    """A matrix expected to be unitary fails the unitarity tolerance."""


class NotInvertibleError(ValueError):
    """A superoperator is singular or too ill-conditioned to invert.

    This is also the signal used by the invertibility checker: a dynamical
    map family is declared non-invertible exactly when inverting one of its
    start-to-time maps raises this error.
    """


class DegenerateObservableError(ValueError):
    """An operation that requires rank-1 projectors got a degenerate observable."""


class SequenceError(ValueError):
    """An intervention sequence does not match the process it is applied to."""


class NotDerivableError(ValueError):
    """A dynamical-map family cannot be derived from the given dilation."""


class SingularTimeError(ValueError):
    """The dephased-trajectory closed form is undefined at this time.

    The formula contains a sign term that is undefined when the readout time
    equals twice the dephasing time; both one-sided limits are finite and can
    be obtained from ``dephased_trajectory_limits``.
    """
