"""Exception types raised by the riga package."""


class RigaError(Exception):
    """Base class for all errors raised by riga."""


class SingularAtMinusOne(RigaError, ValueError):
    """A unitary has an eigenvalue at -1, outside the Cayley chart."""


class RankDeficient(RigaError, ValueError):
    """A matrix has a (numerically) vanishing singular value."""


class CayleyBlowup(RigaError, FloatingPointError):
    """A Cayley coordinate left the well-conditioned region during integration."""


class SeedOutOfBounds(RigaError, ValueError):
    """A reference input lies outside the admissible amplitude interval."""


class NoReachableGoal(RigaError):
    """No goal of the precomputed path lies within the switching radius."""


class NonConvergence(RigaError):
    """The iteration stopped before reaching the target infidelity."""


class ConfigError(RigaError, ValueError):
    """An input configuration is malformed or inconsistent."""
