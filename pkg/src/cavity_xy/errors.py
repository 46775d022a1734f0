"""Exception hierarchy.

``PhysicsError`` subclasses signal that the requested parameters fall outside
the regime where the computation is meaningful (the CLI maps them to exit code
1). ``ConfigError`` signals malformed input (exit code 2).
"""


class CavityXYError(Exception):
    """Base class for all package errors."""


class PhysicsError(CavityXYError):
    """Parameters are well formed but physically inadmissible."""


class BandResonance(PhysicsError):
    """A laser's photon detuning lies inside (or on the edge of) the photon band."""


class DegenerateLasers(PhysicsError):
    """Two lasers share the same frequency."""


class ValidityFailure(PhysicsError):
    """The adiabatic-elimination inequalities are not satisfied with enough margin."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PairingViolation(PhysicsError):
    """Lasers passed as mirrored pairs do not satisfy the pairing constraints."""


class ZeroDetuning(PhysicsError):
    """A laser is resonant with the b <-> e transition."""


class NoFeasibleStart(PhysicsError):
    """The optimizer bounds leave no admissible starting point."""


class StepTooLarge(PhysicsError):
    """The integrator step does not resolve the fastest phase."""


class UnknownPreset(CavityXYError):
    pass


class EmptyRange(CavityXYError):
    pass


class EmptyWindow(CavityXYError):
    pass


class GridMismatch(CavityXYError):
    pass


class ConfigError(CavityXYError):
    """Configuration failed schema or invariant validation."""

    def __init__(self, message, path=None):
        self.path = path
        where = f" at '{path}'" if path else ""
        super().__init__(f"{message}{where}")
