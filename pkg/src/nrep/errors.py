"""Exception types shared across the package."""


class NrepError(Exception):
    """Base class for package-specific errors."""


class SectorSizeError(NrepError):
    """A requested particle-number sector exceeds the configured size cap."""


class SimulationCapError(NrepError):
    """A simulation request exceeds the qubit-count cap."""


class DimensionMismatchError(NrepError):
    """Operands refer to incompatible mode counts or matrix dimensions."""


class NonHermitianError(NrepError):
    """An operator required to be Hermitian is not, beyond tolerance."""


class WeightViolationError(NrepError):
    """A Pauli term acts on more than two qubits."""


class ParseError(NrepError):
    """Malformed input text; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PointInsideError(NrepError):
    """Separation requested for a point that is not certifiably outside."""


class RankDeficiencyError(NrepError):
    """A linear system that should be full rank is singular beyond tolerance."""
