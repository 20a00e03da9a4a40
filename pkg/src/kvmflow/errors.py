"""Exception hierarchy for kvmflow."""


class KvmflowError(Exception):
    """Base class for all kvmflow errors."""


class DimensionMismatch(KvmflowError):
    """Matrix or vector dimensions are incompatible."""


class StructureViolation(KvmflowError):
    """A matrix left the zero-diagonal tridiagonal manifold beyond tolerance."""


class NonConvergence(KvmflowError):
    """Bisection failed to converge; indicates an internal bracketing bug."""


class PairingViolation(KvmflowError):
    """Spectrum of a zero-diagonal matrix is not (+/-)-symmetric; eigensolver fault."""


class DegenerateSpectrum(KvmflowError):
    """Eigenvalues are not pairwise distinct within the gap tolerance."""


class DegenerateMagnitudes(KvmflowError):
    """Eigenvalue magnitudes are not strictly separated (or vanish for even n)."""


class ZeroEntry(KvmflowError):
    """Off-diagonal entry is zero where a sign is required."""


class EquilibriumInput(KvmflowError):
    """Input is a flow equilibrium; the limit formula does not apply."""


class ValidationFailure(KvmflowError):
    """Initial condition fails flow validation (zero entry / degenerate spectrum)."""


class StepUnderflow(KvmflowError):
    """Adaptive step fell below dt_min; tolerances are misconfigured."""


class ParseError(KvmflowError):
    """Input document is not valid JSON."""


class ValidationError(KvmflowError):
    """Input document violates the schema (dimensions, symmetry, types)."""
