"""Exception hierarchy shared across the package."""


class GranShearError(Exception):
    """Base class for all package errors."""


class KernelError(GranShearError):
    """Invalid angular kernel (negative or non-finite values sampled)."""


class DegenerateKernelError(KernelError):
    """Kernel violates the non-degeneracy requirement b0 > b2 > 0, b0 > b1."""


class QuadratureAccuracyError(GranShearError):
    """Two-resolution quadrature disagreement above the requested tolerance."""


class NoProfileError(GranShearError):
    """No positive-semidefinite stationary eigenvector; outside the perturbative regime."""


class ContractionRegimeError(GranShearError):
    """Theoretical Picard contraction factor is >= 1; fixed point not guaranteed."""


class GridInstabilityError(GranShearError):
    """Characteristic-function bound |phi| <= 1 violated during time stepping."""


class GridRangeError(GranShearError):
    """Interpolation requested above r_max with the 'error' out-of-range policy."""


class SimulationError(GranShearError):
    """Runtime failure of a particle or moment evolution (NaN, overflow)."""


class ConfigError(GranShearError):
    """Invalid run configuration; maps to CLI exit code 2."""
