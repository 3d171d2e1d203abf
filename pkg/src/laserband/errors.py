"""Exception types shared across the package."""


class LaserbandError(Exception):
    """Base class for all package errors."""


class InvalidParams(LaserbandError):
    """Model parameters violate their domain (p <= 0, dim < 3, q outside [-1, 0], ...)."""


class InconsistentInputs(LaserbandError):
    """Operator set and parameter set describe different models."""


class GammaTooLarge(LaserbandError):
    """Discretisation step gamma = N*dt too coarse for a positive Kraus set."""


class DimensionTooLarge(LaserbandError):
    """Dense D^2 x D^2 oracle requested above its size guard."""


class DegenerateKernel(LaserbandError):
    """Band-0 generator has (numerically) more than one stationary mode."""


class SingularBandOne(LaserbandError):
    """Band-1 resolvent solve failed; the model is degenerate."""


class ExpmTolFailure(LaserbandError):
    """Matrix-exponential action could not meet its error contract."""


class HorizonTooShort(LaserbandError):
    """Counting window too short for the requested Mandel-Q quadrature."""


class OutOfDomain(LaserbandError):
    """Closed-form coherence requested outside its p > 3 domain of validity."""


class OptimizerStall(LaserbandError):
    """Seeded deviation search failed to reproduce its own optimum."""


class InsufficientSamples(LaserbandError):
    """Power-law fit needs at least four positive samples."""


class AsymptoticWindowViolated(UserWarning):
    """Retrofiltering window is outside the ell*tau << 1 << N*tau regime."""
