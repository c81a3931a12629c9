"""Exception hierarchy shared by every module.

Each class name doubles as the identifier the CLI prints on stderr, so
keep names stable.
"""


class LmarError(Exception):
    """Base class for all library errors."""


class DomainError(LmarError, ValueError):
    """A parameter lies outside its admissible domain."""


class UnsupportedRegime(LmarError):
    """The requested quantity is undefined for H >= 3/4."""


class TruncationInsufficient(LmarError):
    """A series cutoff is too small for the requested accuracy."""


class ModelNotMonotone(LmarError):
    """f is not strictly increasing on the inversion grid."""


class BelowRange(LmarError):
    """Sample second moment is at or below inf f; estimator undefined."""


class AboveRange(LmarError):
    """Sample second moment is at or above sup f; estimator undefined."""


class SamplerError(LmarError):
    """Base class for failures of the Gaussian samplers."""


class EmbeddingNotPSD(SamplerError):
    """Circulant embedding has a negative eigenvalue beyond tolerance."""


class CovarianceNotPSD(SamplerError):
    """Dense Toeplitz factorization failed after jitter escalation."""


class CensoredExperiment(LmarError):
    """Every replicate was censored, leaving nothing to aggregate."""


class ConfigError(LmarError):
    """An experiment configuration violates its schema.

    Parameters
    ----------
    fields : list of str
        Names of the offending fields, each with a short reason.
    """

    def __init__(self, fields):
        self.fields = list(fields)
        super().__init__("invalid config: " + "; ".join(self.fields))
