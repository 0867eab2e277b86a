"""Exception and warning types shared across the package."""


class HdnormError(Exception):
    """Base class for all hdnorm errors."""


class TooFewSamples(HdnormError):
    """Raised when an operation needs more observations than provided."""


class DegenerateData(HdnormError):
    """Raised when the sample carries no usable variation."""


class NonPositiveDispersion(HdnormError):
    """Raised when the dispersion-index estimate is not strictly positive.

    The normalized test statistics divide by the square root of the estimate,
    so a non-positive value means the test cannot proceed on this sample.
    """


class OracleSizeExceeded(HdnormError):
    """Raised when the O(n^4) brute-force estimator is asked for too large an n."""


class InvalidQuantileOrder(HdnormError):
    """Raised for quantile specifications outside their admissible range."""


class InvalidScenarioParams(HdnormError):
    """Raised when a generative scenario is given inconsistent parameters."""


class NotPSD(HdnormError):
    """Raised when a constructed covariance matrix fails the PSD check."""


class ZeroMatrix(HdnormError):
    """Raised when a matrix argument is identically zero where it must not be."""


class DegenerateDataWarning(UserWarning):
    """Emitted when every observation is identical; downstream estimators will fail."""
