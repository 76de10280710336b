"""Exception and warning types raised across the package."""


class WsclusterError(Exception):
    """Base class for all package-specific errors."""


# --- input validation -------------------------------------------------------

class EmptyBatch(WsclusterError):
    """A transaction batch contains no amounts."""


class NonFiniteAmount(WsclusterError):
    """An amount is NaN or infinite."""


class NegativeAmount(WsclusterError):
    """An amount is below zero."""


class SuppliedM0TooSmall(WsclusterError):
    """A user-supplied standardization constant is below the data maximum."""


class CsvFormatError(WsclusterError):
    """A transaction or label CSV could not be parsed; message carries the row."""


# --- similarity graph -------------------------------------------------------

class NoVariation(WsclusterError):
    """All pairwise distances are zero, so no default scale exists."""


class K0OutOfRange(WsclusterError):
    """Neighbor threshold k0 outside [1, n-1]."""


class KOutOfRange(WsclusterError):
    """Requested neighbor or eigenpair count outside the valid range."""


class UnknownEntity(WsclusterError):
    """An entity id is not present in the dataset or index."""


class CoverTreeInvariantError(WsclusterError):
    """A cover-tree audit found a violated invariant."""


# --- spectral engine --------------------------------------------------------

class ZeroDegree(WsclusterError):
    """A similarity row sums to zero; the graph has an isolated entity."""


class NoConvergence(WsclusterError):
    """The eigensolver failed to reach the residual tolerance."""


class RankDeficientSample(WsclusterError):
    """The subsample Gram matrix has fewer than K usable eigenvalues."""


class SizeOutOfRange(WsclusterError):
    """Subsample size outside [1, n]."""


class DegenerateProportion(WsclusterError):
    """Minimum cluster size must be strictly below the population size."""


class TooFewEigenvalues(WsclusterError):
    """Eigengap selection needs at least two eigenvalues."""


# --- clustering -------------------------------------------------------------

class KTooLarge(WsclusterError):
    """More clusters requested than points available."""


class SingleCluster(WsclusterError):
    """Silhouette needs at least two occupied clusters."""


class LengthMismatch(WsclusterError):
    """Two partitions being compared have different lengths."""


# --- warnings ---------------------------------------------------------------

class SmallSampleWarning(UserWarning):
    """Some entity has fewer observations than ln(n); distances are noisy."""


class KMeansDegenerateWarning(UserWarning):
    """K-means returned fewer occupied clusters than requested."""


class NotStandardizedWarning(UserWarning):
    """A pipeline ran on a dataset whose amounts were never rescaled to [0, 1]."""
