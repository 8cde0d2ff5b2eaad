"""Exception types shared across the package.

Everything raised deliberately by gravnet derives from :class:`GravnetError`;
the CLI maps that family to exit code 2 (user/input error) and anything else
to exit code 1 (internal error).
"""


class GravnetError(Exception):
    """Base class for all errors raised by this package."""


# --- ingestion / configuration ---------------------------------------------

class MissingColumn(GravnetError):
    pass


class DuplicateDyad(GravnetError):
    pass


class NegativeValue(GravnetError):
    pass


class AsymmetricSymmetricCovariate(GravnetError):
    pass


class EmptyGraph(GravnetError):
    pass


class ConfigInvalid(GravnetError):
    pass


class SpecError(GravnetError):
    """Malformed model-spec file or inconsistent model specification."""


# --- network measures -------------------------------------------------------

class AlphaNotOne(GravnetError):
    pass


class NoDefinedPairs(GravnetError):
    pass


class TooLarge(GravnetError):
    """Brute-force oracle asked to handle an instance beyond its size cap."""


# --- estimation --------------------------------------------------------------

class EstimationError(GravnetError):
    pass


class RankDeficient(EstimationError):
    pass


class EmptySample(EstimationError):
    pass


class Separation(EstimationError):
    pass


class NotConverged(EstimationError):
    pass


class NoZeros(EstimationError):
    """Zero-inflated fit requested but the response has no zeros; use ppml."""


class UnderIdentified(EstimationError):
    pass


class ZeroVariance(EstimationError):
    pass
