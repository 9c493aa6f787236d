"""Exception hierarchy for the pipeline."""


class WikiAlumniError(Exception):
    """Base class for all pipeline errors."""


class DumpFormatError(WikiAlumniError):
    """Input is not a dump format we can read."""


class DumpParseError(WikiAlumniError):
    """Malformed XML inside a dump."""


class DumpTruncatedError(WikiAlumniError):
    """Dump stream ended mid-document."""


class RegistryError(WikiAlumniError):
    """University registry failed to load."""


class DictionaryError(WikiAlumniError):
    """Marker dictionary file is invalid."""


class CorrelationError(WikiAlumniError):
    """Correlation could not be computed (e.g. intersection too small)."""


class ExternalRankingError(WikiAlumniError):
    """External ranking file could not be aligned with the registry."""


class FetchError(WikiAlumniError):
    """A pageview or interlanguage lookup failed after retries."""


class ConfigError(WikiAlumniError):
    """Pipeline configuration is invalid."""
