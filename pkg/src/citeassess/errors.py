"""Exception types shared across the pipeline stages."""


class CiteAssessError(Exception):
    """Base class; ``code`` is the machine-readable tag printed by the CLI."""

    code = "error"


class UsageError(CiteAssessError):
    code = "usage"


class StoreNotOpenError(UsageError):
    code = "store_not_open"


class NotFoundError(CiteAssessError, KeyError):
    code = "not_found"

    def __str__(self) -> str:
        # KeyError quotes its argument; keep messages readable
        return Exception.__str__(self)


class ArgumentError(CiteAssessError, ValueError):
    code = "bad_argument"


class MissingInputError(CiteAssessError):
    code = "missing_input"


class ConfigError(UsageError):
    code = "config"
