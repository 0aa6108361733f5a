"""Exception hierarchy shared across the package."""


class TTAError(Exception):
    """Base class for every error raised by ttagate."""


class InvalidDistribution(TTAError, ValueError):
    pass


class DegenerateScores(TTAError, ValueError):
    pass


class MixedLabelSpaces(TTAError, ValueError):
    pass


class Unmappable(TTAError, LookupError):
    """A generative output matched no verbalizer token."""

    def __init__(self, raw: str):
        super().__init__(f"no verbalizer entry for output {raw!r}")
        self.raw = raw


class AllUnmappable(TTAError, ValueError):
    pass


class NoExemplars(TTAError, ValueError):
    pass


class EmptyGeneration(TTAError, ValueError):
    pass


class InsufficientClassData(TTAError, ValueError):
    pass


class EmptyCalibrationSet(TTAError, ValueError):
    pass


class ClientUnavailable(TTAError, RuntimeError):
    pass


class SchemaError(TTAError, ValueError):
    pass


class MixedConditions(TTAError, ValueError):
    pass


class AlignmentError(TTAError, ValueError):
    pass


class ParseError(TTAError, ValueError):
    pass


class UnknownLabel(TTAError, ValueError):
    pass


class DuplicateId(TTAError, ValueError):
    pass


class EmptyInput(TTAError, ValueError):
    pass


class CacheConflict(TTAError, RuntimeError):
    """A put would overwrite an existing entry with different content."""


class CacheMiss(TTAError, LookupError):
    """Raised in replay mode when an augmentation is not cached."""


class SchemaVersionMismatch(TTAError, ValueError):
    pass


class ConfigError(TTAError, ValueError):
    pass
