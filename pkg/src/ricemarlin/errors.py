"""Exception types shared across the codec."""


class RiceMarlinError(Exception):
    """Base class for all codec errors."""


class BuildError(RiceMarlinError):
    """Dictionary or dictionary-set construction failed."""


class EntropyTargetError(RiceMarlinError, ValueError):
    """A requested entropy target is outside the family's achievable range."""


class CorruptBlockError(RiceMarlinError):
    """A compressed block or container failed validation while parsing."""


class FormatError(RiceMarlinError):
    """A persisted file (dictionary set, container) is malformed or incompatible."""
