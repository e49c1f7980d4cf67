"""Exception hierarchy shared across the pipeline.

Two broad families: configuration/validation problems (exit code 2 at the
CLI) and runtime failures (exit code 1). Everything derives from
MaftlabError so callers can catch the whole family at once.
"""


class MaftlabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MaftlabError):
    """Invalid configuration, missing prerequisite, or mismatched shapes."""


class IngestError(MaftlabError):
    """Audio file could not be decoded."""


class EmptyAudioError(MaftlabError):
    """Decoded audio contains zero samples."""


class EmptyFeatureError(MaftlabError):
    """Audio too short to produce a single feature frame."""


class DegenerateDistributionError(MaftlabError):
    """All included language durations are zero; no distribution exists."""


class MissingLanguageError(MaftlabError):
    """A language in the sampling plan has no surviving segments."""


class InsufficientDataError(MaftlabError):
    """Fewer data rows than requested clusters."""


class EmptyMaskError(MaftlabError):
    """Masked-prediction loss requested with an empty mask."""


class NumericalError(MaftlabError):
    """Non-finite values encountered during training or inference."""


class DataError(MaftlabError):
    """Labeled data violates the task contract (unknown label, bad text)."""


class VocabOverflowError(DataError):
    """More distinct characters than the vocabulary budget allows."""

    def __init__(self, casualties, size):
        self.casualties = list(casualties)
        self.size = size
        super().__init__(
            f"{len(self.casualties)} characters do not fit in a vocabulary "
            f"of size {size}: {' '.join(repr(c) for c in self.casualties)}"
        )


class EmptyReferenceError(MaftlabError):
    """Error rate against an empty reference is undefined."""
