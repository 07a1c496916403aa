"""Exception types shared across the toolkit."""


class SeedkitError(Exception):
    """Base class for all toolkit errors."""


class CorpusParseError(SeedkitError):
    """A corpus file row failed to parse; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SeedkitError):
    """An input violated a structural invariant (duplicate id, bad config, ...)."""


class SizeError(SeedkitError):
    """A requested size is degenerate or out of range."""


class UndefinedRichnessError(SeedkitError):
    """Richness requested on a collection with no labeled documents."""


class EmptyVocabularyError(SeedkitError):
    """Vocabulary construction found zero distinct tokens."""


class InfeasibleAllocationError(SeedkitError):
    """Proportional allocation cannot honor the requested total."""


class InfeasibleSeedError(SeedkitError):
    """A selection strategy cannot produce the requested number of documents."""


class DegenerateSeedError(SeedkitError):
    """Training set contains a single class; names the missing class."""

    def __init__(self, missing_class: str):
        self.missing_class = missing_class
        super().__init__(f"training examples contain no {missing_class} documents")


class NumericalError(SeedkitError):
    """Non-finite values encountered during optimization."""


class UndefinedRecallError(SeedkitError):
    """PR analysis requested on a scored set with zero positives."""
