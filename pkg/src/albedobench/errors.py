"""Exception types shared across the toolkit."""


class AlbedoBenchError(Exception):
    """Base class for all toolkit errors."""


class InputRangeError(AlbedoBenchError, ValueError):
    """A value fell outside its documented domain (e.g. encoded sRGB > 1)."""


class ParameterError(AlbedoBenchError, ValueError):
    """A function was called with an invalid or inconsistent parameter."""


class AnnotationError(AlbedoBenchError, ValueError):
    """An annotation (polygon, judgement, region) is malformed."""


class ParseError(AlbedoBenchError, ValueError):
    """A manifest or index file is not well-formed structured text."""


class ValidationError(AlbedoBenchError):
    """A manifest failed validation.

    Collects every problem found rather than stopping at the first one.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        msg = "%d problem(s):\n" % len(self.problems)
        msg += "\n".join("  - " + p for p in self.problems)
        super().__init__(msg)


class PredictionIOError(AlbedoBenchError):
    """A prediction index or prediction image could not be read."""


class MeasurementError(AlbedoBenchError):
    """Albedo measurement failed (e.g. reference patch reads as black)."""


class DegenerateInputError(AlbedoBenchError):
    """Input is structurally valid but degenerate for the requested metric."""


class RankingError(AlbedoBenchError):
    """Cross-algorithm comparison is impossible or ill-defined."""


class BackendUnavailable(AlbedoBenchError):
    """The external perceptual backend cannot be reached or misbehaves."""
