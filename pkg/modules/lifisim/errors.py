"""
Exception hierarchy for lifisim.

Every failure the engines can raise derives from LifiSimError, itself a
ValueError, so callers can catch the whole family or one precise case.
The CLI maps LifiSimError to exit code 2.
"""


class LifiSimError(ValueError):
    """Base class for all simulator errors."""


class DegenerateGeometryError(LifiSimError):
    """Transmitter and receiver coincide; no direction is defined."""


class InvalidTiltError(LifiSimError):
    """Panel tilt outside [0, 90] degrees."""


class InvalidParameterError(LifiSimError):
    """A physical parameter is outside its legal range."""


class CalibrationError(LifiSimError):
    """Noise calibration is impossible at the requested anchor (zero gain)."""


class SchemeConfigError(LifiSimError):
    """Modulation scheme configuration or name is invalid."""


class FramingError(LifiSimError):
    """Waveform length is not a whole number of symbols."""


class InvalidRunError(LifiSimError):
    """Monte Carlo run parameters are invalid."""


class InfeasibleAssignmentError(LifiSimError):
    """Dedicated assignment with fewer panels than receivers."""


class InvalidScenarioError(LifiSimError):
    """Scenario violates a structural invariant (placement, strategy)."""


class ScenarioFileError(LifiSimError):
    """Scenario document failed to parse or validate.

    diagnostics holds (location, message) pairs: a dotted field path, or
    "line L column C" for JSON syntax errors.
    """

    def __init__(self, message: str, diagnostics: list[tuple[str, str]] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
