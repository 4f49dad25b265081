"""Exception hierarchy shared by all cflab modules."""


class CfLabError(Exception):
    """Base class for all cflab errors."""


class StreamExhausted(CfLabError):
    """A finite digit stream was asked for more digits than it holds."""

    def __init__(self, needed: int, available: int):
        super().__init__(f"digit stream exhausted: needed digit {needed}, have {available}")
        self.needed = needed
        self.available = available


class UndecidableAtCap(CfLabError):
    """An interval refinement hit its hard cap before deciding a predicate.

    Raised instead of silently guessing; maps to CLI exit code 3.
    """


class DigitTooLarge(CfLabError):
    """A digit exceeds the big-integer materialization cap.

    Streams whose digits grow beyond this still expose logarithm enclosures,
    so log-domain consumers keep working.
    """


class ConfigError(CfLabError):
    """Invalid experiment configuration; maps to CLI exit code 2."""
